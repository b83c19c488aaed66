//! Extended-precision complex matrices.
//!
//! Eigenvalues at a high-order exceptional point move like the N-th root of
//! any perturbation, so double precision resolves an N-fold confluence only to
//! about `eps^(1/N)`. Matrices built and diagonalized here carry a
//! configurable number of mantissa bits instead.

use dashu_float::round::mode::HalfEven;
use dashu_float::ops::Abs;
use dashu_float::FBig;
use num_complex::Complex64;

use super::hqr::real_eigenvalues;
use super::scalar::{ComplexScalar, RealScalar};
use super::schur::{hessenberg_schur, SchurOptions};
use super::{CMatrix, MatrixError};

pub type MpFloat = FBig<HalfEven, 2>;

/// Builds a real extended-precision value from an exactly representable double.
pub fn mp_real(x: f64, bits: usize) -> MpFloat {
    MpFloat::try_from(x)
        .expect("finite input")
        .with_precision(bits)
        .value()
}

/// Square root of a non-negative real extended-precision value.
pub fn mp_sqrt(x: &MpFloat) -> MpFloat {
    if *x <= MpFloat::ZERO {
        x.clone() * MpFloat::ZERO
    } else {
        x.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpComplex {
    pub re: MpFloat,
    pub im: MpFloat,
    bits: usize,
}

impl MpComplex {
    pub fn new(re: MpFloat, im: MpFloat, bits: usize) -> Self {
        MpComplex {
            re: re.with_precision(bits).value(),
            im: im.with_precision(bits).value(),
            bits,
        }
    }

    pub fn from_c64(z: Complex64, bits: usize) -> Self {
        MpComplex {
            re: mp_real(z.re, bits),
            im: mp_real(z.im, bits),
            bits,
        }
    }

    pub fn real(x: MpFloat, bits: usize) -> Self {
        MpComplex::new(x, mp_real(0.0, bits), bits)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn norm_sqr(&self) -> MpFloat {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn neg(&self) -> Self {
        MpComplex {
            re: -self.re.clone(),
            im: -self.im.clone(),
            bits: self.bits,
        }
    }

    pub fn scale(&self, s: &MpFloat) -> Self {
        MpComplex {
            re: &self.re * s,
            im: &self.im * s,
            bits: self.bits,
        }
    }
}

impl ComplexScalar for MpComplex {
    fn zero_like(&self) -> Self {
        MpComplex::from_c64(Complex64::new(0.0, 0.0), self.bits)
    }

    fn from_c64_like(&self, z: Complex64) -> Self {
        MpComplex::from_c64(z, self.bits)
    }

    fn add(&self, rhs: &Self) -> Self {
        MpComplex {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
            bits: self.bits,
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        MpComplex {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
            bits: self.bits,
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        MpComplex {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
            bits: self.bits,
        }
    }

    fn div(&self, rhs: &Self) -> Self {
        let den = rhs.norm_sqr();
        MpComplex {
            re: (&self.re * &rhs.re + &self.im * &rhs.im) / &den,
            im: (&self.im * &rhs.re - &self.re * &rhs.im) / &den,
            bits: self.bits,
        }
    }

    fn conj(&self) -> Self {
        MpComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
            bits: self.bits,
        }
    }

    fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let half = mp_real(0.5, self.bits);
        let r = mp_sqrt(&self.norm_sqr());
        if self.re >= MpFloat::ZERO {
            let a = mp_sqrt(&((&r + &self.re) * &half));
            let b = &self.im / (&a + &a);
            MpComplex {
                re: a,
                im: b,
                bits: self.bits,
            }
        } else {
            let mut b = mp_sqrt(&((&r - &self.re) * &half));
            let a = &self.im.clone().abs() / (&b + &b);
            if self.im < MpFloat::ZERO {
                b = -b;
            }
            MpComplex {
                re: a,
                im: b,
                bits: self.bits,
            }
        }
    }

    fn pair_norm(a: &Self, b: &Self) -> Self {
        MpComplex::real(mp_sqrt(&(a.norm_sqr() + b.norm_sqr())), a.bits)
    }

    fn is_zero(&self) -> bool {
        self.re == MpFloat::ZERO && self.im == MpFloat::ZERO
    }

    fn approx_abs(&self) -> f64 {
        let z = self.to_c64();
        z.norm()
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }

    fn epsilon(&self) -> f64 {
        2f64.powi(-(self.bits as i32 - 1))
    }
}

impl RealScalar for MpFloat {
    fn from_f64_like(&self, x: f64) -> Self {
        mp_real(x, self.precision())
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }

    fn neg(&self) -> Self {
        -self.clone()
    }

    fn abs(&self) -> Self {
        self.clone().abs()
    }

    fn sqrt(&self) -> Self {
        mp_sqrt(self)
    }

    fn is_zero(&self) -> bool {
        *self == MpFloat::ZERO
    }

    fn approx(&self) -> f64 {
        self.to_f64().value()
    }

    fn epsilon(&self) -> f64 {
        2f64.powi(-(self.precision() as i32 - 1))
    }
}

/// Square extended-precision complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct MpMatrix {
    n: usize,
    bits: usize,
    data: Vec<MpComplex>,
}

impl MpMatrix {
    pub fn zeros(n: usize, bits: usize) -> Self {
        let zero = MpComplex::from_c64(Complex64::new(0.0, 0.0), bits);
        MpMatrix {
            n,
            bits,
            data: vec![zero; n * n],
        }
    }

    /// Lifts a double matrix exactly into extended precision.
    pub fn from_cmatrix(m: &CMatrix, bits: usize) -> Result<Self, MatrixError> {
        let n = m.ensure_square()?;
        m.ensure_finite()?;
        Ok(MpMatrix {
            n,
            bits,
            data: m
                .as_slice()
                .iter()
                .map(|&z| MpComplex::from_c64(z, bits))
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> &MpComplex {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MpComplex) {
        self.data[i * self.n + j] = v;
    }

    /// Rounds every entry to double precision.
    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_c64())
    }

    pub fn into_rows(self) -> Vec<Vec<MpComplex>> {
        let n = self.n;
        let mut rows = Vec::with_capacity(n);
        let mut it = self.data.into_iter();
        for _ in 0..n {
            rows.push(it.by_ref().take(n).collect());
        }
        rows
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == MpFloat::ZERO)
    }

    /// Eigenvalues computed entirely at the matrix's working precision and
    /// rounded to double on output.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, MatrixError> {
        if self.is_real() {
            let rows = self.data.chunks(self.n).map(|r| r.iter().map(|z| z.re.clone()).collect()).collect();
            let pairs = real_eigenvalues(rows, 40 * self.n.max(5))?;
            return Ok(pairs
                .into_iter()
                .map(|(re, im)| Complex64::new(re.to_f64().value(), im.to_f64().value()))
                .collect());
        }
        let schur = hessenberg_schur(
            self.clone().into_rows(),
            SchurOptions {
                want_vectors: false,
                max_sweeps_per_eigenvalue: 80,
            },
        )?;
        Ok(schur.eigenvalues.iter().map(|z| z.to_c64()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_sqrt_branches() {
        let bits = 200;
        for z in [
            Complex64::new(4.0, 0.0),
            Complex64::new(-4.0, 0.0),
            Complex64::new(-3.0, -4.0),
            Complex64::new(0.0, 2.0),
        ] {
            let s = MpComplex::from_c64(z, bits).sqrt().to_c64();
            let want = z.sqrt();
            assert!((s - want).norm() < 1e-15, "{z}: {s} vs {want}");
        }
    }

    #[test]
    fn precision_exceeds_double() {
        let bits = 256;
        let two = MpComplex::from_c64(Complex64::new(2.0, 0.0), bits);
        let r = two.sqrt();
        let resid = r.mul(&r).sub(&two);
        assert!(resid.re.to_f64().value().abs() < 1e-70);
    }

    #[test]
    fn complex_matrix_uses_schur_path() {
        let mut m = MpMatrix::zeros(2, 200);
        m.set(0, 0, MpComplex::from_c64(Complex64::new(0.0, 1.0), 200));
        m.set(1, 1, MpComplex::from_c64(Complex64::new(2.0, 0.0), 200));
        m.set(0, 1, MpComplex::from_c64(Complex64::new(1.0, 0.0), 200));
        assert!(!m.is_real());
        let mut ev = m.eigenvalues().unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((ev[1] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shift_matrix_eigenvalues_are_exact_zero_cluster() {
        let mut m = MpMatrix::zeros(5, 300);
        let one = MpComplex::from_c64(Complex64::new(1.0, 0.0), 300);
        for i in 0..4 {
            m.set(i, i + 1, one.clone());
        }
        m.set(4, 0, MpComplex::from_c64(Complex64::new(1e-50, 0.0), 300));
        // eigenvalues are the fifth roots of 1e-50, modulus 1e-10
        for z in m.eigenvalues().unwrap() {
            assert!((z.norm() - 1e-10).abs() < 1e-22, "{z}");
        }
    }
}
