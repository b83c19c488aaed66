//! Complex Schur decomposition by Givens-based Hessenberg reduction followed
//! by single-shift QR with Wilkinson shifts.
//!
//! Written against [`ComplexScalar`] so the same iteration runs in double
//! and in extended precision.

use num_complex::Complex64;

use super::scalar::ComplexScalar;
use super::MatrixError;

#[derive(Clone, Copy, Debug)]
pub struct SchurOptions {
    pub want_vectors: bool,
    pub max_sweeps_per_eigenvalue: usize,
}

impl Default for SchurOptions {
    fn default() -> Self {
        SchurOptions {
            want_vectors: true,
            max_sweeps_per_eigenvalue: 60,
        }
    }
}

/// `A = Z T Z†` with `T` upper triangular.
///
/// Without vectors only the diagonal of `T` is meaningful: rotations are then
/// confined to the active block and the rest of `T` is left stale.
pub struct Schur<S> {
    pub t: Vec<Vec<S>>,
    pub z: Option<Vec<Vec<S>>>,
    pub eigenvalues: Vec<S>,
}

/// Unitary rotation `[[c̄, s̄], [-s, c]]` that maps `(a, b)` to `(r, 0)`.
struct Rotation<S> {
    c: S,
    s: S,
}

impl<S: ComplexScalar> Rotation<S> {
    fn zeroing(a: &S, b: &S) -> Option<Self> {
        if b.is_zero() {
            return None;
        }
        let r = S::pair_norm(a, b);
        Some(Rotation {
            c: a.div(&r),
            s: b.div(&r),
        })
    }

    /// Rows `p`, `q` of `m` over columns `cols`.
    fn apply_left(&self, m: &mut [Vec<S>], p: usize, q: usize, cols: std::ops::Range<usize>) {
        let (cc, sc) = (self.c.conj(), self.s.conj());
        for k in cols {
            let x = m[p][k].clone();
            let y = m[q][k].clone();
            m[p][k] = cc.mul(&x).add(&sc.mul(&y));
            m[q][k] = self.c.mul(&y).sub(&self.s.mul(&x));
        }
    }

    /// Columns `p`, `q` of `m` over rows `rows`, multiplying by the adjoint.
    fn apply_right_adjoint(&self, m: &mut [Vec<S>], p: usize, q: usize, rows: std::ops::Range<usize>) {
        let (cc, sc) = (self.c.conj(), self.s.conj());
        for row in &mut m[rows] {
            let x = row[p].clone();
            let y = row[q].clone();
            row[p] = x.mul(&self.c).add(&y.mul(&self.s));
            row[q] = y.mul(&cc).sub(&x.mul(&sc));
        }
    }
}

fn identity_like<S: ComplexScalar>(proto: &S, n: usize) -> Vec<Vec<S>> {
    let zero = proto.zero_like();
    let one = proto.from_c64_like(Complex64::new(1.0, 0.0));
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { one.clone() } else { zero.clone() })
                .collect()
        })
        .collect()
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift<S: ComplexScalar>(a: &S, b: &S, c: &S, d: &S) -> S {
    let half = a.from_c64_like(Complex64::new(0.5, 0.0));
    let p = a.sub(d).mul(&half);
    let bc = b.mul(c);
    let disc = p.mul(&p).add(&bc).sqrt();
    let plus = p.add(&disc);
    let minus = p.sub(&disc);
    let den = if plus.approx_abs() >= minus.approx_abs() {
        plus
    } else {
        minus
    };
    if den.is_zero() {
        d.clone()
    } else {
        d.sub(&bc.div(&den))
    }
}

pub fn hessenberg_schur<S: ComplexScalar>(
    mut h: Vec<Vec<S>>,
    opts: SchurOptions,
) -> Result<Schur<S>, MatrixError> {
    let n = h.len();
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    let proto = h[0][0].clone();
    let eps = proto.epsilon();
    let mut z = opts.want_vectors.then(|| identity_like(&proto, n));

    // Hessenberg reduction.
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            if let Some(rot) = Rotation::zeroing(&h[i - 1][j], &h[i][j]) {
                rot.apply_left(&mut h, i - 1, i, j..n);
                h[i][j] = proto.zero_like();
                rot.apply_right_adjoint(&mut h, i - 1, i, 0..n);
                if let Some(z) = z.as_mut() {
                    rot.apply_right_adjoint(z, i - 1, i, 0..n);
                }
            }
        }
    }

    let norm = h
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x.approx_abs())
        .fold(0.0, f64::max);
    let budget = opts.max_sweeps_per_eigenvalue * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[l - 1][l - 1].approx_abs() + h[l][l].approx_abs();
            if s == 0.0 {
                s = norm;
            }
            if h[l][l - 1].approx_abs() <= eps * s {
                break;
            }
            l -= 1;
        }
        if l > 0 {
            h[l][l - 1] = proto.zero_like();
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > budget {
            return Err(MatrixError::NoConvergence { iterations: total });
        }

        let mu = if its % 11 == 10 {
            let kick = h[hi][hi - 1].approx_abs() * 0.75;
            h[hi][hi].add(&proto.from_c64_like(Complex64::new(kick, kick * 0.5)))
        } else {
            wilkinson_shift(&h[hi - 1][hi - 1], &h[hi - 1][hi], &h[hi][hi - 1], &h[hi][hi])
        };

        for (k, row) in h.iter_mut().enumerate().take(hi + 1).skip(l) {
            row[k] = row[k].sub(&mu);
        }
        let (col_end, row_start) = if opts.want_vectors { (n, 0) } else { (hi + 1, l) };
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let rot = Rotation::zeroing(&h[k][k], &h[k + 1][k]);
            if let Some(r) = &rot {
                r.apply_left(&mut h, k, k + 1, k..col_end);
                h[k + 1][k] = proto.zero_like();
            }
            rots.push(rot);
        }
        for (off, rot) in rots.iter().enumerate() {
            let k = l + off;
            if let Some(r) = rot {
                r.apply_right_adjoint(&mut h, k, k + 1, row_start..(k + 2).min(hi + 1));
                if let Some(z) = z.as_mut() {
                    r.apply_right_adjoint(z, k, k + 1, 0..n);
                }
            }
        }
        for (k, row) in h.iter_mut().enumerate().take(hi + 1).skip(l) {
            row[k] = row[k].add(&mu);
        }
    }

    let eigenvalues = (0..n).map(|i| h[i][i].clone()).collect();
    Ok(Schur {
        t: h,
        z,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_rows(m: &[&[f64]]) -> Vec<Vec<Complex64>> {
        m.iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect()
    }

    fn reconstruct(s: &Schur<Complex64>) -> Vec<Vec<Complex64>> {
        let z = s.z.as_ref().unwrap();
        let n = z.len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[i][j] += z[i][k] * s.t[k][l] * z[j][l].conj();
                    }
                }
            }
        }
        out
    }

    #[test]
    fn schur_reconstructs_input() {
        let a = [
            [4.0, -2.0, 1.0, 0.5],
            [3.0, 6.0, -4.0, 1.0],
            [2.0, 1.0, 8.0, -1.0],
            [0.1, 0.2, 0.3, 1.0],
        ];
        let rows: Vec<&[f64]> = a.iter().map(|r| r.as_slice()).collect();
        let s = hessenberg_schur(to_rows(&rows), SchurOptions::default()).unwrap();
        let back = reconstruct(&s);
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j].re - a[i][j]).abs() < 1e-12);
                assert!(back[i][j].im.abs() < 1e-12);
                if i > j {
                    assert_eq!(s.t[i][j], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn rotation_eigenvalues() {
        let s = hessenberg_schur(
            to_rows(&[&[0.0, -1.0], &[1.0, 0.0]]),
            SchurOptions::default(),
        )
        .unwrap();
        let mut ims: Vec<f64> = s.eigenvalues.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
    }
}
