//! The three toy-universe families `Q(t)` and their closed-form spectra.
//!
//! `Bang` and `Cyclic` share the structure `Q(t) = Q0 + s(t) Q1` with the
//! equidistant diagonal `Q0 = diag(-N+1, -N+3, ..., N-1)` and the
//! antisymmetric tridiagonal `Q1` whose superdiagonal is `sqrt(n (N - n))`.
//! `Bang` uses `s(t) = sqrt(1 - t)`, `Cyclic` uses `s(t) = sqrt(1 - t^2)`;
//! for negative radicands the principal branch makes `s` imaginary and `Q`
//! complex Hermitian. `CrunchBang` is a fixed 8x8 piecewise-linear
//! tridiagonal matrix that collapses to the shift matrix at `t = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::precise::{mp_real, mp_sqrt, MpComplex, MpFloat};
use crate::matrixkit::{spectral_order, CMatrix, MatrixError, MpMatrix};

pub const CRUNCHBANG_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("no closed-form spectrum for {kind} at t = {t} (defined on 0 < t < 1)")]
    NoOracle { kind: ModelKind, t: f64 },
    #[error("{kind} is not differentiable at t = {t}")]
    Kink { kind: ModelKind, t: f64 },
    #[error("t = {t} lies outside the sampled range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("time must be finite, got {0}")]
    NonFiniteTime(f64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bang,
    Cyclic,
    #[serde(rename = "crunchbang")]
    CrunchBang,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Bang => "bang",
            ModelKind::Cyclic => "cyclic",
            ModelKind::CrunchBang => "crunchbang",
        })
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bang" => Ok(ModelKind::Bang),
            "cyclic" => Ok(ModelKind::Cyclic),
            "crunchbang" | "crunch-bang" => Ok(ModelKind::CrunchBang),
            other => Err(ModelError::InvalidSpec(format!(
                "unknown model kind '{other}' (expected bang, cyclic or crunchbang)"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelSpecRepr {
    kind: ModelKind,
    n: usize,
}

/// One model family together with its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecRepr", into = "ModelSpecRepr")]
pub struct ModelSpec {
    kind: ModelKind,
    dim: usize,
}

impl TryFrom<ModelSpecRepr> for ModelSpec {
    type Error = ModelError;

    fn try_from(r: ModelSpecRepr) -> Result<Self, ModelError> {
        ModelSpec::new(r.kind, r.n)
    }
}

impl From<ModelSpec> for ModelSpecRepr {
    fn from(s: ModelSpec) -> Self {
        ModelSpecRepr {
            kind: s.kind,
            n: s.dim,
        }
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self, ModelError> {
        if dim < 2 {
            return Err(ModelError::InvalidSpec(format!("dimension must be at least 2, got {dim}")));
        }
        if kind == ModelKind::CrunchBang && dim != CRUNCHBANG_DIM {
            return Err(ModelError::InvalidSpec(format!(
                "crunchbang is defined only for N = {CRUNCHBANG_DIM}, got {dim}"
            )));
        }
        Ok(ModelSpec { kind, dim })
    }

    pub fn bang(n: usize) -> Result<Self, ModelError> {
        Self::new(ModelKind::Bang, n)
    }

    pub fn cyclic(n: usize) -> Result<Self, ModelError> {
        Self::new(ModelKind::Cyclic, n)
    }

    pub fn crunchbang() -> Self {
        ModelSpec {
            kind: ModelKind::CrunchBang,
            dim: CRUNCHBANG_DIM,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(N={})", self.kind, self.dim)
    }
}

fn check_time(t: f64) -> Result<(), ModelError> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFiniteTime(t))
    }
}

/// Principal square root of a real radicand.
fn principal_sqrt(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

/// Radicand of the perturbation strength `s(t)^2`.
fn strength_squared(kind: ModelKind, t: f64) -> f64 {
    match kind {
        ModelKind::Bang => 1.0 - t,
        ModelKind::Cyclic => 1.0 - t * t,
        ModelKind::CrunchBang => unreachable!("crunchbang has no perturbation strength"),
    }
}

fn crunchbang_links(t: f64) -> ([f64; 7], [f64; 7]) {
    let a = t.abs();
    let sup = [1.0 - t, 1.0 - t, 1.0 - a, 1.0 - a, 1.0 - a, 1.0 - t, 1.0 - t];
    let sub = [t, t, a, a, a, t, t];
    (sup, sub)
}

/// Entry `n` of the unperturbed diagonal, `-N + 1 + 2n`.
fn q0_entry(dim: usize, n: usize) -> f64 {
    (2 * n) as f64 - dim as f64 + 1.0
}

/// Superdiagonal entry `n` of the perturbation, `sqrt((n+1) (N-n-1))`.
fn q1_entry(dim: usize, n: usize) -> f64 {
    (((n + 1) * (dim - n - 1)) as f64).sqrt()
}

/// `Q(t)` of the given family.
pub fn build_q(spec: &ModelSpec, t: f64) -> Result<CMatrix, ModelError> {
    check_time(t)?;
    let n = spec.dim;
    let mut q = CMatrix::zeros(n, n);
    match spec.kind {
        ModelKind::Bang | ModelKind::Cyclic => {
            let s = principal_sqrt(strength_squared(spec.kind, t));
            for i in 0..n {
                q[(i, i)] = Complex64::new(q0_entry(n, i), 0.0);
            }
            for i in 0..n - 1 {
                let v = s * q1_entry(n, i);
                q[(i, i + 1)] = v;
                q[(i + 1, i)] = -v;
            }
        }
        ModelKind::CrunchBang => {
            let (sup, sub) = crunchbang_links(t);
            for i in 0..n - 1 {
                q[(i, i + 1)] = Complex64::new(sup[i], 0.0);
                q[(i + 1, i)] = Complex64::new(sub[i], 0.0);
            }
        }
    }
    Ok(q)
}

/// `Q(t)` with every entry computed at `bits` of precision.
pub fn build_q_precise(spec: &ModelSpec, t: f64, bits: usize) -> Result<MpMatrix, ModelError> {
    check_time(t)?;
    let n = spec.dim;
    let mut q = MpMatrix::zeros(n, bits);
    let tt = mp_real(t, bits);
    let one = mp_real(1.0, bits);
    let zero = mp_real(0.0, bits);
    match spec.kind {
        ModelKind::Bang | ModelKind::Cyclic => {
            let radicand = match spec.kind {
                ModelKind::Bang => &one - &tt,
                _ => &one - &tt * &tt,
            };
            let s = if radicand >= MpFloat::ZERO {
                MpComplex::new(mp_sqrt(&radicand), zero.clone(), bits)
            } else {
                MpComplex::new(zero.clone(), mp_sqrt(&-radicand), bits)
            };
            for i in 0..n {
                q.set(i, i, MpComplex::real(mp_real(q0_entry(n, i), bits), bits));
            }
            for i in 0..n - 1 {
                let w = mp_sqrt(&mp_real(((i + 1) * (n - i - 1)) as f64, bits));
                let v = s.scale(&w);
                q.set(i + 1, i, v.neg());
                q.set(i, i + 1, v);
            }
        }
        ModelKind::CrunchBang => {
            let a = if t < 0.0 { -tt.clone() } else { tt.clone() };
            for i in 0..n - 1 {
                let (sup, sub) = match i {
                    0 | 1 | 5 | 6 => (&one - &tt, tt.clone()),
                    _ => (&one - &a, a.clone()),
                };
                q.set(i, i + 1, MpComplex::real(sup, bits));
                q.set(i + 1, i, MpComplex::real(sub, bits));
            }
        }
    }
    Ok(q)
}

/// Closed-form spectrum, ordered like [`crate::matrixkit::eig_full`].
///
/// `Bang`: `(2n - N + 1) sqrt(t)` with `sqrt(t) = i sqrt(|t|)` for `t < 0`.
/// `Cyclic`: `(2n - N + 1) |t|`.
/// `CrunchBang` on `0 < t < 1`: `2 sqrt(t (1 - t)) cos(k pi / 9)`, `k = 1..8`.
pub fn oracle_spectrum(spec: &ModelSpec, t: f64) -> Result<Vec<Complex64>, ModelError> {
    check_time(t)?;
    let n = spec.dim;
    let values: Vec<Complex64> = match spec.kind {
        ModelKind::Bang => {
            let root = principal_sqrt(t);
            (0..n).map(|k| root * q0_entry(n, k)).collect()
        }
        ModelKind::Cyclic => (0..n)
            .map(|k| Complex64::new(q0_entry(n, k) * t.abs(), 0.0))
            .collect(),
        ModelKind::CrunchBang => {
            if !(t > 0.0 && t < 1.0) {
                return Err(ModelError::NoOracle { kind: spec.kind, t });
            }
            let amp = 2.0 * (t * (1.0 - t)).sqrt();
            (1..=n)
                .map(|k| Complex64::new(amp * (k as f64 * PI / 9.0).cos(), 0.0))
                .collect()
        }
    };
    let order = spectral_order(&values, 1e-12);
    Ok(order.iter().map(|&k| values[k]).collect())
}

/// Entrywise `dQ/dt`.
pub fn build_q_time_derivative(spec: &ModelSpec, t: f64) -> Result<CMatrix, ModelError> {
    check_time(t)?;
    let n = spec.dim;
    let mut dq = CMatrix::zeros(n, n);
    match spec.kind {
        ModelKind::Bang | ModelKind::Cyclic => {
            let s = principal_sqrt(strength_squared(spec.kind, t));
            if s.norm() == 0.0 {
                return Err(ModelError::Kink { kind: spec.kind, t });
            }
            // d/dt sqrt(r(t)) = r'(t) / (2 sqrt(r))
            let dr = match spec.kind {
                ModelKind::Bang => -1.0,
                _ => -2.0 * t,
            };
            let ds = Complex64::new(dr, 0.0) / (s * 2.0);
            for i in 0..n - 1 {
                let v = ds * q1_entry(n, i);
                dq[(i, i + 1)] = v;
                dq[(i + 1, i)] = -v;
            }
        }
        ModelKind::CrunchBang => {
            if t == 0.0 {
                return Err(ModelError::Kink { kind: spec.kind, t });
            }
            let sign = t.signum();
            for i in 0..n - 1 {
                let (dsup, dsub) = match i {
                    0 | 1 | 5 | 6 => (-1.0, 1.0),
                    _ => (-sign, sign),
                };
                dq[(i, i + 1)] = Complex64::new(dsup, 0.0);
                dq[(i + 1, i)] = Complex64::new(dsub, 0.0);
            }
        }
    }
    Ok(dq)
}

/// A time-dependent matrix family `t ↦ Q(t)`.
pub trait MatrixFamily: Sync {
    fn dim(&self) -> usize;

    fn matrix_at(&self, t: f64) -> Result<CMatrix, ModelError>;

    /// Extended-precision realization, when the family has one.
    fn matrix_at_precise(&self, _t: f64, _bits: usize) -> Option<Result<MpMatrix, ModelError>> {
        None
    }

    fn describe(&self) -> String;
}

impl MatrixFamily for ModelSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn matrix_at(&self, t: f64) -> Result<CMatrix, ModelError> {
        build_q(self, t)
    }

    fn matrix_at_precise(&self, t: f64, bits: usize) -> Option<Result<MpMatrix, ModelError>> {
        Some(build_q_precise(self, t, bits))
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// One sample of an externally supplied family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSample {
    pub t: f64,
    pub matrix: CMatrix,
}

/// User-supplied family given as samples, linearly interpolated in `t`.
#[derive(Debug, Clone)]
pub struct SampledFamily {
    samples: Vec<MatrixSample>,
}

impl SampledFamily {
    pub fn new(mut samples: Vec<MatrixSample>) -> Result<Self, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::InvalidSpec("sampled family has no samples".into()));
        }
        let dim = samples[0].matrix.ensure_square()?;
        for s in &samples {
            check_time(s.t)?;
            if s.matrix.rows() != dim || s.matrix.cols() != dim {
                return Err(ModelError::InvalidSpec(format!(
                    "sample at t = {} is {}x{}, expected {dim}x{dim}",
                    s.t,
                    s.matrix.rows(),
                    s.matrix.cols()
                )));
            }
        }
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        if samples.windows(2).any(|w| w[0].t == w[1].t) {
            return Err(ModelError::InvalidSpec("duplicate sample times".into()));
        }
        Ok(SampledFamily { samples })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples.last().unwrap().t)
    }
}

impl MatrixFamily for SampledFamily {
    fn dim(&self) -> usize {
        self.samples[0].matrix.rows()
    }

    fn matrix_at(&self, t: f64) -> Result<CMatrix, ModelError> {
        check_time(t)?;
        let (lo, hi) = self.range();
        if t < lo || t > hi {
            return Err(ModelError::OutOfRange { t, lo, hi });
        }
        let k = self.samples.partition_point(|s| s.t <= t);
        if k == self.samples.len() {
            return Ok(self.samples[k - 1].matrix.clone());
        }
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        let w = (t - a.t) / (b.t - a.t);
        Ok(a.matrix.scale_real(1.0 - w).axpy(Complex64::new(w, 0.0), &b.matrix))
    }

    fn describe(&self) -> String {
        let (lo, hi) = self.range();
        format!(
            "sampled(N={}, {} samples on [{lo}, {hi}])",
            self.dim(),
            self.samples.len()
        )
    }
}
