//! Time evolution in the non-Hermitian working representation.
//!
//! Conventions: the Coriolis generator is `Σ = i Ω⁻¹ ∂tΩ`, observables obey
//! `i ∂tA = A H − H A + i B`, the Dyson map obeys `i ∂tΩ = Ω Σ`, and the state
//! pair obeys `i ∂t|Ψ⟩ = G|Ψ⟩`, `i ∂t|Ψ⟩⟩ = G†|Ψ⟩⟩`. Every integration uses the
//! classical fixed-step fourth-order Runge-Kutta scheme.

use std::error::Error as StdError;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::{CMatrix, MatrixError};
use crate::metric::{diagonal_metric, dyson_from_metric, dyson_from_theta, metric_family, MetricError};
use crate::models::{MatrixFamily, ModelError};

pub type ProviderError = Box<dyn StdError + Send + Sync>;

/// Time-indexed matrix source, shareable across threads.
pub type Provider = Arc<dyn Fn(f64) -> Result<CMatrix, ProviderError> + Send + Sync>;

/// Wraps a closure as a [`Provider`].
pub fn provider<F, E>(f: F) -> Provider
where
    F: Fn(f64) -> Result<CMatrix, E> + Send + Sync + 'static,
    E: Into<ProviderError>,
{
    Arc::new(move |t| f(t).map_err(Into::into))
}

/// A provider that ignores time.
pub fn constant(m: CMatrix) -> Provider {
    Arc::new(move |_| Ok(m.clone()))
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("provider failed at t = {t}: {source}")]
    Provider { t: f64, source: ProviderError },
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("non-finite time or step")]
    NonFinite,
    #[error("state generator G is required (Heisenberg mode fixes G = 0)")]
    MissingG,
    #[error("ket has length {ket}, ketket has length {ketket}")]
    StateLength { ket: usize, ketket: usize },
    #[error("biorthogonal overlap vanishes")]
    ZeroOverlap,
    #[error("Dyson map is singular at t = {t}")]
    SingularOmega { t: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn call(p: &Provider, t: f64) -> Result<CMatrix, DynamicsError> {
    p(t).map_err(|source| DynamicsError::Provider { t, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `H = Σ`, `G = 0`.
    Heisenberg,
    /// `G = H − Σ`, or an explicitly supplied `G`.
    Schrodinger,
}

#[derive(Clone)]
pub struct EvolutionGenerator {
    mode: Mode,
    h_of_t: Provider,
    b_of_t: Option<Provider>,
    g_of_t: Option<Provider>,
}

impl std::fmt::Debug for EvolutionGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvolutionGenerator")
            .field("mode", &self.mode)
            .field("source", &self.b_of_t.is_some())
            .field("state_generator", &self.g_of_t.is_some())
            .finish()
    }
}

impl EvolutionGenerator {
    /// Heisenberg picture: observables are driven by `H = Σ`, states are frozen.
    pub fn heisenberg(sigma: Provider, source: Option<Provider>) -> Self {
        EvolutionGenerator {
            mode: Mode::Heisenberg,
            h_of_t: sigma,
            b_of_t: source,
            g_of_t: None,
        }
    }

    /// Schrödinger picture in the working space: states are driven by
    /// `G = H − Σ`.
    pub fn schrodinger(h: Provider, sigma: Provider, source: Option<Provider>) -> Self {
        let (hh, ss) = (h.clone(), sigma);
        let g: Provider = Arc::new(move |t| {
            let a = hh(t)?;
            let b = ss(t)?;
            a.ensure_same_shape(&b)?;
            Ok(&a - &b)
        });
        EvolutionGenerator {
            mode: Mode::Schrodinger,
            h_of_t: h,
            b_of_t: source,
            g_of_t: Some(g),
        }
    }

    /// Schrödinger picture with `G` given directly (`Σ = 0`, `H = G`).
    pub fn with_state_generator(g: Provider) -> Self {
        EvolutionGenerator {
            mode: Mode::Schrodinger,
            h_of_t: g.clone(),
            b_of_t: None,
            g_of_t: Some(g),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn h(&self, t: f64) -> Result<CMatrix, DynamicsError> {
        call(&self.h_of_t, t)
    }

    pub fn b(&self, t: f64) -> Result<Option<CMatrix>, DynamicsError> {
        self.b_of_t.as_ref().map(|p| call(p, t)).transpose()
    }

    pub fn g(&self, t: f64) -> Result<CMatrix, DynamicsError> {
        match &self.g_of_t {
            Some(p) => call(p, t),
            None => Err(DynamicsError::MissingG),
        }
    }
}

/// Default central-difference step for [`coriolis`].
pub fn default_step(t: f64) -> f64 {
    1e-5 * t.abs().max(1.0)
}

/// `Σ(t) = i Ω⁻¹(t) ∂tΩ(t)`, differentiating `omega` by central differences
/// unless `derivative` supplies `∂tΩ`.
pub fn coriolis(omega: &Provider, t: f64, h_step: Option<f64>, derivative: Option<&Provider>) -> Result<CMatrix, DynamicsError> {
    if !t.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    let om = call(omega, t)?;
    let inv = om.inverse().map_err(|_| DynamicsError::SingularOmega { t })?;
    let dot = match derivative {
        Some(d) => call(d, t)?,
        None => {
            let h = h_step.unwrap_or_else(|| default_step(t));
            if !(h > 0.0 && h.is_finite()) {
                return Err(DynamicsError::NonFinite);
            }
            let plus = call(omega, t + h)?;
            let minus = call(omega, t - h)?;
            (&plus - &minus).scale_real(0.5 / h)
        }
    };
    om.ensure_same_shape(&dot)?;
    Ok((&inv * &dot).scale(Complex64::i()))
}

/// `‖∂tΘ‖_F` for `Θ = Ω†Ω`, by central differences.
///
/// Reported as the adiabaticity diagnostic of the Heisenberg picture; no
/// threshold is imposed.
pub fn metric_rate(omega: &Provider, t: f64, h_step: Option<f64>) -> Result<f64, DynamicsError> {
    let h = h_step.unwrap_or_else(|| default_step(t));
    let theta = |s: f64| -> Result<CMatrix, DynamicsError> {
        let o = call(omega, s)?;
        Ok(&o.adjoint() * &o)
    };
    Ok((&theta(t + h)? - &theta(t - h)?).scale_real(0.5 / h).frobenius_norm())
}

trait OdeState: Sized {
    /// `self + h k`
    fn axpy(&self, h: f64, k: &Self) -> Self;
}

impl OdeState for CMatrix {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        self.axpy(Complex64::new(h, 0.0), k)
    }
}

impl OdeState for StatePair {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        let f = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x + y * h).collect();
        StatePair {
            ket: f(&self.ket, &k.ket),
            ketket: f(&self.ketket, &k.ketket),
        }
    }
}

fn rk4<S, F>(y0: S, t0: f64, t1: f64, steps: usize, mut rhs: F, mut record: impl FnMut(f64, &S)) -> Result<S, DynamicsError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S, DynamicsError>,
{
    if steps == 0 {
        return Err(DynamicsError::NoSteps);
    }
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    record(t0, &y);
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + h / 2.0, &y.axpy(h / 2.0, &k1))?;
        let k3 = rhs(t + h / 2.0, &y.axpy(h / 2.0, &k2))?;
        let k4 = rhs(t + h, &y.axpy(h, &k3))?;
        let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
        y = y.axpy(h / 6.0, &incr);
        // land exactly on the grid
        let t_next = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h };
        record(t_next, &y);
    }
    Ok(y)
}

fn heisenberg_rhs(gen: &EvolutionGenerator, t: f64, a: &CMatrix) -> Result<CMatrix, DynamicsError> {
    let h = gen.h(t)?;
    a.ensure_same_shape(&h)?;
    // −i (A H − H A) + B
    let mut d = (&(a * &h) - &(&h * a)).scale(-Complex64::i());
    if let Some(b) = gen.b(t)? {
        d.ensure_same_shape(&b)?;
        d = &d + &b;
    }
    Ok(d)
}

/// `A(t1)` from `A(t0) = a0` under `∂tA = −i(A H − H A) + B`.
pub fn heisenberg_evolve(a0: &CMatrix, gen: &EvolutionGenerator, t0: f64, t1: f64, steps: usize) -> Result<CMatrix, DynamicsError> {
    a0.ensure_square()?;
    rk4(a0.clone(), t0, t1, steps, |t, a| heisenberg_rhs(gen, t, a), |_, _| {})
}

/// As [`heisenberg_evolve`], returning every grid point.
pub fn heisenberg_trajectory(a0: &CMatrix, gen: &EvolutionGenerator, t0: f64, t1: f64, steps: usize) -> Result<Vec<(f64, CMatrix)>, DynamicsError> {
    a0.ensure_square()?;
    let mut out = Vec::with_capacity(steps + 1);
    rk4(a0.clone(), t0, t1, steps, |t, a| heisenberg_rhs(gen, t, a), |t, a| out.push((t, a.clone())))?;
    Ok(out)
}

fn cauchy_rhs(sigma: &Provider, t: f64, om: &CMatrix) -> Result<CMatrix, DynamicsError> {
    let s = call(sigma, t)?;
    om.ensure_same_shape(&s)?;
    Ok((om * &s).scale(-Complex64::i()))
}

/// `Ω(t1)` from `Ω(t0) = omega0` under `∂tΩ = −i Ω Σ`.
pub fn omega_cauchy_evolve(omega0: &CMatrix, sigma: &Provider, t0: f64, t1: f64, steps: usize) -> Result<CMatrix, DynamicsError> {
    omega0.ensure_square()?;
    rk4(omega0.clone(), t0, t1, steps, |t, om| cauchy_rhs(sigma, t, om), |_, _| {})
}

pub fn omega_cauchy_trajectory(omega0: &CMatrix, sigma: &Provider, t0: f64, t1: f64, steps: usize) -> Result<Vec<(f64, CMatrix)>, DynamicsError> {
    omega0.ensure_square()?;
    let mut out = Vec::with_capacity(steps + 1);
    rk4(omega0.clone(), t0, t1, steps, |t, om| cauchy_rhs(sigma, t, om), |t, om| out.push((t, om.clone())))?;
    Ok(out)
}

/// The ket `|Ψ⟩` and its partner `|Ψ⟩⟩ = Θ|Ψ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub ket: Vec<Complex64>,
    pub ketket: Vec<Complex64>,
}

impl StatePair {
    pub fn new(ket: Vec<Complex64>, ketket: Vec<Complex64>) -> Result<Self, DynamicsError> {
        let s = StatePair { ket, ketket };
        s.validate()?;
        Ok(s)
    }

    /// Pairs `ket` with `Θ ket`.
    pub fn from_metric(ket: Vec<Complex64>, theta: &CMatrix) -> Result<Self, DynamicsError> {
        let ketket = theta.matvec(&ket)?;
        StatePair::new(ket, ketket)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.ket.len() != self.ketket.len() {
            return Err(DynamicsError::StateLength {
                ket: self.ket.len(),
                ketket: self.ketket.len(),
            });
        }
        if self.ket.iter().chain(&self.ketket).any(|z| !z.is_finite()) {
            return Err(DynamicsError::NonFinite);
        }
        if self.overlap() == Complex64::new(0.0, 0.0) {
            return Err(DynamicsError::ZeroOverlap);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.ket.len()
    }

    /// `⟨⟨Ψ|Ψ⟩`
    pub fn overlap(&self) -> Complex64 {
        self.ketket.iter().zip(&self.ket).map(|(b, k)| b.conj() * k).sum()
    }
}

fn state_rhs(gen: &EvolutionGenerator, t: f64, s: &StatePair) -> Result<StatePair, DynamicsError> {
    let g = gen.g(t)?;
    let mi = -Complex64::i();
    let ket = g.matvec(&s.ket)?.into_iter().map(|z| z * mi).collect();
    let ketket = g.adjoint().matvec(&s.ketket)?.into_iter().map(|z| z * mi).collect();
    Ok(StatePair { ket, ketket })
}

/// Integrates `i ∂t|Ψ⟩ = G|Ψ⟩` and `i ∂t|Ψ⟩⟩ = G†|Ψ⟩⟩` together.
pub fn state_pair_evolve(s0: &StatePair, gen: &EvolutionGenerator, t0: f64, t1: f64, steps: usize) -> Result<StatePair, DynamicsError> {
    s0.validate()?;
    if gen.g_of_t.is_none() {
        return Err(DynamicsError::MissingG);
    }
    rk4(s0.clone(), t0, t1, steps, |t, s| state_rhs(gen, t, s), |_, _| {})
}

pub fn state_pair_trajectory(s0: &StatePair, gen: &EvolutionGenerator, t0: f64, t1: f64, steps: usize) -> Result<Vec<(f64, StatePair)>, DynamicsError> {
    s0.validate()?;
    if gen.g_of_t.is_none() {
        return Err(DynamicsError::MissingG);
    }
    let mut out = Vec::with_capacity(steps + 1);
    rk4(s0.clone(), t0, t1, steps, |t, s| state_rhs(gen, t, s), |t, s| out.push((t, s.clone())))?;
    Ok(out)
}

/// `⟨⟨Ψ|A|Ψ⟩`
pub fn expectation(s: &StatePair, a: &CMatrix) -> Result<Complex64, DynamicsError> {
    s.validate()?;
    let av = a.matvec(&s.ket)?;
    Ok(s.ketket.iter().zip(&av).map(|(b, x)| b.conj() * x).sum())
}

/// How the Dyson map of a model is obtained at each time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MetricChoice {
    /// `Θ = L† diag(κ) L`; an empty `kappa` means all ones.
    Family { kappa: Vec<f64> },
    /// Diagonal intertwiner of a tridiagonal model.
    Diagonal,
}

/// `Ω(t)` of a matrix family as a provider, recomputed at every call.
pub fn dyson_provider<F>(family: F, choice: MetricChoice, tol: f64) -> Provider
where
    F: MatrixFamily + Send + 'static,
{
    Arc::new(move |t| -> Result<CMatrix, ProviderError> {
        let q = family.matrix_at(t).map_err(|e: ModelError| Box::new(e) as ProviderError)?;
        let mr = match &choice {
            MetricChoice::Family { kappa } => {
                let eig = crate::matrixkit::eig_full(&q, tol)?;
                let ones = vec![1.0; q.rows()];
                let k = if kappa.is_empty() { &ones } else { kappa };
                metric_family(&eig, k, tol)?
            }
            MetricChoice::Diagonal => match diagonal_metric(&q, tol)? {
                Some(mr) => mr,
                None => return Err("no positive diagonal metric at this time".into()),
            },
        };
        let d = if mr.positive {
            dyson_from_metric(&mr, tol)?
        } else {
            dyson_from_theta(&mr.theta, tol)?
        };
        Ok(d.omega)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // diag(((1−t)/t)^((n−1)/2))
    fn crunch_omega(t: f64) -> CMatrix {
        let r = (1.0 - t) / t;
        CMatrix::from_real_diag(&(0..8).map(|n| r.powf(n as f64 / 2.0)).collect::<Vec<_>>())
    }

    fn crunch_sigma(t: f64) -> CMatrix {
        let d: Vec<Complex64> = (0..8).map(|n| c(0.0, -(n as f64) / (2.0 * t * (1.0 - t)))).collect();
        CMatrix::from_diag(&d)
    }

    #[test]
    fn coriolis_examples() {
        let om = constant(CMatrix::from_real_rows(&[&[2.0, 1.0], &[0.0, 1.0]]).unwrap());
        assert!(coriolis(&om, 0.3, None, None).unwrap().max_abs() < 1e-12);

        let w = 1.7;
        let phase = provider(move |t: f64| Ok::<_, MatrixError>(CMatrix::identity(3).scale(c(0.0, w * t).exp())));
        let s = coriolis(&phase, 0.4, None, None).unwrap();
        assert!((&s - &CMatrix::identity(3).scale_real(-w)).max_abs() < 1e-9);

        let p = provider(|t: f64| Ok::<_, MatrixError>(crunch_omega(t)));
        let s = coriolis(&p, 1.0 / 3.0, None, None).unwrap();
        for n in 0..8 {
            // O(h²) truncation of the central difference
            assert!((s[(n, n)] - c(0.0, -2.25 * n as f64)).norm() < 1e-7 * n.max(1) as f64, "{n}: {}", s[(n, n)]);
        }
    }

    #[test]
    fn coriolis_singular_and_domain_errors() {
        let sing = constant(CMatrix::zeros(2, 2));
        assert!(matches!(coriolis(&sing, 0.0, None, None), Err(DynamicsError::SingularOmega { .. })));
        let p = provider(|t: f64| {
            if t <= 0.0 {
                Err("outside")
            } else {
                Ok(crunch_omega(t))
            }
        });
        assert!(matches!(coriolis(&p, 1e-6, Some(1e-5), None), Err(DynamicsError::Provider { .. })));
    }

    #[test]
    fn analytic_derivative_is_used() {
        let om = provider(|t: f64| Ok::<_, MatrixError>(crunch_omega(t)));
        let d = provider(|t: f64| {
            let r: f64 = (1.0 - t) / t;
            let lr = -1.0 / (t * (1.0 - t));
            Ok::<_, MatrixError>(CMatrix::from_real_diag(
                &(0..8).map(|n| r.powf(n as f64 / 2.0) * lr * n as f64 / 2.0).collect::<Vec<_>>(),
            ))
        });
        let s = coriolis(&om, 0.4, None, Some(&d)).unwrap();
        assert!((&s - &crunch_sigma(0.4)).max_abs() < 1e-12);
    }

    #[test]
    fn heisenberg_trivial_cases() {
        let h = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.5, -1.0]]).unwrap();
        let gen = EvolutionGenerator::heisenberg(constant(h.clone()), None);
        let a = heisenberg_evolve(&h, &gen, 0.0, 1.0, 50).unwrap();
        assert!((&a - &h).max_abs() < 1e-13);

        let zero = EvolutionGenerator::heisenberg(constant(CMatrix::zeros(2, 2)), None);
        let a0 = CMatrix::from_real_rows(&[&[3.0, -1.0], &[4.0, 2.0]]).unwrap();
        assert_eq!(heisenberg_evolve(&a0, &zero, 0.0, 1.0, 10).unwrap(), a0);
        assert!(matches!(heisenberg_evolve(&a0, &zero, 0.0, 1.0, 0), Err(DynamicsError::NoSteps)));
    }

    #[test]
    fn heisenberg_source_term_integrates_linearly() {
        let gen = EvolutionGenerator::heisenberg(constant(CMatrix::zeros(2, 2)), Some(constant(CMatrix::identity(2))));
        let a = heisenberg_evolve(&CMatrix::zeros(2, 2), &gen, 0.0, 2.0, 4).unwrap();
        assert!((&a - &CMatrix::identity(2).scale_real(2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn heisenberg_pullback_oracle() {
        let frak = CMatrix::from_fn(8, 8, |i, j| {
            let x = (i + 2 * j) as f64 * 0.1;
            if i == j {
                c(1.0 + x, 0.0)
            } else if i < j {
                c(x.sin(), x.cos())
            } else {
                c(((j + 2 * i) as f64 * 0.1).sin(), -((j + 2 * i) as f64 * 0.1).cos())
            }
        });
        assert!(frak.is_hermitian(1e-15));
        let (t0, t1) = (1.0 / 3.0, 0.5);
        let pull = |t: f64| {
            let o = crunch_omega(t);
            &(&o.inverse().unwrap() * &frak) * &o
        };
        let gen = EvolutionGenerator::heisenberg(provider(|t: f64| Ok::<_, MatrixError>(crunch_sigma(t))), None);
        let a = heisenberg_evolve(&pull(t0), &gen, t0, t1, 1000).unwrap();
        let err = (&a - &pull(t1)).max_abs();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn cauchy_examples() {
        let om0 = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let zero = constant(CMatrix::zeros(2, 2));
        assert_eq!(omega_cauchy_evolve(&om0, &zero, 0.0, 1.0, 5).unwrap(), om0);

        let w = 0.9;
        let s = constant(CMatrix::identity(2).scale_real(-w));
        let om = omega_cauchy_evolve(&CMatrix::identity(2), &s, 0.0, 1.5, 1000).unwrap();
        let want = CMatrix::identity(2).scale(c(0.0, w * 1.5).exp());
        assert!((&om - &want).max_abs() < 1e-12);

        let sig = provider(|t: f64| Ok::<_, MatrixError>(crunch_sigma(t)));
        let om = omega_cauchy_evolve(&crunch_omega(1.0 / 3.0), &sig, 1.0 / 3.0, 0.5, 1000).unwrap();
        let err = (&om - &CMatrix::identity(8)).max_abs();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn state_pair_examples() {
        let s0 = StatePair::new(vec![c(1.0, 0.3), c(-0.5, 0.0)], vec![c(0.2, 0.0), c(1.0, 1.0)]).unwrap();
        let gen = EvolutionGenerator::with_state_generator(constant(CMatrix::zeros(2, 2)));
        assert_eq!(state_pair_evolve(&s0, &gen, 0.0, 1.0, 10).unwrap(), s0);

        let gen = EvolutionGenerator::with_state_generator(constant(CMatrix::from_real_diag(&[1.0, 2.0])));
        let e = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let s = state_pair_evolve(&StatePair::new(e.clone(), e).unwrap(), &gen, 0.0, 0.7, 1000).unwrap();
        let phase = c(0.0, -0.7).exp();
        assert!((s.ket[0] - phase).norm() < 1e-12 && (s.ketket[0] - phase).norm() < 1e-12);
        assert!((s.overlap() - c(1.0, 0.0)).norm() < 1e-13);

        let heis = EvolutionGenerator::heisenberg(constant(CMatrix::zeros(2, 2)), None);
        assert!(matches!(state_pair_evolve(&s0, &heis, 0.0, 1.0, 10), Err(DynamicsError::MissingG)));
        assert!(matches!(
            StatePair::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Err(DynamicsError::StateLength { .. })
        ));
        assert!(matches!(StatePair::new(vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]), Err(DynamicsError::ZeroOverlap)));
    }

    #[test]
    fn overlap_conserved_for_nonhermitian_generator() {
        let g = CMatrix::from_real_rows(&[&[0.0, 2.0, 0.0], &[-1.0, 0.5, 1.0], &[0.3, 0.0, -1.0]]).unwrap();
        let gen = EvolutionGenerator::with_state_generator(provider(move |t: f64| Ok::<_, MatrixError>(g.scale(c(1.0, 0.2 * t)))));
        let s0 = StatePair::new(vec![c(1.0, 0.0), c(0.5, 0.5), c(0.0, -1.0)], vec![c(2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        let s1 = state_pair_evolve(&s0, &gen, 0.0, 1.0, 1000).unwrap();
        assert!((s1.overlap() - s0.overlap()).norm() < 1e-10);
    }

    #[test]
    fn expectation_examples() {
        let e = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let s = StatePair::new(e.clone(), e.clone()).unwrap();
        assert!((expectation(&s, &CMatrix::identity(2)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let theta = CMatrix::from_real_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
        let s = StatePair::from_metric(e, &theta).unwrap();
        let v = expectation(&s, &CMatrix::identity(2)).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-15);

        let q = crate::models::build_q(&crate::models::ModelSpec::crunchbang(), 1.0 / 3.0).unwrap();
        let d: Vec<f64> = (0..8).map(|n| 2f64.powi(n)).collect();
        let mut ket = vec![c(0.0, 0.0); 8];
        ket[0] = c(1.0, 0.0);
        let s = StatePair::from_metric(ket, &CMatrix::from_real_diag(&d)).unwrap();
        assert_eq!(expectation(&s, &q).unwrap(), c(0.0, 0.0));
        assert!(expectation(&s, &CMatrix::identity(3)).is_err());
    }

    #[test]
    fn schrodinger_generator_composes() {
        let h = constant(CMatrix::from_real_diag(&[3.0, 1.0]));
        let s = constant(CMatrix::from_real_diag(&[1.0, 1.0]));
        let gen = EvolutionGenerator::schrodinger(h, s, None);
        assert_eq!(gen.mode(), Mode::Schrodinger);
        assert_eq!(gen.g(0.0).unwrap(), CMatrix::from_real_diag(&[2.0, 0.0]));
    }

    #[test]
    fn metric_rate_of_crunchbang_map() {
        let om = provider(|t: f64| Ok::<_, MatrixError>(crunch_omega(t)));
        // Θ = diag(r^(n-1)), ∂tΘ = diag((n−1) r^(n−2) r'), r' = −1/t² = −9, r = 2
        let want: f64 = (1..8).map(|n| (n as f64 * 2f64.powi(n - 1) * 9.0).powi(2)).sum::<f64>().sqrt();
        let got = metric_rate(&om, 1.0 / 3.0, None).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn dyson_provider_reproduces_diagonal_map() {
        let p = dyson_provider(crate::models::ModelSpec::crunchbang(), MetricChoice::Diagonal, 1e-10);
        let om = p(0.25).unwrap();
        assert!((&om - &crunch_omega(0.25)).max_abs() < 1e-10);
        assert!(p(-0.25).is_err());
    }

    #[test]
    fn trajectory_records_every_step() {
        let gen = EvolutionGenerator::heisenberg(constant(CMatrix::zeros(2, 2)), None);
        let traj = heisenberg_trajectory(&CMatrix::identity(2), &gen, 0.0, 1.0, 4).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(traj[4].0, 1.0);
        assert_eq!(traj[2].0, 0.5);
    }
}
