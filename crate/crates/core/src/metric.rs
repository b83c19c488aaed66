//! Physical metrics `Θ` with `Q† Θ = Θ Q`, their Dyson factors `Θ = Ω† Ω`,
//! and the map between the non-Hermitian working representation and its
//! Hermitian image `Ω Q Ω⁻¹`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::{gram_sqrt, herm_sqrt, hermitian_eigen, CMatrix, EigSystem, MatrixError};

/// Eigenvalue condition number above which a metric is reported with
/// degraded confidence.
pub const DEGRADED_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("complex spectrum: no positive metric (|Im λ| up to {max_imag:.3e})")]
    BrokenPhase { max_imag: f64 },
    #[error("defective eigensystem: eigenvectors do not form a basis")]
    Defective,
    #[error("degenerate spectrum: eigenvalues {0} and {1} coincide")]
    Degenerate(usize, usize),
    #[error("expected {expected} weights, got {got}")]
    KappaLength { expected: usize, got: usize },
    #[error("metric weights must be positive and finite")]
    InvalidKappa,
    #[error("matrix is not tridiagonal (entry ({0}, {1}) is nonzero)")]
    NotTridiagonal(usize, usize),
    #[error("degenerate chain: link {0} has a zero off-diagonal entry")]
    DegenerateChain(usize),
    #[error("metric is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("Dyson map condition number {cond:.3e} exceeds 1/tol")]
    IllConditioned { cond: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A candidate metric with its certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricResult {
    pub theta: CMatrix,
    /// Weights `κ_n` of `Θ = Σ κ_n ℓ_n† ℓ_n`; empty when the metric was not
    /// built from (and could not be expressed in) an eigenbasis.
    pub kappa: Vec<f64>,
    /// `‖Q† Θ − Θ Q‖_F`
    pub residual: f64,
    pub min_eig: f64,
    pub max_eig: f64,
    pub positive: bool,
    /// Largest eigenvalue condition number of the source eigensystem.
    pub eig_condition: f64,
    /// Set when `eig_condition` exceeds [`DEGRADED_CONDITION`].
    pub degraded: bool,
    /// `F` with `Θ = F† F`, when the metric was built from one. The spectrum
    /// of `Θ` and its root are then taken from `F` directly.
    #[serde(skip)]
    pub factor: Option<CMatrix>,
}

impl MetricResult {
    /// Residual relative to `‖Q‖_F ‖Θ‖_F`.
    pub fn relative_residual(&self, q: &CMatrix) -> f64 {
        self.residual / (q.frobenius_norm() * self.theta.frobenius_norm()).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DysonMap {
    pub omega: CMatrix,
    pub omega_inv: CMatrix,
    pub cond: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapDirection {
    /// `Ω X Ω⁻¹`: working representation to its Hermitian image.
    Forward,
    /// `Ω⁻¹ X Ω`: Hermitian image back to the working representation.
    Pullback,
}

/// `‖Q† Θ − Θ Q‖_F`
pub fn quasi_residual(q: &CMatrix, theta: &CMatrix) -> Result<f64, MetricError> {
    q.ensure_square()?;
    q.ensure_same_shape(theta)?;
    Ok((&(&q.adjoint() * theta) - &(theta * q)).frobenius_norm())
}

fn certify(q: &CMatrix, theta: CMatrix, factor: Option<CMatrix>, kappa: Vec<f64>, eig_condition: f64, tol: f64) -> Result<MetricResult, MetricError> {
    let residual = quasi_residual(q, &theta)?;
    let (min_eig, max_eig) = match &factor {
        Some(f) => {
            let sv = f.singular_values();
            (sv.last().unwrap().powi(2), sv[0].powi(2))
        }
        None => {
            let (values, _) = hermitian_eigen(&theta, tol)?;
            (values[0], *values.last().unwrap())
        }
    };
    Ok(MetricResult {
        theta,
        kappa,
        residual,
        min_eig,
        max_eig,
        positive: min_eig > tol * max_eig,
        eig_condition,
        degraded: eig_condition > DEGRADED_CONDITION,
        factor,
    })
}

/// `Θ = L† diag(κ) L` from the biorthonormal left eigenvectors of `eig`.
///
/// Requires an unbroken phase: every eigenvalue real to within its own
/// first-order error bound plus `tol` relative to the matrix scale.
pub fn metric_family(eig: &EigSystem, kappa: &[f64], tol: f64) -> Result<MetricResult, MetricError> {
    let n = eig.dim();
    if kappa.len() != n {
        return Err(MetricError::KappaLength {
            expected: n,
            got: kappa.len(),
        });
    }
    if kappa.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(MetricError::InvalidKappa);
    }
    let scale = eig.matrix.frobenius_norm().max(1.0);
    let mut max_imag: f64 = 0.0;
    let mut broken = false;
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        max_imag = max_imag.max(lambda.im.abs());
        if lambda.im.abs() > tol * scale + 10.0 * eig.error_bound(k) {
            broken = true;
        }
    }
    if broken {
        return Err(MetricError::BrokenPhase { max_imag });
    }
    if eig.defective_flag {
        return Err(MetricError::Defective);
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eig.eigenvalues[i] - eig.eigenvalues[j]).norm() <= tol * scale {
                return Err(MetricError::Degenerate(i, j));
            }
        }
    }
    // Θ itself is formed from κ directly so that it is exactly linear in κ.
    let weights: Vec<Complex64> = kappa.iter().map(|&k| Complex64::new(k, 0.0)).collect();
    let l = &eig.left_basis;
    let theta = &(&l.adjoint() * &CMatrix::from_diag(&weights)) * l;
    let theta = (&theta + &theta.adjoint()).scale_real(0.5);
    let roots: Vec<Complex64> = kappa.iter().map(|&k| Complex64::new(k.sqrt(), 0.0)).collect();
    let f = &CMatrix::from_diag(&roots) * l;
    certify(&eig.matrix, theta, Some(f), kappa.to_vec(), eig.max_condition(), tol)
}

/// Weights `diag(R† Θ R)` expressing `Θ` in the eigenbasis of `eig`, together
/// with the largest off-diagonal magnitude of `R† Θ R` relative to its
/// diagonal (zero when `Θ` belongs to the family).
pub fn kappa_in_eigenbasis(eig: &EigSystem, theta: &CMatrix) -> (Vec<f64>, f64) {
    let r = &eig.right_basis;
    let k = &(&r.adjoint() * theta) * r;
    let n = eig.dim();
    let diag: Vec<f64> = (0..n).map(|i| k[(i, i)].re).collect();
    let scale = diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(k[(i, j)].norm());
            }
        }
    }
    (diag, off / scale)
}

/// Diagonal metric `Θ = diag(d)` of a tridiagonal matrix with real diagonal,
/// chained by `d_{n+1} = d_n Q_{n,n+1} / conj(Q_{n+1,n})` from `d_1 = 1`.
///
/// Returns `None` when some link ratio is not a positive real number, i.e.
/// when no positive diagonal intertwiner exists.
pub fn diagonal_metric(q: &CMatrix, tol: f64) -> Result<Option<MetricResult>, MetricError> {
    let n = q.ensure_square()?;
    q.ensure_finite()?;
    let scale = q.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && q[(i, j)].norm() > tol * scale {
                return Err(MetricError::NotTridiagonal(i, j));
            }
        }
    }
    for i in 0..n - 1 {
        if q[(i, i + 1)].norm() <= tol * scale || q[(i + 1, i)].norm() <= tol * scale {
            return Err(MetricError::DegenerateChain(i));
        }
    }
    if (0..n).any(|i| q[(i, i)].im.abs() > tol * scale) {
        return Ok(None);
    }
    let mut d = vec![1.0];
    for i in 0..n - 1 {
        let ratio = q[(i, i + 1)] / q[(i + 1, i)].conj();
        if ratio.re <= 0.0 || ratio.im.abs() > tol * ratio.norm() {
            return Ok(None);
        }
        d.push(d[i] * ratio.re);
    }
    let theta = CMatrix::from_real_diag(&d);
    let (kappa, cond) = match crate::matrixkit::eig_full(q, tol) {
        Ok(eig) if !eig.defective_flag => {
            let (kappa, _) = kappa_in_eigenbasis(&eig, &theta);
            (kappa, eig.max_condition())
        }
        _ => (Vec::new(), f64::INFINITY),
    };
    let roots: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    certify(q, theta, Some(CMatrix::from_real_diag(&roots)), kappa, cond, tol).map(Some)
}

/// Positive square root `Ω` of a certified metric.
pub fn dyson_from_metric(mr: &MetricResult, tol: f64) -> Result<DysonMap, MetricError> {
    if !mr.positive {
        return Err(MetricError::NotPositive { min_eig: mr.min_eig });
    }
    match &mr.factor {
        Some(f) => {
            let (omega, omega_inv, sv) = gram_sqrt(f)?;
            Ok(DysonMap {
                omega,
                omega_inv,
                cond: sv[0] / sv.last().unwrap(),
            })
        }
        None => dyson_from_theta(&mr.theta, tol),
    }
}

/// Positive square root `Ω` of a Hermitian positive-definite `Θ`.
pub fn dyson_from_theta(theta: &CMatrix, tol: f64) -> Result<DysonMap, MetricError> {
    let omega = herm_sqrt(theta, tol).map_err(|e| match e {
        MatrixError::NotPositiveDefinite { min_eig } => MetricError::NotPositive { min_eig },
        other => MetricError::Matrix(other),
    })?;
    let omega_inv = omega.inverse()?;
    let (values, _) = hermitian_eigen(&omega, tol)?;
    let cond = values.last().unwrap() / values[0];
    Ok(DysonMap {
        omega,
        omega_inv,
        cond,
    })
}

/// `Ω X Ω⁻¹` (forward) or `Ω⁻¹ X Ω` (pullback).
pub fn hermitize(x: &CMatrix, map: &DysonMap, direction: MapDirection, tol: f64) -> Result<CMatrix, MetricError> {
    x.ensure_same_shape(&map.omega)?;
    if !(map.cond * tol < 1.0) {
        return Err(MetricError::IllConditioned { cond: map.cond });
    }
    Ok(match direction {
        MapDirection::Forward => &(&map.omega * x) * &map.omega_inv,
        MapDirection::Pullback => &(&map.omega_inv * x) * &map.omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::eig_full;
    use crate::models::{build_q, ModelSpec};

    const TOL: f64 = 1e-10;

    #[test]
    fn residual_examples() {
        let h = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, -3.0]]).unwrap();
        assert_eq!(quasi_residual(&h, &CMatrix::identity(2)).unwrap(), 0.0);

        let q = build_q(&ModelSpec::crunchbang(), 1.0 / 3.0).unwrap();
        let d: Vec<f64> = (0..8).map(|n| 2f64.powi(n)).collect();
        assert!(quasi_residual(&q, &CMatrix::from_real_diag(&d)).unwrap() <= 1e-12 * 128.0);

        // Q† − Q = [[0, −2s], [2s, 0]] with s = sqrt(1/2)
        let q = build_q(&ModelSpec::bang(2).unwrap(), 0.5).unwrap();
        let r = quasi_residual(&q, &CMatrix::identity(2)).unwrap();
        assert!((r - 2.0).abs() < 1e-14, "{r}");

        assert!(quasi_residual(&q, &CMatrix::identity(3)).is_err());
    }

    #[test]
    fn family_metric_for_bang_pair() {
        let q = build_q(&ModelSpec::bang(2).unwrap(), 0.25).unwrap();
        let eig = eig_full(&q, TOL).unwrap();
        let mr = metric_family(&eig, &[1.0, 1.0], TOL).unwrap();
        assert!(mr.positive);
        assert!(mr.residual <= 1e-10);
        assert!(!mr.degraded);

        let doubled = metric_family(&eig, &[2.0, 2.0], TOL).unwrap();
        assert!((&doubled.theta - &mr.theta.scale_real(2.0)).max_abs() < 1e-14);
        assert!(doubled.positive);
    }

    #[test]
    fn family_metric_rejects_broken_phase_and_bad_kappa() {
        let q = build_q(&ModelSpec::bang(2).unwrap(), -0.5).unwrap();
        let eig = eig_full(&q, TOL).unwrap();
        let err = metric_family(&eig, &[1.0, 1.0], TOL).unwrap_err();
        assert!(matches!(err, MetricError::BrokenPhase { .. }));
        assert!(err.to_string().starts_with("complex spectrum"));

        let q = build_q(&ModelSpec::bang(2).unwrap(), 0.25).unwrap();
        let eig = eig_full(&q, TOL).unwrap();
        assert!(matches!(metric_family(&eig, &[1.0], TOL), Err(MetricError::KappaLength { .. })));
        assert!(matches!(metric_family(&eig, &[1.0, -1.0], TOL), Err(MetricError::InvalidKappa)));
    }

    #[test]
    fn diagonal_metric_cases() {
        let q = build_q(&ModelSpec::crunchbang(), 1.0 / 3.0).unwrap();
        let mr = diagonal_metric(&q, TOL).unwrap().expect("positive chain");
        for n in 0..8 {
            assert!((mr.theta[(n, n)].re - 2f64.powi(n as i32)).abs() < 1e-12 * 128.0);
        }
        assert!(mr.positive);
        assert!(mr.kappa.iter().all(|&k| k > 0.0));

        let sym = CMatrix::from_real_rows(&[&[1.0, 0.5, 0.0], &[0.5, 2.0, 0.3], &[0.0, 0.3, 0.0]]).unwrap();
        let mr = diagonal_metric(&sym, TOL).unwrap().unwrap();
        assert!((&mr.theta - &CMatrix::identity(3)).max_abs() < 1e-15);

        let bang = build_q(&ModelSpec::bang(4).unwrap(), 0.5).unwrap();
        assert!(diagonal_metric(&bang, TOL).unwrap().is_none());

        let shift = build_q(&ModelSpec::crunchbang(), 0.0).unwrap();
        assert!(matches!(diagonal_metric(&shift, TOL), Err(MetricError::DegenerateChain(0))));

        let full = CMatrix::from_real_rows(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(diagonal_metric(&full, TOL), Err(MetricError::NotTridiagonal(0, 2))));
    }

    #[test]
    fn dyson_examples() {
        let mr = certify(&CMatrix::identity(2), CMatrix::identity(2), None, vec![1.0, 1.0], 1.0, TOL).unwrap();
        let d = dyson_from_metric(&mr, TOL).unwrap();
        assert!((&d.omega - &CMatrix::identity(2)).max_abs() < 1e-15);

        let d = dyson_from_theta(&CMatrix::from_real_diag(&[1.0, 4.0]), TOL).unwrap();
        assert!((&d.omega - &CMatrix::from_real_diag(&[1.0, 2.0])).max_abs() < 1e-15);
        assert!((d.cond - 2.0).abs() < 1e-14);

        let q = build_q(&ModelSpec::crunchbang(), 1.0 / 3.0).unwrap();
        let mr = diagonal_metric(&q, TOL).unwrap().unwrap();
        let d = dyson_from_metric(&mr, TOL).unwrap();
        for n in 0..8 {
            let want = 2f64.sqrt().powi(n as i32);
            assert!((d.omega[(n, n)].re - want).abs() < 1e-12 * want);
        }
        let back = &d.omega.adjoint() * &d.omega;
        assert!((&back - &mr.theta).max_abs() < 1e-10);

        let bad = certify(&CMatrix::identity(2), CMatrix::from_real_diag(&[1.0, -1.0]), None, vec![], 1.0, TOL).unwrap();
        assert!(!bad.positive);
        assert!(matches!(dyson_from_metric(&bad, TOL), Err(MetricError::NotPositive { .. })));
    }

    #[test]
    fn hermitize_crunchbang_with_diagonal_map() {
        let t = 1.0 / 3.0;
        let q = build_q(&ModelSpec::crunchbang(), t).unwrap();
        let d = dyson_from_metric(&diagonal_metric(&q, TOL).unwrap().unwrap(), TOL).unwrap();
        let h = hermitize(&q, &d, MapDirection::Forward, TOL).unwrap();
        let off = (t * (1.0 - t)).sqrt();
        assert!((off - 2f64.sqrt() / 3.0).abs() < 1e-15);
        for i in 0..7 {
            assert!((h[(i, i + 1)].re - off).abs() < 1e-14);
            assert!((h[(i + 1, i)].re - off).abs() < 1e-14);
        }
        let back = hermitize(&h, &d, MapDirection::Pullback, TOL).unwrap();
        assert!((&back - &q).max_abs() < 1e-14);

        let herm = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 5.0]]).unwrap();
        let id = dyson_from_theta(&CMatrix::identity(2), TOL).unwrap();
        assert_eq!(hermitize(&herm, &id, MapDirection::Forward, TOL).unwrap(), herm);
    }

    #[test]
    fn hermitize_bang_pair_is_isospectral() {
        let q = build_q(&ModelSpec::bang(2).unwrap(), 0.25).unwrap();
        let eig = eig_full(&q, TOL).unwrap();
        let d = dyson_from_metric(&metric_family(&eig, &[1.0, 1.0], TOL).unwrap(), TOL).unwrap();
        let h = hermitize(&q, &d, MapDirection::Forward, TOL).unwrap();
        assert!(h.hermitian_defect() < 1e-12);
        let (vals, _) = hermitian_eigen(&h, 1e-8).unwrap();
        assert!((vals[0] + 0.5).abs() < 1e-12 && (vals[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hermitize_rejects_ill_conditioned_map() {
        let d = dyson_from_theta(&CMatrix::from_real_diag(&[1.0, 1e-8]), 1e-12).unwrap();
        let x = CMatrix::identity(2);
        assert!(matches!(
            hermitize(&x, &d, MapDirection::Forward, 1e-3),
            Err(MetricError::IllConditioned { .. })
        ));
    }
}
