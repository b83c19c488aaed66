use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{CMatrix, MatrixError};

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> Result<usize, MatrixError> {
    m.ensure_finite()?;
    let sv = m.singular_values();
    Ok(rank_from_singular_values(&sv, tol * sv[0]))
}

/// Number of singular values above `tol * reference`.
///
/// Ranking `A^k` against `‖A‖^k` instead of against its own largest singular
/// value keeps a numerically vanishing power at rank zero.
pub fn numerical_rank_against(m: &CMatrix, tol: f64, reference: f64) -> Result<usize, MatrixError> {
    m.ensure_finite()?;
    let sv = m.singular_values();
    Ok(rank_from_singular_values(&sv, tol * reference))
}

fn rank_from_singular_values(sv: &[f64], threshold: f64) -> usize {
    if sv[0] == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix, tol: f64) -> Result<(Vec<f64>, CMatrix), MatrixError> {
    m.ensure_square()?;
    m.ensure_finite()?;
    if !m.is_hermitian(tol) {
        return Err(MatrixError::NotHermitian {
            defect: m.hermitian_defect(),
        });
    }
    let sym = SymmetricEigen::new(m.to_nalgebra());
    let mut order: Vec<usize> = (0..sym.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[a].total_cmp(&sym.eigenvalues[b]));
    let values = order.iter().map(|&k| sym.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.rows(), m.cols(), |i, j| sym.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Positive-definite Hermitian square root.
pub fn herm_sqrt(theta: &CMatrix, tol: f64) -> Result<CMatrix, MatrixError> {
    let (values, vectors) = hermitian_eigen(theta, tol)?;
    let max = values.last().copied().unwrap_or(0.0);
    let min = values[0];
    if !(min > tol * max) {
        return Err(MatrixError::NotPositiveDefinite { min_eig: min });
    }
    let roots: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect();
    let root = &(&vectors * &CMatrix::from_diag(&roots)) * &vectors.adjoint();
    // exact Hermitian symmetry
    let herm = (&root + &root.adjoint()).scale_real(0.5);
    Ok(herm)
}

/// Positive square root of `F† F`, its inverse, and the singular values of
/// `F` (descending), read off the SVD `F = W S V†` as `V S V†`.
///
/// Same root as [`herm_sqrt`] applied to the product, but the product is
/// never formed, so the error grows with `cond(F)` rather than `cond(F)²`.
pub fn gram_sqrt(f: &CMatrix) -> Result<(CMatrix, CMatrix, Vec<f64>), MatrixError> {
    let n = f.ensure_square()?;
    f.ensure_finite()?;
    let svd = f.to_nalgebra().svd(false, true);
    let v_adj = svd.v_t.expect("requested");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    if s.iter().any(|&x| !(x > 0.0)) {
        return Err(MatrixError::Singular);
    }
    let v = CMatrix::from_nalgebra(&v_adj).adjoint();
    let weighted = |p: f64| {
        let d: Vec<Complex64> = s.iter().map(|&x| Complex64::new(x.powf(p), 0.0)).collect();
        let m = &(&v * &CMatrix::from_diag(&d)) * &v.adjoint();
        (&m + &m.adjoint()).scale_real(0.5)
    };
    let (root, inv) = (weighted(1.0), weighted(-1.0));
    let mut sorted = s;
    sorted.sort_by(|a, b| b.total_cmp(a));
    debug_assert_eq!(sorted.len(), n);
    Ok((root, inv, sorted))
}

/// Basis of the solution space of `q† X = X q`.
///
/// The map `X ↦ q† X − X q` is assembled column by column from the standard
/// matrix units and its null space read off the singular value decomposition.
/// Every returned element has unit Frobenius norm.
pub fn intertwiner_nullspace(q: &CMatrix, tol: f64) -> Result<Vec<CMatrix>, MatrixError> {
    let n = q.ensure_square()?;
    q.ensure_finite()?;
    let qa = q.adjoint();
    let dim = n * n;
    let mut op = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let (a, b) = (col / n, col % n);
        // q† E_ab − E_ab q
        for i in 0..n {
            op[(i * n + b, col)] += qa[(i, a)];
        }
        for j in 0..n {
            op[(a * n + j, col)] -= q[(b, j)];
        }
    }
    let svd = op.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let qnorm = q.frobenius_norm();
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol * sigma_max && sigma_max > 0.0 {
            continue;
        }
        let x = CMatrix::from_fn(n, n, |i, j| v_t[(k, i * n + j)].conj());
        let resid = (&(&qa * &x) - &(&x * q)).frobenius_norm();
        if resid <= tol * qnorm.max(f64::MIN_POSITIVE) * x.frobenius_norm() || qnorm == 0.0 {
            basis.push(x);
        }
    }
    Ok(basis)
}
