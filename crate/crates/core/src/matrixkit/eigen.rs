//! Non-Hermitian eigendecomposition with biorthonormal left/right bases.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::schur::{hessenberg_schur, Schur, SchurOptions};
use super::{CMatrix, MatrixError};

/// Eigenvalues with paired right (columns) and left (rows) eigenvectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigSystem {
    pub eigenvalues: Vec<Complex64>,
    /// The decomposed matrix.
    pub matrix: CMatrix,
    /// Columns are unit-norm right eigenvectors.
    pub right_basis: CMatrix,
    /// Rows are left eigenvectors scaled so that `left_basis * right_basis ≈ I`.
    pub left_basis: CMatrix,
    /// Max-norm deviation of `left_basis * right_basis` from the identity.
    pub biorth_residual: f64,
    /// Condition number `|l_k| |r_k| / |l_k r_k|` of each eigenvalue.
    pub condition_numbers: Vec<f64>,
    pub defective_flag: bool,
}

impl EigSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn left_vector(&self, k: usize) -> &[Complex64] {
        self.left_basis.row(k)
    }

    pub fn right_vector(&self, k: usize) -> Vec<Complex64> {
        self.right_basis.column(k)
    }

    /// Error bound of eigenvalue `k` to first order in the working precision.
    pub fn error_bound(&self, k: usize) -> f64 {
        self.condition_numbers[k] * f64::EPSILON * self.matrix.frobenius_norm()
    }

    pub fn max_condition(&self) -> f64 {
        self.condition_numbers.iter().copied().fold(0.0, f64::max)
    }
}

/// Diagonal similarity by powers of two that equalizes row and column norms.
/// Returns the balanced matrix and the scaling `d` with `balanced = D⁻¹ A D`.
fn balance(m: &CMatrix) -> (CMatrix, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.rows();
    let mut a = m.clone();
    let mut d = vec![1.0; n];
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 200 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1_norm();
                    r += a[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / RADIX {
                cc *= RADIX;
                rr /= RADIX;
                f *= RADIX;
            }
            while cc >= rr * RADIX {
                cc /= RADIX;
                rr *= RADIX;
                f /= RADIX;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, d)
}

fn rows_of(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Orders eigenvalues by real part; real parts equal within `tie` are ordered
/// by imaginary part. Returns the permutation.
pub fn spectral_order(values: &[Complex64], tie: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && (values[idx[end]].re - values[idx[end - 1]].re).abs() <= tie {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im));
        start = end;
    }
    idx
}

fn tie_width(m: &CMatrix, tol: f64) -> f64 {
    tol * m.max_abs().max(1.0)
}

/// Eigenvalues only, ordered by real part then imaginary part.
pub fn eigenvalues(m: &CMatrix, tol: f64) -> Result<Vec<Complex64>, MatrixError> {
    m.ensure_square()?;
    m.ensure_finite()?;
    let (balanced, _) = balance(m);
    let schur = hessenberg_schur(
        rows_of(&balanced),
        SchurOptions {
            want_vectors: false,
            ..SchurOptions::default()
        },
    )?;
    let order = spectral_order(&schur.eigenvalues, tie_width(m, tol));
    Ok(order.iter().map(|&k| schur.eigenvalues[k]).collect())
}

/// Right eigenvectors of the triangular factor, mapped back through `Z`.
fn schur_vectors(schur: &Schur<Complex64>) -> Vec<Vec<Complex64>> {
    let t = &schur.t;
    let z = schur.z.as_ref().expect("vectors requested");
    let n = t.len();
    let tnorm = t
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut vecs = Vec::with_capacity(n);
    for k in 0..n {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut sum = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                sum += t[i][j] * y[j];
            }
            let mut den = t[i][i] - t[k][k];
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[i] = -sum / den;
            let big = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                for v in y.iter_mut() {
                    *v /= big;
                }
            }
        }
        let x: Vec<Complex64> = (0..n)
            .map(|r| (0..=k).map(|c| z[r][c] * y[c]).sum())
            .collect();
        vecs.push(x);
    }
    vecs
}

/// Unit 2-norm, largest component real and positive.
fn normalize_vector(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |(bi, bn), (i, z)| {
            if z.norm() > bn * (1.0 + 1e-12) {
                (i, z.norm())
            } else {
                (bi, bn)
            }
        })
        .0;
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

fn right_vectors(m: &CMatrix) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>), MatrixError> {
    let (balanced, d) = balance(m);
    let schur = hessenberg_schur(rows_of(&balanced), SchurOptions::default())?;
    let mut vecs = schur_vectors(&schur);
    for v in vecs.iter_mut() {
        for (x, s) in v.iter_mut().zip(&d) {
            *x *= *s;
        }
        normalize_vector(v);
    }
    Ok((schur.eigenvalues, vecs))
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Full eigendecomposition.
///
/// Left eigenvectors come from inverting the right basis when its condition
/// number is below `1/tol`; otherwise they are solved independently from the
/// adjoint matrix and the system is flagged defective.
pub fn eig_full(m: &CMatrix, tol: f64) -> Result<EigSystem, MatrixError> {
    let n = m.ensure_square()?;
    m.ensure_finite()?;
    let (values, vecs) = right_vectors(m)?;
    let order = spectral_order(&values, tie_width(m, tol));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
    let right_basis = CMatrix::from_fn(n, n, |i, j| vecs[order[j]][i]);

    let basis_cond = right_basis.condition_number();
    let (left_basis, mut defective) = if basis_cond.is_finite() && basis_cond * tol < 1.0 {
        (right_basis.inverse()?, false)
    } else {
        (adjoint_left_vectors(m, &eigenvalues, &right_basis)?, true)
    };

    let product = &left_basis * &right_basis;
    let biorth_residual = (&product - &CMatrix::identity(n)).max_abs();
    let condition_numbers: Vec<f64> = (0..n)
        .map(|k| {
            let l = left_basis.row(k);
            let r = right_basis.column(k);
            let overlap: Complex64 = l.iter().zip(&r).map(|(a, b)| a * b).sum();
            if overlap.norm() == 0.0 {
                f64::INFINITY
            } else {
                vec_norm(l) * vec_norm(&r) / overlap.norm()
            }
        })
        .collect();
    if condition_numbers.iter().any(|&c| !(c * tol < 1.0)) {
        defective = true;
    }
    Ok(EigSystem {
        eigenvalues,
        matrix: m.clone(),
        right_basis,
        left_basis,
        biorth_residual,
        condition_numbers,
        defective_flag: defective,
    })
}

/// Left eigenvectors as conjugated right eigenvectors of `m†`, paired with
/// `eigenvalues` by nearest conjugate eigenvalue.
fn adjoint_left_vectors(
    m: &CMatrix,
    eigenvalues: &[Complex64],
    right: &CMatrix,
) -> Result<CMatrix, MatrixError> {
    let n = eigenvalues.len();
    let (adj_values, adj_vecs) = right_vectors(&m.adjoint())?;
    let mut used = vec![false; n];
    let mut left = CMatrix::zeros(n, n);
    for (k, lambda) in eigenvalues.iter().enumerate() {
        let pick = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (adj_values[a].conj() - lambda)
                    .norm()
                    .total_cmp(&(adj_values[b].conj() - lambda).norm())
            })
            .expect("as many adjoint eigenvalues as eigenvalues");
        used[pick] = true;
        let row: Vec<Complex64> = adj_vecs[pick].iter().map(|z| z.conj()).collect();
        let overlap: Complex64 = row.iter().zip(right.column(k)).map(|(a, b)| a * b).sum();
        let scale = if overlap.norm() > f64::EPSILON {
            Complex64::new(1.0, 0.0) / overlap
        } else {
            Complex64::new(1.0, 0.0)
        };
        for (j, z) in row.iter().enumerate() {
            left[(k, j)] = z * scale;
        }
    }
    Ok(left)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_is_not_defective() {
        let e = eig_full(&CMatrix::identity(3), 1e-10).unwrap();
        assert!(e.eigenvalues.iter().all(|z| (z - c(1.0)).norm() < 1e-15));
        assert!(!e.defective_flag);
        assert!(e.biorth_residual < 1e-14);
    }

    #[test]
    fn nilpotent_block_is_defective() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let e = eig_full(&m, 1e-10).unwrap();
        assert!(e.eigenvalues.iter().all(|z| z.norm() < 1e-12));
        assert!(e.defective_flag);
    }

    #[test]
    fn rejects_bad_input() {
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(eig_full(&rect, 1e-10), Err(MatrixError::NotSquare { .. })));
    }

    #[test]
    fn ordering_breaks_real_ties_by_imaginary_part() {
        let vals = [
            Complex64::new(1.0, 2.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0 + 1e-14, -2.0),
        ];
        assert_eq!(spectral_order(&vals, 1e-10), vec![1, 2, 0]);
    }

    #[test]
    fn diagonalizes_nonnormal_matrix() {
        let m = CMatrix::from_real_rows(&[&[1.0, 5.0, 0.0], &[0.0, 2.0, 7.0], &[0.5, 0.0, 3.0]])
            .unwrap();
        let e = eig_full(&m, 1e-10).unwrap();
        assert!(!e.defective_flag);
        let d = &(&e.left_basis * &m) * &e.right_basis;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { e.eigenvalues[i] } else { c(0.0) };
                assert!((d[(i, j)] - want).norm() < 1e-12);
            }
        }
        for w in e.eigenvalues.windows(2) {
            assert!(w[0].re <= w[1].re + 1e-12);
        }
    }

    #[test]
    fn balancing_preserves_spectrum_of_graded_matrix() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1e6], &[1e-6, 0.0]]).unwrap();
        let ev = eigenvalues(&m, 1e-10).unwrap();
        assert!((ev[0] + c(1.0)).norm() < 1e-14 && (ev[1] - c(1.0)).norm() < 1e-14);
    }
}
