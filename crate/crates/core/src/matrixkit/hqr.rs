//! Eigenvalues of a real matrix by Hessenberg reduction and the Francis
//! double-shift QR iteration, which keeps complex-conjugate pairs in real
//! arithmetic.

use super::scalar::RealScalar;
use super::MatrixError;

/// `|a|` carrying the sign of `b`.
fn sign<R: RealScalar>(a: &R, b: &R) -> R {
    let m = a.abs();
    if *b >= b.from_f64_like(0.0) {
        m
    } else {
        m.neg()
    }
}

fn reduce_to_hessenberg<R: RealScalar>(a: &mut [Vec<R>]) {
    let n = a.len();
    let zero = a[0][0].from_f64_like(0.0);
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            if a[i][j].is_zero() {
                continue;
            }
            let (x, y) = (a[i - 1][j].clone(), a[i][j].clone());
            let r = x.mul(&x).add(&y.mul(&y)).sqrt();
            let (c, s) = (x.div(&r), y.div(&r));
            for k in j..n {
                let (p, q) = (a[i - 1][k].clone(), a[i][k].clone());
                a[i - 1][k] = c.mul(&p).add(&s.mul(&q));
                a[i][k] = c.mul(&q).sub(&s.mul(&p));
            }
            a[i][j] = zero.clone();
            for row in a.iter_mut() {
                let (p, q) = (row[i - 1].clone(), row[i].clone());
                row[i - 1] = c.mul(&p).add(&s.mul(&q));
                row[i] = c.mul(&q).sub(&s.mul(&p));
            }
        }
    }
}

/// Eigenvalues `(re, im)` of the real square matrix `a`, in deflation order.
pub fn real_eigenvalues<R: RealScalar>(mut a: Vec<Vec<R>>, max_its_per_eigenvalue: usize) -> Result<Vec<(R, R)>, MatrixError> {
    let n = a.len();
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    reduce_to_hessenberg(&mut a);
    let zero = a[0][0].from_f64_like(0.0);
    let half = zero.from_f64_like(0.5);
    let eps = zero.epsilon();
    let mut anorm = 0.0;
    for (i, row) in a.iter().enumerate() {
        for x in &row[i.saturating_sub(1)..] {
            anorm += x.approx().abs();
        }
    }
    let mut wr = vec![zero.clone(); n];
    let mut wi = vec![zero.clone(); n];
    let mut total = 0usize;
    let mut shift = zero.clone();
    let mut nn = n - 1;
    loop {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].approx().abs() + a[l][l].approx().abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].approx().abs() <= eps * s {
                    a[l][l - 1] = zero.clone();
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn].clone();
            if l == nn {
                wr[nn] = x.add(&shift);
                wi[nn] = zero.clone();
                if nn == 0 {
                    return Ok(wr.into_iter().zip(wi).collect());
                }
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1].clone();
            let mut w = a[nn][nn - 1].mul(&a[nn - 1][nn]);
            if l == nn - 1 {
                let p = y.sub(&x).mul(&half);
                let q = p.mul(&p).add(&w);
                let z = q.abs().sqrt();
                x = x.add(&shift);
                if q >= zero {
                    let z = p.add(&sign(&z, &p));
                    wr[nn - 1] = x.add(&z);
                    wr[nn] = if z.is_zero() { x.add(&z) } else { x.sub(&w.div(&z)) };
                    wi[nn - 1] = zero.clone();
                    wi[nn] = zero.clone();
                } else {
                    wr[nn - 1] = x.add(&p);
                    wr[nn] = x.add(&p);
                    wi[nn - 1] = z.neg();
                    wi[nn] = z;
                }
                if nn < 2 {
                    return Ok(wr.into_iter().zip(wi).collect());
                }
                nn -= 2;
                break;
            }
            if its >= max_its_per_eigenvalue {
                return Err(MatrixError::NoConvergence { iterations: total });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                shift = shift.add(&x);
                for i in 0..=nn {
                    a[i][i] = a[i][i].sub(&x);
                }
                let s = a[nn][nn - 1].abs().add(&a[nn - 1][nn - 2].abs());
                x = s.mul(&zero.from_f64_like(0.75));
                y = x.clone();
                w = s.mul(&s).mul(&zero.from_f64_like(-0.4375));
            }
            its += 1;
            total += 1;

            // two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m].clone();
                let r0 = x.sub(&z);
                let s0 = y.sub(&z);
                p = r0.mul(&s0).sub(&w).div(&a[m + 1][m]).add(&a[m][m + 1]);
                q = a[m + 1][m + 1].sub(&z).sub(&r0).sub(&s0);
                r = a[m + 2][m + 1].clone();
                let s = p.abs().add(&q.abs()).add(&r.abs());
                if !s.is_zero() {
                    p = p.div(&s);
                    q = q.div(&s);
                    r = r.div(&s);
                }
                if m == l {
                    break;
                }
                let u = a[m][m - 1].approx().abs() * (q.approx().abs() + r.approx().abs());
                let v = p.approx().abs() * (a[m - 1][m - 1].approx().abs() + z.approx().abs() + a[m + 1][m + 1].approx().abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = zero.clone();
                if i != m + 2 {
                    a[i][i - 3] = zero.clone();
                }
            }
            for k in m..nn {
                if k != m {
                    p = a[k][k - 1].clone();
                    q = a[k + 1][k - 1].clone();
                    r = if k + 1 != nn { a[k + 2][k - 1].clone() } else { zero.clone() };
                    x = p.abs().add(&q.abs()).add(&r.abs());
                    if !x.is_zero() {
                        p = p.div(&x);
                        q = q.div(&x);
                        r = r.div(&x);
                    }
                }
                let s = sign(&p.mul(&p).add(&q.mul(&q)).add(&r.mul(&r)).sqrt(), &p);
                if s.is_zero() {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[k][k - 1] = a[k][k - 1].neg();
                    }
                } else {
                    a[k][k - 1] = s.mul(&x).neg();
                }
                p = p.add(&s);
                x = p.div(&s);
                y = q.div(&s);
                let z = r.div(&s);
                q = q.div(&p);
                r = r.div(&p);
                for j in k..=nn {
                    let mut pj = a[k][j].add(&q.mul(&a[k + 1][j]));
                    if k + 1 != nn {
                        pj = pj.add(&r.mul(&a[k + 2][j]));
                        a[k + 2][j] = a[k + 2][j].sub(&pj.mul(&z));
                    }
                    a[k + 1][j] = a[k + 1][j].sub(&pj.mul(&y));
                    a[k][j] = a[k][j].sub(&pj.mul(&x));
                }
                let mmin = nn.min(k + 3);
                for row in a.iter_mut().take(mmin + 1).skip(l) {
                    let mut pi = x.mul(&row[k]).add(&y.mul(&row[k + 1]));
                    if k + 1 != nn {
                        pi = pi.add(&z.mul(&row[k + 2]));
                        row[k + 2] = row[k + 2].sub(&pi.mul(&r));
                    }
                    row[k + 1] = row[k + 1].sub(&pi.mul(&q));
                    row[k] = row[k].sub(&pi);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    fn eig(rows: &[&[f64]]) -> Vec<Complex64> {
        let a = rows.iter().map(|r| r.to_vec()).collect();
        sorted(real_eigenvalues(a, 60).unwrap().into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
    }

    #[test]
    fn small_cases() {
        assert_eq!(eig(&[&[3.0]]), vec![Complex64::new(3.0, 0.0)]);
        let r = eig(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let r = eig(&[&[2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 5.0]]);
        assert_eq!(r, vec![Complex64::new(-1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(5.0, 0.0)]);
    }

    #[test]
    fn companion_matrix_roots() {
        // x⁴ − 10x³ + 35x² − 50x + 24 = (x−1)(x−2)(x−3)(x−4)
        let r = eig(&[&[10.0, -35.0, 50.0, -24.0], &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]]);
        for (k, z) in r.iter().enumerate() {
            assert!((z - Complex64::new(k as f64 + 1.0, 0.0)).norm() < 1e-12, "{z}");
        }
    }

    #[test]
    fn dense_matrix_matches_trace_and_determinant() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 11) as f64 - 5.0).collect())
            .collect();
        let trace: f64 = (0..6).map(|i| rows[i][i]).sum();
        let vals = real_eigenvalues(rows, 60).unwrap();
        let sum: f64 = vals.iter().map(|(re, _)| re).sum();
        assert!((sum - trace).abs() < 1e-10);
        let im_sum: f64 = vals.iter().map(|(_, im)| im).sum();
        assert!(im_sum.abs() < 1e-10);
    }
}
