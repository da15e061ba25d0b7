use super::{Matrix, RANK_TOL};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `m = U · diag(σ) · Vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: Matrix,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    /// `k × cols` with orthonormal rows.
    pub vt: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows(), self.u.cols(), |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        us.matmul(&self.vt)
    }
}

/// One-sided Jacobi SVD.
pub fn svd_decompose(m: &Matrix) -> Result<Svd> {
    if !m.all_finite() {
        return Err(Error::NonFinite("svd input has non-finite entries".into()));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(Svd {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        });
    }
    Ok(svd_tall(m))
}

fn svd_tall(m: &Matrix) -> Svd {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = Matrix::identity(cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                for i in 0..cols {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let largest = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = largest * f64::EPSILON * rows as f64;
    let mut u = Matrix::zeros(rows, cols);
    let mut filled = vec![false; cols];
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > cutoff && norms[j] > 0.0 {
            for i in 0..rows {
                u[(i, k)] = a[(i, j)] / norms[j];
            }
            filled[k] = true;
        }
    }
    complete_orthonormal_columns(&mut u, &filled);

    let singular_values = order.iter().map(|&j| norms[j]).collect();
    let vt = Matrix::from_fn(cols, cols, |k, i| v[(i, order[k])]);
    Svd {
        u,
        singular_values,
        vt,
    }
}

/// Fills the unfilled columns of `u` with unit vectors orthogonal to every
/// other column, drawing candidates from the standard basis.
fn complete_orthonormal_columns(u: &mut Matrix, filled: &[bool]) {
    let rows = u.rows();
    let mut candidate = 0;
    for k in 0..u.cols() {
        if filled[k] {
            continue;
        }
        loop {
            assert!(candidate < rows, "cannot complete orthonormal basis");
            let mut col = vec![0.0; rows];
            col[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.cols() {
                    if j == k || (!filled[j] && j > k) {
                        continue;
                    }
                    let proj: f64 = (0..rows).map(|i| col[i] * u[(i, j)]).sum();
                    for (i, c) in col.iter_mut().enumerate() {
                        *c -= proj * u[(i, j)];
                    }
                }
            }
            let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-6 {
                for (i, c) in col.iter().enumerate() {
                    u[(i, k)] = c / n;
                }
                break;
            }
        }
    }
}

/// Number of singular values above [`RANK_TOL`].
pub fn numerical_rank(m: &Matrix) -> Result<usize> {
    Ok(svd_decompose(m)?
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL)
        .count())
}

/// Frobenius-nearest matrix of rank `target_rank` (Eckart–Young truncation).
pub fn rank_project(m: &Matrix, target_rank: usize) -> Result<Matrix> {
    let max_rank = m.rows().min(m.cols());
    if target_rank > max_rank {
        return Err(Error::InvalidArgument(format!(
            "target rank {target_rank} exceeds min dimension {max_rank}"
        )));
    }
    if target_rank == max_rank {
        return Ok(m.clone());
    }
    let mut svd = svd_decompose(m)?;
    for s in svd.singular_values.iter_mut().skip(target_rank) {
        *s = 0.0;
    }
    Ok(svd.reconstruct())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = RngStream::new(seed, 1).rng();
        Matrix::from_fn(rows, cols, |_, _| RngStream::normal(&mut rng))
    }

    fn check_svd(m: &Matrix) {
        let s = svd_decompose(m).unwrap();
        let k = m.rows().min(m.cols());
        assert_eq!(s.singular_values.len(), k);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.u.t_matmul(&s.u).sub(&Matrix::identity(k)).max_abs() < 1e-8);
        assert!(s.vt.matmul_t(&s.vt).sub(&Matrix::identity(k)).max_abs() < 1e-8);
        let err = s.reconstruct().sub(m).frobenius_norm();
        assert!(err <= 1e-8 * m.frobenius_norm().max(1e-300), "err {err}");
    }

    #[test]
    fn identity_and_rank_one() {
        let s = svd_decompose(&Matrix::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let m = Matrix::from_fn(3, 3, |i, j| u[i] * v[j]);
        let s = svd_decompose(&m).unwrap();
        assert!((s.singular_values[0] - 1.0).abs() < 1e-12);
        assert!(s.singular_values[1].abs() < 1e-12 && s.singular_values[2].abs() < 1e-12);
        check_svd(&m);
    }

    #[test]
    fn random_shapes_decompose() {
        check_svd(&gaussian(25, 25, 1));
        check_svd(&gaussian(7, 3, 2));
        check_svd(&gaussian(3, 7, 3));
        check_svd(&Matrix::zeros(3, 2));
    }

    #[test]
    fn gaussian_is_full_rank() {
        let s = svd_decompose(&gaussian(25, 25, 4)).unwrap();
        assert_eq!(s.singular_values.iter().filter(|&&x| x > 1e-8).count(), 25);
    }

    #[test]
    fn projection_hits_target_rank() {
        let p = rank_project(&Matrix::identity(3), 2).unwrap();
        let s = svd_decompose(&p).unwrap();
        assert_eq!(s.singular_values.iter().filter(|&&x| x > 1e-8).count(), 2);
        assert!((p.trace() - 2.0).abs() < 1e-12);

        let g = gaussian(25, 25, 5);
        assert_eq!(rank_project(&g, 25).unwrap(), g);
        let r20 = rank_project(&g, 20).unwrap();
        assert_eq!(numerical_rank(&r20).unwrap(), 20);
        let again = rank_project(&r20, 20).unwrap();
        assert!(again.sub(&r20).max_abs() < 1e-10);
        assert!(rank_project(&g, 26).is_err());
    }

    #[test]
    fn projection_is_frobenius_nearest() {
        // Eckart–Young: the error equals the norm of the discarded spectrum.
        let g = gaussian(6, 5, 9);
        let s = svd_decompose(&g).unwrap();
        let p = rank_project(&g, 3).unwrap();
        let tail: f64 = s.singular_values[3..]
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!((p.sub(&g).frobenius_norm() - tail).abs() < 1e-10);
    }
}
