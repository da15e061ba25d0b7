use super::Matrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues in nonincreasing order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let q = &self.eigenvectors;
        let scaled = Matrix::from_fn(q.rows(), q.cols(), |i, j| q[(i, j)] * self.eigenvalues[j]);
        scaled.matmul_t(q)
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Each sweep applies one plane rotation per off-diagonal pair; iteration
/// stops once the off-diagonal mass is negligible relative to the matrix
/// norm. Eigenvalues are returned sorted descending with their vectors.
pub fn sym_eig(v: &Matrix) -> Result<EigenDecomposition> {
    if !v.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            v.rows(),
            v.cols()
        )));
    }
    let scale = v.max_abs().max(1.0);
    if !v.is_symmetric(SYMMETRY_TOL * scale) {
        return Err(Error::Symmetry(
            "eigendecomposition input is not symmetric within 1e-10".into(),
        ));
    }
    let n = v.rows();
    let mut a = v.clone();
    // symmetrize exactly so rotations see a consistent matrix
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut q = Matrix::identity(n);
    let total = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}
