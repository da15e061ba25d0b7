use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, orthonormalize_columns, sym_eig, Matrix, RngStream};

/// Closed-form optimum of a single shared prompt over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglePromptBound {
    pub p_star: Vec<f64>,
    pub j_min: f64,
    /// `sqrt(J_min / M)`: no single prompt achieves a lower RMSE.
    pub rmse_bound: f64,
}

/// `ε*` from the Gram spectrum of the targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPromptBound {
    pub epsilon_star: f64,
    /// Eigenvalues of `SᵀS`, descending, with round-off below the rank
    /// threshold set to zero.
    pub eigenvalues: Vec<f64>,
}

fn check_targets(targets: &[Vec<f64>]) -> Result<usize> {
    let first = targets
        .first()
        .ok_or_else(|| Error::invalid("no targets"))?;
    let f = first.len();
    if f == 0 {
        return Err(Error::invalid("targets are empty vectors"));
    }
    if targets.iter().any(|t| t.len() != f) {
        return Err(Error::Shape("targets differ in length".into()));
    }
    if targets.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target entry".into()));
    }
    Ok(f)
}

/// Minimizes `J(p) = Σ ‖Cᵢ − λᵢ p‖²`: `p* = Σ λᵢ Cᵢ / Σ λᵢ²`.
pub fn single_prompt_lower_bound(
    targets: &[Vec<f64>],
    lambdas: &[f64],
) -> Result<SinglePromptBound> {
    let f = check_targets(targets)?;
    if lambdas.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} gains for {} targets",
            lambdas.len(),
            targets.len()
        )));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("gains must be strictly positive"));
    }
    let denom: f64 = lambdas.iter().map(|l| l * l).sum();
    let mut p_star = vec![0.0; f];
    for (c, &l) in targets.iter().zip(lambdas) {
        for (p, v) in p_star.iter_mut().zip(c) {
            *p += l * v / denom;
        }
    }
    let j_min = single_prompt_objective(targets, lambdas, &p_star);
    Ok(SinglePromptBound {
        rmse_bound: (j_min / targets.len() as f64).sqrt(),
        p_star,
        j_min,
    })
}

/// `J(p) = Σ ‖Cᵢ − λᵢ p‖²`.
pub fn single_prompt_objective(targets: &[Vec<f64>], lambdas: &[f64], p: &[f64]) -> f64 {
    targets
        .iter()
        .zip(lambdas)
        .map(|(c, &l)| {
            c.iter()
                .zip(p)
                .map(|(ci, pi)| (ci - l * pi).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// `ε*(k) = sqrt(Σ_{i>k} λᵢ(SᵀS) / M)` with `S = [C₁ … C_M]`.
pub fn multi_prompt_upper_bound(targets: &[Vec<f64>], k: usize) -> Result<MultiPromptBound> {
    check_targets(targets)?;
    let m = targets.len();
    let gram = Matrix::from_fn(m, m, |i, j| dot(&targets[i], &targets[j]));
    let mut eigenvalues = sym_eig(&gram)?.eigenvalues;
    // eigenvalues of a Gram matrix are ≥ 0; clear round-off so ε* is exactly 0 past the rank
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let floor = 1e-12 * top.max(f64::MIN_POSITIVE);
    for v in &mut eigenvalues {
        if *v <= floor {
            *v = 0.0;
        }
    }
    let tail = eigenvalues.iter().skip(k).fold(0.0, |a, v| a + v);
    Ok(MultiPromptBound {
        epsilon_star: (tail / m as f64).sqrt(),
        eigenvalues,
    })
}

/// Minimum over orthonormal `k`-frames `W` of `Σ ‖Cᵢ − W Wᵀ Cᵢ‖²`, found by
/// orthogonal iteration on `S Sᵀ` (no eigendecomposition involved).
pub fn subspace_residual_oracle(
    targets: &[Vec<f64>],
    k: usize,
    iterations: usize,
    rng: RngStream,
) -> Result<f64> {
    let f = check_targets(targets)?;
    if iterations == 0 {
        return Err(Error::invalid("oracle needs at least one iteration"));
    }
    let total: f64 = targets.iter().map(|c| dot(c, c)).sum();
    if k == 0 {
        return Ok(total);
    }
    if k >= f {
        return Ok(0.0);
    }
    let scatter = Matrix::from_fn(f, f, |a, b| targets.iter().map(|c| c[a] * c[b]).sum());
    let mut r = rng.rng();
    let mut q = orthonormalize_columns(&Matrix::from_fn(f, k, |_, _| RngStream::normal(&mut r)));
    for _ in 0..iterations {
        let mut next = orthonormalize_columns(&scatter.matmul(&q));
        // rank-deficient scatter zeroes columns; refill them with fresh directions
        for j in 0..k {
            if (0..f).all(|i| next[(i, j)] == 0.0) {
                for i in 0..f {
                    next[(i, j)] = r.random::<f64>() - 0.5;
                }
                next = orthonormalize_columns(&next);
            }
        }
        q = next;
    }
    let captured: f64 = targets
        .iter()
        .map(|c| q.vec_matmul(c).iter().map(|v| v * v).sum::<f64>())
        .sum();
    Ok((total - captured).max(0.0))
}

/// `max εᵢ / ‖C(Gᵢ)‖`.
pub fn modulus_estimate(epsilons: &[f64], target_norms: &[f64]) -> Result<f64> {
    if epsilons.len() != target_norms.len() {
        return Err(Error::Shape(format!(
            "{} errors for {} target norms",
            epsilons.len(),
            target_norms.len()
        )));
    }
    if epsilons.is_empty() {
        return Err(Error::invalid("no errors to estimate from"));
    }
    if target_norms.iter().any(|&n| !(n > 0.0)) {
        return Err(Error::invalid("target norms must be positive"));
    }
    Ok(epsilons
        .iter()
        .zip(target_norms)
        .map(|(e, n)| e / n)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_prompt_examples() {
        let b = single_prompt_lower_bound(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0]).unwrap();
        assert_eq!(b.p_star, vec![0.5, 0.5]);
        assert!((b.j_min - 1.0).abs() < 1e-15);
        assert!((b.rmse_bound - 0.5f64.sqrt()).abs() < 1e-15);

        let b = single_prompt_lower_bound(&[vec![2.0, 0.0], vec![0.0, 1.0]], &[2.0, 1.0]).unwrap();
        assert!((b.p_star[0] - 0.8).abs() < 1e-15 && (b.p_star[1] - 0.2).abs() < 1e-15);
        assert!((b.j_min - 1.6).abs() < 1e-12);
        assert!((b.rmse_bound - 0.894427190999916).abs() < 1e-12);

        let b = single_prompt_lower_bound(&[vec![3.0, -1.0]], &[2.0]).unwrap();
        assert_eq!(b.p_star, vec![1.5, -0.5]);
        assert_eq!(b.j_min, 0.0);

        assert!(single_prompt_lower_bound(&[], &[]).is_err());
        assert!(single_prompt_lower_bound(&[vec![1.0]], &[0.0]).is_err());
    }

    #[test]
    fn multi_prompt_examples() {
        let t = [
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ];
        let b = multi_prompt_upper_bound(&t, 1).unwrap();
        assert_eq!(b.eigenvalues, vec![4.0, 1.0, 0.0]);
        assert!((b.epsilon_star - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let b0 = multi_prompt_upper_bound(&t, 0).unwrap();
        assert!((b0.epsilon_star - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(multi_prompt_upper_bound(&t, 2).unwrap().epsilon_star, 0.0);
        assert_eq!(multi_prompt_upper_bound(&t, 3).unwrap().epsilon_star, 0.0);
        assert_eq!(multi_prompt_upper_bound(&t, 7).unwrap().epsilon_star, 0.0);
    }

    #[test]
    fn oracle_edge_cases() {
        let t = [vec![1.0, 2.0], vec![-1.0, 0.5]];
        assert_eq!(
            subspace_residual_oracle(&t, 0, 1, RngStream::new(0, 0)).unwrap(),
            1.0 + 4.0 + 1.0 + 0.25
        );
        assert_eq!(
            subspace_residual_oracle(&t, 2, 1, RngStream::new(0, 0)).unwrap(),
            0.0
        );
        assert!(subspace_residual_oracle(&t, 1, 0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn oracle_handles_rank_deficiency() {
        // all targets on one line: one direction captures everything
        let t = [
            vec![1.0, 2.0, 0.0],
            vec![-2.0, -4.0, 0.0],
            vec![0.5, 1.0, 0.0],
        ];
        let r = subspace_residual_oracle(&t, 2, 50, RngStream::new(1, 0)).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(modulus_estimate(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(modulus_estimate(&[1.0, 2.0], &[2.0, 10.0]).unwrap(), 0.5);
        assert_eq!(modulus_estimate(&[2.0, 4.0], &[4.0, 20.0]).unwrap(), 0.5);
        assert!(modulus_estimate(&[1.0], &[0.0]).is_err());
    }
}
