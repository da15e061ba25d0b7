use proptest::prelude::*;
use rand::Rng;

use gplab::gnn::{init_frozen_model, Arch, ModelSettings, Readout};
use gplab::graphs::generate_graph;
use gplab::numerics::RngStream;
use gplab::theory::{
    modulus_estimate, multi_prompt_upper_bound, single_prompt_lower_bound, single_prompt_objective,
    subspace_residual_oracle,
};

fn random_targets(seed: u64, m: usize, f: usize) -> Vec<Vec<f64>> {
    let mut r = RngStream::new(seed, 7).rng();
    (0..m)
        .map(|_| (0..f).map(|_| RngStream::normal(&mut r)).collect())
        .collect()
}

/// `m` targets spanning a random subspace of dimension `rank`.
fn low_rank_targets(seed: u64, m: usize, f: usize, rank: usize) -> Vec<Vec<f64>> {
    let basis = random_targets(seed, rank, f);
    let coeffs = random_targets(seed ^ 0xABCD, m, rank);
    coeffs
        .iter()
        .map(|c| {
            (0..f)
                .map(|j| (0..rank).map(|l| c[l] * basis[l][j]).sum())
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multi_prompt_bound_is_nonincreasing_and_vanishes_past_rank(
        seed in 0u64..10_000, m in 1usize..10, f in 1usize..8, rank in 1usize..6,
    ) {
        let rank = rank.min(m).min(f);
        let t = low_rank_targets(seed, m, f, rank);
        let eps: Vec<f64> = (0..=m + 1).map(|k| multi_prompt_upper_bound(&t, k).unwrap().epsilon_star).collect();
        for w in eps.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for &e in &eps[rank..] {
            prop_assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn oracle_never_beats_the_eigen_sum(seed in 0u64..10_000, m in 2usize..10, f in 2usize..8, k in 1usize..5) {
        let t = random_targets(seed, m, f);
        let closed = multi_prompt_upper_bound(&t, k).unwrap().epsilon_star.powi(2) * m as f64;
        let oracle = subspace_residual_oracle(&t, k, 400, RngStream::new(seed, 1)).unwrap();
        prop_assert!(oracle >= closed - 1e-6, "oracle {} < closed {}", oracle, closed);
        let scale = t.iter().flatten().map(|v| v * v).sum::<f64>();
        prop_assert!(oracle - closed <= 1e-3 * scale, "oracle {} vs closed {}", oracle, closed);
    }

    #[test]
    fn single_prompt_optimum_is_global(seed in 0u64..10_000, m in 1usize..10, f in 1usize..8) {
        let t = random_targets(seed, m, f);
        let mut r = RngStream::new(seed, 2).rng();
        let lambdas: Vec<f64> = (0..m).map(|_| r.random_range(0.1..3.0)).collect();
        let b = single_prompt_lower_bound(&t, &lambdas).unwrap();
        for _ in 0..100 {
            let p: Vec<f64> = b.p_star.iter().map(|v| v + 0.5 * RngStream::normal(&mut r)).collect();
            prop_assert!(single_prompt_objective(&t, &lambdas, &p) >= b.j_min);
        }
    }

    #[test]
    fn modulus_is_scale_invariant(eps in prop::collection::vec(0.0f64..5.0, 1..20), s in 0.1f64..10.0) {
        let norms: Vec<f64> = eps.iter().enumerate().map(|(i, _)| 1.0 + i as f64).collect();
        let a = modulus_estimate(&eps, &norms).unwrap();
        let eps2: Vec<f64> = eps.iter().map(|e| e * s).collect();
        let norms2: Vec<f64> = norms.iter().map(|n| n * s).collect();
        let b = modulus_estimate(&eps2, &norms2).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn readout_is_permutation_invariant(
        seed in 0u64..10_000, n in 1usize..9, arch_idx in 0usize..3, sum in any::<bool>(),
    ) {
        let arch = [Arch::Gcn, Arch::Gat, Arch::GcnLinear][arch_idx];
        let settings = ModelSettings {
            arch,
            feature_dim: 4,
            n_layers: 2,
            readout: if sum { Readout::Sum } else { Readout::Mean },
            ..ModelSettings::default()
        };
        let model = init_frozen_model(&settings, RngStream::new(seed, 0)).unwrap();
        let g = generate_graph(n, 4, 0.4, RngStream::new(seed, 1)).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut r = RngStream::new(seed, 2).rng();
        for i in (1..n).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let a = model.model_output(&g).unwrap();
        let b = model.model_output(&g.permute(&perm).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
