mod common;

use common::*;
use multiplex_core::graph::{mean_layer, MultiLayerGraph};
use multiplex_core::methods::{allegiance_matrix, olmf_objective, spectral_kernel};
use multiplex_core::metrics::{misclustering_rate, misclustering_upper_bound, nmi, subspace_distance};
use multiplex_core::mlsbm::{scenario_blocks, Scenario, ScenarioParams};
use multiplex_core::spectral::{kmeans_rows, orthonormalize, symmetric_eigen, top_k_eigvectors};
use multiplex_core::theory::theory_quantities;
use multiplex_core::{BlockModel, Embedding, FourParamSpec, Matrix, Mode, Partition, SymMatrix};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn edge_list_round_trip(seed in any::<u64>(), n in 2usize..12, m in 1usize..4) {
        let mut r = rng(seed);
        let layers = (0..m).map(|_| random_adjacency(&mut r, n, 0.3)).collect();
        let g = MultiLayerGraph::new(layers).unwrap();
        let text = g.to_edge_list();
        let back = MultiLayerGraph::from_edge_list(&text).unwrap();
        prop_assert_eq!(back.to_edge_list(), text);
        for l in 0..m {
            prop_assert_eq!(back.layer(l).as_matrix(), g.layer(l).as_matrix());
        }
    }

    #[test]
    fn mean_adjacency_counts_layers(seed in any::<u64>(), n in 2usize..10, m in 1usize..5) {
        let mut r = rng(seed);
        let layers: Vec<Matrix> = (0..m).map(|_| random_adjacency(&mut r, n, 0.5)).collect();
        let g = MultiLayerGraph::new(layers.clone()).unwrap();
        let mean = g.mean_adjacency();
        for i in 0..n {
            for j in 0..n {
                let count = layers.iter().filter(|a| a[(i, j)] == 1.0).count();
                prop_assert!((mean[(i, j)] - count as f64 / m as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn laplacian_spectrum_in_unit_interval(seed in any::<u64>(), n in 3usize..15) {
        let mut r = rng(seed);
        let mut a = random_adjacency(&mut r, n, 0.4);
        // a path through every node rules out isolated vertices
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
            a[(i + 1, i)] = 1.0;
        }
        let g = MultiLayerGraph::new(vec![a]).unwrap();
        let l = g.normalized_laplacian(0).unwrap();
        for v in symmetric_eigen(l.as_matrix()).unwrap().values {
            prop_assert!((-1.0 - 1e-10..=1.0 + 1e-10).contains(&v), "{}", v);
        }
    }

    #[test]
    fn top_k_spans_an_invariant_subspace(seed in any::<u64>(), n in 4usize..30, k in 1usize..4, absolute in any::<bool>()) {
        let mut r = rng(seed);
        let s = random_symmetric(&mut r, n);
        let mode = if absolute { Mode::Absolute } else { Mode::Algebraic };
        let u = top_k_eigvectors(&s, k, mode).unwrap();
        let su = s.as_matrix() * u.as_matrix();
        let resid = &su - u.as_matrix() * (u.transpose() * &su);
        prop_assert!(resid.norm() <= 1e-6 * s.norm());
    }

    #[test]
    fn orthonormalize_is_idempotent(seed in any::<u64>(), n in 3usize..20, k in 1usize..3) {
        let mut r = rng(seed);
        let once = orthonormalize(&gaussian(&mut r, n, k)).unwrap();
        let twice = orthonormalize(once.as_matrix()).unwrap();
        prop_assert!((once.as_matrix() - twice.as_matrix()).norm() < 1e-10);
    }

    #[test]
    fn factorization_loss_plus_objective_is_total_mass(seed in any::<u64>()) {
        let mut r = rng(seed);
        let layers: Vec<SymMatrix> = (0..3).map(|_| random_symmetric(&mut r, 30)).collect();
        let p = random_orthonormal(&mut r, 30, 3);
        let loss: f64 = layers
            .iter()
            .map(|a| {
                let lam = p.transpose() * a.as_matrix() * &p;
                (a.as_matrix() - &p * lam * p.transpose()).norm_squared()
            })
            .sum();
        let mass: f64 = layers.iter().map(|a| a.norm_squared()).sum();
        let f = olmf_objective(&layers, &p).unwrap();
        prop_assert!((loss + f - mass).abs() <= 1e-8 * mass);
    }

    #[test]
    fn trace_identity_for_projectors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = random_orthonormal(&mut r, 40, 4);
        let v = random_orthonormal(&mut r, 40, 4);
        let uu = &u * u.transpose();
        let vv = &v * v.transpose();
        let lhs = (v.transpose() * &uu * &v).trace();
        let rhs = 4.0 - 0.5 * (&vv - &uu).norm_squared();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
        let d = subspace_distance(&Embedding::new(u).unwrap(), &Embedding::new(v).unwrap()).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&d));
    }

    #[test]
    fn misclustering_matches_brute_force(seed in any::<u64>(), n in 1usize..40, k in 1usize..=5, k2 in 1usize..=5) {
        let mut r = rng(seed);
        let a = random_partition(&mut r, n, k);
        let b = random_partition(&mut r, n, k2);
        let fast = misclustering_rate(&a, &b).unwrap();
        prop_assert!((fast - brute_force_misclustering(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn misclustering_symmetry_and_zero_set(seed in any::<u64>(), n in 5usize..40, k in 2usize..=4) {
        let mut r = rng(seed);
        let a = random_partition(&mut r, n, k);
        let b = random_partition(&mut r, n, k);
        prop_assert_eq!(misclustering_rate(&a, &b).unwrap(), misclustering_rate(&b, &a).unwrap());
        let perm = &permutations(k)[r.random_range(0..permutations(k).len())];
        let relabeled = Partition::new(a.labels().iter().map(|&l| perm[l]).collect(), k).unwrap();
        prop_assert_eq!(misclustering_rate(&a, &relabeled).unwrap(), 0.0);
        let (mut fwd, mut bwd) = (vec![None; k], vec![None; k]);
        let bijective = a
            .labels()
            .iter()
            .zip(b.labels())
            .all(|(&x, &y)| *fwd[x].get_or_insert(y) == y && *bwd[y].get_or_insert(x) == x);
        prop_assert_eq!(misclustering_rate(&a, &b).unwrap() == 0.0, bijective);
    }

    #[test]
    fn nmi_symmetric_and_label_free(seed in any::<u64>(), n in 2usize..50, k in 1usize..=4) {
        let mut r = rng(seed);
        let a = random_partition(&mut r, n, k);
        let b = random_partition(&mut r, n, k);
        let ab = nmi(&a, &b).unwrap();
        prop_assert!((ab - nmi(&b, &a).unwrap()).abs() < 1e-12);
        let perm = &permutations(k)[r.random_range(0..permutations(k).len())];
        let relabeled = Partition::new(b.labels().iter().map(|&l| perm[l]).collect(), k).unwrap();
        prop_assert!((ab - nmi(&a, &relabeled).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn allegiance_ignores_label_names(seed in any::<u64>(), n in 2usize..30, k in 1usize..=4) {
        let mut r = rng(seed);
        let parts: Vec<Partition> = (0..3).map(|_| random_partition(&mut r, n, k)).collect();
        let perm = &permutations(k)[r.random_range(0..permutations(k).len())];
        let mut moved = parts.clone();
        moved[1] = Partition::new(parts[1].labels().iter().map(|&l| perm[l]).collect(), k).unwrap();
        prop_assert_eq!(allegiance_matrix(&parts).unwrap(), allegiance_matrix(&moved).unwrap());
    }

    #[test]
    fn jensen_between_signal_functionals(seed in any::<u64>(), m in 1usize..6) {
        let mut r = rng(seed);
        let p: Vec<f64> = (0..m).map(|_| r.random_range(0.05..0.4)).collect();
        let q: Vec<f64> = p.iter().map(|&x| {
            let y = r.random_range(0.01..0.4);
            if (y - x).abs() < 1e-3 { y + 2e-3 } else { y }
        }).collect();
        let model = BlockModel::four_param(&FourParamSpec::new(p, q, 3, 10).unwrap()).unwrap();
        let t = theory_quantities(&model).unwrap();
        let (f, g) = (t.f_ab.unwrap(), t.g_ab.unwrap());
        prop_assert!(g <= f * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn four_param_eigengaps_follow_the_closed_form(seed in any::<u64>(), m in 1usize..4, k in 2usize..4, s in 5usize..25) {
        let mut r = rng(seed);
        let p: Vec<f64> = (0..m).map(|_| r.random_range(0.1..0.5)).collect();
        let q: Vec<f64> = p.iter().map(|&x| x - r.random_range(0.02..0.09)).collect();
        let model = BlockModel::four_param(&FourParamSpec::new(p.clone(), q.clone(), k, s).unwrap()).unwrap();
        let t = theory_quantities(&model).unwrap();
        for ((l, pm), qm) in t.lambda_m.iter().zip(&p).zip(&q) {
            let want = s as f64 * (pm - qm);
            prop_assert!((l - want).abs() <= 1e-8 * want, "{} vs {}", l, want);
        }
        let want = s as f64 * p.iter().zip(&q).map(|(a, b)| a - b).sum::<f64>() / m as f64;
        prop_assert!((t.lambda_bar - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn population_has_rank_at_most_k(seed in any::<u64>(), k in 1usize..5) {
        let params = ScenarioParams { n: 40, k, layers: 2, avg_degree: 8.0 };
        let model = scenario_blocks(Scenario::Strong, &params, seed).unwrap();
        for a in model.population().into_layers() {
            let rank = symmetric_eigen(a.as_matrix()).unwrap().values.iter().filter(|v| v.abs() > 1e-8 * 40.0).count();
            prop_assert!(rank <= k);
        }
    }

    #[test]
    fn kernel_ignores_basis_of_each_layer(seed in any::<u64>()) {
        // K depends on U^(m) only through U^(m) U^(m)T, so rotating any
        // basis leaves it unchanged
        let mut r = rng(seed);
        let layers: Vec<SymMatrix> = (0..3).map(|_| random_symmetric(&mut r, 20)).collect();
        let kernel = spectral_kernel(&layers, 3, Mode::Algebraic).unwrap();
        let mut rebuilt = Matrix::zeros(20, 20);
        for a in &layers {
            let u = top_k_eigvectors(a, 3, Mode::Algebraic).unwrap();
            let rot = random_orthonormal(&mut r, 3, 3);
            let ur = u.as_matrix() * rot;
            rebuilt += &ur * ur.transpose();
        }
        rebuilt /= 3.0;
        prop_assert!((kernel.kernel.as_matrix() - rebuilt).norm() < 1e-9);
    }

    #[test]
    fn misclustering_bound_holds_on_samples(seed in any::<u64>()) {
        let params = ScenarioParams { n: 90, k: 3, layers: 3, avg_degree: 12.0 };
        let model = scenario_blocks(Scenario::Strong, &params, seed).unwrap();
        let g = model.sample(seed);
        let u = top_k_eigvectors(&mean_layer(&g), 3, Mode::Algebraic).unwrap();
        let est = kmeans_rows(u.as_matrix(), 3, 10, seed).unwrap();
        let r = misclustering_rate(model.membership(), &est).unwrap();
        let bound = misclustering_upper_bound(model.membership(), &u).unwrap();
        prop_assert!(r <= bound + 1e-12, "{} > {}", r, bound);
    }

    #[test]
    fn hetero_has_a_heterophilic_layer(seed in any::<u64>()) {
        let params = ScenarioParams { n: 60, k: 3, layers: 5, avg_degree: 10.0 };
        let model = scenario_blocks(Scenario::Hetero, &params, seed).unwrap();
        let hetero = model.blocks().iter().any(|b| {
            let min_diag = (0..3).map(|i| b[(i, i)]).fold(f64::INFINITY, f64::min);
            let max_off = (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|ij| b[ij]).fold(0.0, f64::max);
            min_diag < max_off
        });
        prop_assert!(hetero);
    }
}
