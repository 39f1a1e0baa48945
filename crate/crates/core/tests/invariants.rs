mod support;

use std::collections::BTreeMap;

use pathlasso::metrics::{chance_power, ranking_scores, roc_points, CausalTruth};
use pathlasso::solver::fit_bcd_observed;
use pathlasso::weighting::{kl_divergence, update_weights, weight_multiplier, SelectionProfile};
use pathlasso::{fit_bcd, lambda_max, ExpansionMap, NullMode, PathwayModel, SolverConfig};
use proptest::prelude::*;
use support::{random_instance, reference_objective};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sweeps_never_increase_the_objective(seed in 0u64..10_000, frac in 0.05f64..0.95, overlap: bool) {
        let inst = random_instance(seed, 30, 15, 4, 6, overlap);
        let lambda = frac * lambda_max(&inst.design, &inst.y, &inst.weights);
        let mut trace = Vec::new();
        let fit = fit_bcd_observed(&inst.design, &inst.y, lambda, &inst.weights, &SolverConfig::default(), None, &mut |s| {
            trace.push(s.objective_value)
        })
        .unwrap();
        let start = 0.5 * inst.y.iter().map(|v| v * v).sum::<f64>();
        let mut prev = start;
        for &v in &trace {
            prop_assert!(v <= prev * (1.0 + 1e-12) + 1e-12, "{v} after {prev}");
            prev = v;
        }
        prop_assert!(fit.objective_value <= start * (1.0 + 1e-12));
    }

    #[test]
    fn cached_residual_matches_recomputed(seed in 0u64..10_000, frac in 0.05f64..0.95) {
        let inst = random_instance(seed, 30, 15, 4, 6, true);
        let lambda = frac * lambda_max(&inst.design, &inst.y, &inst.weights);
        let fit = fit_bcd(&inst.design, &inst.y, lambda, &inst.weights, &SolverConfig::default(), None).unwrap();
        let fresh = inst.design.residual(&inst.y, &fit.beta);
        // incremental updates drift only by accumulated rounding
        let scale = inst.y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        for (a, b) in fresh.iter().zip(&fit.total_residual) {
            prop_assert!((a - b).abs() < 1e-11 * scale);
        }
        let obj = reference_objective(&inst.design, &inst.y, &fit.beta, lambda, &inst.weights);
        prop_assert!((obj - fit.objective_value).abs() <= 1e-9 * obj.max(1.0));
    }

    #[test]
    fn weight_updates_stay_positive_and_bounded(
        raw in prop::collection::vec(0.0f64..1.0, 2..40),
        alpha in 0.01f64..0.999,
        scale in 0.1f64..10.0,
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let l = raw.len();
        let profile = SelectionProfile {
            frequencies: raw.iter().map(|v| v / total).collect(),
            reps: 100,
            skipped: 0,
            null_mode: NullMode::Gaussian,
            iteration: 0,
        };
        let weights: Vec<f64> = (0..l).map(|k| scale * (1.0 + k as f64)).collect();
        let next = update_weights(&weights, &profile, alpha).unwrap();
        for ((w, n), p) in weights.iter().zip(&next).zip(&profile.frequencies) {
            prop_assert!(*n > 0.0);
            let m = n / w;
            let d = p - 1.0 / l as f64;
            prop_assert!((m - weight_multiplier(d, alpha, l)).abs() < 1e-12);
            prop_assert!((*p > 1.0 / l as f64) == (m > 1.0) || d == 0.0);
        }
        let kl = kl_divergence(&profile.frequencies);
        prop_assert!(kl >= -1e-12 && kl <= (l as f64).ln() + 1e-12);
    }

    #[test]
    fn ranking_measures_are_monotone(
        perm_seed in 0u64..1000,
        l in 5usize..60,
        c in 1usize..5,
    ) {
        prop_assume!(c < l);
        // a fixed permutation of the groups as the ranking
        let mut order: Vec<usize> = (0..l).collect();
        let mut s = perm_seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in (1..l).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let ranks: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &g)| (g, i + 1)).collect();
        let truth = CausalTruth::new(vec![], (0..c).collect(), 0).unwrap();
        let mut prev_p = 0.0;
        let mut prev_rk: Option<usize> = None;
        for window in 1..=l {
            let sc = ranking_scores(&ranks, &truth, window, 100.0);
            prop_assert!(sc.p100 >= prev_p);
            if sc.p100 > 0.0 {
                prop_assert!(sc.r_score >= 1.0 - 1e-12);
                prop_assert!(prev_rk.is_none() || sc.r_k1 == prev_rk);
            } else {
                prop_assert_eq!(sc.r_score, 100.0);
            }
            prev_p = sc.p100;
            prev_rk = sc.r_k1;
        }
        prop_assert_eq!(prev_p, 1.0);
        let mut prev = 0.0;
        for z in 1..=l {
            let ch = chance_power(l, c, z);
            prop_assert!(ch >= prev - 1e-15 && ch <= 1.0);
            prev = ch;
        }
        let sims: Vec<Option<usize>> = (0..20).map(|k| if k % 3 == 0 { None } else { Some(1 + k % l) }).collect();
        let roc = roc_points(&sims, l, l);
        prop_assert!(roc.windows(2).all(|w| w[1].power >= w[0].power && w[1].fpr > w[0].fpr));
    }

    #[test]
    fn expansion_keeps_every_membership(
        groups in prop::collection::vec(prop::collection::btree_set(0usize..20, 1..8), 1..8)
    ) {
        let groups: Vec<Vec<usize>> = groups.into_iter().map(|g| g.into_iter().collect()).collect();
        let names = (0..groups.len()).map(|l| format!("G{l}")).collect();
        let model = PathwayModel::with_size_weights(names, groups.clone()).unwrap();
        let map = ExpansionMap::build(&model, 20).unwrap();
        prop_assert_eq!(map.total(), groups.iter().map(Vec::len).sum::<usize>());
        for (l, g) in groups.iter().enumerate() {
            let slots: Vec<usize> = map.block(l).map(|j| map.expanded_to_original()[j]).collect();
            prop_assert_eq!(&slots, g);
        }
    }
}
