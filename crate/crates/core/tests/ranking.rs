mod support;

use pathlasso::ranking::rank_order;
use pathlasso::{
    adapt_weights, bootstrap_frequencies, expand_and_standardize, BootstrapConfig, ExpansionMap, GenotypeMatrix,
    PathwayModel, SolverConfig, WeightAdaptConfig,
};
use rand_distr::{Distribution, StandardNormal};
use support::{random_genotypes, rng};

/// 50 disjoint pathways of 4 to 12 SNPs.
fn fixture(n: usize) -> (GenotypeMatrix, PathwayModel) {
    let sizes: Vec<usize> = (0..50).map(|l| 4 + (l * 7) % 9).collect();
    let p: usize = sizes.iter().sum();
    let geno = random_genotypes(&mut rng(31), n, p);
    let mut next = 0;
    let groups = sizes
        .iter()
        .map(|&s| {
            next += s;
            (next - s..next).collect()
        })
        .collect();
    let names = (0..50).map(|l| format!("P{l:02}")).collect();
    (geno, PathwayModel::with_size_weights(names, groups).unwrap())
}

#[test]
fn null_response_spreads_selection_over_pathways() {
    let (geno, model) = fixture(200);
    let map = ExpansionMap::build(&model, geno.n_snps()).unwrap();
    let (design, _) = expand_and_standardize(&geno, &map, &vec![0.0; 200]).unwrap();
    let solver = SolverConfig::default();
    let adapt_cfg = WeightAdaptConfig {
        reps: 200,
        iterations: 3,
        seed: 1,
        ..Default::default()
    };
    let weights = adapt_weights(&design, model.weights(), &adapt_cfg, &solver, None).unwrap().weights;
    let mut r = rng(77);
    let y: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut r)).collect();
    let cfg = BootstrapConfig {
        b_reps: 100,
        m_min: 10,
        seed: 4,
        ..Default::default()
    };
    let report = bootstrap_frequencies(&geno, &model, &y, &weights, &cfg, &solver).unwrap();
    let max = report.frequencies.iter().copied().fold(0.0, f64::max);
    assert!(max < 0.6, "max frequency {max}");
    // selections are spread: most pathways are picked at least once
    assert!(report.order.len() >= 40, "{} ranked", report.order.len());
}

#[test]
fn strong_signal_pathway_is_always_selected_and_ranked_first() {
    let (geno, model) = fixture(200);
    let causal = model.group(17).to_vec();
    let mut r = rng(12);
    let y: Vec<f64> = (0..200)
        .map(|i| {
            let g: f64 = causal.iter().map(|&k| geno.values()[[i, k]] as f64).sum();
            let e: f64 = StandardNormal.sample(&mut r);
            g + 0.5 * e
        })
        .collect();
    let cfg = BootstrapConfig {
        b_reps: 30,
        m_min: 10,
        seed: 2,
        ..Default::default()
    };
    let report = bootstrap_frequencies(&geno, &model, &y, model.weights(), &cfg, &SolverConfig::default()).unwrap();
    assert_eq!(report.frequencies[17], 1.0);
    assert_eq!(report.rank_of(17), Some(1));
}

#[test]
fn seeded_bootstrap_is_reproducible() {
    let (geno, model) = fixture(120);
    let mut r = rng(3);
    let y: Vec<f64> = (0..120).map(|_| StandardNormal.sample(&mut r)).collect();
    let cfg = BootstrapConfig {
        b_reps: 2,
        m_min: 5,
        seed: 8,
        ..Default::default()
    };
    let solver = SolverConfig::default();
    let a = bootstrap_frequencies(&geno, &model, &y, model.weights(), &cfg, &solver).unwrap();
    let b = bootstrap_frequencies(&geno, &model, &y, model.weights(), &cfg, &solver).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.per_rep_lambda.len(), 2);
    assert!(a.per_rep_selected.iter().all(|&m| m >= 5));
}

#[test]
fn ranking_examples() {
    let names: Vec<String> = ["g1", "g2", "g3"].iter().map(|s| s.to_string()).collect();
    assert_eq!(rank_order(&[0.9, 0.2, 0.0], &[0.0; 3], &names), vec![0, 1]);
    assert_eq!(rank_order(&[0.5, 0.5], &[1.2, 0.3], &names[..2]), vec![0, 1]);
    assert!(rank_order(&[0.0, 0.0], &[1.0, 2.0], &names[..2]).is_empty());
}
