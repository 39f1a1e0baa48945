mod support;

use pathlasso::simulation::{
    calibrate_effects, draw_causal_snps, simulate_phenotype, synth_genotypes, synth_pathways, zeta_for, Placement,
    SyntheticPathwaySpec,
};
use pathlasso::{run_study, GenotypeMatrix, PathwayModel, ScenarioSpec, SolverConfig, StudyConfig, SyntheticGenotypeSpec};
use support::{population_sample, rng};

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn ld_blocks_are_correlated_and_free_snps_are_not() {
    let n = 2000;
    let ld = synth_genotypes(&SyntheticGenotypeSpec {
        n,
        p: 30,
        ld_block_size: 10,
        ld_rho: 0.9,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let mut total = 0.0;
    let mut pairs = 0;
    for b in 0..3 {
        for j in 10 * b..10 * b + 10 {
            for k in j + 1..10 * b + 10 {
                total += correlation(&ld.column_f64(j), &ld.column_f64(k)).abs();
                pairs += 1;
            }
        }
    }
    assert!(total / pairs as f64 > 0.5, "mean within-block |r| = {}", total / pairs as f64);

    let free = synth_genotypes(&SyntheticGenotypeSpec {
        n,
        p: 20,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let bound = 4.0 / (n as f64).sqrt();
    for j in 0..20 {
        for k in j + 1..20 {
            assert!(correlation(&free.column_f64(j), &free.column_f64(k)).abs() < bound);
        }
    }
}

#[test]
fn effect_calibration_holds_on_a_fresh_million_individuals() {
    let mafs = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.48, 0.12];
    let causal: Vec<usize> = (0..mafs.len()).collect();
    let n = 1_000_000;
    let calibration = population_sample(&mafs, n, 1);
    let fresh = population_sample(&mafs, n, 2);
    for delta in [0.005, 0.001] {
        let effects = calibrate_effects(&calibration, &causal, delta, 0.2).unwrap();
        let y = simulate_phenotype(&fresh, &effects, &mut rng(3)).unwrap();
        let mean_y = y.iter().sum::<f64>() / n as f64;
        for (k, &z) in effects.zeta.iter().enumerate() {
            let mean_w = z * fresh.values().column(k).iter().map(|&v| v as f64).sum::<f64>() / n as f64;
            let ratio = mean_w / mean_y;
            assert!((ratio / delta - 1.0).abs() < 0.01, "delta {delta}, SNP {k}: {ratio}");
        }
    }
    assert!((zeta_for(0.005, 0.5, 10) - 0.005 / (0.5 * 0.95)).abs() < 1e-15);
}

#[test]
fn scenario_a_calibration_on_desk_sized_samples() {
    let geno = synth_genotypes(&SyntheticGenotypeSpec {
        n: 743,
        p: 600,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let model = synth_pathways(geno.snp_ids(), &SyntheticPathwaySpec::default()).unwrap();
    let scenario = ScenarioSpec::standard("a").unwrap();
    let mut r = rng(5);
    let mut total = 0.0;
    let reps = 200;
    for _ in 0..reps {
        let (causal, _) = draw_causal_snps(&model, &scenario, &mut r).unwrap();
        let effects = calibrate_effects(&geno, &causal, scenario.delta, 0.2).unwrap();
        let y = simulate_phenotype(&geno, &effects, &mut r).unwrap();
        let mean_y = y.iter().sum::<f64>() / y.len() as f64;
        let mut per_snp = 0.0;
        for (&k, &z) in causal.iter().zip(&effects.zeta) {
            per_snp += z * geno.mean_count(k) / mean_y;
        }
        total += per_snp / causal.len() as f64;
    }
    let mean = total / reps as f64;
    assert!((mean / 0.005 - 1.0).abs() < 0.15, "{mean}");
}

#[test]
fn single_gene_draws_stay_inside_one_gene() {
    let geno = synth_genotypes(&SyntheticGenotypeSpec {
        n: 50,
        p: 200,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let model = synth_pathways(geno.snp_ids(), &SyntheticPathwaySpec {
        n_pathways: 10,
        snps_per_gene: 4,
        ..Default::default()
    })
    .unwrap();
    let scenario = ScenarioSpec::standard("c").unwrap();
    assert_eq!(scenario.placement, Placement::SingleGene);
    let mut r = rng(9);
    for _ in 0..50 {
        let (causal, phi) = draw_causal_snps(&model, &scenario, &mut r).unwrap();
        assert!(causal.iter().all(|s| model.group(phi).contains(s)));
        let gene = causal[0] / 4;
        assert!(causal.iter().all(|s| s / 4 == gene));
        assert_eq!(causal.len(), scenario.s_count.min(4));
    }
}

/// Fifty disjoint pathways of 4 to 12 SNPs.
fn disjoint_fixture(n: usize, seed: u64) -> (GenotypeMatrix, PathwayModel) {
    let sizes: Vec<usize> = (0..50).map(|l| 4 + (l * 5) % 9).collect();
    let p = sizes.iter().sum();
    let geno = synth_genotypes(&SyntheticGenotypeSpec {
        n,
        p,
        seed,
        ..Default::default()
    })
    .unwrap();
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
fn null_study_power_is_at_chance() {
    let (geno, model) = disjoint_fixture(150, 6);
    let scenario = ScenarioSpec {
        label: "null".into(),
        s_count: 3,
        delta: 0.0,
        placement: Placement::RandomInPathway,
    };
    let mut config = StudyConfig::new(scenario, 100, 13);
    config.bootstrap.b_reps = 10;
    let report = run_study(&geno, &model, model.weights(), &config, &SolverConfig::default()).unwrap();
    assert!(report.failures.is_empty());
    assert_eq!(report.causal_count_histogram.keys().copied().collect::<Vec<_>>(), vec![1]);
    // disjoint pathways: one causal pathway, so chance is z / L
    let z = pathlasso::metrics::z_at_fpr(0.05, 50);
    assert!((report.chance_power - z as f64 / 50.0).abs() < 1e-12);
    let sd = (report.chance_power * (1.0 - report.chance_power) / 100.0).sqrt();
    assert!(
        (report.power_at_fpr - report.chance_power).abs() < 3.0 * sd,
        "power {} vs chance {}",
        report.power_at_fpr,
        report.chance_power
    );
    let mut max_freq: Vec<f64> = report.records.iter().map(|r| r.max_frequency).collect();
    max_freq.sort_by(|a, b| a.total_cmp(b));
    assert!(max_freq[50] <= 0.8, "median max frequency {}", max_freq[50]);
}

#[test]
fn one_simulation_study_is_reproducible() {
    let (geno, model) = disjoint_fixture(120, 3);
    let mut config = StudyConfig::new(ScenarioSpec::standard("b").unwrap().scaled(5.0), 1, 21);
    config.bootstrap.b_reps = 5;
    let solver = SolverConfig::default();
    let a = run_study(&geno, &model, model.weights(), &config, &solver).unwrap();
    let b = run_study(&geno, &model, model.weights(), &config, &solver).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let dir = tempfile::tempdir().unwrap();
    a.write_dir(dir.path(), None).unwrap();
    let first = std::fs::read(dir.path().join("report.json")).unwrap();
    b.write_dir(dir.path(), None).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("report.json")).unwrap());
}
