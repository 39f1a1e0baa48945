//! Synthetic genotypes and pathways, the additive quantitative-trait model
//! with calibrated effect sizes, and the Monte-Carlo study driver.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{Error, Result};
use crate::metrics::{self, CausalTruth, RankingScores, RocPoint};
use crate::model::{GenotypeMatrix, PathwayModel};
use crate::ranking::{bootstrap_frequencies, BootstrapConfig};
use crate::rng::{domain, stream};
use crate::solver::SolverConfig;

const MAX_GROUP_REDRAWS: usize = 100;
const MAX_BLOCK_REDRAWS: usize = 1000;
/// A study fails when more than this fraction of simulations fail.
const MAX_FAILED_SIMS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    RandomInPathway,
    SingleGene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub label: String,
    pub s_count: usize,
    pub delta: f64,
    pub placement: Placement,
}

impl ScenarioSpec {
    /// The six standard scenarios, `a` to `f`.
    pub fn standard(label: &str) -> Result<Self> {
        use Placement::*;
        let (s_count, delta, placement) = match label {
            "a" => (10, 0.005, RandomInPathway),
            "b" => (3, 0.005, RandomInPathway),
            "c" => (3, 0.005, SingleGene),
            "d" => (10, 0.001, RandomInPathway),
            "e" => (3, 0.001, RandomInPathway),
            "f" => (3, 0.001, SingleGene),
            other => return Err(Error::invalid(format!("unknown scenario {other:?}; expected a to f"))),
        };
        Ok(Self {
            label: label.to_string(),
            s_count,
            delta,
            placement,
        })
    }

    /// Same scenario with the effect size multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            delta: self.delta * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_count < 1 {
            return Err(Error::invalid("a scenario needs at least one causal SNP"));
        }
        if !(self.delta >= 0.0) || self.s_count as f64 * self.delta >= 1.0 {
            return Err(Error::invalid(format!(
                "effect size {} with {} causal SNPs leaves no baseline (need S*delta < 1)",
                self.delta, self.s_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGenotypeSpec {
    pub n: usize,
    pub p: usize,
    pub maf_low: f64,
    pub maf_high: f64,
    /// SNPs per LD block; 0 makes every SNP independent.
    pub ld_block_size: usize,
    pub ld_rho: f64,
    pub seed: u64,
}

impl Default for SyntheticGenotypeSpec {
    fn default() -> Self {
        Self {
            n: 500,
            p: 1000,
            maf_low: 0.1,
            maf_high: 0.5,
            ld_block_size: 0,
            ld_rho: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticGenotypeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::invalid("synthetic genotypes need n >= 2 and p >= 1"));
        }
        if !(0.0 < self.maf_low && self.maf_low <= self.maf_high && self.maf_high <= 0.5) {
            return Err(Error::invalid("need 0 < maf_low <= maf_high <= 0.5"));
        }
        if !(0.0..1.0).contains(&self.ld_rho) {
            return Err(Error::invalid("ld_rho must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Allele counts for one LD block, column-major (`width` columns of `n`).
fn synth_block(spec: &SyntheticGenotypeSpec, block: usize, width: usize) -> Result<Vec<u8>> {
    let std_normal = StatNormal::standard();
    let rho = if spec.ld_block_size == 0 { 0.0 } else { spec.ld_rho };
    let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
    for attempt in 0..MAX_BLOCK_REDRAWS {
        let mut rng = stream(spec.seed, &[domain::GENOTYPES, block as u64, attempt as u64]);
        let thresholds: Vec<f64> = (0..width)
            .map(|_| std_normal.inverse_cdf(rng.random_range(spec.maf_low..=spec.maf_high)))
            .collect();
        let mut out = vec![0u8; spec.n * width];
        let mut z = vec![0.0; width];
        for i in 0..spec.n {
            for _hap in 0..2 {
                let u: f64 = StandardNormal.sample(&mut rng);
                for zj in z.iter_mut() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    *zj = shared * u + own * e;
                }
                for (j, (&zj, &t)) in z.iter().zip(&thresholds).enumerate() {
                    out[j * spec.n + i] += (zj < t) as u8;
                }
            }
        }
        let monomorphic = out.chunks(spec.n).any(|c| c.iter().all(|&v| v == c[0]));
        if !monomorphic {
            return Ok(out);
        }
    }
    Err(Error::invalid(format!(
        "could not draw a polymorphic LD block {block} in {MAX_BLOCK_REDRAWS} attempts"
    )))
}

/// Genotypes from thresholded latent Gaussians: within an LD block the
/// latent variables share pairwise correlation `ld_rho`, each haplotype
/// carries the minor allele when its latent value falls below the MAF
/// quantile, and a genotype sums two independent haplotypes. Blocks with a
/// constant column are redrawn.
pub fn synth_genotypes(spec: &SyntheticGenotypeSpec) -> Result<GenotypeMatrix> {
    spec.validate()?;
    let width = if spec.ld_block_size == 0 { 1 } else { spec.ld_block_size };
    let n_blocks = spec.p.div_ceil(width);
    let blocks: Vec<Vec<u8>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| synth_block(spec, b, width.min(spec.p - b * width)))
        .collect::<Result<_>>()?;
    let mut values = Array2::<u8>::zeros((spec.n, spec.p));
    for (b, data) in blocks.iter().enumerate() {
        for (k, col) in data.chunks(spec.n).enumerate() {
            values
                .column_mut(b * width + k)
                .iter_mut()
                .zip(col)
                .for_each(|(v, &c)| *v = c);
        }
    }
    let ids = (0..spec.p).map(|j| format!("snp{:05}", j + 1)).collect();
    Ok(GenotypeMatrix::from_counts_minor(values, ids)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPathwaySpec {
    pub n_pathways: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Consecutive SNPs forming one synthetic gene.
    pub snps_per_gene: usize,
    pub seed: u64,
}

impl Default for SyntheticPathwaySpec {
    fn default() -> Self {
        Self {
            n_pathways: 30,
            min_size: 10,
            max_size: 100,
            snps_per_gene: 5,
            seed: 0,
        }
    }
}

/// Genes are runs of `snps_per_gene` consecutive SNPs; each pathway draws
/// distinct random genes until it reaches a size drawn uniformly from
/// `[min_size, max_size]`. Shared genes make the pathways overlap.
pub fn synth_pathways(snp_ids: &[String], spec: &SyntheticPathwaySpec) -> Result<PathwayModel> {
    let p = snp_ids.len();
    if spec.n_pathways == 0 || spec.snps_per_gene == 0 || spec.min_size == 0 || spec.min_size > spec.max_size {
        return Err(Error::invalid("synthetic pathways need n_pathways, snps_per_gene >= 1 and 1 <= min_size <= max_size"));
    }
    if spec.max_size > p {
        return Err(Error::invalid(format!("max_size {} exceeds the {p} SNPs available", spec.max_size)));
    }
    let genes: Vec<Vec<usize>> = (0..p)
        .collect::<Vec<_>>()
        .chunks(spec.snps_per_gene)
        .map(<[usize]>::to_vec)
        .collect();
    let gene_names: Vec<String> = (0..genes.len()).map(|g| format!("GENE{:04}", g + 1)).collect();
    let width = (spec.n_pathways as f64).log10().floor() as usize + 1;
    let mut names = Vec::with_capacity(spec.n_pathways);
    let mut groups = Vec::with_capacity(spec.n_pathways);
    for l in 0..spec.n_pathways {
        let mut rng = stream(spec.seed, &[domain::PATHWAYS, l as u64]);
        let target = rng.random_range(spec.min_size..=spec.max_size);
        let mut order: Vec<usize> = (0..genes.len()).collect();
        order.shuffle(&mut rng);
        let mut snps = Vec::new();
        for g in order {
            if snps.len() >= target {
                break;
            }
            snps.extend_from_slice(&genes[g]);
        }
        snps.sort_unstable();
        names.push(format!("PATHWAY_{:0width$}", l + 1));
        groups.push(snps);
    }
    let gene_map: BTreeMap<String, Vec<usize>> = gene_names.into_iter().zip(genes).collect();
    PathwayModel::with_size_weights(names, groups)?
        .with_snp_ids(snp_ids.to_vec())?
        .with_genes(gene_map)
}

/// Annotated genes whose SNPs all lie inside `members` (sorted).
fn genes_within<'a>(pathways: &'a PathwayModel, members: &[usize]) -> Vec<&'a Vec<usize>> {
    pathways
        .genes()
        .map(|genes| {
            genes
                .values()
                .filter(|snps| !snps.is_empty() && snps.iter().all(|s| members.binary_search(s).is_ok()))
                .collect()
        })
        .unwrap_or_default()
}

/// Draw the seed pathway uniformly and its causal SNPs. Returns the sorted
/// causal SNP indices and the seed pathway.
pub fn draw_causal_snps(
    pathways: &PathwayModel,
    scenario: &ScenarioSpec,
    rng: &mut impl Rng,
) -> Result<(Vec<usize>, usize)> {
    if scenario.placement == Placement::SingleGene && pathways.genes().is_none() {
        return Err(Error::invalid("single-gene placement needs a gene annotation"));
    }
    for _ in 0..=MAX_GROUP_REDRAWS {
        let phi = rng.random_range(0..pathways.n_groups());
        let mut members = pathways.group(phi).to_vec();
        members.sort_unstable();
        let mut causal = match scenario.placement {
            Placement::RandomInPathway => {
                if members.len() < scenario.s_count {
                    continue;
                }
                members.choose_multiple(rng, scenario.s_count).copied().collect::<Vec<_>>()
            }
            Placement::SingleGene => {
                let genes = genes_within(pathways, &members);
                let Some(gene) = genes.choose(rng) else { continue };
                if gene.len() <= scenario.s_count {
                    gene.to_vec()
                } else {
                    gene.choose_multiple(rng, scenario.s_count).copied().collect()
                }
            }
        };
        causal.sort_unstable();
        return Ok((causal, phi));
    }
    Err(Error::invalid(format!(
        "no pathway could host {} causal SNPs after {MAX_GROUP_REDRAWS} redraws",
        scenario.s_count
    )))
}

/// Pathways containing every causal SNP.
pub fn causal_pathway_set(causal_snps: &[usize], pathways: &PathwayModel) -> Vec<usize> {
    (0..pathways.n_groups())
        .filter(|&l| {
            let g = pathways.group(l);
            causal_snps.iter().all(|s| g.contains(s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectModel {
    pub causal_snps: Vec<usize>,
    /// Per-minor-allele effect of each causal SNP.
    pub zeta: Vec<f64>,
    pub sigma_eps: f64,
    /// `E(w_k)/E(y)` implied by the sample allele means.
    pub realized_delta: Vec<f64>,
    /// `Var(w_k)/Var(y)` on the sample.
    pub realized_es: Vec<f64>,
    pub mean_zeta: f64,
}

pub const DEFAULT_SIGMA_EPS: f64 = 0.2;

/// `ζ_k = δ / (x̄_k (1 − Sδ))`, which gives every causal SNP the same
/// `E(w_k)/E(y) = δ` when the noise has mean one.
pub fn zeta_for(delta: f64, mean_count: f64, s_count: usize) -> f64 {
    delta / (mean_count * (1.0 - s_count as f64 * delta))
}

pub fn calibrate_effects(
    geno: &GenotypeMatrix,
    causal_snps: &[usize],
    delta: f64,
    sigma_eps: f64,
) -> Result<EffectModel> {
    let s = causal_snps.len();
    if s == 0 {
        return Err(Error::invalid("no causal SNPs"));
    }
    if !(delta >= 0.0) || s as f64 * delta >= 1.0 {
        return Err(Error::invalid(format!("S*delta = {} must be below 1", s as f64 * delta)));
    }
    if !(sigma_eps > 0.0) {
        return Err(Error::invalid("sigma_eps must be positive"));
    }
    if let Some(&bad) = causal_snps.iter().find(|&&k| k >= geno.n_snps()) {
        return Err(Error::invalid(format!("causal SNP index {bad} out of range")));
    }
    let zeta: Vec<f64> = causal_snps
        .iter()
        .map(|&k| zeta_for(delta, geno.mean_count(k), s))
        .collect();
    let mean_w: Vec<f64> = causal_snps.iter().zip(&zeta).map(|(&k, z)| z * geno.mean_count(k)).collect();
    let mean_y = mean_w.iter().sum::<f64>() + 1.0;
    let realized_delta = mean_w.iter().map(|w| w / mean_y).collect();

    let n = geno.n_individuals() as f64;
    let values = geno.values();
    let mut genetic = vec![0.0; geno.n_individuals()];
    let mut var_w = Vec::with_capacity(s);
    for (&k, &z) in causal_snps.iter().zip(&zeta) {
        let col = values.column(k);
        let m = geno.mean_count(k);
        var_w.push(z * z * col.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n);
        genetic.iter_mut().zip(col).for_each(|(g, &x)| *g += z * x as f64);
    }
    let g_mean = genetic.iter().sum::<f64>() / n;
    let var_y = genetic.iter().map(|g| (g - g_mean).powi(2)).sum::<f64>() / n + sigma_eps * sigma_eps;
    Ok(EffectModel {
        causal_snps: causal_snps.to_vec(),
        mean_zeta: zeta.iter().sum::<f64>() / s as f64,
        zeta,
        sigma_eps,
        realized_delta,
        realized_es: var_w.iter().map(|v| v / var_y).collect(),
    })
}

/// `y_i = Σ_k ζ_k x_ik + ε_i` with `ε_i ~ N(1, σ_ε²)`.
pub fn simulate_phenotype(geno: &GenotypeMatrix, effects: &EffectModel, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let noise = Normal::new(1.0, effects.sigma_eps).map_err(|e| Error::invalid(e.to_string()))?;
    let values = geno.values();
    let mut y: Vec<f64> = (0..geno.n_individuals()).map(|_| noise.sample(rng)).collect();
    for (&k, &z) in effects.causal_snps.iter().zip(&effects.zeta) {
        y.iter_mut().zip(values.column(k)).for_each(|(yi, &x)| *yi += z * x as f64);
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: ScenarioSpec,
    pub n_sims: usize,
    pub sigma_eps: f64,
    pub bootstrap: BootstrapConfig,
    pub seed: u64,
    /// Defaults to `min(100, L)`.
    pub window: Option<usize>,
    pub gamma: f64,
    pub fpr: f64,
}

impl StudyConfig {
    pub fn new(scenario: ScenarioSpec, n_sims: usize, seed: u64) -> Self {
        Self {
            scenario,
            n_sims,
            sigma_eps: DEFAULT_SIGMA_EPS,
            bootstrap: BootstrapConfig::default(),
            seed,
            window: None,
            gamma: metrics::DEFAULT_GAMMA,
            fpr: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub sim: usize,
    pub seed_pathway: usize,
    pub causal_snps: Vec<usize>,
    pub causal_pathways: Vec<usize>,
    pub n_causal_pathways: usize,
    pub scores: RankingScores,
    /// Bootstrap selection frequency of the seed pathway.
    pub seed_frequency: f64,
    pub max_frequency: f64,
    pub mean_zeta: f64,
    pub flagged_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFailure {
    pub sim: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub n_groups: usize,
    pub window: usize,
    pub records: Vec<SimRecord>,
    pub failures: Vec<SimFailure>,
    pub roc: Vec<RocPoint>,
    pub power_at_fpr: f64,
    /// Power expected from a uniformly random ranking at the same cut-off.
    pub chance_power: f64,
    pub median_p100: f64,
    pub fraction_p100_zero: f64,
    pub causal_count_histogram: BTreeMap<usize, usize>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn run_sim(
    sim: usize,
    geno: &GenotypeMatrix,
    pathways: &PathwayModel,
    weights: &[f64],
    config: &StudyConfig,
    solver: &SolverConfig,
    window: usize,
) -> Result<SimRecord> {
    let mut rng = stream(config.seed, &[domain::STUDY, sim as u64]);
    let (causal, phi) = draw_causal_snps(pathways, &config.scenario, &mut rng)?;
    let causal_pathways = causal_pathway_set(&causal, pathways);
    let effects = calibrate_effects(geno, &causal, config.scenario.delta, config.sigma_eps)?;
    let mut noise_rng = stream(config.seed, &[domain::NOISE, sim as u64]);
    let y = simulate_phenotype(geno, &effects, &mut noise_rng)?;
    let boot = BootstrapConfig {
        seed: rng.next_u64(),
        ..config.bootstrap.clone()
    };
    let report = bootstrap_frequencies(geno, pathways, &y, weights, &boot, solver)?;
    let truth = CausalTruth::new(causal.clone(), causal_pathways.clone(), phi)?;
    let scores = metrics::ranking_scores(&report.ranks(), &truth, window, config.gamma);
    Ok(SimRecord {
        sim,
        seed_pathway: phi,
        n_causal_pathways: causal_pathways.len(),
        causal_snps: causal,
        causal_pathways,
        scores,
        seed_frequency: report.frequencies[phi],
        max_frequency: report.frequencies.iter().copied().fold(0.0, f64::max),
        mean_zeta: effects.mean_zeta,
        flagged_reps: report.flagged.len(),
    })
}

/// Run `n_sims` independent simulations: draw a causal set, simulate a
/// phenotype, rank pathways by bootstrap, and score the ranking. Failed
/// simulations are recorded and excluded; more than 5% failing is an error.
pub fn run_study(
    geno: &GenotypeMatrix,
    pathways: &PathwayModel,
    weights: &[f64],
    config: &StudyConfig,
    solver: &SolverConfig,
) -> Result<StudyReport> {
    config.scenario.validate()?;
    if config.n_sims == 0 {
        return Err(Error::invalid("a study needs at least one simulation"));
    }
    pathways.validate_indices(geno.n_snps())?;
    let l = pathways.n_groups();
    let window = config.window.unwrap_or_else(|| metrics::default_window(l)).min(l);
    let outcomes: Vec<Result<SimRecord>> = (0..config.n_sims)
        .into_par_iter()
        .map(|sim| run_sim(sim, geno, pathways, weights, config, solver, window))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (sim, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("simulation {sim} failed: {e}");
                failures.push(SimFailure {
                    sim,
                    reason: e.to_string(),
                });
            }
        }
    }
    if failures.len() as f64 > MAX_FAILED_SIMS * config.n_sims as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: config.n_sims,
        });
    }
    let r_k1: Vec<Option<usize>> = records.iter().map(|r| r.scores.r_k1).collect();
    let z = metrics::z_at_fpr(config.fpr, l);
    let chance_power = records
        .iter()
        .map(|r| metrics::chance_power(l, r.n_causal_pathways, z))
        .sum::<f64>()
        / records.len().max(1) as f64;
    let mut causal_count_histogram = BTreeMap::new();
    for r in &records {
        *causal_count_histogram.entry(r.n_causal_pathways).or_insert(0) += 1;
    }
    let p100: Vec<f64> = records.iter().map(|r| r.scores.p100).collect();
    Ok(StudyReport {
        n_groups: l,
        window,
        roc: metrics::roc_points(&r_k1, l, window),
        power_at_fpr: metrics::power_at_fpr(&r_k1, l, config.fpr),
        chance_power,
        median_p100: median(p100.clone()),
        fraction_p100_zero: p100.iter().filter(|&&p| p == 0.0).count() as f64 / p100.len().max(1) as f64,
        causal_count_histogram,
        records,
        failures,
        config: config.clone(),
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Histogram counts over `edges`; the last bin is closed on the right.
fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let mut counts = vec![0; edges.len() - 1];
    for &v in values {
        let last = edges.len() - 2;
        if let Some(b) = (0..=last).find(|&b| v >= edges[b] && (v < edges[b + 1] || (b == last && v <= edges[b + 1]))) {
            counts[b] += 1;
        }
    }
    counts
}

impl StudyReport {
    /// Write `report.json` and the CSV exports into `dir`. `run`, when
    /// given, is stored under the `run` key of the JSON report.
    pub fn write_dir(&self, dir: &Path, run: Option<&serde_json::Value>) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let io = |e: std::io::Error| Error::io(dir, e);

        let mut json = create(dir, "report.json")?;
        let mut value = serde_json::to_value(self)?;
        if let (Some(run), Some(obj)) = (run, value.as_object_mut()) {
            obj.insert("run".into(), run.clone());
        }
        serde_json::to_writer_pretty(&mut json, &value)?;
        writeln!(json).map_err(io)?;
        json.flush().map_err(io)?;

        let mut roc = create(dir, "roc.csv")?;
        writeln!(roc, "z,fpr,power").map_err(io)?;
        for p in &self.roc {
            writeln!(roc, "{},{},{}", p.z, p.fpr, p.power).map_err(io)?;
        }
        roc.flush().map_err(io)?;

        let mut sims = create(dir, "sims.csv")?;
        writeln!(sims, "sim,seed_pathway,n_causal_pathways,r_k1,p100,r_score").map_err(io)?;
        for r in &self.records {
            let rk = r.scores.r_k1.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                sims,
                "{},{},{},{},{},{}",
                r.sim, r.seed_pathway, r.n_causal_pathways, rk, r.scores.p100, r.scores.r_score
            )
            .map_err(io)?;
        }
        sims.flush().map_err(io)?;

        let p100: Vec<f64> = self.records.iter().map(|r| r.scores.p100).collect();
        let edges: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let mut f = create(dir, "p100_hist.csv")?;
        writeln!(f, "lower,upper,count").map_err(io)?;
        for (b, c) in histogram(&p100, &edges).into_iter().enumerate() {
            writeln!(f, "{},{},{}", edges[b], edges[b + 1], c).map_err(io)?;
        }
        f.flush().map_err(io)?;

        let gamma = self.config.gamma;
        let rs: Vec<f64> = self.records.iter().map(|r| r.scores.r_score).collect();
        let mut edges: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        edges.push(gamma);
        let mut f = create(dir, "r_hist.csv")?;
        writeln!(f, "lower,upper,count").map_err(io)?;
        for (b, c) in histogram(&rs, &edges).into_iter().enumerate() {
            writeln!(f, "{},{},{}", edges[b], edges[b + 1], c).map_err(io)?;
        }
        f.flush().map_err(io)?;

        let mut f = create(dir, "causal_pathways.csv")?;
        writeln!(f, "n_causal_pathways,sims").map_err(io)?;
        for (k, c) in &self.causal_count_histogram {
            writeln!(f, "{k},{c}").map_err(io)?;
        }
        f.flush().map_err(io)?;
        Ok(())
    }
}
