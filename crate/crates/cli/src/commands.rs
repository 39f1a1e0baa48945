use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};

use pathlasso::ingestion::{self, GeneMapping};
use pathlasso::model::center;
use pathlasso::path::{fit_active, tune_lambda};
use pathlasso::ranking::{bootstrap_frequencies, BootstrapConfig};
use pathlasso::simulation::{
    self, calibrate_effects, causal_pathway_set, draw_causal_snps, run_study, simulate_phenotype,
    ScenarioSpec, StudyConfig, SyntheticGenotypeSpec, SyntheticPathwaySpec,
};
use pathlasso::weighting::{adapt_weights as adapt, NullMode, WeightAdaptConfig, WeightsFile};
use pathlasso::{
    expand_and_standardize, Error, ExpansionMap, GenotypeMatrix, PathwayModel, SolverConfig,
};

pub enum CliError {
    Usage(String),
    Data(Error),
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(e) if e.is_convergence() => 3,
            CliError::Data(Error::TooManyFailures { .. }) => 3,
            CliError::Data(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Convergence(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult = std::result::Result<(), CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Data(e.into()))?;
    writeln!(out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult {
    let mut out = create(path)?;
    f(&mut out).and_then(|_| out.flush()).map_err(io_err(path))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// `dir/name.json` → `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn require_file(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(io_err(path)(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "no such file",
        )))
    }
}

/// Load a pathway model and genotypes and put the model on the genotype
/// column indices.
fn load_model_and_geno(model: &Path, geno: &Path) -> Result<(PathwayModel, GenotypeMatrix), CliError> {
    require_file(model)?;
    require_file(geno)?;
    let m = ingestion::load_pathway_model(model)?;
    let g = ingestion::load_genotypes(geno)?;
    let m = if m.snp_ids().is_some() {
        m.align_to(g.snp_ids())?
    } else {
        m.validate_indices(g.n_snps())?;
        m
    };
    Ok((m, g))
}

fn load_pheno(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    require_file(path)?;
    let y = ingestion::load_phenotype(path)?;
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} phenotypes for {n} genotyped individuals",
            y.len()
        ))
        .into());
    }
    Ok(y)
}

fn load_weights(path: Option<&Path>, model: &PathwayModel) -> Result<Vec<f64>, CliError> {
    match path {
        None => Ok(model.weights().to_vec()),
        Some(p) => {
            require_file(p)?;
            let file = File::open(p).map_err(io_err(p))?;
            let w: WeightsFile = serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| CliError::Data(e.into()))?;
            Ok(w.ordered(model.group_names())?)
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MapArgs {
    /// SNP locations: snp_id, chrom, pos
    #[arg(long)]
    pub snps: PathBuf,
    /// Gene locations: gene_id, chrom, start, end
    #[arg(long)]
    pub genes: PathBuf,
    /// Gene sets in GMT format
    #[arg(long)]
    pub gmt: PathBuf,
    /// Base pairs either side of a gene
    #[arg(long, default_value_t = ingestion::DEFAULT_WINDOW_BP)]
    pub window: u64,
    /// Pathways with fewer mapped SNPs are dropped
    #[arg(long, default_value_t = ingestion::DEFAULT_MIN_SNPS)]
    pub min_snps: usize,
    /// Pathway model JSON
    #[arg(short, long)]
    pub output: PathBuf,
    /// Mapping report JSON (default: next to the model)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn map(a: &MapArgs) -> CliResult {
    for p in [&a.snps, &a.genes, &a.gmt] {
        require_file(p)?;
    }
    let (snps, genes, sets) = ingestion::load_mapping_inputs(&a.snps, &a.genes, &a.gmt)?;
    let mapping: GeneMapping = ingestion::map_snps_to_genes(&snps, &genes, a.window);
    log::info!(
        "{} of {} SNPs map to {} genes",
        snps.len() - mapping.unmapped_snps,
        snps.len(),
        mapping.gene_to_snps.len()
    );
    let (model, report) = ingestion::build_pathway_model(&mapping, &sets, &snps, a.min_snps)?;
    log::info!("{} pathways kept", model.n_groups());
    write_json(&a.output, &model)?;
    let report_path = a.report.clone().unwrap_or_else(|| sibling(&a.output, "report.json"));
    write_json(&report_path, &json!({ "config": a, "report": report }))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Individuals
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// SNPs
    #[arg(long, default_value_t = 1000)]
    pub p: usize,
    #[arg(long, default_value_t = 0.1)]
    pub maf_low: f64,
    #[arg(long, default_value_t = 0.5)]
    pub maf_high: f64,
    /// SNPs per LD block (0 = independent SNPs)
    #[arg(long, default_value_t = 0)]
    pub ld_block: usize,
    /// Latent correlation within an LD block
    #[arg(long, default_value_t = 0.0)]
    pub ld_rho: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Genotype TSV
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write this many synthetic pathways
    #[arg(long, default_value_t = 0)]
    pub pathways: usize,
    #[arg(long, default_value_t = 10)]
    pub min_size: usize,
    #[arg(long, default_value_t = 100)]
    pub max_size: usize,
    #[arg(long, default_value_t = 5)]
    pub snps_per_gene: usize,
    /// Pathway model JSON (required with --pathways)
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Simulate a phenotype under this scenario (a-f); needs --pathways
    #[arg(long)]
    pub scenario: Option<String>,
    /// Multiply the scenario effect size
    #[arg(long, default_value_t = 1.0)]
    pub delta_scale: f64,
    #[arg(long, default_value_t = simulation::DEFAULT_SIGMA_EPS)]
    pub sigma_eps: f64,
    /// Phenotype output (required with --scenario)
    #[arg(long)]
    pub pheno_out: Option<PathBuf>,
    /// Run report JSON (default: next to the genotypes)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn synth(a: &SynthArgs) -> CliResult {
    if a.pathways > 0 && a.model_out.is_none() {
        return Err(CliError::Usage("--pathways needs --model-out".into()));
    }
    if a.scenario.is_some() && (a.pathways == 0 || a.pheno_out.is_none()) {
        return Err(CliError::Usage("--scenario needs --pathways and --pheno-out".into()));
    }
    let spec = SyntheticGenotypeSpec {
        n: a.n,
        p: a.p,
        maf_low: a.maf_low,
        maf_high: a.maf_high,
        ld_block_size: a.ld_block,
        ld_rho: a.ld_rho,
        seed: a.seed,
    };
    let geno = simulation::synth_genotypes(&spec)?;
    write_with(&a.output, |w| ingestion::write_genotypes(&geno, w))?;
    let mut report = json!({
        "config": a,
        "individuals": geno.n_individuals(),
        "snps": geno.n_snps(),
        "mean_maf": geno.maf().iter().sum::<f64>() / geno.n_snps() as f64,
    });
    if a.pathways > 0 {
        let pspec = SyntheticPathwaySpec {
            n_pathways: a.pathways,
            min_size: a.min_size,
            max_size: a.max_size,
            snps_per_gene: a.snps_per_gene,
            seed: a.seed,
        };
        let model = simulation::synth_pathways(geno.snp_ids(), &pspec)?;
        write_json(a.model_out.as_ref().expect("checked"), &model)?;
        report["pathway_sizes"] = json!(model.sizes());
        if let Some(label) = &a.scenario {
            let scenario = ScenarioSpec::standard(label)?.scaled(a.delta_scale);
            scenario.validate()?;
            let mut rng = pathlasso::rng::stream(a.seed, &[pathlasso::rng::domain::CAUSAL]);
            let (causal, phi) = draw_causal_snps(&model, &scenario, &mut rng)?;
            let effects = calibrate_effects(&geno, &causal, scenario.delta, a.sigma_eps)?;
            let mut noise = pathlasso::rng::stream(a.seed, &[pathlasso::rng::domain::NOISE]);
            let y = simulate_phenotype(&geno, &effects, &mut noise)?;
            write_with(a.pheno_out.as_ref().expect("checked"), |w| ingestion::write_phenotype(&y, w))?;
            let names = |v: &[usize]| -> Vec<String> { v.iter().map(|&l| model.group_names()[l].clone()).collect() };
            report["truth"] = json!({
                "scenario": scenario,
                "seed_pathway": model.group_names()[phi],
                "causal_pathways": names(&causal_pathway_set(&causal, &model)),
                "causal_snps": causal.iter().map(|&k| geno.snp_ids()[k].clone()).collect::<Vec<_>>(),
                "effects": effects,
            });
        }
    }
    let report_path = a.report.clone().unwrap_or_else(|| sibling(&a.output, "report.json"));
    write_json(&report_path, &report)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AdaptArgs {
    /// Pathway model JSON
    #[arg(long)]
    pub model: PathBuf,
    /// Genotype TSV
    #[arg(long)]
    pub geno: PathBuf,
    /// Phenotype, required for permutation nulls
    #[arg(long)]
    pub pheno: Option<PathBuf>,
    /// Largest per-iteration down-weighting factor
    #[arg(long, default_value_t = 0.98)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Null replicates per iteration
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// Null responses: gaussian or permute
    #[arg(long, default_value = "gaussian")]
    pub null: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weights JSON
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn adapt_weights(a: &AdaptArgs) -> CliResult {
    let null_mode: NullMode = a.null.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    if null_mode == NullMode::Permute && a.pheno.is_none() {
        return Err(CliError::Usage("--null permute needs --pheno".into()));
    }
    let (model, geno) = load_model_and_geno(&a.model, &a.geno)?;
    let y = match &a.pheno {
        Some(p) => Some(load_pheno(p, geno.n_individuals())?),
        None => None,
    };
    let map = ExpansionMap::build(&model, geno.n_snps())?;
    let placeholder = vec![0.0; geno.n_individuals()];
    let (design, _) = expand_and_standardize(&geno, &map, y.as_deref().unwrap_or(&placeholder))?;
    let config = WeightAdaptConfig {
        weight_alpha: a.alpha,
        iterations: a.iterations,
        reps: a.reps,
        seed: a.seed,
        null_mode,
    };
    let result = adapt(&design, model.weights(), &config, &SolverConfig::default(), y.as_deref())?;
    let frequencies: Vec<&Vec<f64>> = result.profiles.iter().map(|p| &p.frequencies).collect();
    let metadata = json!({
        "config": a,
        "seed": a.seed,
        "divergence_trace": result.divergence_trace,
        "initial_weights": WeightsFile::new(model.group_names(), model.weights(), Value::Null).weights,
        "selection_frequencies": frequencies,
        "skipped_replicates": result.profiles.iter().map(|p| p.skipped).collect::<Vec<_>>(),
    });
    write_json(&a.output, &WeightsFile::new(model.group_names(), &result.weights, metadata))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub geno: PathBuf,
    #[arg(long)]
    pub pheno: PathBuf,
    /// Weights JSON (default: the model's weights)
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Fit at this penalty instead of tuning it
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum number of selected pathways when tuning
    #[arg(long, default_value_t = 10)]
    pub mmin: usize,
    /// Coefficient JSON
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct Coefficient<'a> {
    slot: usize,
    pathway: &'a str,
    snp_id: &'a str,
    value: f64,
}

pub fn fit(a: &FitArgs) -> CliResult {
    let (model, geno) = load_model_and_geno(&a.model, &a.geno)?;
    let y = load_pheno(&a.pheno, geno.n_individuals())?;
    let weights = load_weights(a.weights.as_deref(), &model)?;
    let map = ExpansionMap::build(&model, geno.n_snps())?;
    let (design, yc) = expand_and_standardize(&geno, &map, &y)?;
    let solver = SolverConfig::default();
    let (state, lambda_max, search_steps) = match a.lambda {
        Some(l) => {
            let state = fit_active(&design, &yc, l, &weights, &solver)?;
            (state, pathlasso::lambda_max(&design, &yc, &weights), 0)
        }
        None => {
            let t = tune_lambda(&design, &yc, &weights, a.mmin, &solver)?;
            (t.fit, t.lambda_max, t.search_steps)
        }
    };
    let norms = state.fit.block_norms(&design);
    let expanded = map.expanded_to_original();
    let mut owner = vec![0usize; design.n_cols()];
    for l in 0..design.n_blocks() {
        design.block(l).for_each(|j| owner[j] = l);
    }
    let coefficients: Vec<Coefficient> = state
        .fit
        .beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, &value)| Coefficient {
            slot: j,
            pathway: &model.group_names()[owner[j]],
            snp_id: &geno.snp_ids()[expanded[j]],
            value,
        })
        .collect();
    let pathways: Vec<Value> = (0..model.n_groups())
        .map(|l| json!({"name": model.group_names()[l], "weight": weights[l], "norm": norms[l]}))
        .collect();
    let selected: Vec<&String> = state.fit.selected(&design).iter().map(|&l| &model.group_names()[l]).collect();
    write_json(
        &a.output,
        &json!({
            "config": a,
            "lambda": state.lambda,
            "lambda_max": lambda_max,
            "search_steps": search_steps,
            "active_set_rounds": state.expansions_done,
            "selected": selected,
            "pathways": pathways,
            "coefficients": coefficients,
            "coefficient_scale": "standardized columns",
            "objective": state.fit.objective_value,
            "sweeps": state.fit.sweeps_done,
            "converged": state.fit.converged,
        }),
    )?;
    if state.fit.converged {
        Ok(())
    } else {
        Err(CliError::Convergence(format!(
            "solver stopped after {} sweeps without converging",
            state.fit.sweeps_done
        )))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub geno: PathBuf,
    #[arg(long)]
    pub pheno: PathBuf,
    /// Weights JSON (default: the model's weights)
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Bootstrap subsamples
    #[arg(short = 'B', long = "reps", default_value_t = 100)]
    pub reps: usize,
    /// Pathways each subsample fit must select
    #[arg(long, default_value_t = 10)]
    pub mmin: usize,
    /// Rows per subsample (default: half the individuals)
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Draw subsample rows without replacement
    #[arg(long)]
    pub without_replacement: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ranking report JSON
    #[arg(short, long)]
    pub output: PathBuf,
    /// Two-column ranking TSV (default: next to the report)
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

pub fn rank(a: &RankArgs) -> CliResult {
    let (model, geno) = load_model_and_geno(&a.model, &a.geno)?;
    let y = load_pheno(&a.pheno, geno.n_individuals())?;
    let weights = load_weights(a.weights.as_deref(), &model)?;
    let config = BootstrapConfig {
        b_reps: a.reps,
        subsample_size: a.subsample,
        with_replacement: !a.without_replacement,
        m_min: a.mmin,
        seed: a.seed,
    };
    let report = bootstrap_frequencies(&geno, &model, &y, &weights, &config, &SolverConfig::default())?;
    log::info!("{} of {} pathways ranked", report.order.len(), model.n_groups());
    write_json(&a.output, &json!({"config": a, "seed": a.seed, "ranking": report}))?;
    let tsv = a.tsv.clone().unwrap_or_else(|| sibling(&a.output, "tsv"));
    write_with(&tsv, |w| report.write_tsv(w))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StudyArgs {
    /// Scenario label, a to f
    #[arg(long, default_value = "a")]
    pub scenario: String,
    /// Multiply the scenario effect size
    #[arg(long, default_value_t = 1.0)]
    pub delta_scale: f64,
    #[arg(long, default_value_t = simulation::DEFAULT_SIGMA_EPS)]
    pub sigma_eps: f64,
    #[arg(long, default_value_t = 50)]
    pub sims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(short, long)]
    pub output: PathBuf,
    /// Pathway model JSON (default: synthetic pathways)
    #[arg(long, requires = "geno")]
    pub model: Option<PathBuf>,
    /// Genotype TSV (default: synthetic genotypes)
    #[arg(long, requires = "model")]
    pub geno: Option<PathBuf>,
    /// Weights JSON; otherwise size weights, or adapted ones with --adapt
    #[arg(long, conflicts_with = "adapt")]
    pub weights: Option<PathBuf>,
    /// Adapt weights on the study genotypes before simulating
    #[arg(long)]
    pub adapt: bool,
    #[arg(long, default_value_t = 0.98)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Null replicates per adaptation iteration
    #[arg(long, default_value_t = 500)]
    pub null_reps: usize,
    /// Bootstrap subsamples per simulation
    #[arg(short = 'B', long = "reps", default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 10)]
    pub mmin: usize,
    /// Synthetic data: individuals
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Synthetic data: SNPs
    #[arg(long, default_value_t = 1500)]
    pub snps: usize,
    /// Synthetic data: pathways
    #[arg(long, default_value_t = 30)]
    pub pathways: usize,
    #[arg(long, default_value_t = 10)]
    pub min_size: usize,
    #[arg(long, default_value_t = 100)]
    pub max_size: usize,
    #[arg(long, default_value_t = 5)]
    pub snps_per_gene: usize,
    #[arg(long, default_value_t = 10)]
    pub ld_block: usize,
    #[arg(long, default_value_t = 0.5)]
    pub ld_rho: f64,
}

pub fn study(a: &StudyArgs) -> CliResult {
    let scenario = ScenarioSpec::standard(&a.scenario)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .scaled(a.delta_scale);
    let (model, geno) = match (&a.model, &a.geno) {
        (Some(m), Some(g)) => load_model_and_geno(m, g)?,
        _ => {
            let geno = simulation::synth_genotypes(&SyntheticGenotypeSpec {
                n: a.n,
                p: a.snps,
                ld_block_size: a.ld_block,
                ld_rho: a.ld_rho,
                seed: a.seed,
                ..Default::default()
            })?;
            let model = simulation::synth_pathways(
                geno.snp_ids(),
                &SyntheticPathwaySpec {
                    n_pathways: a.pathways,
                    min_size: a.min_size,
                    max_size: a.max_size,
                    snps_per_gene: a.snps_per_gene,
                    seed: a.seed,
                },
            )?;
            (model, geno)
        }
    };
    let solver = SolverConfig::default();
    let weights = if a.adapt {
        let map = ExpansionMap::build(&model, geno.n_snps())?;
        let (design, _) = expand_and_standardize(&geno, &map, &center(&vec![0.0; geno.n_individuals()]).0)?;
        let config = WeightAdaptConfig {
            weight_alpha: a.alpha,
            iterations: a.iterations,
            reps: a.null_reps,
            seed: a.seed,
            null_mode: NullMode::Gaussian,
        };
        let r = adapt(&design, model.weights(), &config, &solver, None)?;
        log::info!("weight adaptation: D {:?}", r.divergence_trace);
        r.weights
    } else {
        load_weights(a.weights.as_deref(), &model)?
    };
    let mut config = StudyConfig::new(scenario, a.sims, a.seed);
    config.sigma_eps = a.sigma_eps;
    config.bootstrap = BootstrapConfig {
        b_reps: a.reps,
        m_min: a.mmin,
        ..Default::default()
    };
    let report = run_study(&geno, &model, &weights, &config, &solver)?;
    log::info!(
        "ROC power at fpr {}: {:.3} (chance {:.3})",
        config.fpr,
        report.power_at_fpr,
        report.chance_power
    );
    let run = json!({"config": a, "seed": a.seed, "weights": WeightsFile::new(model.group_names(), &weights, Value::Null).weights});
    report.write_dir(&a.output, Some(&run))?;
    log::info!("wrote {}", a.output.display());
    Ok(())
}
