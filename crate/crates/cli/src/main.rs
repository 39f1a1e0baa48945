mod commands;
mod config_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use commands::{AdaptArgs, FitArgs, MapArgs, RankArgs, StudyArgs, SynthArgs};

/// Pathway group lasso: map SNPs to pathways, adapt group weights, fit,
/// rank pathways by bootstrap and run simulation studies.
#[derive(Debug, Parser)]
#[command(name = "pathlasso", version, args_override_self = true)]
struct Cli {
    /// File of `key = value` lines supplying any long flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Only log errors
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map SNPs to genes and gene sets to a pathway model
    Map(MapArgs),
    /// Write synthetic genotypes, and optionally pathways and a phenotype
    Synth(SynthArgs),
    /// Adapt group weights so null selection is close to uniform
    AdaptWeights(AdaptArgs),
    /// Fit the group lasso at a given or tuned penalty
    Fit(FitArgs),
    /// Rank pathways by bootstrap selection frequency
    Rank(RankArgs),
    /// Monte-Carlo power study for one scenario
    Study(StudyArgs),
}

const EXIT_USAGE: u8 = 1;

fn parse_args() -> Result<Cli, ExitCode> {
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config_file::find_config_path(&args) {
        let entries = std::fs::read_to_string(&path)
            .map_err(|e| config_file::ConfigError(format!("cannot read {}: {e}", path.display())))
            .and_then(|text| config_file::parse(&text, &path));
        let merged = entries.and_then(|e| config_file::merge(args.clone(), &e, &Cli::command()));
        match merged {
            Ok(m) => args = m,
            Err(config_file::ConfigError(msg)) => {
                eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
                return Err(ExitCode::from(EXIT_USAGE));
            }
        }
    }
    Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
        let _ = e.print();
        ExitCode::from(code)
    })
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(c) => c,
        Err(code) => return code,
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Info
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("PATHLASSO_LOG")
        .format_timestamp(None)
        .init();

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Map(a) => commands::map(a),
        Command::Synth(a) => commands::synth(a),
        Command::AdaptWeights(a) => commands::adapt_weights(a),
        Command::Fit(a) => commands::fit(a),
        Command::Rank(a) => commands::rank(a),
        Command::Study(a) => commands::study(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
