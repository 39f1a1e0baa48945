//! Pathway-level group lasso for SNP data.
//!
//! Pathways (groups of SNPs, possibly overlapping) are fitted jointly with a
//! group lasso on an overlap-expanded design, solved by block coordinate
//! descent with an active-set strategy. Around the solver sit adaptive
//! group weights that remove selection bias under the null, bootstrap
//! ranking of pathways, ranking metrics, a trait simulator and input
//! parsers.
pub mod error;
pub mod ingestion;
mod linalg;
pub mod metrics;
pub mod model;
pub mod path;
pub mod ranking;
pub mod rng;
pub mod simulation;
pub mod solver;
pub mod weighting;

pub use error::{Error, Result};
pub use model::{
    expand_and_standardize, expand_and_standardize_rows, ExpansionMap, GenotypeMatrix,
    PathwayModel, StandardizedDesign,
};
pub use path::{fit_active, lambda_max, tune_exact_one, tune_lambda, ActiveSetState, TuneResult};
pub use ranking::{bootstrap_frequencies, BootstrapConfig, RankingReport};
pub use simulation::{run_study, ScenarioSpec, StudyConfig, StudyReport, SyntheticGenotypeSpec};
pub use solver::{fit_bcd, objective, SolverConfig, SolverState};
pub use weighting::{adapt_weights, kl_divergence, NullMode, WeightAdaptConfig};
