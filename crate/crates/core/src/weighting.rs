//! Adaptive, bias-correcting group weights.
//!
//! Under a null response every pathway should be the single selected one
//! with probability 1/L. The empirical selection distribution Π* is
//! estimated by repeated single-pathway fits on null responses; its KL
//! divergence from uniform measures selection bias, and the weights are
//! nudged towards uniform selection with
//!
//! ```text
//! w_l ← w_l · [1 − sign(d_l)(α − 1) L² d_l²],   d_l = Π*_l − 1/L
//! ```
//!
//! so a never-selected pathway has its weight multiplied by α and an
//! over-selected one has it increased.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{center, StandardizedDesign};
use crate::path::tune_exact_one;
use crate::rng::{domain, stream};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullMode {
    /// Standard normal responses.
    Gaussian,
    /// Random permutations of a supplied response.
    Permute,
}

impl std::str::FromStr for NullMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NullMode::Gaussian),
            "permute" => Ok(NullMode::Permute),
            other => Err(Error::invalid(format!("unknown null mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightAdaptConfig {
    pub weight_alpha: f64,
    pub iterations: usize,
    pub reps: usize,
    pub seed: u64,
    pub null_mode: NullMode,
}

impl Default for WeightAdaptConfig {
    fn default() -> Self {
        Self {
            weight_alpha: 0.98,
            iterations: 10,
            reps: 2000,
            seed: 0,
            null_mode: NullMode::Gaussian,
        }
    }
}

impl WeightAdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::invalid("at least one weight-update iteration is required"));
        }
        self.validate_estimation()
    }

    /// Checks needed to estimate selection frequencies; allows zero
    /// iterations, which only measures D(0).
    pub fn validate_estimation(&self) -> Result<()> {
        if !(self.weight_alpha > 0.0 && self.weight_alpha < 1.0) {
            return Err(Error::invalid("weight_alpha must lie strictly between 0 and 1"));
        }
        if self.reps < 100 {
            return Err(Error::invalid("at least 100 null replicates are required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionProfile {
    pub frequencies: Vec<f64>,
    pub reps: usize,
    /// Replicates whose tuning failed and were left out.
    pub skipped: usize,
    pub null_mode: NullMode,
    pub iteration: usize,
}

/// Largest tolerated fraction of failed null replicates.
const MAX_SKIP_FRACTION: f64 = 0.01;

/// Estimate Π*(w) from `config.reps` single-pathway fits on null responses.
/// `response` is required for [`NullMode::Permute`]. Replicates run in
/// parallel on the current rayon pool; replicate `r` of iteration `tau`
/// always uses the stream `(seed, tau, r)`.
pub fn estimate_selection_frequencies(
    design: &StandardizedDesign,
    weights: &[f64],
    config: &WeightAdaptConfig,
    solver: &SolverConfig,
    response: Option<&[f64]>,
    iteration: usize,
) -> Result<SelectionProfile> {
    if weights.len() != design.n_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} blocks",
            weights.len(),
            design.n_blocks()
        )));
    }
    let n = design.n_rows();
    let base = match (config.null_mode, response) {
        (NullMode::Permute, Some(y)) if y.len() == n => Some(center(y).0),
        (NullMode::Permute, _) => {
            return Err(Error::invalid("permutation nulls need a response of matching length"))
        }
        (NullMode::Gaussian, _) => None,
    };
    let outcomes: Vec<Result<Vec<(usize, f64)>>> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(
                config.seed,
                &[domain::NULL_RESPONSE, iteration as u64, r as u64],
            );
            let y = match &base {
                Some(y) => {
                    let mut p = y.clone();
                    p.shuffle(&mut rng);
                    p
                }
                None => {
                    let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    center(&raw).0
                }
            };
            tune_exact_one(design, &y, weights, solver).map(|s| s.credits)
        })
        .collect();

    let mut credit = vec![0.0; design.n_blocks()];
    let mut skipped = 0;
    for (r, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(credits) => credits.into_iter().for_each(|(l, c)| credit[l] += c),
            Err(e) => {
                log::warn!("null replicate {r} skipped: {e}");
                skipped += 1;
            }
        }
    }
    if skipped as f64 > MAX_SKIP_FRACTION * config.reps as f64 {
        return Err(Error::TooManyFailures {
            failed: skipped,
            total: config.reps,
        });
    }
    let used = (config.reps - skipped) as f64;
    Ok(SelectionProfile {
        frequencies: credit.into_iter().map(|c| c / used).collect(),
        reps: config.reps,
        skipped,
        null_mode: config.null_mode,
        iteration,
    })
}

/// `Σ_l Π*_l log(Π*_l L)` with `0 log 0 = 0`.
pub fn kl_divergence(frequencies: &[f64]) -> f64 {
    let l = frequencies.len() as f64;
    frequencies
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * (p * l).ln())
        .sum()
}

/// Multiplicative weight adjustment for deviation `d = Π*_l − 1/L`.
pub fn weight_multiplier(d: f64, weight_alpha: f64, n_groups: usize) -> f64 {
    let l = n_groups as f64;
    let sign = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    };
    1.0 - sign * (weight_alpha - 1.0) * l * l * d * d
}

pub fn update_weights(weights: &[f64], profile: &SelectionProfile, weight_alpha: f64) -> Result<Vec<f64>> {
    if weights.len() != profile.frequencies.len() {
        return Err(Error::DimensionMismatch("weights and selection profile".into()));
    }
    let l = weights.len();
    let uniform = 1.0 / l as f64;
    let out: Vec<f64> = weights
        .iter()
        .zip(&profile.frequencies)
        .map(|(w, p)| w * weight_multiplier(p - uniform, weight_alpha, l))
        .collect();
    if let Some(bad) = out.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::invalid(format!("updated weight {bad} is not positive: {}", out[bad])));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptResult {
    pub weights: Vec<f64>,
    /// D(τ) for τ = 0..=T; D(0) uses the initial weights.
    pub divergence_trace: Vec<f64>,
    pub profiles: Vec<SelectionProfile>,
}

/// Alternate weight updates and Π* re-estimation for `config.iterations`
/// rounds, starting from `initial_weights` (typically `sqrt(S_l)`). With
/// zero iterations only D(0) is measured and the weights are returned as is.
pub fn adapt_weights(
    design: &StandardizedDesign,
    initial_weights: &[f64],
    config: &WeightAdaptConfig,
    solver: &SolverConfig,
    response: Option<&[f64]>,
) -> Result<AdaptResult> {
    config.validate_estimation()?;
    let mut weights = initial_weights.to_vec();
    let profile = estimate_selection_frequencies(design, &weights, config, solver, response, 0)?;
    let mut trace = vec![kl_divergence(&profile.frequencies)];
    log::info!("weight adaptation: D(0) = {:.4}", trace[0]);
    let mut profiles = vec![profile];
    for tau in 1..=config.iterations {
        weights = update_weights(&weights, profiles.last().expect("nonempty"), config.weight_alpha)?;
        let profile = estimate_selection_frequencies(design, &weights, config, solver, response, tau)?;
        trace.push(kl_divergence(&profile.frequencies));
        log::info!("weight adaptation: D({tau}) = {:.4}", trace[tau]);
        profiles.push(profile);
    }
    Ok(AdaptResult {
        weights,
        divergence_trace: trace,
        profiles,
    })
}

/// On-disk weights: `{"weights": {name: w}, "metadata": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl WeightsFile {
    pub fn new(names: &[String], weights: &[f64], metadata: serde_json::Value) -> Self {
        Self {
            weights: names.iter().cloned().zip(weights.iter().copied()).collect(),
            metadata,
        }
    }

    /// Weights in the order of `names`; every name must be present.
    pub fn ordered(&self, names: &[String]) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| {
                self.weights
                    .get(n)
                    .copied()
                    .filter(|w| *w > 0.0 && w.is_finite())
                    .ok_or_else(|| Error::invalid(format!("no positive weight for group {n}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_closed_forms() {
        assert!(kl_divergence(&[0.25; 4]).abs() < 1e-15);
        assert!((kl_divergence(&[1.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((kl_divergence(&[0.5, 0.5, 0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn multiplier_anchor_values() {
        let l = 7;
        let inv = 1.0 / l as f64;
        assert!((weight_multiplier(-inv, 0.98, l) - 0.98).abs() < 1e-12);
        assert_eq!(weight_multiplier(0.0, 0.98, l), 1.0);
        assert!((weight_multiplier(inv, 0.98, l) - 1.02).abs() < 1e-12);
    }

    #[test]
    fn update_applies_multiplier_per_group() {
        let p = SelectionProfile {
            frequencies: vec![0.0, 0.5, 0.5],
            reps: 100,
            skipped: 0,
            null_mode: NullMode::Gaussian,
            iteration: 0,
        };
        let w = update_weights(&[1.0, 2.0, 3.0], &p, 0.9).unwrap();
        assert!((w[0] - 0.9).abs() < 1e-12);
        let up = 1.0 + 0.1 * 9.0 * (0.5f64 - 1.0 / 3.0).powi(2);
        assert!((w[1] - 2.0 * up).abs() < 1e-12);
        assert!((w[2] - 3.0 * up).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(WeightAdaptConfig::default().validate().is_ok());
        let bad = WeightAdaptConfig {
            weight_alpha: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let few = WeightAdaptConfig {
            reps: 10,
            ..Default::default()
        };
        assert!(few.validate().is_err());
    }
}
