//! Bootstrap ranking of pathways by how often they are selected across
//! subsample fits at a tuned λ.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{expand_and_standardize_rows, ExpansionMap, GenotypeMatrix, PathwayModel};
use crate::path::tune_lambda;
use crate::rng::{domain, stream};
use crate::solver::SolverConfig;

const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub b_reps: usize,
    /// Rows per subsample; `None` means half the individuals.
    pub subsample_size: Option<usize>,
    pub with_replacement: bool,
    pub m_min: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b_reps: 100,
            subsample_size: None,
            with_replacement: true,
            m_min: 10,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn effective_subsample_size(&self, n: usize) -> usize {
        self.subsample_size.unwrap_or(n / 2)
    }

    pub fn validate(&self, n: usize, n_groups: usize) -> Result<()> {
        if self.b_reps < 2 {
            return Err(Error::invalid("at least two bootstrap replicates are required"));
        }
        let s = self.effective_subsample_size(n);
        if s < 1 || s > n {
            return Err(Error::invalid(format!("subsample size {s} must lie in 1..={n}")));
        }
        if self.m_min < 1 || self.m_min > n_groups {
            return Err(Error::invalid(format!("m_min = {} must lie in 1..={n_groups}", self.m_min)));
        }
        Ok(())
    }
}

/// A replicate whose fit did not meet the contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedRep {
    pub rep: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub group_names: Vec<String>,
    pub frequencies: Vec<f64>,
    /// Group indices in rank order; rank of `order[i]` is `i + 1`.
    pub order: Vec<usize>,
    pub unranked: Vec<usize>,
    pub per_rep_lambda: Vec<f64>,
    pub per_rep_selected: Vec<usize>,
    pub mean_block_norms: Vec<f64>,
    pub flagged: Vec<FlaggedRep>,
    pub config: BootstrapConfig,
}

impl RankingReport {
    /// Group index → 1-based rank, for ranked groups only.
    pub fn ranks(&self) -> BTreeMap<usize, usize> {
        self.order.iter().enumerate().map(|(i, &g)| (g, i + 1)).collect()
    }

    pub fn rank_of(&self, group: usize) -> Option<usize> {
        self.order.iter().position(|&g| g == group).map(|i| i + 1)
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// `group_name<TAB>frequency`, ranked groups first in rank order.
    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "group_name\tfrequency")?;
        for &g in self.order.iter().chain(&self.unranked) {
            writeln!(out, "{}\t{}", self.group_names[g], self.frequencies[g])?;
        }
        Ok(())
    }
}

/// Ranked groups by descending frequency, then descending mean block norm,
/// then ascending name. Zero-frequency groups are left out.
pub fn rank_order(frequencies: &[f64], tie_break_norms: &[f64], names: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..frequencies.len()).filter(|&l| frequencies[l] > 0.0).collect();
    order.sort_by(|&a, &b| {
        frequencies[b]
            .partial_cmp(&frequencies[a])
            .unwrap_or(Ordering::Equal)
            .then(
                tie_break_norms[b]
                    .partial_cmp(&tie_break_norms[a])
                    .unwrap_or(Ordering::Equal),
            )
            .then_with(|| names[a].cmp(&names[b]))
    });
    order
}

struct RepOutcome {
    lambda: f64,
    selected: Vec<usize>,
    norms: Vec<f64>,
    flag: Option<String>,
}

fn draw_rows(rng: &mut impl Rng, n: usize, size: usize, with_replacement: bool) -> Vec<usize> {
    if with_replacement {
        (0..size).map(|_| rng.random_range(0..n)).collect()
    } else {
        let mut rows = rand::seq::index::sample(rng, n, size).into_vec();
        rows.sort_unstable();
        rows
    }
}

fn has_variance(y: &[f64], rows: &[usize]) -> bool {
    let first = y[rows[0]];
    rows.iter().any(|&i| y[i] != first)
}

fn run_rep(
    b: usize,
    geno: &GenotypeMatrix,
    map: &ExpansionMap,
    y: &[f64],
    weights: &[f64],
    config: &BootstrapConfig,
    solver: &SolverConfig,
) -> Result<RepOutcome> {
    let n = geno.n_individuals();
    let size = config.effective_subsample_size(n);
    let mut rng = stream(config.seed, &[domain::BOOTSTRAP, b as u64]);
    let mut rows = draw_rows(&mut rng, n, size, config.with_replacement);
    let mut redraws = 0;
    while !has_variance(y, &rows) {
        redraws += 1;
        if redraws > MAX_REDRAWS {
            return Err(Error::invalid(format!(
                "bootstrap replicate {b}: response constant on {MAX_REDRAWS} redrawn subsamples"
            )));
        }
        rows = draw_rows(&mut rng, n, size, config.with_replacement);
    }
    let (design, yc, zeroed) = expand_and_standardize_rows(geno, map, y, &rows)?;
    if !zeroed.is_empty() {
        log::debug!("bootstrap replicate {b}: {} SNPs constant on the subsample", zeroed.len());
    }
    match tune_lambda(&design, &yc, weights, config.m_min, solver) {
        Ok(t) => {
            let flag = (!t.fit.fit.converged).then(|| "solver did not converge".to_string());
            Ok(RepOutcome {
                lambda: t.lambda,
                norms: t.fit.fit.block_norms(&design),
                selected: t.selected,
                flag,
            })
        }
        Err(e) if e.is_convergence() => Ok(RepOutcome {
            lambda: f64::NAN,
            selected: Vec::new(),
            norms: vec![0.0; design.n_blocks()],
            flag: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

/// Fit `b_reps` subsamples, each re-standardized on its own rows, and rank
/// pathways by selection frequency. Replicates run on the current rayon
/// pool; replicate `b` draws from the stream `(seed, b)`.
pub fn bootstrap_frequencies(
    geno: &GenotypeMatrix,
    pathways: &PathwayModel,
    y: &[f64],
    weights: &[f64],
    config: &BootstrapConfig,
    solver: &SolverConfig,
) -> Result<RankingReport> {
    let n = geno.n_individuals();
    let l = pathways.n_groups();
    config.validate(n, l)?;
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("response has {} entries for {n} individuals", y.len())));
    }
    if weights.len() != l {
        return Err(Error::DimensionMismatch(format!("{} weights for {l} groups", weights.len())));
    }
    let map = ExpansionMap::build(pathways, geno.n_snps())?;
    let outcomes: Vec<RepOutcome> = (0..config.b_reps)
        .into_par_iter()
        .map(|b| run_rep(b, geno, &map, y, weights, config, solver))
        .collect::<Result<_>>()?;

    let mut counts = vec![0usize; l];
    let mut norm_sum = vec![0.0; l];
    let mut flagged = Vec::new();
    let mut per_rep_lambda = Vec::with_capacity(config.b_reps);
    let mut per_rep_selected = Vec::with_capacity(config.b_reps);
    for (b, rep) in outcomes.into_iter().enumerate() {
        rep.selected.iter().for_each(|&g| counts[g] += 1);
        norm_sum.iter_mut().zip(&rep.norms).for_each(|(s, v)| *s += v);
        per_rep_lambda.push(rep.lambda);
        per_rep_selected.push(rep.selected.len());
        if let Some(reason) = rep.flag {
            log::warn!("bootstrap replicate {b} flagged: {reason}");
            flagged.push(FlaggedRep { rep: b, reason });
        }
    }
    if flagged.len() == config.b_reps {
        return Err(Error::TooManyFailures {
            failed: flagged.len(),
            total: config.b_reps,
        });
    }
    let b = config.b_reps as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / b).collect();
    let mean_block_norms: Vec<f64> = norm_sum.iter().map(|s| s / b).collect();
    let order = rank_order(&frequencies, &mean_block_norms, pathways.group_names());
    let unranked = (0..l).filter(|&g| frequencies[g] == 0.0).collect();
    Ok(RankingReport {
        group_names: pathways.group_names().to_vec(),
        frequencies,
        order,
        unranked,
        per_rep_lambda,
        per_rep_selected,
        mean_block_norms,
        flagged,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("g{i}")).collect()
    }

    #[test]
    fn order_by_frequency_then_unranked() {
        assert_eq!(rank_order(&[0.9, 0.2, 0.0], &[0.0; 3], &names(3)), vec![0, 1]);
    }

    #[test]
    fn ties_broken_by_norm_then_name() {
        assert_eq!(rank_order(&[0.5, 0.5], &[1.2, 0.3], &names(2)), vec![0, 1]);
        assert_eq!(rank_order(&[0.5, 0.5], &[0.3, 1.2], &names(2)), vec![1, 0]);
        let n = vec!["b".to_string(), "a".to_string()];
        assert_eq!(rank_order(&[0.5, 0.5], &[1.0, 1.0], &n), vec![1, 0]);
    }

    #[test]
    fn all_zero_is_empty() {
        assert!(rank_order(&[0.0; 4], &[0.0; 4], &names(4)).is_empty());
    }

    #[test]
    fn config_bounds() {
        assert!(BootstrapConfig::default().validate(100, 20).is_ok());
        assert_eq!(BootstrapConfig::default().effective_subsample_size(101), 50);
        let c = BootstrapConfig {
            b_reps: 1,
            ..Default::default()
        };
        assert!(c.validate(100, 20).is_err());
        assert!(BootstrapConfig::default().validate(100, 5).is_err());
    }
}
