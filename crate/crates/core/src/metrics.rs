//! Ranking-performance measures for simulations with a known causal truth:
//! best causal rank, ranking power within a top window, the power-adjusted
//! weighted ranking score, and ROC aggregation over repetitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 100;
/// Score assigned when no causal pathway is ranked inside the window.
pub const DEFAULT_GAMMA: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalTruth {
    pub causal_snps: Vec<usize>,
    pub causal_pathways: Vec<usize>,
    pub seed_pathway: usize,
}

impl CausalTruth {
    pub fn new(causal_snps: Vec<usize>, causal_pathways: Vec<usize>, seed_pathway: usize) -> Result<Self> {
        if causal_pathways.is_empty() {
            return Err(Error::invalid("the causal pathway set is empty"));
        }
        if !causal_pathways.contains(&seed_pathway) {
            return Err(Error::invalid("the seed pathway is not among the causal pathways"));
        }
        Ok(Self {
            causal_snps,
            causal_pathways,
            seed_pathway,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingScores {
    pub r_k1: Option<usize>,
    pub p100: f64,
    pub r_score: f64,
    pub window: usize,
    pub gamma: f64,
}

/// The window used for `n_groups` pathways: `min(100, L)`.
pub fn default_window(n_groups: usize) -> usize {
    DEFAULT_WINDOW.min(n_groups)
}

/// Ranks (1-based) of causal pathways that fall inside the window, ascending.
fn causal_ranks_in_window(ranks: &BTreeMap<usize, usize>, truth: &CausalTruth, window: usize) -> Vec<usize> {
    let mut r: Vec<usize> = truth
        .causal_pathways
        .iter()
        .filter_map(|g| ranks.get(g).copied())
        .filter(|&r| r <= window)
        .collect();
    r.sort_unstable();
    r
}

/// Best (numerically smallest) rank of any causal pathway inside the window.
/// `ranks` maps group index to rank; unranked groups are absent.
pub fn highest_causal_rank(ranks: &BTreeMap<usize, usize>, truth: &CausalTruth, window: usize) -> Option<usize> {
    causal_ranks_in_window(ranks, truth, window).first().copied()
}

/// Fraction of causal pathways ranked inside the window.
pub fn ranking_power(ranks: &BTreeMap<usize, usize>, truth: &CausalTruth, window: usize) -> f64 {
    if truth.causal_pathways.is_empty() {
        return 0.0;
    }
    causal_ranks_in_window(ranks, truth, window).len() as f64 / truth.causal_pathways.len() as f64
}

/// `R* / p100`, where `R* = Σ √r_k / Σ_{k=1..c} √k` over the `c` causal
/// pathways inside the window; `gamma` when none are.
pub fn weighted_ranking_score(
    ranks: &BTreeMap<usize, usize>,
    truth: &CausalTruth,
    window: usize,
    gamma: f64,
) -> f64 {
    let inside = causal_ranks_in_window(ranks, truth, window);
    if inside.is_empty() {
        return gamma;
    }
    let num: f64 = inside.iter().map(|&r| (r as f64).sqrt()).sum();
    let den: f64 = (1..=inside.len()).map(|k| (k as f64).sqrt()).sum();
    let p100 = inside.len() as f64 / truth.causal_pathways.len() as f64;
    num / den / p100
}

pub fn ranking_scores(ranks: &BTreeMap<usize, usize>, truth: &CausalTruth, window: usize, gamma: f64) -> RankingScores {
    RankingScores {
        r_k1: highest_causal_rank(ranks, truth, window),
        p100: ranking_power(ranks, truth, window),
        r_score: weighted_ranking_score(ranks, truth, window, gamma),
        window,
        gamma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub z: usize,
    pub fpr: f64,
    pub power: f64,
}

/// Fraction of simulations with `r_k1 ≤ z` against `fpr = (z − 1)/L`, for
/// `z = 1..=window`.
pub fn roc_points(per_sim_r_k1: &[Option<usize>], n_groups: usize, window: usize) -> Vec<RocPoint> {
    let n = per_sim_r_k1.len().max(1) as f64;
    (1..=window)
        .map(|z| RocPoint {
            z,
            fpr: (z - 1) as f64 / n_groups as f64,
            power: per_sim_r_k1.iter().filter(|r| matches!(r, Some(r) if *r <= z)).count() as f64 / n,
        })
        .collect()
}

/// The window cut-off `z` whose false-positive rate first reaches `fpr`.
pub fn z_at_fpr(fpr: f64, n_groups: usize) -> usize {
    (fpr * n_groups as f64).floor() as usize + 1
}

/// ROC power at the given false-positive rate.
pub fn power_at_fpr(per_sim_r_k1: &[Option<usize>], n_groups: usize, fpr: f64) -> f64 {
    let z = z_at_fpr(fpr, n_groups);
    let n = per_sim_r_k1.len().max(1) as f64;
    per_sim_r_k1.iter().filter(|r| matches!(r, Some(r) if *r <= z)).count() as f64 / n
}

/// Probability that at least one of `c` causal pathways lands in the top
/// `z` of a uniformly random ranking of `n_groups`: `1 − C(L−c, z)/C(L, z)`.
pub fn chance_power(n_groups: usize, c: usize, z: usize) -> f64 {
    if c == 0 {
        return 0.0;
    }
    if z + c > n_groups {
        return 1.0;
    }
    // C(L−c, z)/C(L, z) = Π_{i=0}^{c−1} (L−z−i)/(L−i)
    let miss: f64 = (0..c)
        .map(|i| (n_groups - z - i) as f64 / (n_groups - i) as f64)
        .product();
    1.0 - miss
}
