//! λ_max, the active-set fit at a single λ, and the geometric λ line search
//! used to reach a minimum number of selected groups.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::StandardizedDesign;
use crate::solver::{solve_blocks, SolverConfig, SolverState};

/// Geometric factor of the λ line search.
pub const SEARCH_ALPHA: f64 = 0.8;
/// The line search gives up below this fraction of λ_max.
pub const LAMBDA_FLOOR: f64 = 1e-12;
pub const MAX_ENLARGEMENTS: usize = 50;
/// Slack on the active-set entry test for groups outside the active set.
pub const SCREEN_TOL: f64 = 1e-8;
const BISECTION_STEPS: usize = 30;
/// Relative tolerance under which two first-entry scores count as tied.
const TIE_TOL: f64 = 1e-12;

/// `‖X_lᵀ y‖₂` for every block.
pub fn raw_scores(design: &StandardizedDesign, y: &[f64]) -> Vec<f64> {
    (0..design.n_blocks()).map(|l| design.block_score(l, y)).collect()
}

/// `‖X_lᵀ y‖₂ / w_l`: the λ at which each group would enter first.
pub fn entry_scores(design: &StandardizedDesign, y: &[f64], weights: &[f64]) -> Vec<f64> {
    raw_scores(design, y)
        .into_iter()
        .zip(weights)
        .map(|(s, w)| s / w)
        .collect()
}

/// Smallest λ at which every group is zero.
pub fn lambda_max(design: &StandardizedDesign, y: &[f64], weights: &[f64]) -> f64 {
    entry_scores(design, y, weights).into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct ActiveSetState {
    pub active: Vec<usize>,
    pub lambda: f64,
    pub expansions_done: usize,
    pub fit: SolverState,
}

/// Group lasso at one λ via the active-set strategy: screen with
/// `‖X_mᵀ y‖ > λ w_m`, solve on the screened groups, then add any outside
/// group whose partial-residual test fails and re-solve.
pub fn fit_active(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    config: &SolverConfig,
) -> Result<ActiveSetState> {
    let raw = raw_scores(design, y);
    fit_active_screened(design, y, lambda, weights, config, &raw)
}

pub(crate) fn fit_active_screened(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    config: &SolverConfig,
    raw: &[f64],
) -> Result<ActiveSetState> {
    if weights.len() != design.n_blocks() || raw.len() != design.n_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} blocks",
            weights.len(),
            design.n_blocks()
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("active-set fitting needs lambda > 0"));
    }
    let mut active: Vec<usize> = (0..design.n_blocks())
        .filter(|&m| raw[m] > lambda * weights[m])
        .collect();
    let mut rounds = 0;
    loop {
        // every restricted solve starts again from zero
        let fit = solve_blocks(design, y, lambda, weights, config, &active, None, &mut |_| {})?;
        let mut outside = Vec::new();
        let mut is_active = vec![false; design.n_blocks()];
        active.iter().for_each(|&m| is_active[m] = true);
        for z in (0..design.n_blocks()).filter(|&z| !is_active[z]) {
            if design.block_score(z, &fit.total_residual) > lambda * weights[z] + SCREEN_TOL {
                outside.push(z);
            }
        }
        if outside.is_empty() {
            return Ok(ActiveSetState {
                active,
                lambda,
                expansions_done: rounds,
                fit,
            });
        }
        rounds += 1;
        if rounds > MAX_ENLARGEMENTS {
            return Err(Error::ActiveSet { rounds });
        }
        log::debug!("active set enlarged by {} groups at lambda {lambda}", outside.len());
        active.extend(outside);
        active.sort_unstable();
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneResult {
    pub lambda: f64,
    pub lambda_max: f64,
    /// Groups with nonzero coefficients at `lambda`.
    pub selected: Vec<usize>,
    pub m: usize,
    pub search_steps: usize,
    /// Every λ visited, in order.
    pub lambda_trace: Vec<f64>,
    /// λ visited just before `lambda` (λ_max on the first step).
    #[serde(skip)]
    pub previous_lambda: f64,
    #[serde(skip)]
    pub fit: ActiveSetState,
}

/// Decrease λ geometrically from λ_max until the fit selects at least
/// `m_min` groups. λ values whose initial screen already holds fewer than
/// `m_min` groups are skipped without solving.
pub fn tune_lambda(
    design: &StandardizedDesign,
    y: &[f64],
    weights: &[f64],
    m_min: usize,
    config: &SolverConfig,
) -> Result<TuneResult> {
    if m_min == 0 || m_min > design.n_blocks() {
        return Err(Error::invalid(format!(
            "m_min = {m_min} must lie in 1..={}",
            design.n_blocks()
        )));
    }
    let raw = raw_scores(design, y);
    let lambda_max = raw
        .iter()
        .zip(weights)
        .map(|(s, w)| s / w)
        .fold(0.0, f64::max);
    if !(lambda_max > 0.0) {
        return Err(Error::Tuning("lambda_max is zero; no group can be selected".into()));
    }
    let mut upper = lambda_max;
    let mut trace = Vec::new();
    loop {
        let lambda = SEARCH_ALPHA * upper;
        trace.push(lambda);
        if lambda < LAMBDA_FLOOR * lambda_max {
            return Err(Error::Tuning(format!(
                "lambda fell below {LAMBDA_FLOOR:e} * lambda_max without selecting {m_min} groups"
            )));
        }
        let screened = raw
            .iter()
            .zip(weights)
            .filter(|(s, w)| **s > lambda * **w)
            .count();
        if screened >= m_min {
            let fit = fit_active_screened(design, y, lambda, weights, config, &raw)?;
            let selected = fit.fit.selected(design);
            if selected.len() >= m_min {
                return Ok(TuneResult {
                    lambda,
                    lambda_max,
                    m: selected.len(),
                    selected,
                    search_steps: trace.len(),
                    lambda_trace: trace,
                    previous_lambda: upper,
                    fit,
                });
            }
        }
        upper = lambda;
    }
}

/// Outcome of tuning λ to select a single group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleSelection {
    /// (group, credit) pairs; credits sum to one.
    pub credits: Vec<(usize, f64)>,
    pub lambda: f64,
}

/// Tune λ to select exactly one group. Any λ strictly between the two
/// largest entry scores screens a single group, so that λ is tried first;
/// if its fit does not select exactly one group, the line search runs and,
/// when its first crossing selects several groups, λ is bisected between the
/// last empty λ and the crossing. Exact ties share the credit equally.
pub fn tune_exact_one(
    design: &StandardizedDesign,
    y: &[f64],
    weights: &[f64],
    config: &SolverConfig,
) -> Result<SingleSelection> {
    let raw = raw_scores(design, y);
    if let Some(single) = single_entry_fit(design, y, weights, config, &raw)? {
        return Ok(single);
    }
    let tuned = tune_lambda(design, y, weights, 1, config)?;
    let (selected, lambda) = if tuned.m == 1 {
        (tuned.selected, tuned.lambda)
    } else {
        let mut lo = tuned.lambda;
        let mut hi = tuned.previous_lambda;
        let mut crowded = tuned.selected;
        let mut found = None;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let fit = fit_active_screened(design, y, mid, weights, config, &raw)?;
            let sel = fit.fit.selected(design);
            match sel.len() {
                0 => hi = mid,
                1 => {
                    found = Some((sel, mid));
                    break;
                }
                _ => {
                    lo = mid;
                    crowded = sel;
                }
            }
        }
        found.unwrap_or((crowded, lo))
    };
    let credits = tie_credits(&selected, &raw, weights);
    Ok(SingleSelection { credits, lambda })
}

/// Fit midway between the largest and second largest entry scores, where
/// the screen holds one group. `None` when the top scores tie or the fit
/// does not end with exactly one group.
fn single_entry_fit(
    design: &StandardizedDesign,
    y: &[f64],
    weights: &[f64],
    config: &SolverConfig,
    raw: &[f64],
) -> Result<Option<SingleSelection>> {
    if weights.len() != raw.len() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} blocks", weights.len(), raw.len())));
    }
    let mut entry: Vec<f64> = raw.iter().zip(weights).map(|(s, w)| s / w).collect();
    entry.sort_by(|a, b| b.total_cmp(a));
    let (top, second) = (entry[0], entry.get(1).copied().unwrap_or(0.0));
    if !(top > 0.0) || second >= top * (1.0 - TIE_TOL) {
        return Ok(None);
    }
    let lambda = 0.5 * (top + second);
    let fit = fit_active_screened(design, y, lambda, weights, config, raw)?;
    let selected = fit.fit.selected(design);
    if selected.len() != 1 {
        return Ok(None);
    }
    Ok(Some(SingleSelection {
        credits: tie_credits(&selected, raw, weights),
        lambda,
    }))
}

fn tie_credits(selected: &[usize], raw: &[f64], weights: &[f64]) -> Vec<(usize, f64)> {
    if selected.len() == 1 {
        let g = selected[0];
        let score = |l: usize| raw[l] / weights[l];
        let top = score(g);
        let tied: Vec<usize> = (0..raw.len())
            .filter(|&l| score(l) >= top * (1.0 - TIE_TOL))
            .collect();
        let share = 1.0 / tied.len() as f64;
        tied.into_iter().map(|l| (l, share)).collect()
    } else {
        let share = 1.0 / selected.len() as f64;
        selected.iter().map(|&l| (l, share)).collect()
    }
}
