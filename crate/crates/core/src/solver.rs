//! Block coordinate descent for the overlap-expanded group lasso
//!
//! ```text
//! minimise  ½‖y − Xβ‖² + λ Σ_l w_l ‖β_l‖₂
//! ```
//!
//! Each block is either zeroed by the subgradient test
//! `‖X_lᵀ r_l‖₂ ≤ λ w_l` or fitted by cyclic coordinate updates that replace
//! the group norm with its first-order Taylor expansion in `β_j²` around the
//! current estimate:
//!
//! ```text
//! β_j ← (X_jᵀ r + β_j) / (1 + λ w_l / ‖β_l‖₂)
//! ```
//!
//! where `r` is the total residual. The expansion majorises the norm, so every
//! coordinate step is a descent step. After each cycle the block is also
//! rescaled along its own direction by the exact one-dimensional minimiser,
//! which removes the slow radial convergence of the majorise-minimise update
//! (most visible right after a block enters from zero with `‖β_l‖ = η`).
//!
//! The total residual `r = y − Xβ` is cached and updated per coordinate; the
//! block partial residual `r_l = r + X_l β_l` is derived from it once per
//! block visit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sq_norm};
use crate::model::StandardizedDesign;

/// Largest `‖X_lᵀ r_l‖ − λ w_l` tolerated for a zero block at convergence.
pub const ZERO_BLOCK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Stand-in for `‖β_l‖₂` when a block is entered from zero.
    pub eta: f64,
    /// Relative change of the block objective that ends a block fit.
    pub block_tol: f64,
    /// Relative change of the full objective that ends the sweeps.
    pub global_tol: f64,
    pub max_block_iters: usize,
    pub max_sweeps: usize,
    /// Absolute tolerance on block stationarity checked before a block or
    /// the whole fit is declared converged.
    pub kkt_tol: f64,
    /// Exact line minimisation along `β_l` after each coordinate cycle.
    pub radial_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            block_tol: 1e-6,
            global_tol: 1e-6,
            max_block_iters: 1000,
            max_sweeps: 1000,
            kkt_tol: 1e-4,
            radial_step: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eta, self.block_tol, self.global_tol, self.kkt_tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("solver tolerances must be strictly positive"));
        }
        if self.eta >= 1e-3 {
            return Err(Error::invalid("eta must be below 1e-3"));
        }
        if self.max_block_iters == 0 || self.max_sweeps == 0 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverState {
    pub lambda: f64,
    /// Expanded coefficients β*.
    pub beta: Vec<f64>,
    /// Cached `y − Xβ`.
    pub total_residual: Vec<f64>,
    /// Partial residual of the most recently visited block.
    #[serde(skip)]
    pub block_residual_scratch: Vec<f64>,
    pub objective_value: f64,
    /// Objective after each completed sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps_done: usize,
    pub converged: bool,
}

impl SolverState {
    fn zero(design: &StandardizedDesign, y: &[f64], lambda: f64) -> Self {
        Self {
            lambda,
            beta: vec![0.0; design.n_cols()],
            total_residual: y.to_vec(),
            block_residual_scratch: vec![0.0; design.n_rows()],
            objective_value: 0.5 * sq_norm(y),
            objective_trace: Vec::new(),
            sweeps_done: 0,
            converged: true,
        }
    }

    pub fn block_norms(&self, design: &StandardizedDesign) -> Vec<f64> {
        design
            .blocks()
            .iter()
            .map(|b| sq_norm(&self.beta[b.clone()]).sqrt())
            .collect()
    }

    /// Blocks with a nonzero coefficient vector.
    pub fn selected(&self, design: &StandardizedDesign) -> Vec<usize> {
        design
            .blocks()
            .iter()
            .enumerate()
            .filter(|(_, b)| self.beta[(*b).clone()].iter().any(|&v| v != 0.0))
            .map(|(l, _)| l)
            .collect()
    }
}

/// `½‖y − Xβ‖² + λ Σ_l w_l ‖β_l‖₂`
pub fn objective(
    design: &StandardizedDesign,
    y: &[f64],
    beta: &[f64],
    lambda: f64,
    weights: &[f64],
) -> Result<f64> {
    check_dims(design, y, weights)?;
    if beta.len() != design.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries for {} expanded columns",
            beta.len(),
            design.n_cols()
        )));
    }
    let r = design.residual(y, beta);
    Ok(0.5 * sq_norm(&r) + lambda * penalty(design, beta, weights))
}

fn penalty(design: &StandardizedDesign, beta: &[f64], weights: &[f64]) -> f64 {
    design
        .blocks()
        .iter()
        .zip(weights)
        .map(|(b, w)| w * sq_norm(&beta[b.clone()]).sqrt())
        .sum()
}

fn check_dims(design: &StandardizedDesign, y: &[f64], weights: &[f64]) -> Result<()> {
    if y.len() != design.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries for {} rows",
            y.len(),
            design.n_rows()
        )));
    }
    if weights.len() != design.n_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} blocks",
            weights.len(),
            design.n_blocks()
        )));
    }
    Ok(())
}

/// True iff block `l` can be nonzero given its partial residual:
/// `‖X_lᵀ r_l‖₂ > λ w_l`. Equality belongs to the zero case.
pub fn block_entry_check(
    design: &StandardizedDesign,
    l: usize,
    partial_residual: &[f64],
    lambda: f64,
    w_l: f64,
) -> bool {
    design.block_score(l, partial_residual) > lambda * w_l
}

/// One Taylor-approximated coordinate step. `block_norm` must already have
/// `η` substituted for a zero block.
pub fn coordinate_update(
    xj_dot_r: f64,
    beta_j_old: f64,
    lambda: f64,
    w_l: f64,
    block_norm: f64,
) -> Result<f64> {
    if !(block_norm > 0.0) {
        return Err(Error::invalid(format!(
            "block norm {block_norm} must be positive (substitute eta for a zero block)"
        )));
    }
    Ok(taylor_step(xj_dot_r, beta_j_old, lambda * w_l, block_norm))
}

#[inline]
fn taylor_step(xj_dot_r: f64, beta_j_old: f64, lambda_w: f64, block_norm: f64) -> f64 {
    (xj_dot_r + beta_j_old) / (1.0 + lambda_w / block_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockFit {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Block objective `½‖r_l − X_l β_l‖² + λ w_l ‖β_l‖₂` at the returned β_l.
    pub objective: f64,
}

struct BlockOutcome {
    iterations: usize,
    converged: bool,
}

/// Fit a single block against a fixed partial residual, starting from
/// `beta_l`. A block whose entry check fails is returned as zero.
pub fn fit_block(
    design: &StandardizedDesign,
    l: usize,
    partial_residual: &[f64],
    beta_l: &[f64],
    lambda: f64,
    w_l: f64,
    config: &SolverConfig,
) -> Result<BlockFit> {
    let block = design.block(l);
    if beta_l.len() != block.len() || partial_residual.len() != design.n_rows() {
        return Err(Error::DimensionMismatch("block fit inputs".into()));
    }
    let lambda_w = lambda * w_l;
    if !block_entry_check(design, l, partial_residual, lambda, w_l) {
        return Ok(BlockFit {
            beta: vec![0.0; block.len()],
            iterations: 0,
            converged: true,
            objective: 0.5 * sq_norm(partial_residual),
        });
    }
    let mut beta = beta_l.to_vec();
    let mut residual = partial_residual.to_vec();
    for (k, j) in block.clone().enumerate() {
        if beta[k] != 0.0 {
            axpy(-beta[k], design.column(j), &mut residual);
        }
    }
    let floor = objective_floor(partial_residual);
    let outcome = fit_block_in_place(
        design,
        l,
        &mut beta,
        &mut residual,
        partial_residual,
        lambda_w,
        floor,
        config,
    )?;
    let objective = 0.5 * sq_norm(&residual) + lambda_w * sq_norm(&beta).sqrt();
    Ok(BlockFit {
        beta,
        iterations: outcome.iterations,
        converged: outcome.converged,
        objective,
    })
}

/// Denominator floor for relative objective changes when the objective
/// itself approaches zero.
fn objective_floor(y: &[f64]) -> f64 {
    (1e-12 * 0.5 * sq_norm(y)).max(f64::MIN_POSITIVE)
}

/// Cycle coordinate updates over block `l`. `residual` is the total
/// residual and is kept consistent with `beta`; `partial` is the block
/// partial residual, fixed while this block is being fitted.
#[allow(clippy::too_many_arguments)]
fn fit_block_in_place(
    design: &StandardizedDesign,
    l: usize,
    beta: &mut [f64],
    residual: &mut [f64],
    partial: &[f64],
    lambda_w: f64,
    floor: f64,
    config: &SolverConfig,
) -> Result<BlockOutcome> {
    let block = design.block(l);
    let start_beta = beta.to_vec();
    let mut sq = sq_norm(beta);
    let f_start = 0.5 * sq_norm(residual) + lambda_w * sq.sqrt();
    let mut f_prev = f_start;
    let mut outcome = BlockOutcome {
        iterations: 0,
        converged: false,
    };
    for it in 1..=config.max_block_iters {
        outcome.iterations = it;
        let mut stationarity = 0.0f64;
        for (k, j) in block.clone().enumerate() {
            let x = design.column(j);
            let g = dot(x, residual);
            let old = beta[k];
            let norm = sq.max(0.0).sqrt();
            if norm > 0.0 {
                stationarity = stationarity.max((g - lambda_w * old / norm).abs());
            } else {
                stationarity = f64::INFINITY;
            }
            let new = taylor_step(g, old, lambda_w, if norm > 0.0 { norm } else { config.eta });
            if new != old {
                axpy(old - new, x, residual);
                sq += new * new - old * old;
                beta[k] = new;
            }
        }
        sq = sq_norm(beta);
        if config.radial_step && sq > 0.0 {
            let s = radial_rescale(beta, residual, partial, lambda_w, &mut sq);
            if !(0.5..=2.0).contains(&s) {
                // a large rescale amplifies rounding in r_l − r; rebuild r
                residual.copy_from_slice(partial);
                for (k, j) in block.clone().enumerate() {
                    if beta[k] != 0.0 {
                        axpy(-beta[k], design.column(j), residual);
                    }
                }
            }
        }
        let f = 0.5 * sq_norm(residual) + lambda_w * sq.sqrt();
        if !f.is_finite() {
            return Err(Error::NonFinite(format!(
                "block {l} objective became {f} at iteration {it} (lambda*w = {lambda_w})"
            )));
        }
        let rel = (f_prev - f).abs() / f.abs().max(floor);
        f_prev = f;
        if rel < config.block_tol && stationarity <= config.kkt_tol {
            outcome.converged = true;
            break;
        }
    }
    if f_prev > f_start {
        // an unfinished escape from eta can end above the starting point
        for (k, j) in block.enumerate() {
            let d = beta[k] - start_beta[k];
            if d != 0.0 {
                axpy(d, design.column(j), residual);
            }
        }
        beta.copy_from_slice(&start_beta);
    }
    Ok(outcome)
}

/// Replace β_l by s·β_l with s minimising
/// `½‖r_l − s X_l β_l‖² + λ w_l s ‖β_l‖`, when that s is positive. Returns
/// the factor applied (1 when β_l is left unchanged).
fn radial_rescale(beta: &mut [f64], residual: &mut [f64], partial: &[f64], lambda_w: f64, sq: &mut f64) -> f64 {
    // X_l β_l = r_l − r
    let mut fit_dot_partial = 0.0;
    let mut fit_sq = 0.0;
    for (p, r) in partial.iter().zip(residual.iter()) {
        let u = p - r;
        fit_dot_partial += u * p;
        fit_sq += u * u;
    }
    if fit_sq <= 0.0 {
        return 1.0;
    }
    let s = (fit_dot_partial - lambda_w * sq.sqrt()) / fit_sq;
    if !(s > 0.0 && s.is_finite()) || s == 1.0 {
        return 1.0;
    }
    beta.iter_mut().for_each(|b| *b *= s);
    for (r, p) in residual.iter_mut().zip(partial) {
        // r = r_l − s (r_l − r)
        *r = p - s * (p - *r);
    }
    *sq *= s * s;
    s
}

/// Optimality diagnostics for a group lasso solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// max over zero blocks of `‖X_lᵀ r_l‖₂ − λ w_l` (≤ 0 when satisfied).
    pub max_zero_excess: f64,
    /// max over nonzero blocks of `‖X_lᵀ r − λ w_l β_l/‖β_l‖‖_∞`.
    pub max_stationarity: f64,
}

impl KktReport {
    pub fn passes(&self, zero_tol: f64, stationarity_tol: f64) -> bool {
        self.max_zero_excess <= zero_tol && self.max_stationarity <= stationarity_tol
    }
}

fn kkt_on_blocks(
    design: &StandardizedDesign,
    residual: &[f64],
    beta: &[f64],
    lambda: f64,
    weights: &[f64],
    blocks: impl Iterator<Item = usize>,
) -> KktReport {
    let mut report = KktReport {
        max_zero_excess: f64::NEG_INFINITY,
        max_stationarity: 0.0,
    };
    for l in blocks {
        let range = design.block(l);
        let b = &beta[range.clone()];
        let lw = lambda * weights[l];
        let norm = sq_norm(b).sqrt();
        if norm == 0.0 {
            let excess = design.block_score(l, residual) - lw;
            report.max_zero_excess = report.max_zero_excess.max(excess);
        } else {
            for (k, j) in range.enumerate() {
                let g = dot(design.column(j), residual);
                let s = (g - lw * b[k] / norm).abs();
                report.max_stationarity = report.max_stationarity.max(s);
            }
        }
    }
    report
}

/// KKT check over all blocks with the residual recomputed from scratch.
pub fn kkt_certificate(
    design: &StandardizedDesign,
    y: &[f64],
    beta: &[f64],
    lambda: f64,
    weights: &[f64],
) -> KktReport {
    let r = design.residual(y, beta);
    kkt_on_blocks(design, &r, beta, lambda, weights, 0..design.n_blocks())
}

/// Full BCD over every block.
pub fn fit_bcd(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    config: &SolverConfig,
    initial_beta: Option<&[f64]>,
) -> Result<SolverState> {
    let all: Vec<usize> = (0..design.n_blocks()).collect();
    solve_blocks(design, y, lambda, weights, config, &all, initial_beta, &mut |_| {})
}

/// [`fit_bcd`] with a callback after every completed sweep.
pub fn fit_bcd_observed(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    config: &SolverConfig,
    initial_beta: Option<&[f64]>,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<SolverState> {
    let all: Vec<usize> = (0..design.n_blocks()).collect();
    solve_blocks(design, y, lambda, weights, config, &all, initial_beta, observer)
}

/// BCD restricted to `blocks` (ascending); all other blocks stay at zero.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_blocks(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    config: &SolverConfig,
    blocks: &[usize],
    initial_beta: Option<&[f64]>,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<SolverState> {
    check_dims(design, y, weights)?;
    config.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda {lambda} must be finite and nonnegative")));
    }
    let mut state = SolverState::zero(design, y, lambda);
    if let Some(b0) = initial_beta {
        if b0.len() != design.n_cols() {
            return Err(Error::DimensionMismatch("initial beta length".into()));
        }
        state.beta.copy_from_slice(b0);
        state.total_residual = design.residual(y, b0);
    }
    state.objective_value =
        0.5 * sq_norm(&state.total_residual) + lambda * penalty(design, &state.beta, weights);
    state.converged = false;
    let floor = objective_floor(y);
    let mut scratch = vec![0.0; design.n_rows()];

    for sweep in 1..=config.max_sweeps {
        for &l in blocks {
            let range = design.block(l);
            let lw = lambda * weights[l];
            let nonzero = state.beta[range.clone()].iter().any(|&b| b != 0.0);
            // r_l = r + X_l β_l
            scratch.copy_from_slice(&state.total_residual);
            if nonzero {
                for j in range.clone() {
                    let b = state.beta[j];
                    if b != 0.0 {
                        axpy(b, design.column(j), &mut scratch);
                    }
                }
            }
            if design.block_score(l, &scratch) <= lw {
                if nonzero {
                    state.beta[range].iter_mut().for_each(|b| *b = 0.0);
                    state.total_residual.copy_from_slice(&scratch);
                }
                continue;
            }
            fit_block_in_place(
                design,
                l,
                &mut state.beta[range],
                &mut state.total_residual,
                &scratch,
                lw,
                floor,
                config,
            )?;
        }
        let f = 0.5 * sq_norm(&state.total_residual) + lambda * penalty(design, &state.beta, weights);
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("objective {f} after sweep {sweep}")));
        }
        let rel = (state.objective_value - f).abs() / f.abs().max(floor);
        state.objective_value = f;
        state.objective_trace.push(f);
        state.sweeps_done = sweep;
        if rel < config.global_tol {
            let kkt = kkt_on_blocks(
                design,
                &state.total_residual,
                &state.beta,
                lambda,
                weights,
                blocks.iter().copied(),
            );
            if kkt.passes(ZERO_BLOCK_TOL, config.kkt_tol) {
                state.converged = true;
            }
        }
        observer(&state);
        if state.converged {
            break;
        }
    }
    state.block_residual_scratch = scratch;
    Ok(state)
}

/// Plain BCD as in the unaccelerated algorithm: every block is visited on
/// every sweep, the partial residual is rebuilt from scratch for each block
/// and the block residual is rebuilt for each coordinate. Same update rule
/// and stopping tests as [`fit_bcd`]; used as the timing baseline.
pub fn fit_bcd_naive(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    config: &SolverConfig,
) -> Result<SolverState> {
    check_dims(design, y, weights)?;
    config.validate()?;
    let n = design.n_rows();
    let mut state = SolverState::zero(design, y, lambda);
    state.converged = false;
    let floor = objective_floor(y);
    let nblocks = design.n_blocks();

    let partial_residual = |beta: &[f64], l: usize| -> Vec<f64> {
        let mut r = y.to_vec();
        for m in (0..nblocks).filter(|&m| m != l) {
            for j in design.block(m) {
                if beta[j] != 0.0 {
                    axpy(-beta[j], design.column(j), &mut r);
                }
            }
        }
        r
    };
    let block_residual = |partial: &[f64], beta: &[f64], l: usize| -> Vec<f64> {
        let mut h = partial.to_vec();
        for j in design.block(l) {
            if beta[j] != 0.0 {
                axpy(-beta[j], design.column(j), &mut h);
            }
        }
        h
    };

    for sweep in 1..=config.max_sweeps {
        for l in 0..nblocks {
            let range = design.block(l);
            let lw = lambda * weights[l];
            let partial = partial_residual(&state.beta, l);
            if design.block_score(l, &partial) <= lw {
                state.beta[range].iter_mut().for_each(|b| *b = 0.0);
                continue;
            }
            let h0 = block_residual(&partial, &state.beta, l);
            let mut f_prev = 0.5 * sq_norm(&h0) + lw * sq_norm(&state.beta[range.clone()]).sqrt();
            for _ in 0..config.max_block_iters {
                let mut stationarity = 0.0f64;
                for j in range.clone() {
                    let h = block_residual(&partial, &state.beta, l);
                    let g = dot(design.column(j), &h);
                    let norm = sq_norm(&state.beta[range.clone()]).sqrt();
                    let old = state.beta[j];
                    stationarity = if norm > 0.0 {
                        stationarity.max((g - lw * old / norm).abs())
                    } else {
                        f64::INFINITY
                    };
                    state.beta[j] = taylor_step(g, old, lw, if norm > 0.0 { norm } else { config.eta });
                }
                let mut h = block_residual(&partial, &state.beta, l);
                let mut sq = sq_norm(&state.beta[range.clone()]);
                if config.radial_step && sq > 0.0 {
                    radial_rescale(&mut state.beta[range.clone()], &mut h, &partial, lw, &mut sq);
                }
                let f = 0.5 * sq_norm(&h) + lw * sq.sqrt();
                if !f.is_finite() {
                    return Err(Error::NonFinite(format!("block {l} objective {f}")));
                }
                let rel = (f_prev - f).abs() / f.abs().max(floor);
                f_prev = f;
                if rel < config.block_tol && stationarity <= config.kkt_tol {
                    break;
                }
            }
        }
        let r = design.residual(y, &state.beta);
        let f = 0.5 * sq_norm(&r) + lambda * penalty(design, &state.beta, weights);
        let rel = (state.objective_value - f).abs() / f.abs().max(floor);
        state.objective_value = f;
        state.objective_trace.push(f);
        state.sweeps_done = sweep;
        state.total_residual = r;
        if rel < config.global_tol {
            let kkt = kkt_on_blocks(design, &state.total_residual, &state.beta, lambda, weights, 0..nblocks);
            if kkt.passes(ZERO_BLOCK_TOL, config.kkt_tol) {
                state.converged = true;
                break;
            }
        }
    }
    debug_assert_eq!(state.total_residual.len(), n);
    Ok(state)
}
