//! Scalar singular problem `(-Δ)^s u = K(x) u^{-p}` with `K = coeff · d^{-γ}`.
//!
//! The solution map `S(u) = ((-Δ)^s)^{-1}(K u^{-p})` reverses order when
//! `p > 0`, so plain Picard iteration oscillates. The update
//! `u ← u^{1-ω} S(u)^ω` with `ω = 1/(1+p)` is a contraction in `log u` whose
//! linearized factor is at most `p/(1+p)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraclap::FracOp;
use crate::grid::{distance, Grid, GridFn};
use crate::rate::{self, default_window, fit_log_samples, window_nodes, RateFit, Side};
use crate::spectral;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Relative residual a scalar solve must reach to count as converged.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Positivity floor relative to `max u`.
pub const FLOOR: f64 = 1e-14;
/// Spread of `u / (d^s (ln(2/φ))^{1/(1+p)})` accepted as bounded.
pub const LOG_RATIO_SPREAD: f64 = 3.0;
/// Log-log slope of that ratio above which it is flagged as decaying.
pub const LOG_RATIO_DRIFT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularProblem {
    pub s: f64,
    pub gamma: f64,
    pub coeff: f64,
    pub p: f64,
}

impl SingularProblem {
    pub fn new(s: f64, gamma: f64, coeff: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("s must lie in (0, 1), got {s}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(Error::InvalidArgument(format!("coeff must be finite and > 0, got {coeff}")));
        }
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be finite and >= 0, got {p}")));
        }
        Ok(Self { s, gamma, coeff, p })
    }

    /// Nodal values of `K = coeff · d^{-γ}`.
    pub fn weight(&self, grid: &Grid) -> Vec<f64> {
        distance(grid).values().iter().map(|d| self.coeff * d.powf(-self.gamma)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sublinear,
    Critical,
    Superlinear,
    Nonexistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePrediction {
    pub regime: Regime,
    /// Boundary exponent; `None` when no positive solution exists.
    pub exponent: Option<f64>,
    /// Solutions carry the extra factor `(ln(2/φ_s))^{1/(1+p)}`.
    pub log_correction: bool,
}

/// Boundary behaviour of the positive solution by the sign of `γ/s + p - 1`.
pub fn predict_rate(s: f64, gamma: f64, p: f64) -> RatePrediction {
    if gamma >= 2.0 * s {
        return RatePrediction { regime: Regime::Nonexistent, exponent: None, log_correction: false };
    }
    let key = gamma / s + p;
    if key < 1.0 {
        RatePrediction { regime: Regime::Sublinear, exponent: Some(s), log_correction: false }
    } else if key == 1.0 {
        RatePrediction { regime: Regime::Critical, exponent: Some(s), log_correction: true }
    } else {
        RatePrediction {
            regime: Regime::Superlinear,
            exponent: Some((2.0 * s - gamma) / (1.0 + p)),
            log_correction: false,
        }
    }
}

/// Outcome of the damped iteration on a weighted problem.
#[derive(Debug, Clone)]
pub(crate) struct WeightedSolve {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub converged: bool,
    pub floor_ok: bool,
}

/// `‖A u - w u^{-p}‖_∞ / ‖w u^{-p}‖_∞`.
pub(crate) fn relative_residual(op: &FracOp, weight: &[f64], p: f64, u: &[f64]) -> f64 {
    let au = op.apply_slice(u);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for ((a, w), v) in au.iter().zip(weight).zip(u) {
        let f = w * v.powf(-p);
        num = num.max((a - f).abs());
        den = den.max(f.abs());
    }
    num / den
}

fn apply_floor(u: &mut [f64]) -> f64 {
    let floor = FLOOR * u.iter().copied().fold(0.0, f64::max);
    for v in u.iter_mut() {
        if !(*v > floor) {
            *v = floor;
        }
    }
    floor
}

/// Damped geometric-mean iteration for `(-Δ)^s u = w u^{-p}`.
pub(crate) fn solve_weighted(
    op: &FracOp,
    weight: &[f64],
    p: f64,
    init: Option<&[f64]>,
    tol: f64,
    residual_tol: f64,
    max_iter: usize,
) -> Result<WeightedSolve> {
    let n = op.n();
    if weight.len() != n || init.is_some_and(|u| u.len() != n) {
        return Err(Error::GridMismatch);
    }
    if p == 0.0 {
        let u = op.solve_dirichlet(&GridFn::new(*op.grid(), weight.to_vec())?)?.into_values();
        let residual = relative_residual(op, weight, 0.0, &u);
        return Ok(WeightedSolve {
            floor_ok: u.iter().all(|&v| v > 0.0),
            u,
            iterations: 1,
            residual,
            history: vec![residual],
            converged: true,
        });
    }

    let omega = 1.0 / (1.0 + p);
    let mut u = match init {
        Some(u0) => u0.to_vec(),
        None => op.solve_slice(&vec![1.0; n])?,
    };
    let mut floor = apply_floor(&mut u);
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for it in 1..=max_iter {
        let rhs: Vec<f64> = weight.iter().zip(&u).map(|(w, v)| w * v.powf(-p)).collect();
        let su = op.solve_slice(&rhs)?;
        let mut next: Vec<f64> = u
            .iter()
            .zip(&su)
            .map(|(v, s)| if *s > 0.0 { v.powf(1.0 - omega) * s.powf(omega) } else { 0.0 })
            .collect();
        floor = apply_floor(&mut next);
        let top = next.iter().copied().fold(0.0, f64::max);
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / top;
        u = next;
        let residual = relative_residual(op, weight, p, &u);
        history.push(residual);
        if best.as_ref().map_or(true, |b| residual <= b.0) {
            best = Some((residual, u.clone(), it));
        }
        if change <= tol && residual <= residual_tol {
            let floor_ok = u.iter().all(|&v| v >= 10.0 * floor);
            return Ok(WeightedSolve { u, iterations: it, residual, history, converged: true, floor_ok });
        }
        if !residual.is_finite() {
            break;
        }
    }
    let (residual, u, _) = best.unwrap_or((f64::INFINITY, u, 0));
    let floor_ok = u.iter().all(|&v| v >= 10.0 * floor);
    Ok(WeightedSolve { u, iterations: history.len(), residual, history, converged: false, floor_ok })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub u: GridFn,
    pub prediction: RatePrediction,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Solution stays at least ten times above the positivity floor.
    pub floor_ok: bool,
    /// Boundary-rate fit over the default window; log-corrected in the
    /// critical regime. `None` when the grid is too coarse for the window.
    pub fit: Option<RateFit>,
}

/// Solves the scalar problem on the operator's grid. A run that exhausts
/// `max_iter` is returned with `converged = false` and the best iterate.
pub fn solve_singular(
    op: &FracOp,
    prob: &SingularProblem,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if op.s() != prob.s {
        return Err(Error::InvalidArgument(format!(
            "operator order {} differs from problem order {}",
            op.s(),
            prob.s
        )));
    }
    let prediction = predict_rate(prob.s, prob.gamma, prob.p);
    if prediction.regime == Regime::Nonexistent {
        return Err(Error::RegimeRefusal(format!(
            "gamma = {} >= 2s = {}: no positive solution",
            prob.gamma,
            2.0 * prob.s
        )));
    }
    let grid = *op.grid();
    let weight = prob.weight(&grid);
    let sol = solve_weighted(op, &weight, prob.p, None, tol, RESIDUAL_TOL, max_iter)?;
    let u = GridFn::new(grid, sol.u)?;

    let window = default_window(&grid);
    let fit = if prediction.log_correction {
        let phi = spectral::principal_eigenpair(op, spectral::DEFAULT_EIGEN_TOL)?.phi;
        fit_log_corrected(&u, &phi, prob.p, window, Side::Pooled).ok()
    } else {
        rate::fit_rate(&u, window, Side::Pooled).ok()
    };
    Ok(SolveReport {
        u,
        prediction,
        iterations: sol.iterations,
        residual: sol.residual,
        residual_history: sol.history,
        converged: sol.converged,
        floor_ok: sol.floor_ok,
        fit,
    })
}

/// Fits `log u - (1/(1+p)) log ln(2/φ)` against `log d`.
pub fn fit_log_corrected(
    u: &GridFn,
    phi: &GridFn,
    p: f64,
    window: (f64, f64),
    side: Side,
) -> Result<RateFit> {
    u.check_same_grid(phi)?;
    let grid = u.grid();
    let idx = window_nodes(grid, window, side);
    let (uv, pv) = (u.values(), phi.values());
    if let Some(&i) = idx.iter().find(|&&i| !(uv[i] > 0.0)) {
        return Err(Error::NonpositiveSample { index: i, value: uv[i] });
    }
    if let Some(&i) = idx.iter().find(|&&i| !(pv[i] > 0.0)) {
        return Err(Error::NonpositiveSample { index: i, value: pv[i] });
    }
    fit_log_samples(
        grid,
        &idx,
        |i| uv[i].ln() - (2.0 / pv[i]).ln().ln() / (1.0 + p),
        window,
        side,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct LogCorrectionReport {
    pub min: f64,
    pub max: f64,
    /// `max / min`.
    pub spread: f64,
    /// Slope of `log ρ` against `log d`; positive values mean the ratio
    /// decays toward the boundary.
    pub drift: f64,
    pub nodes: usize,
    /// `drift > LOG_RATIO_DRIFT`: the ratio still tends to zero at the
    /// boundary, so the log factor is missing.
    pub drifting: bool,
    pub pass: bool,
}

/// Ratio `ρ_i = u_i / (d_i^s (ln(2/φ_i))^{1/(1+p)})` over the window.
pub fn check_log_correction(
    u: &GridFn,
    phi: &GridFn,
    s: f64,
    p: f64,
    window: (f64, f64),
) -> Result<LogCorrectionReport> {
    u.check_same_grid(phi)?;
    let grid = u.grid();
    let idx = window_nodes(grid, window, Side::Pooled);
    if idx.len() < rate::MIN_FIT_NODES {
        return Err(Error::InsufficientData { found: idx.len(), needed: rate::MIN_FIT_NODES });
    }
    let (uv, pv) = (u.values(), phi.values());
    let mut rho = Vec::with_capacity(idx.len());
    for &i in &idx {
        let l = (2.0 / pv[i]).ln();
        if !(uv[i] > 0.0) || !(l > 0.0) {
            return Err(Error::NonpositiveSample { index: i, value: uv[i] });
        }
        rho.push(uv[i] / (grid.dist(i).powf(s) * l.powf(1.0 / (1.0 + p))));
    }
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rho.iter().copied().fold(0.0, f64::max);
    let xs: Vec<f64> = idx.iter().map(|&i| grid.dist(i).ln()).collect();
    let ys: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let (drift, _, _) = rate::least_squares(&xs, &ys);
    let spread = max / min;
    Ok(LogCorrectionReport {
        min,
        max,
        spread,
        drift,
        nodes: idx.len(),
        drifting: drift > LOG_RATIO_DRIFT,
        pass: spread <= LOG_RATIO_SPREAD,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonOutcome {
    pub ordered: bool,
    /// `min_i (u_super,i - u_sub,i)`.
    pub min_gap: f64,
}

/// Checks that `u_sub` and `u_super` are a discrete sub/supersolution pair
/// for `(-Δ)^s u = ψ u^{-p}` (up to relative `tol` per node) and reports
/// whether they are ordered.
pub fn comparison_check(
    op: &FracOp,
    psi: &GridFn,
    p: f64,
    u_sub: &GridFn,
    u_super: &GridFn,
    tol: f64,
) -> Result<ComparisonOutcome> {
    for f in [psi, u_sub, u_super] {
        if f.grid() != op.grid() {
            return Err(Error::GridMismatch);
        }
    }
    if let Some((i, v)) = psi.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonpositiveSample { index: i, value: *v });
    }
    for f in [u_sub, u_super] {
        if let Some((i, v)) = f.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonpositiveSample { index: i, value: *v });
        }
    }
    let defects = |u: &GridFn| -> Vec<(f64, f64)> {
        op.apply_slice(u.values())
            .iter()
            .zip(psi.values())
            .zip(u.values())
            .map(|((a, w), v)| {
                let f = w * v.powf(-p);
                (a - f, tol * f.abs().max(a.abs()))
            })
            .collect()
    };
    if let Some((i, (d, _))) = defects(u_sub).into_iter().enumerate().find(|(_, (d, slack))| d > slack) {
        return Err(Error::NotASubsolution { index: i, defect: d });
    }
    if let Some((i, (d, _))) = defects(u_super).into_iter().enumerate().find(|(_, (d, slack))| -d > *slack) {
        return Err(Error::NotASupersolution { index: i, defect: d });
    }
    let min_gap = u_super
        .values()
        .iter()
        .zip(u_sub.values())
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    Ok(ComparisonOutcome { ordered: min_gap >= 0.0, min_gap })
}
