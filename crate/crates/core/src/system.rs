//! Coupled solver for
//! `(-Δ)^s u = u^{-p} v^{-q}`, `(-Δ)^t v = u^{-r} v^{-θ}` on an interval.
//!
//! Each outer step freezes one component in the other's equation and solves
//! the two decoupled scalar problems. Iterates are kept inside an order
//! interval `m d^{low} <= · <= M d^{up}` whose constants satisfy
//!
//! ```text
//! M1^{r/(1+θ)} m2 <= c1 < c2 <= M1 m2^{q/(1+p)}
//! M2^{q/(1+p)} m1 <= c1 < c2 <= M2 m1^{r/(1+θ)}
//! ```
//!
//! with `c1`, `c2` the envelope constants of the scalar model problems.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::fraclap::FracOp;
use crate::grid::{distance, Grid, GridFn};
use crate::rate::{self, default_window, RateFit, Side};
use crate::regimes::{self, Condition, Envelope, ExistenceCase, SystemRates};
use crate::singular::{self, solve_weighted, WeightedSolve};

pub const DEFAULT_OUTER_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_OUTER: usize = 2000;
pub const DEFAULT_INNER_MAX_ITER: usize = 500;
/// Final iterations that must be free of clamping for `in_bracket`.
pub const CLAMP_WINDOW: usize = 3;
/// Padding applied to measured envelope ratios.
pub const SAFETY: f64 = 2.0;

const CHAIN_SLACK: f64 = 1e-12;

/// Constants `m1, M1, m2, M2` of the order interval, kept in logarithmic
/// form so that extreme exponents do not underflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketConstants {
    pub c1: f64,
    pub c2: f64,
    pub ln_m1: f64,
    #[serde(rename = "ln_M1")]
    pub ln_cap_m1: f64,
    pub ln_m2: f64,
    #[serde(rename = "ln_M2")]
    pub ln_cap_m2: f64,
    /// `1 - qr/((1+p)(1+θ))`.
    pub kappa: f64,
}

/// Slack of each inequality in the two chains, in log form; all entries are
/// `>= 0` (up to rounding) for a valid bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSlack {
    pub low_31: f64,
    pub high_31: f64,
    pub low_32: f64,
    pub high_32: f64,
    pub c_gap: f64,
}

impl ChainSlack {
    pub fn min(&self) -> f64 {
        [self.low_31, self.high_31, self.low_32, self.high_32, self.c_gap]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

impl BracketConstants {
    /// `m2 = min(½, (c1 c2^{-r/(1+θ)})^{1/κ})`, `M1 = c2 m2^{-q/(1+p)}` and
    /// symmetrically for `m1`, `M2`. When `c2 <= 1` the minimum also
    /// includes `(c2/2)^{(1+p)/q}` (resp. `(c2/2)^{(1+θ)/r}`) so that
    /// `M1, M2 >= 2`.
    pub fn build(e: &Exponents, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite() && c2.is_finite() && c1 < c2) {
            return Err(Error::InvalidArgument(format!("need 0 < c1 < c2, got c1 = {c1}, c2 = {c2}")));
        }
        if !regimes::ineq5(e) {
            return Err(Error::Infeasible("(1+p)(1+theta) - qr <= 0".into()));
        }
        let rho_u = e.q() / (1.0 + e.p());
        let rho_v = e.r() / (1.0 + e.theta());
        let kappa = 1.0 - rho_u * rho_v;
        let (l1, l2) = (c1.ln(), c2.ln());
        let half = 0.5f64.ln();
        let guard = |rho: f64| if c2 <= 1.0 { (l2 - 2f64.ln()) / rho } else { f64::INFINITY };

        let ln_m2 = half.min((l1 - rho_v * l2) / kappa).min(guard(rho_u));
        let ln_cap_m1 = l2 - rho_u * ln_m2;
        let ln_m1 = half.min((l1 - rho_u * l2) / kappa).min(guard(rho_v));
        let ln_cap_m2 = l2 - rho_v * ln_m1;
        let out = Self { c1, c2, ln_m1, ln_cap_m1, ln_m2, ln_cap_m2, kappa };

        let slack = out.chain_slack(e);
        let scale = 1.0 + [ln_m1, ln_m2, ln_cap_m1, ln_cap_m2, l1, l2]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        if !(slack.min() >= -CHAIN_SLACK * scale) || !(ln_m1 < 0.0 && ln_m2 < 0.0) {
            return Err(Error::Infeasible(format!("chain check failed: {slack:?}")));
        }
        if !(ln_cap_m1 > 0.0 && ln_cap_m2 > 0.0) || ![ln_m1, ln_m2, ln_cap_m1, ln_cap_m2].iter().all(|v| v.is_finite()) {
            return Err(Error::Infeasible("constants out of range".into()));
        }
        Ok(out)
    }

    pub fn chain_slack(&self, e: &Exponents) -> ChainSlack {
        let rho_u = e.q() / (1.0 + e.p());
        let rho_v = e.r() / (1.0 + e.theta());
        let (l1, l2) = (self.c1.ln(), self.c2.ln());
        ChainSlack {
            low_31: l1 - (rho_v * self.ln_cap_m1 + self.ln_m2),
            high_31: self.ln_cap_m1 + rho_u * self.ln_m2 - l2,
            low_32: l1 - (rho_u * self.ln_cap_m2 + self.ln_m1),
            high_32: self.ln_cap_m2 + rho_v * self.ln_m1 - l2,
            c_gap: l2 - l1,
        }
    }

    pub fn m1(&self) -> f64 {
        self.ln_m1.exp()
    }
    pub fn cap_m1(&self) -> f64 {
        self.ln_cap_m1.exp()
    }
    pub fn m2(&self) -> f64 {
        self.ln_m2.exp()
    }
    pub fn cap_m2(&self) -> f64 {
        self.ln_cap_m2.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketSet {
    pub exponents: Exponents,
    pub rates: SystemRates,
    pub constants: BracketConstants,
}

impl BracketSet {
    pub fn envelope(&self) -> &Envelope {
        &self.rates.envelope
    }

    pub fn c1(&self) -> f64 {
        self.constants.c1
    }

    pub fn c2(&self) -> f64 {
        self.constants.c2
    }

    /// Bracket rebuilt from `c1/2` and `2 c2`.
    pub fn widened(&self) -> Result<Self> {
        build_bracket(&self.exponents, self.rates.case, 0.5 * self.c1(), 2.0 * self.c2())
    }

    /// Checks `m d^{low} < M d^{up}` somewhere in an interval of length
    /// `diam`, i.e. `m diam^{low-up} < M`, for both components.
    pub fn check_nonempty(&self, diam: f64) -> Result<()> {
        let env = self.envelope();
        let k = &self.constants;
        let ld = diam.ln();
        if k.ln_m1 + (env.u_low - env.u_up) * ld >= k.ln_cap_m1
            || k.ln_m2 + (env.v_low - env.v_up) * ld >= k.ln_cap_m2
        {
            return Err(Error::Infeasible(format!("envelopes are empty on an interval of length {diam}")));
        }
        Ok(())
    }

    fn envelope_values(&self, grid: &Grid) -> [Vec<f64>; 4] {
        let env = self.envelope();
        let k = &self.constants;
        let ld: Vec<f64> = distance(grid).values().iter().map(|d| d.ln()).collect();
        let curve = |lnc: f64, e: f64| ld.iter().map(|l| (lnc + e * l).exp()).collect::<Vec<_>>();
        [
            curve(k.ln_m1, env.u_low),
            curve(k.ln_cap_m1, env.u_up),
            curve(k.ln_m2, env.v_low),
            curve(k.ln_cap_m2, env.v_up),
        ]
    }
}

/// Order interval for the given existence case.
pub fn build_bracket(e: &Exponents, case: ExistenceCase, c1: f64, c2: f64) -> Result<BracketSet> {
    let rates = regimes::predicted_system_rates(e, case)?;
    let constants = BracketConstants::build(e, c1, c2)?;
    Ok(BracketSet { exponents: *e, rates, constants })
}

fn check_pair(op_s: &FracOp, op_t: &FracOp, e: &Exponents) -> Result<()> {
    if op_s.grid() != op_t.grid() {
        return Err(Error::GridMismatch);
    }
    if op_s.s() != e.s() || op_t.s() != e.t() {
        return Err(Error::InvalidArgument(format!(
            "operator orders ({}, {}) do not match (s, t) = ({}, {})",
            op_s.s(),
            op_t.s(),
            e.s(),
            e.t()
        )));
    }
    Ok(())
}

fn power_weight(grid: &Grid, gamma: f64) -> Vec<f64> {
    distance(grid).values().iter().map(|d| d.powf(-gamma)).collect()
}

fn model_solve(op: &FracOp, gamma: f64, power: f64) -> Result<Vec<f64>> {
    let w = power_weight(op.grid(), gamma);
    let sol = solve_weighted(
        op,
        &w,
        power,
        None,
        DEFAULT_INNER_TOL,
        singular::RESIDUAL_TOL,
        DEFAULT_INNER_MAX_ITER,
    )?;
    if !sol.converged {
        return Err(Error::NoConvergence { iterations: sol.iterations, residual: sol.residual });
    }
    Ok(sol.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub c1: f64,
    pub c2: f64,
    /// `min u/d^{u_low}`, `max u/d^{u_up}`, `min v/d^{v_low}`, `max v/d^{v_up}`
    /// of the four model solutions.
    pub ratios: [f64; 4],
}

/// Measures the envelope constants of the scalar model problems of a case.
///
/// The lower model for `u` uses the weight `d^{-q v_up}` (the largest `v`
/// allowed), the upper one `d^{-q v_low}`; the `v` models use `r u_up` and
/// `r u_low`. Ratios are padded by [`SAFETY`].
pub fn calibrate_constants(
    op_s: &FracOp,
    op_t: &FracOp,
    e: &Exponents,
    case: ExistenceCase,
) -> Result<Calibration> {
    check_pair(op_s, op_t, e)?;
    let env = regimes::predicted_system_rates(e, case)?.envelope;
    let grid = *op_s.grid();
    let d = distance(&grid).into_values();

    let min_ratio = |u: &[f64], ex: f64| {
        u.iter().zip(&d).map(|(u, d)| u / d.powf(ex)).fold(f64::INFINITY, f64::min)
    };
    let max_ratio = |u: &[f64], ex: f64| u.iter().zip(&d).map(|(u, d)| u / d.powf(ex)).fold(0.0, f64::max);

    let u_lo = model_solve(op_s, e.q() * env.v_up, e.p())?;
    let u_hi = if env.v_low == env.v_up { u_lo.clone() } else { model_solve(op_s, e.q() * env.v_low, e.p())? };
    let v_lo = model_solve(op_t, e.r() * env.u_up, e.theta())?;
    let v_hi = if env.u_low == env.u_up { v_lo.clone() } else { model_solve(op_t, e.r() * env.u_low, e.theta())? };

    let ratios = [
        min_ratio(&u_lo, env.u_low),
        max_ratio(&u_hi, env.u_up),
        min_ratio(&v_lo, env.v_low),
        max_ratio(&v_hi, env.v_up),
    ];
    let c1 = ratios[0].min(ratios[2]) / SAFETY;
    let c2 = (ratios[1].max(ratios[3]) * SAFETY).max(SAFETY * c1);
    Ok(Calibration { c1, c2, ratios })
}

struct Inner {
    tol: f64,
    residual_tol: f64,
    max_iter: usize,
}

fn apply_t_inner(
    op_s: &FracOp,
    op_t: &FracOp,
    e: &Exponents,
    u: &[f64],
    v: &[f64],
    inner: &Inner,
) -> Result<(WeightedSolve, WeightedSolve)> {
    let ku: Vec<f64> = v.iter().map(|v| v.powf(-e.q())).collect();
    let kv: Vec<f64> = u.iter().map(|u| u.powf(-e.r())).collect();
    let tu = solve_weighted(op_s, &ku, e.p(), Some(u), inner.tol, inner.residual_tol, inner.max_iter)?;
    let tv = solve_weighted(op_t, &kv, e.theta(), Some(v), inner.tol, inner.residual_tol, inner.max_iter)?;
    for sol in [&tu, &tv] {
        if !sol.converged {
            return Err(Error::NoConvergence { iterations: sol.iterations, residual: sol.residual });
        }
    }
    Ok((tu, tv))
}

fn check_positive(f: &GridFn) -> Result<()> {
    match f.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((i, v)) => Err(Error::NonpositiveSample { index: i, value: *v }),
        None => Ok(()),
    }
}

/// The decoupled map: `Tu` solves `(-Δ)^s Tu = v^{-q} Tu^{-p}` and `Tv`
/// solves `(-Δ)^t Tv = u^{-r} Tv^{-θ}`.
pub fn apply_t(
    op_s: &FracOp,
    op_t: &FracOp,
    e: &Exponents,
    u: &GridFn,
    v: &GridFn,
) -> Result<(GridFn, GridFn)> {
    check_pair(op_s, op_t, e)?;
    if u.grid() != op_s.grid() || v.grid() != op_s.grid() {
        return Err(Error::GridMismatch);
    }
    check_positive(u)?;
    check_positive(v)?;
    let inner = Inner { tol: DEFAULT_INNER_TOL, residual_tol: singular::RESIDUAL_TOL, max_iter: DEFAULT_INNER_MAX_ITER };
    let (tu, tv) = apply_t_inner(op_s, op_t, e, u.values(), v.values(), &inner)?;
    let g = *op_s.grid();
    Ok((GridFn::new(g, tu.u)?, GridFn::new(g, tv.u)?))
}

/// Relative residuals of both equations.
pub fn system_residuals(op_s: &FracOp, op_t: &FracOp, e: &Exponents, u: &[f64], v: &[f64]) -> (f64, f64) {
    let ku: Vec<f64> = v.iter().map(|v| v.powf(-e.q())).collect();
    let kv: Vec<f64> = u.iter().map(|u| u.powf(-e.r())).collect();
    (
        singular::relative_residual(op_s, &ku, e.p(), u),
        singular::relative_residual(op_t, &kv, e.theta(), v),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Midpoint,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemOptions {
    pub tol: f64,
    pub max_outer: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub start: Start,
    pub allow_widen: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_OUTER_TOL,
            max_outer: DEFAULT_MAX_OUTER,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
            start: Start::Midpoint,
            allow_widen: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemReport {
    #[serde(skip)]
    pub u: GridFn,
    #[serde(skip)]
    pub v: GridFn,
    pub outer_iterations: usize,
    pub residuals: (f64, f64),
    pub change_history: Vec<(f64, f64)>,
    pub in_bracket: bool,
    /// Number of outer steps in which an envelope clamp was active.
    pub clamped_steps: usize,
    pub widened: bool,
    pub bracket: BracketSet,
    pub fitted_rates: Option<(RateFit, RateFit)>,
    pub converged: bool,
}

fn refuse_unless_existence(e: &Exponents) -> Result<ExistenceCase> {
    if let Some(c) = regimes::classify_nonexistence(e) {
        return Err(Error::RegimeRefusal(format!(
            "nonexistence condition ({}) holds: no positive solution",
            c.roman()
        )));
    }
    regimes::classify_existence(e).ok_or_else(|| {
        Error::RegimeRefusal("no existence result applies to these exponents (undetermined)".into())
    })
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) -> bool {
    let mut clamped = false;
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        if *v < *l {
            *v = *l;
            clamped = true;
        } else if *v > *h {
            *v = *h;
            clamped = true;
        }
    }
    clamped
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let top = new.iter().map(|v| v.abs()).fold(0.0, f64::max);
    new.iter().zip(old).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / top
}

/// Outer Picard iteration `(u, v) ← T(u, v)` with envelope clamping.
///
/// If clamping is still active in the final iterations, the bracket is
/// widened once and the iteration continues from the current pair.
pub fn solve_system(
    op_s: &FracOp,
    op_t: &FracOp,
    e: &Exponents,
    bracket: &BracketSet,
    opts: &SystemOptions,
) -> Result<SystemReport> {
    check_pair(op_s, op_t, e)?;
    refuse_unless_existence(e)?;
    if bracket.exponents != *e {
        return Err(Error::InvalidArgument("bracket was built for different exponents".into()));
    }
    let grid = *op_s.grid();
    bracket.check_nonempty(grid.len())?;

    let inner = Inner { tol: opts.inner_tol, residual_tol: 0.1 * opts.tol, max_iter: opts.inner_max_iter };
    let mut bracket = *bracket;
    let [mut u_lo, mut u_hi, mut v_lo, mut v_hi] = bracket.envelope_values(&grid);
    let (mut u, mut v) = match opts.start {
        Start::Midpoint => (
            u_lo.iter().zip(&u_hi).map(|(a, b)| (a * b).sqrt()).collect::<Vec<_>>(),
            v_lo.iter().zip(&v_hi).map(|(a, b)| (a * b).sqrt()).collect::<Vec<_>>(),
        ),
        Start::Bottom => (u_lo.clone(), v_lo.clone()),
        Start::Top => (u_hi.clone(), v_hi.clone()),
    };

    let mut widened = false;
    let mut clamp_log: Vec<bool> = Vec::new();
    let mut history = Vec::new();
    let mut residuals = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut it = 0;
    loop {
        while it < opts.max_outer {
            it += 1;
            let (tu, tv) = apply_t_inner(op_s, op_t, e, &u, &v, &inner)?;
            let (mut nu, mut nv) = (tu.u, tv.u);
            let cu = clamp_into(&mut nu, &u_lo, &u_hi);
            let cv = clamp_into(&mut nv, &v_lo, &v_hi);
            clamp_log.push(cu || cv);
            let change = (rel_change(&nu, &u), rel_change(&nv, &v));
            history.push(change);
            u = nu;
            v = nv;
            residuals = system_residuals(op_s, op_t, e, &u, &v);
            if change.0 <= opts.tol && change.1 <= opts.tol && residuals.0 <= opts.tol && residuals.1 <= opts.tol {
                converged = true;
                break;
            }
        }
        let recent_clamp = clamp_log.iter().rev().take(CLAMP_WINDOW).any(|&c| c);
        if recent_clamp && opts.allow_widen && !widened {
            widened = true;
            bracket = bracket.widened()?;
            bracket.check_nonempty(grid.len())?;
            [u_lo, u_hi, v_lo, v_hi] = bracket.envelope_values(&grid);
            converged = false;
            if it >= opts.max_outer {
                break;
            }
            continue;
        }
        break;
    }
    let in_bracket = !clamp_log.is_empty() && !clamp_log.iter().rev().take(CLAMP_WINDOW).any(|&c| c);
    let converged = converged && residuals.0 <= opts.tol && residuals.1 <= opts.tol;

    let u = GridFn::new(grid, u)?;
    let v = GridFn::new(grid, v)?;
    let window = default_window(&grid);
    let fitted_rates = match (rate::fit_rate(&u, window, Side::Pooled), rate::fit_rate(&v, window, Side::Pooled)) {
        (Ok(a), Ok(b)) => Some((a, b)),
        _ => None,
    };
    Ok(SystemReport {
        u,
        v,
        outer_iterations: it,
        residuals,
        change_history: history,
        in_bracket,
        clamped_steps: clamp_log.iter().filter(|&&c| c).count(),
        widened,
        bracket,
        fitted_rates,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub window: (f64, f64),
    /// `min u_i / d_i^s` over the window.
    pub u_min_ratio: f64,
    pub v_min_ratio: f64,
    /// Minima over the inner (boundary-side) and outer halves, split at the
    /// geometric midpoint of the window.
    pub u_inner: f64,
    pub u_outer: f64,
    pub v_inner: f64,
    pub v_outer: f64,
    pub pass: bool,
}

/// Default window for lower-bound checks: from the third node to a quarter
/// of the interval length.
pub fn lower_bound_window(grid: &Grid) -> (f64, f64) {
    (3.0 * grid.h(), 0.25 * grid.len())
}

/// Checks `u >= c d^s`, `v >= c d^t`: positive minimum ratios, and the
/// boundary-side half of the window does not drop below half the minimum
/// of the interior-side half.
pub fn lower_bound_check_fns(
    u: &GridFn,
    v: &GridFn,
    s: f64,
    t: f64,
    window: (f64, f64),
) -> Result<LowerBoundReport> {
    u.check_same_grid(v)?;
    let grid = u.grid();
    let split = (window.0 * window.1).sqrt();
    let halves = |f: &GridFn, ex: f64| -> Result<(f64, f64)> {
        let idx = rate::window_nodes(grid, window, Side::Pooled);
        if idx.len() < 2 * rate::MIN_FIT_NODES {
            return Err(Error::InsufficientData { found: idx.len(), needed: 2 * rate::MIN_FIT_NODES });
        }
        let (mut inner, mut outer) = (f64::INFINITY, f64::INFINITY);
        for i in idx {
            let d = grid.dist(i);
            let r = f.values()[i] / d.powf(ex);
            if d < split {
                inner = inner.min(r);
            } else {
                outer = outer.min(r);
            }
        }
        Ok((inner, outer))
    };
    let (u_inner, u_outer) = halves(u, s)?;
    let (v_inner, v_outer) = halves(v, t)?;
    let ok = |i: f64, o: f64| i > 0.0 && o > 0.0 && i >= 0.5 * o;
    Ok(LowerBoundReport {
        window,
        u_min_ratio: u_inner.min(u_outer),
        v_min_ratio: v_inner.min(v_outer),
        u_inner,
        u_outer,
        v_inner,
        v_outer,
        pass: ok(u_inner, u_outer) && ok(v_inner, v_outer),
    })
}

pub fn lower_bound_check(report: &SystemReport, s: f64, t: f64) -> Result<LowerBoundReport> {
    lower_bound_check_fns(&report.u, &report.v, s, t, lower_bound_window(report.u.grid()))
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Relative sup-distance between the two limits, per component.
    pub distance_u: f64,
    pub distance_v: f64,
    pub distance: f64,
    /// `qr / ((1+p)(1+θ))`.
    pub contraction_exponent: f64,
    pub bottom: SystemReport,
    pub top: SystemReport,
}

/// Runs the solver from the bottom and from the top of the bracket and
/// compares the limits.
pub fn uniqueness_probe(
    op_s: &FracOp,
    op_t: &FracOp,
    e: &Exponents,
    bracket: &BracketSet,
    opts: &SystemOptions,
) -> Result<UniquenessReport> {
    if !regimes::classify_uniqueness(e) {
        return Err(Error::HypothesisNotMet("uniqueness conditions do not hold".into()));
    }
    let bottom = solve_system(op_s, op_t, e, bracket, &SystemOptions { start: Start::Bottom, ..*opts })?;
    let top = solve_system(op_s, op_t, e, bracket, &SystemOptions { start: Start::Top, ..*opts })?;
    let distance_u = rel_change(bottom.u.values(), top.u.values());
    let distance_v = rel_change(bottom.v.values(), top.v.values());
    Ok(UniquenessReport {
        distance_u,
        distance_v,
        distance: distance_u.max(distance_v),
        contraction_exponent: e.q() * e.r() / ((1.0 + e.p()) * (1.0 + e.theta())),
        bottom,
        top,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceDiagnostic {
    pub heuristic: bool,
    pub condition: Condition,
    /// Order and singular weight exponent of the reduced scalar problem.
    pub order: f64,
    pub gamma: f64,
    pub power: f64,
    /// `(n, max u)` per grid.
    pub sup_norms: Vec<(usize, f64)>,
    /// `log(max u_k / max u_{k-1}) / log(n_k / n_{k-1})`.
    pub growth: Vec<f64>,
}

/// Heuristic: solves the reduced scalar problem behind a nonexistence
/// condition on successively finer grids. Its weight exponent is at least
/// twice the order, so the discrete solutions grow without bound under
/// refinement. Conditions (v) and (vi) have no scalar reduction.
pub fn nonexistence_diagnostic(e: &Exponents, a: f64, b: f64, ns: &[usize]) -> Result<NonexistenceDiagnostic> {
    let condition = regimes::classify_nonexistence(e)
        .ok_or_else(|| Error::HypothesisNotMet("no nonexistence condition holds".into()))?;
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    let (order, gamma, power) = match condition {
        Condition::I => (t, r * s, th),
        Condition::II => (t, r * (2.0 * s - q * t) / (1.0 + p), th),
        Condition::III => (s, q * t, p),
        Condition::IV => (s, q * (2.0 * t - r * s) / (1.0 + th), p),
        Condition::V | Condition::VI => {
            return Err(Error::InvalidCase(format!(
                "condition ({}) has no scalar reduction",
                condition.roman()
            )))
        }
    };
    let mut sup_norms = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::new(a, b, n)?;
        let op = FracOp::assemble(&grid, order)?;
        let w = power_weight(&grid, gamma);
        let sol = solve_weighted(&op, &w, power, None, DEFAULT_INNER_TOL, singular::RESIDUAL_TOL, DEFAULT_INNER_MAX_ITER)?;
        sup_norms.push((n, sol.u.iter().copied().fold(0.0, f64::max)));
    }
    let growth = sup_norms
        .windows(2)
        .map(|w| (w[1].1 / w[0].1).ln() / (w[1].0 as f64 / w[0].0 as f64).ln())
        .collect();
    Ok(NonexistenceDiagnostic { heuristic: true, condition, order, gamma, power, sup_norms, growth })
}
