//! Log-log fitting of boundary decay rates.
//!
//! Boundary statements of the form `c d^σ <= f <= C d^σ` are checked by a
//! least-squares fit of `log f` against `log d` over a window of distances
//! to the boundary.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};

/// Minimum number of nodes a fit needs inside its window.
pub const MIN_FIT_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub side: Side,
    pub nodes: usize,
}

/// Default fitting window `[5h, 0.025 (b - a)]`.
///
/// The lower end skips the nodes with the largest discretization error; the
/// upper end keeps the fit inside the boundary layer where subleading terms
/// of singular weights are small.
pub fn default_window(grid: &Grid) -> (f64, f64) {
    (5.0 * grid.h(), 0.025 * grid.len())
}

/// Nodes whose distance to the boundary lies in `window` on `side`.
pub fn window_nodes(grid: &Grid, window: (f64, f64), side: Side) -> Vec<usize> {
    let (lo, hi) = window;
    let slack = 1e-12 * grid.h();
    (0..grid.n())
        .filter(|&i| {
            let d = grid.dist(i);
            let on_side = match side {
                Side::Left => grid.is_left(i),
                Side::Right => !grid.is_left(i),
                Side::Pooled => true,
            };
            on_side && d >= lo - slack && d <= hi + slack
        })
        .collect()
}

fn check_window(grid: &Grid, window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "empty fitting window [{lo}, {hi}]"
        )));
    }
    if lo < grid.h() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "window lower end {lo} is below the grid spacing {}",
            grid.h()
        )));
    }
    Ok(())
}

/// Ordinary least squares `y = slope x + intercept`; returns
/// `(slope, intercept, r_squared)`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

/// Fits `log f_i ≈ σ log d_i + c` over the nodes with `d_i` in `window`.
pub fn fit_rate(f: &GridFn, window: (f64, f64), side: Side) -> Result<RateFit> {
    let grid = f.grid();
    check_window(grid, window)?;
    let idx = window_nodes(grid, window, side);
    let vals = f.values();
    if let Some(&i) = idx.iter().find(|&&i| vals[i] <= 0.0) {
        return Err(Error::NonpositiveSample { index: i, value: vals[i] });
    }
    fit_log_samples(grid, &idx, |i| vals[i].ln(), window, side)
}

/// Same as [`fit_rate`] but with `log f` supplied directly, so callers can
/// divide out known slowly varying factors before fitting.
pub(crate) fn fit_log_samples(
    grid: &Grid,
    idx: &[usize],
    log_f: impl Fn(usize) -> f64,
    window: (f64, f64),
    side: Side,
) -> Result<RateFit> {
    if idx.len() < MIN_FIT_NODES {
        return Err(Error::InsufficientData { found: idx.len(), needed: MIN_FIT_NODES });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| grid.dist(i).ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| log_f(i)).collect();
    let (exponent, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(RateFit { exponent, intercept, r_squared, window, side, nodes: idx.len() })
}
