//! Principal Dirichlet eigenpair and torsion function of the discrete operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraclap::FracOp;
use crate::grid::{Grid, GridFn};
use crate::linalg;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
pub const MAX_EIGEN_ITERATIONS: usize = 500;

/// Nodes excluded at each end when measuring `φ / d^s`.
pub const EDGE_SKIP: usize = 2;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Normalized so that `max φ = 1`.
    pub phi: GridFn,
    /// `‖A φ - λ₁ φ‖_∞`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct TorsionFn {
    pub phi_torsion: GridFn,
}

fn normalize_max(x: &mut [f64]) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in x.iter_mut() {
        *v /= m;
    }
}

/// Inverse power iteration (shift 0) started from the constant vector.
pub fn principal_eigenpair(op: &FracOp, tol: f64) -> Result<EigenPair> {
    principal_eigenpair_from(op, tol, &vec![1.0; op.n()])
}

/// Same as [`principal_eigenpair`] with a caller-supplied positive start.
pub fn principal_eigenpair_from(op: &FracOp, tol: f64, start: &[f64]) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if start.len() != op.n() {
        return Err(Error::GridMismatch);
    }
    if start.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("start vector must be positive".into()));
    }
    let chol = op.factor()?;
    let floor = 64.0 * f64::EPSILON * op.max_abs_row_sum();

    let mut x = start.to_vec();
    normalize_max(&mut x);
    let mut best = (f64::INFINITY, 0.0, x.clone());
    for it in 1..=MAX_EIGEN_ITERATIONS {
        let mut y = chol.solve(&x);
        let lambda = linalg::dot(&y, &x) / linalg::dot(&y, &y);
        normalize_max(&mut y);
        let ay = op.apply_slice(&y);
        let residual = ay
            .iter()
            .zip(&y)
            .map(|(a, v)| (a - lambda * v).abs())
            .fold(0.0, f64::max);
        if residual < best.0 {
            best = (residual, lambda, y.clone());
        }
        if residual <= (tol * lambda).max(floor) {
            let lambda1 = linalg::dot(&ay, &y) / linalg::dot(&y, &y);
            return Ok(EigenPair {
                lambda1,
                phi: GridFn::from_vec_unchecked(*op.grid(), y),
                residual,
                iterations: it,
            });
        }
        x = y;
    }
    Err(Error::NoConvergence { iterations: MAX_EIGEN_ITERATIONS, residual: best.0 })
}

/// Solution of `(-Δ)^s φ = 1`.
pub fn torsion(op: &FracOp) -> Result<TorsionFn> {
    let one = GridFn::constant(*op.grid(), 1.0);
    Ok(TorsionFn { phi_torsion: op.solve_dirichlet(&one)? })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenBoundsReport {
    /// `min φ_i / d_i^s` away from the two outermost nodes at each end.
    pub c_low: f64,
    pub c_high: f64,
    /// Whether `φ ≤ λ₁ φ_torsion + tol` at every node.
    pub w3_ok: bool,
    /// `min_i (λ₁ φ_torsion,i - φ_i)`; negative values are violations.
    pub w3_min_deficit: f64,
    pub w3_tol: f64,
}

pub fn verify_eigen_bounds(
    pair: &EigenPair,
    tors: &TorsionFn,
    grid: &Grid,
    s: f64,
) -> Result<EigenBoundsReport> {
    if pair.phi.grid() != grid || tors.phi_torsion.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.n();
    if n <= 2 * EDGE_SKIP {
        return Err(Error::InsufficientData { found: n, needed: 2 * EDGE_SKIP + 1 });
    }
    let phi = pair.phi.values();
    let (mut c_low, mut c_high) = (f64::INFINITY, 0.0f64);
    for (i, v) in phi.iter().enumerate().take(n - EDGE_SKIP).skip(EDGE_SKIP) {
        let r = v / grid.dist(i).powf(s);
        c_low = c_low.min(r);
        c_high = c_high.max(r);
    }
    let w3_tol = 1e-8 * pair.lambda1;
    let w3_min_deficit = phi
        .iter()
        .zip(tors.phi_torsion.values())
        .map(|(p, t)| pair.lambda1 * t - p)
        .fold(f64::INFINITY, f64::min);
    Ok(EigenBoundsReport {
        c_low,
        c_high,
        w3_ok: w3_min_deficit >= -w3_tol,
        w3_min_deficit,
        w3_tol,
    })
}
