//! Uniform interior grids on an interval and sampled grid functions.
//!
//! A [`Grid`] only carries the interior nodes `x_i = a + i h`, `i = 1..=n`.
//! Every [`GridFn`] is implicitly extended by zero outside `(a, b)`, which is
//! the exterior Dirichlet condition of the fractional problems solved here.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest admissible number of interior nodes.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidArgument(format!(
                "interval endpoints must satisfy a < b, got a = {a}, b = {b}"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_NODES} interior nodes, got {n}"
            )));
        }
        let h = (b - a) / (n + 1) as f64;
        Ok(Self { a, b, n, h })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// Interior node `i` in `0..n` (node `x_{i+1}` in one-based numbering).
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Distance of node `i` to the boundary, computed from the node index so
    /// that the two halves of a grid are exactly mirror images.
    #[inline]
    pub fn dist(&self, i: usize) -> f64 {
        let k = (i + 1).min(self.n - i);
        k as f64 * self.h
    }

    /// True when node `i` lies in the left half (closer to `a` than to `b`,
    /// ties included).
    #[inline]
    pub fn is_left(&self, i: usize) -> bool {
        i + 1 <= self.n - i
    }
}

/// Values at the interior nodes of a grid; zero outside the interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFn {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.n(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Callers guarantee length and finiteness.
    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn check_same_grid(&self, other: &GridFn) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// CSV with header `x,value`, one row per interior node, 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.grid.nodes().zip(&self.values) {
            let _ = writeln!(out, "{x:.16e},{v:.16e}");
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Reads the format written by [`GridFn::to_csv`]; node positions must
    /// match `grid` to 1e-12 relative to the interval length.
    pub fn read_csv<R: BufRead>(grid: Grid, r: R) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(header)) if header.trim() == "x,value" => {}
            _ => return Err(Error::InvalidArgument("missing `x,value` header".into())),
        }
        let mut values = Vec::with_capacity(grid.n());
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed row {}", i + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("row {}: {e}", i + 1)))
            };
            let (x, v) = (parse(x)?, parse(v)?);
            if i >= grid.n() || (x - grid.node(i)).abs() > 1e-12 * grid.len() {
                return Err(Error::GridMismatch);
            }
            values.push(v);
        }
        Self::new(grid, values)
    }
}

/// `d(x) = min(x - a, b - x)` at the interior nodes.
pub fn distance(grid: &Grid) -> GridFn {
    GridFn::from_vec_unchecked(*grid, (0..grid.n()).map(|i| grid.dist(i)).collect())
}

/// Quadrature of the weighted `L_s` norm `∫ |f| / (1 + |x|^{1+2s})` over the
/// interval; the exterior contributes nothing.
pub fn weighted_norm(f: &GridFn, s: f64) -> f64 {
    let g = f.grid();
    let sum: f64 = g
        .nodes()
        .zip(f.values())
        .map(|(x, v)| v.abs() / (1.0 + x.abs().powf(1.0 + 2.0 * s)))
        .sum();
    g.h() * sum
}
