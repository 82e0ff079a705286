//! Discrete one-dimensional fractional Laplacian with zero exterior data.
//!
//! For an interior node `x_i` the singular integral
//! `C(1,s) PV ∫ (u(x_i) - u(y)) |x_i - y|^{-1-2s} dy` is split into three
//! pieces:
//!
//! * the near field `|y - x_i| < h`, where the symmetric second difference
//!   replaces `u(x_i + z) + u(x_i - z) - 2 u(x_i)` and the kernel moment
//!   `∫_0^h z^{1-2s} dz` is exact;
//! * the far field inside `(a, b)`, where `u` is replaced by its piecewise
//!   linear interpolant and every hat function is integrated against the
//!   kernel in closed form;
//! * the exterior, where `u = 0` and `∫_R^∞ ρ^{-1-2s} dρ = R^{-2s}/(2s)`.
//!
//! The first two give the coefficient table `A`, the last one the diagonal
//! `T`. Off-diagonal entries of `A` are negative and every row of `A + diag(T)`
//! is strictly diagonally dominant, so the assembled operator is a symmetric
//! M-matrix and the discrete maximum principle holds.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use crate::linalg::{self, Cholesky};
use crate::quad;

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("fractional order must lie in (0, 1), got {s}")))
    }
}

/// `C(1, s) = (∫_ℝ (1 - cos ζ) |ζ|^{-1-2s} dζ)^{-1}` by quadrature.
///
/// On `[0, 1]` the substitution `ζ = w^{1/(1-s)}` turns the integrable
/// singularity into a smooth integrand. On `[1, ∞)` the non-oscillating part
/// is exact, the cosine part is integrated panel by panel over whole periods
/// up to `X = 2πN` and the remainder uses its asymptotic expansion
/// `∫_X^∞ cos ζ ζ^{-β} dζ = Σ_j (-1)^j (β)_{2j+1} X^{-β-2j-1}`.
pub fn normalization_constant(s: f64) -> Result<f64> {
    check_order(s)?;
    const TOL: f64 = 1e-15;
    const PERIODS: usize = 64;

    let m = 1.0 / (1.0 - s);
    let near = quad::integrate(
        |w: f64| {
            let z = w.powf(m);
            let half = (0.5 * z).sin();
            m * 2.0 * half * half * w.powf(-2.0 * s * m - 1.0)
        },
        0.0,
        1.0,
        TOL,
    );

    let beta = 1.0 + 2.0 * s;
    let period = 2.0 * PI;
    let mut osc = quad::integrate(|z: f64| z.cos() * z.powf(-beta), 1.0, period, TOL);
    for k in 1..PERIODS {
        let lo = k as f64 * period;
        osc += quad::integrate(|z: f64| z.cos() * z.powf(-beta), lo, lo + period, TOL);
    }
    let x = PERIODS as f64 * period;
    let mut tail = 0.0;
    let mut rising = beta; // (β)_{2j+1}
    let mut xpow = x.powf(-beta - 1.0);
    for j in 0..30 {
        let term = rising * xpow;
        tail += if j % 2 == 0 { term } else { -term };
        if term < 1e-22 {
            break;
        }
        let k = (2 * j + 1) as f64;
        rising *= (beta + k) * (beta + k + 1.0);
        xpow /= x * x;
    }
    let far = 1.0 / (2.0 * s) - (osc + tail);

    Ok(1.0 / (2.0 * (near + far)))
}

/// `∫_lo^hi ξ^{-alpha} dξ` for `0 < lo < hi`, accurate through `alpha = 1`.
fn power_integral(alpha: f64, lo: f64, hi: f64) -> f64 {
    let beta = 1.0 - alpha;
    let ln_ratio = (hi / lo).ln();
    if beta == 0.0 {
        ln_ratio
    } else {
        lo.powf(beta) * (beta * ln_ratio).exp_m1() / beta
    }
}

/// Moment of the unit hat centred at distance `k` (in units of `h`) against
/// `ξ^{-1-2s}`, restricted to `ξ >= 1`. Multiply by `h^{-2s}`.
pub(crate) fn hat_moment(k: usize, s: f64) -> f64 {
    let alpha = 1.0 + 2.0 * s;
    let kf = k as f64;
    match k {
        0 => 0.0,
        1 => 2.0 * power_integral(alpha, 1.0, 2.0) - power_integral(2.0 * s, 1.0, 2.0),
        2..=19 => {
            let rise = power_integral(2.0 * s, kf - 1.0, kf)
                - (kf - 1.0) * power_integral(alpha, kf - 1.0, kf);
            let fall = (kf + 1.0) * power_integral(alpha, kf, kf + 1.0)
                - power_integral(2.0 * s, kf, kf + 1.0);
            rise + fall
        }
        _ => {
            // second central difference of the double antiderivative, expanded
            // in even derivatives to avoid cancellation
            let inv2 = 1.0 / (kf * kf);
            let mut term = kf.powf(-alpha);
            let mut sum = term;
            let mut m = 1.0;
            while term > 1e-18 * sum {
                term *= (alpha + 2.0 * m - 2.0) * (alpha + 2.0 * m - 1.0)
                    / ((2.0 * m + 1.0) * (2.0 * m + 2.0))
                    * inv2;
                sum += term;
                m += 1.0;
            }
            sum
        }
    }
}

/// Assembled discrete `(-Δ)^s` on a grid.
#[derive(Debug)]
pub struct FracOp {
    s: f64,
    grid: Grid,
    normalization: f64,
    stencil: Vec<f64>,
    tail: Vec<f64>,
    factor: OnceLock<Cholesky>,
}

impl Clone for FracOp {
    fn clone(&self) -> Self {
        let factor = OnceLock::new();
        if let Some(c) = self.factor.get() {
            let _ = factor.set(c.clone());
        }
        Self {
            s: self.s,
            grid: self.grid,
            normalization: self.normalization,
            stencil: self.stencil.clone(),
            tail: self.tail.clone(),
            factor,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DumpHeader {
    pub schema: u32,
    pub s: f64,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub normalization: f64,
    pub tail: Vec<f64>,
}

impl FracOp {
    pub fn assemble(grid: &Grid, s: f64) -> Result<Self> {
        check_order(s)?;
        let c = normalization_constant(s)?;
        Ok(Self::assemble_with_constant(grid, s, c))
    }

    fn assemble_with_constant(grid: &Grid, s: f64, c: f64) -> Self {
        let n = grid.n();
        let scale = c * grid.h().powf(-2.0 * s);
        let two_s = 2.0 * s;

        let mut off = vec![0.0; n];
        for (k, w) in off.iter_mut().enumerate().skip(1) {
            *w = -scale * hat_moment(k, s);
        }
        off[1] -= scale / (2.0 - two_s);

        let mut stencil = vec![0.0; n * n];
        let mut tail = vec![0.0; n];
        for i in 0..n {
            let left = ((i + 1) as f64).powf(-two_s);
            let right = ((n - i) as f64).powf(-two_s);
            tail[i] = scale * (left + right) / two_s;
            let row = &mut stencil[i * n..(i + 1) * n];
            for (j, v) in row.iter_mut().enumerate() {
                *v = off[i.abs_diff(j)];
            }
            row[i] = scale * (1.0 / (1.0 - s) + (2.0 - left - right) / two_s);
        }

        Self { s, grid: *grid, normalization: c, stencil, tail, factor: OnceLock::new() }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Row-major `n × n` coefficient table `A`.
    pub fn stencil(&self) -> &[f64] {
        &self.stencil
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.stencil[i * self.n() + j]
    }

    /// Exterior contribution `T_i`.
    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// `max_i Σ_j |A_ij| + T_i`; sets the roundoff scale of a matvec.
    pub fn max_abs_row_sum(&self) -> f64 {
        let n = self.n();
        self.stencil
            .chunks_exact(n)
            .zip(&self.tail)
            .map(|(row, t)| row.iter().map(|v| v.abs()).sum::<f64>() + t)
            .fold(0.0, f64::max)
    }

    pub(crate) fn apply_slice(&self, f: &[f64]) -> Vec<f64> {
        let mut out = linalg::matvec(&self.stencil, self.n(), f);
        for ((o, t), v) in out.iter_mut().zip(&self.tail).zip(f) {
            *o += t * v;
        }
        out
    }

    /// `(A f)_i + T_i f_i`.
    pub fn apply(&self, f: &GridFn) -> Result<GridFn> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(GridFn::from_vec_unchecked(self.grid, self.apply_slice(f.values())))
    }

    /// `fᵀ A f + Σ T_i f_i²`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        linalg::dot(&self.apply_slice(f), f)
    }

    pub(crate) fn factor(&self) -> Result<&Cholesky> {
        if let Some(c) = self.factor.get() {
            return Ok(c);
        }
        let n = self.n();
        let mut full = self.stencil.clone();
        for i in 0..n {
            full[i * n + i] += self.tail[i];
        }
        let c = Cholesky::factor(&full, n)?;
        let _ = self.factor.set(c);
        Ok(self.factor.get().expect("factor was just set"))
    }

    /// Direct solve without refinement.
    pub(crate) fn solve_slice(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factor()?.solve(rhs))
    }

    /// Solves `(-Δ)^s w = rhs` in the interval with `w = 0` outside:
    /// Cholesky solve followed by one step of iterative refinement.
    pub fn solve_dirichlet(&self, rhs: &GridFn) -> Result<GridFn> {
        if *rhs.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let chol = self.factor()?;
        let b = rhs.values();
        let mut w = chol.solve(b);
        let lw = self.apply_slice(&w);
        let mut r: Vec<f64> = b.iter().zip(&lw).map(|(b, l)| b - l).collect();
        chol.solve_in_place(&mut r);
        for (wi, ri) in w.iter_mut().zip(&r) {
            *wi += ri;
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite solution".into()));
        }
        Ok(GridFn::from_vec_unchecked(self.grid, w))
    }

    /// Column `j` (0-based) of the discrete Green function `G`, scaled so that
    /// `w_i = h Σ_j G_ij rhs_j` reproduces [`FracOp::solve_dirichlet`].
    pub fn greens_column(&self, j: usize) -> Result<GridFn> {
        let n = self.n();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        let mut e = vec![0.0; n];
        e[j] = 1.0 / self.grid.h();
        let col = self.solve_dirichlet(&GridFn::from_vec_unchecked(self.grid, e))?;
        Ok(col)
    }

    /// Full Green table, row-major, `G[i][j]` at `i * n + j`.
    pub fn green_table(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let mut table = vec![0.0; n * n];
        for j in 0..n {
            let col = self.greens_column(j)?;
            for (i, v) in col.values().iter().enumerate() {
                table[i * n + j] = *v;
            }
        }
        Ok(table)
    }

    pub fn dump_header(&self) -> DumpHeader {
        DumpHeader {
            schema: 1,
            s: self.s,
            n: self.n(),
            a: self.grid.a(),
            b: self.grid.b(),
            normalization: self.normalization,
            tail: self.tail.clone(),
        }
    }

    /// Writes `i,j,A_ij` rows (1-based node numbers) for every entry.
    pub fn write_dump_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n();
        writeln!(w, "i,j,A_ij")?;
        for i in 0..n {
            for j in 0..n {
                writeln!(w, "{},{},{:.16e}", i + 1, j + 1, self.stencil[i * n + j])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::distance;

    #[test]
    fn half_order_constant_is_one_over_pi() {
        let c = normalization_constant(0.5).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-12, "{c}");
    }

    #[test]
    fn order_out_of_range() {
        for s in [0.0, 1.0, 1.2, -0.3, f64::NAN] {
            assert!(matches!(normalization_constant(s), Err(Error::Domain(_))));
        }
        let g = Grid::new(-1.0, 1.0, 16).unwrap();
        assert!(FracOp::assemble(&g, 1.0).is_err());
    }

    #[test]
    fn power_integral_through_log_case() {
        let exact = 2f64.ln();
        assert_eq!(power_integral(1.0, 1.0, 2.0), exact);
        assert!((power_integral(1.0 + 1e-12, 1.0, 2.0) - exact).abs() < 1e-11);
        assert!((power_integral(2.0, 1.0, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn series_moment_matches_closed_form() {
        for s in [0.05, 0.3, 0.5, 0.77, 0.95] {
            let alpha = 1.0 + 2.0 * s;
            for k in [20usize, 25, 40] {
                let kf = k as f64;
                let closed = power_integral(2.0 * s, kf - 1.0, kf)
                    - (kf - 1.0) * power_integral(alpha, kf - 1.0, kf)
                    + (kf + 1.0) * power_integral(alpha, kf, kf + 1.0)
                    - power_integral(2.0 * s, kf, kf + 1.0);
                let series = hat_moment(k, s);
                assert!(((closed - series) / series).abs() < 1e-9, "s={s} k={k}");
            }
        }
    }

    #[test]
    fn structure_of_assembled_operator() {
        for s in [0.1, 0.5, 0.9] {
            let g = Grid::new(-1.0, 1.0, 40).unwrap();
            let op = FracOp::assemble(&g, s).unwrap();
            let n = op.n();
            for i in 0..n {
                let mut row = op.tail()[i];
                for j in 0..n {
                    let a = op.coeff(i, j);
                    assert_eq!(a, op.coeff(j, i));
                    if i == j {
                        assert!(a > 0.0);
                    } else {
                        assert!(a <= 0.0);
                    }
                    row += a;
                }
                assert!(row > 0.0);
                assert!(op.stencil()[i * n..(i + 1) * n].iter().sum::<f64>() > 0.0);
            }
        }
    }

    #[test]
    fn full_operator_is_toeplitz() {
        let g = Grid::new(0.0, 3.0, 30).unwrap();
        let op = FracOp::assemble(&g, 0.35).unwrap();
        let d0 = op.coeff(0, 0) + op.tail()[0];
        for i in 0..op.n() {
            let di = op.coeff(i, i) + op.tail()[i];
            assert!((di - d0).abs() < 1e-12 * d0);
        }
    }

    #[test]
    fn apply_rejects_foreign_grid() {
        let g = Grid::new(-1.0, 1.0, 16).unwrap();
        let other = Grid::new(-1.0, 1.0, 17).unwrap();
        let op = FracOp::assemble(&g, 0.5).unwrap();
        assert!(matches!(op.apply(&distance(&other)), Err(Error::GridMismatch)));
        assert!(matches!(op.solve_dirichlet(&distance(&other)), Err(Error::GridMismatch)));
    }

    #[test]
    fn greens_column_index() {
        let g = Grid::new(-1.0, 1.0, 16).unwrap();
        let op = FracOp::assemble(&g, 0.5).unwrap();
        assert!(op.greens_column(15).is_ok());
        assert!(matches!(op.greens_column(16), Err(Error::IndexOutOfRange { index: 16, len: 16 })));
    }

    #[test]
    fn dump_lists_every_entry() {
        let g = Grid::new(-1.0, 1.0, 8).unwrap();
        let op = FracOp::assemble(&g, 0.4).unwrap();
        let mut buf = Vec::new();
        op.write_dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 64);
        assert!(text.starts_with("i,j,A_ij\n1,1,"));
        let header = serde_json::to_value(op.dump_header()).unwrap();
        assert_eq!(header["n"], 8);
        assert_eq!(header["schema"], 1);
    }
}
