use std::fmt::Write as _;

use fracsys_core::exponents::PARAMETER_NAMES;
use fracsys_core::rate::default_window;
use fracsys_core::regimes::{self, classify};
use fracsys_core::singular::{self, check_log_correction, solve_singular, SingularProblem};
use fracsys_core::spectral::{self, principal_eigenpair, principal_eigenpair_from, torsion};
use fracsys_core::system::{
    self, build_bracket, calibrate_constants, lower_bound_check, solve_system, uniqueness_probe,
    SystemOptions, SystemReport,
};
use fracsys_core::{Error, Exponents, FracOp, Grid, GridFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::settings::{exponent_error, Settings, DEFAULT_INNER_TOL, DEFAULT_OUTER_TOL};
use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Rendered result of a subcommand.
pub struct Outcome {
    pub body: String,
    /// CSV dump of the computed functions, written when `csv_output` is set.
    pub dump: Option<String>,
    pub converged: bool,
}

impl Outcome {
    fn new(value: Value, dump: Option<String>, format: Format, converged: bool) -> Self {
        let body = match (format, &dump) {
            (Format::Csv, Some(csv)) => csv.clone(),
            _ => render(value),
        };
        Self { body, dump, converged }
    }
}

fn render(mut value: Value) -> String {
    if let Value::Object(map) = &mut value {
        map.insert("schema".into(), json!(SCHEMA));
    }
    serde_json::to_string_pretty(&value).expect("JSON values always serialize")
}

pub fn format(settings: &Settings, allowed: &[Format]) -> Result<Format, CliError> {
    let f = match settings.str("format") {
        None => allowed[0],
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        Some(other) => {
            return Err(CliError::Usage(format!("invalid value '{other}' for key 'format'")))
        }
    };
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!("key 'format' does not support {f:?} here")))
    }
}

fn order(settings: &Settings, key: &str) -> Result<f64, CliError> {
    let s = settings.f64(key)?;
    if s > 0.0 && s < 1.0 {
        Ok(s)
    } else {
        Err(CliError::Usage(format!("key '{key}' must lie in (0, 1), got {s}")))
    }
}

fn functions_csv(grid: &Grid, cols: &[(&str, &GridFn)]) -> String {
    let mut out = String::from("x");
    for (name, _) in cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..grid.n() {
        write!(out, "{}", grid.node(i)).unwrap();
        for (_, f) in cols {
            write!(out, ",{}", f.values()[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn classify_cmd(settings: &Settings) -> Result<Outcome, CliError> {
    settings.reject_sweep_keys("classify")?;
    let fmt = format(settings, &[Format::Json])?;
    let e = settings.exponents(&[])?;
    let verdict = classify(&e);
    let value = serde_json::to_value(&verdict).map_err(CliError::other)?;
    Ok(Outcome::new(value, None, fmt, true))
}

struct Axis {
    name: String,
    values: Vec<f64>,
}

fn axis(settings: &Settings, k: u8) -> Result<Axis, CliError> {
    let (pk, rk, sk) = (format!("param{k}"), format!("range{k}"), format!("steps{k}"));
    let name = settings.require_str(&pk)?.to_string();
    if !PARAMETER_NAMES.contains(&name.as_str()) {
        return Err(CliError::Usage(format!(
            "invalid value '{name}' for key '{pk}' (expected one of {})",
            PARAMETER_NAMES.join(", ")
        )));
    }
    let range = settings.require_str(&rk)?;
    let bad_range = || CliError::Usage(format!("invalid value '{range}' for key '{rk}' (expected lo:hi)"));
    let (lo, hi) = range.split_once(':').ok_or_else(bad_range)?;
    let (lo, hi): (f64, f64) =
        (lo.trim().parse().map_err(|_| bad_range())?, hi.trim().parse().map_err(|_| bad_range())?);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad_range());
    }
    let steps = settings.usize_or(&sk, 50)?;
    if steps == 0 {
        return Err(CliError::Usage(format!("key '{sk}' must be at least 1")));
    }
    let values = (0..steps)
        .map(|i| if steps == 1 { lo } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 })
        .collect();
    Ok(Axis { name, values })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn atlas_cmd(settings: &Settings) -> Result<Outcome, CliError> {
    let fmt = format(settings, &[Format::Csv, Format::Json])?;
    let (a1, a2) = (axis(settings, 1)?, axis(settings, 2)?);
    if a1.name == a2.name {
        return Err(CliError::Usage(format!("key 'param2' repeats parameter '{}'", a1.name)));
    }
    let base = settings.exponents(&[a1.name.as_str(), a2.name.as_str()])?;
    let mut csv = String::from("p1,p2,verdict,alpha,beta,sigma_u,sigma_v\n");
    let mut rows = Vec::new();
    for &x in &a1.values {
        for &y in &a2.values {
            let e = cell(&base, &a1.name, x, &a2.name, y)?;
            let v = classify(&e);
            writeln!(
                csv,
                "{x},{y},{},{},{},{},{}",
                v.code,
                v.alpha,
                v.beta,
                opt(v.predicted_u_rate),
                opt(v.predicted_v_rate)
            )
            .unwrap();
            if fmt == Format::Json {
                rows.push(json!({
                    "p1": x, "p2": y, "verdict": v.code, "alpha": v.alpha, "beta": v.beta,
                    "sigma_u": v.predicted_u_rate, "sigma_v": v.predicted_v_rate,
                }));
            }
        }
    }
    let body = match fmt {
        Format::Csv => csv,
        Format::Json => render(json!({ "param1": a1.name, "param2": a2.name, "rows": rows })),
    };
    Ok(Outcome { body, dump: None, converged: true })
}

fn cell(base: &Exponents, n1: &str, x: f64, n2: &str, y: f64) -> Result<Exponents, CliError> {
    let mut vals = [0.0; 6];
    for (slot, name) in vals.iter_mut().zip(PARAMETER_NAMES) {
        *slot = if name == n1 {
            x
        } else if name == n2 {
            y
        } else {
            base.get(name).expect("known parameter")
        };
    }
    let [p, q, r, theta, s, t] = vals;
    Exponents::new(p, q, r, theta, s, t).map_err(|e| {
        let key = if n1 == bad_name(&vals) { "range1" } else { "range2" };
        match exponent_error(&vals, e) {
            CliError::Usage(msg) => CliError::Usage(format!("{msg} (swept by '{key}')")),
            other => other,
        }
    })
}

fn bad_name(vals: &[f64; 6]) -> &'static str {
    let ok = |name: &str, v: f64| match name {
        "p" | "theta" => v >= 0.0 && v.is_finite(),
        "q" | "r" => v > 0.0 && v.is_finite(),
        _ => v > 0.0 && v < 1.0,
    };
    PARAMETER_NAMES.iter().zip(vals).find(|(n, v)| !ok(n, **v)).map(|(n, _)| *n).unwrap_or("")
}

pub fn eigen_cmd(settings: &Settings) -> Result<Outcome, CliError> {
    settings.reject_sweep_keys("eigen")?;
    let fmt = format(settings, &[Format::Json, Format::Csv])?;
    let s = order(settings, "s")?;
    let grid = settings.grid()?;
    let tol = settings.positive("inner_tol", spectral::DEFAULT_EIGEN_TOL)?;
    let seed = settings.u64_or("seed", 0)?;
    let op = FracOp::assemble(&grid, s)?;
    let pair = principal_eigenpair(&op, tol)?;
    let tors = torsion(&op)?;
    let bounds = spectral::verify_eigen_bounds(&pair, &tors, &grid, s)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..grid.n()).map(|_| rng.gen_range(0.01..1.0)).collect();
    let restart = principal_eigenpair_from(&op, tol, &start)?;
    let phi_diff = pair
        .phi
        .values()
        .iter()
        .zip(restart.phi.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let value = json!({
        "s": s,
        "n": grid.n(),
        "a": grid.a(),
        "b": grid.b(),
        "lambda1": pair.lambda1,
        "residual": pair.residual,
        "iterations": pair.iterations,
        "c_low": bounds.c_low,
        "c_high": bounds.c_high,
        "w3_ok": bounds.w3_ok,
        "w3_min_deficit": bounds.w3_min_deficit,
        "seed": seed,
        "restart_lambda1": restart.lambda1,
        "restart_max_phi_diff": phi_diff,
    });
    let dump = functions_csv(&grid, &[("phi", &pair.phi), ("phi_torsion", &tors.phi_torsion)]);
    Ok(Outcome::new(value, Some(dump), fmt, true))
}

pub fn solve_scalar_cmd(settings: &Settings) -> Result<Outcome, CliError> {
    settings.reject_sweep_keys("solve-scalar")?;
    let fmt = format(settings, &[Format::Json, Format::Csv])?;
    let s = order(settings, "s")?;
    let gamma = settings.f64("gamma")?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(CliError::Usage(format!("key 'gamma' must be >= 0, got {gamma}")));
    }
    let p = settings.f64("p")?;
    if !(p >= 0.0 && p.is_finite()) {
        return Err(CliError::Usage(format!("key 'p' must be >= 0, got {p}")));
    }
    let coeff = settings.positive("coeff", 1.0)?;
    let tol = settings.positive("inner_tol", DEFAULT_INNER_TOL)?;
    let max_iter = settings.usize_or("max_iter", singular::DEFAULT_MAX_ITER)?;
    let grid = settings.grid()?;
    let op = FracOp::assemble(&grid, s)?;
    let prob = SingularProblem::new(s, gamma, coeff, p)?;
    let rep = solve_singular(&op, &prob, tol, max_iter)?;

    let log_ratio = if rep.prediction.log_correction {
        let phi = principal_eigenpair(&op, spectral::DEFAULT_EIGEN_TOL)?.phi;
        check_log_correction(&rep.u, &phi, s, p, default_window(&grid))
            .ok()
            .map(|r| serde_json::to_value(r).map_err(CliError::other))
            .transpose()?
    } else {
        None
    };
    let value = json!({
        "s": s,
        "gamma": gamma,
        "p": p,
        "coeff": coeff,
        "n": grid.n(),
        "regime": rep.prediction.regime,
        "predicted_exponent": rep.prediction.exponent,
        "log_correction": rep.prediction.log_correction,
        "fitted_exponent": rep.fit.map(|f| f.exponent),
        "r_squared": rep.fit.map(|f| f.r_squared),
        "fit": rep.fit,
        "iterations": rep.iterations,
        "residual": rep.residual,
        "converged": rep.converged,
        "floor_ok": rep.floor_ok,
        "log_ratio": log_ratio,
    });
    let dump = functions_csv(&grid, &[("u", &rep.u)]);
    Ok(Outcome::new(value, Some(dump), fmt, rep.converged))
}

fn system_setup(
    settings: &Settings,
    name: &str,
) -> Result<(Exponents, Grid, FracOp, FracOp, SystemOptions), CliError> {
    settings.reject_sweep_keys(name)?;
    let e = settings.exponents(&[])?;
    let grid = settings.grid()?;
    let opts = SystemOptions {
        tol: settings.positive("outer_tol", DEFAULT_OUTER_TOL)?,
        inner_tol: settings.positive("inner_tol", DEFAULT_INNER_TOL)?,
        max_outer: settings.usize_or("max_outer", system::DEFAULT_MAX_OUTER)?,
        ..SystemOptions::default()
    };
    let op_s = FracOp::assemble(&grid, e.s())?;
    let op_t = if e.t() == e.s() { op_s.clone() } else { FracOp::assemble(&grid, e.t())? };
    Ok((e, grid, op_s, op_t, opts))
}

fn refuse_without_existence(e: &Exponents) -> Result<regimes::ExistenceCase, CliError> {
    let v = classify(e);
    v.existence.ok_or_else(|| {
        CliError::Core(Error::RegimeRefusal(format!(
            "verdict {}: no existence theorem applies, nothing to solve",
            v.code
        )))
    })
}

fn report_summary(r: &SystemReport) -> Value {
    json!({
        "outer_iterations": r.outer_iterations,
        "converged": r.converged,
        "in_bracket": r.in_bracket,
        "residuals": [r.residuals.0, r.residuals.1],
        "widened": r.widened,
    })
}

pub fn solve_system_cmd(settings: &Settings) -> Result<Outcome, CliError> {
    let fmt = format(settings, &[Format::Json, Format::Csv])?;
    let (e, grid, op_s, op_t, opts) = system_setup(settings, "solve-system")?;
    let case = refuse_without_existence(&e)?;
    let cal = calibrate_constants(&op_s, &op_t, &e, case)?;
    let bracket = build_bracket(&e, case, cal.c1, cal.c2)?;
    let rep = solve_system(&op_s, &op_t, &e, &bracket, &opts)?;
    let lower = if rep.converged { lower_bound_check(&rep, e.s(), e.t()).ok() } else { None };
    let value = json!({
        "verdict": classify(&e).code,
        "exponents": e,
        "n": grid.n(),
        "a": grid.a(),
        "b": grid.b(),
        "calibration": cal,
        "report": rep,
        "lower_bound": lower,
    });
    let dump = functions_csv(&grid, &[("u", &rep.u), ("v", &rep.v)]);
    Ok(Outcome::new(value, Some(dump), fmt, rep.converged))
}

pub fn probe_uniqueness_cmd(settings: &Settings) -> Result<Outcome, CliError> {
    let fmt = format(settings, &[Format::Json, Format::Csv])?;
    let (e, grid, op_s, op_t, opts) = system_setup(settings, "probe-uniqueness")?;
    let case = refuse_without_existence(&e)?;
    if !regimes::classify_uniqueness(&e) {
        return Err(CliError::Core(Error::HypothesisNotMet(format!(
            "verdict {}: uniqueness conditions do not hold",
            classify(&e).code
        ))));
    }
    let cal = calibrate_constants(&op_s, &op_t, &e, case)?;
    let bracket = build_bracket(&e, case, cal.c1, cal.c2)?;
    let rep = uniqueness_probe(&op_s, &op_t, &e, &bracket, &opts)?;
    let converged = rep.bottom.converged && rep.top.converged;
    let value = json!({
        "verdict": classify(&e).code,
        "exponents": e,
        "n": grid.n(),
        "distance_u": rep.distance_u,
        "distance_v": rep.distance_v,
        "distance": rep.distance,
        "contraction_exponent": rep.contraction_exponent,
        "bottom": report_summary(&rep.bottom),
        "top": report_summary(&rep.top),
        "bracket": bracket,
    });
    let dump = functions_csv(
        &grid,
        &[
            ("u_bottom", &rep.bottom.u),
            ("v_bottom", &rep.bottom.v),
            ("u_top", &rep.top.u),
            ("v_top", &rep.top.v),
        ],
    );
    Ok(Outcome::new(value, Some(dump), fmt, converged))
}
