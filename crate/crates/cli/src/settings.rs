//! Flat `key = value` settings merged from a config file and flags.

use std::collections::BTreeMap;
use std::path::Path;

use fracsys_core::exponents::PARAMETER_NAMES;
use fracsys_core::{Exponents, Grid};

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "p", "q", "r", "theta", "s", "t", "gamma", "coeff", "a", "b", "n", "outer_tol", "inner_tol",
    "max_outer", "max_iter", "seed", "param1", "range1", "steps1", "param2", "range2", "steps2",
    "output", "format", "csv_output",
];

pub const SWEEP_KEYS: &[&str] = &["param1", "range1", "steps1", "param2", "range2", "steps2"];

pub const DEFAULT_GRID: (f64, f64, usize) = (-1.0, 1.0, 1024);
pub const DEFAULT_OUTER_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_TOL: f64 = 1e-10;

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_config(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`, got `{line}`",
                    k + 1
                )));
            };
            let key = normalize(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("unknown config key '{key}'")));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse_config(&text)
    }

    /// Flag values win over anything already present.
    pub fn override_with<'a>(&mut self, flags: impl IntoIterator<Item = (&'a str, Option<String>)>) {
        for (key, value) in flags {
            if let Some(v) = value {
                self.values.insert(normalize(key), v);
            }
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require_str(&self, key: &str) -> Result<&str, CliError> {
        self.str(key).ok_or_else(|| CliError::Usage(format!("missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("invalid value '{v}' for key '{key}'"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.parse(key)?.ok_or_else(|| CliError::Usage(format!("missing required key '{key}'")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("key '{key}' must be positive, got {v}")))
        }
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let (a0, b0, n0) = DEFAULT_GRID;
        let a = self.f64_or("a", a0)?;
        let b = self.f64_or("b", b0)?;
        let n = self.usize_or("n", n0)?;
        Grid::new(a, b, n).map_err(|e| {
            let key = if !(a < b) { "b" } else { "n" };
            CliError::Usage(format!("invalid grid for key '{key}': {e}"))
        })
    }

    /// The six exponents; keys listed in `skip` may be absent and default to
    /// a placeholder that the caller overwrites.
    pub fn exponents(&self, skip: &[&str]) -> Result<Exponents, CliError> {
        let mut vals = [0.0; 6];
        for (slot, name) in vals.iter_mut().zip(PARAMETER_NAMES) {
            *slot = if skip.contains(&name) { placeholder(name) } else { self.f64(name)? };
        }
        let [p, q, r, theta, s, t] = vals;
        Exponents::new(p, q, r, theta, s, t).map_err(|e| exponent_error(&vals, e))
    }

    pub fn reject_sweep_keys(&self, subcommand: &str) -> Result<(), CliError> {
        match SWEEP_KEYS.iter().find(|k| self.has(k)) {
            Some(k) => Err(CliError::Usage(format!(
                "key '{k}' is only valid for atlas, not {subcommand}"
            ))),
            None => Ok(()),
        }
    }
}

fn placeholder(name: &str) -> f64 {
    match name {
        "s" | "t" => 0.5,
        "q" | "r" => 1.0,
        _ => 0.0,
    }
}

/// Names the first exponent that fails validation.
pub fn exponent_error(vals: &[f64; 6], e: fracsys_core::Error) -> CliError {
    let bad = PARAMETER_NAMES.iter().zip(vals).find(|(name, v)| {
        let v = **v;
        match **name {
            "p" | "theta" => !(v >= 0.0 && v.is_finite()),
            "q" | "r" => !(v > 0.0 && v.is_finite()),
            _ => !(v > 0.0 && v < 1.0),
        }
    });
    match bad {
        Some((name, _)) => CliError::Usage(format!("invalid value for key '{name}': {e}")),
        None => CliError::Usage(e.to_string()),
    }
}
