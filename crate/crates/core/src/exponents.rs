use serde::Serialize;

use crate::error::{Error, Result};

/// Exponents of the coupled system
/// `(-Δ)^s u = u^{-p} v^{-q}`, `(-Δ)^t v = u^{-r} v^{-θ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    p: f64,
    q: f64,
    r: f64,
    theta: f64,
    s: f64,
    t: f64,
}

impl Exponents {
    pub fn new(p: f64, q: f64, r: f64, theta: f64, s: f64, t: f64) -> Result<Self> {
        let check = |ok: bool, what: &str, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what}, got {v}")))
            }
        };
        check(p >= 0.0 && p.is_finite(), "p must be finite and >= 0", p)?;
        check(theta >= 0.0 && theta.is_finite(), "theta must be finite and >= 0", theta)?;
        check(q > 0.0 && q.is_finite(), "q must be finite and > 0", q)?;
        check(r > 0.0 && r.is_finite(), "r must be finite and > 0", r)?;
        check(s > 0.0 && s < 1.0, "s must lie in (0, 1)", s)?;
        check(t > 0.0 && t < 1.0, "t must lie in (0, 1)", t)?;
        Ok(Self { p, q, r, theta, s, t })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Exchanges the roles of `u` and `v`:
    /// `(p, q, r, θ, s, t) -> (θ, r, q, p, t, s)`.
    pub fn swap(&self) -> Self {
        Self {
            p: self.theta,
            q: self.r,
            r: self.q,
            theta: self.p,
            s: self.t,
            t: self.s,
        }
    }

    /// Looks up a parameter by its name in `{p, q, r, theta, s, t}`.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "p" => self.p,
            "q" => self.q,
            "r" => self.r,
            "theta" => self.theta,
            "s" => self.s,
            "t" => self.t,
            _ => return None,
        })
    }

    /// Copy with one named parameter replaced, re-validated.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut e = *self;
        match name {
            "p" => e.p = value,
            "q" => e.q = value,
            "r" => e.r = value,
            "theta" => e.theta = value,
            "s" => e.s = value,
            "t" => e.t = value,
            _ => {
                return Err(Error::InvalidArgument(format!("unknown parameter `{name}`")));
            }
        }
        Self::new(e.p, e.q, e.r, e.theta, e.s, e.t)
    }
}

pub const PARAMETER_NAMES: [&str; 6] = ["p", "q", "r", "theta", "s", "t"];
