//! Exact classification of the exponent space into nonexistence, existence
//! and uniqueness regions.
//!
//! Every predicate is evaluated on the given floating-point inputs without
//! tolerances, so points on a boundary fall on whichever side the printed
//! strict or non-strict inequality puts them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::Exponents;

/// Default perturbation parameter for the critical sub-cases.
pub const DEFAULT_A: f64 = 0.9;

/// Tolerance on the two linear identities satisfied by the exponents `(a, b)`.
pub const AB_IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Condition {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl Condition {
    pub const ALL: [Condition; 6] =
        [Condition::I, Condition::II, Condition::III, Condition::IV, Condition::V, Condition::VI];

    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn code(self) -> String {
        format!("N{}", self.index())
    }

    pub fn roman(self) -> &'static str {
        ["i", "ii", "iii", "iv", "v", "vi"][self as usize]
    }

    /// Image under the `u ↔ v` exchange: i↔iii, ii↔iv, v↔vi.
    pub fn swapped(self) -> Self {
        match self {
            Condition::I => Condition::III,
            Condition::II => Condition::IV,
            Condition::III => Condition::I,
            Condition::IV => Condition::II,
            Condition::V => Condition::VI,
            Condition::VI => Condition::V,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ExistenceCase {
    I,
    II,
    III,
}

impl ExistenceCase {
    pub const ALL: [ExistenceCase; 3] = [ExistenceCase::I, ExistenceCase::II, ExistenceCase::III];

    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn code(self) -> String {
        format!("E{}", self.index())
    }

    pub fn swapped(self) -> Self {
        match self {
            ExistenceCase::I => ExistenceCase::II,
            ExistenceCase::II => ExistenceCase::I,
            ExistenceCase::III => ExistenceCase::III,
        }
    }
}

/// `(α, β)`.
pub fn alpha_beta(e: &Exponents) -> (f64, f64) {
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    let alpha = p + q * t / s * f64::min(1.0, (2.0 * t - r * s) / ((1.0 + th) * t));
    let beta = th + r * s / t * f64::min(1.0, (2.0 * s - q * t) / ((1.0 + p) * s));
    (alpha, beta)
}

/// `(1 + p)(1 + θ) - qr > 0`.
pub fn ineq5(e: &Exponents) -> bool {
    (1.0 + e.p()) * (1.0 + e.theta()) - e.q() * e.r() > 0.0
}

fn condition_holds(e: &Exponents, c: Condition) -> bool {
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    let ku = q * t / s + p;
    let kv = r * s / t + th;
    match c {
        Condition::I => ku < 1.0 && r >= 2.0 * t / s,
        Condition::II => ku > 1.0 && r * (2.0 * s - q * t) >= 2.0 * t * (1.0 + p),
        Condition::III => kv < 1.0 && q >= 2.0 * s / t,
        Condition::IV => kv > 1.0 && q * (2.0 * t - r * s) >= 2.0 * s * (1.0 + th),
        Condition::V => {
            p > f64::max(1.0, r * s / t - 1.0)
                && 2.0 * r * s / t > (1.0 - th) * (1.0 + p)
                && q * t * (1.0 + p - r * s / t) > (1.0 + p) * (1.0 + th) * s
        }
        Condition::VI => {
            th > f64::max(1.0, q * t / s - 1.0)
                && 2.0 * q * t / s > (1.0 - p) * (1.0 + th)
                && r * s * (1.0 + th - q * t / s) > (1.0 + p) * (1.0 + th) * t
        }
    }
}

/// Every nonexistence condition that holds, in order.
pub fn nonexistence_conditions(e: &Exponents) -> Vec<Condition> {
    Condition::ALL.into_iter().filter(|&c| condition_holds(e, c)).collect()
}

/// First nonexistence condition that holds.
pub fn classify_nonexistence(e: &Exponents) -> Option<Condition> {
    Condition::ALL.into_iter().find(|&c| condition_holds(e, c))
}

fn case_holds(e: &Exponents, c: ExistenceCase) -> bool {
    if !ineq5(e) {
        return false;
    }
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    let (alpha, beta) = alpha_beta(e);
    match c {
        ExistenceCase::I => alpha <= 1.0 && r < 2.0 * t / s,
        ExistenceCase::II => beta <= 1.0 && q < 2.0 * s / t,
        ExistenceCase::III => p >= 1.0 && th >= 1.0 && r < 2.0 * t / s && q < 2.0 * s / t,
    }
}

/// Every existence case that holds, in order.
pub fn existence_cases(e: &Exponents) -> Vec<ExistenceCase> {
    ExistenceCase::ALL.into_iter().filter(|&c| case_holds(e, c)).collect()
}

/// First existence case that holds.
pub fn classify_existence(e: &Exponents) -> Option<ExistenceCase> {
    ExistenceCase::ALL.into_iter().find(|&c| case_holds(e, c))
}

/// Sub-case 1..=6 of existence case I, from the signs of `rs/t + θ - 1`
/// and `α - 1`. `None` when case I does not hold.
pub fn sub_case(e: &Exponents) -> Option<u8> {
    if !case_holds(e, ExistenceCase::I) {
        return None;
    }
    let kv = e.r() * e.s() / e.t() + e.theta();
    let (alpha, _) = alpha_beta(e);
    let critical = alpha == 1.0;
    Some(match (kv.partial_cmp(&1.0)?, critical) {
        (std::cmp::Ordering::Greater, false) => 1,
        (std::cmp::Ordering::Equal, false) => 2,
        (std::cmp::Ordering::Less, false) => 3,
        (std::cmp::Ordering::Less, true) => 4,
        (std::cmp::Ordering::Greater, true) => 5,
        (std::cmp::Ordering::Equal, true) => 6,
    })
}

pub fn classify_uniqueness(e: &Exponents) -> bool {
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    ineq5(e)
        && ((q * t / s + p < 1.0 && r < 2.0 * t / s) || (r * s / t + th < 1.0 && q < 2.0 * s / t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorollaryVerdict {
    /// Verdict of branch (i) when `qt/s + p < 1`.
    pub branch_i: Option<bool>,
    /// Verdict of branch (ii) when `rs/t + θ < 1`.
    pub branch_ii: Option<bool>,
    pub exists: bool,
}

/// Necessary and sufficient existence test, available when the inequality
/// `(1 + p)(1 + θ) > qr` holds and one of the two equations is sublinear.
pub fn corollary_iff(e: &Exponents) -> Result<CorollaryVerdict> {
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    if !ineq5(e) {
        return Err(Error::HypothesisNotMet("(1+p)(1+theta) - qr <= 0".into()));
    }
    let branch_i = (q * t / s + p < 1.0).then(|| r < 2.0 * t / s);
    let branch_ii = (r * s / t + th < 1.0).then(|| q < 2.0 * s / t);
    let exists = match (branch_i, branch_ii) {
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::HypothesisNotMet(
                "neither qt/s + p < 1 nor rs/t + theta < 1".into(),
            ))
        }
    };
    Ok(CorollaryVerdict { branch_i, branch_ii, exists })
}

pub fn swap(e: &Exponents) -> Exponents {
    e.swap()
}

/// Exponents `(a, b)` of existence case III.
pub fn tc1_iii_exponents(e: &Exponents) -> (f64, f64) {
    let (p, q, r, th, s, t) = (e.p(), e.q(), e.r(), e.theta(), e.s(), e.t());
    let den = (1.0 + p) * (1.0 + th) - q * r;
    let a = 2.0 * s * t * ((1.0 + th) / t - q / s) / den;
    let b = 2.0 * s * t * ((1.0 + p) / s - r / t) / den;
    (a, b)
}

/// Residual of `a = (2s - bq)/(1+p)`, `b = (2t - ra)/(1+θ)`.
pub fn ab_identity_residual(e: &Exponents, a: f64, b: f64) -> f64 {
    let ra = (a - (2.0 * e.s() - b * e.q()) / (1.0 + e.p())).abs();
    let rb = (b - (2.0 * e.t() - e.r() * a) / (1.0 + e.theta())).abs();
    ra.max(rb)
}

/// Boundary exponents of the two envelopes of each component:
/// `m d^{low} <= · <= M d^{up}`, with `up <= low`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub u_low: f64,
    pub u_up: f64,
    pub v_low: f64,
    pub v_up: f64,
}

impl Envelope {
    pub fn swapped(&self) -> Self {
        Self { u_low: self.v_low, u_up: self.v_up, v_low: self.u_low, v_up: self.u_up }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemRates {
    pub case: ExistenceCase,
    /// Sub-case 1..=6 (of the swapped problem for case II).
    pub sub_case: Option<u8>,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub envelope: Envelope,
    /// The envelope exponents depend on a free parameter `a ∈ (0, 1)`.
    pub perturbed: bool,
    pub a_param: Option<f64>,
    pub ab: Option<(f64, f64)>,
    pub ab_residual: Option<f64>,
}

/// Perturbation parameter for sub-case 5: [`DEFAULT_A`] when admissible,
/// otherwise the midpoint between the admissibility threshold and 1.
fn case5_a(e: &Exponents) -> f64 {
    let k = e.r() * e.s() / e.t();
    if DEFAULT_A * k + e.theta() > 1.0 {
        DEFAULT_A
    } else {
        0.5 * (1.0 + (1.0 - e.theta()) / k)
    }
}

fn case_i_rates(e: &Exponents) -> Result<SystemRates> {
    let sc = sub_case(e).ok_or_else(|| Error::InvalidCase("existence case I does not hold".into()))?;
    let (r, th, s, t) = (e.r(), e.theta(), e.s(), e.t());
    let ev = (2.0 * t - r * s) / (1.0 + th);
    let a = DEFAULT_A;
    let (envelope, sigma, a_param) = match sc {
        1 => (Envelope { u_low: s, u_up: s, v_low: ev, v_up: ev }, (s, ev), None),
        2 => (Envelope { u_low: s, u_up: s, v_low: t, v_up: t - a * t }, (s, t), Some(a)),
        3 => (Envelope { u_low: s, u_up: s, v_low: t, v_up: t }, (s, t), None),
        4 => (Envelope { u_low: s, u_up: s - a * s, v_low: t, v_up: t }, (s, t), Some(a)),
        5 => {
            let a = case5_a(e);
            let env = Envelope {
                u_low: s,
                u_up: s * a,
                v_low: (2.0 * t - r * s * a) / (1.0 + th),
                v_up: ev,
            };
            (env, (s, ev), Some(a))
        }
        _ => (Envelope { u_low: s, u_up: s - a * s, v_low: t, v_up: t - a * t }, (s, t), Some(a)),
    };
    Ok(SystemRates {
        case: ExistenceCase::I,
        sub_case: Some(sc),
        sigma_u: sigma.0,
        sigma_v: sigma.1,
        envelope,
        perturbed: a_param.is_some(),
        a_param,
        ab: None,
        ab_residual: None,
    })
}

/// Predicted boundary exponents and envelope exponents for an existence case.
pub fn predicted_system_rates(e: &Exponents, case: ExistenceCase) -> Result<SystemRates> {
    if !case_holds(e, case) {
        return Err(Error::InvalidCase(format!(
            "existence case {} does not hold for these exponents",
            case.index()
        )));
    }
    match case {
        ExistenceCase::I => case_i_rates(e),
        ExistenceCase::II => {
            let w = case_i_rates(&e.swap())?;
            Ok(SystemRates {
                case: ExistenceCase::II,
                sigma_u: w.sigma_v,
                sigma_v: w.sigma_u,
                envelope: w.envelope.swapped(),
                ..w
            })
        }
        ExistenceCase::III => {
            let (a, b) = tc1_iii_exponents(e);
            let res = ab_identity_residual(e, a, b);
            if !(res < AB_IDENTITY_TOL) {
                return Err(Error::InvalidCase(format!("(a, b) identity residual {res:e}")));
            }
            Ok(SystemRates {
                case,
                sub_case: None,
                sigma_u: a,
                sigma_v: b,
                envelope: Envelope { u_low: a, u_up: a, v_low: b, v_up: b },
                perturbed: false,
                a_param: None,
                ab: Some((a, b)),
                ab_residual: Some(res),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub exponents: Exponents,
    pub nonexistence: Option<Condition>,
    pub nonexistence_all: Vec<Condition>,
    pub existence: Option<ExistenceCase>,
    pub existence_all: Vec<ExistenceCase>,
    pub sub_case: Option<u8>,
    pub unique: bool,
    pub ineq5: bool,
    pub alpha: f64,
    pub beta: f64,
    pub predicted_u_rate: Option<f64>,
    pub predicted_v_rate: Option<f64>,
    pub perturbed: bool,
    pub ab: Option<(f64, f64)>,
    /// `U`, `E1`–`E3`, `N1`–`N6` or `undetermined`.
    pub code: String,
}

pub fn classify(e: &Exponents) -> RegimeVerdict {
    let nonexistence_all = nonexistence_conditions(e);
    let existence_all = existence_cases(e);
    let existence = existence_all.first().copied();
    let nonexistence = nonexistence_all.first().copied();
    let unique = classify_uniqueness(e);
    let (alpha, beta) = alpha_beta(e);
    let rates = existence.and_then(|c| predicted_system_rates(e, c).ok());
    let code = if unique {
        "U".to_string()
    } else if let Some(c) = existence {
        c.code()
    } else if let Some(c) = nonexistence {
        c.code()
    } else {
        "undetermined".to_string()
    };
    RegimeVerdict {
        exponents: *e,
        nonexistence,
        nonexistence_all,
        existence,
        existence_all,
        sub_case: rates.and_then(|r| r.sub_case),
        unique,
        ineq5: ineq5(e),
        alpha,
        beta,
        predicted_u_rate: rates.map(|r| r.sigma_u),
        predicted_v_rate: rates.map(|r| r.sigma_v),
        perturbed: rates.is_some_and(|r| r.perturbed),
        ab: rates.and_then(|r| r.ab),
        code,
    }
}
