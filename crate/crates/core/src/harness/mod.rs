//! Checkers for the ten Minkowski-type inequalities.
//!
//! Each checker evaluates both sides with the one-sided operator and returns
//! a [`Comparison`]: the two sides, a signed relative margin (non-negative
//! when the inequality holds in its stated orientation) and an error budget
//! propagated from the quadrature estimates.

mod suite;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{CorridorSpec, GeneratorError};
use crate::numcore::PositiveFunction;
use crate::operators::{hadamard, FracParams, OperatorError, OperatorOptions};
use crate::quadrature::OperatorValue;

pub use suite::{
    replay, run_suite, InequalityReport, ReplayOutcome, SuiteConfig, SuiteResult, TheoremSummary, Trial,
    TrialFunctions, Verdict, CSV_HEADER, REPLAY_TOL,
};

/// Default verdict tolerance on the relative margin.
pub const DEFAULT_TOL_REL: f64 = 1e-9;

/// Relative rounding allowance added per arithmetic step of the budget.
const ROUNDING: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("invalid suite configuration: {0}")]
    Config(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    T3_1,
    T3_2,
    T4_1,
    T4_2,
    T4_3,
    T4_4,
    T4_5,
    T4_6,
    T4_7,
    T4_8,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::T3_1,
        TheoremId::T3_2,
        TheoremId::T4_1,
        TheoremId::T4_2,
        TheoremId::T4_3,
        TheoremId::T4_4,
        TheoremId::T4_5,
        TheoremId::T4_6,
        TheoremId::T4_7,
        TheoremId::T4_8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T3_1 => "T3_1",
            TheoremId::T3_2 => "T3_2",
            TheoremId::T4_1 => "T4_1",
            TheoremId::T4_2 => "T4_2",
            TheoremId::T4_3 => "T4_3",
            TheoremId::T4_4 => "T4_4",
            TheoremId::T4_5 => "T4_5",
            TheoremId::T4_6 => "T4_6",
            TheoremId::T4_7 => "T4_7",
            TheoremId::T4_8 => "T4_8",
        }
    }

    /// Whether a violation counts as a failure. The AM–GM inequality is
    /// only censused.
    pub fn asserted(self) -> bool {
        self != TheoremId::T4_4
    }

    /// Uses a second `(α, β)` pair.
    pub fn two_parameter(self) -> bool {
        matches!(self, TheoremId::T4_6 | TheoremId::T4_8)
    }

    /// Reads the exponent `p`.
    pub fn uses_p(self) -> bool {
        !matches!(self, TheoremId::T4_4 | TheoremId::T4_5 | TheoremId::T4_6)
    }

    /// Needs the conjugate exponent, hence `p > 1`.
    pub fn needs_conjugate(self) -> bool {
        matches!(self, TheoremId::T4_1 | TheoremId::T4_2 | TheoremId::T4_3)
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('.', "_");
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| format!("unknown theorem id {s:?}"))
    }
}

/// Which side is supposed to be the smaller one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    LhsLeRhs,
    LhsGeRhs,
}

/// Both sides of one inequality instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub err_budget: f64,
    pub orientation: Orientation,
}

impl Comparison {
    fn new(lhs: Est, rhs: Est, orientation: Orientation) -> Self {
        let norm = lhs.v.abs().max(rhs.v.abs()).max(1e-300);
        let slack = match orientation {
            Orientation::LhsLeRhs => rhs.v - lhs.v,
            Orientation::LhsGeRhs => lhs.v - rhs.v,
        };
        let err_budget = (lhs.v.abs() * lhs.rel + rhs.v.abs() * rhs.rel) / norm;
        Self {
            lhs: lhs.v,
            rhs: rhs.v,
            margin: slack / norm,
            err_budget: if err_budget.is_nan() { f64::INFINITY } else { err_budget },
            orientation,
        }
    }

    /// Scalar comparison with rounding-level budget only.
    pub fn exact(lhs: f64, rhs: f64, orientation: Orientation) -> Self {
        Self::new(Est::exact(lhs), Est::exact(rhs), orientation)
    }
}

/// A positive quantity with a relative error bound.
#[derive(Debug, Clone, Copy)]
struct Est {
    v: f64,
    rel: f64,
}

impl Est {
    fn exact(v: f64) -> Self {
        Self { v, rel: ROUNDING }
    }

    fn op(v: OperatorValue) -> Self {
        Self {
            v: v.value,
            rel: v.rel_err() + ROUNDING,
        }
    }

    fn pow(self, e: f64) -> Self {
        Self {
            v: self.v.powf(e),
            rel: self.rel * e.abs() + ROUNDING,
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            rel: self.rel + o.rel + ROUNDING,
        }
    }

    fn div(self, o: Self) -> Self {
        Self {
            v: self.v / o.v,
            rel: self.rel + o.rel + ROUNDING,
        }
    }

    fn add(self, o: Self) -> Self {
        let v = self.v + o.v;
        Self {
            v,
            rel: (self.v.abs() * self.rel + o.v.abs() * o.rel) / v.abs() + ROUNDING,
        }
    }

    fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            rel: self.rel + ROUNDING,
        }
    }
}

fn op(z: &PositiveFunction, x: f64, p: FracParams, opts: &OperatorOptions) -> Result<Est, OperatorError> {
    Ok(Est::op(hadamard(z, x, p, opts)?))
}

fn conjugate(spec: &CorridorSpec) -> Result<f64, OperatorError> {
    spec.q()
        .ok_or_else(|| OperatorError::InvalidExponent("this inequality needs p > 1".into()))
}

/// `(1 + M(m+2)) / ((m+1)(M+1))`.
pub fn reverse_minkowski_constant(m: f64, big_m: f64) -> f64 {
    (1.0 + big_m * (m + 2.0)) / ((m + 1.0) * (big_m + 1.0))
}

/// `(M+1)(m+1)/M − 2`.
pub fn product_form_constant(m: f64, big_m: f64) -> f64 {
    (big_m + 1.0) * (m + 1.0) / big_m - 2.0
}

/// `(M/m)^{1/(pq)}`.
pub fn ratio_constant(m: f64, big_m: f64, p: f64, q: f64) -> f64 {
    (big_m / m).powf(1.0 / (p * q))
}

/// `(H f^p)^{1/p} + (H g^p)^{1/p} ≤ C (H (f+g)^p)^{1/p}`.
pub fn check_t3_1(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let e = spec.p;
    let a = op(&f.powf(e), x, p, opts)?.pow(1.0 / e);
    let b = op(&g.powf(e), x, p, opts)?.pow(1.0 / e);
    let s = op(&f.add(g).powf(e), x, p, opts)?.pow(1.0 / e);
    let c = reverse_minkowski_constant(spec.m, spec.big_m);
    Ok(Comparison::new(a.add(b), s.scale(c), Orientation::LhsLeRhs))
}

/// Literal reading with `g^q` in the second term: `(H f^p)^{1/p} + (H g^q)^{1/p}`.
/// Reported alongside the main form, never asserted.
pub fn check_t3_1_literal(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let e = spec.p;
    let q = conjugate(spec)?;
    let a = op(&f.powf(e), x, p, opts)?.pow(1.0 / e);
    let b = op(&g.powf(q), x, p, opts)?.pow(1.0 / e);
    let s = op(&f.add(g).powf(e), x, p, opts)?.pow(1.0 / e);
    let c = reverse_minkowski_constant(spec.m, spec.big_m);
    Ok(Comparison::new(a.add(b), s.scale(c), Orientation::LhsLeRhs))
}

/// `(H f^p)^{2/p} + (H g^p)^{2/p} ≥ ((M+1)(m+1)/M − 2)(H f^p)^{1/p}(H g^p)^{1/p}`.
pub fn check_t3_2(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let e = spec.p;
    let a = op(&f.powf(e), x, p, opts)?.pow(1.0 / e);
    let b = op(&g.powf(e), x, p, opts)?.pow(1.0 / e);
    let c = product_form_constant(spec.m, spec.big_m);
    let lhs = a.pow(2.0).add(b.pow(2.0));
    Ok(Comparison::new(lhs, a.mul(b).scale(c), Orientation::LhsGeRhs))
}

/// `(H f)^{1/p}(H g)^{1/q} ≤ (M/m)^{1/pq} H(f^{1/p} g^{1/q})`.
pub fn check_t4_1(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let (e, q) = (spec.p, conjugate(spec)?);
    let lhs = op(f, x, p, opts)?.pow(1.0 / e).mul(op(g, x, p, opts)?.pow(1.0 / q));
    let mixed = PositiveFunction::combine(&[f.clone(), g.clone()], &[1.0 / e, 1.0 / q])?;
    let rhs = op(&mixed, x, p, opts)?.scale(ratio_constant(spec.m, spec.big_m, e, q));
    Ok(Comparison::new(lhs, rhs, Orientation::LhsLeRhs))
}

/// `(H f^p)^{1/p}(H g^q)^{1/q} ≤ (M/m)^{1/pq} H(fg)`, corridor on `f^p/g^q`.
pub fn check_t4_2(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let (e, q) = (spec.p, conjugate(spec)?);
    let lhs = op(&f.powf(e), x, p, opts)?
        .pow(1.0 / e)
        .mul(op(&g.powf(q), x, p, opts)?.pow(1.0 / q));
    let rhs = op(&f.mul(g), x, p, opts)?.scale(ratio_constant(spec.m, spec.big_m, e, q));
    Ok(Comparison::new(lhs, rhs, Orientation::LhsLeRhs))
}

/// `H(fg) ≤ 2^{p−1}M^p/(p(M+1)^p) H(f^p+g^p) + 2^{q−1}/(q(m+1)^q) H(f^q+g^q)`.
pub fn check_t4_3(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let (e, q) = (spec.p, conjugate(spec)?);
    let (m, big_m) = (spec.m, spec.big_m);
    let c1 = 2f64.powf(e - 1.0) * (big_m / (big_m + 1.0)).powf(e) / e;
    let c2 = 2f64.powf(q - 1.0) / (q * (m + 1.0).powf(q));
    let lhs = op(&f.mul(g), x, p, opts)?;
    let sp = op(&f.powf(e).add(&g.powf(e)), x, p, opts)?;
    let sq = op(&f.powf(q).add(&g.powf(q)), x, p, opts)?;
    Ok(Comparison::new(
        lhs,
        sp.scale(c1).add(sq.scale(c2)),
        Orientation::LhsLeRhs,
    ))
}

/// `H(f^{γ−δ}) ≤ H(f^γ g^{−δ})`.
pub fn check_t4_4(
    f: &PositiveFunction,
    g: &PositiveFunction,
    spec: &CorridorSpec,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let (gamma, delta) = (spec.gamma, spec.delta);
    let lhs = op(&f.powf(gamma - delta), x, p, opts)?;
    let mixed = PositiveFunction::combine(&[f.clone(), g.clone()], &[gamma, -delta])?;
    let rhs = op(&mixed, x, p, opts)?;
    Ok(Comparison::new(lhs, rhs, Orientation::LhsLeRhs))
}

/// Chebyshev-type ratio inequality `H f / H h ≥ H(gf)/H(gh)`; with `p2` the
/// two-parameter form
/// `H f·H'(gh) + H'f·H(gh) ≥ H h·H'(gf) + H'h·H(gf)`.
pub fn check_t4_5(
    f: &PositiveFunction,
    g: &PositiveFunction,
    h: &PositiveFunction,
    x: f64,
    p: FracParams,
    p2: Option<FracParams>,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let gf = g.mul(f);
    let gh = g.mul(h);
    match p2 {
        None => {
            let lhs = op(f, x, p, opts)?.div(op(h, x, p, opts)?);
            let rhs = op(&gf, x, p, opts)?.div(op(&gh, x, p, opts)?);
            Ok(Comparison::new(lhs, rhs, Orientation::LhsGeRhs))
        }
        Some(p2) => two_parameter(f, h, &gh, &gf, x, p, p2, opts),
    }
}

/// `H f / H h ≥ H(f^p)/H(h^p)` for `f ≤ h`, `f` increasing, `f/h`
/// decreasing; with `p2` the two-parameter form
/// `H f·H'(h^p) + H'f·H(h^p) ≥ H h·H'(f^p) + H'h·H(f^p)`.
pub fn check_t4_7(
    f: &PositiveFunction,
    h: &PositiveFunction,
    p_exp: f64,
    x: f64,
    p: FracParams,
    p2: Option<FracParams>,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let fp = f.powf(p_exp);
    let hp = h.powf(p_exp);
    match p2 {
        None => {
            let lhs = op(f, x, p, opts)?.div(op(h, x, p, opts)?);
            let rhs = op(&fp, x, p, opts)?.div(op(&hp, x, p, opts)?);
            Ok(Comparison::new(lhs, rhs, Orientation::LhsGeRhs))
        }
        Some(p2) => two_parameter(f, h, &hp, &fp, x, p, p2, opts),
    }
}

/// `H a·H'b + H'a·H b ≥ H c·H'd + H'c·H d` with `(a, c, b, d) = (f, h, num, den)`.
#[allow(clippy::too_many_arguments)]
fn two_parameter(
    f: &PositiveFunction,
    h: &PositiveFunction,
    num: &PositiveFunction,
    den: &PositiveFunction,
    x: f64,
    p: FracParams,
    p2: FracParams,
    opts: &OperatorOptions,
) -> Result<Comparison, OperatorError> {
    let (f1, f2) = (op(f, x, p, opts)?, op(f, x, p2, opts)?);
    let (h1, h2) = (op(h, x, p, opts)?, op(h, x, p2, opts)?);
    let (n1, n2) = (op(num, x, p, opts)?, op(num, x, p2, opts)?);
    let (d1, d2) = (op(den, x, p, opts)?, op(den, x, p2, opts)?);
    let lhs = f1.mul(n2).add(f2.mul(n1));
    let rhs = h1.mul(d2).add(h2.mul(d1));
    Ok(Comparison::new(lhs, rhs, Orientation::LhsGeRhs))
}

/// Young: `ab ≤ a^p/p + b^q/q`.
pub fn young(a: f64, b: f64, p: f64) -> Comparison {
    let q = p / (p - 1.0);
    Comparison::exact(a * b, a.powf(p) / p + b.powf(q) / q, Orientation::LhsLeRhs)
}

/// Power sum: `(a+b)^r ≤ 2^{r−1}(a^r + b^r)` for `r ≥ 1`.
pub fn power_sum(a: f64, b: f64, r: f64) -> Comparison {
    Comparison::exact(
        (a + b).powf(r),
        2f64.powf(r - 1.0) * (a.powf(r) + b.powf(r)),
        Orientation::LhsLeRhs,
    )
}

/// Weighted AM–GM used for the `f^{γ−δ}` bound:
/// `γ/(γ−δ) a^{γ−δ} − δ/(γ−δ) b^{γ−δ} ≤ a^γ b^{−δ}` for `γ > δ > 0`.
pub fn weighted_am_gm(a: f64, b: f64, gamma: f64, delta: f64) -> Comparison {
    let d = gamma - delta;
    Comparison::exact(
        (gamma * a.powf(d) - delta * b.powf(d)) / d,
        a.powf(gamma) * b.powf(-delta),
        Orientation::LhsLeRhs,
    )
}
