//! Strictly positive functions on `[1, X]`.
//!
//! A [`PositiveFunction`] is stored in log-log form: `f(t) = exp(s(ln t))`
//! with `s` a C^1 piecewise cubic in `u = ln t`. Positivity therefore holds by
//! construction and negative powers are always defined. Pointwise products and
//! powers of splines stay splines (exactly); sums and closed-form inputs are
//! kept as small expression trees and evaluated on demand.

mod spline;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use spline::HermiteSpline;

/// Relative slack allowed when checking `t <= X`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("need at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots must be strictly increasing (violated at index {index})")]
    NonIncreasingKnots { index: usize },
    #[error("first knot must be 0 (ln 1), got {0}")]
    KnotsMustStartAtZero(f64),
    #[error("knot {index} is not finite")]
    NonFiniteKnot { index: usize },
    #[error("value {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("{knots} knots but {values} values")]
    LengthMismatch { knots: usize, values: usize },
    #[error("argument t = {t} outside the domain [1, {upper}]")]
    OutOfDomain { t: f64, upper: f64 },
    #[error("constant must be positive and finite, got {0}")]
    NonPositiveConstant(f64),
    #[error("invalid closed-form parameters (beta = {beta}, lambda = {lambda})")]
    InvalidPower { beta: f64, lambda: f64 },
    #[error("combine needs at least one function")]
    Empty,
    #[error("{functions} functions but {exponents} exponents")]
    ExponentMismatch { functions: usize, exponents: usize },
    #[error("exponent {0} is not finite")]
    NonFiniteExponent(f64),
}

/// Representation tag, mirrored in the JSON `kind` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    SplineExponential,
    ClosedFormPower,
    Constant,
    Product,
    Sum,
}

impl FunctionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SplineExponential => "spline-exponential",
            Self::ClosedFormPower => "closed-form-power",
            Self::Constant => "constant",
            Self::Product => "product",
            Self::Sum => "sum",
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, PartialEq)]
enum Repr {
    Constant(f64),
    /// `t^((β−1)/β) (ln t)^(λ−1)`, the input whose operator image is known in closed form.
    Power {
        beta: f64,
        lambda: f64,
    },
    Spline(HermiteSpline),
    Product(Vec<(PositiveFunction, f64)>),
    Sum(Vec<PositiveFunction>),
}

/// Immutable, cheaply clonable positive function on `[1, X]`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionDoc", into = "FunctionDoc")]
pub struct PositiveFunction(Arc<Repr>);

impl fmt::Debug for PositiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl PositiveFunction {
    fn new(repr: Repr) -> Self {
        Self(Arc::new(repr))
    }

    /// Interpolates `exp(values)` at `exp(knots)`; knots live in `u = ln t`
    /// and must start at 0.
    pub fn from_log_knots(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, FunctionError> {
        if let Some(&k0) = knots.first() {
            if k0 != 0.0 {
                return Err(FunctionError::KnotsMustStartAtZero(k0));
            }
        }
        Ok(Self::new(Repr::Spline(HermiteSpline::pchip(knots, values)?)))
    }

    /// Wraps an explicit Hermite spline of `ln f` over `u = ln t`.
    pub fn from_hermite(spline: HermiteSpline) -> Result<Self, FunctionError> {
        if spline.start() != 0.0 {
            return Err(FunctionError::KnotsMustStartAtZero(spline.start()));
        }
        Ok(Self::new(Repr::Spline(spline)))
    }

    pub fn constant(c: f64) -> Result<Self, FunctionError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(FunctionError::NonPositiveConstant(c));
        }
        Ok(Self::new(Repr::Constant(c)))
    }

    /// The input `t^((β−1)/β) (ln t)^(λ−1)`. Positive on `(1, ∞)`; at `t = 1`
    /// it is 0 for λ > 1 and unbounded for λ < 1.
    pub fn power(beta: f64, lambda: f64) -> Result<Self, FunctionError> {
        if !(beta > 0.0 && beta <= 1.0 && lambda > 0.0 && lambda.is_finite()) {
            return Err(FunctionError::InvalidPower { beta, lambda });
        }
        Ok(Self::new(Repr::Power { beta, lambda }))
    }

    pub fn kind(&self) -> FunctionKind {
        match &*self.0 {
            Repr::Constant(_) => FunctionKind::Constant,
            Repr::Power { .. } => FunctionKind::ClosedFormPower,
            Repr::Spline(_) => FunctionKind::SplineExponential,
            Repr::Product(_) => FunctionKind::Product,
            Repr::Sum(_) => FunctionKind::Sum,
        }
    }

    /// The underlying log-spline, if this is a plain spline function.
    pub fn spline(&self) -> Option<&HermiteSpline> {
        match &*self.0 {
            Repr::Spline(s) => Some(s),
            _ => None,
        }
    }

    /// `ln X`, the right end of the domain in log-abscissa (∞ when unbounded).
    pub fn log_upper(&self) -> f64 {
        match &*self.0 {
            Repr::Constant(_) | Repr::Power { .. } => f64::INFINITY,
            Repr::Spline(s) => s.end(),
            Repr::Product(fs) => fs.iter().map(|(f, _)| f.log_upper()).fold(f64::INFINITY, f64::min),
            Repr::Sum(fs) => fs.iter().map(|f| f.log_upper()).fold(f64::INFINITY, f64::min),
        }
    }

    /// Right end `X` of the domain.
    pub fn upper(&self) -> f64 {
        self.log_upper().exp()
    }

    /// `f(t)` with a domain check.
    pub fn evaluate(&self, t: f64) -> Result<f64, FunctionError> {
        let upper = self.upper();
        if !(t >= 1.0 && t <= upper * (1.0 + DOMAIN_SLACK)) {
            return Err(FunctionError::OutOfDomain { t, upper });
        }
        Ok(self.value_at_log(t.ln()))
    }

    /// `f(e^u)` without a domain check (spline arguments are clamped).
    pub fn value_at_log(&self, u: f64) -> f64 {
        match &*self.0 {
            Repr::Sum(fs) => fs.iter().map(|f| f.value_at_log(u)).sum(),
            Repr::Constant(c) => *c,
            _ => self.ln_value_at_log(u).exp(),
        }
    }

    /// `ln f(e^u)` without a domain check.
    pub fn ln_value_at_log(&self, u: f64) -> f64 {
        match &*self.0 {
            Repr::Constant(c) => c.ln(),
            Repr::Power { beta, lambda } => {
                let lin = (beta - 1.0) / beta * u;
                if *lambda == 1.0 {
                    lin
                } else {
                    lin + (lambda - 1.0) * u.ln()
                }
            }
            Repr::Spline(s) => s.eval(u),
            Repr::Product(fs) => fs.iter().map(|(f, e)| e * f.ln_value_at_log(u)).sum(),
            Repr::Sum(fs) => fs.iter().map(|f| f.value_at_log(u)).sum::<f64>().ln(),
        }
    }

    /// Exponent `c` with `f(e^u) = u^c g(u)`, `g` smooth and positive at
    /// `u = 0`. Sums report the weakest term.
    pub fn origin_exponent(&self) -> f64 {
        match &*self.0 {
            Repr::Constant(_) | Repr::Spline(_) => 0.0,
            Repr::Power { lambda, .. } => lambda - 1.0,
            Repr::Product(fs) => fs.iter().map(|(f, e)| e * f.origin_exponent()).sum(),
            Repr::Sum(fs) => fs.iter().map(|f| f.origin_exponent()).fold(f64::INFINITY, f64::min),
        }
    }

    /// Sorted, de-duplicated knots (in `u = ln t`) of every spline involved;
    /// the function is analytic between consecutive entries.
    pub fn log_knots(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_knots(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_knots(&self, out: &mut Vec<f64>) {
        match &*self.0 {
            Repr::Constant(_) | Repr::Power { .. } => {}
            Repr::Spline(s) => out.extend_from_slice(s.knots()),
            Repr::Product(fs) => fs.iter().for_each(|(f, _)| f.collect_knots(out)),
            Repr::Sum(fs) => fs.iter().for_each(|f| f.collect_knots(out)),
        }
    }

    /// Pointwise product `∏ f_i^{e_i}`.
    ///
    /// Spline and constant factors are merged into a single spline exactly;
    /// anything else yields a product node.
    pub fn combine(fs: &[PositiveFunction], exponents: &[f64]) -> Result<Self, FunctionError> {
        if fs.is_empty() {
            return Err(FunctionError::Empty);
        }
        if fs.len() != exponents.len() {
            return Err(FunctionError::ExponentMismatch {
                functions: fs.len(),
                exponents: exponents.len(),
            });
        }
        if let Some(e) = exponents.iter().find(|e| !e.is_finite()) {
            return Err(FunctionError::NonFiniteExponent(*e));
        }
        let mergeable = fs.iter().all(|f| matches!(&*f.0, Repr::Spline(_) | Repr::Constant(_)));
        if !mergeable {
            let factors = fs.iter().cloned().zip(exponents.iter().copied()).collect();
            return Ok(Self::new(Repr::Product(factors)));
        }
        let mut offset = 0.0;
        let mut parts = Vec::new();
        for (f, &e) in fs.iter().zip(exponents) {
            match &*f.0 {
                Repr::Constant(c) => offset += e * c.ln(),
                Repr::Spline(s) => parts.push((s, e)),
                _ => unreachable!(),
            }
        }
        if parts.is_empty() {
            return Self::constant(offset.exp());
        }
        if parts.len() == 1 && offset == 0.0 {
            let (s, e) = parts[0];
            let merged = if e == 1.0 { s.clone() } else { s.scaled(e) };
            return Ok(Self::new(Repr::Spline(merged)));
        }
        Ok(Self::new(Repr::Spline(HermiteSpline::linear_combination(
            &parts, offset,
        ))))
    }

    /// Pointwise sum `Σ f_i`, kept exact as a sum node.
    pub fn sum(fs: &[PositiveFunction]) -> Result<Self, FunctionError> {
        if fs.is_empty() {
            return Err(FunctionError::Empty);
        }
        if fs.len() == 1 {
            return Ok(fs[0].clone());
        }
        let mut terms = Vec::with_capacity(fs.len());
        for f in fs {
            match &*f.0 {
                Repr::Sum(inner) => terms.extend(inner.iter().cloned()),
                _ => terms.push(f.clone()),
            }
        }
        Ok(Self::new(Repr::Sum(terms)))
    }

    /// `f^e`.
    pub fn powf(&self, e: f64) -> Self {
        Self::combine(std::slice::from_ref(self), &[e]).expect("single finite exponent")
    }

    /// `c · f` for `c > 0`.
    pub fn scale(&self, c: f64) -> Result<Self, FunctionError> {
        Self::combine(&[Self::constant(c)?, self.clone()], &[1.0, 1.0])
    }

    /// `f · g`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::combine(&[self.clone(), other.clone()], &[1.0, 1.0]).expect("two finite exponents")
    }

    /// `f + g`.
    pub fn add(&self, other: &Self) -> Self {
        Self::sum(&[self.clone(), other.clone()]).expect("non-empty")
    }
}

/// Working interval `[1, X]` and evaluation point `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub x_max: f64,
    pub x: f64,
}

/// Default right end of the working interval, `e^2`.
pub const DEFAULT_X_MAX: f64 = 7.389_056_098_930_65;

impl DomainSpec {
    pub fn new(x_max: f64, x: f64) -> Result<Self, FunctionError> {
        if !(x_max > 1.0 && x_max.is_finite()) {
            return Err(FunctionError::OutOfDomain {
                t: x_max,
                upper: f64::INFINITY,
            });
        }
        if !(x > 1.0 && x <= x_max) {
            return Err(FunctionError::OutOfDomain { t: x, upper: x_max });
        }
        Ok(Self { x_max, x })
    }
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            x_max: DEFAULT_X_MAX,
            x: std::f64::consts::E,
        }
    }
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum FunctionDoc {
    #[serde(rename = "spline-exponential")]
    Spline {
        knots: Vec<f64>,
        logvals: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slopes: Option<Vec<f64>>,
    },
    #[serde(rename = "constant")]
    Constant { value: f64 },
    #[serde(rename = "closed-form-power")]
    Power { beta: f64, lambda: f64 },
    #[serde(rename = "product")]
    Product { factors: Vec<FactorDoc> },
    #[serde(rename = "sum")]
    Sum { terms: Vec<PositiveFunction> },
}

#[derive(Serialize, Deserialize)]
struct FactorDoc {
    function: PositiveFunction,
    exponent: f64,
}

impl TryFrom<FunctionDoc> for PositiveFunction {
    type Error = FunctionError;

    fn try_from(doc: FunctionDoc) -> Result<Self, Self::Error> {
        match doc {
            FunctionDoc::Spline {
                knots,
                logvals,
                slopes: None,
            } => Self::from_log_knots(knots, logvals),
            FunctionDoc::Spline {
                knots,
                logvals,
                slopes: Some(slopes),
            } => Self::from_hermite(HermiteSpline::from_parts(knots, logvals, slopes)?),
            FunctionDoc::Constant { value } => Self::constant(value),
            FunctionDoc::Power { beta, lambda } => Self::power(beta, lambda),
            FunctionDoc::Product { factors } => {
                if factors.is_empty() {
                    return Err(FunctionError::Empty);
                }
                Ok(Self::new(Repr::Product(
                    factors.into_iter().map(|f| (f.function, f.exponent)).collect(),
                )))
            }
            FunctionDoc::Sum { terms } => {
                if terms.is_empty() {
                    return Err(FunctionError::Empty);
                }
                Ok(Self::new(Repr::Sum(terms)))
            }
        }
    }
}

impl From<PositiveFunction> for FunctionDoc {
    fn from(f: PositiveFunction) -> Self {
        match &*f.0 {
            Repr::Constant(c) => FunctionDoc::Constant { value: *c },
            Repr::Power { beta, lambda } => FunctionDoc::Power {
                beta: *beta,
                lambda: *lambda,
            },
            Repr::Spline(s) => FunctionDoc::Spline {
                knots: s.knots().to_vec(),
                logvals: s.values().to_vec(),
                slopes: Some(s.slopes().to_vec()),
            },
            Repr::Product(fs) => FunctionDoc::Product {
                factors: fs
                    .iter()
                    .map(|(f, e)| FactorDoc {
                        function: f.clone(),
                        exponent: *e,
                    })
                    .collect(),
            },
            Repr::Sum(fs) => FunctionDoc::Sum { terms: fs.clone() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn sample_spline() -> PositiveFunction {
        PositiveFunction::from_log_knots(vec![0.0, 0.4, 0.9, 1.3, 2.0], vec![0.2, -0.7, 0.5, 0.9, -0.1]).unwrap()
    }

    #[test]
    fn constant_one_from_zero_logs() {
        let f = PositiveFunction::from_log_knots(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        for &t in &[1.0, 1.5, 2.0, E] {
            assert_eq!(f.evaluate(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn linear_log_is_identity() {
        let f = PositiveFunction::from_log_knots(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!((f.evaluate(E).unwrap() - E).abs() < 1e-15);
        assert!((f.evaluate(2.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_interior_knot() {
        let f = PositiveFunction::from_log_knots(vec![0.0, 0.5, 1.0], vec![0.0, 0.2, 0.1]).unwrap();
        let v = f.evaluate(0.5_f64.exp()).unwrap();
        assert!((v - 0.2_f64.exp()).abs() < 1e-15);
        assert!((v - 1.2214).abs() < 1e-4);
    }

    #[test]
    fn endpoint_values_are_stored_values() {
        let f = sample_spline();
        let upper = f.upper();
        assert!((f.evaluate(1.0).unwrap() / 0.2_f64.exp() - 1.0).abs() < 1e-14);
        assert!((f.evaluate(upper).unwrap() / (-0.1_f64).exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let f = sample_spline();
        assert!(matches!(f.evaluate(0.5), Err(FunctionError::OutOfDomain { .. })));
        assert!(matches!(f.evaluate(8.0), Err(FunctionError::OutOfDomain { .. })));
        assert!(matches!(
            PositiveFunction::from_log_knots(vec![0.1, 1.0], vec![0.0, 0.0]),
            Err(FunctionError::KnotsMustStartAtZero(_))
        ));
        assert!(matches!(
            PositiveFunction::from_log_knots(vec![0.0, 1.0, 0.5], vec![0.0; 3]),
            Err(FunctionError::NonIncreasingKnots { .. })
        ));
        assert!(PositiveFunction::from_log_knots(vec![0.0, 1.0], vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn combine_identity_and_inverse() {
        let f = sample_spline();
        let same = PositiveFunction::combine(std::slice::from_ref(&f), &[1.0]).unwrap();
        let one = PositiveFunction::combine(&[f.clone(), f.clone()], &[1.0, -1.0]).unwrap();
        for j in 0..=100 {
            let t = 1.0 + (f.upper() - 1.0) * j as f64 / 100.0;
            let a = f.evaluate(t).unwrap();
            assert!((same.evaluate(t).unwrap() / a - 1.0).abs() < 1e-14);
            assert!((one.evaluate(t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn add_mode_constants() {
        let one = PositiveFunction::constant(1.0).unwrap();
        let two = one.add(&one);
        assert_eq!(two.kind(), FunctionKind::Sum);
        assert!((two.evaluate(3.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn combine_rejects_empty() {
        assert_eq!(PositiveFunction::combine(&[], &[]), Err(FunctionError::Empty));
        assert_eq!(PositiveFunction::sum(&[]), Err(FunctionError::Empty));
    }

    #[test]
    fn mixed_product_is_a_node() {
        let f = sample_spline();
        let p = PositiveFunction::power(0.5, 2.0).unwrap();
        let prod = f.mul(&p);
        assert_eq!(prod.kind(), FunctionKind::Product);
        let t = 2.3;
        let want = f.evaluate(t).unwrap() * p.evaluate(t).unwrap();
        assert!((prod.evaluate(t).unwrap() / want - 1.0).abs() < 1e-14);
        assert_eq!(prod.log_knots(), f.log_knots());
    }

    #[test]
    fn power_kind_values() {
        let p = PositiveFunction::power(0.5, 2.0).unwrap();
        // t^{-1} ln t
        let t = 3.0_f64;
        assert!((p.evaluate(t).unwrap() - t.ln() / t).abs() < 1e-15);
        assert_eq!(p.evaluate(1.0).unwrap(), 0.0);
        assert!(PositiveFunction::power(0.0, 1.0).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = sample_spline();
        let g = PositiveFunction::constant(2.5).unwrap();
        let h = PositiveFunction::power(0.25, 2.5).unwrap();
        let expr = f.add(&g.mul(&h)).powf(1.5);
        let text = serde_json::to_string(&expr).unwrap();
        let back: PositiveFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, expr);
        for &t in &[1.2, 2.0, 5.5] {
            assert_eq!(back.evaluate(t).unwrap(), expr.evaluate(t).unwrap());
        }
    }

    #[test]
    fn json_spline_without_slopes() {
        let f: PositiveFunction =
            serde_json::from_str(r#"{"kind":"spline-exponential","knots":[0.0,1.0],"logvals":[0.0,1.0]}"#).unwrap();
        assert!((f.evaluate(E).unwrap() - E).abs() < 1e-15);
        let bad = serde_json::from_str::<PositiveFunction>(
            r#"{"kind":"spline-exponential","knots":[1.0,0.0],"logvals":[0.0,1.0]}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn domain_spec_invariants() {
        assert!(DomainSpec::new(DEFAULT_X_MAX, E).is_ok());
        assert!(DomainSpec::new(1.0, 1.0).is_err());
        assert!(DomainSpec::new(2.0, 3.0).is_err());
        assert!(DomainSpec::new(2.0, 1.0).is_err());
    }
}
