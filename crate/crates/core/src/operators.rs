//! Generalized proportional fractional integrals.
//!
//! All operators share the kernel
//! `(1/(β^α Γ(α))) · e^{((β−1)/β) v} · v^{α−1}` where `v` is the (log-)distance
//! from the evaluation point. Substituting `v = L s` with `L` the length of the
//! integration range turns every operator into
//! `L^α/(β^α Γ(α)) ∫_0^1 s^{α−1} e^{((β−1)/β) L s} z(·) ds`,
//! which the Jacobi engine integrates with the exponential factor kept in the
//! smooth part. The integration range is split at the knots of `z`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{FunctionError, PositiveFunction};
use crate::quadrature::{self, tanh_sinh, OperatorValue, QuadratureError, DEFAULT_RTOL};
use crate::special::gamma;

/// Knots closer than this (in the unit variable `s`) to a panel end are ignored.
const MIN_PANEL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid parameters: alpha = {alpha}, beta = {beta} (need 0.05 <= alpha <= 10, 0 < beta <= 1)")]
    InvalidParams { alpha: f64, beta: f64 },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("semigroup composition needs equal beta ({0} vs {1})")]
    MismatchedBeta(f64, f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

/// Order `α` and proportionality index `β` of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct FracParams {
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for FracParams {
    type Error = OperatorError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        Self::new(raw.alpha, raw.beta)
    }
}

impl FracParams {
    pub const MIN_ALPHA: f64 = 0.05;
    pub const MAX_ALPHA: f64 = 10.0;

    pub fn new(alpha: f64, beta: f64) -> Result<Self, OperatorError> {
        if !((Self::MIN_ALPHA..=Self::MAX_ALPHA).contains(&alpha) && beta > 0.0 && beta <= 1.0) {
            return Err(OperatorError::InvalidParams { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(β − 1)/β`, the rate of the exponential kernel factor (≤ 0).
    pub fn rate(&self) -> f64 {
        (self.beta - 1.0) / self.beta
    }

    /// `1/(β^α Γ(α))`.
    pub fn normalization(&self) -> f64 {
        1.0 / (self.beta.powf(self.alpha) * gamma(self.alpha))
    }
}

/// Exponent `λ` of the closed-form input `t^{(β−1)/β} (ln t)^{λ−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerImageSpec {
    pub lambda: f64,
}

impl PowerImageSpec {
    pub fn new(lambda: f64) -> Result<Self, OperatorError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(OperatorError::InvalidLambda(lambda));
        }
        Ok(Self { lambda })
    }
}

/// Numerical settings for operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOptions {
    pub rtol: f64,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self { rtol: DEFAULT_RTOL }
    }
}

/// Shared reduction. Samples `z_at(origin + direction · length · s)`; `knots`
/// are breakpoints of `z_at` in the same coordinate. `end_exponent` is the
/// power `c` with which the integrand behaves like `(1−s)^c` at `s = 1`
/// (0 when smooth there); it goes into the quadrature weight.
#[allow(clippy::too_many_arguments)]
fn reduced_integral<F>(
    z_at: F,
    origin: f64,
    length: f64,
    direction: f64,
    p: FracParams,
    knots: &[f64],
    end_exponent: f64,
    rtol: f64,
) -> Result<OperatorValue, OperatorError>
where
    F: Fn(f64) -> f64,
{
    let rate = p.rate() * length;
    let c = end_exponent;
    let step = direction * length;
    let end = origin + step;
    let phi = |s: f64, d: f64| {
        if c == 0.0 {
            (rate * s).exp() * z_at(origin + step * s)
        } else {
            // measured from the far end, where the argument is near 0
            (rate * s).exp() * z_at(end - step * d) / d.powf(c)
        }
    };
    let mut breaks: Vec<f64> = knots
        .iter()
        .map(|&k| (k - origin) * direction / length)
        .filter(|&s| s > MIN_PANEL && s < 1.0 - MIN_PANEL)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= MIN_PANEL);
    let integral = quadrature::integrate_adaptive_two_sided(phi, p.alpha, c, &breaks, rtol)?;
    Ok(integral.scaled(length.powf(p.alpha) * p.normalization()))
}

fn check_upper(z: &PositiveFunction, t: f64) -> Result<(), OperatorError> {
    let upper = z.upper();
    if t > upper * (1.0 + 1e-12) {
        return Err(OperatorError::Domain(format!(
            "point {t} beyond the function domain [1, {upper}]"
        )));
    }
    Ok(())
}

/// Left-sided Hadamard proportional integral `(_a H^{α,β} z)(x)`; `a = 1`
/// gives the one-sided operator used throughout the inequality harness.
pub fn hadamard_left(z: &PositiveFunction, x: f64, p: FracParams, a: f64) -> Result<OperatorValue, OperatorError> {
    hadamard_left_with(z, x, p, a, &OperatorOptions::default())
}

pub fn hadamard_left_with(
    z: &PositiveFunction,
    x: f64,
    p: FracParams,
    a: f64,
    opts: &OperatorOptions,
) -> Result<OperatorValue, OperatorError> {
    if !(a >= 1.0) || !x.is_finite() {
        return Err(OperatorError::Domain(format!("need 1 <= a < x, got a = {a}, x = {x}")));
    }
    if x < a {
        return Err(OperatorError::Domain(format!("need x > a, got x = {x} < a = {a}")));
    }
    check_upper(z, x)?;
    if x == a {
        return Ok(OperatorValue::zero());
    }
    let ln_x = x.ln();
    let length = ln_x - a.ln();
    reduced_integral(
        |u| z.value_at_log(u),
        ln_x,
        length,
        -1.0,
        p,
        &z.log_knots(),
        if a == 1.0 { z.origin_exponent() } else { 0.0 },
        opts.rtol,
    )
}

/// The one-sided operator `H^{α,β}_{1,x} z`.
pub fn hadamard(
    z: &PositiveFunction,
    x: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<OperatorValue, OperatorError> {
    hadamard_left_with(z, x, p, 1.0, opts)
}

/// Right-sided Hadamard proportional integral `(H^{α,β}_b z)(x)`.
pub fn hadamard_right(z: &PositiveFunction, x: f64, b: f64, p: FracParams) -> Result<OperatorValue, OperatorError> {
    hadamard_right_with(z, x, b, p, &OperatorOptions::default())
}

pub fn hadamard_right_with(
    z: &PositiveFunction,
    x: f64,
    b: f64,
    p: FracParams,
    opts: &OperatorOptions,
) -> Result<OperatorValue, OperatorError> {
    if !(x >= 1.0) || !b.is_finite() {
        return Err(OperatorError::Domain(format!("need 1 <= x < b, got x = {x}, b = {b}")));
    }
    if x > b {
        return Err(OperatorError::Domain(format!("need x < b, got x = {x} > b = {b}")));
    }
    check_upper(z, b)?;
    if x == b {
        return Ok(OperatorValue::zero());
    }
    let ln_x = x.ln();
    let length = b.ln() - ln_x;
    reduced_integral(
        |u| z.value_at_log(u),
        ln_x,
        length,
        1.0,
        p,
        &z.log_knots(),
        0.0,
        opts.rtol,
    )
}

/// Left-sided proportional (Riemann–Liouville type) integral of `z` over
/// `[a, x]`. `breakpoints` lists points where `z` is not smooth.
pub fn rl_proportional_left<F>(
    z: F,
    breakpoints: &[f64],
    x: f64,
    p: FracParams,
    a: f64,
    opts: &OperatorOptions,
) -> Result<OperatorValue, OperatorError>
where
    F: Fn(f64) -> f64,
{
    if !(x >= a) || !x.is_finite() || !a.is_finite() {
        return Err(OperatorError::Domain(format!("need a < x, got a = {a}, x = {x}")));
    }
    if x == a {
        return Ok(OperatorValue::zero());
    }
    reduced_integral(z, x, x - a, -1.0, p, breakpoints, 0.0, opts.rtol)
}

/// Right-sided proportional integral of `z` over `[x, b]`.
pub fn rl_proportional_right<F>(
    z: F,
    breakpoints: &[f64],
    x: f64,
    p: FracParams,
    b: f64,
    opts: &OperatorOptions,
) -> Result<OperatorValue, OperatorError>
where
    F: Fn(f64) -> f64,
{
    if !(b >= x) || !x.is_finite() || !b.is_finite() {
        return Err(OperatorError::Domain(format!("need x < b, got x = {x}, b = {b}")));
    }
    if x == b {
        return Ok(OperatorValue::zero());
    }
    reduced_integral(z, x, b - x, 1.0, p, breakpoints, 0.0, opts.rtol)
}

/// Exact image of `t^{(β−1)/β}(ln t)^{λ−1}` under the one-sided operator:
/// `Γ(λ)/(β^α Γ(α+λ)) · x^{(β−1)/β} (ln x)^{α+λ−1}`.
pub fn closed_form_power_image(x: f64, p: FracParams, spec: PowerImageSpec) -> Result<f64, OperatorError> {
    closed_form_power_image_with(x, p, spec, gamma)
}

/// [`closed_form_power_image`] with a caller-supplied Γ.
pub fn closed_form_power_image_with<G>(
    x: f64,
    p: FracParams,
    spec: PowerImageSpec,
    gamma_fn: G,
) -> Result<f64, OperatorError>
where
    G: Fn(f64) -> f64,
{
    if !(x > 1.0) || !x.is_finite() {
        return Err(OperatorError::Domain(format!("closed form needs x > 1, got {x}")));
    }
    let lambda = spec.lambda;
    let ln_x = x.ln();
    let coeff = gamma_fn(lambda) / (p.beta.powf(p.alpha) * gamma_fn(p.alpha + lambda));
    Ok(coeff * (p.rate() * ln_x).exp() * ln_x.powf(p.alpha + lambda - 1.0))
}

/// Both sides of the semigroup law at `x`:
/// `(H^{α,β}(H^{λ,β} z)(x), H^{α+λ,β} z(x))`.
///
/// The outer operator samples the inner image directly at its own quadrature
/// nodes (nested quadrature); the inner image vanishes at `t = 1`, so it has
/// no log-spline representation.
pub fn semigroup_compose(
    z: &PositiveFunction,
    x: f64,
    outer: FracParams,
    inner: FracParams,
    opts: &OperatorOptions,
) -> Result<(OperatorValue, OperatorValue), OperatorError> {
    if outer.beta != inner.beta {
        return Err(OperatorError::MismatchedBeta(outer.beta, inner.beta));
    }
    if !(x > 1.0) {
        return Err(OperatorError::Domain(format!("semigroup check needs x > 1, got {x}")));
    }
    check_upper(z, x)?;
    let sum = FracParams::new(outer.alpha + inner.alpha, outer.beta)?;
    let inner_opts = OperatorOptions {
        rtol: (opts.rtol * 0.1).max(1e-13),
    };
    let inner_image = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match hadamard_left_with(z, u.exp(), inner, 1.0, &inner_opts) {
            Ok(v) => v.value,
            Err(_) => f64::NAN,
        }
    };
    let ln_x = x.ln();
    // the inner image vanishes like u^(λ + c) at u = 0
    let end = inner.alpha + z.origin_exponent();
    let composed = reduced_integral(inner_image, ln_x, ln_x, -1.0, outer, &z.log_knots(), end, opts.rtol)?;
    let direct = hadamard_left_with(z, x, sum, 1.0, opts)?;
    Ok((composed, direct))
}

/// Classical Hadamard integral `(1/Γ(α)) ∫_a^x (ln x − ln t)^{α−1} z(t) dt/t`,
/// evaluated by tanh–sinh quadrature in `v = ln x − ln t`. Shares no code
/// with the Jacobi path; serves as the β = 1 reference.
pub fn classical_hadamard_left(z: &PositiveFunction, x: f64, alpha: f64, a: f64) -> Result<f64, OperatorError> {
    if !(alpha > 0.0) {
        return Err(OperatorError::InvalidParams { alpha, beta: 1.0 });
    }
    if !(a >= 1.0 && x > a) {
        return Err(OperatorError::Domain(format!("need 1 <= a < x, got a = {a}, x = {x}")));
    }
    check_upper(z, x)?;
    let ln_x = x.ln();
    let length = ln_x - a.ln();
    let breaks: Vec<f64> = z
        .log_knots()
        .iter()
        .map(|&u| ln_x - u)
        .filter(|&v| v > 0.0 && v < length)
        .collect();
    Ok(classical_kernel_integral(|v| z.value_at_log(ln_x - v), length, alpha, &breaks) / gamma(alpha))
}

/// Classical left Riemann–Liouville integral `(1/Γ(α)) ∫_a^x (x − t)^{α−1} z(t) dt`,
/// by tanh–sinh.
pub fn classical_rl_left<F>(z: F, breakpoints: &[f64], x: f64, alpha: f64, a: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let length = x - a;
    let breaks: Vec<f64> = breakpoints
        .iter()
        .map(|&t| x - t)
        .filter(|&v| v > 0.0 && v < length)
        .collect();
    classical_kernel_integral(|v| z(x - v), length, alpha, &breaks) / gamma(alpha)
}

/// `∫_0^L v^{α−1} g(v) dv` with `g` smooth between `breaks` (ascending, or any order).
fn classical_kernel_integral<G>(g: G, length: f64, alpha: f64, breaks: &[f64]) -> f64
where
    G: Fn(f64) -> f64,
{
    let mut edges = vec![0.0];
    let mut inner = breaks.to_vec();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(length);
    edges.dedup();
    let mut parts = Vec::with_capacity(edges.len());
    for (i, w) in edges.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let (value, _) = tanh_sinh::integrate(
            |p| {
                // keep the singular factor accurate on the first panel
                let v = if i == 0 { p.from_left } else { p.t };
                v.powf(alpha - 1.0) * g(v)
            },
            lo,
            hi,
            1e-14,
        );
        parts.push(value);
    }
    quadrature::neumaier_sum(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn one() -> PositiveFunction {
        PositiveFunction::constant(1.0).unwrap()
    }

    fn params(alpha: f64, beta: f64) -> FracParams {
        FracParams::new(alpha, beta).unwrap()
    }

    fn spline() -> PositiveFunction {
        PositiveFunction::from_log_knots(vec![0.0, 0.35, 0.8, 1.4, 2.0], vec![0.3, -0.5, 0.6, 0.1, -0.8]).unwrap()
    }

    #[test]
    fn params_invariants() {
        assert!(FracParams::new(0.04, 0.5).is_err());
        assert!(FracParams::new(10.5, 0.5).is_err());
        assert!(FracParams::new(1.0, 0.0).is_err());
        assert!(FracParams::new(1.0, 1.1).is_err());
        assert!(FracParams::new(1.0, 1.0).is_ok());
        let bad: Result<FracParams, _> = serde_json::from_str(r#"{"alpha":0.0,"beta":1.0}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn left_constant_order_one() {
        let v = hadamard_left(&one(), E, params(1.0, 1.0), 1.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn left_constant_order_half() {
        let v = hadamard_left(&one(), E, params(0.5, 1.0), 1.0).unwrap();
        let want = 2.0 / PI.sqrt();
        assert!(rel(v.value, want) < 1e-13);
    }

    #[test]
    fn left_power_input_beta_half() {
        // z(t) = t^{-1} ln t, α = 1, β = 1/2 → e^{-1} at x = e
        let z = PositiveFunction::power(0.5, 2.0).unwrap();
        let v = hadamard_left(&z, E, params(1.0, 0.5), 1.0).unwrap();
        assert!(rel(v.value, (-1.0f64).exp()) < 1e-13);
    }

    #[test]
    fn left_power_input_with_log_singularity() {
        // (ln t)^(λ−1) with λ < 2 non-integer is not smooth at t = 1
        for (alpha, beta, lambda, x) in [(0.7, 0.4, 1.5, E), (0.3, 0.25, 0.4, 7.0), (1.7, 1.0, 0.2, 1.5)] {
            let p = params(alpha, beta);
            let z = PositiveFunction::power(beta, lambda).unwrap();
            let v = hadamard_left(&z, x, p, 1.0).unwrap();
            let exact = closed_form_power_image(x, p, PowerImageSpec::new(lambda).unwrap()).unwrap();
            assert!(v.converged, "{v:?}");
            assert!(rel(v.value, exact) < 1e-13, "lambda {lambda}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn left_domain_handling() {
        let z = spline();
        assert_eq!(hadamard_left(&z, 2.0, params(0.5, 0.5), 2.0).unwrap().value, 0.0);
        assert!(matches!(
            hadamard_left(&z, 1.5, params(0.5, 0.5), 2.0),
            Err(OperatorError::Domain(_))
        ));
        assert!(matches!(
            hadamard_left(&z, 9.0, params(0.5, 0.5), 1.0),
            Err(OperatorError::Domain(_))
        ));
    }

    #[test]
    fn right_constant_cases() {
        let v = hadamard_right(&one(), 1.0, E, params(1.0, 1.0)).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14);
        let v = hadamard_right(&one(), 1.0, E, params(0.5, 1.0)).unwrap();
        assert!(rel(v.value, 2.0 / PI.sqrt()) < 1e-13);
        assert!(hadamard_right(&one(), 3.0, 2.0, params(0.5, 1.0)).is_err());
    }

    #[test]
    fn right_equals_left_of_reflection() {
        // z on [1, e]; reflect(t) = e / t maps u to 1 − u
        let z = PositiveFunction::from_log_knots(vec![0.0, 0.3, 0.55, 1.0], vec![0.2, -0.4, 0.1, 0.6]).unwrap();
        let zr = PositiveFunction::from_hermite(z.spline().unwrap().reflected()).unwrap();
        for &(alpha, beta) in &[(0.3, 0.25), (1.0, 1.0), (1.7, 0.5)] {
            let p = params(alpha, beta);
            let right = hadamard_right(&z, 1.0, E, p).unwrap();
            let left = hadamard_left(&zr, E, p, 1.0).unwrap();
            assert!(rel(right.value, left.value) < 1e-12, "alpha={alpha} beta={beta}");
        }
    }

    #[test]
    fn rl_reductions() {
        let opts = OperatorOptions::default();
        let v = rl_proportional_left(|_| 1.0, &[], 1.0, params(1.0, 1.0), 0.0, &opts).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14);
        let v = rl_proportional_left(|_| 1.0, &[], 1.0, params(2.0, 1.0), 0.0, &opts).unwrap();
        assert!((v.value - 0.5).abs() < 1e-14);
        let v = rl_proportional_right(|_| 1.0, &[], 0.0, params(2.0, 1.0), 1.0, &opts).unwrap();
        assert!((v.value - 0.5).abs() < 1e-14);
        assert!(rl_proportional_left(|_| 1.0, &[], -1.0, params(2.0, 1.0), 0.0, &opts).is_err());
    }

    #[test]
    fn rl_of_log_composition_matches_hadamard() {
        // Hadamard of z̃ at e^x equals the RL operator of z(t) = z̃(e^t) at x
        let zt = spline();
        let opts = OperatorOptions::default();
        for &(alpha, beta, x) in &[(0.5, 0.5, 1.3), (1.7, 0.25, 2.0), (0.3, 1.0, 0.7)] {
            let p = params(alpha, beta);
            let rl = rl_proportional_left(|t| zt.value_at_log(t), &zt.log_knots(), x, p, 0.0, &opts).unwrap();
            let had = hadamard_left(&zt, f64::exp(x), p, 1.0).unwrap();
            assert!(rel(rl.value, had.value) < 1e-10);
        }
    }

    #[test]
    fn closed_form_examples() {
        let v = closed_form_power_image(E, params(0.5, 1.0), PowerImageSpec::new(1.0).unwrap()).unwrap();
        assert!(rel(v, 1.0 / gamma(1.5)) < 1e-14);
        let v = closed_form_power_image(E, params(1.0, 0.5), PowerImageSpec::new(2.0).unwrap()).unwrap();
        assert!(rel(v, (-1.0f64).exp()) < 1e-14);
        let tiny = closed_form_power_image(1.0 + 1e-12, params(0.7, 0.5), PowerImageSpec::new(1.0).unwrap()).unwrap();
        assert!(tiny < 1e-7);
        assert!(closed_form_power_image(1.0, params(0.7, 0.5), PowerImageSpec::new(1.0).unwrap()).is_err());
        assert!(PowerImageSpec::new(0.0).is_err());
    }

    #[test]
    fn semigroup_constant_input() {
        let opts = OperatorOptions::default();
        let (composed, direct) = semigroup_compose(&one(), E, params(0.5, 1.0), params(0.5, 1.0), &opts).unwrap();
        assert!((direct.value - 1.0).abs() < 1e-13);
        assert!((composed.value - 1.0).abs() < 1e-7, "{}", composed.value);
        assert!(matches!(
            semigroup_compose(&one(), E, params(0.5, 1.0), params(0.5, 0.5), &opts),
            Err(OperatorError::MismatchedBeta(..))
        ));
    }

    #[test]
    fn classical_matches_proportional_at_beta_one() {
        let z = spline();
        for &alpha in &[0.3, 1.0, 2.5] {
            let classical = classical_hadamard_left(&z, 5.0, alpha, 1.0).unwrap();
            let prop = hadamard_left(&z, 5.0, params(alpha, 1.0), 1.0).unwrap();
            assert!(rel(classical, prop.value) < 1e-11, "alpha={alpha}");
        }
    }
}
