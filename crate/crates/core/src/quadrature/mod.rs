//! Integration of `∫_0^1 s^(α−1) φ(s) ds` for smooth `φ`.
//!
//! The endpoint singularity is absorbed into the weight of a Gauss–Jacobi
//! rule, built by Golub–Welsch from the shifted Jacobi recurrence. Rules are
//! cached per `(α, n)`. Adaptive integration doubles the node count until two
//! successive estimates agree; the piecewise variant splits `[0, 1]` at known
//! non-smooth points of `φ` so every panel sees an analytic integrand.

mod golub_welsch;
pub mod tanh_sinh;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest supported weight exponent α; the recurrence loses accuracy below.
pub const MIN_ALPHA: f64 = 0.05;
/// Largest supported α.
pub const MAX_ALPHA: f64 = 20.0;
pub const MAX_NODES: usize = 512;
/// Starting node count for adaptive integration.
pub const START_NODES: usize = 16;
/// Default relative tolerance for operator evaluation.
pub const DEFAULT_RTOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("alpha = {0} is below the supported singularity strength (alpha >= {MIN_ALPHA})")]
    UnsupportedSingularity(f64),
    #[error("alpha = {0} is outside the supported range (0.05, 20]")]
    AlphaOutOfRange(f64),
    #[error("node count {0} outside [1, {MAX_NODES}]")]
    BadNodeCount(usize),
    #[error("rtol = {0} outside [1e-13, 1e-4]")]
    BadTolerance(f64),
    #[error("integrand is not finite ({value}) at node s = {node}")]
    NonFiniteIntegrand { node: f64, value: f64 },
    #[error("breakpoints must be increasing and inside (0, 1)")]
    BadBreakpoints,
    #[error("tridiagonal eigensolver did not converge (size {size})")]
    EigenNoConvergence { size: usize },
}

/// Gauss–Jacobi nodes and weights for the weight `s^(α−1)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    alpha: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Result of an operator or adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    /// `|I_2n − I_n|` from the last doubling (summed over panels).
    pub err_est: f64,
    /// Total number of integrand evaluations behind `value`.
    pub n_used: usize,
    pub converged: bool,
}

impl OperatorValue {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            err_est: 0.0,
            n_used: 0,
            converged: true,
        }
    }

    /// `err_est / |value|`, or 0 for an exact zero.
    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            if self.err_est == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.err_est / self.value.abs()
        }
    }

    pub(crate) fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            err_est: self.err_est * factor.abs(),
            ..self
        }
    }
}

type RuleCache = Mutex<HashMap<(u64, usize), Arc<QuadratureRule>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss rule with `n` nodes for the weight `s^(α−1)` on `[0, 1]`.
///
/// `α = 1` gives Gauss–Legendre on `[0, 1]`. Rules are cached and shared.
pub fn build_jacobi_rule(alpha: f64, n: usize) -> Result<Arc<QuadratureRule>, QuadratureError> {
    if !(alpha >= MIN_ALPHA) {
        return Err(QuadratureError::UnsupportedSingularity(alpha));
    }
    if alpha > MAX_ALPHA || !alpha.is_finite() {
        return Err(QuadratureError::AlphaOutOfRange(alpha));
    }
    if n == 0 || n > MAX_NODES {
        return Err(QuadratureError::BadNodeCount(n));
    }
    let key = (alpha.to_bits(), n);
    if let Some(rule) = cache().lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let (diag, off) = golub_welsch::shifted_jacobi_recurrence(alpha, n);
    let (nodes, z2) = golub_welsch::tridiagonal_eigen(&diag, &off)?;
    let mass = 1.0 / alpha;
    let rule = Arc::new(QuadratureRule {
        alpha,
        nodes,
        weights: z2.into_iter().map(|w| w * mass).collect(),
    });
    let mut guard = cache().lock().expect("rule cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(rule)))
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `Σ w_i φ(s_i)`.
pub fn integrate_weighted<F>(phi: F, rule: &QuadratureRule) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    Ok(weighted_sum(&phi, rule, &|s| s)?.0)
}

/// Returns the weighted sum and `Σ |w_i φ_i|`; `map` sends rule nodes to the
/// argument handed to `phi`.
fn weighted_sum<F, M>(phi: &F, rule: &QuadratureRule, map: &M) -> Result<(f64, f64), QuadratureError>
where
    F: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let mut terms = Vec::with_capacity(rule.len());
    let mut abs = 0.0;
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        let arg = map(s);
        let v = phi(arg);
        if !v.is_finite() {
            return Err(QuadratureError::NonFiniteIntegrand { node: arg, value: v });
        }
        abs += (w * v).abs();
        terms.push(w * v);
    }
    Ok((neumaier_sum(terms), abs))
}

fn check_rtol(rtol: f64) -> Result<(), QuadratureError> {
    if !(1e-13..=1e-4).contains(&rtol) {
        return Err(QuadratureError::BadTolerance(rtol));
    }
    Ok(())
}

/// Doubling loop on one panel. `alpha` selects the rule; `map` takes rule
/// nodes to the panel; the returned value still has to be multiplied by the
/// panel's Jacobian.
fn adapt_panel<F, M>(phi: &F, alpha: f64, rtol: f64, map: M) -> Result<OperatorValue, QuadratureError>
where
    F: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let mut n = START_NODES;
    let (mut prev, _) = weighted_sum(phi, &*build_jacobi_rule(alpha, n)?, &map)?;
    let mut used = n;
    loop {
        let n2 = 2 * n;
        let (cur, abs) = weighted_sum(phi, &*build_jacobi_rule(alpha, n2)?, &map)?;
        used += n2;
        let err = (cur - prev).abs();
        // relative test, with a floor at the rounding level of the sum itself
        let ok = err <= rtol * cur.abs() || err <= 8.0 * f64::EPSILON * abs;
        if ok || n2 >= MAX_NODES {
            return Ok(OperatorValue {
                value: cur,
                err_est: err,
                n_used: used,
                converged: ok,
            });
        }
        prev = cur;
        n = n2;
    }
}

/// Adaptive `∫_0^1 s^(α−1) φ(s) ds`: node counts 16, 32, … up to 512 until
/// `|I_2n − I_n| ≤ rtol |I_2n|`. Non-convergence is reported through
/// `converged = false` together with the best value.
pub fn integrate_adaptive<F>(phi: F, alpha: f64, rtol: f64) -> Result<OperatorValue, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    check_rtol(rtol)?;
    adapt_panel(&phi, alpha, rtol, |s| s)
}

/// Like [`integrate_adaptive`], but `φ` is only piecewise smooth with the
/// given interior breakpoints. The first panel `[0, b_1]` carries the
/// singular weight (scaled Jacobi rule); later panels use Gauss–Legendre with
/// `s^(α−1)` folded into the integrand.
pub fn integrate_adaptive_piecewise<F>(
    phi: F,
    alpha: f64,
    breakpoints: &[f64],
    rtol: f64,
) -> Result<OperatorValue, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    check_rtol(rtol)?;
    if breakpoints.is_empty() {
        return adapt_panel(&phi, alpha, rtol, |s| s);
    }
    check_breakpoints(breakpoints)?;
    piecewise(&|s, _| phi(s), alpha, None, breakpoints, rtol)
}

/// `∫_0^1 s^(α−1) (1−s)^c φ(s) ds` for piecewise smooth `φ`, called as
/// `phi(s, 1 − s)` with the second argument free of cancellation near 1. The
/// panel ending at 1 integrates against the reflected Jacobi weight
/// `(1−s)^c`; `c` must satisfy `c + 1 ∈ [MIN_ALPHA, MAX_ALPHA]`. Non-negative
/// integer `c` is smooth and goes through [`integrate_adaptive_piecewise`].
pub fn integrate_adaptive_two_sided<F>(
    phi: F,
    alpha: f64,
    end_exponent: f64,
    breakpoints: &[f64],
    rtol: f64,
) -> Result<OperatorValue, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    let c = end_exponent;
    if c >= 0.0 && c.fract() == 0.0 {
        let k = c as i32;
        return integrate_adaptive_piecewise(|s| (1.0 - s).powi(k) * phi(s, 1.0 - s), alpha, breakpoints, rtol);
    }
    check_rtol(rtol)?;
    check_breakpoints(breakpoints)?;
    build_jacobi_rule(c + 1.0, 1)?;
    // keep the first panel clear of 1 and the last one clear of 0
    let mut breaks = breakpoints.to_vec();
    if breaks.first().is_none_or(|&b| b > 0.5) {
        breaks.insert(0, 0.5);
    } else if breaks.last().is_some_and(|&b| b < 0.5) {
        breaks.push(0.5);
    }
    piecewise(&phi, alpha, Some(c), &breaks, rtol)
}

fn check_breakpoints(breakpoints: &[f64]) -> Result<(), QuadratureError> {
    if breakpoints.iter().any(|&b| !(b > 0.0 && b < 1.0)) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QuadratureError::BadBreakpoints);
    }
    Ok(())
}

/// Panels `[0, b_1]`, …, `[b_k, 1]`. With `end = Some(c)` the factor
/// `(1−s)^c` is not part of `phi` and the last panel absorbs it exactly.
fn piecewise<F>(
    phi: &F,
    alpha: f64,
    end: Option<f64>,
    breakpoints: &[f64],
    rtol: f64,
) -> Result<OperatorValue, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    // validate alpha once, through the rule builder
    build_jacobi_rule(alpha, 1)?;
    let end_factor = |s: f64| end.map_or(1.0, |c| (1.0 - s).powf(c));

    let mut total = OperatorValue::zero();
    let mut acc = |part: OperatorValue, values: &mut Vec<f64>| {
        values.push(part.value);
        total.err_est += part.err_est;
        total.n_used += part.n_used;
        total.converged &= part.converged;
    };
    let mut values = Vec::with_capacity(breakpoints.len() + 1);

    let b1 = breakpoints[0];
    let head = |s: f64| end_factor(s) * phi(s, 1.0 - s);
    let first = adapt_panel(&head, alpha, rtol, |r| b1 * r)?.scaled(b1.powf(alpha));
    acc(first, &mut values);

    // Later panels see s^(α−1) as a nearly singular factor when they start
    // close to 0; grading them geometrically keeps the singularity at least
    // one panel width away. The same goes for (1−s)^c near 1.
    let last = if end.is_some() {
        breakpoints[breakpoints.len() - 1]
    } else {
        1.0
    };
    let mut edges = Vec::with_capacity(breakpoints.len() + 1);
    let ends: Vec<f64> = breakpoints[1..]
        .iter()
        .copied()
        .filter(|&b| b <= last)
        .chain((end.is_none()).then_some(1.0))
        .collect();
    let mut lo = b1;
    edges.push(lo);
    for hi in ends {
        if alpha != 1.0 {
            let mut mid = 2.0 * lo;
            while mid < hi {
                edges.push(mid);
                mid *= 2.0;
            }
        }
        if end.is_some() {
            let gap = 1.0 - hi;
            let mut near = Vec::new();
            let mut mid = 1.0 - 2.0 * gap;
            while mid > lo && mid > *edges.last().unwrap() {
                near.push(mid);
                mid = 1.0 - 2.0 * (1.0 - mid);
            }
            edges.extend(near.into_iter().rev());
        }
        edges.push(hi);
        lo = hi;
    }
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let h = hi - lo;
        let weighted = |s: f64| s.powf(alpha - 1.0) * end_factor(s) * phi(s, 1.0 - s);
        let part = adapt_panel(&weighted, 1.0, rtol, |r| lo + h * r)?.scaled(h);
        acc(part, &mut values);
    }
    if let Some(c) = end {
        let h = 1.0 - last;
        // nodes are handed over as distances from 1
        let tail = |d: f64| {
            let s = 1.0 - d;
            s.powf(alpha - 1.0) * phi(s, d)
        };
        let part = adapt_panel(&tail, c + 1.0, rtol, |r| h * r)?.scaled(h.powf(c + 1.0));
        acc(part, &mut values);
    }
    total.value = neumaier_sum(values);
    Ok(total)
}

/// Graded-mesh composite trapezoid for `∫_0^1 s^(α−1) φ(s) ds` with mesh
/// points `s_j = (j/N)^(3/α)`. Slow and only second-order accurate, but
/// independent of the Gauss machinery; used as a cross-check.
pub fn graded_trapezoid<F>(phi: F, alpha: f64, n_intervals: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let grade = 3.0 / alpha;
    let n = n_intervals as f64;
    let point = |j: usize| (j as f64 / n).powf(grade);
    // first cell: weight integrated exactly, φ frozen at the right end
    let s1 = point(1);
    let mut terms = Vec::with_capacity(n_intervals + 1);
    terms.push(s1.powf(alpha) / alpha * phi(s1));
    let g = |s: f64| s.powf(alpha - 1.0) * phi(s);
    let mut left = g(s1);
    let mut s_left = s1;
    for j in 2..=n_intervals {
        let s = point(j);
        let right = g(s);
        terms.push(0.5 * (s - s_left) * (left + right));
        left = right;
        s_left = s;
    }
    neumaier_sum(terms)
}
