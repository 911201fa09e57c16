//! Piecewise cubic Hermite splines with shape-preserving (PCHIP) slopes.

use super::FunctionError;

/// A C^1 piecewise cubic on strictly increasing knots, stored in Hermite form
/// (value and first derivative at each knot).
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteSpline {
    /// Builds a spline with explicit knot slopes.
    pub fn from_parts(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self, FunctionError> {
        validate_knots(&knots)?;
        if values.len() != knots.len() || slopes.len() != knots.len() {
            return Err(FunctionError::LengthMismatch {
                knots: knots.len(),
                values: values.len().min(slopes.len()),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FunctionError::NonFiniteValue { index: i });
        }
        if let Some(i) = slopes.iter().position(|v| !v.is_finite()) {
            return Err(FunctionError::NonFiniteValue { index: i });
        }
        Ok(Self { knots, values, slopes })
    }

    /// Interpolates `values` at `knots` with monotonicity-preserving slopes.
    ///
    /// On every interval the interpolant stays between the two end values, so
    /// it never overshoots the data range.
    pub fn pchip(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, FunctionError> {
        validate_knots(&knots)?;
        if values.len() != knots.len() {
            return Err(FunctionError::LengthMismatch {
                knots: knots.len(),
                values: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FunctionError::NonFiniteValue { index: i });
        }
        let slopes = pchip_slopes(&knots, &values);
        Ok(Self { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    fn interval(&self, u: f64) -> usize {
        let last = self.knots.len() - 2;
        // first knot strictly greater than u, minus one
        let idx = self.knots.partition_point(|&k| k <= u);
        idx.saturating_sub(1).min(last)
    }

    /// Value at `u`; arguments outside the knot range are clamped.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(self.start(), self.end());
        let k = self.interval(u);
        let h = self.knots[k + 1] - self.knots[k];
        let tau = (u - self.knots[k]) / h;
        let tau2 = tau * tau;
        let tau3 = tau2 * tau;
        let h00 = 2.0 * tau3 - 3.0 * tau2 + 1.0;
        let h10 = tau3 - 2.0 * tau2 + tau;
        let h01 = -2.0 * tau3 + 3.0 * tau2;
        let h11 = tau3 - tau2;
        h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1]
    }

    /// Value and first derivative at `u` (clamped).
    pub fn eval_with_slope(&self, u: f64) -> (f64, f64) {
        let u = u.clamp(self.start(), self.end());
        let k = self.interval(u);
        let h = self.knots[k + 1] - self.knots[k];
        let tau = (u - self.knots[k]) / h;
        let tau2 = tau * tau;
        let d00 = (6.0 * tau2 - 6.0 * tau) / h;
        let d10 = 3.0 * tau2 - 4.0 * tau + 1.0;
        let d01 = (-6.0 * tau2 + 6.0 * tau) / h;
        let d11 = 3.0 * tau2 - 2.0 * tau;
        let slope = d00 * self.values[k] + d10 * self.slopes[k] + d01 * self.values[k + 1] + d11 * self.slopes[k + 1];
        (self.eval(u), slope)
    }

    /// Knot-exact value and slope: at a knot the stored data are returned.
    fn hermite_data_at(&self, u: f64) -> (f64, f64) {
        match self.knots.binary_search_by(|k| k.total_cmp(&u)) {
            Ok(i) => (self.values[i], self.slopes[i]),
            Err(_) => self.eval_with_slope(u),
        }
    }

    /// Scales values and slopes by `factor` (the log of `f^factor`).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            slopes: self.slopes.iter().map(|d| d * factor).collect(),
        }
    }

    /// Exact representation of `offset + Σ w_i s_i(u)` on the union of the
    /// knot sets, restricted to the common domain.
    ///
    /// A sum of cubics is a cubic, and a cubic Hermite segment reproduces any
    /// cubic from its end values and slopes, so no approximation is involved.
    pub fn linear_combination(parts: &[(&HermiteSpline, f64)], offset: f64) -> Self {
        assert!(!parts.is_empty(), "linear_combination needs at least one part");
        let start = parts.iter().map(|(s, _)| s.start()).fold(f64::MIN, f64::max);
        let end = parts.iter().map(|(s, _)| s.end()).fold(f64::MAX, f64::min);
        let mut knots: Vec<f64> = parts
            .iter()
            .flat_map(|(s, _)| s.knots.iter().copied())
            .filter(|&k| k > start && k < end)
            .collect();
        knots.push(start);
        knots.push(end);
        knots.sort_by(f64::total_cmp);
        let tol = 1e-12 * (end - start).abs().max(1.0);
        knots.dedup_by(|a, b| (*a - *b).abs() <= tol);
        // dedup keeps the earlier element; make sure the true end survives
        if let Some(last) = knots.last_mut() {
            *last = end;
        }
        let mut values = Vec::with_capacity(knots.len());
        let mut slopes = Vec::with_capacity(knots.len());
        for &u in &knots {
            let mut v = offset;
            let mut d = 0.0;
            for (s, w) in parts {
                let (sv, sd) = s.hermite_data_at(u);
                v += w * sv;
                d += w * sd;
            }
            values.push(v);
            slopes.push(d);
        }
        Self { knots, values, slopes }
    }

    /// Reflects the spline about the midpoint of its domain: u ↦ start + end − u.
    pub fn reflected(&self) -> Self {
        let (a, b) = (self.start(), self.end());
        let n = self.knots.len();
        let mut knots: Vec<f64> = self.knots.iter().rev().map(|k| a + b - k).collect();
        knots[0] = a;
        knots[n - 1] = b;
        Self {
            knots,
            values: self.values.iter().rev().copied().collect(),
            slopes: self.slopes.iter().rev().map(|d| -d).collect(),
        }
    }
}

fn validate_knots(knots: &[f64]) -> Result<(), FunctionError> {
    if knots.len() < 2 {
        return Err(FunctionError::TooFewKnots(knots.len()));
    }
    if let Some(i) = knots.iter().position(|k| !k.is_finite()) {
        return Err(FunctionError::NonFiniteKnot { index: i });
    }
    if let Some(i) = knots.windows(2).position(|w| w[1] <= w[0]) {
        return Err(FunctionError::NonIncreasingKnots { index: i + 1 });
    }
    Ok(())
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
}

/// Fritsch–Carlson style slopes: weighted harmonic means in the interior,
/// a limited three-point formula at the ends.
pub(crate) fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (dp, dn) = (delta[i - 1], delta[i]);
        if same_sign(dp, dn) {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / dp + w2 / dn);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if !same_sign(d, del0) {
        0.0
    } else if !same_sign(del0, del1) && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_knots_interpolate_linearly() {
        let s = HermiteSpline::pchip(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            assert!((s.eval(u) - u).abs() < 1e-15);
        }
    }

    #[test]
    fn reproduces_knot_values() {
        let knots = vec![0.0, 0.3, 0.55, 1.2, 2.0];
        let vals = vec![0.1, -0.4, 0.7, 0.7, -1.0];
        let s = HermiteSpline::pchip(knots.clone(), vals.clone()).unwrap();
        for (k, v) in knots.iter().zip(&vals) {
            assert_eq!(s.eval(*k), *v);
        }
    }

    #[test]
    fn no_overshoot_between_knots() {
        let knots = vec![0.0, 0.2, 0.9, 1.0, 1.6, 2.0];
        let vals = vec![0.0, 1.0, -1.0, 0.95, 1.0, -0.3];
        let s = HermiteSpline::pchip(knots.clone(), vals.clone()).unwrap();
        for k in 0..knots.len() - 1 {
            let (lo, hi) = if vals[k] < vals[k + 1] {
                (vals[k], vals[k + 1])
            } else {
                (vals[k + 1], vals[k])
            };
            for j in 0..=200 {
                let u = knots[k] + (knots[k + 1] - knots[k]) * j as f64 / 200.0;
                let v = s.eval(u);
                assert!(v >= lo - 1e-14 && v <= hi + 1e-14, "u={u} v={v}");
            }
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let s = HermiteSpline::pchip(vec![0.0, 0.5, 1.3, 2.0], vec![0.2, 0.9, 0.1, 0.4]).unwrap();
        for &u in &[0.1, 0.77, 1.5, 1.99] {
            let eps = 1e-6;
            let fd = (s.eval(u + eps) - s.eval(u - eps)) / (2.0 * eps);
            assert!((s.eval_with_slope(u).1 - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn linear_combination_is_exact() {
        let a = HermiteSpline::pchip(vec![0.0, 0.7, 2.0], vec![0.3, -0.2, 0.5]).unwrap();
        let b = HermiteSpline::pchip(vec![0.0, 0.4, 1.1, 2.0], vec![-0.5, 0.1, 0.6, 0.0]).unwrap();
        let c = HermiteSpline::linear_combination(&[(&a, 2.0), (&b, -0.5)], 0.25);
        assert_eq!(c.knots().len(), 5);
        for j in 0..=400 {
            let u = 2.0 * j as f64 / 400.0;
            let want = 0.25 + 2.0 * a.eval(u) - 0.5 * b.eval(u);
            assert!((c.eval(u) - want).abs() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(matches!(
            HermiteSpline::pchip(vec![0.0, 0.5, 0.5], vec![0.0; 3]),
            Err(FunctionError::NonIncreasingKnots { index: 2 })
        ));
        assert!(matches!(
            HermiteSpline::pchip(vec![0.0], vec![0.0]),
            Err(FunctionError::TooFewKnots(1))
        ));
        assert!(HermiteSpline::pchip(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }
}
