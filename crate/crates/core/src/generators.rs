//! Seeded construction of function tuples that satisfy each inequality's
//! hypotheses by construction.
//!
//! Every generated function is a log-spline on `[1, X]`. Shape constraints
//! (ratio corridors, monotonicity, domination) are imposed on the knot data
//! and survive interpolation because the shape-preserving spline never
//! overshoots its data. Each generator re-checks its output on a dense grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{FunctionError, PositiveFunction};

/// Relative slack tolerated by the hypothesis audits.
pub const AUDIT_SLACK: f64 = 1e-12;
/// Points in the one-dimensional audit grids.
pub const AUDIT_POINTS: usize = 10_000;
/// Points per axis in the pairwise audit of the similarly-ordered triple.
pub const PAIR_AUDIT_POINTS: usize = 200;

const STREAM_FUNCTIONS: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid corridor specification: {0}")]
    InvalidSpec(String),
    #[error("hypothesis audit failed: {what} at t = {t} (slack {slack:e})")]
    AuditFailed { what: &'static str, t: f64, slack: f64 },
    #[error(transparent)]
    Function(#[from] FunctionError),
}

/// Hypothesis parameters: ratio corridor `m ≤ f/g ≤ M`, exponent `p` (with
/// conjugate `q`), and the AM–GM exponents `γ > δ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCorridor")]
pub struct CorridorSpec {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub p: f64,
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Deserialize)]
struct RawCorridor {
    m: f64,
    #[serde(rename = "M")]
    big_m: f64,
    p: f64,
    gamma: f64,
    delta: f64,
}

impl TryFrom<RawCorridor> for CorridorSpec {
    type Error = GeneratorError;

    fn try_from(r: RawCorridor) -> Result<Self, Self::Error> {
        Self::new(r.m, r.big_m, r.p)?.with_am_gm(r.gamma, r.delta)
    }
}

impl CorridorSpec {
    /// Corridor and exponent with default AM–GM exponents γ = 2, δ = 1.
    pub fn new(m: f64, big_m: f64, p: f64) -> Result<Self, GeneratorError> {
        if !(m > 0.0 && m.is_finite() && big_m.is_finite()) {
            return Err(GeneratorError::InvalidSpec(format!(
                "need 0 < m < ∞, got m = {m}, M = {big_m}"
            )));
        }
        if m > big_m {
            return Err(GeneratorError::InvalidSpec(format!("m = {m} exceeds M = {big_m}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(GeneratorError::InvalidSpec(format!("need p >= 1, got {p}")));
        }
        Ok(Self {
            m,
            big_m,
            p,
            gamma: 2.0,
            delta: 1.0,
        })
    }

    pub fn with_am_gm(mut self, gamma: f64, delta: f64) -> Result<Self, GeneratorError> {
        if !(delta > 0.0 && gamma > delta && gamma.is_finite()) {
            return Err(GeneratorError::InvalidSpec(format!(
                "need gamma > delta > 0, got gamma = {gamma}, delta = {delta}"
            )));
        }
        self.gamma = gamma;
        self.delta = delta;
        Ok(self)
    }

    /// Conjugate exponent `p/(p−1)`; `None` for `p = 1`.
    pub fn q(&self) -> Option<f64> {
        (self.p > 1.0).then(|| self.p / (self.p - 1.0))
    }

    /// `M/m ≥ 1`; also bounds the ratio spread used by the monotone generators.
    pub fn spread(&self) -> f64 {
        self.big_m / self.m
    }

    /// Log-margin `ε = 0.01 (ln M − ln m)` keeping the corridor strict.
    pub fn epsilon(&self) -> f64 {
        0.01 * (self.big_m.ln() - self.m.ln())
    }
}

/// Seed of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub seed: u64,
    pub trial_index: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl TrialSeed {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        Self { seed, trial_index }
    }

    /// Per-trial seed derived from a master seed, a stream tag and the index.
    pub fn derive(master: u64, tag: u64, trial_index: u64) -> Self {
        let seed = splitmix64(splitmix64(master ^ splitmix64(tag)) ^ trial_index);
        Self { seed, trial_index }
    }

    /// Deterministic generator for one purpose (`stream`) of this trial.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Knot layout of generated splines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionGenerator {
    /// `ln X` of the working interval.
    pub log_x_max: f64,
    /// Number of spline intervals per random function.
    pub intervals: usize,
}

impl Default for FunctionGenerator {
    fn default() -> Self {
        Self {
            log_x_max: 2.0,
            intervals: 6,
        }
    }
}

impl FunctionGenerator {
    fn knots(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k = self.intervals.max(1);
        let step = self.log_x_max / k as f64;
        let mut knots = Vec::with_capacity(k + 1);
        knots.push(0.0);
        for i in 1..k {
            let jitter: f64 = rng.random_range(-0.3..0.3);
            knots.push(step * (i as f64 + jitter));
        }
        knots.push(self.log_x_max);
        knots
    }

    /// Log-values drawn uniformly from `[lo, hi]`.
    fn random(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Result<PositiveFunction, FunctionError> {
        let knots = self.knots(rng);
        let vals = knots.iter().map(|_| rng.random_range(lo..=hi)).collect();
        PositiveFunction::from_log_knots(knots, vals)
    }

    /// Unconstrained random function with log-values in `[−1, 1]`.
    pub fn gen_random(&self, seed: TrialSeed) -> Result<PositiveFunction, GeneratorError> {
        let mut rng = seed.rng(STREAM_FUNCTIONS);
        Ok(self.random(&mut rng, -1.0, 1.0)?)
    }

    /// Non-decreasing log-values: random start, non-negative increments
    /// (some exactly zero) summing to `rise`.
    fn monotone(&self, rng: &mut ChaCha8Rng, start: f64, rise: f64) -> Result<PositiveFunction, FunctionError> {
        let knots = self.knots(rng);
        let mut steps: Vec<f64> = (1..knots.len())
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = steps.iter().sum();
        if total > 0.0 {
            steps.iter_mut().for_each(|s| *s *= rise / total);
        }
        let mut vals = Vec::with_capacity(knots.len());
        let mut acc = start;
        vals.push(acc);
        for s in steps {
            acc += s;
            vals.push(acc);
        }
        PositiveFunction::from_log_knots(knots, vals)
    }

    fn audit_grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        (0..n).map(move |i| self.log_x_max * i as f64 / (n - 1) as f64)
    }

    /// Pair with `m ≤ f/g ≤ M`. `g` has log-values in `[−1, 1]`; the ratio is a
    /// second spline rescaled onto `[ln m + ε, ln M − ε]` (or `≡ m` when `m = M`).
    pub fn gen_corridor_pair(
        &self,
        spec: &CorridorSpec,
        seed: TrialSeed,
    ) -> Result<(PositiveFunction, PositiveFunction), GeneratorError> {
        let spec = CorridorSpec::new(spec.m, spec.big_m, spec.p)?;
        let mut rng = seed.rng(STREAM_FUNCTIONS);
        let g = self.random(&mut rng, -1.0, 1.0)?;
        let f = if spec.m == spec.big_m {
            PositiveFunction::combine(&[PositiveFunction::constant(spec.m)?, g.clone()], &[1.0, 1.0])?
        } else {
            let eps = spec.epsilon();
            let (lo, hi) = (spec.m.ln() + eps, spec.big_m.ln() - eps);
            let knots = self.knots(&mut rng);
            let raw: Vec<f64> = knots.iter().map(|_| rng.random::<f64>()).collect();
            let (rmin, rmax) = raw
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let vals = raw
                .iter()
                .map(|v| {
                    if rmax > rmin {
                        lo + (v - rmin) / (rmax - rmin) * (hi - lo)
                    } else {
                        lo
                    }
                })
                .collect();
            let ratio = PositiveFunction::from_log_knots(knots, vals)?;
            PositiveFunction::combine(&[ratio, g.clone()], &[1.0, 1.0])?
        };
        self.audit_corridor(&f, &g, spec.m, spec.big_m)?;
        Ok((f, g))
    }

    /// Pair with the corridor imposed on `(f^p, g^q)`: a corridor pair
    /// `(F, G)` followed by `f = F^{1/p}`, `g = G^{1/q}`. Needs `p > 1`.
    pub fn gen_corridor_powers(
        &self,
        spec: &CorridorSpec,
        seed: TrialSeed,
    ) -> Result<(PositiveFunction, PositiveFunction), GeneratorError> {
        let q = spec
            .q()
            .ok_or_else(|| GeneratorError::InvalidSpec("conjugate exponent needs p > 1".into()))?;
        let (big_f, big_g) = self.gen_corridor_pair(spec, seed)?;
        Ok((big_f.powf(1.0 / spec.p), big_g.powf(1.0 / q)))
    }

    /// `m ≤ f/g ≤ M` on the audit grid.
    pub fn audit_corridor(
        &self,
        f: &PositiveFunction,
        g: &PositiveFunction,
        m: f64,
        big_m: f64,
    ) -> Result<(), GeneratorError> {
        for u in self.audit_grid(AUDIT_POINTS) {
            let ratio = f.value_at_log(u) / g.value_at_log(u);
            if ratio < m * (1.0 - AUDIT_SLACK) {
                return Err(GeneratorError::AuditFailed {
                    what: "f/g below m",
                    t: u.exp(),
                    slack: ratio / m - 1.0,
                });
            }
            if ratio > big_m * (1.0 + AUDIT_SLACK) {
                return Err(GeneratorError::AuditFailed {
                    what: "f/g above M",
                    t: u.exp(),
                    slack: 1.0 - ratio / big_m,
                });
            }
        }
        Ok(())
    }

    /// Triple `(f, g, h)` with `g` non-decreasing and `f/h` non-increasing, so
    /// `(g(τ)−g(σ))(f(σ)/h(σ) − f(τ)/h(τ)) ≥ 0` for all `τ, σ`. The ratio
    /// `f/h` drops by at most `ln(spread)` in log; `spread = 1` gives `f = h`.
    pub fn gen_similarly_ordered_triple(
        &self,
        spread: f64,
        seed: TrialSeed,
    ) -> Result<(PositiveFunction, PositiveFunction, PositiveFunction), GeneratorError> {
        check_spread(spread)?;
        let mut rng = seed.rng(STREAM_FUNCTIONS);
        let g_start = rng.random_range(-1.0..0.0);
        let g_rise = rng.random_range(0.2..1.0);
        let g = self.monotone(&mut rng, g_start, g_rise)?;
        let h = self.random(&mut rng, -1.0, 1.0)?;
        let drop = spread.ln() * rng.random_range(0.3..1.0);
        let f = if drop == 0.0 {
            h.clone()
        } else {
            let log_rho = self.monotone(&mut rng, 0.0, drop)?;
            // log ρ rises from 0 to `drop`; ρ = 1/that is non-increasing
            PositiveFunction::combine(&[h.clone(), log_rho], &[1.0, -1.0])?
        };
        self.audit_similarly_ordered(&f, &g, &h)?;
        Ok((f, g, h))
    }

    /// Pairwise audit of the similarly-ordered condition.
    pub fn audit_similarly_ordered(
        &self,
        f: &PositiveFunction,
        g: &PositiveFunction,
        h: &PositiveFunction,
    ) -> Result<(), GeneratorError> {
        let samples: Vec<(f64, f64, f64)> = self
            .audit_grid(PAIR_AUDIT_POINTS)
            .map(|u| (u, g.value_at_log(u), f.value_at_log(u) / h.value_at_log(u)))
            .collect();
        for &(u, g_tau, r_tau) in &samples {
            for &(_, g_sigma, r_sigma) in &samples {
                let prod = (g_tau - g_sigma) * (r_sigma - r_tau);
                if prod < -AUDIT_SLACK {
                    return Err(GeneratorError::AuditFailed {
                        what: "similarly-ordered product negative",
                        t: u.exp(),
                        slack: prod,
                    });
                }
            }
        }
        Ok(())
    }

    /// Pair with `f` increasing, `f/h` non-increasing and `f ≤ h`:
    /// `h = f/ρ` with `ρ ∈ (0, 1]` non-increasing, `ρ(1) = 1`.
    pub fn gen_dominated_pair(
        &self,
        p_exp: f64,
        spread: f64,
        seed: TrialSeed,
    ) -> Result<(PositiveFunction, PositiveFunction), GeneratorError> {
        if !(p_exp >= 1.0 && p_exp.is_finite()) {
            return Err(GeneratorError::InvalidSpec(format!("need p >= 1, got {p_exp}")));
        }
        check_spread(spread)?;
        let mut rng = seed.rng(STREAM_FUNCTIONS);
        let f_start = rng.random_range(-1.0..0.0);
        let f_rise = rng.random_range(0.2..1.0);
        let f = self.monotone(&mut rng, f_start, f_rise)?;
        let drop = spread.ln() * rng.random_range(0.3..1.0);
        let h = if drop == 0.0 {
            f.clone()
        } else {
            let log_inv_rho = self.monotone(&mut rng, 0.0, drop)?;
            PositiveFunction::combine(&[f.clone(), log_inv_rho], &[1.0, 1.0])?
        };
        self.audit_dominated(&f, &h)?;
        Ok((f, h))
    }

    pub fn audit_dominated(&self, f: &PositiveFunction, h: &PositiveFunction) -> Result<(), GeneratorError> {
        let mut prev: Option<(f64, f64)> = None;
        for u in self.audit_grid(AUDIT_POINTS) {
            let (fv, hv) = (f.value_at_log(u), h.value_at_log(u));
            if fv > hv * (1.0 + AUDIT_SLACK) {
                return Err(GeneratorError::AuditFailed {
                    what: "f exceeds h",
                    t: u.exp(),
                    slack: 1.0 - fv / hv,
                });
            }
            if let Some((pf, pr)) = prev {
                if fv < pf * (1.0 - AUDIT_SLACK) {
                    return Err(GeneratorError::AuditFailed {
                        what: "f decreasing",
                        t: u.exp(),
                        slack: fv / pf - 1.0,
                    });
                }
                if fv / hv > pr * (1.0 + AUDIT_SLACK) {
                    return Err(GeneratorError::AuditFailed {
                        what: "f/h increasing",
                        t: u.exp(),
                        slack: 1.0 - fv / hv / pr,
                    });
                }
            }
            prev = Some((fv, fv / hv));
        }
        Ok(())
    }

    /// Pair with `g ≤ f` pointwise (`g = σ f`, `σ ∈ (0, 1]`) and
    /// `g ≥ e^{-2}`; pointwise domination implies `H f ≥ H g`.
    pub fn gen_operator_dominance_pair(
        &self,
        spec: &CorridorSpec,
        seed: TrialSeed,
    ) -> Result<(PositiveFunction, PositiveFunction), GeneratorError> {
        CorridorSpec::new(spec.m, spec.big_m, spec.p)?.with_am_gm(spec.gamma, spec.delta)?;
        let mut rng = seed.rng(STREAM_FUNCTIONS);
        let f = self.random(&mut rng, -1.0, 1.0)?;
        let depth = spec.spread().ln().min(1.0);
        let g = if depth == 0.0 {
            f.clone()
        } else {
            let sigma = self.random(&mut rng, -depth, 0.0)?;
            PositiveFunction::combine(&[sigma, f.clone()], &[1.0, 1.0])?
        };
        self.audit_dominance(&f, &g)?;
        Ok((f, g))
    }

    pub fn audit_dominance(&self, f: &PositiveFunction, g: &PositiveFunction) -> Result<(), GeneratorError> {
        let floor = (-2.0f64).exp();
        for u in self.audit_grid(AUDIT_POINTS) {
            let (fv, gv) = (f.value_at_log(u), g.value_at_log(u));
            if gv > fv * (1.0 + AUDIT_SLACK) {
                return Err(GeneratorError::AuditFailed {
                    what: "g exceeds f",
                    t: u.exp(),
                    slack: 1.0 - gv / fv,
                });
            }
            if gv < floor * (1.0 - AUDIT_SLACK) {
                return Err(GeneratorError::AuditFailed {
                    what: "g below exp(-2)",
                    t: u.exp(),
                    slack: gv / floor - 1.0,
                });
            }
        }
        Ok(())
    }
}

fn check_spread(spread: f64) -> Result<(), GeneratorError> {
    if !(spread >= 1.0 && spread.is_finite()) {
        return Err(GeneratorError::InvalidSpec(format!(
            "ratio spread must be >= 1, got {spread}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen() -> FunctionGenerator {
        FunctionGenerator::default()
    }

    #[test]
    fn spec_validation() {
        assert!(CorridorSpec::new(2.0, 1.0, 2.0).is_err());
        assert!(CorridorSpec::new(0.0, 1.0, 2.0).is_err());
        assert!(CorridorSpec::new(0.5, 2.0, 0.5).is_err());
        let s = CorridorSpec::new(0.5, 2.0, 4.0).unwrap();
        assert!((1.0 / s.p + 1.0 / s.q().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(CorridorSpec::new(0.5, 2.0, 1.0).unwrap().q(), None);
        assert!(s.with_am_gm(1.0, 1.0).is_err());
        assert!(s.with_am_gm(1.0, 0.0).is_err());
        let bad: Result<CorridorSpec, _> = serde_json::from_str(r#"{"m":3.0,"M":1.0,"p":2.0,"gamma":2.0,"delta":1.0}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn collapsed_corridor_gives_equal_functions() {
        let spec = CorridorSpec::new(1.0, 1.0, 2.0).unwrap();
        let (f, g) = gen().gen_corridor_pair(&spec, TrialSeed::new(5, 0)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn corridor_audit_holds() {
        let spec = CorridorSpec::new(0.5, 2.0, 2.0).unwrap();
        for i in 0..20 {
            let (f, g) = gen().gen_corridor_pair(&spec, TrialSeed::derive(1, 2, i)).unwrap();
            gen().audit_corridor(&f, &g, 0.5, 2.0).unwrap();
        }
    }

    #[test]
    fn audits_reject_bad_tuples() {
        let one = PositiveFunction::constant(1.0).unwrap();
        let three = PositiveFunction::constant(3.0).unwrap();
        assert!(gen().audit_corridor(&three, &one, 0.5, 2.0).is_err());
        assert!(gen().audit_dominated(&three, &one).is_err());
        assert!(gen().audit_dominance(&one, &three).is_err());
        let up = PositiveFunction::from_log_knots(vec![0.0, 2.0], vec![0.0, 1.0]).unwrap();
        let down = PositiveFunction::from_log_knots(vec![0.0, 2.0], vec![0.0, -1.0]).unwrap();
        // g increasing and f/h increasing violates the ordering condition
        assert!(gen().audit_similarly_ordered(&up, &up, &one).is_err());
        assert!(gen().audit_similarly_ordered(&down, &up, &one).is_ok());
    }

    #[test]
    fn determinism() {
        let spec = CorridorSpec::new(0.1, 10.0, 1.5).unwrap();
        let seed = TrialSeed::derive(42, 7, 3);
        let a = gen().gen_corridor_pair(&spec, seed).unwrap();
        let b = gen().gen_corridor_pair(&spec, seed).unwrap();
        assert_eq!(
            serde_json::to_string(&a.0).unwrap(),
            serde_json::to_string(&b.0).unwrap()
        );
        assert_eq!(a.1, b.1);
        let c = gen().gen_dominated_pair(2.0, 4.0, seed).unwrap();
        let d = gen().gen_dominated_pair(2.0, 4.0, seed).unwrap();
        assert_eq!(c, d);
        let e = gen().gen_operator_dominance_pair(&spec, seed).unwrap();
        let f = gen().gen_operator_dominance_pair(&spec, seed).unwrap();
        assert_eq!(e, f);
        let other = gen().gen_corridor_pair(&spec, TrialSeed::derive(42, 7, 4)).unwrap();
        assert_ne!(a.1, other.1);
    }

    #[test]
    fn degenerate_monotone_generators() {
        let seed = TrialSeed::new(9, 0);
        let (f, _g, h) = gen().gen_similarly_ordered_triple(1.0, seed).unwrap();
        assert_eq!(f, h);
        let (f, h) = gen().gen_dominated_pair(1.5, 1.0, seed).unwrap();
        assert_eq!(f, h);
        let spec = CorridorSpec::new(1.0, 1.0, 2.0).unwrap();
        let (f, g) = gen().gen_operator_dominance_pair(&spec, seed).unwrap();
        assert_eq!(f, g);
        assert!(gen().gen_dominated_pair(0.5, 2.0, seed).is_err());
    }

    #[test]
    fn power_corridor() {
        let spec = CorridorSpec::new(0.5, 2.0, 4.0).unwrap();
        let (f, g) = gen().gen_corridor_powers(&spec, TrialSeed::new(3, 1)).unwrap();
        let q = spec.q().unwrap();
        gen().audit_corridor(&f.powf(spec.p), &g.powf(q), 0.5, 2.0).unwrap();
        let p1 = CorridorSpec::new(0.5, 2.0, 1.0).unwrap();
        assert!(gen().gen_corridor_powers(&p1, TrialSeed::new(3, 1)).is_err());
    }
}
