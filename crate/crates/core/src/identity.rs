//! Identity checks for the operators: closed-form power images, the
//! semigroup law, and the β = 1 reduction to the classical integrals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::generators::{FunctionGenerator, TrialSeed};
use crate::numcore::PositiveFunction;
use crate::operators::{
    classical_hadamard_left, classical_rl_left, closed_form_power_image_with, hadamard, rl_proportional_left,
    semigroup_compose, FracParams, OperatorError, OperatorOptions, PowerImageSpec,
};
use crate::special::gamma;

pub const CLOSED_FORM_TOL: f64 = 1e-8;
pub const SEMIGROUP_TOL: f64 = 1e-6;
pub const REDUCTION_TOL: f64 = 1e-10;

pub const GRID_ALPHAS: [f64; 4] = [0.3, 0.5, 1.0, 1.7];
pub const GRID_BETAS: [f64; 3] = [0.25, 0.5, 1.0];
pub const GRID_LAMBDAS: [f64; 3] = [1.0, 2.0, 2.5];

const TAG_SEMIGROUP: u64 = 0x5e41;
const TAG_REDUCTION: u64 = 0xbe7a;

/// Points of the closed-form grid: `1.5`, `e`, `e²`.
pub fn grid_xs() -> [f64; 3] {
    [1.5, std::f64::consts::E, 2f64.exp()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityFamily {
    ClosedForm,
    Semigroup,
    BetaOneHadamard,
    BetaOneRl,
}

impl IdentityFamily {
    pub const ALL: [IdentityFamily; 4] = [
        IdentityFamily::ClosedForm,
        IdentityFamily::Semigroup,
        IdentityFamily::BetaOneHadamard,
        IdentityFamily::BetaOneRl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityFamily::ClosedForm => "closed-form",
            IdentityFamily::Semigroup => "semigroup",
            IdentityFamily::BetaOneHadamard => "beta-one-hadamard",
            IdentityFamily::BetaOneRl => "beta-one-rl",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            IdentityFamily::ClosedForm => CLOSED_FORM_TOL,
            IdentityFamily::Semigroup => SEMIGROUP_TOL,
            IdentityFamily::BetaOneHadamard | IdentityFamily::BetaOneRl => REDUCTION_TOL,
        }
    }
}

/// One numerical value against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub family: IdentityFamily,
    pub label: String,
    pub value: f64,
    pub reference: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(family: IdentityFamily, label: String, value: f64, reference: f64) -> Self {
        let rel_err = rel_err(value, reference);
        let tol = family.tolerance();
        Self {
            family,
            label,
            value,
            reference,
            rel_err,
            tol,
            passed: rel_err <= tol,
        }
    }

    fn errored(family: IdentityFamily, label: String, err: OperatorError) -> Self {
        Self {
            family,
            label: format!("{label}: {err}"),
            value: f64::NAN,
            reference: f64::NAN,
            rel_err: f64::INFINITY,
            tol: family.tolerance(),
            passed: false,
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a.is_finite() && b.is_finite() {
        (a - b).abs() / b.abs().max(1e-300)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityConfig {
    pub semigroup_trials: usize,
    pub reduction_trials: usize,
    pub seed: u64,
    pub rtol: f64,
    /// Test hook: the closed form uses `Γ(t)(1 + ε t)` instead of `Γ(t)`.
    pub gamma_perturbation: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            semigroup_trials: 100,
            reduction_trials: 50,
            seed: 2024,
            rtol: crate::quadrature::DEFAULT_RTOL,
            gamma_perturbation: 0.0,
        }
    }
}

/// Per-family aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: IdentityFamily,
    pub checks: usize,
    pub failures: usize,
    pub max_rel_err: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub passed: bool,
    pub summary: Vec<FamilySummary>,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn from_checks(checks: Vec<IdentityCheck>) -> Self {
        let summary: Vec<FamilySummary> = IdentityFamily::ALL
            .iter()
            .filter_map(|&family| {
                let of: Vec<&IdentityCheck> = checks.iter().filter(|c| c.family == family).collect();
                (!of.is_empty()).then(|| FamilySummary {
                    family,
                    checks: of.len(),
                    failures: of.iter().filter(|c| !c.passed).count(),
                    max_rel_err: of.iter().map(|c| c.rel_err).fold(0.0, f64::max),
                    tol: family.tolerance(),
                })
            })
            .collect();
        Self {
            passed: checks.iter().all(|c| c.passed),
            summary,
            checks,
        }
    }
}

/// Quadrature of the power-image input against the closed form over the
/// 36-point parameter grid at `x ∈ {1.5, e, e²}`.
pub fn closed_form_checks(opts: &OperatorOptions, gamma_perturbation: f64) -> Vec<IdentityCheck> {
    let gamma_fn = |t: f64| gamma(t) * (1.0 + gamma_perturbation * t);
    let mut out = Vec::new();
    for &alpha in &GRID_ALPHAS {
        for &beta in &GRID_BETAS {
            for &lambda in &GRID_LAMBDAS {
                for x in grid_xs() {
                    let label = format!("alpha={alpha} beta={beta} lambda={lambda} x={x}");
                    let run = || -> Result<(f64, f64), OperatorError> {
                        let p = FracParams::new(alpha, beta)?;
                        let z = PositiveFunction::power(beta, lambda)?;
                        let value = hadamard(&z, x, p, opts)?.value;
                        let exact = closed_form_power_image_with(x, p, PowerImageSpec::new(lambda)?, gamma_fn)?;
                        Ok((value, exact))
                    };
                    out.push(match run() {
                        Ok((v, r)) => IdentityCheck::new(IdentityFamily::ClosedForm, label, v, r),
                        Err(e) => IdentityCheck::errored(IdentityFamily::ClosedForm, label, e),
                    });
                }
            }
        }
    }
    out
}

/// Composed `H^{α}(H^{λ} z)` against direct `H^{α+λ} z` for random splines,
/// orders from the grid and random `x ∈ [1.2, e²]`.
pub fn semigroup_checks(trials: usize, seed: u64, opts: &OperatorOptions) -> Vec<IdentityCheck> {
    let generator = FunctionGenerator::default();
    (0..trials as u64)
        .map(|i| {
            let ts = TrialSeed::derive(seed, TAG_SEMIGROUP, i);
            let mut rng = ts.rng(7);
            let alpha = GRID_ALPHAS[rng.random_range(0..GRID_ALPHAS.len())];
            let lambda = GRID_ALPHAS[rng.random_range(0..GRID_ALPHAS.len())];
            let beta = GRID_BETAS[rng.random_range(0..GRID_BETAS.len())];
            let x = rng.random_range(1.2..=generator.log_x_max.exp());
            let label = format!("trial={i} alpha={alpha} lambda={lambda} beta={beta} x={x}");
            let run = || -> Result<(f64, f64), OperatorError> {
                let z = generator
                    .gen_random(ts)
                    .map_err(|e| OperatorError::Domain(e.to_string()))?;
                let (composed, direct) = semigroup_compose(
                    &z,
                    x,
                    FracParams::new(alpha, beta)?,
                    FracParams::new(lambda, beta)?,
                    opts,
                )?;
                Ok((composed.value, direct.value))
            };
            match run() {
                Ok((c, d)) => IdentityCheck::new(IdentityFamily::Semigroup, label, c, d),
                Err(e) => IdentityCheck::errored(IdentityFamily::Semigroup, label, e),
            }
        })
        .collect()
}

/// β = 1 operators against independent classical implementations: the
/// Hadamard form on `[1, x]`, and the Riemann–Liouville form on `[0, ln x]`
/// applied to `t ↦ z(e^t)`.
pub fn reduction_checks(trials: usize, seed: u64, opts: &OperatorOptions) -> Vec<IdentityCheck> {
    let generator = FunctionGenerator::default();
    let mut out = Vec::with_capacity(2 * trials);
    for i in 0..trials as u64 {
        let ts = TrialSeed::derive(seed, TAG_REDUCTION, i);
        let mut rng = ts.rng(7);
        let alpha = GRID_ALPHAS[rng.random_range(0..GRID_ALPHAS.len())];
        let x = rng.random_range(1.2..=generator.log_x_max.exp());
        let label = format!("trial={i} alpha={alpha} x={x}");
        let z = match generator.gen_random(ts) {
            Ok(z) => z,
            Err(e) => {
                let e = OperatorError::Domain(e.to_string());
                out.push(IdentityCheck::errored(IdentityFamily::BetaOneHadamard, label, e));
                continue;
            }
        };
        let hadamard_pair = || -> Result<(f64, f64), OperatorError> {
            let p = FracParams::new(alpha, 1.0)?;
            Ok((
                hadamard(&z, x, p, opts)?.value,
                classical_hadamard_left(&z, x, alpha, 1.0)?,
            ))
        };
        out.push(match hadamard_pair() {
            Ok((v, r)) => IdentityCheck::new(IdentityFamily::BetaOneHadamard, label.clone(), v, r),
            Err(e) => IdentityCheck::errored(IdentityFamily::BetaOneHadamard, label.clone(), e),
        });
        let rl_pair = || -> Result<(f64, f64), OperatorError> {
            let p = FracParams::new(alpha, 1.0)?;
            let knots = z.log_knots();
            let zt = |t: f64| z.value_at_log(t);
            let v = rl_proportional_left(zt, &knots, x.ln(), p, 0.0, opts)?.value;
            Ok((v, classical_rl_left(zt, &knots, x.ln(), alpha, 0.0)))
        };
        out.push(match rl_pair() {
            Ok((v, r)) => IdentityCheck::new(IdentityFamily::BetaOneRl, label, v, r),
            Err(e) => IdentityCheck::errored(IdentityFamily::BetaOneRl, label, e),
        });
    }
    out
}

/// All identity families.
pub fn run_identity(config: &IdentityConfig) -> IdentityReport {
    let opts = OperatorOptions { rtol: config.rtol };
    let mut checks = closed_form_checks(&opts, config.gamma_perturbation);
    checks.extend(semigroup_checks(config.semigroup_trials, config.seed, &opts));
    checks.extend(reduction_checks(config.reduction_trials, config.seed, &opts));
    IdentityReport::from_checks(checks)
}
