use std::fmt::Write as _;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_t3_1, check_t3_1_literal, check_t3_2, check_t4_1, check_t4_2, check_t4_3, check_t4_4, check_t4_5, check_t4_7,
    Comparison, HarnessError, TheoremId, DEFAULT_TOL_REL,
};
use crate::generators::{CorridorSpec, FunctionGenerator, TrialSeed};
use crate::numcore::PositiveFunction;
use crate::operators::{FracParams, OperatorOptions};
use crate::quadrature::DEFAULT_RTOL;

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 19] = [
    "theorem_id",
    "alpha",
    "beta",
    "alpha2",
    "beta2",
    "p",
    "q",
    "gamma",
    "delta",
    "m",
    "M",
    "x",
    "lhs",
    "rhs",
    "margin",
    "verdict",
    "seed",
    "trial_index",
    "err_budget",
];

/// Relative agreement required when replaying a recorded trial.
pub const REPLAY_TOL: f64 = 1e-12;

/// Environment variable bounding the worker count.
pub const THREADS_ENV: &str = "HADFRAC_THREADS";

const STREAM_PARAMS2: u64 = 2;
const STREAM_AM_GM: u64 = 3;
const LITERAL_VARIANT: &str = "literal-g^q";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
    /// The trial could not be evaluated (generator error, operator error, panic).
    Failed,
}

impl Verdict {
    /// `holds` when `margin ≥ −tol_rel`; otherwise `inconclusive` when the
    /// shortfall is within the propagated error budget, else `violated`.
    pub fn classify(margin: f64, err_budget: f64, tol_rel: f64) -> Self {
        if !margin.is_finite() {
            Verdict::Failed
        } else if margin >= -tol_rel {
            Verdict::Holds
        } else if margin.abs() <= err_budget {
            Verdict::Inconclusive
        } else {
            Verdict::Violated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Failed => "failed",
        }
    }
}

/// Input functions of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFunctions {
    pub f: PositiveFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<PositiveFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<PositiveFunction>,
}

/// One fully specified inequality instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub theorem: TheoremId,
    pub params: FracParams,
    pub params2: Option<FracParams>,
    pub spec: CorridorSpec,
    pub x: f64,
    pub seed: TrialSeed,
    pub functions: TrialFunctions,
}

impl Trial {
    /// Draws the functions for `theorem` from `seed`.
    pub fn generate(
        theorem: TheoremId,
        params: FracParams,
        params2: Option<FracParams>,
        spec: CorridorSpec,
        x: f64,
        seed: TrialSeed,
        generator: &FunctionGenerator,
    ) -> Result<Self, HarnessError> {
        let functions = match theorem {
            TheoremId::T3_1 | TheoremId::T3_2 | TheoremId::T4_1 | TheoremId::T4_3 => {
                let (f, g) = generator.gen_corridor_pair(&spec, seed)?;
                TrialFunctions { f, g: Some(g), h: None }
            }
            TheoremId::T4_2 => {
                let (f, g) = generator.gen_corridor_powers(&spec, seed)?;
                TrialFunctions { f, g: Some(g), h: None }
            }
            TheoremId::T4_4 => {
                let (f, g) = generator.gen_operator_dominance_pair(&spec, seed)?;
                TrialFunctions { f, g: Some(g), h: None }
            }
            TheoremId::T4_5 | TheoremId::T4_6 => {
                let (f, g, h) = generator.gen_similarly_ordered_triple(spec.spread(), seed)?;
                TrialFunctions {
                    f,
                    g: Some(g),
                    h: Some(h),
                }
            }
            TheoremId::T4_7 | TheoremId::T4_8 => {
                let (f, h) = generator.gen_dominated_pair(spec.p, spec.spread(), seed)?;
                TrialFunctions { f, g: None, h: Some(h) }
            }
        };
        Ok(Self {
            theorem,
            params,
            params2,
            spec,
            x,
            seed,
            functions,
        })
    }

    fn g(&self) -> Result<&PositiveFunction, HarnessError> {
        self.functions
            .g
            .as_ref()
            .ok_or_else(|| HarnessError::MissingInput(format!("{} needs a function g", self.theorem)))
    }

    fn h(&self) -> Result<&PositiveFunction, HarnessError> {
        self.functions
            .h
            .as_ref()
            .ok_or_else(|| HarnessError::MissingInput(format!("{} needs a function h", self.theorem)))
    }

    fn params2(&self) -> Result<FracParams, HarnessError> {
        self.params2
            .ok_or_else(|| HarnessError::MissingInput(format!("{} needs a second (alpha, beta)", self.theorem)))
    }

    /// Evaluates both sides.
    pub fn evaluate(&self, opts: &OperatorOptions) -> Result<Comparison, HarnessError> {
        let (f, spec, x, p) = (&self.functions.f, &self.spec, self.x, self.params);
        let c = match self.theorem {
            TheoremId::T3_1 => check_t3_1(f, self.g()?, spec, x, p, opts)?,
            TheoremId::T3_2 => check_t3_2(f, self.g()?, spec, x, p, opts)?,
            TheoremId::T4_1 => check_t4_1(f, self.g()?, spec, x, p, opts)?,
            TheoremId::T4_2 => check_t4_2(f, self.g()?, spec, x, p, opts)?,
            TheoremId::T4_3 => check_t4_3(f, self.g()?, spec, x, p, opts)?,
            TheoremId::T4_4 => check_t4_4(f, self.g()?, spec, x, p, opts)?,
            TheoremId::T4_5 => check_t4_5(f, self.g()?, self.h()?, x, p, None, opts)?,
            TheoremId::T4_6 => check_t4_5(f, self.g()?, self.h()?, x, p, Some(self.params2()?), opts)?,
            TheoremId::T4_7 => check_t4_7(f, self.h()?, spec.p, x, p, None, opts)?,
            TheoremId::T4_8 => check_t4_7(f, self.h()?, spec.p, x, p, Some(self.params2()?), opts)?,
        };
        Ok(c)
    }

    /// The literal `g^q` reading of the reverse Minkowski bound.
    pub fn evaluate_literal_variant(&self, opts: &OperatorOptions) -> Result<Comparison, HarnessError> {
        if self.theorem != TheoremId::T3_1 {
            return Err(HarnessError::MissingInput(
                "the literal variant exists only for T3_1".into(),
            ));
        }
        Ok(check_t3_1_literal(
            &self.functions.f,
            self.g()?,
            &self.spec,
            self.x,
            self.params,
            opts,
        )?)
    }

    fn report(&self, outcome: Result<Comparison, String>, tol_rel: f64, variant: Option<&str>) -> InequalityReport {
        let mut r = InequalityReport::skeleton(self.theorem, self.params, self.params2, &self.spec, self.x, self.seed);
        r.functions = Some(self.functions.clone());
        r.variant = variant.map(str::to_owned);
        if variant.is_some() {
            r.q = self.spec.q();
        }
        r.fill(outcome, tol_rel);
        r
    }
}

/// Per-trial record; the flat fields mirror the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub theorem_id: TheoremId,
    pub alpha: f64,
    pub beta: f64,
    pub alpha2: Option<f64>,
    pub beta2: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub x: f64,
    #[serde(with = "non_finite_as_null")]
    pub lhs: f64,
    #[serde(with = "non_finite_as_null")]
    pub rhs: f64,
    #[serde(with = "non_finite_as_null")]
    pub margin: f64,
    pub verdict: Verdict,
    pub seed: u64,
    pub trial_index: u64,
    #[serde(with = "non_finite_as_null")]
    pub err_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<TrialFunctions>,
}

mod non_finite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl InequalityReport {
    fn skeleton(
        theorem: TheoremId,
        params: FracParams,
        params2: Option<FracParams>,
        spec: &CorridorSpec,
        x: f64,
        seed: TrialSeed,
    ) -> Self {
        let am_gm = theorem == TheoremId::T4_4;
        Self {
            theorem_id: theorem,
            alpha: params.alpha(),
            beta: params.beta(),
            alpha2: params2.map(|p| p.alpha()),
            beta2: params2.map(|p| p.beta()),
            p: theorem.uses_p().then_some(spec.p),
            q: if theorem.needs_conjugate() { spec.q() } else { None },
            gamma: am_gm.then_some(spec.gamma),
            delta: am_gm.then_some(spec.delta),
            m: spec.m,
            big_m: spec.big_m,
            x,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            verdict: Verdict::Failed,
            seed: seed.seed,
            trial_index: seed.trial_index,
            err_budget: f64::NAN,
            variant: None,
            error: None,
            functions: None,
        }
    }

    fn fill(&mut self, outcome: Result<Comparison, String>, tol_rel: f64) {
        match outcome {
            Ok(c) => {
                self.lhs = c.lhs;
                self.rhs = c.rhs;
                self.margin = c.margin;
                self.err_budget = c.err_budget;
                self.verdict = Verdict::classify(c.margin, c.err_budget, tol_rel);
                if self.verdict == Verdict::Failed {
                    self.error = Some("non-finite margin".into());
                }
            }
            Err(e) => {
                self.verdict = Verdict::Failed;
                self.error = Some(e);
            }
        }
    }

    pub fn trial_seed(&self) -> TrialSeed {
        TrialSeed::new(self.seed, self.trial_index)
    }

    pub fn params(&self) -> Result<FracParams, HarnessError> {
        FracParams::new(self.alpha, self.beta).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn params2(&self) -> Result<Option<FracParams>, HarnessError> {
        match (self.alpha2, self.beta2) {
            (Some(a), Some(b)) => Ok(Some(
                FracParams::new(a, b).map_err(|e| HarnessError::Config(e.to_string()))?,
            )),
            (None, None) => Ok(None),
            _ => Err(HarnessError::Config("alpha2 and beta2 must be given together".into())),
        }
    }

    pub fn spec(&self) -> Result<CorridorSpec, HarnessError> {
        Ok(CorridorSpec::new(self.m, self.big_m, self.p.unwrap_or(1.0))?
            .with_am_gm(self.gamma.unwrap_or(2.0), self.delta.unwrap_or(1.0))?)
    }

    /// Rebuilds the trial from the recorded parameters and embedded functions.
    pub fn to_trial(&self) -> Result<Trial, HarnessError> {
        let functions = self
            .functions
            .clone()
            .ok_or_else(|| HarnessError::MissingInput("report carries no function serializations".into()))?;
        Ok(Trial {
            theorem: self.theorem_id,
            params: self.params()?,
            params2: self.params2()?,
            spec: self.spec()?,
            x: self.x,
            seed: self.trial_seed(),
            functions,
        })
    }

    fn csv_record(&self) -> [String; 19] {
        [
            self.theorem_id.as_str().to_owned(),
            num(self.alpha),
            num(self.beta),
            opt(self.alpha2),
            opt(self.beta2),
            opt(self.p),
            opt(self.q),
            opt(self.gamma),
            opt(self.delta),
            num(self.m),
            num(self.big_m),
            num(self.x),
            num(self.lhs),
            num(self.rhs),
            num(self.margin),
            self.verdict.as_str().to_owned(),
            self.seed.to_string(),
            self.trial_index.to_string(),
            num(self.err_budget),
        ]
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Parameter grids and run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Trials per theorem.
    pub trials: usize,
    /// Master seed.
    pub seed: u64,
    pub tol_rel: f64,
    /// Quadrature relative tolerance.
    pub rtol: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub ps: Vec<f64>,
    /// `(m, M)` corridors.
    pub corridors: Vec<(f64, f64)>,
    pub xs: Vec<f64>,
    pub theorems: Vec<TheoremId>,
    pub log_x_max: f64,
    pub intervals: usize,
    /// Worker count; falls back to `HADFRAC_THREADS`, then to the pool default.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let generator = FunctionGenerator::default();
        Self {
            trials: 1000,
            seed: 42,
            tol_rel: DEFAULT_TOL_REL,
            rtol: DEFAULT_RTOL,
            alphas: vec![0.3, 0.5, 1.0, 1.7],
            betas: vec![0.25, 0.5, 1.0],
            ps: vec![1.0, 1.5, 2.0, 4.0],
            corridors: vec![(0.5, 2.0), (0.9, 1.1), (0.1, 10.0)],
            xs: vec![1.5, std::f64::consts::E, 2f64.exp()],
            theorems: TheoremId::ALL.to_vec(),
            log_x_max: generator.log_x_max,
            intervals: generator.intervals,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    params: FracParams,
    p: f64,
    corridor: (f64, f64),
    x: f64,
}

impl SuiteConfig {
    pub fn generator(&self) -> FunctionGenerator {
        FunctionGenerator {
            log_x_max: self.log_x_max,
            intervals: self.intervals,
        }
    }

    pub fn options(&self) -> OperatorOptions {
        OperatorOptions { rtol: self.rtol }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(1e-12..=1e-6).contains(&self.tol_rel) {
            return bad(format!("tol_rel must lie in [1e-12, 1e-6], got {}", self.tol_rel));
        }
        if !(1e-13..=1e-4).contains(&self.rtol) {
            return bad(format!("rtol must lie in [1e-13, 1e-4], got {}", self.rtol));
        }
        if self.alphas.is_empty() || self.betas.is_empty() || self.ps.is_empty() {
            return bad("parameter grids must be non-empty".into());
        }
        if self.corridors.is_empty() || self.xs.is_empty() || self.theorems.is_empty() {
            return bad("corridor, x and theorem lists must be non-empty".into());
        }
        if !(self.log_x_max > 0.0 && self.log_x_max.is_finite()) || self.intervals == 0 {
            return bad("generator needs log_x_max > 0 and at least one interval".into());
        }
        for &a in &self.alphas {
            for &b in &self.betas {
                FracParams::new(a, b).map_err(|e| HarnessError::Config(e.to_string()))?;
            }
        }
        for &(m, big_m) in &self.corridors {
            CorridorSpec::new(m, big_m, 1.0)?;
        }
        if let Some(p) = self.ps.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
            return bad(format!("exponents must satisfy p >= 1, got {p}"));
        }
        let x_max = self.log_x_max.exp();
        if let Some(x) = self.xs.iter().find(|&&x| !(x > 1.0 && x <= x_max)) {
            return bad(format!("evaluation points must lie in (1, {x_max}], got {x}"));
        }
        for &t in &self.theorems {
            if self.grid(t).is_empty() {
                return bad(format!("{t} needs p > 1 but the p grid has none"));
            }
        }
        Ok(())
    }

    fn grid(&self, theorem: TheoremId) -> Vec<GridPoint> {
        let ps: Vec<f64> = if !theorem.uses_p() {
            vec![1.0]
        } else if theorem.needs_conjugate() {
            self.ps.iter().copied().filter(|&p| p > 1.0).collect()
        } else {
            self.ps.clone()
        };
        let mut out = Vec::new();
        for &a in &self.alphas {
            for &b in &self.betas {
                let Ok(params) = FracParams::new(a, b) else { continue };
                for &p in &ps {
                    for &corridor in &self.corridors {
                        for &x in &self.xs {
                            out.push(GridPoint { params, p, corridor, x });
                        }
                    }
                }
            }
        }
        out
    }

    /// Parameters of trial `index` of `theorem`: grid points are visited
    /// round-robin; the second `(α, β)` and the AM–GM exponents are drawn
    /// from the trial seed.
    fn plan(&self, theorem: TheoremId, grid: &[GridPoint], index: u64) -> Result<PlannedTrial, HarnessError> {
        let len = grid.len() as u64;
        let point = grid[((index % len) * grid_stride(len) % len) as usize];
        let seed = TrialSeed::derive(self.seed, theorem.tag(), index);
        let params2 = if theorem.two_parameter() {
            let mut rng = seed.rng(STREAM_PARAMS2);
            let a = self.alphas[rng.random_range(0..self.alphas.len())];
            let b = self.betas[rng.random_range(0..self.betas.len())];
            Some(FracParams::new(a, b)?)
        } else {
            None
        };
        let (gamma, delta) = if theorem == TheoremId::T4_4 {
            let mut rng = seed.rng(STREAM_AM_GM);
            let gamma = rng.random_range(1.5..=3.0);
            let delta = rng.random_range(0.5..=gamma - 0.5);
            (gamma, delta)
        } else {
            (2.0, 1.0)
        };
        let spec = CorridorSpec::new(point.corridor.0, point.corridor.1, point.p)?.with_am_gm(gamma, delta)?;
        Ok(PlannedTrial {
            theorem,
            params: point.params,
            params2,
            spec,
            x: point.x,
            seed,
        })
    }

    fn threads(&self) -> Option<usize> {
        self.threads.or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&n| n > 0)
        })
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Step coprime to `len` near `len/φ`, so consecutive trials differ in every
/// axis while each cycle of `len` trials still visits every grid point once.
fn grid_stride(len: u64) -> u64 {
    let mut s = ((len as f64) * 0.618_033_988_749_895).round().max(1.0) as u64;
    while gcd(s, len) != 1 {
        s += 1;
    }
    s
}

#[derive(Debug, Clone, Copy)]
struct PlannedTrial {
    theorem: TheoremId,
    params: FracParams,
    params2: Option<FracParams>,
    spec: CorridorSpec,
    x: f64,
    seed: TrialSeed,
}

impl PlannedTrial {
    fn failed(&self, msg: String) -> InequalityReport {
        let mut r = InequalityReport::skeleton(self.theorem, self.params, self.params2, &self.spec, self.x, self.seed);
        r.fill(Err(msg), 0.0);
        r
    }
}

/// Per-theorem aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSummary {
    pub theorem_id: TheoremId,
    pub asserted: bool,
    pub trials: usize,
    pub holds: usize,
    pub violated: usize,
    pub inconclusive: usize,
    pub failed: usize,
    pub min_margin: Option<f64>,
    pub mean_margin: Option<f64>,
    /// `(seed, trial_index)` of every violated trial.
    pub violations: Vec<(u64, u64)>,
}

impl TheoremSummary {
    fn collect(theorem: TheoremId, asserted: bool, reports: &[InequalityReport]) -> Self {
        let mut s = Self {
            theorem_id: theorem,
            asserted,
            trials: 0,
            holds: 0,
            violated: 0,
            inconclusive: 0,
            failed: 0,
            min_margin: None,
            mean_margin: None,
            violations: Vec::new(),
        };
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in reports.iter().filter(|r| r.theorem_id == theorem) {
            s.trials += 1;
            match r.verdict {
                Verdict::Holds => s.holds += 1,
                Verdict::Violated => {
                    s.violated += 1;
                    s.violations.push((r.seed, r.trial_index));
                }
                Verdict::Inconclusive => s.inconclusive += 1,
                Verdict::Failed => s.failed += 1,
            }
            if r.margin.is_finite() {
                s.min_margin = Some(s.min_margin.map_or(r.margin, |m: f64| m.min(r.margin)));
                sum += r.margin;
                n += 1;
            }
        }
        if n > 0 {
            s.mean_margin = Some(sum / n as f64);
        }
        s
    }

    /// Asserted theorems fail on any violated or failed trial.
    pub fn passed(&self) -> bool {
        !self.asserted || (self.violated == 0 && self.failed == 0)
    }
}

/// Everything a suite run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub config: SuiteConfig,
    pub summary: Vec<TheoremSummary>,
    pub reports: Vec<InequalityReport>,
    /// Trials of the literal `g^q` reading; never asserted.
    pub variants: Vec<InequalityReport>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.summary.iter().all(TheoremSummary::passed)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        write_csv(&self.reports, w)
    }

    pub fn write_variants_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        write_csv(&self.variants, w)
    }

    pub fn csv(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Report with the given theorem and trial index.
    pub fn find(&self, theorem: TheoremId, trial_index: u64) -> Option<&InequalityReport> {
        self.reports
            .iter()
            .find(|r| r.theorem_id == theorem && r.trial_index == trial_index)
    }

    /// Human-readable summary table.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:>7} {:>7} {:>8} {:>12} {:>7} {:>13} {:>13}",
            "id", "trials", "holds", "violated", "inconclusive", "failed", "min_margin", "mean_margin"
        );
        for s in &self.summary {
            let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.4e}"));
            let _ = writeln!(
                out,
                "{:<6} {:>7} {:>7} {:>8} {:>12} {:>7} {:>13} {:>13}{}",
                s.theorem_id.as_str(),
                s.trials,
                s.holds,
                s.violated,
                s.inconclusive,
                s.failed,
                fmt(s.min_margin),
                fmt(s.mean_margin),
                if s.asserted { "" } else { "  (census)" }
            );
        }
        out
    }
}

fn write_csv<W: Write>(reports: &[InequalityReport], w: W) -> Result<(), HarnessError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in reports {
        wr.write_record(r.csv_record())?;
    }
    wr.flush()?;
    Ok(())
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| (*s).to_owned())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_owned())
}

fn execute(config: &SuiteConfig, plan: &PlannedTrial) -> (InequalityReport, Option<InequalityReport>) {
    let opts = config.options();
    let generator = config.generator();
    let run = || -> Result<(InequalityReport, Option<InequalityReport>), HarnessError> {
        let trial = Trial::generate(
            plan.theorem,
            plan.params,
            plan.params2,
            plan.spec,
            plan.x,
            plan.seed,
            &generator,
        )?;
        let main = trial.report(trial.evaluate(&opts).map_err(|e| e.to_string()), config.tol_rel, None);
        let variant = (trial.theorem == TheoremId::T3_1 && trial.spec.q().is_some()).then(|| {
            trial.report(
                trial.evaluate_literal_variant(&opts).map_err(|e| e.to_string()),
                config.tol_rel,
                Some(LITERAL_VARIANT),
            )
        });
        Ok((main, variant))
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(out)) => out,
        Ok(Err(e)) => (plan.failed(e.to_string()), None),
        Err(payload) => (plan.failed(format!("panic: {}", panic_message(payload.as_ref()))), None),
    }
}

#[cfg(feature = "parallel")]
fn execute_all(config: &SuiteConfig, plans: &[PlannedTrial]) -> Vec<(InequalityReport, Option<InequalityReport>)> {
    use rayon::prelude::*;
    match config.threads() {
        Some(1) => plans.iter().map(|p| execute(config, p)).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| plans.par_iter().map(|p| execute(config, p)).collect()),
            Err(_) => plans.iter().map(|p| execute(config, p)).collect(),
        },
        None => plans.par_iter().map(|p| execute(config, p)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn execute_all(config: &SuiteConfig, plans: &[PlannedTrial]) -> Vec<(InequalityReport, Option<InequalityReport>)> {
    let _ = config.threads();
    plans.iter().map(|p| execute(config, p)).collect()
}

/// Runs every configured theorem for `config.trials` trials.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteResult, HarnessError> {
    config.validate()?;
    let mut theorems = config.theorems.clone();
    theorems.sort();
    theorems.dedup();
    let mut plans = Vec::with_capacity(theorems.len() * config.trials);
    for &t in &theorems {
        let grid = config.grid(t);
        for i in 0..config.trials as u64 {
            plans.push(config.plan(t, &grid, i)?);
        }
    }
    let mut reports = Vec::with_capacity(plans.len());
    let mut variants = Vec::new();
    for (main, variant) in execute_all(config, &plans) {
        reports.push(main);
        variants.extend(variant);
    }
    let key = |r: &InequalityReport| (r.theorem_id, r.trial_index);
    reports.sort_by_key(key);
    variants.sort_by_key(key);
    let summary = theorems
        .iter()
        .map(|&t| TheoremSummary::collect(t, t.asserted(), &reports))
        .collect();
    Ok(SuiteResult {
        config: config.clone(),
        summary,
        reports,
        variants,
    })
}

/// Result of re-evaluating a recorded trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub theorem_id: TheoremId,
    pub trial_index: u64,
    pub recorded_lhs: f64,
    pub recorded_rhs: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub lhs_rel_diff: f64,
    pub rhs_rel_diff: f64,
    /// Both sides reproduced within [`REPLAY_TOL`].
    pub matches: bool,
    /// Regenerating from the recorded seed gives the embedded functions.
    pub regenerated_identical: bool,
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }
}

/// Re-evaluates one recorded trial from its embedded functions.
pub fn replay(report: &InequalityReport, config: &SuiteConfig) -> Result<ReplayOutcome, HarnessError> {
    let trial = report.to_trial()?;
    let opts = config.options();
    let c = if report.variant.is_some() {
        trial.evaluate_literal_variant(&opts)?
    } else {
        trial.evaluate(&opts)?
    };
    let regenerated = Trial::generate(
        trial.theorem,
        trial.params,
        trial.params2,
        trial.spec,
        trial.x,
        trial.seed,
        &config.generator(),
    )
    .map(|t| t.functions == trial.functions)
    .unwrap_or(false);
    let (dl, dr) = (rel_diff(c.lhs, report.lhs), rel_diff(c.rhs, report.rhs));
    Ok(ReplayOutcome {
        theorem_id: report.theorem_id,
        trial_index: report.trial_index,
        recorded_lhs: report.lhs,
        recorded_rhs: report.rhs,
        lhs: c.lhs,
        rhs: c.rhs,
        margin: c.margin,
        lhs_rel_diff: dl,
        rhs_rel_diff: dr,
        matches: dl <= REPLAY_TOL && dr <= REPLAY_TOL,
        regenerated_identical: regenerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> SuiteConfig {
        SuiteConfig {
            trials,
            threads: Some(1),
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn verdict_precedence() {
        assert_eq!(Verdict::classify(0.0, 1e-3, 1e-9), Verdict::Holds);
        assert_eq!(Verdict::classify(-5e-10, 0.0, 1e-9), Verdict::Holds);
        assert_eq!(Verdict::classify(-1e-6, 1e-5, 1e-9), Verdict::Inconclusive);
        assert_eq!(Verdict::classify(-1e-6, 1e-7, 1e-9), Verdict::Violated);
        assert_eq!(Verdict::classify(f64::NAN, 0.0, 1e-9), Verdict::Failed);
    }

    #[test]
    fn config_validation() {
        assert!(SuiteConfig::default().validate().is_ok());
        let mut c = small(0);
        assert!(c.validate().is_err());
        c.trials = 1;
        c.tol_rel = 1e-3;
        assert!(c.validate().is_err());
        c.tol_rel = 1e-9;
        c.ps = vec![1.0];
        // the Hölder-type theorems need p > 1
        assert!(c.validate().is_err());
        c.theorems = vec![TheoremId::T3_1];
        assert!(c.validate().is_ok());
        c.xs = vec![10.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn stride_is_a_permutation() {
        for len in [1u64, 2, 27, 324, 432] {
            let s = grid_stride(len);
            let mut seen: Vec<u64> = (0..len).map(|i| i * s % len).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..len).collect::<Vec<_>>());
        }
    }

    #[test]
    fn grid_filters_p() {
        let c = SuiteConfig::default();
        assert_eq!(c.grid(TheoremId::T3_1).len(), 4 * 3 * 4 * 3 * 3);
        assert_eq!(c.grid(TheoremId::T4_1).len(), 4 * 3 * 3 * 3 * 3);
        assert_eq!(c.grid(TheoremId::T4_5).len(), 4 * 3 * 3 * 3);
    }

    #[test]
    fn singleton_collapsed_suite_has_zero_margins() {
        let c = SuiteConfig {
            trials: 1,
            alphas: vec![0.5],
            betas: vec![0.5],
            ps: vec![2.0],
            corridors: vec![(1.0, 1.0)],
            xs: vec![std::f64::consts::E],
            threads: Some(1),
            ..SuiteConfig::default()
        };
        let res = run_suite(&c).unwrap();
        assert_eq!(res.reports.len(), 10);
        for r in &res.reports {
            assert!(r.margin.abs() <= 1e-9, "{} margin {}", r.theorem_id, r.margin);
            assert_eq!(r.verdict, Verdict::Holds);
        }
    }

    #[test]
    fn small_suite_round_trips_and_replays() {
        let res = run_suite(&small(3)).unwrap();
        assert_eq!(res.reports.len(), 30);
        assert!(res.passed(), "{}", res.summary_table());
        assert!(!res.variants.is_empty());
        let json = res.to_json().unwrap();
        let back = SuiteResult::from_json(&json).unwrap();
        assert_eq!(back.csv().unwrap(), res.csv().unwrap());
        for r in back.reports.iter().chain(&back.variants) {
            let out = replay(r, &back.config).unwrap();
            assert!(out.matches, "{out:?}");
            assert!(out.regenerated_identical);
        }
        let csv = res.csv().unwrap();
        assert!(csv.starts_with(&CSV_HEADER.join(",")));
        assert_eq!(csv.lines().count(), 31);
    }

    #[test]
    fn failed_trials_are_recorded() {
        let plan = PlannedTrial {
            theorem: TheoremId::T4_1,
            params: FracParams::new(1.0, 1.0).unwrap(),
            params2: None,
            spec: CorridorSpec::new(0.5, 2.0, 1.0).unwrap(),
            x: 2.0,
            seed: TrialSeed::new(1, 0),
        };
        let (r, v) = execute(&small(1), &plan);
        assert_eq!(r.verdict, Verdict::Failed);
        assert!(r.error.is_some());
        assert!(v.is_none());
        let json = serde_json::to_string(&r).unwrap();
        let back: InequalityReport = serde_json::from_str(&json).unwrap();
        assert!(back.lhs.is_nan());
    }
}
