//! `hadfrac`: evaluate proportional Hadamard integrals, run the identity
//! checks, and drive the inequality suite.

mod source;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hadfrac_core::harness::{self, HarnessError, SuiteConfig, SuiteResult, TheoremId};
use hadfrac_core::identity::{run_identity, IdentityConfig, IdentityReport};
use hadfrac_core::operators::{self, OperatorError};
use hadfrac_core::quadrature::QuadratureError;
use hadfrac_core::{FracParams, FunctionError, OperatorOptions, PowerImageSpec};
use serde_json::json;

const THREADS_ENV: &str = "HADFRAC_THREADS";

#[derive(Parser)]
#[command(
    name = "hadfrac",
    version,
    about = "Generalized proportional Hadamard fractional integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one operator at one point.
    Eval(EvalArgs),
    /// Closed-form, semigroup and beta = 1 reduction checks.
    Identity(IdentityArgs),
    /// Run the randomized inequality suite and write reports.
    Suite(SuiteArgs),
    /// Re-evaluate one recorded trial from a JSON report.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    HadamardLeft,
    HadamardRight,
    RlLeft,
    RlRight,
    ClosedForm,
    Classical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteFormat {
    Csv,
    Json,
    Both,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    op: Op,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    beta: f64,
    /// Evaluation point (defaults to e).
    #[arg(long, default_value_t = std::f64::consts::E, allow_negative_numbers = true)]
    x: f64,
    /// Left endpoint for left-sided operators.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    /// Right endpoint, required by right-sided operators.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Exponent of the closed-form input.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// `const:c`, `power:lambda`, `spline:<file>`, inline JSON, or a JSON file.
    #[arg(long = "fn", value_name = "SOURCE")]
    function: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(clap::Args)]
struct IdentityArgs {
    #[arg(long)]
    semigroup_trials: Option<usize>,
    #[arg(long)]
    reduction_trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Negative control: perturb Γ in the closed form by a factor (1 + ε t).
    #[arg(long, hide = true, allow_negative_numbers = true)]
    corrupt_gamma: Option<f64>,
}

#[derive(clap::Args)]
struct SuiteArgs {
    /// Base configuration (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to these theorem ids (repeatable or comma-separated).
    #[arg(long = "theorem", value_delimiter = ',')]
    theorems: Vec<TheoremId>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    xs: Option<Vec<f64>>,
    #[arg(long)]
    tol_rel: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Worker threads (overrides HADFRAC_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: SuiteFormat,
}

#[derive(clap::Args)]
struct ReplayArgs {
    /// JSON report written by `suite --format json`.
    file: PathBuf,
    #[arg(long)]
    trial: u64,
    /// Needed when several theorems recorded the same trial index.
    #[arg(long)]
    theorem: Option<TheoremId>,
    /// Replay the literal T3_1 variant row instead of the main report.
    #[arg(long)]
    variant: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Failure with its exit code.
#[derive(Debug)]
enum CliError {
    Check(String),
    Input(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match &e {
            OperatorError::Domain(m) => CliError::Domain(m.clone()),
            OperatorError::Function(FunctionError::OutOfDomain { .. })
            | OperatorError::Quadrature(QuadratureError::NonFiniteIntegrand { .. }) => CliError::Domain(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FunctionError> for CliError {
    fn from(e: FunctionError) -> Self {
        OperatorError::from(e).into()
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Operator(e) => e.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Identity(a) => cmd_identity(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hadfrac: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable output"));
}

fn options(rtol: Option<f64>) -> OperatorOptions {
    rtol.map_or_else(OperatorOptions::default, |rtol| OperatorOptions { rtol })
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let params = FracParams::new(a.alpha, a.beta)?;
    let opts = options(a.rtol);
    let need_fn = || {
        a.function
            .as_deref()
            .ok_or_else(|| CliError::Input("--fn is required for this operator".into()))
            .and_then(|s| source::parse(s, a.beta))
    };
    let need_b = || {
        a.b.ok_or_else(|| CliError::Input("--b is required for right-sided operators".into()))
    };
    let value = match a.op {
        Op::HadamardLeft => operators::hadamard_left_with(&need_fn()?, a.x, params, a.a, &opts)?,
        Op::HadamardRight => operators::hadamard_right_with(&need_fn()?, a.x, need_b()?, params, &opts)?,
        Op::RlLeft | Op::RlRight => {
            let z = need_fn()?;
            let breaks: Vec<f64> = z.log_knots().iter().map(|u| u.exp()).collect();
            let upper = z.upper();
            let at = |t: f64| z.evaluate(t.min(upper)).unwrap_or(f64::NAN);
            let (lo, hi) = match a.op {
                Op::RlLeft => (a.a, a.x),
                _ => (a.x, need_b()?),
            };
            if lo < 1.0 || hi > upper * (1.0 + 1e-12) {
                return Err(CliError::Domain(format!(
                    "interval [{lo}, {hi}] leaves the function domain [1, {upper}]"
                )));
            }
            match a.op {
                Op::RlLeft => operators::rl_proportional_left(at, &breaks, a.x, params, a.a, &opts)?,
                _ => operators::rl_proportional_right(at, &breaks, a.x, params, hi, &opts)?,
            }
        }
        Op::ClosedForm => {
            let lambda = a
                .lambda
                .ok_or_else(|| CliError::Input("--lambda is required for closed-form".into()))?;
            let v = operators::closed_form_power_image(a.x, params, PowerImageSpec::new(lambda)?)?;
            return emit_scalar(&a, "closed-form", v);
        }
        Op::Classical => {
            let v = operators::classical_hadamard_left(&need_fn()?, a.x, a.alpha, a.a)?;
            return emit_scalar(&a, "classical", v);
        }
    };
    if !value.value.is_finite() {
        return Err(CliError::Domain(format!(
            "operator value is not finite ({})",
            value.value
        )));
    }
    match a.format {
        Format::Json => print_json(&json!({
            "op": a.op.to_possible_value().map(|v| v.get_name().to_owned()),
            "alpha": a.alpha,
            "beta": a.beta,
            "x": a.x,
            "value": value.value,
            "err_est": value.err_est,
            "n_used": value.n_used,
            "converged": value.converged,
        })),
        Format::Text => println!(
            "{:.17e}  err_est {:.3e}  n_used {}{}",
            value.value,
            value.err_est,
            value.n_used,
            if value.converged { "" } else { "  (not converged)" }
        ),
    }
    Ok(())
}

/// Output for operators evaluated without the adaptive Jacobi path.
fn emit_scalar(a: &EvalArgs, op: &str, v: f64) -> Result<(), CliError> {
    match a.format {
        Format::Json => print_json(&json!({
            "op": op,
            "alpha": a.alpha,
            "beta": a.beta,
            "x": a.x,
            "value": v,
            "err_est": null,
            "n_used": null,
            "converged": null,
        })),
        Format::Text => println!("{v:.17e}"),
    }
    Ok(())
}

fn cmd_identity(a: IdentityArgs) -> Result<(), CliError> {
    let d = IdentityConfig::default();
    let config = IdentityConfig {
        semigroup_trials: a.semigroup_trials.unwrap_or(d.semigroup_trials),
        reduction_trials: a.reduction_trials.unwrap_or(d.reduction_trials),
        seed: a.seed.unwrap_or(d.seed),
        rtol: a.rtol.unwrap_or(d.rtol),
        gamma_perturbation: a.corrupt_gamma.unwrap_or(0.0),
    };
    let report = run_identity(&config);
    match a.format {
        Format::Json => print_json(&report),
        Format::Text => print_identity(&report),
    }
    if report.passed {
        Ok(())
    } else {
        let failures: usize = report.summary.iter().map(|s| s.failures).sum();
        Err(CliError::Check(format!("{failures} identity checks out of tolerance")))
    }
}

fn print_identity(report: &IdentityReport) {
    for c in &report.checks {
        println!(
            "{} {:<18} {:<48} rel_err {:.2e} (tol {:e})",
            if c.passed { "ok  " } else { "FAIL" },
            c.family.as_str(),
            c.label,
            c.rel_err,
            c.tol
        );
    }
    for s in &report.summary {
        println!(
            "{:<18} {:>4} checks, {} failures, max rel err {:.2e}",
            s.family.as_str(),
            s.checks,
            s.failures,
            s.max_rel_err
        );
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Input(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn suite_config(a: &SuiteArgs) -> Result<SuiteConfig, CliError> {
    let mut c = match &a.config {
        Some(p) => {
            serde_json::from_str(&read(p)?).map_err(|e| CliError::Input(format!("bad config {}: {e}", p.display())))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(v) = a.trials {
        c.trials = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if !a.theorems.is_empty() {
        c.theorems = a.theorems.clone();
    }
    if let Some(v) = &a.alphas {
        c.alphas = v.clone();
    }
    if let Some(v) = &a.betas {
        c.betas = v.clone();
    }
    if let Some(v) = &a.ps {
        c.ps = v.clone();
    }
    if let Some(v) = &a.xs {
        c.xs = v.clone();
    }
    if let Some(v) = a.tol_rel {
        c.tol_rel = v;
    }
    if let Some(v) = a.rtol {
        c.rtol = v;
    }
    c.threads = match a.threads {
        Some(0) => return Err(CliError::Input("--threads must be positive".into())),
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    c.validate()?;
    Ok(c)
}

fn cmd_suite(a: SuiteArgs) -> Result<(), CliError> {
    let config = suite_config(&a)?;
    let result = harness::run_suite(&config)?;
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let mut written = Vec::new();
    if matches!(a.format, SuiteFormat::Csv | SuiteFormat::Both) {
        let path = a.out_dir.join("suite.csv");
        write(&path, result.csv()?.as_bytes())?;
        written.push(path);
        if !result.variants.is_empty() {
            let mut buf = Vec::new();
            result.write_variants_csv(&mut buf)?;
            let path = a.out_dir.join("suite_variants.csv");
            write(&path, &buf)?;
            written.push(path);
        }
    }
    if matches!(a.format, SuiteFormat::Json | SuiteFormat::Both) {
        let path = a.out_dir.join("suite.json");
        write(&path, result.to_json()?.as_bytes())?;
        written.push(path);
    }
    print!("{}", result.summary_table());
    for p in &written {
        println!("wrote {}", p.display());
    }
    if result.passed() {
        Ok(())
    } else {
        let bad: Vec<String> = result
            .summary
            .iter()
            .filter(|s| !s.passed())
            .map(|s| format!("{} ({} violated, {} failed)", s.theorem_id, s.violated, s.failed))
            .collect();
        Err(CliError::Check(bad.join(", ")))
    }
}

fn cmd_replay(a: ReplayArgs) -> Result<(), CliError> {
    let result = SuiteResult::from_json(&read(&a.file)?)
        .map_err(|e| CliError::Input(format!("{} is not a JSON suite report: {e}", a.file.display())))?;
    let pool = if a.variant { &result.variants } else { &result.reports };
    let hits: Vec<_> = pool
        .iter()
        .filter(|r| r.trial_index == a.trial && a.theorem.is_none_or(|t| t == r.theorem_id))
        .collect();
    let report = match hits.as_slice() {
        [] => {
            return Err(CliError::Input(format!(
                "no recorded trial {} in {}",
                a.trial,
                a.file.display()
            )))
        }
        [one] => *one,
        many => {
            let ids: Vec<&str> = many.iter().map(|r| r.theorem_id.as_str()).collect();
            return Err(CliError::Input(format!(
                "trial {} recorded for {}; pick one with --theorem",
                a.trial,
                ids.join(", ")
            )));
        }
    };
    let out = harness::replay(report, &result.config)?;
    match a.format {
        Format::Json => print_json(&out),
        Format::Text => println!(
            "{} trial {}: lhs {:e} (recorded {:e}), rhs {:e} (recorded {:e}), margin {:e}, {}",
            out.theorem_id,
            out.trial_index,
            out.lhs,
            out.recorded_lhs,
            out.rhs,
            out.recorded_rhs,
            out.margin,
            if out.matches { "reproduced" } else { "MISMATCH" }
        ),
    }
    if out.matches {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "replay differs from the record (lhs {:.1e}, rhs {:.1e} relative)",
            out.lhs_rel_diff, out.rhs_rel_diff
        )))
    }
}
