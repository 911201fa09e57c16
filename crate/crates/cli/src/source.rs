//! The `--fn` mini-language.

use std::fs;
use std::path::Path;

use hadfrac_core::PositiveFunction;

use crate::CliError;

/// Parses `const:c`, `power:lambda`, `spline:<file>`, inline JSON, or a path
/// to a JSON function. `power:` builds the closed-form input for `beta`.
pub fn parse(src: &str, beta: f64) -> Result<PositiveFunction, CliError> {
    let src = src.trim();
    if let Some(c) = src.strip_prefix("const:") {
        return Ok(PositiveFunction::constant(number(c)?)?);
    }
    if let Some(l) = src.strip_prefix("power:") {
        return Ok(PositiveFunction::power(beta, number(l)?)?);
    }
    if let Some(path) = src.strip_prefix("spline:") {
        return from_file(Path::new(path));
    }
    if src.starts_with('{') {
        return from_json(src, "inline function");
    }
    let path = Path::new(src);
    if path.is_file() {
        return from_file(path);
    }
    Err(CliError::Input(format!(
        "cannot parse function source {src:?} (want const:c, power:lambda, spline:<file>, JSON, or a file)"
    )))
}

fn number(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("not a number: {s:?}")))
}

fn from_file(path: &Path) -> Result<PositiveFunction, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    from_json(&text, &path.display().to_string())
}

fn from_json(text: &str, what: &str) -> Result<PositiveFunction, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("bad function in {what}: {e}")))
}
