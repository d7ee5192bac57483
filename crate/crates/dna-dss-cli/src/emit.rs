//! Output plumbing: 12-significant-digit JSON, sample CSVs, and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Book-keeping for one command execution: the raw argv (for the manifest),
/// the files written so far, and the start time.
pub struct RunContext {
    pub argv: Vec<String>,
    pub outputs: Vec<String>,
    started: Instant,
}

impl RunContext {
    pub fn new(argv: Vec<String>) -> RunContext {
        RunContext {
            argv,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }
}

/// Replayable record of a run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_ms: u64,
}

/// Round to 12 significant digits so float output is byte-stable and readable.
pub fn round_sig12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig12(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serialize with rounded floats and sorted keys, trailing newline included.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Write `content` to `out`, or stdout when no path is given.
pub fn write_output(
    ctx: &mut RunContext,
    out: Option<&Path>,
    content: &str,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, content)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            ctx.outputs.push(path.display().to_string());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))?;
        }
    }
    Ok(())
}

pub fn write_samples_csv(
    ctx: &mut RunContext,
    path: &Path,
    samples: &[u64],
) -> Result<(), CliError> {
    let mut s = String::with_capacity(samples.len() * 8);
    for v in samples {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    ctx.outputs.push(path.display().to_string());
    Ok(())
}

pub fn write_z_csv(ctx: &mut RunContext, path: &Path, z: &[f64]) -> Result<(), CliError> {
    let mut s = String::with_capacity(z.len() * 24);
    for (trial, value) in z.iter().enumerate() {
        s.push_str(&format!("{trial},{}\n", round_sig12(*value)));
    }
    fs::write(path, s).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    ctx.outputs.push(path.display().to_string());
    Ok(())
}

/// Parse a samples CSV back: "trial,z" lines or one value per line.
pub fn read_z_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        let v: f64 = field.parse().map_err(|_| {
            CliError::Usage(format!(
                "{}:{}: cannot parse '{field}' as a number",
                path.display(),
                lineno + 1
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_manifest(
    ctx: &RunContext,
    path: &PathBuf,
    command: &str,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.to_string(),
        argv: ctx.argv.clone(),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: ctx.outputs.clone(),
        wall_ms: ctx.started.elapsed().as_millis() as u64,
    };
    let json = to_json_string(&manifest)?;
    fs::write(path, json)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a manifest: {e}", path.display())))
}
