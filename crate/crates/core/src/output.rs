//! CSV result files and the run manifest that binds them to a config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{parse_config_str, sha256_hex, Overrides};
use crate::error::{Error, Result};
use crate::montecarlo::ExperimentResult;

pub const CSV_HEADER: &str = "experiment,d,body,r,n,trials,mean,stderr,seed,wall_ms";

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text for a result: the header, then one line per row.
pub fn render_csv(result: &ExperimentResult) -> String {
    let spec = &result.spec;
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let body = spec.body.label();
    for row in &result.rows {
        let experiment = if row.label.is_empty() {
            spec.name.as_str().to_owned()
        } else {
            format!("{}:{}", spec.name, row.label)
        };
        writeln!(
            out,
            "{experiment},{},{body},{},{},{},{},{},{},{}",
            spec.d(),
            sci(spec.r),
            row.n,
            row.trials,
            sci(row.mean),
            sci(row.stderr),
            row.seed,
            row.wall_ms
        )
        .expect("writing to a String");
    }
    out
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the CSV and returns the SHA-256 of the bytes written.
pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<String> {
    let text = render_csv(result);
    write_file(path, text.as_bytes())?;
    Ok(sha256_hex(text.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of `resolved_config`.
    pub config_digest: String,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub resolved_config: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn emit_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: not a run manifest: {e}", path.display())))
}

/// One failed check from [`verify_manifest`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    ConfigDigest {
        stored: String,
        computed: String,
    },
    ConfigUnreadable(String),
    Output {
        path: String,
        stored: String,
        computed: String,
    },
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::ConfigDigest { stored, computed } => {
                write!(f, "config digest mismatch: stored {stored}, computed {computed}")
            }
            Mismatch::ConfigUnreadable(m) => write!(f, "stored config does not parse: {m}"),
            Mismatch::Output { path, stored, computed } => {
                write!(f, "{path}: stored {stored}, computed {computed}")
            }
        }
    }
}

fn locate(output: &str, manifest_path: &Path) -> PathBuf {
    let p = PathBuf::from(output);
    if p.is_absolute() || p.exists() {
        return p;
    }
    match manifest_path.parent() {
        Some(dir) => dir.join(&p),
        None => p,
    }
}

/// Recomputes every digest in the manifest. Missing outputs are I/O errors;
/// digest disagreements are returned.
pub fn verify_manifest(path: &Path) -> Result<Vec<Mismatch>> {
    let m = read_manifest(path)?;
    let mut bad = Vec::new();
    let computed = sha256_hex(m.resolved_config.as_bytes());
    if computed != m.config_digest {
        bad.push(Mismatch::ConfigDigest {
            stored: m.config_digest.clone(),
            computed,
        });
    }
    if let Err(e) = parse_config_str(&m.resolved_config, None, &Overrides::default()) {
        bad.push(Mismatch::ConfigUnreadable(e.to_string()));
    }
    for out in &m.outputs {
        let file = locate(&out.path, path);
        let bytes = std::fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let computed = sha256_hex(&bytes);
        if computed != out.sha256 {
            bad.push(Mismatch::Output {
                path: out.path.clone(),
                stored: out.sha256.clone(),
                computed,
            });
        }
    }
    Ok(bad)
}
