//! The `spindle` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::body::BodyKind;
use crate::config::{parse_config, parse_seed_text, Overrides, ResolvedConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{run, thread_pool, ExperimentName, ExperimentResult};
use crate::output::{emit_csv, emit_manifest, verify_manifest, OutputDigest, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "spindle", version, about = "Random ball-polytope experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean facet count of the ball-polytope over an n grid.
    Facets(RunArgs),
    /// Mean vertex count over an n grid.
    Vertices(RunArgs),
    /// n times the mean volume missed by the ball-polytope.
    Missed(RunArgs),
    /// Probability that d uniform points lie on a common radius-r sphere.
    Eta(RunArgs),
    /// Vertex count against n times the missed fraction of n-1 points.
    Efron(RunArgs),
    /// Facet curve with a log-log slope fit.
    Slope(RunArgs),
    /// Numerical checks of the integral formulas.
    Validate(RunArgs),
    /// Recompute the digests stored in a run manifest.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BodyArg {
    Ball,
    Ellipsoid,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file with one experiment per table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run only this table of the config.
    #[arg(long)]
    pub section: Option<String>,
    /// Master seed, decimal or 0x-hex.
    #[arg(long, value_parser = parse_seed_text)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    pub body: Option<BodyArg>,
    /// Comma-separated semi-axes.
    #[arg(long, value_delimiter = ',')]
    pub axes: Option<Vec<f64>>,
    /// Radius r of the intersected balls.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Ambient dimension (2 or 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Inner Monte Carlo size for volume estimates and validation.
    #[arg(long)]
    pub inner_m: Option<u64>,
    /// Record wall-clock milliseconds per row.
    #[arg(long)]
    pub timing: bool,
    /// CSV path; a directory when the config has several tables or the
    /// path is an existing directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults next to the first CSV.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Manifest written by a previous run.
    #[arg(value_name = "MANIFEST", required_unless_present = "manifest")]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self, experiment: ExperimentName) -> Overrides {
        Overrides {
            experiment: Some(experiment),
            d: self.dim,
            body: self.body.map(|b| match b {
                BodyArg::Ball => BodyKind::Ball,
                BodyArg::Ellipsoid => BodyKind::Ellipsoid,
            }),
            axes: self.axes.clone(),
            center: None,
            radius: self.radius,
            n_grid: self.n_grid.clone(),
            trials: self.trials,
            seed: self.seed,
            inner_m: self.inner_m,
            timing: self.timing.then_some(true),
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Facets(a) => run_experiments(ExperimentName::FacetCurve, a),
        Command::Vertices(a) => run_experiments(ExperimentName::VertexCurve, a),
        Command::Missed(a) => run_experiments(ExperimentName::MissedVolumeCurve, a),
        Command::Eta(a) => run_experiments(ExperimentName::EtaEstimate, a),
        Command::Efron(a) => run_experiments(ExperimentName::EfronCheck, a),
        Command::Slope(a) => run_experiments(ExperimentName::SlopeFit, a),
        Command::Validate(a) => run_experiments(ExperimentName::Validate, a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn output_paths(cfg: &ResolvedConfig, args: &RunArgs) -> Vec<PathBuf> {
    let names = cfg.sections.iter().map(|s| format!("{}.csv", s.name));
    match (&args.out, cfg.sections.len()) {
        (Some(path), 1) if !path.is_dir() => vec![path.clone()],
        (Some(dir), _) => names.map(|n| dir.join(n)).collect(),
        (None, _) => names.map(PathBuf::from).collect(),
    }
}

fn default_manifest(first_csv: &Path) -> PathBuf {
    first_csv.with_extension("manifest.json")
}

fn run_experiments(name: ExperimentName, args: &RunArgs) -> Result<()> {
    let mut cfg = parse_config(args.config.as_deref(), &args.overrides(name))?;
    if let Some(wanted) = &args.section {
        cfg.sections.retain(|s| &s.name == wanted);
        if cfg.sections.is_empty() {
            return Err(Error::Config {
                key: "section".into(),
                message: format!("no table named `{wanted}` runs `{name}`"),
                provenance: crate::error::Provenance::Flag("section".into()),
            });
        }
    }
    let pool = thread_pool(None)?;
    let started_at = now();
    let paths = output_paths(&cfg, args);
    let mut outputs = Vec::new();
    let mut failures = Vec::new();
    for (section, path) in cfg.sections.iter().zip(&paths) {
        let result = pool.install(|| run(&section.spec))?;
        let sha256 = emit_csv(&result, path)?;
        outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256,
        });
        report(&section.name, &result, &mut failures);
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config_digest: cfg.digest(),
        master_seed: cfg.sections[0].spec.master_seed,
        started_at,
        finished_at: now(),
        resolved_config: cfg.to_toml(),
        outputs,
    };
    let manifest_path = args.manifest.clone().unwrap_or_else(|| default_manifest(&paths[0]));
    emit_manifest(&manifest, &manifest_path)?;
    println!("manifest {}", manifest_path.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!("failed: {}", failures.join(", "))))
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn report(section: &str, result: &ExperimentResult, failures: &mut Vec<String>) {
    println!(
        "[{section}] {} on {} with r = {}",
        result.spec.name,
        result.spec.body.label(),
        result.spec.r
    );
    if let Some(v) = &result.validation {
        for item in &v.items {
            println!(
                "  {} {:<28} measured {:.8e} expected {:.8e} discrepancy {:.3e} (tol {:.1e})",
                if item.passed { "PASS" } else { "FAIL" },
                item.name,
                item.measured,
                item.expected,
                item.discrepancy,
                item.tolerance
            );
            if !item.passed {
                failures.push(format!("{section}/{}", item.name));
            }
        }
        return;
    }
    for row in &result.rows {
        let label = if row.label.is_empty() {
            String::new()
        } else {
            format!(" {}", row.label)
        };
        println!("  n = {}{label}: {:.6} ± {:.6}", row.n, row.mean, row.stderr);
    }
    if let Some(fit) = &result.fit {
        println!(
            "  slope {:.4} ± {:.4}, intercept {:.4}",
            fit.slope, fit.stderr, fit.intercept
        );
    }
}

fn verify(args: &VerifyArgs) -> Result<()> {
    let path = args
        .path
        .as_ref()
        .or(args.manifest.as_ref())
        .expect("clap requires a manifest path");
    let bad = verify_manifest(path)?;
    if bad.is_empty() {
        println!("ok {}", path.display());
        Ok(())
    } else {
        for m in &bad {
            eprintln!("mismatch: {m}");
        }
        Err(Error::Validation(format!("{} digest mismatch(es)", bad.len())))
    }
}
