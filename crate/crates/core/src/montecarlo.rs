//! Seeded, trial-parallel experiments on random ball-polytopes.
//!
//! Every trial owns a ChaCha stream seeded by `derive_seed(row_seed, [trial])`
//! where `row_seed = derive_seed(master, [experiment, label, n])`. Trial
//! values are collected in index order and folded by one reducer, so results
//! do not depend on the thread count.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, BpTestFunction, CurvatureProfile, HalfSphereMode};
use crate::ballhull::{count_vertices, enumerate_facets, estimate_missed_fraction, EnumerationMode, SampleInstance};
use crate::body::{Body, BodyKind, RadiiSummary};
use crate::error::{Error, Result};
use crate::geom::{kappa, radius_r_centers, Point};
use crate::hull::ConvexHull;
use crate::seed::{derive_seed, Label};
use crate::stats::{Estimate, Estimator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentName {
    #[serde(rename = "facet-curve")]
    FacetCurve,
    #[serde(rename = "vertex-curve")]
    VertexCurve,
    #[serde(rename = "eta")]
    EtaEstimate,
    #[serde(rename = "efron")]
    EfronCheck,
    #[serde(rename = "missed-volume")]
    MissedVolumeCurve,
    #[serde(rename = "slope")]
    SlopeFit,
    #[serde(rename = "validate")]
    Validate,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::FacetCurve,
        ExperimentName::VertexCurve,
        ExperimentName::EtaEstimate,
        ExperimentName::EfronCheck,
        ExperimentName::MissedVolumeCurve,
        ExperimentName::SlopeFit,
        ExperimentName::Validate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::FacetCurve => "facet-curve",
            ExperimentName::VertexCurve => "vertex-curve",
            ExperimentName::EtaEstimate => "eta",
            ExperimentName::EfronCheck => "efron",
            ExperimentName::MissedVolumeCurve => "missed-volume",
            ExperimentName::SlopeFit => "slope",
            ExperimentName::Validate => "validate",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentName::ALL.iter().map(|e| e.as_str()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A body described independently of its dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub kind: BodyKind,
    pub semi_axes: Vec<f64>,
    pub center: Vec<f64>,
}

impl BodySpec {
    pub fn ball(d: usize, radius: f64) -> Self {
        BodySpec {
            kind: BodyKind::Ball,
            semi_axes: vec![radius; d],
            center: vec![0.0; d],
        }
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Self {
        let d = semi_axes.len();
        BodySpec {
            kind: BodyKind::Ellipsoid,
            semi_axes,
            center: vec![0.0; d],
        }
    }

    pub fn d(&self) -> usize {
        self.semi_axes.len()
    }

    pub fn to_body<const D: usize>(&self) -> Result<Body<D>> {
        if self.semi_axes.len() != D || self.center.len() != D {
            return Err(Error::domain(format!(
                "body needs {D} semi-axes and center coordinates, got {} and {}",
                self.semi_axes.len(),
                self.center.len()
            )));
        }
        let mut axes = [0.0; D];
        axes.copy_from_slice(&self.semi_axes);
        Body::new(self.kind, Point::from_slice(&self.center)?, axes)
    }

    pub fn label(&self) -> String {
        match self.kind {
            BodyKind::Ball => format!("ball:{}", self.semi_axes.first().copied().unwrap_or(0.0)),
            BodyKind::Ellipsoid => {
                let axes: Vec<String> = self.semi_axes.iter().map(|a| a.to_string()).collect();
                format!("ellipsoid:{}", axes.join("x"))
            }
        }
    }

    pub fn radii_summary(&self) -> Result<RadiiSummary> {
        match self.d() {
            1 => Ok(self.to_body::<1>()?.radii_summary()),
            2 => Ok(self.to_body::<2>()?.radii_summary()),
            3 => Ok(self.to_body::<3>()?.radii_summary()),
            d => Err(Error::domain(format!("bodies are supported in d = 1..=3, got {d}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub body: BodySpec,
    pub r: f64,
    pub n_grid: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    /// Inner sample size for Monte Carlo volume estimates.
    pub mc_inner_m: u64,
    /// Record per-row wall-clock time; off keeps outputs byte-stable.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn d(&self) -> usize {
        self.body.d()
    }

    /// Structural checks and the curvature gate.
    pub fn check(&self) -> Result<()> {
        let d = self.d();
        if !(2..=3).contains(&d) {
            return Err(Error::domain(format!("experiments run in d = 2 or 3, got {d}")));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {}", self.r)));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.name == ExperimentName::EtaEstimate && self.trials < 100 {
            return Err(Error::domain(format!(
                "eta estimation needs at least 100 trials, got {}",
                self.trials
            )));
        }
        if self.mc_inner_m == 0 {
            return Err(Error::domain("inner sample size must be at least 1"));
        }
        if self.name != ExperimentName::Validate && self.name != ExperimentName::EtaEstimate {
            if self.n_grid.is_empty() {
                return Err(Error::domain("n grid is empty"));
            }
            if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::domain("n grid must be strictly increasing"));
            }
            let min_n = match self.name {
                ExperimentName::FacetCurve | ExperimentName::SlopeFit => d as u64,
                _ => 2,
            };
            if self.n_grid[0] < min_n {
                return Err(Error::domain(format!(
                    "{} needs n >= {min_n}, got {}",
                    self.name, self.n_grid[0]
                )));
            }
        }
        check_gate(self.name, &self.body, self.r)
    }
}

/// Shortest decimal rendering with at most six fractional digits.
fn short(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_owned()
}

/// Rejects bodies outside the curvature regime an experiment is meant for.
///
/// Facet curves take a ball of radius exactly `r` or a body with largest
/// radius of curvature `R < r`; slope fits need `R < r`; the remaining
/// sampling experiments need `R ≤ r` so the body is `r`-hyperconvex.
pub fn check_gate(name: ExperimentName, body: &BodySpec, r: f64) -> Result<()> {
    let s = body.radii_summary()?;
    let (ok, need) = match name {
        ExperimentName::FacetCurve => (
            (body.kind == BodyKind::Ball && body.semi_axes[0] == r) || s.sliding_r < r,
            "a ball of radius r or a body with largest radius of curvature R < r",
        ),
        ExperimentName::SlopeFit => (s.sliding_r < r, "largest radius of curvature R < r"),
        ExperimentName::Validate => (true, ""),
        _ => (
            s.sliding_r <= r,
            "an r-hyperconvex body (largest radius of curvature R <= r)",
        ),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Gate(format!(
            "{name} needs {need}; {} has R = {} and r = {}",
            body.label(),
            short(s.sliding_r),
            short(r)
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Sub-series tag; empty for single-series experiments.
    pub label: String,
    pub n: u64,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
    pub wall_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
    pub fit: Option<SlopeFit>,
    pub validation: Option<ValidationReport>,
}

pub fn row_seed(master: u64, name: ExperimentName, label: &str, n: u64) -> u64 {
    derive_seed(master, &[name.as_str().into(), label.into(), n.into()])
}

fn trial_rng(row_seed: u64, trial: u64) -> (ChaCha8Rng, u64) {
    let seed = derive_seed(row_seed, &[Label::Int(trial)]);
    (ChaCha8Rng::seed_from_u64(seed), seed)
}

/// Runs `trials` independent evaluations in parallel and folds them in
/// trial order. The first failing trial (by index) aborts the row.
fn run_trials<F>(row_seed: u64, trials: u64, f: F) -> Result<Estimator>
where
    F: Fn(&mut ChaCha8Rng, u64) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (mut rng, seed) = trial_rng(row_seed, t);
            f(&mut rng, seed)
        })
        .collect();
    let mut e = Estimator::new();
    for v in values {
        e.push(v?);
    }
    Ok(e)
}

fn timed<T>(timing: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, u64)> {
    let start = Instant::now();
    let out = f()?;
    let ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok((out, ms))
}

#[derive(Clone, Copy)]
enum CurveStat {
    Facets,
    Vertices,
    MissedVolume,
}

fn curve_rows<const D: usize>(spec: &ExperimentSpec, stat: CurveStat) -> Result<Vec<ResultRow>>
where
    Point<D>: ConvexHull,
{
    let body = spec.body.to_body::<D>()?;
    let inner = spec.mc_inner_m as usize;
    let volume = body.volume();
    let mut rows = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let seed = row_seed(spec.master_seed, spec.name, "", n);
        let (est, wall_ms) = timed(spec.timing, || {
            run_trials(seed, spec.trials, |rng, trial_seed| {
                let sample = SampleInstance::draw(body, spec.r, n as usize, rng, trial_seed)?;
                Ok(match stat {
                    CurveStat::Facets => enumerate_facets(&sample, EnumerationMode::HullFiltered)?.facet_count as f64,
                    CurveStat::Vertices => count_vertices(&sample)?.len() as f64,
                    CurveStat::MissedVolume => {
                        let (f, _) = estimate_missed_fraction(&sample, rng, inner)?;
                        n as f64 * volume * f
                    }
                })
            })
        })?;
        log::info!("{} n={n}: mean {:.6} ± {:.6}", spec.name, est.mean(), est.stderr());
        rows.push(ResultRow {
            label: String::new(),
            n,
            trials: spec.trials,
            mean: est.mean(),
            stderr: est.stderr(),
            seed,
            wall_ms,
        });
    }
    Ok(rows)
}

macro_rules! by_dim {
    ($d:expr, $f:ident :: <_> ( $($arg:expr),* )) => {
        match $d {
            2 => $f::<2>($($arg),*),
            3 => $f::<3>($($arg),*),
            d => Err(Error::domain(format!("experiments run in d = 2 or 3, got {d}"))),
        }
    };
}

/// Runs one experiment after [`ExperimentSpec::check`].
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.check()?;
    let d = spec.d();
    let mut fit = None;
    let mut validation = None;
    let rows = match spec.name {
        ExperimentName::FacetCurve => by_dim!(d, curve_rows::<_>(spec, CurveStat::Facets))?,
        ExperimentName::VertexCurve => by_dim!(d, curve_rows::<_>(spec, CurveStat::Vertices))?,
        ExperimentName::MissedVolumeCurve => by_dim!(d, curve_rows::<_>(spec, CurveStat::MissedVolume))?,
        ExperimentName::SlopeFit => {
            let rows = by_dim!(d, curve_rows::<_>(spec, CurveStat::Facets))?;
            fit = Some(fit_loglog_slope(&rows, 0..rows.len())?);
            rows
        }
        ExperimentName::EtaEstimate => by_dim!(d, eta_rows::<_>(spec))?,
        ExperimentName::EfronCheck => by_dim!(d, efron_rows::<_>(spec))?,
        ExperimentName::Validate => {
            let opts = ValidationOptions {
                bp_m: spec.mc_inner_m as usize,
                half_sphere_m: spec.mc_inner_m as usize,
                ..ValidationOptions::default()
            };
            let report = run_validation_suite(spec.master_seed, &opts)?;
            let rows = report
                .items
                .iter()
                .map(|item| ResultRow {
                    label: item.name.clone(),
                    n: item.m,
                    trials: 1,
                    mean: item.measured,
                    stderr: item.stderr,
                    seed: item.seed,
                    wall_ms: 0,
                })
                .collect();
            validation = Some(report);
            rows
        }
    };
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows,
        fit,
        validation,
    })
}

fn eta_rows<const D: usize>(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let body = spec.body.to_body::<D>()?;
    let seed = row_seed(spec.master_seed, ExperimentName::EtaEstimate, "", D as u64);
    let (est, wall_ms) = timed(spec.timing, || {
        estimate_eta(&body, spec.r, spec.trials, spec.master_seed)
    })?;
    Ok(vec![ResultRow {
        label: String::new(),
        n: D as u64,
        trials: spec.trials,
        mean: est.value,
        stderr: est.stderr,
        seed,
        wall_ms,
    }])
}

/// Probability that `D` uniform points of the body admit a radius-`r`
/// sphere through them, with its binomial standard error.
pub fn estimate_eta<const D: usize>(body: &Body<D>, r: f64, trials: u64, master_seed: u64) -> Result<Estimate> {
    if trials < 100 {
        return Err(Error::domain(format!(
            "eta estimation needs at least 100 trials, got {trials}"
        )));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    let seed = row_seed(master_seed, ExperimentName::EtaEstimate, "", D as u64);
    let est = run_trials(seed, trials, |rng, _| {
        let pts = body.sample_uniform(rng, D);
        Ok(match radius_r_centers(&pts, r) {
            Ok(Some(_)) => 1.0,
            Ok(None) | Err(Error::Degenerate(_)) => 0.0,
            Err(e) => return Err(e),
        })
    })?;
    let p = est.mean();
    Ok(Estimate {
        value: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

/// Both sides of the vertex-count identity at one `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfronCheck {
    /// Mean vertex count of the ball-polytope of `n` points.
    pub lhs: Estimate,
    /// `n` times the mean missed fraction of an `(n-1)`-point ball-polytope.
    pub rhs: Estimate,
}

impl EfronCheck {
    pub fn passes(&self) -> bool {
        self.lhs.agrees_with(&self.rhs, 3.0)
    }
}

pub fn efron_check<const D: usize>(
    body: &Body<D>,
    r: f64,
    n: u64,
    trials: u64,
    inner_m: u64,
    master_seed: u64,
) -> Result<EfronCheck>
where
    Point<D>: ConvexHull,
{
    if n < 2 {
        return Err(Error::domain(format!("vertex identity needs n >= 2, got {n}")));
    }
    if inner_m == 0 {
        return Err(Error::domain("inner sample size must be at least 1"));
    }
    let lhs_seed = row_seed(master_seed, ExperimentName::EfronCheck, "lhs", n);
    let lhs = run_trials(lhs_seed, trials, |rng, seed| {
        let sample = SampleInstance::draw(*body, r, n as usize, rng, seed)?;
        Ok(count_vertices(&sample)?.len() as f64)
    })?;
    let rhs_seed = row_seed(master_seed, ExperimentName::EfronCheck, "rhs", n);
    let rhs = run_trials(rhs_seed, trials, |rng, seed| {
        let sample = SampleInstance::draw(*body, r, n as usize - 1, rng, seed)?;
        let (f, _) = estimate_missed_fraction(&sample, rng, inner_m as usize)?;
        Ok(n as f64 * f)
    })?;
    Ok(EfronCheck {
        lhs: lhs.scaled(1.0),
        rhs: rhs.scaled(1.0),
    })
}

fn efron_rows<const D: usize>(spec: &ExperimentSpec) -> Result<Vec<ResultRow>>
where
    Point<D>: ConvexHull,
{
    let body = spec.body.to_body::<D>()?;
    let mut rows = Vec::new();
    for &n in &spec.n_grid {
        let (check, wall_ms) = timed(spec.timing, || {
            efron_check(&body, spec.r, n, spec.trials, spec.mc_inner_m, spec.master_seed)
        })?;
        for (label, est) in [("lhs", check.lhs), ("rhs", check.rhs)] {
            rows.push(ResultRow {
                label: label.to_owned(),
                n,
                trials: spec.trials,
                mean: est.value,
                stderr: est.stderr,
                seed: row_seed(spec.master_seed, ExperimentName::EfronCheck, label, n),
                wall_ms,
            });
        }
    }
    Ok(rows)
}

/// Least-squares line through `(ln n, ln mean)` over `rows[window]`.
///
/// Points are weighted by `(mean / stderr)²`, the inverse variance of
/// `ln mean`; if any standard error is zero the fit is unweighted and the
/// slope error comes from the residuals.
pub fn fit_loglog_slope(rows: &[ResultRow], window: Range<usize>) -> Result<SlopeFit> {
    let rows = rows
        .get(window.clone())
        .ok_or_else(|| Error::domain(format!("window {window:?} outside {} rows", rows.len())))?;
    if rows.len() < 3 {
        return Err(Error::domain(format!(
            "slope fit needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    if let Some(row) = rows.iter().find(|row| !(row.mean > 0.0) || row.n == 0) {
        return Err(Error::domain(format!(
            "slope fit needs positive means, got {} at n = {}",
            row.mean, row.n
        )));
    }
    let weighted = rows.iter().all(|row| row.stderr > 0.0);
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|row| {
            let w = if weighted { (row.mean / row.stderr).powi(2) } else { 1.0 };
            ((row.n as f64).ln(), row.mean.ln(), w)
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar) * (p.1 - ybar)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("slope fit needs distinct n".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (pts.len() - 2) as f64 / sxx).sqrt()
    };
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Monte Carlo size per side of each change-of-variables check.
    pub bp_m: usize,
    pub half_sphere_m: usize,
    /// Random (profile, t) pairs for the Jacobian comparison.
    pub jacobian_pairs: usize,
    /// Added to every closed-form Jacobian value; nonzero only to exercise
    /// the failure path.
    pub jacobian_fault: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            bp_m: 10_000_000,
            half_sphere_m: 10_000_000,
            jacobian_pairs: 100,
            jacobian_fault: 0.0,
        }
    }
}

/// How an item's `discrepancy` is compared with its `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `|measured - expected|` in combined standard errors, at most tolerance.
    CombinedSe,
    /// `|measured / expected - 1|`, at most tolerance.
    Relative,
    /// `|measured / expected - 1|`, required to exceed tolerance.
    MustExceed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationItem {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub stderr: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub metric: Metric,
    /// Monte Carlo or trial count behind the item (1 for deterministic ones).
    pub m: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub items: Vec<ValidationItem>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn item(&self, name: &str) -> Option<&ValidationItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

struct ItemBuilder {
    name: String,
    measured: f64,
    expected: f64,
    stderr: f64,
    tolerance: f64,
    metric: Metric,
    m: u64,
    seed: u64,
}

impl ItemBuilder {
    fn build(self) -> ValidationItem {
        let discrepancy = match self.metric {
            Metric::CombinedSe => {
                let gap = (self.measured - self.expected).abs();
                if self.stderr > 0.0 {
                    gap / self.stderr
                } else if gap == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Metric::Relative | Metric::MustExceed => (self.measured / self.expected - 1.0).abs(),
        };
        let passed = match self.metric {
            Metric::MustExceed => discrepancy > self.tolerance,
            _ => discrepancy <= self.tolerance,
        };
        ValidationItem {
            name: self.name,
            passed,
            measured: self.measured,
            expected: self.expected,
            stderr: self.stderr,
            discrepancy,
            tolerance: self.tolerance,
            metric: self.metric,
            m: self.m,
            seed: self.seed,
        }
    }
}

/// Runs the numerical checks of the integral formulas and reports each one.
pub fn run_validation_suite(master_seed: u64, opts: &ValidationOptions) -> Result<ValidationReport> {
    let seed_for = |name: &str| derive_seed(master_seed, &["validate".into(), name.into()]);
    let mut items = Vec::new();

    for (d, f) in [
        (2, BpTestFunction::ConstantOne),
        (2, BpTestFunction::BallIndicator),
        (2, BpTestFunction::CoordinateSquares),
        (3, BpTestFunction::ConstantOne),
    ] {
        let name = format!("bp-d{d}-{}", f.name());
        let seed = seed_for(&name);
        let c = analytic::bp_identity_check(d, 1.0, f, &mut ChaCha8Rng::seed_from_u64(seed), opts.bp_m)?;
        items.push(
            ItemBuilder {
                name,
                measured: c.lhs.value,
                expected: c.rhs.value,
                stderr: c.lhs.stderr.hypot(c.rhs.stderr),
                tolerance: 3.0,
                metric: Metric::CombinedSe,
                m: opts.bp_m as u64,
                seed,
            }
            .build(),
        );
    }

    for (d, tol) in [(2, 0.005), (3, 0.01)] {
        let name = format!("half-sphere-d{d}");
        let seed = seed_for(&name);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mc = analytic::half_sphere_integral(d, HalfSphereMode::MonteCarlo, &mut rng, opts.half_sphere_m)?;
        let exact = analytic::half_sphere_integral(d, HalfSphereMode::Constant, &mut rng, 0)?;
        items.push(
            ItemBuilder {
                name,
                measured: mc.value,
                expected: exact.value,
                stderr: mc.stderr,
                tolerance: tol,
                metric: Metric::Relative,
                m: opts.half_sphere_m as u64,
                seed,
            }
            .build(),
        );
    }

    for (alpha, beta, g) in [(1.0, 0.0, 0.5), (1.0, 1.0, 0.5), (1.5, 1.0, 0.3)] {
        let n = 1_000_000;
        let b = analytic::beta_integral(alpha, beta, 1.0, n, g)?;
        items.push(
            ItemBuilder {
                name: format!("beta-a{alpha}-b{beta}"),
                measured: b.quadrature,
                expected: b.asymptotic,
                stderr: 0.0,
                tolerance: 0.02,
                metric: Metric::Relative,
                m: n,
                seed: 0,
            }
            .build(),
        );
    }
    {
        // β + 1 ≠ d + 1 with ω ≠ 1: the printed exponent must miss.
        let n = 1_000_000;
        let b = analytic::beta_integral_printed(1.5, 1.0, 2.0, n, 0.3, 2)?;
        items.push(
            ItemBuilder {
                name: "beta-printed-exponent".into(),
                measured: b.quadrature,
                expected: b.asymptotic,
                stderr: 0.0,
                tolerance: 0.02,
                metric: Metric::MustExceed,
                m: n,
                seed: 0,
            }
            .build(),
        );
    }

    {
        let name = "phi-jacobian-fd";
        let seed = seed_for(name);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = (0.0, 1.0, 1.0);
        for _ in 0..opts.jacobian_pairs {
            let (profile, t) = random_profile(&mut rng)?;
            let closed = analytic::phi_jacobian(&profile, t)? + opts.jacobian_fault;
            let fd = analytic::phi_jacobian_fd(&profile, t)?;
            let gap = (closed / fd - 1.0).abs();
            if gap >= worst.0 {
                worst = (gap, closed, fd);
            }
        }
        items.push(
            ItemBuilder {
                name: name.into(),
                measured: worst.1,
                expected: worst.2,
                stderr: 0.0,
                tolerance: 1e-6,
                metric: Metric::Relative,
                m: opts.jacobian_pairs as u64,
                seed,
            }
            .build(),
        );
    }
    {
        let mut worst = (0.0, 1.0, 1.0);
        for d in 2..=5 {
            let profile = CurvatureProfile::ball(d, 1.0)?;
            for t in [1e-3, 0.1, 0.7, 1.9] {
                let v = analytic::phi_jacobian(&profile, t)? + opts.jacobian_fault;
                let exact: f64 = std::iter::repeat_n(t, d - 1).product();
                let gap = (v / exact - 1.0).abs();
                if gap >= worst.0 {
                    worst = (gap, v, exact);
                }
            }
        }
        items.push(
            ItemBuilder {
                name: "phi-jacobian-unit-ball".into(),
                measured: worst.1,
                expected: worst.2,
                stderr: 0.0,
                tolerance: 0.0,
                metric: Metric::Relative,
                m: 1,
                seed: 0,
            }
            .build(),
        );
    }

    for d in 2..=5 {
        items.push(
            ItemBuilder {
                name: format!("cap-slope-d{d}"),
                measured: analytic::cap_volume_slope_check(d)?,
                expected: kappa(d - 1),
                stderr: 0.0,
                tolerance: 1e-4,
                metric: Metric::Relative,
                m: 1,
                seed: 0,
            }
            .build(),
        );
    }
    for d in 2..=3 {
        let t: f64 = 1e-4;
        let c = analytic::cap_asymptotic_constant(&CurvatureProfile::ball(d, 0.5)?)?;
        let scaled = analytic::ball_cap_volume(d, 0.5, t)? * t.powf(-((d + 1) as f64) / 2.0);
        items.push(
            ItemBuilder {
                name: format!("cap-constant-d{d}"),
                measured: scaled,
                expected: c,
                stderr: 0.0,
                tolerance: 1e-3,
                metric: Metric::Relative,
                m: 1,
                seed: 0,
            }
            .build(),
        );
    }

    for item in &items {
        log::info!(
            "{} {}: measured {:.10e} expected {:.10e} discrepancy {:.3e}",
            if item.passed { "pass" } else { "FAIL" },
            item.name,
            item.measured,
            item.expected,
            item.discrepancy
        );
    }
    Ok(ValidationReport { items })
}

/// A random principal-radius profile in `d ∈ 2..=5` with radii in
/// `[0.05, 1]`, and a height `t ∈ [0.01, 2)`.
pub fn random_profile<R: rand::Rng + ?Sized>(rng: &mut R) -> Result<(CurvatureProfile, f64)> {
    let d = rng.gen_range(2..=5);
    let radii = (0..d - 1).map(|_| rng.gen_range(0.05..=1.0)).collect();
    Ok((CurvatureProfile::new(d, radii)?, rng.gen_range(0.01..2.0)))
}

/// Worker pool sized by `threads`, else by `SPINDLE_THREADS`, else by the
/// hardware.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let threads = match threads {
        Some(t) => t,
        None => match std::env::var("SPINDLE_THREADS") {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::domain(format!("SPINDLE_THREADS must be a positive integer, got `{v}`")))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn spec(name: ExperimentName, body: BodySpec, n_grid: Vec<u64>, trials: u64) -> ExperimentSpec {
        ExperimentSpec {
            name,
            body,
            r: 1.0,
            n_grid,
            trials,
            master_seed: 17,
            mc_inner_m: 2000,
            timing: false,
        }
    }

    #[test]
    fn two_point_facet_curve_is_exact() {
        let s = spec(ExperimentName::FacetCurve, BodySpec::ball(2, 1.0), vec![2], 50);
        let res = run(&s).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.rows[0].mean, 2.0);
        assert_eq!(res.rows[0].stderr, 0.0);
    }

    #[test]
    fn gates() {
        let slope = spec(
            ExperimentName::SlopeFit,
            BodySpec::ellipsoid(vec![0.9, 0.5]),
            vec![8, 16, 32],
            5,
        );
        let err = run(&slope).unwrap_err();
        assert!(matches!(err, Error::Gate(_)));
        assert!(err.to_string().contains("R = 1.62"), "{err}");
        let ball = spec(ExperimentName::SlopeFit, BodySpec::ball(2, 1.0), vec![8, 16, 32], 5);
        assert!(matches!(run(&ball), Err(Error::Gate(_))));
        let facets = spec(ExperimentName::FacetCurve, BodySpec::ball(2, 1.0), vec![8], 5);
        assert!(facets.check().is_ok());
        let big = spec(ExperimentName::VertexCurve, BodySpec::ball(2, 1.5), vec![8], 5);
        assert!(matches!(big.check(), Err(Error::Gate(_))));
        let vertices = spec(ExperimentName::VertexCurve, BodySpec::ball(2, 1.0), vec![8], 5);
        assert!(vertices.check().is_ok());
        let unsorted = spec(ExperimentName::VertexCurve, BodySpec::ball(2, 1.0), vec![8, 8], 5);
        assert!(matches!(unsorted.check(), Err(Error::Domain(_))));
    }

    #[test]
    fn rows_do_not_depend_on_thread_count() {
        let s = spec(
            ExperimentName::FacetCurve,
            BodySpec::ellipsoid(vec![0.6, 0.5]),
            vec![16, 64],
            24,
        );
        let one = thread_pool(Some(1)).unwrap().install(|| run(&s)).unwrap();
        let many = thread_pool(Some(4)).unwrap().install(|| run(&s)).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn eta_in_the_plane_is_one() {
        let e = estimate_eta(&Body::<2>::unit_ball(), 1.0, 1000, 3).unwrap();
        assert_eq!(e.value, 1.0);
        let e3 = estimate_eta(&Body::<3>::unit_ball(), 1.0, 20_000, 3).unwrap();
        assert!(e3.value > 3.0 * e3.stderr && e3.value + 3.0 * e3.stderr < 1.0);
        assert!(estimate_eta(&Body::<3>::unit_ball(), 1.0, 99, 3).is_err());
        // The coordinate triple has circumradius √(2/3) < 1.
        let tri = [
            Point::new([1.0, 0.0, 0.0]),
            Point::new([0.0, 1.0, 0.0]),
            Point::new([0.0, 0.0, 1.0]),
        ];
        assert!(radius_r_centers(&tri, 1.0).unwrap().is_some());
        let wide = [
            Point::new([1.0, 0.0, 0.0]),
            Point::new([-0.5, 0.866, 0.0]),
            Point::new([-0.5, -0.866, 0.0]),
        ];
        assert!(radius_r_centers(&wide, 0.9).unwrap().is_none());
    }

    #[test]
    fn efron_with_two_points() {
        let c = efron_check(&Body::<2>::unit_ball(), 1.0, 2, 100, 100, 1).unwrap();
        assert_eq!(c.lhs.value, 2.0);
        assert_eq!(c.rhs.value, 2.0);
    }

    #[test]
    fn efron_small_agreement() {
        let c = efron_check(&Body::<2>::unit_ball(), 1.0, 12, 400, 2000, 5).unwrap();
        assert!(c.passes(), "{c:?}");
    }

    fn synthetic(f: impl Fn(f64) -> f64, stderr: f64) -> Vec<ResultRow> {
        [128u64, 256, 512, 1024, 2048]
            .iter()
            .map(|&n| ResultRow {
                label: String::new(),
                n,
                trials: 1,
                mean: f(n as f64),
                stderr,
                seed: 0,
                wall_ms: 0,
            })
            .collect()
    }

    #[test]
    fn slope_of_power_laws() {
        let rows = synthetic(|n| 3.0 * n.cbrt(), 0.0);
        let fit = fit_loglog_slope(&rows, 0..rows.len()).unwrap();
        assert!((fit.slope - 1.0 / 3.0).abs() < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
        let flat = synthetic(|_| 5.0, 0.1);
        let fit = fit_loglog_slope(&flat, 0..flat.len()).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(fit.stderr > 0.0);
        assert!(fit_loglog_slope(&rows, 0..2).is_err());
        assert!(fit_loglog_slope(&rows, 3..9).is_err());
        let neg = synthetic(|n| 10.0 - n, 0.0);
        assert!(matches!(fit_loglog_slope(&neg, 0..5), Err(Error::Domain(_))));
    }

    #[test]
    fn validation_suite_quick_and_fault_injection() {
        let quick = ValidationOptions {
            bp_m: 100_000,
            half_sphere_m: 400_000,
            jacobian_pairs: 30,
            jacobian_fault: 0.0,
        };
        let report = run_validation_suite(11, &quick).unwrap();
        let failed: Vec<&str> = report
            .items
            .iter()
            .filter(|i| !i.passed && !i.name.starts_with("half-sphere"))
            .map(|i| i.name.as_str())
            .collect();
        assert!(failed.is_empty(), "{failed:?}");
        let faulty = ValidationOptions {
            jacobian_fault: 1e-3,
            ..quick
        };
        let report = run_validation_suite(11, &faulty).unwrap();
        assert!(!report.item("phi-jacobian-fd").unwrap().passed);
        assert!(!report.all_passed());
    }

    #[test]
    fn names_round_trip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        assert!("facets".parse::<ExperimentName>().is_err());
    }
}
