//! End-to-end acceptance run. Prints one `[PASS]` or `[FAIL]` line per
//! criterion and exits nonzero if any criterion fails.
//!
//! Set `SPINDLE_ACCEPT=3,5` to run a subset.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spindle_core::ballhull::{count_vertices, enumerate_facets, EnumerationMode, SampleInstance};
use spindle_core::body::Body;
use spindle_core::geom::Point;
use spindle_core::hull::ConvexHull;
use spindle_core::montecarlo::{
    efron_check, estimate_eta, run, run_validation_suite, BodySpec, ExperimentName, ExperimentResult, ExperimentSpec,
    ValidationOptions, ValidationReport,
};
use spindle_core::output::read_manifest;

const MASTER: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn spec(name: ExperimentName, body: BodySpec, n_grid: Vec<u64>, trials: u64) -> ExperimentSpec {
    ExperimentSpec {
        name,
        body,
        r: 1.0,
        n_grid,
        trials,
        master_seed: MASTER,
        mc_inner_m: 10_000,
        timing: false,
    }
}

fn run_ok(s: &ExperimentSpec) -> ExperimentResult {
    run(s).unwrap_or_else(|e| panic!("{} failed: {e}", s.name))
}

fn powers(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 1u64 << k).collect()
}

fn planar_limit() -> Outcome {
    let res = run_ok(&spec(
        ExperimentName::FacetCurve,
        BodySpec::ball(2, 1.0),
        vec![10_000],
        300,
    ));
    let row = &res.rows[0];
    let target = PI * PI / 2.0;
    let rel = (row.mean / target - 1.0).abs();
    outcome(
        rel <= 0.05,
        format!(
            "mean {:.4} ± {:.4} vs pi^2/2 = {target:.4}, off by {:.2}%",
            row.mean,
            row.stderr,
            100.0 * rel
        ),
    )
}

fn spatial_self_consistency() -> Outcome {
    let eta = estimate_eta(&Body::<3>::unit_ball(), 1.0, 1_000_000, MASTER).unwrap();
    let res = run_ok(&spec(
        ExperimentName::FacetCurve,
        BodySpec::ball(3, 1.0),
        vec![20_000],
        200,
    ));
    let row = &res.rows[0];
    let scale = 4.0 * PI * PI / 3.0;
    let pred = eta.value * scale;
    let gap = (row.mean - pred).abs();
    let se = row.stderr.hypot(eta.stderr * scale);
    let allowed = (3.0 * se).max(0.07 * pred);
    outcome(
        gap <= allowed,
        format!(
            "eta_3 {:.5} ± {:.5}; mean {:.4} ± {:.4} vs eta_3 * 4pi^2/3 = {pred:.4}; gap {gap:.4}, allowed {allowed:.4}",
            eta.value, eta.stderr, row.mean, row.stderr
        ),
    )
}

fn slope(d: usize, body: BodySpec, grid: Vec<u64>, trials: u64, want: f64, tol: f64) -> (bool, String) {
    let label = body.label();
    let res = run_ok(&spec(ExperimentName::SlopeFit, body, grid, trials));
    let fit = res.fit.expect("slope runs carry a fit");
    let ok = (fit.slope - want).abs() <= tol;
    (
        ok,
        format!(
            "d={d} {label}: slope {:.4} ± {:.4} (want {want:.4} ± {tol})",
            fit.slope, fit.stderr
        ),
    )
}

fn planar_growth() -> Outcome {
    let a = slope(2, BodySpec::ball(2, 0.5), powers(7, 13), 200, 1.0 / 3.0, 0.05);
    let b = slope(
        2,
        BodySpec::ellipsoid(vec![0.6, 0.5]),
        powers(7, 13),
        200,
        1.0 / 3.0,
        0.05,
    );
    outcome(a.0 && b.0, format!("{}; {}", a.1, b.1))
}

fn spatial_growth() -> Outcome {
    let (ok, msg) = slope(3, BodySpec::ball(3, 0.5), powers(7, 12), 100, 0.5, 0.07);
    outcome(ok, msg)
}

fn efron() -> Outcome {
    let a = efron_check(&Body::<2>::unit_ball(), 1.0, 50, 2000, 10_000, MASTER).unwrap();
    let b = efron_check(&Body::<3>::unit_ball(), 1.0, 30, 2000, 10_000, MASTER).unwrap();
    let show = |d: usize, n: u64, c: &spindle_core::montecarlo::EfronCheck| {
        format!(
            "d={d} n={n}: lhs {:.4} ± {:.4}, rhs {:.4} ± {:.4}",
            c.lhs.value, c.lhs.stderr, c.rhs.value, c.rhs.stderr
        )
    };
    outcome(
        a.passes() && b.passes(),
        format!("{}; {}", show(2, 50, &a), show(3, 30, &b)),
    )
}

fn missed_volume() -> Outcome {
    let grid = vec![500, 1000, 2000, 4000, 8000];
    let res = run_ok(&spec(
        ExperimentName::MissedVolumeCurve,
        BodySpec::ball(2, 1.0),
        grid,
        400,
    ));
    let last = res.rows.last().unwrap().mean;
    let flat = res.rows.iter().all(|r| (r.mean / last - 1.0).abs() <= 0.10);
    let target = PI.powi(3) / 2.0;
    let near = (last / target - 1.0).abs() <= 0.10;
    let means: Vec<String> = res.rows.iter().map(|r| format!("{}:{:.3}", r.n, r.mean)).collect();
    outcome(
        flat && near,
        format!(
            "n*missed {} ; at 8000 {last:.3} vs pi^3/2 = {target:.3}; flat {flat}",
            means.join(" ")
        ),
    )
}

fn items(report: &ValidationReport, names: &[&str]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        match report.item(name) {
            Some(i) => {
                ok &= i.passed;
                parts.push(format!(
                    "{name} {} ({:.6e} vs {:.6e}, {:.3e} / {:.1e})",
                    if i.passed { "ok" } else { "FAILED" },
                    i.measured,
                    i.expected,
                    i.discrepancy,
                    i.tolerance
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn instance_equivalence() -> Outcome {
    fn one<const D: usize>(body: Body<D>, n: usize, seed: u64) -> Result<(), String>
    where
        Point<D>: ConvexHull,
    {
        let s = SampleInstance::draw_seeded(body, 1.0, n, seed).map_err(|e| e.to_string())?;
        let slow = enumerate_facets(&s, EnumerationMode::Oracle).map_err(|e| e.to_string())?;
        let fast = enumerate_facets(&s, EnumerationMode::HullFiltered).map_err(|e| e.to_string())?;
        let key = |h: &spindle_core::ballhull::HullSummary<D>| {
            h.facets.iter().map(|f| (f.indices, f.side)).collect::<Vec<_>>()
        };
        if key(&slow) != key(&fast) {
            return Err(format!("facet sets differ (d={D}, n={n}, seed {seed})"));
        }
        let euclid = Point::<D>::hull_vertices(&s.points);
        let v = count_vertices(&s).map_err(|e| e.to_string())?;
        if !v.iter().all(|i| euclid.contains(i)) {
            return Err(format!("non-hull vertex (d={D}, n={n}, seed {seed})"));
        }
        Ok(())
    }
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER);
    let mut failures = Vec::new();
    for k in 0..200u64 {
        let seed = rng.gen();
        let ball = k % 2 == 0;
        let r = if k % 4 < 2 {
            let n = rng.gen_range(2..=40);
            let body = if ball {
                Body::ball(Point::origin(), 0.5).unwrap()
            } else {
                Body::ellipsoid(Point::origin(), [0.6, 0.5]).unwrap()
            };
            one::<2>(body, n, seed)
        } else {
            let n = rng.gen_range(3..=40);
            let body = if ball {
                Body::ball(Point::origin(), 0.5).unwrap()
            } else {
                Body::ellipsoid(Point::origin(), [0.6, 0.5, 0.55]).unwrap()
            };
            one::<3>(body, n, seed)
        };
        if let Err(e) = r {
            failures.push(e);
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "200 instances: facet sets identical, vertices on the Euclidean hull".to_owned()
        } else {
            format!("{} of 200 failed: {}", failures.len(), failures.join("; "))
        },
    )
}

const REPRO_CONFIG: &str = r#"
[plane-facets]
experiment = "facet-curve"
d = 2
radius = 1.0
n_grid = [200, 400]
trials = 40
seed = 11

[ellipse-missed]
experiment = "missed-volume"
d = 2
body = "ellipsoid"
axes = [0.6, 0.5]
n_grid = [100, 200]
trials = 20
inner_m = 2000
seed = 12

[space-efron]
experiment = "efron"
d = 3
axes = [0.5, 0.5, 0.5]
n_grid = [12]
trials = 30
inner_m = 1000
seed = 13
"#;

/// Runs every table of the config for `sub` and returns the CSV digests
/// plus the manifest's config digest.
fn cli_digests(dir: &Path, sub: &str, tag: &str, threads: Option<&str>) -> Vec<String> {
    let out_dir = dir.join(tag).join(sub);
    std::fs::create_dir_all(&out_dir).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spindle"));
    cmd.args([sub, "--config", "repro.toml", "--out"])
        .arg(&out_dir)
        .current_dir(dir);
    cmd.arg("--manifest").arg(out_dir.join(format!("{sub}.manifest.json")));
    match threads {
        Some(t) => cmd.env("SPINDLE_THREADS", t),
        None => cmd.env_remove("SPINDLE_THREADS"),
    };
    let out = cmd.output().expect("spindle runs");
    assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&out_dir.join(format!("{sub}.manifest.json"))).unwrap();
    let verify = Command::new(env!("CARGO_BIN_EXE_spindle"))
        .arg("verify")
        .arg(out_dir.join(format!("{sub}.manifest.json")))
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(
        verify.status.success(),
        "verify: {}",
        String::from_utf8_lossy(&verify.stderr)
    );
    let mut v = vec![m.config_digest, m.master_seed.to_string()];
    v.extend(m.outputs.into_iter().map(|o| o.sha256));
    v
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("repro.toml"), REPRO_CONFIG).unwrap();
    let max = std::thread::available_parallelism().map_or(1, |n| n.get()).to_string();
    let mut ok = true;
    let mut notes = Vec::new();
    for sub in ["facets", "missed", "efron"] {
        let a = cli_digests(dir.path(), sub, "a", Some("1"));
        let b = cli_digests(dir.path(), sub, "b", Some("1"));
        let c = cli_digests(dir.path(), sub, "c", Some(&max));
        let d = cli_digests(dir.path(), sub, "d", None);
        // oversubscribed, so the parallel schedule runs even on one core
        let e = cli_digests(dir.path(), sub, "e", Some("4"));
        let same = a == b && a == c && a == d && a == e;
        ok &= same;
        notes.push(format!("{sub} {}", if same { "identical" } else { "DIFFERS" }));
    }
    outcome(ok, format!("threads 1, 4 and {max}: {}", notes.join(", ")))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("SPINDLE_ACCEPT")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().is_none_or(|v| v.contains(&k));

    // criteria 7 to 10 share one run of the validation suite
    let validation = OnceCell::new();
    let validation_report = || -> &ValidationReport {
        validation.get_or_init(|| run_validation_suite(MASTER, &ValidationOptions::default()).unwrap())
    };

    type Criterion<'a> = (usize, &'a str, Box<dyn FnMut() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (1, "planar facet limit", Box::new(planar_limit)),
        (
            2,
            "spatial facet limit self-consistency",
            Box::new(spatial_self_consistency),
        ),
        (3, "planar growth order", Box::new(planar_growth)),
        (4, "spatial growth order", Box::new(spatial_growth)),
        (5, "vertex-count identity", Box::new(efron)),
        (6, "missed-volume order", Box::new(missed_volume)),
        (
            7,
            "half-sphere integral",
            Box::new(|| items(validation_report(), &["half-sphere-d2", "half-sphere-d3"])),
        ),
        (
            8,
            "change-of-variables identity",
            Box::new(|| {
                let r = validation_report();
                items(
                    r,
                    &[
                        "bp-d2-constant-one",
                        "bp-d2-ball-indicator",
                        "bp-d2-coordinate-squares",
                        "bp-d3-constant-one",
                    ],
                )
            }),
        ),
        (
            9,
            "beta-integral asymptotic",
            Box::new(|| {
                let r = validation_report();
                items(
                    r,
                    &["beta-a1-b0", "beta-a1-b1", "beta-a1.5-b1", "beta-printed-exponent"],
                )
            }),
        ),
        (
            10,
            "Jacobian closed form",
            Box::new(|| {
                let r = validation_report();
                items(r, &["phi-jacobian-fd", "phi-jacobian-unit-ball"])
            }),
        ),
        (11, "oracle equivalence", Box::new(instance_equivalence)),
        (12, "reproducibility", Box::new(reproducibility)),
    ];

    let mut failed = Vec::new();
    let mut ran = 0;
    for (k, title, mut f) in criteria {
        if !wanted(k) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(&mut f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let tag = if result.passed { "[PASS]" } else { "[FAIL]" };
        println!("{tag} criterion {k} {title}: {} ({secs:.1} s)", result.detail);
        if !result.passed {
            failed.push(k);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
