//! Experiment configuration: TOML sections, command-line overrides, defaults.
//!
//! A file holds one experiment per table:
//!
//! ```toml
//! [disc]
//! experiment = "facet-curve"
//! d = 2
//! body = "ball"
//! radius = 1
//! ```
//!
//! A file without tables is read as a single section named `main`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::body::BodyKind;
use crate::error::{Error, Provenance, Result};
use crate::montecarlo::{BodySpec, ExperimentName, ExperimentSpec};

pub const DEFAULT_TRIALS: u64 = 200;
pub const DEFAULT_ETA_TRIALS: u64 = 1_000_000;
pub const DEFAULT_INNER_M: u64 = 10_000;
pub const DEFAULT_VALIDATE_M: u64 = 10_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RADIUS: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(untagged)]
enum SeedValue {
    Int(i64),
    Str(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    experiment: Option<Spanned<String>>,
    d: Option<Spanned<i64>>,
    body: Option<Spanned<String>>,
    axes: Option<Spanned<Vec<f64>>>,
    center: Option<Spanned<Vec<f64>>>,
    radius: Option<Spanned<f64>>,
    n_grid: Option<Spanned<Vec<i64>>>,
    trials: Option<Spanned<i64>>,
    seed: Option<Spanned<SeedValue>>,
    inner_m: Option<Spanned<i64>>,
    timing: Option<Spanned<bool>>,
}

/// Command-line values; each one replaces the corresponding key in every
/// selected section.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<ExperimentName>,
    pub d: Option<usize>,
    pub body: Option<BodyKind>,
    pub axes: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub n_grid: Option<Vec<u64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub inner_m: Option<u64>,
    pub timing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedSection {
    pub name: String,
    pub spec: ExperimentSpec,
}

/// Fully defaulted sections in name order.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub sections: Vec<ResolvedSection>,
}

/// A raw value together with where it came from.
struct Sourced<T> {
    value: T,
    from: Provenance,
}

struct Locator<'a> {
    path: Option<&'a Path>,
    text: &'a str,
}

impl Locator<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn at<T>(&self, s: Spanned<T>) -> Sourced<T> {
        let line = self.line_of(s.span().start);
        Sourced {
            from: match self.path {
                Some(p) => Provenance::File {
                    path: p.to_path_buf(),
                    line: Some(line),
                },
                None => Provenance::File {
                    path: PathBuf::from("<inline>"),
                    line: Some(line),
                },
            },
            value: s.into_inner(),
        }
    }
}

fn config_error(key: &str, message: impl Into<String>, provenance: Provenance) -> Error {
    Error::Config {
        key: key.to_owned(),
        message: message.into(),
        provenance,
    }
}

fn pick<T>(flag: Option<T>, flag_name: &str, raw: Option<Sourced<T>>) -> Option<Sourced<T>> {
    match flag {
        Some(value) => Some(Sourced {
            value,
            from: Provenance::Flag(flag_name.to_owned()),
        }),
        None => raw,
    }
}

fn positive_int(key: &str, v: Sourced<i64>) -> Result<Sourced<u64>> {
    if v.value < 1 {
        return Err(config_error(
            key,
            format!("must be a positive integer, got {}", v.value),
            v.from,
        ));
    }
    Ok(Sourced {
        value: v.value as u64,
        from: v.from,
    })
}

fn parse_seed(text: &str) -> Option<u64> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => t.parse().ok(),
    }
}

/// Parses an `--seed` or `seed` value: a decimal or `0x` hexadecimal `u64`.
pub fn parse_seed_text(text: &str) -> std::result::Result<u64, String> {
    parse_seed(text).ok_or_else(|| format!("`{text}` is not a decimal or 0x-hex 64-bit seed"))
}

fn default_grid(name: ExperimentName, d: usize) -> Vec<u64> {
    match name {
        ExperimentName::EfronCheck => vec![if d == 2 { 50 } else { 30 }],
        ExperimentName::MissedVolumeCurve => vec![500, 1000, 2000, 4000, 8000],
        ExperimentName::EtaEstimate | ExperimentName::Validate => vec![d as u64],
        _ => {
            let top = if d == 2 { 13 } else { 12 };
            (7..=top).map(|k| 1u64 << k).collect()
        }
    }
}

fn resolve_section(name: &str, raw: RawSection, loc: &Locator, ov: &Overrides) -> Result<ResolvedSection> {
    let experiment = match (ov.experiment, raw.experiment) {
        (Some(e), Some(r)) => {
            let r = loc.at(r);
            let parsed: ExperimentName = r
                .value
                .parse()
                .map_err(|m| config_error("experiment", m, r.from.clone()))?;
            if parsed != e {
                return Err(config_error(
                    "experiment",
                    format!("section runs `{parsed}` but the subcommand selects `{e}`"),
                    r.from,
                ));
            }
            e
        }
        (Some(e), None) => e,
        (None, Some(r)) => {
            let r = loc.at(r);
            r.value.parse().map_err(|m| config_error("experiment", m, r.from))?
        }
        (None, None) => return Err(config_error("experiment", "missing required key", Provenance::Default)),
    };

    let axes = pick(ov.axes.clone(), "axes", raw.axes.map(|s| loc.at(s)));
    let d = match pick(ov.d.map(|d| d as i64), "dim", raw.d.map(|s| loc.at(s))) {
        Some(d) => {
            if !(2..=3).contains(&d.value) {
                return Err(config_error("d", format!("must be 2 or 3, got {}", d.value), d.from));
            }
            d.value as usize
        }
        None => match (&axes, experiment) {
            (Some(a), _) => a.value.len(),
            (None, ExperimentName::Validate) => 2,
            (None, _) => return Err(config_error("d", "missing required key", Provenance::Default)),
        },
    };
    let radius = match pick(ov.radius, "radius", raw.radius.map(|s| loc.at(s))) {
        Some(r) => {
            if !(r.value.is_finite() && r.value > 0.0) {
                return Err(config_error(
                    "radius",
                    format!("must be positive, got {}", r.value),
                    r.from,
                ));
            }
            r.value
        }
        None => DEFAULT_RADIUS,
    };
    let kind = match pick(ov.body, "body", None) {
        Some(k) => k.value,
        None => match raw.body.map(|s| loc.at(s)) {
            Some(b) => match b.value.as_str() {
                "ball" => BodyKind::Ball,
                "ellipsoid" => BodyKind::Ellipsoid,
                other => {
                    return Err(config_error(
                        "body",
                        format!("unknown body `{other}` (expected ball or ellipsoid)"),
                        b.from,
                    ))
                }
            },
            None => BodyKind::Ball,
        },
    };
    let semi_axes = match axes {
        Some(a) => {
            if a.value.len() != d {
                return Err(config_error(
                    "axes",
                    format!("needs {d} values for d = {d}, got {}", a.value.len()),
                    a.from,
                ));
            }
            if a.value.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(config_error("axes", "semi-axes must be positive", a.from));
            }
            if kind == BodyKind::Ball && a.value.iter().any(|x| *x != a.value[0]) {
                return Err(config_error("axes", "a ball needs equal semi-axes", a.from));
            }
            a.value
        }
        None if kind == BodyKind::Ball => vec![radius; d],
        None => {
            return Err(config_error(
                "axes",
                "missing required key for an ellipsoid",
                Provenance::Default,
            ))
        }
    };
    let center = match pick(ov.center.clone(), "center", raw.center.map(|s| loc.at(s))) {
        Some(c) => {
            if c.value.len() != d || c.value.iter().any(|x| !x.is_finite()) {
                return Err(config_error("center", format!("needs {d} finite values"), c.from));
            }
            c.value
        }
        None => vec![0.0; d],
    };
    let n_grid = match ov.n_grid.clone() {
        Some(g) => Sourced {
            value: g,
            from: Provenance::Flag("n-grid".into()),
        },
        None => match raw.n_grid.map(|s| loc.at(s)) {
            Some(g) => {
                if let Some(bad) = g.value.iter().find(|n| **n < 1) {
                    return Err(config_error(
                        "n_grid",
                        format!("entries must be positive, got {bad}"),
                        g.from,
                    ));
                }
                Sourced {
                    value: g.value.iter().map(|n| *n as u64).collect(),
                    from: g.from,
                }
            }
            None => Sourced {
                value: default_grid(experiment, d),
                from: Provenance::Default,
            },
        },
    };
    if n_grid.value.is_empty() || n_grid.value.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_error(
            "n_grid",
            "must be a nonempty strictly increasing list",
            n_grid.from,
        ));
    }
    let trials = match ov.trials {
        Some(t) => t,
        None => match raw.trials {
            Some(t) => positive_int("trials", loc.at(t))?.value,
            None if experiment == ExperimentName::EtaEstimate => DEFAULT_ETA_TRIALS,
            None => DEFAULT_TRIALS,
        },
    };
    if trials == 0 {
        return Err(config_error(
            "trials",
            "must be at least 1",
            Provenance::Flag("trials".into()),
        ));
    }
    let master_seed = match ov.seed {
        Some(s) => s,
        None => match raw.seed.map(|s| loc.at(s)) {
            Some(Sourced {
                value: SeedValue::Int(v),
                from,
            }) => {
                if v < 0 {
                    return Err(config_error("seed", "must be nonnegative", from));
                }
                v as u64
            }
            Some(Sourced {
                value: SeedValue::Str(s),
                from,
            }) => parse_seed_text(&s).map_err(|m| config_error("seed", m, from))?,
            None => DEFAULT_SEED,
        },
    };
    let mc_inner_m = match ov.inner_m {
        Some(m) if m >= 1 => m,
        Some(_) => {
            return Err(config_error(
                "inner_m",
                "must be at least 1",
                Provenance::Flag("inner-m".into()),
            ))
        }
        None => match raw.inner_m {
            Some(m) => positive_int("inner_m", loc.at(m))?.value,
            None if experiment == ExperimentName::Validate => DEFAULT_VALIDATE_M,
            None => DEFAULT_INNER_M,
        },
    };
    let timing = ov.timing.or(raw.timing.map(|t| t.into_inner())).unwrap_or(false);

    let spec = ExperimentSpec {
        name: experiment,
        body: BodySpec {
            kind,
            semi_axes,
            center,
        },
        r: radius,
        n_grid: n_grid.value,
        trials,
        master_seed,
        mc_inner_m,
        timing,
    };
    spec.check().map_err(|e| match e {
        Error::Domain(m) => config_error(name, m, Provenance::Default),
        other => other,
    })?;
    Ok(ResolvedSection {
        name: name.to_owned(),
        spec,
    })
}

fn toml_error(e: toml::de::Error, loc: &Locator) -> Error {
    let line = e.span().map(|s| loc.line_of(s.start));
    let message = e.message().to_owned();
    let key = message
        .split('`')
        .nth(1)
        .filter(|_| message.contains("unknown field"))
        .unwrap_or("")
        .to_owned();
    config_error(
        &key,
        message,
        Provenance::File {
            path: loc
                .path
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("<inline>")),
            line,
        },
    )
}

/// Parses config text and applies overrides. `path` is used for messages.
pub fn parse_config_str(text: &str, path: Option<&Path>, ov: &Overrides) -> Result<ResolvedConfig> {
    let loc = Locator { path, text };
    let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(e, &loc))?;
    let sectioned = !table.is_empty() && table.values().all(|v| v.is_table());
    let raw: BTreeMap<String, RawSection> = if sectioned {
        toml::from_str(text).map_err(|e| toml_error(e, &loc))?
    } else {
        let single: RawSection = toml::from_str(text).map_err(|e| toml_error(e, &loc))?;
        BTreeMap::from([("main".to_owned(), single)])
    };
    let mut sections = Vec::new();
    for (name, section) in raw {
        // With a subcommand, sections for other experiments are skipped.
        if let (Some(want), Some(have)) = (ov.experiment, section.experiment.as_ref()) {
            if have.get_ref().parse::<ExperimentName>().ok() != Some(want) {
                continue;
            }
        }
        sections.push(resolve_section(&name, section, &loc, ov)?);
    }
    if sections.is_empty() {
        return Err(config_error(
            "experiment",
            match ov.experiment {
                Some(e) => format!("no section runs `{e}`"),
                None => "no sections".to_owned(),
            },
            Provenance::File {
                path: path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<inline>")),
                line: None,
            },
        ));
    }
    Ok(ResolvedConfig { sections })
}

/// Reads a config file, or builds a single section from the overrides alone.
pub fn parse_config(path: Option<&Path>, ov: &Overrides) -> Result<ResolvedConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_config_str(&text, Some(p), ov)
        }
        None => {
            let name = ov.experiment.map(|e| e.as_str()).unwrap_or("main");
            let section = resolve_section(name, RawSection::default(), &Locator { path: None, text: "" }, ov)?;
            Ok(ResolvedConfig {
                sections: vec![section],
            })
        }
    }
}

#[derive(Serialize)]
struct EmitSection<'a> {
    experiment: &'a str,
    d: usize,
    body: String,
    axes: &'a [f64],
    center: &'a [f64],
    radius: f64,
    n_grid: &'a [u64],
    trials: u64,
    seed: SeedValue,
    inner_m: u64,
    timing: bool,
}

impl ResolvedConfig {
    /// Canonical TOML with every key explicit; parsing it gives back `self`.
    pub fn to_toml(&self) -> String {
        let mut map = BTreeMap::new();
        for s in &self.sections {
            let spec = &s.spec;
            let seed = match i64::try_from(spec.master_seed) {
                Ok(v) => SeedValue::Int(v),
                Err(_) => SeedValue::Str(spec.master_seed.to_string()),
            };
            map.insert(
                s.name.as_str(),
                EmitSection {
                    experiment: spec.name.as_str(),
                    d: spec.d(),
                    body: spec.body.kind.to_string(),
                    axes: &spec.body.semi_axes,
                    center: &spec.body.center,
                    radius: spec.r,
                    n_grid: &spec.n_grid,
                    trials: spec.trials,
                    seed,
                    inner_m: spec.mc_inner_m,
                    timing: spec.timing,
                },
            );
        }
        toml::to_string(&map).expect("resolved config serializes")
    }

    /// SHA-256 of [`ResolvedConfig::to_toml`], hex encoded.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
