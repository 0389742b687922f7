use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use crate::experiments::{find, Experiment, CATALOG};
use crate::params::Params;
use crate::report::{write_json, write_series, Outcome, Report, Verdict};

pub const DEFAULT_SEED: u64 = 20240601;

/// What to run: experiment name, fully resolved parameters and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    pub experiment: String,
    pub params: Params,
    pub seed: u64,
}

impl Spec {
    /// Defaults of `name` with `overrides` applied in order.
    pub fn new(name: &str, overrides: &[(String, String)], seed: u64) -> Result<Self> {
        let exp = lookup(name)?;
        let mut params = exp.params();
        for (k, v) in overrides {
            params.set(k, v)?;
        }
        Ok(Spec {
            experiment: name.to_string(),
            params,
            seed,
        })
    }

    /// Rebuilds a spec from a manifest, re-validating every parameter.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let json: serde_json::Value = serde_json::from_str(&text)?;
        let spec = json
            .get("spec")
            .ok_or_else(|| anyhow!("{} has no spec", path.display()))?;
        let name = spec
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| anyhow!("manifest spec lacks an experiment name"))?;
        let seed = spec
            .get("seed")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| anyhow!("manifest spec lacks a seed"))?;
        let mut params = lookup(name)?.params();
        if let Some(map) = spec.get("params").and_then(|v| v.as_object()) {
            for (k, v) in map {
                params.set_json(k, v)?;
            }
        }
        Ok(Spec {
            experiment: name.to_string(),
            params,
            seed,
        })
    }
}

fn lookup(name: &str) -> Result<&'static Experiment> {
    find(name).ok_or_else(|| {
        anyhow!(
            "unknown experiment {name:?}; known: {}",
            CATALOG
                .iter()
                .map(|e| e.name)
                .collect::<Vec<_>>()
                .join(", ")
        )
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: Spec,
    pub code_version: String,
    pub output_dir: PathBuf,
    pub threads: usize,
    pub started_unix_ms: u128,
    pub wall_seconds: f64,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

pub fn code_version() -> String {
    format!("soliton-lab {}", env!("CARGO_PKG_VERSION"))
}

pub struct RunResult {
    pub report: Report,
    pub manifest: Manifest,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building the worker pool")
}

/// Runs one experiment and writes report.json, manifest.json and the CSVs
/// into `out`. Experiment errors are recorded (failed manifest, partial
/// report), not returned; I/O errors are returned.
pub fn run(spec: &Spec, out: &Path, threads: Option<usize>) -> Result<RunResult> {
    let exp = lookup(&spec.experiment)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = pool(threads)?;
    let started_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut outcome = Outcome::default();
    let result = pool.install(|| (exp.run)(&spec.params, spec.seed, &mut outcome));
    let wall_seconds = clock.elapsed().as_secs_f64();
    let error = result.err().map(|e| format!("{}: {e:#}", spec.experiment));
    for (name, s) in &outcome.series {
        write_series(out, name, s)?;
    }
    let report = Report::from_outcome(
        &spec.experiment,
        spec.seed,
        &spec.params,
        &outcome,
        error.clone(),
    );
    write_json(&out.join("report.json"), &report)?;
    let manifest = Manifest {
        spec: spec.clone(),
        code_version: code_version(),
        output_dir: out.to_path_buf(),
        threads: pool.current_num_threads(),
        started_unix_ms,
        wall_seconds,
        failed: error.is_some(),
        error,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(RunResult { report, manifest })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub passed: bool,
    pub verdicts: BTreeMap<String, Verdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// The single deterministic summary of a full-suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub code_version: String,
    pub experiments: BTreeMap<String, SummaryEntry>,
    pub passed: bool,
}

/// Runs the whole catalog with defaults into `out/<name>/`; writes
/// `out/summary.json` (deterministic) and `out/timings.json`.
pub fn run_all(
    seed: u64,
    out: &Path,
    threads: Option<usize>,
    mut progress: impl FnMut(&RunResult),
) -> Result<(Summary, Vec<RunResult>)> {
    let mut experiments = BTreeMap::new();
    let mut timings = BTreeMap::new();
    let mut results = Vec::new();
    for exp in CATALOG.iter() {
        let spec = Spec::new(exp.name, &[], seed)?;
        let r = run(&spec, &out.join(exp.name), threads)?;
        progress(&r);
        experiments.insert(
            exp.name.to_string(),
            SummaryEntry {
                passed: r.report.passed,
                verdicts: r.report.verdicts.clone(),
                error: r.report.error.clone(),
            },
        );
        timings.insert(exp.name.to_string(), r.manifest.wall_seconds);
        results.push(r);
    }
    let summary = Summary {
        seed,
        code_version: code_version(),
        passed: experiments.values().all(|e| e.passed),
        experiments,
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("timings.json"), &timings)?;
    Ok((summary, results))
}
