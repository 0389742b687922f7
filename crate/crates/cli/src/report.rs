use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::params::Params;

/// Where the reference value of an asserted scalar comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Follows from definitions or elementary identities.
    Exact,
    /// A bound or value stated in the source literature.
    Published,
    /// Computed here by an independent method.
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
}

impl Tolerance {
    fn slack(&self, reference: f64) -> f64 {
        match *self {
            Tolerance::Absolute(t) => t,
            Tolerance::Relative(t) => t * reference.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    AtLeast(f64),
    AtMost(f64),
    Above(f64),
    Below(f64),
    Near(f64),
}

impl Expect {
    pub fn holds(&self, v: f64, tol: Tolerance) -> bool {
        match *self {
            Expect::AtLeast(b) => v >= b - tol.slack(b),
            Expect::AtMost(b) => v <= b + tol.slack(b),
            Expect::Above(b) => v > b - tol.slack(b),
            Expect::Below(b) => v < b + tol.slack(b),
            Expect::Near(b) => (v - b).abs() <= tol.slack(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expect: Option<Expect>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<Tolerance>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<Provenance>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// A table destined for one CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip text for a float.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Results accumulated while an experiment runs; flushed even on failure.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub scalars: BTreeMap<String, Scalar>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub series: BTreeMap<String, Series>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.insert(
            name.into(),
            Scalar {
                value,
                expect: None,
                tolerance: None,
                provenance: None,
            },
        );
    }

    /// Records an asserted scalar and a verdict of the same name.
    pub fn check(
        &mut self,
        name: impl Into<String>,
        value: f64,
        expect: Expect,
        tol: Tolerance,
        provenance: Provenance,
    ) -> bool {
        let name = name.into();
        let pass = expect.holds(value, tol);
        self.scalars.insert(
            name.clone(),
            Scalar {
                value,
                expect: Some(expect),
                tolerance: Some(tol),
                provenance: Some(provenance),
            },
        );
        self.verdicts.insert(name, pass.into());
        pass
    }

    pub fn verdict(&mut self, name: impl Into<String>, pass: bool) -> bool {
        self.verdicts.insert(name.into(), pass.into());
        pass
    }

    pub fn series<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        header: impl IntoIterator<Item = S>,
        rows: Vec<Vec<String>>,
    ) {
        self.series.insert(
            name.into(),
            Series {
                header: header.into_iter().map(Into::into).collect(),
                rows,
            },
        );
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| *v == Verdict::Pass)
    }
}

/// The deterministic result file of one run; timings live in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub params: Params,
    pub scalars: BTreeMap<String, Scalar>,
    /// Series name to CSV file name, relative to the report.
    pub series: BTreeMap<String, String>,
    pub verdicts: BTreeMap<String, Verdict>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub passed: bool,
    pub manifest: String,
}

impl Report {
    pub fn from_outcome(
        experiment: &str,
        seed: u64,
        params: &Params,
        outcome: &Outcome,
        error: Option<String>,
    ) -> Self {
        Report {
            experiment: experiment.to_string(),
            seed,
            params: params.clone(),
            scalars: outcome.scalars.clone(),
            series: outcome
                .series
                .keys()
                .map(|k| (k.clone(), format!("{k}.csv")))
                .collect(),
            verdicts: outcome.verdicts.clone(),
            notes: outcome.notes.clone(),
            passed: error.is_none() && !outcome.verdicts.is_empty() && outcome.all_pass(),
            error,
            manifest: "manifest.json".into(),
        }
    }
}

pub fn write_series(dir: &Path, name: &str, s: &Series) -> Result<()> {
    let path = dir.join(format!("{name}.csv"));
    let mut w =
        csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(&s.header)?;
    for row in &s.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
