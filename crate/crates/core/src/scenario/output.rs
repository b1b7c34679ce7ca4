//! Result records and their CSV / JSON forms.

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::obs::{G2Estimate, PopulationSample};

/// Run provenance. Timings are present only when requested, so reruns with
/// the same seed are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON form of the scenario.
    pub config_hash: String,
    pub git_describe: String,
    pub algorithm: String,
    pub num_emitters: usize,
    pub num_qubits: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Wall-clock seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub algorithm_s: f64,
    pub oracle_s: f64,
    pub total_s: f64,
}

/// One time point: algorithm and oracle populations side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub time: f64,
    /// Steps the algorithm used for this point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    pub algorithm: PopulationSample,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<PopulationSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Result {
    pub steady_time: f64,
    pub batches: usize,
    pub shots_per_batch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    pub estimate: G2Estimate,
    /// g2 of the algorithm's final state, in exact mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_g2: Option<f64>,
    /// Oracle g2 of the steady state (or of the state at `steady_time` for a
    /// driven frame).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_g2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_photon_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_g2: Option<f64>,
}

/// Named pass/fail check on the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl SelfCheck {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value <= limit }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSeries {
    pub metadata: Metadata,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<SeriesRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<G2Result>,
    pub checks: Vec<SelfCheck>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format {s:?} (csv or json)")),
        }
    }
}

impl ResultSeries {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &SelfCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn emit(&self, format: OutputFormat) -> Result<String, ScenarioError> {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            OutputFormat::Csv => match &self.g2 {
                Some(g2) => g2_csv(&g2.estimate),
                None => series_csv(&self.rows, self.metadata.num_emitters),
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn csv_error(e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Csv(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, ScenarioError> {
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

/// `time_ns, cavity_pop, cavity_stderr, emitter_1..N`, then the oracle twins
/// when the rows carry oracle populations.
pub fn series_header(num_emitters: usize, oracle: bool) -> Vec<String> {
    let emitters = |prefix: &'static str| (1..=num_emitters).map(move |j| format!("{prefix}emitter_{j}"));
    let mut h: Vec<String> = ["time_ns", "cavity_pop", "cavity_stderr"].map(String::from).into();
    h.extend(emitters(""));
    if oracle {
        h.push("oracle_cavity_pop".into());
        h.extend(emitters("oracle_"));
    }
    h
}

fn series_csv(rows: &[SeriesRow], num_emitters: usize) -> Result<String, ScenarioError> {
    let oracle = rows.first().is_some_and(|r| r.oracle.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(series_header(num_emitters, oracle)).map_err(csv_error)?;
    for r in rows {
        let a = &r.algorithm;
        let mut rec = vec![r.time, a.cavity, a.cavity_stderr];
        rec.extend(&a.emitters);
        if let Some(o) = &r.oracle {
            rec.push(o.cavity);
            rec.extend(&o.emitters);
        }
        w.write_record(rec.iter().map(f64::to_string)).map_err(csv_error)?;
    }
    finish(w)
}

fn g2_csv(est: &G2Estimate) -> Result<String, ScenarioError> {
    let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["batch", "batch_ratio", "running_median"]).map_err(csv_error)?;
    for (b, (r, m)) in est.batch_ratios.iter().zip(&est.running_median).enumerate() {
        w.write_record([(b + 1).to_string(), cell(*r), cell(*m)]).map_err(csv_error)?;
    }
    finish(w)
}

/// Header and numeric rows of an emitted CSV; empty cells read as `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map_err(csv_error)?
                    .iter()
                    .map(|c| if c.is_empty() { Ok(None) } else { c.parse::<f64>().map(Some).map_err(csv_error) })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}
