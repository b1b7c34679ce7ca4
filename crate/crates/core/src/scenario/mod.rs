//! Configuration-driven runs: population time series and g2 estimates, with
//! exact oracle columns alongside.
//!
//! A scenario is a TOML file with `[system]`, `[initial]`, `[algorithm]` and
//! `[run]` tables (see [`ScenarioConfig`]); [`presets`] ships nine of them.
//! Every time point is evolved afresh from `t_start`. Shot seeds are derived
//! from the scenario seed, so a rerun reproduces the output byte for byte.

mod config;
mod output;
pub mod presets;

use std::time::Instant;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    Algorithm, AlgorithmConfig, AlgorithmKind, InitialConfig, OracleColumns, Resolved, Run, RunConfig, RunKind, RunMode,
    ScenarioConfig, StepRule, DEFAULT_BATCHES,
};
pub use output::{
    series_header, CsvTable, G2Result, Metadata, OutputFormat, ResultSeries, SelfCheck, SeriesRow, Timings,
};

use crate::numkit::ComplexMatrix;
use crate::obs::{
    g2_from_distribution, g2_median_of_means, photon_distribution, populations_exact, populations_from_shots, BatchTally,
    ObsError, PopulationSample,
};
use crate::oracle::{evolve_liouville, evolve_series, mcwf_evolve, steady_state, Method, OracleError, MAX_ORACLE_QUBITS};
use crate::par::{try_map_indexed, Execution};
use crate::qsim::{sample_basis, Mode, QsimError, RandomSource, RegisterState, ShotRecord, MAX_EXACT_QUBITS, MAX_SHOT_QUBITS};
use crate::splitj::{evolve_from, EvolveMode, Evolved, ShotSpec, SplitJError, SplitJPlan};
use crate::tcmodel::TcSystem;
use crate::wml::{evolve_wml_from, FixedInteractionImpl, WmlError, WmlMode, WmlPlan};
use crate::C64;

/// Largest register that gets oracle columns under `oracle = "auto"`.
pub const AUTO_ORACLE_QUBITS: usize = 8;

/// Population tolerance of the range self-check.
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// Trace tolerance of the exact-mode self-check for trace-preserving runs.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// Trace drift allowed per step from floating-point rounding.
pub const ROUNDING_PER_STEP: f64 = 64.0 * f64::EPSILON;

/// Oracle g2 differing from a reference value by more than this is noted.
pub const REFERENCE_G2_NOTE: f64 = 0.02;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("register of {qubits} qubits exceeds the {limit}-qubit limit for this run")]
    RegisterTooLarge { qubits: usize, limit: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    SplitJ(#[from] SplitJError),
    #[error(transparent)]
    Wml(#[from] WmlError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Obs(#[from] ObsError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

impl ScenarioError {
    /// Whether the scenario itself is at fault, as opposed to the run.
    pub fn is_config(&self) -> bool {
        matches!(self, ScenarioError::Config(_) | ScenarioError::RegisterTooLarge { .. })
    }
}

/// Switches that do not change what a scenario means.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Allow oracle columns; `false` drops them regardless of the config.
    pub oracle: bool,
    pub exec: Execution,
    /// Record wall-clock timings in the metadata.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { oracle: true, exec: Execution::default(), timings: false }
    }
}

/// Hex SHA-256 of the scenario's canonical JSON form, output path excluded.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let canonical = ScenarioConfig { output: None, ..config.clone() };
    let json = serde_json::to_string(&canonical).expect("scenario serializes to JSON");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// `git describe` of the source tree at build time.
pub fn git_describe() -> &'static str {
    env!("OPENTC_GIT_DESCRIBE")
}

/// Seed of time point `i`.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// `num_points` equally spaced times including both ends; a zero-length
/// interval gives the single time `t_start`.
pub fn sample_times(t_start: f64, t_end: f64, num_points: usize) -> Vec<f64> {
    if t_end == t_start || num_points == 1 {
        return vec![t_start];
    }
    let h = (t_end - t_start) / (num_points - 1) as f64;
    (0..num_points).map(|i| if i + 1 == num_points { t_end } else { t_start + i as f64 * h }).collect()
}

fn algorithm_label(alg: &Algorithm) -> String {
    match alg {
        Algorithm::SplitJ { order, .. } => format!("split_j({order:?})").to_lowercase(),
        Algorithm::Wml { kind, .. } => {
            let k = serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            format!("wml({k})")
        }
        Algorithm::OracleOnly => "oracle_only".into(),
        Algorithm::Mcwf { .. } => "mcwf".into(),
    }
}

/// Steps used for an elapsed time; `None` for step-free algorithms.
pub fn steps_for(sys: &TcSystem, alg: &Algorithm, start: f64, elapsed: f64) -> Result<Option<usize>, ScenarioError> {
    let n = match *alg {
        Algorithm::SplitJ { rule: StepRule::Fixed(n), .. } | Algorithm::Wml { rule: StepRule::Fixed(n), .. } => n,
        Algorithm::SplitJ { rule: StepRule::Epsilon(e), order } => {
            SplitJPlan::new(sys, start, elapsed, 1, order)?.suggest_steps(e)?
        }
        Algorithm::SplitJ { rule: StepRule::MaxDelta(_), .. } => {
            return Err(ScenarioError::Config("max_delta applies to WML only".into()));
        }
        Algorithm::Wml { rule: StepRule::Epsilon(e), .. } => WmlPlan::suggest_steps(sys, elapsed, e)?,
        Algorithm::Wml { rule: StepRule::MaxDelta(d), kind } => {
            let c = WmlPlan::new(sys, start, elapsed, 1, kind)?.c();
            ((c * elapsed / d).ceil() as usize).max(1)
        }
        Algorithm::OracleOnly | Algorithm::Mcwf { .. } => return Ok(None),
    };
    Ok(Some(n))
}

/// Final density matrix or measured shots.
enum Outcome {
    Density(ComplexMatrix),
    Shots(Vec<ShotRecord>),
}

struct Evolution<'a> {
    sys: &'a TcSystem,
    alg: Algorithm,
    initial_index: usize,
    exec: Execution,
}

impl Evolution<'_> {
    fn initial_density(&self) -> ComplexMatrix {
        let mut rho = ComplexMatrix::zeros(self.sys.dim(), self.sys.dim());
        rho[(self.initial_index, self.initial_index)] = C64::new(1.0, 0.0);
        rho
    }

    fn register(&self, mode: Mode) -> Result<RegisterState, ScenarioError> {
        Ok(RegisterState::basis(self.sys.num_qubits(), self.initial_index, mode)?)
    }

    /// Evolve from `start` for `elapsed`; `shots = Some(..)` selects shot mode.
    fn run(
        &self,
        start: f64,
        elapsed: f64,
        steps: Option<usize>,
        shots: Option<usize>,
        seed: u64,
    ) -> Result<Outcome, ScenarioError> {
        let sys = self.sys;
        let spec = shots.map(|s| ShotSpec { exec: self.exec, ..ShotSpec::new(s, seed) });
        let qmode = if spec.is_some() { Mode::Shot } else { Mode::Exact };
        let evolved = match self.alg {
            Algorithm::SplitJ { order, .. } => {
                let mode = spec.map_or(EvolveMode::Exact, EvolveMode::Shot);
                evolve_from(sys, &self.register(qmode)?, start, elapsed, steps.unwrap_or(1), mode, order)?
            }
            Algorithm::Wml { kind, .. } => {
                let mode = spec.map_or(WmlMode::ExactAveraged, WmlMode::Shot);
                evolve_wml_from(sys, &self.register(qmode)?, start, elapsed, steps.unwrap_or(1), kind, mode)?
            }
            Algorithm::OracleOnly => {
                let rho = evolve_liouville(sys, &self.initial_density(), start, start + elapsed, Method::Auto)?;
                return Ok(Outcome::Density(rho));
            }
            Algorithm::Mcwf { dt, trajectories } => {
                let mut psi = vec![C64::new(0.0, 0.0); sys.dim()];
                psi[self.initial_index] = C64::new(1.0, 0.0);
                let rho = mcwf_evolve(sys, &psi, elapsed, dt, trajectories, seed, self.exec)?;
                return Ok(Outcome::Density(rho));
            }
        };
        Ok(match evolved {
            Evolved::Exact(state) => Outcome::Density(state.density()),
            Evolved::Shots(records) => Outcome::Shots(records),
        })
    }

    /// Largest trace defect an exact run may show: rounding that grows with
    /// the step count for trace-preserving maps, plus `2 n Delta^2` for WML
    /// realizations of the bare two-Kraus map.
    fn trace_limit(&self, start: f64, elapsed: f64, steps: Option<usize>) -> Result<f64, ScenarioError> {
        let n = steps.unwrap_or(1) as f64;
        let rounding = TRACE_TOLERANCE + n * ROUNDING_PER_STEP;
        if let (Algorithm::Wml { kind, .. }, Some(n)) = (self.alg, steps) {
            if kind == FixedInteractionImpl::HybridJ {
                return Ok(rounding);
            }
            let plan = WmlPlan::new(self.sys, start, elapsed, n, kind)?;
            return Ok(2.0 * n as f64 * plan.delta().powi(2) + rounding);
        }
        Ok(rounding)
    }
}

fn trace_defect(rho: &ComplexMatrix) -> f64 {
    ((0..rho.rows()).map(|i| rho[(i, i)].re).sum::<f64>() - 1.0).abs()
}

/// How far populations stray outside `[0, max]`.
fn range_violation(sys: &TcSystem, p: &PopulationSample) -> f64 {
    let out = |x: f64, hi: f64| (-x).max(x - hi).max(0.0);
    p.emitters.iter().map(|&e| out(e, 1.0)).fold(out(p.cavity, sys.max_photons() as f64), f64::max)
}

fn max_deviation(a: &PopulationSample, b: &PopulationSample) -> f64 {
    a.emitters.iter().zip(&b.emitters).map(|(x, y)| (x - y).abs()).fold((a.cavity - b.cavity).abs(), f64::max)
}

fn include_oracle(sys: &TcSystem, columns: OracleColumns, opts: &RunOptions) -> Result<bool, ScenarioError> {
    let n = sys.num_qubits();
    Ok(match (opts.oracle, columns) {
        (false, _) | (_, OracleColumns::Never) => false,
        (true, OracleColumns::Auto) => n <= AUTO_ORACLE_QUBITS,
        (true, OracleColumns::Always) if n > MAX_ORACLE_QUBITS => {
            return Err(ScenarioError::RegisterTooLarge { qubits: n, limit: MAX_ORACLE_QUBITS });
        }
        (true, OracleColumns::Always) => true,
    })
}

/// Run a scenario.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<ResultSeries, ScenarioError> {
    let resolved = config.resolve()?;
    let sys = &config.system;
    let (mode, shot_mode) = match resolved.run {
        Run::TimeSeries { mode, .. } | Run::G2 { mode, .. } => (mode, mode == RunMode::Shot),
    };
    let limit = if shot_mode { MAX_SHOT_QUBITS } else { MAX_EXACT_QUBITS };
    if sys.num_qubits() > limit {
        return Err(ScenarioError::RegisterTooLarge { qubits: sys.num_qubits(), limit });
    }
    let oracle = include_oracle(sys, config.run.oracle, opts)?;
    let evolution = Evolution { sys, alg: resolved.algorithm, initial_index: resolved.initial_index, exec: opts.exec };
    let total = Instant::now();
    let mut metadata = Metadata {
        name: config.name.clone(),
        seed: config.seed,
        config_hash: config_hash(config),
        git_describe: git_describe().into(),
        algorithm: algorithm_label(&resolved.algorithm),
        num_emitters: sys.num_emitters(),
        num_qubits: sys.num_qubits(),
        notes: Vec::new(),
        timings: None,
    };
    let body = match resolved.run {
        Run::TimeSeries { t_start, t_end, num_points, shots, .. } => {
            let times = sample_times(t_start, t_end, num_points);
            time_series(&evolution, config, &times, t_start, shot_mode.then_some(shots), oracle, mode)?
        }
        Run::G2 { steady_time, batches, shots_per_batch, reference, .. } => {
            let mut body = g2_run(&evolution, config, steady_time, batches, shots_per_batch, shot_mode, oracle)?;
            if let Some(g2) = body.g2.as_mut() {
                g2.reference_g2 = reference;
                if let (Some(r), Some(o)) = (reference, g2.oracle_g2) {
                    let flag = if (r - o).abs() > REFERENCE_G2_NOTE { "exceeds" } else { "within" };
                    metadata.notes.push(format!(
                        "reference g2 {r} vs oracle g2 {o:.6}: difference {:.4} {flag} {REFERENCE_G2_NOTE}",
                        (r - o).abs()
                    ));
                }
            }
            body
        }
    };
    if opts.timings {
        metadata.timings = Some(Timings { total_s: total.elapsed().as_secs_f64(), ..body.timings });
    }
    Ok(ResultSeries { metadata, rows: body.rows, g2: body.g2, checks: body.checks })
}

/// Rows or g2 result of a run, before metadata is attached.
struct Body {
    rows: Vec<SeriesRow>,
    g2: Option<G2Result>,
    checks: Vec<SelfCheck>,
    timings: Timings,
}

fn time_series(
    ev: &Evolution,
    config: &ScenarioConfig,
    times: &[f64],
    t_start: f64,
    shots: Option<usize>,
    oracle: bool,
    mode: RunMode,
) -> Result<Body, ScenarioError> {
    let sys = ev.sys;
    let clock = Instant::now();
    struct Point {
        row: SeriesRow,
        trace: Option<(f64, f64)>,
    }
    let points = try_map_indexed(times.len(), ev.exec, |i| -> Result<Point, ScenarioError> {
        let elapsed = times[i] - t_start;
        let steps = steps_for(sys, &ev.alg, t_start, elapsed)?;
        let (algorithm, trace) = match ev.run(t_start, elapsed, steps, shots, point_seed(config.seed, i))? {
            Outcome::Density(rho) => {
                let limit = ev.trace_limit(t_start, elapsed, steps)?;
                (populations_exact(sys, &rho, times[i])?, Some((trace_defect(&rho), limit)))
            }
            Outcome::Shots(records) => (populations_from_shots(sys, &records, times[i])?, None),
        };
        Ok(Point { row: SeriesRow { time: times[i], steps, algorithm, oracle: None }, trace })
    })?;
    let algorithm_s = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let mut rows: Vec<SeriesRow> = points.iter().map(|p| p.row.clone()).collect();
    if oracle {
        let states = evolve_series(sys, &ev.initial_density(), t_start, times, Method::Auto)?;
        for (row, rho) in rows.iter_mut().zip(&states) {
            row.oracle = Some(populations_exact(sys, rho, row.time)?);
        }
    }
    let oracle_s = clock.elapsed().as_secs_f64();

    let mut checks = Vec::new();
    if mode == RunMode::Exact {
        let traces: Vec<(f64, f64)> = points.iter().filter_map(|p| p.trace).collect();
        let worst = traces.iter().map(|t| t.0).fold(0.0, f64::max);
        let limit = traces.iter().map(|t| t.1).fold(0.0, f64::max);
        let mut check = SelfCheck::at_most("trace_deviation", worst, limit);
        check.passed = traces.iter().all(|(v, l)| v <= l);
        checks.push(check);
    }
    let range = rows.iter().map(|r| range_violation(sys, &r.algorithm)).fold(0.0, f64::max);
    checks.push(SelfCheck::at_most("population_range", range, RANGE_TOLERANCE));
    if let (Some(tol), true) = (config.run.tolerance, oracle) {
        let dev = rows
            .iter()
            .map(|r| r.oracle.as_ref().map_or(0.0, |o| max_deviation(&r.algorithm, o)))
            .fold(0.0, f64::max);
        checks.push(SelfCheck::at_most("oracle_deviation", dev, tol));
    }
    Ok(Body { rows, g2: None, checks, timings: Timings { algorithm_s, oracle_s, total_s: 0.0 } })
}

fn g2_run(
    ev: &Evolution,
    config: &ScenarioConfig,
    steady_time: f64,
    batches: usize,
    shots_per_batch: usize,
    shot_mode: bool,
    oracle: bool,
) -> Result<Body, ScenarioError> {
    let sys = ev.sys;
    let clock = Instant::now();
    let total = batches * shots_per_batch;
    let steps = steps_for(sys, &ev.alg, 0.0, steady_time)?;
    let mut checks = Vec::new();
    let mut state_g2 = None;
    let tallies: Vec<BatchTally> = match ev.run(0.0, steady_time, steps, shot_mode.then_some(total), config.seed)? {
        Outcome::Shots(records) => records.chunks(shots_per_batch).map(|c| BatchTally::from_shots(sys, c)).collect(),
        Outcome::Density(rho) => {
            let limit = ev.trace_limit(0.0, steady_time, steps)?;
            checks.push(SelfCheck::at_most("trace_deviation", trace_defect(&rho), limit));
            let probs: Vec<f64> = (0..rho.rows()).map(|i| rho[(i, i)].re.max(0.0)).collect();
            state_g2 = g2_from_distribution(&photon_distribution(sys, &probs));
            let mut rng = RandomSource::new(config.seed);
            (0..batches)
                .map(|_| {
                    let mut counts = vec![0; sys.max_photons() + 1];
                    for _ in 0..shots_per_batch {
                        counts[sys.photons_of(sample_basis(&probs, &mut rng))] += 1;
                    }
                    BatchTally { counts }
                })
                .collect()
        }
    };
    let estimate = g2_median_of_means(&tallies)?;
    let algorithm_s = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let (mut oracle_g2, mut oracle_photon_distribution) = (None, None);
    if oracle {
        let rho0 = ev.initial_density();
        let rho = if sys.is_static() {
            steady_state(sys, &rho0, 1e-10)?
        } else {
            evolve_liouville(sys, &rho0, 0.0, steady_time, Method::Auto)?
        };
        let probs: Vec<f64> = (0..rho.rows()).map(|i| rho[(i, i)].re).collect();
        let p = photon_distribution(sys, &probs);
        oracle_g2 = g2_from_distribution(&p);
        oracle_photon_distribution = Some(p);
    }
    let oracle_s = clock.elapsed().as_secs_f64();
    checks.push(SelfCheck::at_most(
        "g2_finite",
        if estimate.estimate.is_finite() { 0.0 } else { 1.0 },
        0.0,
    ));
    if let (Some(tol), Some(o)) = (config.run.tolerance, oracle_g2) {
        checks.push(SelfCheck::at_most("g2_oracle_deviation", (estimate.estimate - o).abs(), tol));
    }
    let g2 = G2Result {
        steady_time,
        batches,
        shots_per_batch,
        steps,
        estimate,
        state_g2,
        oracle_g2,
        oracle_photon_distribution,
        reference_g2: None,
    };
    Ok(Body { rows: Vec::new(), g2: Some(g2), checks, timings: Timings { algorithm_s, oracle_s, total_s: 0.0 } })
}
