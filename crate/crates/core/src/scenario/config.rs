//! Scenario file schema and its validation into a resolved plan.

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::splitj::TrotterOrder;
use crate::tcmodel::TcSystem;
use crate::wml::FixedInteractionImpl;

/// One scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub system: TcSystem,
    #[serde(default)]
    pub initial: InitialConfig,
    pub algorithm: AlgorithmConfig,
    pub run: RunConfig,
}

/// Initial basis state: cavity photons and emitter bits (all zero if empty).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub photons: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub emitters: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    SplitJ,
    Wml,
    /// WML with the Split-J dilation of the fixed interaction.
    Hybrid,
    OracleOnly,
    Mcwf,
}

/// `[algorithm]` table. Exactly one of `steps`, `epsilon`, `max_delta` sets
/// the step count for the Trotterized algorithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u8>,
    #[serde(default, rename = "impl", skip_serializing_if = "Option::is_none")]
    pub realization: Option<FixedInteractionImpl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    TimeSeries,
    G2,
}

/// Exact: density-matrix evolution (trajectory average for MCWF). Shot:
/// sampled circuits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Exact,
    Shot,
}

/// When to add oracle columns. `Auto` includes them up to
/// [`super::AUTO_ORACLE_QUBITS`] qubits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleColumns {
    #[default]
    Auto,
    Always,
    Never,
}

/// `[run]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RunMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_batch: Option<usize>,
    #[serde(default)]
    pub oracle: OracleColumns,
    /// Self-check: largest allowed deviation from the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Externally reported g2 value compared with the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_g2: Option<f64>,
}

/// Default batch count of a g2 run.
pub const DEFAULT_BATCHES: usize = 20;

/// How many steps a Trotterized run takes for an elapsed time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Fixed(usize),
    /// Algorithm-specific a-priori bound for this error target.
    Epsilon(f64),
    /// WML only: `c t / n <= max_delta`.
    MaxDelta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    SplitJ { rule: StepRule, order: TrotterOrder },
    Wml { rule: StepRule, kind: FixedInteractionImpl },
    OracleOnly,
    Mcwf { dt: f64, trajectories: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Run {
    TimeSeries { t_start: f64, t_end: f64, num_points: usize, mode: RunMode, shots: usize },
    G2 { steady_time: f64, batches: usize, shots_per_batch: usize, mode: RunMode, reference: Option<f64> },
}

/// Validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub algorithm: Algorithm,
    pub run: Run,
    pub initial_index: usize,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Config(msg.into()))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn resolve(&self) -> Result<Resolved, ScenarioError> {
        self.system.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        let sys = &self.system;
        if self.initial.photons > sys.max_photons() {
            return invalid(format!("{} photons exceed the cavity capacity {}", self.initial.photons, sys.max_photons()));
        }
        let emitters = if self.initial.emitters.is_empty() {
            vec![0; sys.num_emitters()]
        } else {
            self.initial.emitters.clone()
        };
        if emitters.len() != sys.num_emitters() || emitters.iter().any(|&b| b > 1) {
            return invalid("initial.emitters needs one 0/1 entry per emitter");
        }
        let initial_index = sys.basis_index(self.initial.photons, &emitters).map_err(|e| ScenarioError::Config(e.to_string()))?;
        let algorithm = self.algorithm.resolve()?;
        let run = self.run.resolve()?;
        let mode = match &run {
            Run::TimeSeries { mode, .. } | Run::G2 { mode, .. } => *mode,
        };
        match algorithm {
            Algorithm::OracleOnly | Algorithm::Mcwf { .. } if mode == RunMode::Shot => {
                return invalid("oracle_only and mcwf produce density matrices; use mode = \"exact\"");
            }
            Algorithm::Wml { kind: FixedInteractionImpl::ExactKraus, .. } if mode == RunMode::Shot => {
                return invalid("impl = \"exact_kraus\" has no circuit; use mode = \"exact\"");
            }
            Algorithm::Mcwf { .. } if !sys.is_static() => {
                if let Run::TimeSeries { t_start, .. } = run {
                    if t_start != 0.0 {
                        return invalid("mcwf with a time-dependent pump must start at t_start = 0");
                    }
                }
            }
            _ => {}
        }
        Ok(Resolved { algorithm, run, initial_index })
    }
}

impl AlgorithmConfig {
    fn rule(&self, allow_max_delta: bool) -> Result<StepRule, ScenarioError> {
        match (self.steps, self.epsilon, self.max_delta) {
            (Some(n), None, None) if n >= 1 => Ok(StepRule::Fixed(n)),
            (Some(_), None, None) => invalid("steps must be at least 1"),
            (None, Some(e), None) if e > 0.0 && e < 1.0 => Ok(StepRule::Epsilon(e)),
            (None, Some(e), None) => invalid(format!("epsilon must lie in (0, 1), got {e}")),
            (None, None, Some(d)) if !allow_max_delta => invalid(format!("max_delta = {d} applies to WML only")),
            (None, None, Some(d)) if d > 0.0 && d.is_finite() => Ok(StepRule::MaxDelta(d)),
            (None, None, Some(d)) => invalid(format!("max_delta must be positive, got {d}")),
            _ => invalid("set exactly one of steps, epsilon, max_delta"),
        }
    }

    fn reject(&self, fields: &[(&str, bool)]) -> Result<(), ScenarioError> {
        match fields.iter().find(|(_, set)| *set) {
            Some((name, _)) => invalid(format!("{name} does not apply to algorithm {:?}", self.kind)),
            None => Ok(()),
        }
    }

    fn resolve(&self) -> Result<Algorithm, ScenarioError> {
        let steps_set = self.steps.is_some() || self.epsilon.is_some() || self.max_delta.is_some();
        match self.kind {
            AlgorithmKind::SplitJ => {
                self.reject(&[
                    ("impl", self.realization.is_some()),
                    ("dt", self.dt.is_some()),
                    ("trajectories", self.trajectories.is_some()),
                ])?;
                let order = TrotterOrder::try_from(self.order.unwrap_or(2)).map_err(|e| ScenarioError::Config(e.to_string()))?;
                Ok(Algorithm::SplitJ { rule: self.rule(false)?, order })
            }
            AlgorithmKind::Wml | AlgorithmKind::Hybrid => {
                self.reject(&[
                    ("order", self.order.is_some()),
                    ("dt", self.dt.is_some()),
                    ("trajectories", self.trajectories.is_some()),
                ])?;
                let kind = match (self.kind, self.realization) {
                    (AlgorithmKind::Hybrid, None | Some(FixedInteractionImpl::HybridJ)) => FixedInteractionImpl::HybridJ,
                    (AlgorithmKind::Hybrid, Some(other)) => {
                        return invalid(format!("hybrid fixes impl = \"hybrid_j\", got {other:?}"));
                    }
                    (_, r) => r.unwrap_or_default(),
                };
                Ok(Algorithm::Wml { rule: self.rule(true)?, kind })
            }
            AlgorithmKind::OracleOnly => {
                self.reject(&[
                    ("steps", steps_set),
                    ("order", self.order.is_some()),
                    ("impl", self.realization.is_some()),
                    ("dt", self.dt.is_some()),
                    ("trajectories", self.trajectories.is_some()),
                ])?;
                Ok(Algorithm::OracleOnly)
            }
            AlgorithmKind::Mcwf => {
                self.reject(&[
                    ("steps", steps_set),
                    ("order", self.order.is_some()),
                    ("impl", self.realization.is_some()),
                ])?;
                match (self.dt, self.trajectories) {
                    (Some(dt), Some(p)) if dt > 0.0 && p >= 1 => Ok(Algorithm::Mcwf { dt, trajectories: p }),
                    _ => invalid("mcwf needs dt > 0 and trajectories >= 1"),
                }
            }
        }
    }
}

impl RunConfig {
    fn reject(&self, fields: &[(&str, bool)]) -> Result<(), ScenarioError> {
        match fields.iter().find(|(_, set)| *set) {
            Some((name, _)) => invalid(format!("run.{name} does not apply to {:?} runs", self.kind)),
            None => Ok(()),
        }
    }

    fn resolve(&self) -> Result<Run, ScenarioError> {
        if let Some(tol) = self.tolerance {
            if tol.is_nan() || tol <= 0.0 {
                return invalid("tolerance must be positive");
            }
        }
        match self.kind {
            RunKind::TimeSeries => {
                self.reject(&[
                    ("steady_time", self.steady_time.is_some()),
                    ("batches", self.batches.is_some()),
                    ("shots_per_batch", self.shots_per_batch.is_some()),
                    ("reference_g2", self.reference_g2.is_some()),
                ])?;
                let t_start = self.t_start.unwrap_or(0.0);
                let Some(t_end) = self.t_end else { return invalid("run.t_end is required") };
                let Some(num_points) = self.num_points else { return invalid("run.num_points is required") };
                if !(t_start.is_finite() && t_end.is_finite() && t_start >= 0.0) {
                    return invalid("times must be finite and t_start >= 0");
                }
                if t_end < t_start {
                    return invalid(format!("t_end {t_end} before t_start {t_start}"));
                }
                if num_points == 0 {
                    return invalid("num_points must be at least 1");
                }
                let mode = self.mode.unwrap_or(RunMode::Exact);
                let shots = match (mode, self.shots) {
                    (RunMode::Shot, Some(s)) if s >= 1 => s,
                    (RunMode::Shot, _) => return invalid("shot mode needs shots >= 1"),
                    (RunMode::Exact, Some(_)) => return invalid("shots set but mode is exact"),
                    (RunMode::Exact, None) => 0,
                };
                Ok(Run::TimeSeries { t_start, t_end, num_points, mode, shots })
            }
            RunKind::G2 => {
                self.reject(&[
                    ("t_start", self.t_start.is_some()),
                    ("t_end", self.t_end.is_some()),
                    ("num_points", self.num_points.is_some()),
                    ("shots", self.shots.is_some()),
                ])?;
                let Some(steady_time) = self.steady_time else { return invalid("run.steady_time is required") };
                if !(steady_time.is_finite() && steady_time >= 0.0) {
                    return invalid("steady_time must be finite and non-negative");
                }
                let batches = self.batches.unwrap_or(DEFAULT_BATCHES);
                let Some(shots_per_batch) = self.shots_per_batch else {
                    return invalid("run.shots_per_batch is required");
                };
                if batches == 0 || shots_per_batch == 0 {
                    return invalid("batches and shots_per_batch must be at least 1");
                }
                let mode = self.mode.unwrap_or(RunMode::Shot);
                Ok(Run::G2 { steady_time, batches, shots_per_batch, mode, reference: self.reference_g2 })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[system]
omega_c = 1.0
omega_e = [1.0]
g = [0.5]
kappa = 0.2
gamma = 0.1
[initial]
photons = 1
[algorithm]
kind = "split_j"
steps = 10
[run]
kind = "time_series"
t_end = 1.0
num_points = 3
"#;

    fn minimal() -> ScenarioConfig {
        ScenarioConfig::from_toml(MINIMAL).unwrap()
    }

    #[test]
    fn minimal_config_resolves() {
        let r = minimal().resolve().unwrap();
        assert_eq!(r.algorithm, Algorithm::SplitJ { rule: StepRule::Fixed(10), order: TrotterOrder::Second });
        assert_eq!(r.run, Run::TimeSeries { t_start: 0.0, t_end: 1.0, num_points: 3, mode: RunMode::Exact, shots: 0 });
        assert_eq!(r.initial_index, 0b010);
    }

    #[test]
    fn toml_round_trip() {
        let c = minimal();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("steps = 10", "steps = 10\nstepz = 3");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ScenarioError::Config(_))));
    }

    fn rejects(edit: impl FnOnce(&mut ScenarioConfig)) {
        let mut c = minimal();
        edit(&mut c);
        assert!(matches!(c.resolve(), Err(ScenarioError::Config(_))), "{c:?}");
    }

    #[test]
    fn invariants_are_enforced() {
        rejects(|c| c.run.num_points = Some(0));
        rejects(|c| c.run.t_start = Some(2.0));
        rejects(|c| c.run.mode = Some(RunMode::Shot));
        rejects(|c| {
            c.run.mode = Some(RunMode::Shot);
            c.run.shots = Some(0);
        });
        rejects(|c| c.run.steady_time = Some(1.0));
        rejects(|c| c.algorithm.epsilon = Some(0.1));
        rejects(|c| c.algorithm.steps = None);
        rejects(|c| c.algorithm.max_delta = Some(0.1));
        rejects(|c| c.algorithm.order = Some(3));
        rejects(|c| c.initial.photons = 4);
        rejects(|c| c.initial.emitters = vec![1, 0]);
        rejects(|c| c.system.kappa = -1.0);
    }

    #[test]
    fn hybrid_is_wml_with_split_j_dilation() {
        let mut c = minimal();
        c.algorithm.kind = AlgorithmKind::Hybrid;
        c.algorithm.steps = None;
        c.algorithm.max_delta = Some(0.05);
        let r = c.resolve().unwrap();
        assert_eq!(r.algorithm, Algorithm::Wml { rule: StepRule::MaxDelta(0.05), kind: FixedInteractionImpl::HybridJ });
        c.algorithm.realization = Some(FixedInteractionImpl::Protocol1);
        assert!(c.resolve().is_err());
    }

    #[test]
    fn density_only_algorithms_refuse_shots() {
        let mut c = minimal();
        c.algorithm = AlgorithmConfig {
            kind: AlgorithmKind::Mcwf,
            steps: None,
            epsilon: None,
            max_delta: None,
            order: None,
            realization: None,
            dt: Some(1e-3),
            trajectories: Some(10),
        };
        assert!(c.resolve().is_ok());
        c.run.mode = Some(RunMode::Shot);
        c.run.shots = Some(10);
        assert!(c.resolve().is_err());
    }

    #[test]
    fn g2_defaults() {
        let mut c = minimal();
        c.run = RunConfig {
            kind: RunKind::G2,
            t_start: None,
            t_end: None,
            num_points: None,
            mode: None,
            shots: None,
            steady_time: Some(1.0),
            batches: None,
            shots_per_batch: Some(100),
            oracle: OracleColumns::Auto,
            tolerance: None,
            reference_g2: None,
        };
        let r = c.resolve().unwrap();
        assert_eq!(
            r.run,
            Run::G2 { steady_time: 1.0, batches: DEFAULT_BATCHES, shots_per_batch: 100, mode: RunMode::Shot, reference: None }
        );
    }
}
