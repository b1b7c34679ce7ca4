//! Split J-matrix simulation: each dissipator is realized by its own
//! one-ancilla dilation `exp(-i J_L sqrt(tau))`, followed by a Trotterized
//! coherent step.
//!
//! With `J_L = L^dag ⊗ |0><1| + L ⊗ |1><0|` (ancilla last) and the ancilla
//! starting in `|0>`, tracing it out gives
//! `rho + tau (L rho L^dag - {L^dag L, rho}/2) + O(tau^2)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::local::{apply_to_vector, left_multiply, right_multiply, LocalLayout};
use crate::numkit::{expm_hermitian, operator_norm, ComplexMatrix, NumError, Operator};
use crate::par::{map_indexed, Execution};
use crate::qsim::{bits_of, sample_basis, KrausChannel, QsimError, RandomSource, RegisterState, ShotRecord};
use crate::tcmodel::{hamiltonian_terms, lindblad_terms, pump_matrix, HamiltonianTerm, LindbladTerm, TcError, TcSystem, TermKind};

#[derive(Debug, Error, PartialEq)]
pub enum SplitJError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrotterOrder {
    First,
    #[default]
    Second,
}

impl TryFrom<u8> for TrotterOrder {
    type Error = SplitJError;

    fn try_from(order: u8) -> Result<Self, SplitJError> {
        match order {
            1 => Ok(TrotterOrder::First),
            2 => Ok(TrotterOrder::Second),
            o => Err(SplitJError::InvalidArgument(format!("Trotter order must be 1 or 2, got {o}"))),
        }
    }
}

/// `J_L` for an operator on `k` qubits: `(2^(k+1))`-dimensional, ancilla last.
pub fn j_matrix(l: &ComplexMatrix) -> ComplexMatrix {
    let d = l.rows();
    let mut j = ComplexMatrix::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            j[(2 * r, 2 * c + 1)] = l[(c, r)].conj();
            j[(2 * r + 1, 2 * c)] = l[(r, c)];
        }
    }
    j
}

/// `exp(-i J_L s)` with `L` on the support qubits plus one ancilla.
#[derive(Clone, Debug, PartialEq)]
pub struct DilationUnitary {
    /// Unitary on the support of `L` followed by the ancilla, labelled
    /// `support ++ [n]` in an `n`-qubit register.
    pub u: Operator,
    /// Index into the plan's dissipative list.
    pub source: usize,
    pub sqrt_tau: f64,
    channel: KrausChannel,
}

impl DilationUnitary {
    /// Dilation of `l` (rates already folded in) over time `s^2`.
    pub fn new(num_qubits: usize, l: &Operator, source: usize, sqrt_tau: f64) -> Result<Self, SplitJError> {
        let m = expm_hermitian(&j_matrix(l.matrix()), sqrt_tau)?;
        let mut labels = l.qubits().to_vec();
        labels.push(num_qubits);
        let u = Operator::new(m, labels)?;
        let channel = KrausChannel::from_dilation(num_qubits, l.qubits().to_vec(), u.matrix(), 1, None)?;
        Ok(Self { u, source, sqrt_tau, channel })
    }

    /// Traced-ancilla channel as Kraus operators `<0|u|0>`, `<1|u|0>`.
    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }
}

/// One element of a Split-J step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepGate {
    Dilation(DilationUnitary),
    Unitary(Operator),
}

/// Terms and step count for a Split-J run.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitJPlan {
    sys: TcSystem,
    pub start_time: f64,
    pub total_time: f64,
    pub n_steps: usize,
    pub trotter_order: TrotterOrder,
    /// Single-site number terms.
    pub coherent_commuting: Vec<HamiltonianTerm>,
    /// Interaction terms and the pump (evaluated at `start_time`).
    pub coherent_noncommuting: Vec<HamiltonianTerm>,
    pub dissipative: Vec<LindbladTerm>,
}

impl SplitJPlan {
    pub fn new(
        sys: &TcSystem,
        start_time: f64,
        total_time: f64,
        n_steps: usize,
        trotter_order: TrotterOrder,
    ) -> Result<Self, SplitJError> {
        sys.validate()?;
        if n_steps == 0 {
            return Err(SplitJError::InvalidArgument("n_steps must be at least 1".into()));
        }
        if total_time.is_nan() || total_time < 0.0 || !start_time.is_finite() {
            return Err(SplitJError::InvalidArgument(format!("bad time span {start_time} + {total_time}")));
        }
        let (coherent_commuting, coherent_noncommuting) =
            hamiltonian_terms(sys, start_time).into_iter().partition(|t| t.kind.is_number());
        Ok(Self {
            sys: sys.clone(),
            start_time,
            total_time,
            n_steps,
            trotter_order,
            coherent_commuting,
            coherent_noncommuting,
            dissipative: lindblad_terms(sys),
        })
    }

    pub fn system(&self) -> &TcSystem {
        &self.sys
    }

    pub fn tau(&self) -> f64 {
        self.total_time / self.n_steps as f64
    }

    /// Largest of `||H_p||`, `||H'_q||` and `rate ||L_k||^2`.
    pub fn lambda_max(&self) -> f64 {
        let h = self.coherent_commuting.iter().chain(&self.coherent_noncommuting).map(|t| operator_norm(t.op.matrix()));
        let l = self.dissipative.iter().map(|d| d.rate * operator_norm(d.op.matrix()).powi(2));
        h.chain(l).fold(0.0, f64::max)
    }

    /// `ceil((K^2 + Q^2) lambda^2 t^2 / eps)`, at least 1.
    pub fn suggest_steps(&self, epsilon: f64) -> Result<usize, SplitJError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(SplitJError::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let k = self.dissipative.len() as f64;
        let q = self.coherent_noncommuting.len() as f64;
        let lambda = self.lambda_max();
        let n = ((k * k + q * q) * lambda * lambda * self.total_time * self.total_time / epsilon).ceil();
        Ok((n as usize).max(1))
    }

    fn slice_midpoint(&self, slice: usize) -> f64 {
        self.start_time + (slice as f64 + 0.5) * self.tau()
    }

    /// Gates of one step, in application order: every dilation, then the
    /// coherent part (a palindrome for second order).
    pub fn build_step(&self, slice: usize) -> Result<Vec<StepGate>, SplitJError> {
        if slice >= self.n_steps {
            return Err(SplitJError::InvalidArgument(format!("slice {slice} out of {}", self.n_steps)));
        }
        let n = self.sys.num_qubits();
        let tau = self.tau();
        let mut gates = Vec::new();
        for (k, term) in self.dissipative.iter().enumerate() {
            gates.push(StepGate::Dilation(DilationUnitary::new(n, &term.scaled(), k, tau.sqrt())?));
        }
        let mid = self.slice_midpoint(slice);
        let noncommuting: Vec<Operator> = self
            .coherent_noncommuting
            .iter()
            .map(|t| match t.kind {
                TermKind::Pump => Operator::new(
                    pump_matrix(self.sys.cavity_qubits, self.sys.pump_amp, self.sys.pump_phase(mid)),
                    t.op.qubits().to_vec(),
                )
                .expect("pump labels"),
                _ => t.op.clone(),
            })
            .collect();
        let exp = |op: &Operator, dt: f64| -> Result<StepGate, SplitJError> {
            Ok(StepGate::Unitary(Operator::new(expm_hermitian(op.matrix(), dt)?, op.qubits().to_vec())?))
        };
        match self.trotter_order {
            TrotterOrder::First => {
                for t in &self.coherent_commuting {
                    gates.push(exp(&t.op, tau)?);
                }
                for op in &noncommuting {
                    gates.push(exp(op, tau)?);
                }
            }
            TrotterOrder::Second => {
                let half = 0.5 * tau;
                let commuting: Vec<StepGate> =
                    self.coherent_commuting.iter().map(|t| exp(&t.op, half)).collect::<Result<_, _>>()?;
                let forward: Vec<StepGate> = noncommuting.iter().map(|op| exp(op, half)).collect::<Result<_, _>>()?;
                gates.extend(commuting.iter().cloned());
                gates.extend(forward.iter().cloned());
                gates.extend(forward.iter().rev().cloned());
                gates.extend(commuting);
            }
        }
        Ok(gates)
    }

    /// Apply one step to a density matrix.
    pub fn apply_step_exact(&self, slice: usize, rho: &ComplexMatrix) -> Result<ComplexMatrix, SplitJError> {
        let mut r = rho.clone();
        CompiledStep::new(self, slice)?.run_exact(&mut r);
        Ok(r)
    }
}

/// Shots and seed of a sampled run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSpec {
    pub shots: usize,
    pub seed: u64,
    #[serde(default)]
    pub exec: Execution,
    /// Keep the per-dilation ancilla outcomes in each record.
    #[serde(default)]
    pub record_ancillas: bool,
}

impl ShotSpec {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self { shots, seed, exec: Execution::default(), record_ancillas: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolveMode {
    Exact,
    Shot(ShotSpec),
}

/// Result of a run: the final density matrix or the measured shots.
#[derive(Clone, Debug, PartialEq)]
pub enum Evolved {
    Exact(RegisterState),
    Shots(Vec<ShotRecord>),
}

enum CompiledGate {
    Channel(KrausChannel),
    Unitary { u: ComplexMatrix, u_dag: ComplexMatrix, layout: LocalLayout },
}

/// One step's gates with precomputed Kraus operators and layouts.
struct CompiledStep {
    gates: Vec<CompiledGate>,
}

impl CompiledStep {
    fn new(plan: &SplitJPlan, slice: usize) -> Result<Self, SplitJError> {
        let n = plan.sys.num_qubits();
        let gates = plan
            .build_step(slice)?
            .into_iter()
            .map(|g| match g {
                StepGate::Dilation(d) => CompiledGate::Channel(d.channel),
                StepGate::Unitary(u) => CompiledGate::Unitary {
                    u_dag: u.matrix().adjoint(),
                    layout: u.layout(n),
                    u: u.matrix().clone(),
                },
            })
            .collect();
        Ok(Self { gates })
    }

    fn run_exact(&self, rho: &mut ComplexMatrix) {
        for g in &self.gates {
            match g {
                CompiledGate::Channel(c) => *rho = c.apply_exact(rho),
                CompiledGate::Unitary { u, u_dag, layout } => {
                    left_multiply(u, layout, rho);
                    right_multiply(u_dag, layout, rho);
                }
            }
        }
    }

    fn run_shot(&self, psi: &mut [C64], rng: &mut RandomSource, mut outcomes: Option<&mut Vec<u8>>) {
        for g in &self.gates {
            match g {
                CompiledGate::Channel(c) => {
                    let k = c.apply_sampled(psi, rng);
                    if let Some(o) = outcomes.as_deref_mut() {
                        o.push(k as u8);
                    }
                }
                CompiledGate::Unitary { u, layout, .. } => apply_to_vector(u, layout, psi),
            }
        }
    }
}

/// Evolve `initial` from `start_time` for `t` with `n` Split-J steps.
///
/// Exact mode returns the final density matrix. Shot mode needs a pure
/// initial state and returns one measured record per shot; shot `k` uses
/// stream `k` of the seed.
pub fn evolve_from(
    sys: &TcSystem,
    initial: &RegisterState,
    start_time: f64,
    t: f64,
    n: usize,
    mode: EvolveMode,
    order: TrotterOrder,
) -> Result<Evolved, SplitJError> {
    let plan = SplitJPlan::new(sys, start_time, t, n, order)?;
    if initial.num_qubits() != sys.num_qubits() {
        return Err(NumError::DimensionMismatch { expected: sys.num_qubits(), found: initial.num_qubits() }.into());
    }
    let steps: Vec<CompiledStep> = if t == 0.0 {
        Vec::new()
    } else if sys.is_static() {
        vec![CompiledStep::new(&plan, 0)?]
    } else {
        (0..n).map(|s| CompiledStep::new(&plan, s)).collect::<Result<_, _>>()?
    };
    let step_for = |s: usize| &steps[if steps.len() == 1 { 0 } else { s }];
    let count = if t == 0.0 { 0 } else { n };
    match mode {
        EvolveMode::Exact => {
            let mut rho = initial.to_exact()?.density();
            for s in 0..count {
                step_for(s).run_exact(&mut rho);
            }
            Ok(Evolved::Exact(RegisterState::Exact { num_qubits: sys.num_qubits(), rho }))
        }
        EvolveMode::Shot(spec) => {
            let RegisterState::Shot { amplitudes, .. } = initial else {
                return Err(QsimError::WrongMode(crate::qsim::Mode::Exact).into());
            };
            let root = RandomSource::new(spec.seed);
            let nq = sys.num_qubits();
            let records = map_indexed(spec.shots, spec.exec, |k| {
                let mut rng = root.fork(k as u64);
                let mut psi = amplitudes.clone();
                let mut outcomes = Vec::new();
                for s in 0..count {
                    step_for(s).run_shot(&mut psi, &mut rng, spec.record_ancillas.then_some(&mut outcomes));
                }
                let probs: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
                let index = sample_basis(&probs, &mut rng);
                ShotRecord { bitstring: bits_of(index, nq), seed: spec.seed, stream: k as u64, ancilla_outcomes: outcomes }
            });
            Ok(Evolved::Shots(records))
        }
    }
}

/// [`evolve_from`] starting at time zero.
pub fn evolve(
    sys: &TcSystem,
    initial: &RegisterState,
    t: f64,
    n: usize,
    mode: EvolveMode,
    order: TrotterOrder,
) -> Result<Evolved, SplitJError> {
    evolve_from(sys, initial, 0.0, t, n, mode, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Superoperator;
    use crate::oracle::liouville_matrix;
    use crate::qsim::Mode;

    fn unit_system() -> TcSystem {
        TcSystem {
            pump_amp: 0.3,
            frame_shift: Some(0.0),
            ..TcSystem::homogeneous(1, 1.0, 1.3, 0.7, 0.5, 0.2)
        }
    }

    #[test]
    fn j_matrix_block_structure() {
        let l = crate::tcmodel::lowering_matrix();
        let j = j_matrix(&l);
        assert!(j.is_hermitian(1e-15));
        // |1>_sys|0>_anc couples to |0>_sys|1>_anc through L.
        assert_eq!(j[(1, 2)].re, 1.0);
        assert_eq!(j[(2, 1)].re, 1.0);
    }

    #[test]
    fn gate_counts_per_order() {
        let sys = TcSystem::homogeneous(1, 245000.0, 245000.0, 100.0, 24.5, 0.4);
        let plan = SplitJPlan::new(&sys, 0.0, 0.1, 10, TrotterOrder::Second).unwrap();
        let gates = plan.build_step(0).unwrap();
        let dilations = gates.iter().filter(|g| matches!(g, StepGate::Dilation(_))).count();
        assert_eq!((dilations, gates.len() - dilations), (2, 6));
        let first = SplitJPlan::new(&sys, 0.0, 0.1, 10, TrotterOrder::First).unwrap();
        assert_eq!(first.build_step(0).unwrap().len(), 2 + 3);
        assert!(plan.build_step(10).is_err());
    }

    #[test]
    fn suggest_steps_formula() {
        let sys = TcSystem::homogeneous(1, 0.0, 0.0, 0.0, 0.0, 0.0);
        let plan = SplitJPlan::new(&sys, 0.0, 0.0, 1, TrotterOrder::First).unwrap();
        assert_eq!(plan.suggest_steps(0.1).unwrap(), 1);
        assert!(plan.suggest_steps(1.5).is_err());
    }

    #[test]
    fn one_step_is_first_order_in_tau() {
        let sys = unit_system();
        let tau = 1e-3;
        let plan = SplitJPlan::new(&sys, 0.0, tau, 1, TrotterOrder::Second).unwrap();
        let step = Superoperator::from_map(sys.dim(), |r| plan.apply_step_exact(0, r).unwrap());
        let l = liouville_matrix(&sys, 0.5 * tau).unwrap();
        let mut want = ComplexMatrix::identity(sys.dim() * sys.dim());
        want.add_scaled(num_complex::Complex64::new(tau, 0.0), l.matrix());
        assert!(step.matrix().max_abs_diff(&want) < 50.0 * tau * tau);
    }

    #[test]
    fn zero_time_leaves_state_unchanged() {
        let sys = unit_system();
        let init = RegisterState::basis(3, 0b010, Mode::Exact).unwrap();
        let Evolved::Exact(out) = evolve(&sys, &init, 0.0, 5, EvolveMode::Exact, TrotterOrder::Second).unwrap() else {
            panic!("exact mode")
        };
        assert_eq!(out, init);
    }

    #[test]
    fn shot_mode_needs_pure_state() {
        let sys = unit_system();
        let init = RegisterState::basis(3, 0b010, Mode::Exact).unwrap();
        let r = evolve(&sys, &init, 0.1, 5, EvolveMode::Shot(ShotSpec::new(3, 1)), TrotterOrder::Second);
        assert!(matches!(r, Err(SplitJError::Qsim(QsimError::WrongMode(_)))));
    }
}
