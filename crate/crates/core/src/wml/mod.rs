//! Randomized wave-matrix Lindbladization.
//!
//! Each step samples one program state: a Hamiltonian program `|s_j>` with
//! probability `|c_j| / c`, applied through `exp(-i sign(c_j) Δ SWAP)`, or a
//! Lindblad program `(L ⊗ I)|Γ> / ||L||_2` with probability
//! `rate ||L||_2^2 / c`, applied through the fixed interaction `exp(Δ 𝓜)`.
//! The program register is then discarded. With `Δ = c t / n`, `n` steps
//! approximate the Lindblad evolution over `t`.
//!
//! Program registers are not materialized: each sampled term is compiled to
//! the Kraus operators it induces on its system support.

mod circuit;
mod ensemble;
mod fixed;

use thiserror::Error;

pub use ensemble::{
    c_bound, c_bound_single_coupling, lindblad_program, sample_step, tc_program_ensemble, HamiltonianProgram,
    LindbladProgram, ProgramEnsemble, SampledTerm,
};
pub use fixed::{
    exact_kraus, four_unitary_grouping, four_unitary_grouping_adjoint_branch, m_matrix, pauli_decomposition_m,
    protocol_heralded, protocol_unheralded, swap_exponential, FixedInteraction, FixedInteractionImpl,
};

use crate::numkit::{vectorize, unvectorize, ComplexMatrix, NumError, Superoperator};
use crate::par::map_indexed;
use crate::qsim::{bits_of, dilation_kraus, sample_basis, KrausChannel, Mode, QsimError, RandomSource, RegisterState, ShotRecord};
use crate::splitj::{Evolved, ShotSpec};
use crate::tcmodel::{TcError, TcSystem};

/// Largest register for which static averaged evolution is done by powering
/// the dense step superoperator.
pub const MAX_DENSE_POWER_QUBITS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum WmlError {
    #[error("program states need a two-qubit cavity, got {0}")]
    UnsupportedCavitySize(usize),
    #[error("no realization for Lindblad operators on {0} qubits")]
    UnsupportedQ(usize),
    #[error("ensemble has no terms")]
    EmptyEnsemble,
    #[error("the exact Kraus realization is not available in {0:?} mode")]
    WrongMode(Mode),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Exact averaged channel or sampled shots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WmlMode {
    ExactAveraged,
    Shot(ShotSpec),
}

/// Per-term channels of one step and their sampling weights.
struct StepChannels {
    channels: Vec<KrausChannel>,
    probabilities: Vec<f64>,
}

impl StepChannels {
    fn apply_averaged(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for (ch, &p) in self.channels.iter().zip(&self.probabilities) {
            out += &ch.apply_exact(rho).scale_real(p);
        }
        out
    }
}

/// Step count, step size and fixed interactions for one WML run.
#[derive(Clone, Debug, PartialEq)]
pub struct WmlPlan {
    sys: TcSystem,
    pub start_time: f64,
    pub total_time: f64,
    pub n_steps: usize,
    pub kind: FixedInteractionImpl,
    c: f64,
    /// Fixed interaction for Lindblad supports of `q = index + 1` qubits.
    fixed: Vec<FixedInteraction>,
}

impl WmlPlan {
    pub fn new(
        sys: &TcSystem,
        start_time: f64,
        total_time: f64,
        n_steps: usize,
        kind: FixedInteractionImpl,
    ) -> Result<Self, WmlError> {
        if n_steps == 0 {
            return Err(WmlError::InvalidArgument("step count must be positive".into()));
        }
        if !(total_time >= 0.0 && total_time.is_finite() && start_time.is_finite()) {
            return Err(WmlError::InvalidArgument(format!("invalid time interval {start_time} + {total_time}")));
        }
        let ens = tc_program_ensemble(sys, start_time)?;
        let delta = ens.c * total_time / n_steps as f64;
        let max_q = ens.lindblad.iter().map(|l| l.support.len()).max().unwrap_or(0);
        let fixed = (1..=max_q).map(|q| FixedInteraction::new(kind, q, delta)).collect::<Result<_, _>>()?;
        Ok(Self { sys: sys.clone(), start_time, total_time, n_steps, kind, c: ens.c, fixed })
    }

    pub fn system(&self) -> &TcSystem {
        &self.sys
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `Δ = c t / n`.
    pub fn delta(&self) -> f64 {
        self.c * self.total_time / self.n_steps as f64
    }

    /// Physical time per step, `t / n`.
    pub fn tau(&self) -> f64 {
        self.total_time / self.n_steps as f64
    }

    /// Smallest `n` with `Δ <= 0.05` and `(c t)^2 / n <= epsilon`.
    pub fn suggest_steps(sys: &TcSystem, t: f64, epsilon: f64) -> Result<usize, WmlError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(WmlError::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let ct = tc_program_ensemble(sys, 0.0)?.c * t;
        Ok(((ct / 0.05).ceil().max((ct * ct / epsilon).ceil()) as usize).max(1))
    }

    /// Ensemble at the midpoint of `slice`.
    pub fn ensemble(&self, slice: usize) -> Result<ProgramEnsemble, WmlError> {
        tc_program_ensemble(&self.sys, self.start_time + (slice as f64 + 0.5) * self.tau())
    }

    fn step_channels(&self, slice: usize) -> Result<StepChannels, WmlError> {
        let ens = self.ensemble(slice)?;
        let n = self.sys.num_qubits();
        let delta = self.delta();
        let mut channels = Vec::with_capacity(ens.len());
        for p in &ens.hamiltonian {
            let q = p.support.len();
            let u = swap_exponential(p.coefficient.signum(), delta, q);
            let ops = dilation_kraus(&u, q, q, Some(&p.state))?;
            channels.push(KrausChannel::new(n, p.support.clone(), ops)?);
        }
        for p in &ens.lindblad {
            let q = p.support.len();
            let mut ops = Vec::new();
            for a in self.fixed[q - 1].kraus() {
                ops.extend(dilation_kraus(a, q, 2 * q, Some(&p.state))?);
            }
            channels.push(KrausChannel::new(n, p.support.clone(), ops)?);
        }
        let probabilities = ens.weights().into_iter().map(|w| w / ens.c).collect();
        Ok(StepChannels { channels, probabilities })
    }

    /// Averaged channel of step `slice` as a superoperator on the register.
    pub fn averaged_step(&self, slice: usize) -> Result<Superoperator, WmlError> {
        let step = self.step_channels(slice)?;
        Ok(Superoperator::from_map(self.sys.dim(), |x| step.apply_averaged(x)))
    }
}

/// `m^k` by repeated squaring.
fn matrix_power(m: &ComplexMatrix, mut k: usize) -> ComplexMatrix {
    let mut result = ComplexMatrix::identity(m.rows());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = result.matmul(&base);
        }
        k >>= 1;
        if k > 0 {
            base = base.matmul(&base);
        }
    }
    result
}

/// Evolve `initial` from `start_time` for `t` with `n` WML steps.
///
/// `ExactAveraged` applies the probability-weighted mixture of every term's
/// channel at each step. `Shot` samples one term per step and shot; shot `k`
/// uses stream `k` of the seed.
pub fn evolve_wml_from(
    sys: &TcSystem,
    initial: &RegisterState,
    start_time: f64,
    t: f64,
    n: usize,
    kind: FixedInteractionImpl,
    mode: WmlMode,
) -> Result<Evolved, WmlError> {
    if initial.num_qubits() != sys.num_qubits() {
        return Err(NumError::DimensionMismatch { expected: sys.num_qubits(), found: initial.num_qubits() }.into());
    }
    if kind == FixedInteractionImpl::ExactKraus && matches!(mode, WmlMode::Shot(_)) {
        return Err(WmlError::WrongMode(Mode::Shot));
    }
    let plan = WmlPlan::new(sys, start_time, t, n, kind)?;
    let count = if t == 0.0 { 0 } else { n };
    let nq = sys.num_qubits();
    match mode {
        WmlMode::ExactAveraged => {
            let mut rho = initial.to_exact()?.density();
            if count == 0 {
            } else if sys.is_static() && nq <= MAX_DENSE_POWER_QUBITS {
                let phi = plan.averaged_step(0)?;
                let power = matrix_power(phi.matrix(), count);
                rho = unvectorize(&power.mul_vec(&vectorize(&rho)), sys.dim());
            } else if sys.is_static() {
                let step = plan.step_channels(0)?;
                for _ in 0..count {
                    rho = step.apply_averaged(&rho);
                }
            } else {
                for s in 0..count {
                    rho = plan.step_channels(s)?.apply_averaged(&rho);
                }
            }
            Ok(Evolved::Exact(RegisterState::Exact { num_qubits: nq, rho }))
        }
        WmlMode::Shot(spec) => {
            let RegisterState::Shot { amplitudes, .. } = initial else {
                return Err(QsimError::WrongMode(Mode::Exact).into());
            };
            let steps: Vec<StepChannels> = if count == 0 {
                Vec::new()
            } else if sys.is_static() {
                vec![plan.step_channels(0)?]
            } else {
                (0..count).map(|s| plan.step_channels(s)).collect::<Result<_, _>>()?
            };
            let step_for = |s: usize| &steps[if steps.len() == 1 { 0 } else { s }];
            let root = RandomSource::new(spec.seed);
            let records = map_indexed(spec.shots, spec.exec, |k| {
                let mut rng = root.fork(k as u64);
                let mut psi = amplitudes.clone();
                let mut outcomes = Vec::new();
                for s in 0..count {
                    let step = step_for(s);
                    let j = rng.choose_weighted(&step.probabilities);
                    let branch = step.channels[j].apply_sampled(&mut psi, &mut rng);
                    if spec.record_ancillas {
                        outcomes.push(branch as u8);
                    }
                }
                let probs: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
                let index = sample_basis(&probs, &mut rng);
                ShotRecord { bitstring: bits_of(index, nq), seed: spec.seed, stream: k as u64, ancilla_outcomes: outcomes }
            });
            Ok(Evolved::Shots(records))
        }
    }
}

/// [`evolve_wml_from`] starting at time zero.
pub fn evolve_wml(
    sys: &TcSystem,
    initial: &RegisterState,
    t: f64,
    n: usize,
    kind: FixedInteractionImpl,
    mode: WmlMode,
) -> Result<Evolved, WmlError> {
    evolve_wml_from(sys, initial, 0.0, t, n, kind, mode)
}
