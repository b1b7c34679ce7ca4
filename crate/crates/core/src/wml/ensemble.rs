//! Program states of the Tavis-Cummings generator and the sampling
//! distribution over them.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::WmlError;
use crate::numkit::{vector_norm, ComplexMatrix, Operator};
use crate::qsim::RandomSource;
use crate::tcmodel::{lindblad_terms, TcSystem, TermKind};

/// Pure program state `|s>` for a Hamiltonian piece `coefficient |s><s|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianProgram {
    pub kind: TermKind,
    pub coefficient: f64,
    pub state: Vec<C64>,
    pub support: Vec<usize>,
}

impl HamiltonianProgram {
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.state, &self.state)
    }
}

/// Normalized `(L ⊗ I)|Γ>` with weight `rate ||L||_2^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladProgram {
    /// Index into [`lindblad_terms`].
    pub source: usize,
    pub weight: f64,
    pub state: Vec<C64>,
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramEnsemble {
    pub time: f64,
    pub hamiltonian: Vec<HamiltonianProgram>,
    pub lindblad: Vec<LindbladProgram>,
    /// `sum |c_j| + sum weight_k`.
    pub c: f64,
}

/// A term drawn from an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampledTerm {
    Hamiltonian(usize),
    Lindblad(usize),
}

impl ProgramEnsemble {
    pub fn len(&self) -> usize {
        self.hamiltonian.len() + self.lindblad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized sampling weights, Hamiltonian terms first.
    pub fn weights(&self) -> Vec<f64> {
        self.hamiltonian.iter().map(|h| h.coefficient.abs()).chain(self.lindblad.iter().map(|l| l.weight)).collect()
    }

    /// Term at flat index `i` of [`Self::weights`].
    pub fn term(&self, i: usize) -> SampledTerm {
        if i < self.hamiltonian.len() {
            SampledTerm::Hamiltonian(i)
        } else {
            SampledTerm::Lindblad(i - self.hamiltonian.len())
        }
    }

    /// `sum c_j |s_j><s_j|` embedded in an `n`-qubit register.
    pub fn hamiltonian_matrix(&self, n: usize) -> Result<ComplexMatrix, WmlError> {
        let mut h = ComplexMatrix::zeros(1 << n, 1 << n);
        for p in &self.hamiltonian {
            let op = Operator::new(p.density().scale_real(p.coefficient), p.support.clone())?;
            h += &op.embed(n)?;
        }
        Ok(h)
    }
}

/// Draw a term with probability `|c_j| / c` or `weight_k / c`.
pub fn sample_step(ens: &ProgramEnsemble, rng: &mut RandomSource) -> Result<SampledTerm, WmlError> {
    if ens.is_empty() || ens.c.is_nan() || ens.c <= 0.0 {
        return Err(WmlError::EmptyEnsemble);
    }
    Ok(ens.term(rng.choose_weighted(&ens.weights())))
}

/// Normalized `(L ⊗ I)|Γ>` and `||L||_2^2`.
pub fn lindblad_program(l: &ComplexMatrix) -> (Vec<C64>, f64) {
    let d = l.rows();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for r in 0..d {
            v[r * d + i] = l[(r, i)];
        }
    }
    let norm = vector_norm(&v);
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
    (v, norm * norm)
}

fn state(num_qubits: usize, entries: &[(usize, C64)]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 1 << num_qubits];
    for &(i, a) in entries {
        v[i] += a;
    }
    let n = vector_norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Signed weights `(1, -1, sqrt 2, -sqrt 2, sqrt 3, -sqrt 3)`.
fn ladder_weights() -> [f64; 6] {
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    [1.0, -1.0, s2, -s2, s3, -s3]
}

/// Ensemble for the generator at `slice_time`. Terms with a zero coefficient
/// or rate are omitted.
pub fn tc_program_ensemble(sys: &TcSystem, slice_time: f64) -> Result<ProgramEnsemble, WmlError> {
    sys.validate()?;
    if sys.cavity_qubits != 2 {
        return Err(WmlError::UnsupportedCavitySize(sys.cavity_qubits));
    }
    let one = C64::new(1.0, 0.0);
    let cav = sys.cavity_qubit_labels();
    let mut hamiltonian = Vec::new();
    let mut push = |kind: TermKind, coefficient: f64, state: Vec<C64>, support: Vec<usize>| {
        if coefficient != 0.0 {
            hamiltonian.push(HamiltonianProgram { kind, coefficient, state, support });
        }
    };
    let wc = sys.cavity_detuning();
    for n in 1..4 {
        push(TermKind::CavityNumber, wc * n as f64, state(2, &[(n, one)]), cav.clone());
    }
    for j in 0..sys.num_emitters() {
        push(TermKind::EmitterNumber(j), sys.emitter_detuning(j), state(1, &[(1, one)]), vec![sys.emitter_qubit(j)]);
    }
    let w = ladder_weights();
    for j in 0..sys.num_emitters() {
        let mut support = cav.clone();
        support.push(sys.emitter_qubit(j));
        // |n, 1> and |n+1, 0> on (cavity, emitter), in phase and out of phase.
        for n in 0..3 {
            let (lo, hi) = ((n << 1) | 1, (n + 1) << 1);
            push(TermKind::Interaction(j), sys.g[j] * w[2 * n], state(3, &[(lo, one), (hi, one)]), support.clone());
            push(TermKind::Interaction(j), sys.g[j] * w[2 * n + 1], state(3, &[(lo, one), (hi, -one)]), support.clone());
        }
    }
    if sys.pump_amp != 0.0 {
        let phase = C64::from_polar(1.0, -sys.pump_phase(slice_time));
        for n in 0..3 {
            let a = sys.pump_amp;
            push(TermKind::Pump, a * w[2 * n], state(2, &[(n, one), (n + 1, phase)]), cav.clone());
            push(TermKind::Pump, a * w[2 * n + 1], state(2, &[(n, one), (n + 1, -phase)]), cav.clone());
        }
    }
    let mut lindblad = Vec::new();
    for (source, term) in lindblad_terms(sys).into_iter().enumerate() {
        if term.rate == 0.0 {
            continue;
        }
        let (state, norm2) = lindblad_program(term.op.matrix());
        lindblad.push(LindbladProgram { source, weight: term.rate * norm2, state, support: term.op.qubits().to_vec() });
    }
    let c = hamiltonian.iter().map(|h| h.coefficient.abs()).sum::<f64>() + lindblad.iter().map(|l| l.weight).sum::<f64>();
    Ok(ProgramEnsemble { time: slice_time, hamiltonian, lindblad, c })
}

fn bound_parts(sys: &TcSystem, r: usize) -> (f64, f64, f64, f64) {
    let r = r as f64;
    let n = sys.num_emitters() as f64;
    let we = (0..sys.num_emitters()).map(|j| sys.emitter_detuning(j).abs()).fold(0.0, f64::max);
    let g = sys.g.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let cavity = (sys.kappa + sys.cavity_detuning().abs()) * r * r;
    let emitters = (sys.gamma + we) * n;
    (cavity, emitters, g * r * r.sqrt(), sys.pump_amp.abs() * r * r.sqrt())
}

/// Closed-form upper bound on the ensemble's `c` with `r` the largest photon
/// number: `(κ + ω_C) r^2 + (γ + ω_E) N + 2 (N g + E_P) r sqrt r`, using frame
/// frequencies and the largest emitter detuning and coupling.
pub fn c_bound(sys: &TcSystem, r: usize) -> f64 {
    let (cavity, emitters, g, pump) = bound_parts(sys, r);
    cavity + emitters + 2.0 * (sys.num_emitters() as f64 * g + pump)
}

/// As [`c_bound`] but counting the coupling once rather than once per
/// emitter. Not a bound for more than one emitter.
pub fn c_bound_single_coupling(sys: &TcSystem, r: usize) -> f64 {
    let (cavity, emitters, g, pump) = bound_parts(sys, r);
    cavity + emitters + 2.0 * (g + pump)
}
