//! Qubit register simulation in two modes: sampled pure states (`Shot`) and
//! density matrices (`Exact`), with local Kraus channels, dilated channels and
//! reproducible per-shot random streams.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::local::{apply_kraus, apply_to_vector, left_multiply, right_multiply, LocalLayout};
use crate::numkit::{vector_norm, ComplexMatrix, NumError, Operator, Superoperator};

/// Largest pure-state register, ancillas and program qubits included.
pub const MAX_SHOT_QUBITS: usize = 14;
/// Largest density-matrix register.
pub const MAX_EXACT_QUBITS: usize = 12;

const UNITARY_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("operator is not unitary within {UNITARY_TOL}")]
    NotUnitary,
    #[error("{needed} qubits needed, limit is {limit}")]
    AncillaBudgetExceeded { needed: usize, limit: usize },
    #[error("register of {qubits} qubits exceeds the {limit}-qubit limit")]
    RegisterTooLarge { qubits: usize, limit: usize },
    #[error("operation not available in {0:?} mode")]
    WrongMode(Mode),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Shot,
    Exact,
}

/// Register contents: a pure state in `Shot` mode, a density matrix in `Exact`.
#[derive(Clone, Debug, PartialEq)]
pub enum RegisterState {
    Shot { num_qubits: usize, amplitudes: Vec<C64> },
    Exact { num_qubits: usize, rho: ComplexMatrix },
}

impl RegisterState {
    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize, mode: Mode) -> Result<Self, QsimError> {
        check_size(num_qubits, mode)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QsimError::InvalidState(format!("basis index {index} out of range")));
        }
        Ok(match mode {
            Mode::Shot => {
                let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
                amplitudes[index] = C64::new(1.0, 0.0);
                RegisterState::Shot { num_qubits, amplitudes }
            }
            Mode::Exact => RegisterState::Exact { num_qubits, rho: ComplexMatrix::basis_projector(dim, index) },
        })
    }

    /// Normalized pure state.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self, QsimError> {
        let num_qubits = qubits_for(amplitudes.len())?;
        check_size(num_qubits, Mode::Shot)?;
        if (vector_norm(&amplitudes) - 1.0).abs() > NORM_TOL {
            return Err(QsimError::InvalidState("amplitudes are not normalized".into()));
        }
        Ok(RegisterState::Shot { num_qubits, amplitudes })
    }

    /// Hermitian, unit-trace density matrix.
    pub fn from_density(rho: ComplexMatrix) -> Result<Self, QsimError> {
        if !rho.is_square() {
            return Err(NumError::NotSquare { rows: rho.rows(), cols: rho.cols() }.into());
        }
        let num_qubits = qubits_for(rho.rows())?;
        check_size(num_qubits, Mode::Exact)?;
        if !rho.is_hermitian(1e-9) || (rho.trace().re - 1.0).abs() > NORM_TOL {
            return Err(QsimError::InvalidState("density matrix must be Hermitian with unit trace".into()));
        }
        Ok(RegisterState::Exact { num_qubits, rho })
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            RegisterState::Shot { num_qubits, .. } | RegisterState::Exact { num_qubits, .. } => *num_qubits,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            RegisterState::Shot { .. } => Mode::Shot,
            RegisterState::Exact { .. } => Mode::Exact,
        }
    }

    /// Density matrix of the state (`|psi><psi|` in `Shot` mode).
    pub fn density(&self) -> ComplexMatrix {
        match self {
            RegisterState::Shot { amplitudes, .. } => ComplexMatrix::outer(amplitudes, amplitudes),
            RegisterState::Exact { rho, .. } => rho.clone(),
        }
    }

    /// Same state in `Exact` mode.
    pub fn to_exact(&self) -> Result<Self, QsimError> {
        check_size(self.num_qubits(), Mode::Exact)?;
        Ok(RegisterState::Exact { num_qubits: self.num_qubits(), rho: self.density() })
    }

    pub fn trace(&self) -> f64 {
        match self {
            RegisterState::Shot { amplitudes, .. } => vector_norm(amplitudes).powi(2),
            RegisterState::Exact { rho, .. } => rho.trace().re,
        }
    }

    /// Computational basis probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            RegisterState::Shot { amplitudes, .. } => amplitudes.iter().map(|z| z.norm_sqr()).collect(),
            RegisterState::Exact { rho, .. } => (0..rho.rows()).map(|i| rho[(i, i)].re).collect(),
        }
    }
}

fn qubits_for(dim: usize) -> Result<usize, QsimError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QsimError::InvalidState(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_size(num_qubits: usize, mode: Mode) -> Result<(), QsimError> {
    let limit = match mode {
        Mode::Shot => MAX_SHOT_QUBITS,
        Mode::Exact => MAX_EXACT_QUBITS,
    };
    if num_qubits > limit {
        return Err(QsimError::RegisterTooLarge { qubits: num_qubits, limit });
    }
    Ok(())
}

/// Seeded ChaCha stream. `fork(k)` gives stream `k` of the same seed,
/// independent of how far the parent has advanced, so parallel shots are
/// reproducible regardless of scheduling.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn fork(&self, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        Self { seed: self.seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Index drawn with probability proportional to `weights`.
    ///
    /// *Panics* if the weights do not have a positive finite sum.
    pub fn choose_weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0 && total.is_finite(), "weights must have a positive sum");
        let mut target = self.uniform() * total;
        for (i, &w) in weights.iter().enumerate() {
            if target < w {
                return i;
            }
            target -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).expect("positive weight")
    }
}

/// Outcome of one shot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// One entry (0 or 1) per system qubit, qubit 0 first.
    pub bitstring: Vec<u8>,
    pub seed: u64,
    pub stream: u64,
    /// Branch index of every mid-circuit ancilla measurement, when recorded.
    pub ancilla_outcomes: Vec<u8>,
}

impl ShotRecord {
    pub fn index(&self) -> usize {
        self.bitstring.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

pub fn bits_of(index: usize, num_qubits: usize) -> Vec<u8> {
    (0..num_qubits).map(|q| ((index >> (num_qubits - 1 - q)) & 1) as u8).collect()
}

/// Kraus channel on a few qubits of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    layout: LocalLayout,
    qubits: Vec<usize>,
    ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(num_qubits: usize, qubits: Vec<usize>, ops: Vec<ComplexMatrix>) -> Result<Self, QsimError> {
        let dim = 1usize << qubits.len();
        if ops.is_empty() || ops.iter().any(|k| k.rows() != dim || k.cols() != dim) {
            return Err(NumError::DimensionMismatch { expected: dim, found: ops.first().map_or(0, |k| k.rows()) }.into());
        }
        if qubits.iter().any(|&q| q >= num_qubits) {
            return Err(NumError::InvalidLabels(format!("{qubits:?} outside {num_qubits}-qubit register")).into());
        }
        Operator::new(ComplexMatrix::identity(dim), qubits.clone())?;
        Ok(Self { layout: LocalLayout::new(num_qubits, &qubits), qubits, ops })
    }

    /// Kraus operators `(I ⊗ <r|) u (I ⊗ |phi>)` of a unitary acting on the
    /// channel qubits followed by `num_ancillas` ancillas prepared in `phi`
    /// (`|0...0>` when `None`).
    pub fn from_dilation(
        num_qubits: usize,
        qubits: Vec<usize>,
        u: &ComplexMatrix,
        num_ancillas: usize,
        ancilla_state: Option<&[C64]>,
    ) -> Result<Self, QsimError> {
        let ops = dilation_kraus(u, qubits.len(), num_ancillas, ancilla_state)?;
        Self::new(num_qubits, qubits, ops)
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    /// `sum_k K rho K^dag` on the full register.
    pub fn apply_exact(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        apply_kraus(&self.ops, &self.layout, rho)
    }

    /// Pick branch `k` with probability `||K_k psi||^2 / sum_j ||K_j psi||^2`
    /// and renormalize. Returns the branch index.
    pub fn apply_sampled(&self, psi: &mut [C64], rng: &mut RandomSource) -> usize {
        if self.ops.len() == 1 {
            apply_to_vector(&self.ops[0], &self.layout, psi);
            normalize(psi);
            return 0;
        }
        let branches: Vec<Vec<C64>> = self
            .ops
            .iter()
            .map(|k| {
                let mut v = psi.to_vec();
                apply_to_vector(k, &self.layout, &mut v);
                v
            })
            .collect();
        let weights: Vec<f64> = branches.iter().map(|v| vector_norm(v).powi(2)).collect();
        let k = rng.choose_weighted(&weights);
        let s = 1.0 / weights[k].sqrt();
        for (p, &b) in psi.iter_mut().zip(&branches[k]) {
            *p = b * s;
        }
        k
    }

    /// `max |sum K^dag K - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.layout.local_dim();
        let sum = self.ops.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, k| &acc + &k.adjoint().matmul(k));
        sum.max_abs_diff(&ComplexMatrix::identity(dim))
    }

    /// Superoperator of the local channel on its own qubits.
    pub fn local_superoperator(&self) -> Superoperator {
        let dim = self.layout.local_dim();
        Superoperator::from_map(dim, |x| {
            self.ops.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, k| &acc + &k.matmul(x).matmul(&k.adjoint()))
        })
    }
}

/// Kraus operators of `rho -> Tr_anc[u (rho ⊗ phi) u^dag]`, system first.
pub fn dilation_kraus(
    u: &ComplexMatrix,
    system_qubits: usize,
    num_ancillas: usize,
    ancilla_state: Option<&[C64]>,
) -> Result<Vec<ComplexMatrix>, QsimError> {
    let ds = 1usize << system_qubits;
    let da = 1usize << num_ancillas;
    if u.rows() != ds * da || u.cols() != ds * da {
        return Err(NumError::DimensionMismatch { expected: ds * da, found: u.rows() }.into());
    }
    let mut phi = vec![C64::new(0.0, 0.0); da];
    match ancilla_state {
        Some(s) if s.len() == da => phi.copy_from_slice(s),
        Some(s) => return Err(NumError::DimensionMismatch { expected: da, found: s.len() }.into()),
        None => phi[0] = C64::new(1.0, 0.0),
    }
    Ok((0..da)
        .map(|r| {
            ComplexMatrix::from_fn(ds, ds, |i, j| (0..da).map(|a| u[(i * da + r, j * da + a)] * phi[a]).sum())
        })
        .collect())
}

fn normalize(psi: &mut [C64]) {
    let s = 1.0 / vector_norm(psi);
    psi.iter_mut().for_each(|z| *z *= s);
}

fn check_labels(op: &Operator, n: usize) -> Result<(), QsimError> {
    if let Some(&q) = op.qubits().iter().find(|&&q| q >= n) {
        return Err(NumError::InvalidLabels(format!("qubit {q} outside {n}-qubit register")).into());
    }
    Ok(())
}

/// Apply a unitary on labelled qubits.
pub fn apply_unitary(state: &RegisterState, u: &Operator) -> Result<RegisterState, QsimError> {
    if !u.matrix().is_unitary(UNITARY_TOL) {
        return Err(QsimError::NotUnitary);
    }
    let n = state.num_qubits();
    check_labels(u, n)?;
    let layout = u.layout(n);
    Ok(match state {
        RegisterState::Shot { amplitudes, .. } => {
            let mut v = amplitudes.clone();
            apply_to_vector(u.matrix(), &layout, &mut v);
            RegisterState::Shot { num_qubits: n, amplitudes: v }
        }
        RegisterState::Exact { rho, .. } => {
            let mut r = rho.clone();
            left_multiply(u.matrix(), &layout, &mut r);
            right_multiply(&u.matrix().adjoint(), &layout, &mut r);
            RegisterState::Exact { num_qubits: n, rho: r }
        }
    })
}

/// Append `num_ancillas` fresh `|0>` ancillas, apply `u`, and remove the
/// ancillas: measured in `Shot` mode (outcome returned), traced out in
/// `Exact` mode.
///
/// `u` is labelled by system qubits followed by the ancilla labels
/// `n, n+1, ..., n+num_ancillas-1`.
pub fn apply_dilated_channel(
    state: &RegisterState,
    u: &Operator,
    num_ancillas: usize,
    rng: &mut RandomSource,
) -> Result<(RegisterState, Option<usize>), QsimError> {
    let n = state.num_qubits();
    let limit = MAX_SHOT_QUBITS;
    if n + num_ancillas > limit {
        return Err(QsimError::AncillaBudgetExceeded { needed: n + num_ancillas, limit });
    }
    if !u.matrix().is_unitary(UNITARY_TOL) {
        return Err(QsimError::NotUnitary);
    }
    let labels = u.qubits();
    if labels.len() < num_ancillas
        || labels[labels.len() - num_ancillas..].iter().enumerate().any(|(k, &q)| q != n + k)
    {
        return Err(NumError::InvalidLabels(format!("ancilla labels must be {n}..{} at the end", n + num_ancillas))
            .into());
    }
    let system: Vec<usize> = labels[..labels.len() - num_ancillas].to_vec();
    let channel = KrausChannel::from_dilation(n, system, u.matrix(), num_ancillas, None)?;
    Ok(match state {
        RegisterState::Shot { amplitudes, .. } => {
            let mut v = amplitudes.clone();
            let k = channel.apply_sampled(&mut v, rng);
            (RegisterState::Shot { num_qubits: n, amplitudes: v }, Some(k))
        }
        RegisterState::Exact { rho, .. } => (RegisterState::Exact { num_qubits: n, rho: channel.apply_exact(rho) }, None),
    })
}

/// Sample a computational basis index from `probabilities`.
pub fn sample_basis(probabilities: &[f64], rng: &mut RandomSource) -> usize {
    let clipped: Vec<f64> = probabilities.iter().map(|&p| p.max(0.0)).collect();
    rng.choose_weighted(&clipped)
}

/// Measure every qubit of a pure state.
pub fn measure_all(state: &RegisterState, rng: &mut RandomSource) -> Result<ShotRecord, QsimError> {
    match state {
        RegisterState::Exact { .. } => Err(QsimError::WrongMode(Mode::Exact)),
        RegisterState::Shot { num_qubits, .. } => {
            let index = sample_basis(&state.probabilities(), rng);
            Ok(ShotRecord {
                bitstring: bits_of(index, *num_qubits),
                seed: rng.seed(),
                stream: rng.stream(),
                ancilla_outcomes: Vec::new(),
            })
        }
    }
}

/// Superoperator of a channel on `num_qubits` qubits, probed on matrix units.
pub fn channel_superoperator<F>(channel: F, num_qubits: usize) -> Result<Superoperator, QsimError>
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    check_size(num_qubits, Mode::Exact)?;
    Ok(Superoperator::from_map(1usize << num_qubits, channel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{expm_hermitian, hadamard, partial_trace, pauli, Pauli};

    fn h_on(q: usize) -> Operator {
        Operator::new(hadamard(), vec![q]).unwrap()
    }

    #[test]
    fn forked_streams_are_reproducible_and_distinct() {
        let root = RandomSource::new(42);
        let mut a = root.fork(3);
        let mut b = RandomSource::new(42).fork(3);
        let mut c = root.fork(4);
        let xa: Vec<f64> = (0..5).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.uniform()).collect();
        let xc: Vec<f64> = (0..5).map(|_| c.uniform()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn non_unitary_rejected() {
        let s = RegisterState::basis(1, 0, Mode::Shot).unwrap();
        let bad = Operator::new(ComplexMatrix::basis_projector(2, 0), vec![0]).unwrap();
        assert_eq!(apply_unitary(&s, &bad), Err(QsimError::NotUnitary));
    }

    #[test]
    fn dilated_channel_budget() {
        let s = RegisterState::basis(13, 0, Mode::Shot).unwrap();
        let u = Operator::new(ComplexMatrix::identity(8), vec![0, 13, 14]).unwrap();
        let err = apply_dilated_channel(&s, &u, 2, &mut RandomSource::new(1)).unwrap_err();
        assert_eq!(err, QsimError::AncillaBudgetExceeded { needed: 15, limit: 14 });
    }

    #[test]
    fn measure_requires_shot_mode() {
        let s = RegisterState::basis(2, 1, Mode::Exact).unwrap();
        assert_eq!(measure_all(&s, &mut RandomSource::new(0)), Err(QsimError::WrongMode(Mode::Exact)));
        let p = RegisterState::basis(3, 5, Mode::Shot).unwrap();
        assert_eq!(measure_all(&p, &mut RandomSource::new(0)).unwrap().bitstring, vec![1, 0, 1]);
    }

    #[test]
    fn exact_dilation_matches_register_extension() {
        let n = 2;
        let mut psi = RegisterState::basis(n, 0, Mode::Exact).unwrap();
        psi = apply_unitary(&psi, &h_on(0)).unwrap();
        psi = apply_unitary(&psi, &h_on(1)).unwrap();
        let l = crate::tcmodel::lowering_matrix();
        let zero = ComplexMatrix::zeros(2, 2);
        let j = ComplexMatrix::from_fn(4, 4, |r, c| {
            let (sr, ar, sc, ac) = (r / 2, r % 2, c / 2, c % 2);
            match (ar, ac) {
                (0, 1) => l.adjoint()[(sr, sc)],
                (1, 0) => l[(sr, sc)],
                _ => zero[(sr, sc)],
            }
        });
        let u = expm_hermitian(&j, 0.7).unwrap();
        let op = Operator::new(u.clone(), vec![1, 2]).unwrap();
        let (out, _) = apply_dilated_channel(&psi, &op, 1, &mut RandomSource::new(0)).unwrap();

        let ext = psi.density().kron(&ComplexMatrix::basis_projector(2, 0));
        let full = op.embed(3).unwrap();
        let evolved = full.matmul(&ext).matmul(&full.adjoint());
        let want = partial_trace(&evolved, &[4, 2], &[0]).unwrap();
        assert!(out.density().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn sampled_dilation_averages_to_exact() {
        let u = expm_hermitian(
            &(&pauli(Pauli::X).kron(&pauli(Pauli::X)) + &pauli(Pauli::Z).kron(&pauli(Pauli::Y))),
            0.4,
        )
        .unwrap();
        let op = Operator::new(u, vec![0, 1]).unwrap();
        let start = apply_unitary(&RegisterState::basis(1, 0, Mode::Shot).unwrap(), &h_on(0)).unwrap();
        let (exact, _) =
            apply_dilated_channel(&start.to_exact().unwrap(), &op, 1, &mut RandomSource::new(0)).unwrap();
        let root = RandomSource::new(9);
        let shots = 20000;
        let mut avg = ComplexMatrix::zeros(2, 2);
        for k in 0..shots {
            let (s, _) = apply_dilated_channel(&start, &op, 1, &mut root.fork(k)).unwrap();
            avg += &s.density();
        }
        avg = avg.scale_real(1.0 / shots as f64);
        assert!(avg.max_abs_diff(&exact.density()) < 0.02);
    }

    #[test]
    fn channel_superoperator_of_unitary_is_sandwich() {
        let x = pauli(Pauli::X);
        let s = channel_superoperator(|r| x.matmul(r).matmul(&x), 1).unwrap();
        assert!(s.max_abs_diff(&Superoperator::sandwich(&x, &x)) < 1e-15);
    }
}
