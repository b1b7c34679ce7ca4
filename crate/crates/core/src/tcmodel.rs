//! Open Tavis-Cummings model on a qubit register.
//!
//! Register layout: cavity qubits `0..m` (the photon number in binary, qubit 0
//! most significant), then one qubit per emitter. Frequencies are angular, in
//! rad/ns (numerically GHz), and time is in ns.
//!
//! In the frame rotating at `frame_shift`:
//!
//! ```text
//! H(t) = (wc - f) a^dag a + sum_j (wj - f) s+_j s-_j + sum_j gj (s+_j a + s-_j a^dag)
//!      + P (a e^{i (wp - f) t} + a^dag e^{-i (wp - f) t})
//! ```
//!
//! with dissipators `(a, kappa)` and `(s-_j, gamma)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::local::{left_multiply, right_multiply};
use crate::numkit::{operator_norm, ComplexMatrix, NumError, Operator};

/// Largest register the dense simulators accept.
pub const MAX_REGISTER_QUBITS: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum TcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("register of {0} qubits exceeds the {MAX_REGISTER_QUBITS}-qubit limit")]
    RegisterTooLarge(usize),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Parameters of an open Tavis-Cummings system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcSystem {
    /// Qubits encoding the cavity photon number; at most `2^m - 1` photons.
    #[serde(default = "default_cavity_qubits")]
    pub cavity_qubits: usize,
    pub omega_c: f64,
    pub omega_e: Vec<f64>,
    /// Per-emitter coupling.
    pub g: Vec<f64>,
    pub kappa: f64,
    pub gamma: f64,
    #[serde(default)]
    pub pump_amp: f64,
    /// Defaults to `omega_c`.
    #[serde(default)]
    pub pump_freq: Option<f64>,
    /// Rotating-frame frequency; defaults to `omega_c`.
    #[serde(default)]
    pub frame_shift: Option<f64>,
}

fn default_cavity_qubits() -> usize {
    2
}

/// Which part of the model a Hamiltonian term comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    CavityNumber,
    EmitterNumber(usize),
    Interaction(usize),
    Pump,
}

impl TermKind {
    /// Single-site number terms commute with each other.
    pub fn is_number(self) -> bool {
        matches!(self, TermKind::CavityNumber | TermKind::EmitterNumber(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub kind: TermKind,
    pub op: Operator,
}

/// Dissipator `rate * D[op]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladTerm {
    pub op: Operator,
    pub rate: f64,
}

impl LindbladTerm {
    /// `sqrt(rate) * op`.
    pub fn scaled(&self) -> Operator {
        self.op.scale_real(self.rate.sqrt())
    }
}

impl TcSystem {
    /// Homogeneous system with the pump and frame at `omega_c`.
    pub fn homogeneous(n: usize, omega_c: f64, omega_e: f64, g: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            cavity_qubits: 2,
            omega_c,
            omega_e: vec![omega_e; n],
            g: vec![g; n],
            kappa,
            gamma,
            pump_amp: 0.0,
            pump_freq: None,
            frame_shift: None,
        }
    }

    pub fn validate(&self) -> Result<(), TcError> {
        let bad = |msg: String| Err(TcError::InvalidParameter(msg));
        if self.cavity_qubits == 0 {
            return bad("cavity_qubits must be at least 1".into());
        }
        if self.omega_e.len() != self.g.len() {
            return bad(format!("{} emitter frequencies but {} couplings", self.omega_e.len(), self.g.len()));
        }
        let scalars = [
            ("omega_c", self.omega_c),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("pump_amp", self.pump_amp),
            ("pump_freq", self.pump_freq()),
            ("frame_shift", self.frame_shift()),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
        }
        if self.omega_e.iter().chain(&self.g).any(|v| !v.is_finite()) {
            return bad("emitter parameters must be finite".into());
        }
        if self.kappa < 0.0 || self.gamma < 0.0 {
            return bad("decay rates must be non-negative".into());
        }
        if self.num_qubits() > MAX_REGISTER_QUBITS {
            return Err(TcError::RegisterTooLarge(self.num_qubits()));
        }
        Ok(())
    }

    pub fn num_emitters(&self) -> usize {
        self.omega_e.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.cavity_qubits + self.num_emitters()
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits()
    }

    /// Largest representable photon number `2^m - 1`.
    pub fn max_photons(&self) -> usize {
        (1usize << self.cavity_qubits) - 1
    }

    pub fn cavity_qubit_labels(&self) -> Vec<usize> {
        (0..self.cavity_qubits).collect()
    }

    pub fn emitter_qubit(&self, j: usize) -> usize {
        self.cavity_qubits + j
    }

    pub fn pump_freq(&self) -> f64 {
        self.pump_freq.unwrap_or(self.omega_c)
    }

    pub fn frame_shift(&self) -> f64 {
        self.frame_shift.unwrap_or(self.omega_c)
    }

    pub fn cavity_detuning(&self) -> f64 {
        self.omega_c - self.frame_shift()
    }

    pub fn emitter_detuning(&self, j: usize) -> f64 {
        self.omega_e[j] - self.frame_shift()
    }

    /// Pump phase `(wp - f) t`.
    pub fn pump_phase(&self, t: f64) -> f64 {
        (self.pump_freq() - self.frame_shift()) * t
    }

    /// True when the generator does not depend on time.
    pub fn is_static(&self) -> bool {
        self.pump_amp == 0.0 || self.pump_freq() == self.frame_shift()
    }

    /// Computational basis index of a Fock/emitter product state.
    pub fn basis_index(&self, photons: usize, emitters: &[u8]) -> Result<usize, TcError> {
        if photons > self.max_photons() {
            return Err(TcError::InvalidParameter(format!(
                "{photons} photons exceed the cavity capacity {}",
                self.max_photons()
            )));
        }
        if emitters.len() != self.num_emitters() || emitters.iter().any(|&b| b > 1) {
            return Err(TcError::InvalidParameter(format!("emitter bits {emitters:?} do not match the register")));
        }
        Ok(emitters.iter().fold(photons, |acc, &b| (acc << 1) | b as usize))
    }

    /// Photon number encoded in a basis index.
    pub fn photons_of(&self, index: usize) -> usize {
        index >> self.num_emitters()
    }

    /// Excitation of emitter `j` in a basis index.
    pub fn emitter_bit(&self, index: usize, j: usize) -> usize {
        (index >> (self.num_emitters() - 1 - j)) & 1
    }
}

/// Truncated annihilation operator on `m` qubits: `a|b> = sqrt(b)|b-1>`.
pub fn annihilation_matrix(m: usize) -> ComplexMatrix {
    let d = 1usize << m;
    let mut a = ComplexMatrix::zeros(d, d);
    for b in 1..d {
        a[(b - 1, b)] = C64::new((b as f64).sqrt(), 0.0);
    }
    a
}

/// `|0><1|`.
pub fn lowering_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
}

pub fn cavity_annihilation(sys: &TcSystem) -> Operator {
    Operator::new(annihilation_matrix(sys.cavity_qubits), sys.cavity_qubit_labels()).expect("valid cavity labels")
}

pub fn emitter_lowering(sys: &TcSystem, j: usize) -> Operator {
    Operator::new(lowering_matrix(), vec![sys.emitter_qubit(j)]).expect("valid emitter label")
}

fn number_matrix(m: usize) -> ComplexMatrix {
    let a = annihilation_matrix(m);
    a.adjoint().matmul(&a)
}

/// `a ⊗ s+ + a^dag ⊗ s-` on (cavity qubits, emitter qubit).
pub fn exchange_matrix(m: usize) -> ComplexMatrix {
    let a = annihilation_matrix(m);
    let s = lowering_matrix();
    &a.kron(&s.adjoint()) + &a.adjoint().kron(&s)
}

/// `P (a e^{i phi} + a^dag e^{-i phi})` on the cavity qubits.
pub fn pump_matrix(m: usize, amp: f64, phase: f64) -> ComplexMatrix {
    let a = annihilation_matrix(m);
    let mut p = a.scale(C64::from_polar(amp, phase));
    p += &a.adjoint().scale(C64::from_polar(amp, -phase));
    p
}

/// Hamiltonian split into local terms. The pump term appears only when its
/// amplitude is non-zero.
pub fn hamiltonian_terms(sys: &TcSystem, t: f64) -> Vec<HamiltonianTerm> {
    let m = sys.cavity_qubits;
    let cav = sys.cavity_qubit_labels();
    let mut terms = vec![HamiltonianTerm {
        kind: TermKind::CavityNumber,
        op: Operator::new(number_matrix(m).scale_real(sys.cavity_detuning()), cav.clone()).expect("labels"),
    }];
    for j in 0..sys.num_emitters() {
        let n = ComplexMatrix::basis_projector(2, 1).scale_real(sys.emitter_detuning(j));
        terms.push(HamiltonianTerm {
            kind: TermKind::EmitterNumber(j),
            op: Operator::new(n, vec![sys.emitter_qubit(j)]).expect("labels"),
        });
    }
    for j in 0..sys.num_emitters() {
        let mut labels = cav.clone();
        labels.push(sys.emitter_qubit(j));
        terms.push(HamiltonianTerm {
            kind: TermKind::Interaction(j),
            op: Operator::new(exchange_matrix(m).scale_real(sys.g[j]), labels).expect("labels"),
        });
    }
    if sys.pump_amp != 0.0 {
        terms.push(HamiltonianTerm {
            kind: TermKind::Pump,
            op: Operator::new(pump_matrix(m, sys.pump_amp, sys.pump_phase(t)), cav).expect("labels"),
        });
    }
    terms
}

/// Full-register Hamiltonian at time `t`.
pub fn hamiltonian(sys: &TcSystem, t: f64) -> Result<Operator, TcError> {
    sys.validate()?;
    let n = sys.num_qubits();
    let mut h = ComplexMatrix::zeros(sys.dim(), sys.dim());
    for term in hamiltonian_terms(sys, t) {
        h += &term.op.embed(n)?;
    }
    Ok(Operator::new(h, (0..n).collect())?)
}

/// Cavity decay first, then one decay term per emitter.
pub fn lindblad_terms(sys: &TcSystem) -> Vec<LindbladTerm> {
    let mut terms = vec![LindbladTerm { op: cavity_annihilation(sys), rate: sys.kappa }];
    for j in 0..sys.num_emitters() {
        terms.push(LindbladTerm { op: emitter_lowering(sys, j), rate: sys.gamma });
    }
    terms
}

/// `-i[H(t), rho] + sum rate (L rho L^dag - {L^dag L, rho}/2)`, evaluated with
/// local kernels.
pub fn lindblad_rhs(sys: &TcSystem, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, TcError> {
    sys.validate()?;
    let n = sys.num_qubits();
    if rho.rows() != sys.dim() || !rho.is_square() {
        return Err(NumError::DimensionMismatch { expected: sys.dim(), found: rho.rows() }.into());
    }
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    let minus_i = C64::new(0.0, -1.0);
    for term in hamiltonian_terms(sys, t) {
        let layout = term.op.layout(n);
        let mut hr = rho.clone();
        left_multiply(term.op.matrix(), &layout, &mut hr);
        let mut rh = rho.clone();
        right_multiply(term.op.matrix(), &layout, &mut rh);
        out.add_scaled(minus_i, &hr);
        out.add_scaled(-minus_i, &rh);
    }
    for term in lindblad_terms(sys) {
        if term.rate == 0.0 {
            continue;
        }
        let layout = term.op.layout(n);
        let l = term.op.matrix();
        let ldl = l.adjoint().matmul(l);
        let mut jump = rho.clone();
        left_multiply(l, &layout, &mut jump);
        right_multiply(&l.adjoint(), &layout, &mut jump);
        let mut left = rho.clone();
        left_multiply(&ldl, &layout, &mut left);
        let mut right = rho.clone();
        right_multiply(&ldl, &layout, &mut right);
        out.add_scaled(C64::new(term.rate, 0.0), &jump);
        out.add_scaled(C64::new(-0.5 * term.rate, 0.0), &left);
        out.add_scaled(C64::new(-0.5 * term.rate, 0.0), &right);
    }
    Ok(out)
}

/// Upper bound on the Liouvillian norm: `2 sum ||H_k|| + 2 sum rate ||L||^2`.
pub fn generator_norm_bound(sys: &TcSystem) -> f64 {
    let h: f64 = hamiltonian_terms(sys, 0.0)
        .iter()
        .map(|t| match t.kind {
            TermKind::Pump => 2.0 * sys.pump_amp.abs() * (sys.max_photons() as f64).sqrt(),
            _ => operator_norm(t.op.matrix()),
        })
        .sum();
    let d: f64 = lindblad_terms(sys).iter().map(|t| t.rate * operator_norm(t.op.matrix()).powi(2)).sum();
    2.0 * h + 2.0 * d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> TcSystem {
        TcSystem::homogeneous(1, 245000.0, 245000.0, 100.0, 24.5, 0.4)
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation_matrix(2);
        assert!((a[(0, 1)].re - 1.0).abs() < 1e-15);
        assert!((a[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((a[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
        assert!((a.frobenius_norm().powi(2) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn basis_index_layout() {
        let sys = TcSystem::homogeneous(2, 1.0, 1.0, 0.1, 0.0, 0.0);
        assert_eq!(sys.basis_index(2, &[0, 1]).unwrap(), 0b1001);
        assert_eq!(sys.photons_of(0b1001), 2);
        assert_eq!(sys.emitter_bit(0b1001, 1), 1);
        assert_eq!(sys.emitter_bit(0b1001, 0), 0);
        assert!(sys.basis_index(4, &[0, 0]).is_err());
    }

    #[test]
    fn rotating_frame_removes_number_terms() {
        let h = hamiltonian(&fig1(), 0.0).unwrap();
        let d = h.matrix().rows();
        for i in 0..d {
            assert!(h.matrix()[(i, i)].norm() < 1e-12);
        }
        let from_cavity = TcSystem { frame_shift: Some(0.0), ..fig1() };
        let h0 = hamiltonian(&from_cavity, 0.0).unwrap();
        assert!((h0.matrix()[(0b011, 0b011)].re - 245000.0 * 2.0).abs() < 1e-9);
    }

    #[test]
    fn validation_rejects_mismatched_lists() {
        let mut sys = fig1();
        sys.g.push(1.0);
        assert!(sys.validate().is_err());
        let neg = TcSystem { kappa: -1.0, ..fig1() };
        assert!(neg.validate().is_err());
        let big = TcSystem::homogeneous(13, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(big.validate(), Err(TcError::RegisterTooLarge(15)));
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let sys = TcSystem { pump_amp: 3.0, pump_freq: Some(245010.0), ..fig1() };
        let mut rho = ComplexMatrix::zeros(8, 8);
        rho[(3, 3)] = C64::new(0.6, 0.0);
        rho[(4, 4)] = C64::new(0.4, 0.0);
        rho[(3, 4)] = C64::new(0.1, 0.2);
        rho[(4, 3)] = C64::new(0.1, -0.2);
        let r = lindblad_rhs(&sys, &rho, 0.3).unwrap();
        assert!(r.trace().norm() < 1e-12);
        assert!(r.is_hermitian(1e-12));
    }
}
