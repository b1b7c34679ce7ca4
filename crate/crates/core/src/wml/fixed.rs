//! The fixed interaction `exp(Δ 𝓜)` with the single Lindblad operator
//! `M = Q^{-1/2} (I_A ⊗ |Γ><Γ|_BC)(SWAP_AB ⊗ I_C)` on three `q`-qubit blocks,
//! and its realizations.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::circuit::{self, LcuCircuit};
use super::WmlError;
use crate::numkit::{expm_hermitian, gamma_vector, pauli, swap_registers, ComplexMatrix, Pauli, Superoperator};
use crate::qsim::dilation_kraus;
use crate::splitj::j_matrix;

/// How the fixed interaction is realized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedInteractionImpl {
    /// Sixteen-term Pauli LCU with heralded read-out.
    Protocol1,
    /// Four-unitary LCU with heralded read-out.
    Protocol2,
    /// One-ancilla J-matrix dilation of `M`.
    #[default]
    HybridJ,
    /// `A0 = I - (Δ/2) M^dag M`, `A1 = sqrt(Δ) M` applied directly.
    ExactKraus,
}

impl FixedInteractionImpl {
    pub const ALL: [FixedInteractionImpl; 4] = [Self::Protocol1, Self::Protocol2, Self::HybridJ, Self::ExactKraus];
}

/// `M` on `(A, B, C)`, each block `q` qubits.
pub fn m_matrix(q: usize) -> ComplexMatrix {
    let d = 1usize << q;
    let gamma = gamma_vector(q);
    let proj = ComplexMatrix::identity(d).kron(&ComplexMatrix::outer(&gamma, &gamma));
    let swap = swap_registers(q).kron(&ComplexMatrix::identity(d));
    proj.matmul(&swap).scale_real(1.0 / (d as f64).sqrt())
}

/// `e^{-i sign Δ SWAP}` between two `q`-qubit blocks, `cos Δ I - i sign sin Δ SWAP`.
pub fn swap_exponential(sign: f64, delta: f64, q: usize) -> ComplexMatrix {
    let d = 1usize << (2 * q);
    let mut u = swap_registers(q).scale(C64::new(0.0, -sign.signum() * delta.sin()));
    for i in 0..d {
        u[(i, i)] += C64::new(delta.cos(), 0.0);
    }
    u
}

fn pauli_product(a: Pauli, b: Pauli) -> (C64, Pauli) {
    use Pauli::*;
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    match (a, b) {
        (I, p) | (p, I) => (one, p),
        (X, X) | (Y, Y) | (Z, Z) => (one, I),
        (X, Y) => (i, Z),
        (Y, X) => (-i, Z),
        (Y, Z) => (i, X),
        (Z, Y) => (-i, X),
        (Z, X) => (i, Y),
        (X, Z) => (-i, Y),
    }
}

/// Pauli expansion of `M`: `16^q` strings on `(A_1..A_q, B_1..B_q, C_1..C_q)`,
/// all with coefficient magnitude `(4 sqrt 2)^{-q}`.
///
/// Per qubit triple, `SWAP = (II + XX + YY + ZZ)/2` and
/// `|Γ><Γ| = (II + XX - YY + ZZ)/2` multiply to sixteen terms.
pub fn pauli_decomposition_m(q: usize) -> Vec<(C64, Vec<Pauli>)> {
    const P: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let scale = 1.0 / (4.0 * 2f64.sqrt());
    let single: Vec<(C64, [Pauli; 3])> = P
        .iter()
        .flat_map(|&bc| {
            P.iter().map(move |&ab| {
                let sign = if bc == Pauli::Y { -1.0 } else { 1.0 };
                let (phase, b) = pauli_product(bc, ab);
                (phase * (sign * scale), [ab, b, bc])
            })
        })
        .collect();
    let mut terms: Vec<(C64, Vec<[Pauli; 3]>)> = vec![(C64::new(1.0, 0.0), Vec::new())];
    for _ in 0..q {
        terms = terms
            .into_iter()
            .flat_map(|(c, t)| {
                single.iter().map(move |(s, p)| {
                    let mut t = t.clone();
                    t.push(*p);
                    (c * s, t)
                })
            })
            .collect();
    }
    terms
        .into_iter()
        .map(|(c, triples)| {
            let mut s = Vec::with_capacity(3 * q);
            for block in 0..3 {
                s.extend(triples.iter().map(|t| t[block]));
            }
            (c, s)
        })
        .collect()
}

fn kron3(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b).kron(c)
}

/// The four unitaries `U_{1,i}` on one qubit triple with
/// `M = (U_{1,0} + U_{1,1} + U_{1,2} + U_{1,3}) / (2 sqrt 2)`.
pub fn four_unitary_grouping() -> [ComplexMatrix; 4] {
    use Pauli::*;
    let p = pauli;
    let pp = |a: Pauli, b: Pauli| p(a).matmul(&p(b));
    let half = |terms: &[(f64, ComplexMatrix)]| {
        terms.iter().fold(ComplexMatrix::zeros(8, 8), |acc, (s, m)| &acc + &m.scale_real(0.5 * s))
    };
    [
        half(&[
            (1.0, kron3(&p(X), &p(X), &p(I))),
            (-1.0, kron3(&p(I), &p(Y), &p(Y))),
            (1.0, kron3(&p(Z), &p(Z), &p(I))),
            (-1.0, kron3(&p(Y), &p(I), &p(Y))),
        ]),
        half(&[
            (1.0, kron3(&p(I), &p(X), &p(X))),
            (1.0, kron3(&p(Y), &pp(X, Y), &p(X))),
            (1.0, kron3(&p(X), &p(I), &p(X))),
            (1.0, kron3(&p(Z), &pp(X, Z), &p(X))),
        ]),
        half(&[
            (1.0, kron3(&p(Y), &pp(Z, Y), &p(Z))),
            (1.0, kron3(&p(Z), &p(I), &p(Z))),
            (1.0, kron3(&p(I), &p(Z), &p(Z))),
            (1.0, kron3(&p(X), &pp(Z, X), &p(Z))),
        ]),
        half(&[
            (1.0, kron3(&p(I), &p(I), &p(I))),
            (1.0, kron3(&p(Y), &p(Y), &p(I))),
            (-1.0, kron3(&p(X), &pp(Y, X), &p(Y))),
            (-1.0, kron3(&p(Z), &pp(Y, Z), &p(Y))),
        ]),
    ]
}

/// `U_{0,i} = (SWAP_AB ⊗ I) U_{1,i}`, summing to `2 M^dag M`.
pub fn four_unitary_grouping_adjoint_branch() -> [ComplexMatrix; 4] {
    let s = swap_registers(1).kron(&ComplexMatrix::identity(2));
    four_unitary_grouping().map(|u| s.matmul(&u))
}

/// `[A0, A1] = [I - (Δ/2) M^dag M, sqrt(Δ) M]`.
pub fn exact_kraus(q: usize, delta: f64) -> [ComplexMatrix; 2] {
    let m = m_matrix(q);
    let mdm = m.adjoint().matmul(&m);
    let a0 = &ComplexMatrix::identity(m.rows()) - &mdm.scale_real(0.5 * delta);
    [a0, m.scale_real(delta.sqrt())]
}

/// A realized fixed interaction on `3q` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedInteraction {
    pub kind: FixedInteractionImpl,
    pub q: usize,
    pub delta: f64,
    kraus: Vec<ComplexMatrix>,
}

fn lcu(kind: FixedInteractionImpl, q: usize, delta: f64) -> (LcuCircuit, f64) {
    match kind {
        FixedInteractionImpl::Protocol1 => circuit::protocol1(q, delta),
        _ => circuit::protocol2(q, delta, &four_unitary_grouping(), &four_unitary_grouping_adjoint_branch()),
    }
}

impl FixedInteraction {
    /// Realize the map for step `delta`. Protocol circuits support `q` of 1
    /// or 2; their heralded branches are divided by the constant success
    /// amplitude.
    pub fn new(kind: FixedInteractionImpl, q: usize, delta: f64) -> Result<Self, WmlError> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(WmlError::InvalidArgument(format!("step must be finite and non-negative, got {delta}")));
        }
        let kraus = match kind {
            FixedInteractionImpl::ExactKraus => {
                if q == 0 {
                    return Err(WmlError::UnsupportedQ(q));
                }
                exact_kraus(q, delta).to_vec()
            }
            FixedInteractionImpl::HybridJ => {
                if q == 0 {
                    return Err(WmlError::UnsupportedQ(q));
                }
                let u = expm_hermitian(&j_matrix(&m_matrix(q)), delta.sqrt())?;
                dilation_kraus(&u, 3 * q, 1, None)?
            }
            FixedInteractionImpl::Protocol1 | FixedInteractionImpl::Protocol2 => {
                if !(1..=2).contains(&q) {
                    return Err(WmlError::UnsupportedQ(q));
                }
                let (c, s) = lcu(kind, q, delta);
                c.heralded_kraus().into_iter().map(|k| k.scale_real(1.0 / s)).collect()
            }
        };
        Ok(Self { kind, q, delta, kraus })
    }

    /// Kraus operators on `(A, B, C)`.
    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn superoperator(&self) -> Superoperator {
        let d = 1usize << (3 * self.q);
        Superoperator::from_map(d, |x| {
            self.kraus.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &k.matmul(x).matmul(&k.adjoint()))
        })
    }
}

/// Heralded success amplitude of a protocol circuit, and its raw heralded
/// operators before renormalization.
pub fn protocol_heralded(kind: FixedInteractionImpl, q: usize, delta: f64) -> Result<(f64, [ComplexMatrix; 2]), WmlError> {
    match kind {
        FixedInteractionImpl::Protocol1 | FixedInteractionImpl::Protocol2 if (1..=2).contains(&q) => {
            let (c, s) = lcu(kind, q, delta);
            Ok((s, c.heralded_kraus()))
        }
        FixedInteractionImpl::Protocol1 | FixedInteractionImpl::Protocol2 => Err(WmlError::UnsupportedQ(q)),
        _ => Err(WmlError::InvalidArgument(format!("{kind:?} is not a protocol circuit"))),
    }
}

/// Channel of a protocol circuit with every ancilla discarded unread.
pub fn protocol_unheralded(kind: FixedInteractionImpl, q: usize, delta: f64) -> Result<Superoperator, WmlError> {
    protocol_heralded(kind, q, delta)?;
    let ops = lcu(kind, q, delta).0.unheralded_kraus();
    let d = 1usize << (3 * q);
    Ok(Superoperator::from_map(d, |x| {
        ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &k.matmul(x).matmul(&k.adjoint()))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{expm_hermitian, pauli_string};

    fn gamma_projector(q: usize) -> ComplexMatrix {
        let g = gamma_vector(q);
        ComplexMatrix::outer(&g, &g)
    }

    #[test]
    fn m_dagger_m_is_swapped_projector() {
        for q in 1..=2 {
            let d = 1usize << q;
            let m = m_matrix(q);
            let s = swap_registers(q).kron(&ComplexMatrix::identity(d));
            let p = ComplexMatrix::identity(d).kron(&gamma_projector(q));
            let expect = s.matmul(&p).matmul(&s);
            assert!(m.adjoint().matmul(&m).max_abs_diff(&expect) < 1e-12);
            assert!((crate::numkit::operator_norm(&m).powi(2) - d as f64).abs() < 1e-10);
            assert!((m.frobenius_norm().powi(2) - (d * d) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_exponential_closed_form() {
        for q in 1..=2 {
            for &(sign, delta) in &[(1.0, 0.3), (-1.0, 0.7)] {
                let direct = expm_hermitian(&swap_registers(q), sign * delta).unwrap();
                assert!(swap_exponential(sign, delta, q).max_abs_diff(&direct) < 1e-12);
            }
        }
        assert!(swap_exponential(1.0, 0.0, 1).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let pi = std::f64::consts::PI;
        let minus_i_swap = swap_registers(1).scale(C64::new(0.0, -1.0));
        assert!(swap_exponential(1.0, pi / 2.0, 1).max_abs_diff(&minus_i_swap) < 1e-12);
        let minus_one = ComplexMatrix::identity(4).scale_real(-1.0);
        assert!(swap_exponential(1.0, pi, 1).max_abs_diff(&minus_one) < 1e-12);
    }

    #[test]
    fn pauli_expansion_reconstructs_m() {
        for q in 1..=2 {
            let terms = pauli_decomposition_m(q);
            assert_eq!(terms.len(), 1 << (4 * q));
            let mag = (4.0 * 2f64.sqrt()).powi(-(q as i32));
            assert!(terms.iter().all(|(c, _)| (c.norm() - mag).abs() < 1e-15));
            let d = 1usize << (3 * q);
            let sum = terms.iter().fold(ComplexMatrix::zeros(d, d), |acc, (c, s)| &acc + &pauli_string(s).scale(*c));
            assert!(sum.max_abs_diff(&m_matrix(q)) < 1e-12);
        }
    }

    #[test]
    fn four_unitaries_group_m() {
        let u1 = four_unitary_grouping();
        let u0 = four_unitary_grouping_adjoint_branch();
        let m = m_matrix(1);
        let sum1 = u1.iter().fold(ComplexMatrix::zeros(8, 8), |a, u| &a + u);
        let sum0 = u0.iter().fold(ComplexMatrix::zeros(8, 8), |a, u| &a + u);
        assert!(u1.iter().chain(&u0).all(|u| u.is_unitary(1e-12)));
        assert!(sum1.scale_real(1.0 / 8f64.sqrt()).max_abs_diff(&m) < 1e-12);
        assert!(sum0.scale_real(0.5).max_abs_diff(&m.adjoint().matmul(&m)) < 1e-12);
    }

    #[test]
    fn exact_kraus_gains_trace_at_second_order() {
        let delta = 0.1;
        let [a0, a1] = exact_kraus(1, delta);
        let sum = &a0.adjoint().matmul(&a0) + &a1.adjoint().matmul(&a1);
        let m = m_matrix(1);
        let mdm = m.adjoint().matmul(&m);
        let expect = &ComplexMatrix::identity(8) + &mdm.matmul(&mdm).scale_real(delta * delta / 4.0);
        assert!(sum.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn realizations_match_exact_kraus() {
        for q in 1..=2 {
            for &delta in &[0.01, 0.1] {
                let exact = FixedInteraction::new(FixedInteractionImpl::ExactKraus, q, delta).unwrap().superoperator();
                for kind in [FixedInteractionImpl::Protocol1, FixedInteractionImpl::Protocol2, FixedInteractionImpl::HybridJ] {
                    let s = FixedInteraction::new(kind, q, delta).unwrap().superoperator();
                    let dist = s.max_abs_diff(&exact);
                    assert!(dist <= 10.0 * delta * delta, "{kind:?} q={q} delta={delta}: {dist}");
                }
            }
        }
    }

    #[test]
    fn heralded_branches_are_scaled_exact_kraus() {
        for kind in [FixedInteractionImpl::Protocol1, FixedInteractionImpl::Protocol2] {
            let (s, [k0, k1]) = protocol_heralded(kind, 1, 0.05).unwrap();
            let [a0, a1] = exact_kraus(1, 0.05);
            assert!(k0.max_abs_diff(&a0.scale_real(s)) < 1e-12);
            assert!(k1.max_abs_diff(&a1.scale_real(s)) < 1e-12);
        }
    }

    #[test]
    fn zero_step_is_identity() {
        for kind in FixedInteractionImpl::ALL {
            let s = FixedInteraction::new(kind, 1, 0.0).unwrap().superoperator();
            assert!(s.max_abs_diff(&Superoperator::identity(8)) < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn unread_ancillas_deviate_at_first_order() {
        let delta = 0.01;
        let exact = FixedInteraction::new(FixedInteractionImpl::ExactKraus, 1, delta).unwrap().superoperator();
        let unread = protocol_unheralded(FixedInteractionImpl::Protocol2, 1, delta).unwrap();
        assert!(unread.max_abs_diff(&exact) > 10.0 * delta * delta);
    }

    #[test]
    fn hybrid_dilation_is_complete_for_small_steps() {
        for &delta in &[4e-4, 1e-6] {
            let f = FixedInteraction::new(FixedInteractionImpl::HybridJ, 2, delta).unwrap();
            let sum = f.kraus().iter().fold(ComplexMatrix::zeros(64, 64), |a, k| &a + &k.adjoint().matmul(k));
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(64)) < 1e-12);
        }
    }

    #[test]
    fn protocol_q_limits() {
        assert_eq!(FixedInteraction::new(FixedInteractionImpl::Protocol1, 3, 0.1), Err(WmlError::UnsupportedQ(3)));
        assert!(FixedInteraction::new(FixedInteractionImpl::HybridJ, 1, -0.1).is_err());
    }
}
