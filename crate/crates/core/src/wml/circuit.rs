//! Statevector circuits for the LCU realizations of the fixed interaction.
//!
//! Both circuits act on `[index qubits | two flags | A B C]`, with the
//! system blocks in the least significant bits. Each is run on every system
//! basis input; the heralded Kraus operators are read off by projecting the
//! index register onto `<+|`, the first flag onto `<0| + y<1|`, and splitting
//! on the second flag.

use num_complex::Complex64 as C64;

use crate::numkit::local::LocalLayout;
use crate::numkit::{hadamard, pauli, ComplexMatrix, Pauli};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

struct Gate {
    layout: LocalLayout,
    matrix: ComplexMatrix,
    control_mask: usize,
    control_value: usize,
}

/// Sequence of (multi-)controlled gates on an `n`-qubit register.
pub(crate) struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub(crate) fn new(n: usize) -> Self {
        Self { n, gates: Vec::new() }
    }

    /// `matrix` on `targets`, applied where every `(qubit, value)` control matches.
    pub(crate) fn gate(&mut self, targets: &[usize], matrix: ComplexMatrix, controls: &[(usize, bool)]) {
        assert!(controls.iter().all(|(c, _)| !targets.contains(c)), "control overlaps target");
        let bit = |q: usize| 1usize << (self.n - 1 - q);
        let control_mask = controls.iter().map(|&(c, _)| bit(c)).sum();
        let control_value = controls.iter().filter(|&&(_, v)| v).map(|&(c, _)| bit(c)).sum();
        self.gates.push(Gate { layout: LocalLayout::new(self.n, targets), matrix, control_mask, control_value });
    }

    /// Product of single-qubit Paulis on distinct qubits.
    pub(crate) fn paulis(&mut self, ops: &[(usize, Pauli)], controls: &[(usize, bool)]) {
        let targets: Vec<usize> = ops.iter().map(|&(q, _)| q).collect();
        let m = ops.iter().fold(ComplexMatrix::identity(1), |acc, &(_, p)| acc.kron(&pauli(p)));
        self.gate(&targets, m, controls);
    }

    pub(crate) fn hadamard(&mut self, q: usize) {
        self.gate(&[q], hadamard(), &[]);
    }

    /// Output state for the basis input `index`.
    pub(crate) fn run(&self, index: usize) -> Vec<C64> {
        let mut v = vec![ZERO; 1usize << self.n];
        v[index] = C64::new(1.0, 0.0);
        let mut gathered = Vec::new();
        for g in &self.gates {
            let offs = g.layout.offsets();
            gathered.resize(offs.len(), ZERO);
            g.layout.for_each_base(|base| {
                if base & g.control_mask != g.control_value {
                    return;
                }
                for (x, &o) in gathered.iter_mut().zip(offs) {
                    *x = v[base + o];
                }
                for (r, &o) in offs.iter().enumerate() {
                    v[base + o] = g.matrix.row(r).iter().zip(&gathered).map(|(&a, &b)| a * b).sum();
                }
            });
        }
        v
    }
}

/// A built LCU circuit plus the measurement data needed to read it out.
pub(crate) struct LcuCircuit {
    pub(crate) circuit: Circuit,
    pub(crate) system_qubits: usize,
    /// Number of index qubits, projected onto `<+|`.
    pub(crate) index_qubits: usize,
    /// Bra `<0| + y<1|` on the first flag.
    pub(crate) y: f64,
}

impl LcuCircuit {
    fn ancilla_qubits(&self) -> usize {
        self.index_qubits + 2
    }

    /// Heralded operators `[flag = 0, flag = 1]` on the system.
    pub(crate) fn heralded_kraus(&self) -> [ComplexMatrix; 2] {
        let ds = 1usize << self.system_qubits;
        let ni = self.index_qubits;
        let plus = (0.5f64).powf(ni as f64 / 2.0);
        let mut k = [ComplexMatrix::zeros(ds, ds), ComplexMatrix::zeros(ds, ds)];
        for s in 0..ds {
            let out = self.circuit.run(s);
            for (flag, kf) in k.iter_mut().enumerate() {
                for f1 in 0..2 {
                    let bra = if f1 == 0 { 1.0 } else { self.y };
                    for idx in 0..1usize << ni {
                        let anc = (idx << 2) | (f1 << 1) | flag;
                        for r in 0..ds {
                            kf[(r, s)] += out[(anc << self.system_qubits) | r] * (plus * bra);
                        }
                    }
                }
            }
        }
        k
    }

    /// Kraus operators of the channel with every ancilla traced out, one per
    /// ancilla basis outcome.
    pub(crate) fn unheralded_kraus(&self) -> Vec<ComplexMatrix> {
        let ds = 1usize << self.system_qubits;
        let na = 1usize << self.ancilla_qubits();
        let mut k = vec![ComplexMatrix::zeros(ds, ds); na];
        for s in 0..ds {
            let out = self.circuit.run(s);
            for (anc, ka) in k.iter_mut().enumerate() {
                for r in 0..ds {
                    ka[(r, s)] = out[(anc << self.system_qubits) | r];
                }
            }
        }
        k.retain(|m| m.max_abs() > 0.0);
        k
    }
}

/// `|0> -> (a|0> + b|1>) / sqrt(a^2 + b^2)` as a real rotation.
fn preparation(a: f64, b: f64) -> ComplexMatrix {
    let r = a.hypot(b);
    let (c, s) = (a / r, b / r);
    ComplexMatrix::from_real_rows(&[&[c, -s], &[s, c]])
}

/// `|0> -> (|0> - x|1>) / sqrt(1 + x^2)`.
fn flag_preparation(x: f64) -> ComplexMatrix {
    let r = 1.0f64.hypot(x);
    let (c, s) = (1.0 / r, x / r);
    ComplexMatrix::from_real_rows(&[&[c, -s], &[-s, -c]])
}

/// Flag amplitudes `(x, a, b)` for a branch scale `alpha` on `M`.
fn amplitudes(q: usize, delta: f64, alpha: f64) -> (f64, f64, f64) {
    let xy = delta * (1usize << (q - 1)) as f64;
    (xy.sqrt(), 1.0 + xy, delta.sqrt() * alpha)
}

/// Success amplitude: heralded operators equal this times `(A0, A1)`.
pub(crate) fn success_amplitude(x: f64, a: f64, b: f64) -> f64 {
    a / (1.0f64.hypot(x) * a.hypot(b))
}

/// Controlled Pauli-pair circuit: sixteen Paulis per qubit triple.
pub(crate) fn protocol1(q: usize, delta: f64) -> (LcuCircuit, f64) {
    let ni = 4 * q;
    let (f1, f2) = (ni, ni + 1);
    let base = ni + 2;
    let (x, a, b) = amplitudes(q, delta, (8.0f64).sqrt().powi(q as i32));
    let mut c = Circuit::new(base + 3 * q);
    for i in 0..ni {
        c.hadamard(i);
    }
    c.gate(&[f1], flag_preparation(x), &[]);
    c.gate(&[f2], preparation(a, b), &[]);
    for l in 0..q {
        let (i1, i2, i3, i4) = (4 * l, 4 * l + 1, 4 * l + 2, 4 * l + 3);
        let (qa, qb, qc) = (base + l, base + q + l, base + 2 * q + l);
        c.paulis(&[(i3, Pauli::Z)], &[(i4, true), (f2, true)]);
        c.paulis(&[(qa, Pauli::X), (qb, Pauli::X)], &[(i4, true), (f2, true)]);
        c.paulis(&[(qa, Pauli::Z), (qb, Pauli::Z)], &[(i3, true), (f2, true)]);
        c.paulis(&[(qb, Pauli::X), (qc, Pauli::X)], &[(i2, true), (f2, true)]);
        c.paulis(&[(qb, Pauli::Z), (qc, Pauli::Z)], &[(i1, true), (f2, true)]);
        c.paulis(&[(qa, Pauli::X), (qc, Pauli::X)], &[(i4, true), (f1, true), (f2, false)]);
        c.paulis(&[(qa, Pauli::Z), (qc, Pauli::Z)], &[(i3, true), (f1, true), (f2, false)]);
    }
    c.paulis(&[(f1, Pauli::Z)], &[(f2, true)]);
    (LcuCircuit { circuit: c, system_qubits: 3 * q, index_qubits: ni, y: x }, success_amplitude(x, a, b))
}

/// Four-unitary circuit: one two-qubit index per qubit triple.
pub(crate) fn protocol2(q: usize, delta: f64, u1: &[ComplexMatrix; 4], u0: &[ComplexMatrix; 4]) -> (LcuCircuit, f64) {
    let ni = 2 * q;
    let (f1, f2) = (ni, ni + 1);
    let base = ni + 2;
    let (x, a, b) = amplitudes(q, delta, (2.0f64).sqrt().powi(q as i32));
    let mut c = Circuit::new(base + 3 * q);
    for i in 0..ni {
        c.hadamard(i);
    }
    c.gate(&[f1], flag_preparation(x), &[]);
    c.gate(&[f2], preparation(a, b), &[]);
    for l in 0..q {
        let (j1, j2) = (2 * l, 2 * l + 1);
        let targets = [base + l, base + q + l, base + 2 * q + l];
        for i in 0..4 {
            let (hi, lo) = (i >> 1 == 1, i & 1 == 1);
            c.gate(&targets, u1[i].clone(), &[(j1, hi), (j2, lo), (f2, true)]);
            c.gate(&targets, u0[i].clone(), &[(j1, hi), (j2, lo), (f1, true), (f2, false)]);
        }
    }
    c.paulis(&[(f1, Pauli::Z)], &[(f2, true)]);
    (LcuCircuit { circuit: c, system_qubits: 3 * q, index_qubits: ni, y: x }, success_amplitude(x, a, b))
}
