//! Dense complex linear algebra: matrices, qubit-labelled operators, local
//! kernels, exponentials, partial traces and norms.

mod linalg;
pub mod local;
mod matrix;
mod operator;
mod superop;

use num_complex::Complex64 as C64;
use thiserror::Error;

pub use linalg::{
    eigh, eigvalsh, expm_general, expm_hermitian, operator_norm, partial_trace, schatten_norm, singular_values,
    solve, trace_distance,
};
pub use matrix::ComplexMatrix;
pub use operator::Operator;
pub use superop::{unvectorize, vectorize, Superoperator};

#[derive(Debug, Error, PartialEq)]
pub enum NumError {
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is singular")]
    Singular,
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("Schatten order must be >= 1, got {0}")]
    InvalidNormOrder(f64),
    #[error("invalid qubit labels: {0}")]
    InvalidLabels(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

pub fn pauli(p: Pauli) -> ComplexMatrix {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    let entries = match p {
        Pauli::I => [l, o, o, l],
        Pauli::X => [o, l, l, o],
        Pauli::Y => [o, -i, i, o],
        Pauli::Z => [l, o, o, -l],
    };
    ComplexMatrix::from_vec(2, 2, entries.to_vec())
}

/// Tensor product of Paulis, first factor most significant.
pub fn pauli_string(ps: &[Pauli]) -> ComplexMatrix {
    ps.iter().fold(ComplexMatrix::identity(1), |acc, &p| acc.kron(&pauli(p)))
}

pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

/// Permutation exchanging two blocks of `q` qubits: `|a>|b> -> |b>|a>`.
pub fn swap_registers(q: usize) -> ComplexMatrix {
    let d = 1usize << q;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// Unnormalized maximally entangled vector `sum_i |i>|i>` on two `q`-qubit blocks.
pub fn gamma_vector(q: usize) -> Vec<C64> {
    let d = 1usize << q;
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        v[i * d + i] = C64::new(1.0, 0.0);
    }
    v
}

/// Euclidean norm of a state vector.
pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
