use serde::{Deserialize, Serialize};

use super::local::{embed, LocalLayout};
use super::{ComplexMatrix, NumError};

/// A matrix acting on an ordered list of register qubits.
///
/// The first label is the most significant bit of the matrix index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    matrix: ComplexMatrix,
    qubits: Vec<usize>,
}

impl Operator {
    pub fn new(matrix: ComplexMatrix, qubits: Vec<usize>) -> Result<Self, NumError> {
        let dim = 1usize << qubits.len();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(NumError::DimensionMismatch { expected: dim, found: matrix.rows() });
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(NumError::InvalidLabels(format!("repeated qubit in {qubits:?}")));
        }
        Ok(Self { matrix, qubits })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), qubits: self.qubits.clone() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale_real(s), qubits: self.qubits.clone() }
    }

    /// Tensor product; labels of `self` come first and must not overlap `other`.
    pub fn kron(&self, other: &Self) -> Result<Self, NumError> {
        let mut qubits = self.qubits.clone();
        qubits.extend_from_slice(&other.qubits);
        Self::new(self.matrix.kron(&other.matrix), qubits)
    }

    /// Layout of this operator inside an `n`-qubit register.
    ///
    /// *Panics* if a label is `>= n`.
    pub fn layout(&self, n: usize) -> LocalLayout {
        LocalLayout::new(n, &self.qubits)
    }

    /// Dense matrix on the full `n`-qubit register.
    pub fn embed(&self, n: usize) -> Result<ComplexMatrix, NumError> {
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n) {
            return Err(NumError::InvalidLabels(format!("qubit {q} outside {n}-qubit register")));
        }
        Ok(embed(&self.matrix, &self.layout(n)))
    }
}
