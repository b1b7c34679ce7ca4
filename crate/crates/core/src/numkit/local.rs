//! Kernels applying a small operator on a subset of qubits of a large register
//! without forming the embedded matrix.
//!
//! Qubit 0 is the most significant bit of a basis index.

use num_complex::Complex64 as C64;

use super::ComplexMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Index bookkeeping for an operator on `targets` inside an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalLayout {
    n: usize,
    offsets: Vec<usize>,
    mask: usize,
}

impl LocalLayout {
    /// *Panics* if a target is out of range or repeated.
    pub fn new(n: usize, targets: &[usize]) -> Self {
        let mut mask = 0usize;
        for &t in targets {
            assert!(t < n, "target qubit {t} outside {n}-qubit register");
            let bit = 1usize << (n - 1 - t);
            assert!(mask & bit == 0, "repeated target qubit {t}");
            mask |= bit;
        }
        let k = targets.len();
        let offsets = (0..1usize << k)
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|&(b, _)| (l >> (k - 1 - b)) & 1 == 1)
                    .map(|(_, &t)| 1usize << (n - 1 - t))
                    .sum()
            })
            .collect();
        Self { n, offsets, mask }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn full_dim(&self) -> usize {
        1usize << self.n
    }

    /// Offsets of the local basis states relative to a base index.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Visit every basis index whose target bits are all zero.
    pub fn for_each_base<F: FnMut(usize)>(&self, mut f: F) {
        let dim = self.full_dim();
        let mut i = 0usize;
        while i < dim {
            f(i);
            i = ((i | self.mask) + 1) & !self.mask;
        }
    }
}

fn check(op: &ComplexMatrix, layout: &LocalLayout) {
    assert!(
        op.rows() == layout.local_dim() && op.cols() == layout.local_dim(),
        "local operator is {}x{}, layout expects {}",
        op.rows(),
        op.cols(),
        layout.local_dim()
    );
}

/// `v <- op v` with `op` acting on the layout's targets.
pub fn apply_to_vector(op: &ComplexMatrix, layout: &LocalLayout, v: &mut [C64]) {
    check(op, layout);
    assert_eq!(v.len(), layout.full_dim(), "state length mismatch");
    let k = layout.local_dim();
    let offs = layout.offsets();
    let mut gathered = vec![ZERO; k];
    layout.for_each_base(|base| {
        for (g, &o) in gathered.iter_mut().zip(offs) {
            *g = v[base + o];
        }
        for (r, &o) in offs.iter().enumerate() {
            v[base + o] = op.row(r).iter().zip(&gathered).map(|(&a, &b)| a * b).sum();
        }
    });
}

/// `rho <- op rho` with `op` acting on the layout's targets.
pub fn left_multiply(op: &ComplexMatrix, layout: &LocalLayout, rho: &mut ComplexMatrix) {
    check(op, layout);
    let d = layout.full_dim();
    assert!(rho.rows() == d, "matrix row count mismatch");
    let cols = rho.cols();
    let k = layout.local_dim();
    let offs = layout.offsets();
    let mut block = vec![ZERO; k * cols];
    let data = rho.data_mut();
    layout.for_each_base(|base| {
        for (l, &o) in offs.iter().enumerate() {
            block[l * cols..(l + 1) * cols].copy_from_slice(&data[(base + o) * cols..(base + o + 1) * cols]);
        }
        for (r, &o) in offs.iter().enumerate() {
            let out = &mut data[(base + o) * cols..(base + o + 1) * cols];
            out.fill(ZERO);
            for l in 0..k {
                let a = op[(r, l)];
                if a == ZERO {
                    continue;
                }
                for (x, &y) in out.iter_mut().zip(&block[l * cols..(l + 1) * cols]) {
                    *x += a * y;
                }
            }
        }
    });
}

/// `rho <- rho op` with `op` acting on the layout's targets.
pub fn right_multiply(op: &ComplexMatrix, layout: &LocalLayout, rho: &mut ComplexMatrix) {
    check(op, layout);
    let d = layout.full_dim();
    assert!(rho.cols() == d, "matrix column count mismatch");
    let k = layout.local_dim();
    let offs = layout.offsets();
    let mut gathered = vec![ZERO; k];
    let rows = rho.rows();
    let data = rho.data_mut();
    for r in 0..rows {
        let row = &mut data[r * d..(r + 1) * d];
        layout.for_each_base(|base| {
            for (g, &o) in gathered.iter_mut().zip(offs) {
                *g = row[base + o];
            }
            for (j, &o) in offs.iter().enumerate() {
                row[base + o] = (0..k).map(|i| gathered[i] * op[(i, j)]).sum();
            }
        });
    }
}

/// `sum_k K_k rho K_k^dag` for local Kraus operators.
pub fn apply_kraus(ops: &[ComplexMatrix], layout: &LocalLayout, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    for op in ops {
        let mut term = rho.clone();
        left_multiply(op, layout, &mut term);
        right_multiply(&op.adjoint(), layout, &mut term);
        out += &term;
    }
    out
}

/// Full-register matrix of a local operator.
pub fn embed(op: &ComplexMatrix, layout: &LocalLayout) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(layout.full_dim());
    left_multiply(op, layout, &mut m);
    m
}
