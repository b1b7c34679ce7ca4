use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{ComplexMatrix, NumError};

const HERMITIAN_TOL: f64 = 1e-10;

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn from_na(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn require_square(m: &ComplexMatrix) -> Result<(), NumError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(NumError::NotSquare { rows: m.rows(), cols: m.cols() })
    }
}

fn require_hermitian(m: &ComplexMatrix) -> Result<(), NumError> {
    require_square(m)?;
    let tol = HERMITIAN_TOL * m.max_abs().max(1.0);
    if m.is_hermitian(tol) {
        Ok(())
    } else {
        Err(NumError::NotHermitian)
    }
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix.
pub fn eigh(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), NumError> {
    if h.data().iter().any(|z| !z.is_finite()) {
        return Err(NumError::NonFinite);
    }
    require_hermitian(h)?;
    let (values, vectors) = match symmetric_eigen(&to_na(h)) {
        Some(e) => e,
        None => {
            // Exact zeros can stall the complex tridiagonal sweep; rotate to a
            // dense basis, diagonalize there and rotate back.
            let q = mixing_orthogonal(h.rows());
            let (values, w) = symmetric_eigen(&(q.adjoint() * to_na(h) * &q)).ok_or(NumError::NonFinite)?;
            (values, q * w)
        }
    };
    let mut order: Vec<usize> = (0..h.rows()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let vectors = ComplexMatrix::from_fn(h.rows(), h.rows(), |i, j| vectors[(i, order[j])]);
    Ok((sorted, vectors))
}

fn symmetric_eigen(h: &DMatrix<C64>) -> Option<(Vec<f64>, DMatrix<C64>)> {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let finite = eig.eigenvalues.iter().all(|l| l.is_finite()) && eig.eigenvectors.iter().all(|z| z.is_finite());
    finite.then(|| (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// Deterministic dense orthogonal matrix from the QR factors of a fixed
/// pseudo-random matrix.
fn mixing_orthogonal(n: usize) -> DMatrix<C64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let a = DMatrix::from_fn(n, n, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        C64::new((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5, 0.0)
    });
    a.qr().q()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>, NumError> {
    eigh(h).map(|(v, _)| v)
}

/// `exp(-i h theta)` for Hermitian `h`.
pub fn expm_hermitian(h: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix, NumError> {
    let (values, vectors) = eigh(h)?;
    let n = h.rows();
    let phases: Vec<C64> = values.iter().map(|&l| C64::from_polar(1.0, -l * theta)).collect();
    let mut scaled = vectors.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= phases[j];
        }
    }
    Ok(scaled.matmul(&vectors.adjoint()))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(m t)` for a general square matrix, by Padé-13 scaling and squaring.
pub fn expm_general(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, NumError> {
    require_square(m)?;
    let n = m.rows();
    let a = m.scale_real(t);
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(NumError::NonFinite);
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale_real(0.5f64.powi(s));
    let b = PADE13;
    let eye = ComplexMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        let mut acc = a6.scale_real(c6);
        acc.add_scaled(C64::new(c4, 0.0), &a4);
        acc.add_scaled(C64::new(c2, 0.0), &a2);
        acc.add_scaled(C64::new(c0, 0.0), &eye);
        acc
    };
    let mut u_inner = a6.matmul(&lin(b[13], b[11], b[9], 0.0));
    u_inner += &lin(b[7], b[5], b[3], b[1]);
    let u = a.matmul(&u_inner);
    let mut v = a6.matmul(&lin(b[12], b[10], b[8], 0.0));
    v += &lin(b[6], b[4], b[2], b[0]);
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// Solve `a x = b` by LU decomposition.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumError> {
    require_square(a)?;
    if a.rows() != b.rows() {
        return Err(NumError::DimensionMismatch { expected: a.rows(), found: b.rows() });
    }
    to_na(a).lu().solve(&to_na(b)).map(|x| from_na(&x)).ok_or(NumError::Singular)
}

/// Singular values, descending. Falls back to the square roots of the
/// eigenvalues of `m^dag m` if the iterative SVD does not converge; a
/// non-finite input yields NaN.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.data().iter().any(|z| !z.is_finite()) {
        return vec![f64::NAN; m.rows().min(m.cols())];
    }
    let mut s: Vec<f64> = match nalgebra::SVD::try_new(to_na(m), false, false, f64::EPSILON, 10_000) {
        Some(svd) => svd.singular_values.iter().copied().collect(),
        None => {
            let g = m.adjoint().matmul(m);
            nalgebra::SymmetricEigen::new(to_na(&g)).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect()
        }
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Schatten p-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64, NumError> {
    if p.is_nan() || p < 1.0 {
        return Err(NumError::InvalidNormOrder(p));
    }
    let s = singular_values(m);
    if p.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    Ok(s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Spectral norm.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `0.5 * ||rho - sigma||_1`.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64, NumError> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(NumError::DimensionMismatch { expected: rho.rows(), found: sigma.rows() });
    }
    let diff = rho - sigma;
    if diff.data().iter().any(|z| !z.is_finite()) {
        return Err(NumError::NonFinite);
    }
    if require_hermitian(&diff).is_ok() {
        return Ok(0.5 * eigvalsh(&diff)?.iter().map(|l| l.abs()).sum::<f64>());
    }
    Ok(0.5 * schatten_norm(&diff, 1.0)?)
}

/// Trace out every subsystem not listed in `keep`.
///
/// `dims` gives subsystem dimensions, most significant first; `keep` lists the
/// retained subsystems in the order they appear in the output.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix, NumError> {
    require_square(rho)?;
    let total: usize = dims.iter().product();
    if total != rho.rows() {
        return Err(NumError::DimensionMismatch { expected: total, found: rho.rows() });
    }
    let mut seen = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() || seen[k] {
            return Err(NumError::InvalidLabels(format!("bad keep list {keep:?}")));
        }
        seen[k] = true;
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|&k| !seen[k]).collect();
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let index_of = |digits: &[usize], subsystems: &[usize]| -> usize {
        digits.iter().zip(subsystems).map(|(&d, &s)| d * strides[s]).sum()
    };
    let enumerate = |subsystems: &[usize]| -> Vec<usize> {
        let count: usize = subsystems.iter().map(|&s| dims[s]).product();
        (0..count)
            .map(|mut flat| {
                let mut digits = vec![0; subsystems.len()];
                for (pos, &s) in subsystems.iter().enumerate().rev() {
                    digits[pos] = flat % dims[s];
                    flat /= dims[s];
                }
                index_of(&digits, subsystems)
            })
            .collect()
    };
    let kept = enumerate(keep);
    let summed = enumerate(&traced);
    let out = ComplexMatrix::from_fn(kept.len(), kept.len(), |i, j| {
        summed.iter().map(|&t| rho[(kept[i] + t, kept[j] + t)]).sum()
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_vec(
            2,
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
    }

    #[test]
    fn expm_hermitian_of_pauli_y_is_rotation() {
        let theta = 0.37;
        let u = expm_hermitian(&pauli_y(), theta).unwrap();
        let want = ComplexMatrix::from_real_rows(&[
            &[theta.cos(), -theta.sin()],
            &[theta.sin(), theta.cos()],
        ]);
        assert!(u.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn expm_hermitian_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(expm_hermitian(&m, 1.0), Err(NumError::NotHermitian)));
    }

    #[test]
    fn expm_general_of_nilpotent_is_truncated_series() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let e = expm_general(&m, 2.0).unwrap();
        let want = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 2.0], &[0.0, 1.0, 2.0], &[0.0, 0.0, 1.0]]);
        assert!(e.max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn expm_general_agrees_with_hermitian_route_for_large_norm() {
        let h = ComplexMatrix::from_fn(4, 4, |i, j| {
            let z = C64::new((i + 2 * j) as f64, (i as f64) - (j as f64));
            if i == j { C64::new(z.re, 0.0) } else { z }
        });
        let h = &h + &h.adjoint();
        let a = expm_hermitian(&h, 3.0).unwrap();
        let b = expm_general(&h.scale(C64::new(0.0, -1.0)), 3.0).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = ComplexMatrix::from_real_rows(&[&[0.25, 0.1], &[0.1, 0.75]]);
        let b = ComplexMatrix::from_real_rows(&[&[0.5, 0.0, 0.0], &[0.0, 0.3, 0.2], &[0.0, 0.2, 0.2]]);
        let rho = a.kron(&b);
        assert!(partial_trace(&rho, &[2, 3], &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&rho, &[2, 3], &[1]).unwrap().max_abs_diff(&b) < 1e-15);
        let swapped = partial_trace(&rho, &[2, 3], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&b.kron(&a)) < 1e-15);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let p0 = ComplexMatrix::basis_projector(2, 0);
        let p1 = ComplexMatrix::basis_projector(2, 1);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schatten_norms_of_diagonal() {
        let d = ComplexMatrix::diagonal(&[C64::new(3.0, 0.0), C64::new(0.0, -4.0)]);
        assert!((schatten_norm(&d, 1.0).unwrap() - 7.0).abs() < 1e-13);
        assert!((schatten_norm(&d, 2.0).unwrap() - 5.0).abs() < 1e-13);
        assert!((schatten_norm(&d, f64::INFINITY).unwrap() - 4.0).abs() < 1e-13);
        assert!(schatten_norm(&d, 0.5).is_err());
    }
}
