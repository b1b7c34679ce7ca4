//! Exact references for the open Tavis-Cummings dynamics: the dense
//! Liouvillian, its exponential, a matrix-free Taylor propagator for larger
//! registers, steady states and Monte-Carlo wave-function trajectories.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::numkit::local::apply_to_vector;
use crate::numkit::{
    expm_general, operator_norm, unvectorize, vector_norm, vectorize, ComplexMatrix, NumError, Operator,
};
use crate::par::{map_indexed, Execution};
use crate::qsim::RandomSource;
use crate::tcmodel::{generator_norm_bound, hamiltonian, lindblad_rhs, lindblad_terms, TcError, TcSystem};

pub use crate::numkit::Superoperator;

/// Largest register for which the Liouvillian is formed densely.
pub const MAX_DENSE_QUBITS: usize = 5;
/// Largest register the propagators accept.
pub const MAX_ORACLE_QUBITS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("register of {qubits} qubits exceeds the {limit}-qubit limit")]
    RegisterTooLarge { qubits: usize, limit: usize },
    #[error("time step {dt} too large: dt*||H_eff|| = {product:.3} > 0.1")]
    StepTooLarge { dt: f64, product: f64 },
    #[error("steady state requires a time-independent generator")]
    NotStatic,
    #[error("steady state not reached, residual {0:e}")]
    NotConverged(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// How [`evolve_liouville`] propagates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    /// Dense for small registers, Taylor otherwise.
    #[default]
    Auto,
    Dense,
    Taylor,
}

/// Column-stacking Liouvillian at time `t`:
/// `-i(I⊗H - H^T⊗I) + sum rate (L*⊗L - (I⊗L^dag L)/2 - ((L^dag L)^T⊗I)/2)`.
pub fn liouville_matrix(sys: &TcSystem, t: f64) -> Result<Superoperator, OracleError> {
    sys.validate()?;
    let n = sys.num_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(OracleError::RegisterTooLarge { qubits: n, limit: MAX_DENSE_QUBITS });
    }
    let d = sys.dim();
    let eye = ComplexMatrix::identity(d);
    let h = hamiltonian(sys, t)?;
    let h = h.matrix();
    let mut l = eye.kron(h);
    l -= &h.transpose().kron(&eye);
    let mut out = l.scale(C64::new(0.0, -1.0));
    for term in lindblad_terms(sys) {
        if term.rate == 0.0 {
            continue;
        }
        let op = term.op.embed(n)?;
        let ldl = op.adjoint().matmul(&op);
        let mut diss = op.conj().kron(&op);
        diss.add_scaled(C64::new(-0.5, 0.0), &eye.kron(&ldl));
        diss.add_scaled(C64::new(-0.5, 0.0), &ldl.transpose().kron(&eye));
        out.add_scaled(C64::new(term.rate, 0.0), &diss);
    }
    Ok(Superoperator::new(out)?)
}

fn check_rho(sys: &TcSystem, rho: &ComplexMatrix) -> Result<(), OracleError> {
    if !rho.is_square() || rho.rows() != sys.dim() {
        return Err(NumError::DimensionMismatch { expected: sys.dim(), found: rho.rows() }.into());
    }
    Ok(())
}

fn resolve(sys: &TcSystem, method: Method) -> Result<Method, OracleError> {
    let n = sys.num_qubits();
    if n > MAX_ORACLE_QUBITS {
        return Err(OracleError::RegisterTooLarge { qubits: n, limit: MAX_ORACLE_QUBITS });
    }
    Ok(match method {
        Method::Auto if n <= 4 => Method::Dense,
        Method::Auto => Method::Taylor,
        Method::Dense if n > MAX_DENSE_QUBITS => {
            return Err(OracleError::RegisterTooLarge { qubits: n, limit: MAX_DENSE_QUBITS })
        }
        m => m,
    })
}

/// Number of midpoint slices for a time-dependent generator over `span`.
fn slices(sys: &TcSystem, span: f64) -> usize {
    if sys.is_static() {
        1
    } else {
        ((span * generator_norm_bound(sys) / 0.1).ceil() as usize).max(1)
    }
}

/// Propagate `rho` from `t0` to `t1`. A time-dependent generator is frozen at
/// the midpoint of slices with `||L|| dt <= 0.1`.
pub fn evolve_liouville(
    sys: &TcSystem,
    rho: &ComplexMatrix,
    t0: f64,
    t1: f64,
    method: Method,
) -> Result<ComplexMatrix, OracleError> {
    sys.validate()?;
    check_rho(sys, rho)?;
    if t1 < t0 {
        return Err(OracleError::InvalidArgument(format!("end time {t1} before start {t0}")));
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(rho.clone());
    }
    let k = slices(sys, span);
    let dt = span / k as f64;
    let mut state = rho.clone();
    match resolve(sys, method)? {
        Method::Dense => {
            for s in 0..k {
                let mid = t0 + (s as f64 + 0.5) * dt;
                let prop = expm_general(liouville_matrix(sys, mid)?.matrix(), dt)?;
                state = unvectorize(&prop.mul_vec(&vectorize(&state)), sys.dim());
            }
        }
        _ => {
            for s in 0..k {
                let mid = t0 + (s as f64 + 0.5) * dt;
                state = taylor_propagate(sys, &state, mid, dt)?;
            }
        }
    }
    Ok(state)
}

/// `exp(L(t_gen) span) rho` by Taylor series on sub-steps with `||L|| h <= 0.5`.
fn taylor_propagate(sys: &TcSystem, rho: &ComplexMatrix, t_gen: f64, span: f64) -> Result<ComplexMatrix, OracleError> {
    let bound = generator_norm_bound(sys).max(1e-300);
    let steps = ((span * bound / 0.5).ceil() as usize).max(1);
    let h = span / steps as f64;
    let mut state = rho.clone();
    for _ in 0..steps {
        let mut term = state.clone();
        let mut sum = state.clone();
        let scale = state.max_abs().max(1e-300);
        for k in 1..60 {
            term = lindblad_rhs(sys, &term, t_gen)?.scale_real(h / k as f64);
            sum += &term;
            if term.max_abs() < 1e-17 * scale {
                break;
            }
        }
        state = sum;
    }
    Ok(state)
}

/// States at each of `times` (ascending, all `>= t0`), propagated
/// incrementally from `rho` at `t0`.
pub fn evolve_series(
    sys: &TcSystem,
    rho: &ComplexMatrix,
    t0: f64,
    times: &[f64],
    method: Method,
) -> Result<Vec<ComplexMatrix>, OracleError> {
    sys.validate()?;
    check_rho(sys, rho)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(OracleError::InvalidArgument("times must be ascending and not before t0".into()));
    }
    let method = resolve(sys, method)?;
    let mut out = Vec::with_capacity(times.len());
    let mut state = rho.clone();
    let mut now = t0;
    let mut cached: Option<(f64, ComplexMatrix)> = None;
    for &t in times {
        let gap = t - now;
        if gap > 0.0 {
            if method == Method::Dense && sys.is_static() {
                let reuse = cached.as_ref().is_some_and(|(g, _)| (g - gap).abs() <= 1e-12 * gap);
                if !reuse {
                    let prop = expm_general(liouville_matrix(sys, 0.0)?.matrix(), gap)?;
                    cached = Some((gap, prop));
                }
                let prop = &cached.as_ref().expect("cached propagator").1;
                state = unvectorize(&prop.mul_vec(&vectorize(&state)), sys.dim());
            } else {
                state = evolve_liouville(sys, &state, now, t, method)?;
            }
        }
        now = t;
        out.push(state.clone());
    }
    Ok(out)
}

/// Long-time limit of a static generator, by repeated squaring of
/// `exp(L T)` until `max |L(rho)| < tol * ||L||`.
pub fn steady_state(sys: &TcSystem, rho0: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, OracleError> {
    sys.validate()?;
    check_rho(sys, rho0)?;
    if !sys.is_static() {
        return Err(OracleError::NotStatic);
    }
    let norm = generator_norm_bound(sys).max(1e-300);
    let residual = |r: &ComplexMatrix| -> Result<f64, OracleError> { Ok(lindblad_rhs(sys, r, 0.0)?.max_abs()) };
    if resolve(sys, Method::Auto)? == Method::Dense {
        let mut prop = expm_general(liouville_matrix(sys, 0.0)?.matrix(), 1.0 / norm)?;
        let mut state = rho0.clone();
        for _ in 0..80 {
            state = unvectorize(&prop.mul_vec(&vectorize(rho0)), sys.dim());
            let tr = state.trace();
            state = state.scale(1.0 / tr);
            let r = residual(&state)?;
            if r < tol * norm {
                return Ok(state);
            }
            prop = prop.matmul(&prop);
        }
        return Err(OracleError::NotConverged(residual(&state)?));
    }
    let mut state = rho0.clone();
    let mut span = 1.0 / norm;
    for _ in 0..60 {
        state = evolve_liouville(sys, &state, 0.0, span, Method::Taylor)?;
        let r = residual(&state)?;
        if r < tol * norm {
            return Ok(state);
        }
        span *= 2.0;
    }
    Err(OracleError::NotConverged(residual(&state)?))
}

/// Average of `trajectories` first-order quantum-jump trajectories at time
/// `t`, starting from the pure state `psi0` at time zero.
///
/// Each step of length `dt` jumps with probability `dt sum_k rate_k ||L_k psi||^2`,
/// otherwise evolves with `exp(-i H_eff dt)`, `H_eff = H - (i/2) sum rate L^dag L`,
/// and renormalizes.
pub fn mcwf_evolve(
    sys: &TcSystem,
    psi0: &[C64],
    t: f64,
    dt: f64,
    trajectories: usize,
    seed: u64,
    exec: Execution,
) -> Result<ComplexMatrix, OracleError> {
    sys.validate()?;
    let n = sys.num_qubits();
    if n > MAX_ORACLE_QUBITS {
        return Err(OracleError::RegisterTooLarge { qubits: n, limit: MAX_ORACLE_QUBITS });
    }
    if psi0.len() != sys.dim() {
        return Err(NumError::DimensionMismatch { expected: sys.dim(), found: psi0.len() }.into());
    }
    if dt.is_nan() || dt <= 0.0 || trajectories == 0 || t < 0.0 {
        return Err(OracleError::InvalidArgument("need dt > 0, t >= 0 and at least one trajectory".into()));
    }
    let steps = (t / dt).round() as usize;
    let jumps: Vec<Operator> = lindblad_terms(sys).iter().filter(|l| l.rate > 0.0).map(|l| l.scaled()).collect();
    let jump_layouts: Vec<_> = jumps.iter().map(|j| j.layout(n)).collect();
    let effective = |time: f64| -> Result<ComplexMatrix, OracleError> {
        let mut h = hamiltonian(sys, time)?.matrix().clone();
        for j in &jumps {
            let full = j.embed(n)?;
            h.add_scaled(C64::new(0.0, -0.5), &full.adjoint().matmul(&full));
        }
        Ok(h)
    };
    let h0 = effective(0.0)?;
    let product = dt * operator_norm(&h0);
    if product > 0.1 {
        return Err(OracleError::StepTooLarge { dt, product });
    }
    let minus_i = C64::new(0.0, -1.0);
    let propagators: Vec<ComplexMatrix> = if sys.is_static() {
        vec![expm_general(&h0.scale(minus_i), dt)?]
    } else {
        (0..steps)
            .map(|s| expm_general(&effective((s as f64 + 0.5) * dt)?.scale(minus_i), dt).map_err(Into::into))
            .collect::<Result<_, OracleError>>()?
    };
    let root = RandomSource::new(seed);
    let finals = map_indexed(trajectories, exec, |k| {
        let mut rng = root.fork(k as u64);
        let mut psi = psi0.to_vec();
        for s in 0..steps {
            let branches: Vec<Vec<C64>> = jumps
                .iter()
                .zip(&jump_layouts)
                .map(|(j, layout)| {
                    let mut v = psi.clone();
                    apply_to_vector(j.matrix(), layout, &mut v);
                    v
                })
                .collect();
            let probs: Vec<f64> = branches.iter().map(|v| dt * vector_norm(v).powi(2)).collect();
            let total: f64 = probs.iter().sum();
            if rng.uniform() < total {
                let pick = rng.choose_weighted(&probs);
                psi = branches[pick].clone();
            } else {
                let u = &propagators[if propagators.len() == 1 { 0 } else { s }];
                psi = u.mul_vec(&psi);
            }
            let s = 1.0 / vector_norm(&psi);
            psi.iter_mut().for_each(|z| *z *= s);
        }
        psi
    });
    let mut rho = ComplexMatrix::zeros(sys.dim(), sys.dim());
    for psi in &finals {
        rho += &ComplexMatrix::outer(psi, psi);
    }
    Ok(rho.scale_real(1.0 / trajectories as f64))
}
