//! Algorithms and oracles against closed-form solutions of small cases.

use opentc::numkit::ComplexMatrix;
use opentc::obs::{g2_exact, populations_exact};
use opentc::oracle::{evolve_liouville, mcwf_evolve, steady_state, Method};
use opentc::par::Execution;
use opentc::qsim::{Mode, RegisterState};
use opentc::splitj::{evolve, EvolveMode, Evolved, TrotterOrder};
use opentc::tcmodel::TcSystem;
use opentc::wml::{evolve_wml, FixedInteractionImpl, WmlMode, WmlPlan};
use opentc::C64;

fn sys(n: usize, g: f64, kappa: f64, gamma: f64) -> TcSystem {
    TcSystem { frame_shift: Some(0.0), ..TcSystem::homogeneous(n, 0.0, 0.0, g, kappa, gamma) }
}

fn basis(sys: &TcSystem, photons: usize, emitters: &[u8]) -> RegisterState {
    RegisterState::basis(sys.num_qubits(), sys.basis_index(photons, emitters).unwrap(), Mode::Exact).unwrap()
}

fn split_j(sys: &TcSystem, init: &RegisterState, t: f64, n: usize) -> ComplexMatrix {
    match evolve(sys, init, t, n, EvolveMode::Exact, TrotterOrder::Second).unwrap() {
        Evolved::Exact(s) => s.density(),
        Evolved::Shots(_) => unreachable!(),
    }
}

fn wml(sys: &TcSystem, init: &RegisterState, t: f64, eps: f64) -> ComplexMatrix {
    let n = WmlPlan::suggest_steps(sys, t, eps).unwrap();
    match evolve_wml(sys, init, t, n, FixedInteractionImpl::HybridJ, WmlMode::ExactAveraged).unwrap() {
        Evolved::Exact(s) => s.density(),
        Evolved::Shots(_) => unreachable!(),
    }
}

fn oracle(sys: &TcSystem, init: &RegisterState, t: f64) -> ComplexMatrix {
    evolve_liouville(sys, &init.density(), 0.0, t, Method::Auto).unwrap()
}

#[test]
fn cavity_decay_is_exponential() {
    let s = sys(0, 0.0, 0.8, 0.0);
    let init = basis(&s, 3, &[]);
    for t in [0.3, 1.0, 2.5] {
        let expect = 3.0 * (-0.8f64 * t).exp();
        let o = populations_exact(&s, &oracle(&s, &init, t), t).unwrap();
        assert!((o.cavity - expect).abs() < 1e-10, "oracle {} vs {expect}", o.cavity);
        let a = populations_exact(&s, &split_j(&s, &init, t, 1000), t).unwrap();
        assert!((a.cavity - expect).abs() < 1e-3, "split-j {} vs {expect}", a.cavity);
        let w = populations_exact(&s, &wml(&s, &init, t, 0.01), t).unwrap();
        assert!((w.cavity - expect).abs() < 1e-2, "wml {} vs {expect}", w.cavity);
    }
}

#[test]
fn emitter_decay_is_exponential() {
    let s = sys(2, 0.0, 0.0, 0.6);
    let init = basis(&s, 0, &[1, 1]);
    let t = 1.7;
    let expect = (-0.6f64 * t).exp();
    for rho in [oracle(&s, &init, t), split_j(&s, &init, t, 200)] {
        let p = populations_exact(&s, &rho, t).unwrap();
        assert!(p.emitters.iter().all(|e| (e - expect).abs() < 1e-3), "{:?} vs {expect}", p.emitters);
    }
}

#[test]
fn vacuum_rabi_oscillation() {
    let g = 1.3;
    let s = sys(1, g, 0.0, 0.0);
    let init = basis(&s, 1, &[0]);
    for t in [0.2, 0.7, 1.4] {
        let pe = (g * t).sin().powi(2);
        let o = populations_exact(&s, &oracle(&s, &init, t), t).unwrap();
        assert!((o.emitters[0] - pe).abs() < 1e-10);
        assert!((o.cavity - (1.0 - pe)).abs() < 1e-10);
        let a = populations_exact(&s, &split_j(&s, &init, t, 100), t).unwrap();
        assert!((a.emitters[0] - pe).abs() < 1e-3, "split-j {} vs {pe}", a.emitters[0]);
        let w = populations_exact(&s, &wml(&s, &init, t, 0.01), t).unwrap();
        assert!((w.emitters[0] - pe).abs() < 2e-2, "wml {} vs {pe}", w.emitters[0]);
    }
}

#[test]
fn detuned_single_excitation_follows_rabi_formula() {
    let (g, delta) = (1.0, 1.5);
    let s = TcSystem { omega_e: vec![delta], ..sys(1, g, 0.0, 0.0) };
    let init = basis(&s, 1, &[0]);
    let omega = (g * g + delta * delta / 4.0).sqrt();
    let t = 0.9;
    let pe = (g / omega).powi(2) * (omega * t).sin().powi(2);
    let o = populations_exact(&s, &oracle(&s, &init, t), t).unwrap();
    assert!((o.emitters[0] - pe).abs() < 1e-10);
    let a = populations_exact(&s, &split_j(&s, &init, t, 200), t).unwrap();
    assert!((a.emitters[0] - pe).abs() < 1e-3);
}

#[test]
fn weakly_driven_cavity_is_nearly_coherent() {
    let (pump, kappa) = (0.05, 1.0);
    let s = TcSystem { pump_amp: pump, ..sys(0, 0.0, kappa, 0.0) };
    let rho0 = basis(&s, 0, &[]).density();
    let ss = steady_state(&s, &rho0, 1e-12).unwrap();
    let n = populations_exact(&s, &ss, 0.0).unwrap().cavity;
    let alpha2 = 4.0 * pump * pump / (kappa * kappa);
    assert!((n - alpha2).abs() < 1e-4 * alpha2, "{n} vs {alpha2}");
    let g2 = g2_exact(&s, &ss).unwrap().unwrap();
    assert!((g2 - 1.0).abs() < 0.02, "g2 {g2}");
}

#[test]
fn trajectories_reproduce_cavity_decay() {
    let s = sys(0, 0.0, 1.0, 0.0);
    let mut psi = vec![C64::new(0.0, 0.0); s.dim()];
    psi[s.basis_index(2, &[]).unwrap()] = C64::new(1.0, 0.0);
    let t = 0.8;
    let rho = mcwf_evolve(&s, &psi, t, 1e-3, 4000, 11, Execution::Parallel).unwrap();
    let n = populations_exact(&s, &rho, t).unwrap().cavity;
    let expect = 2.0 * (-t).exp();
    assert!((n - expect).abs() < 0.05, "{n} vs {expect}");
}
