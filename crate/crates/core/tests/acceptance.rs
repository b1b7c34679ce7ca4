//! Acceptance criteria, one line each. Exits non-zero when any fails.

use std::process::ExitCode;
use std::time::Instant;

use opentc::numkit::{
    gamma_vector, pauli_string, swap_registers, trace_distance, unvectorize, vectorize, ComplexMatrix,
};
use opentc::oracle::{evolve_liouville, liouville_matrix, mcwf_evolve, Method, MAX_DENSE_QUBITS};
use opentc::par::Execution;
use opentc::qsim::{Mode, RandomSource, RegisterState};
use opentc::scenario::{presets, run_scenario, ResultSeries, RunConfig, RunKind, RunMode, RunOptions, ScenarioConfig};
use opentc::splitj::{evolve, EvolveMode, Evolved, TrotterOrder};
use opentc::tcmodel::{annihilation_matrix, exchange_matrix, hamiltonian, lindblad_rhs, TcSystem};
use opentc::wml::{
    c_bound, c_bound_single_coupling, evolve_wml, four_unitary_grouping, four_unitary_grouping_adjoint_branch,
    m_matrix, pauli_decomposition_m, tc_program_ensemble, FixedInteraction, FixedInteractionImpl, WmlMode,
};
use opentc::C64;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn preset(name: &str) -> ScenarioConfig {
    presets::preset(name).expect("bundled preset")
}

fn initial_state(config: &ScenarioConfig, mode: Mode) -> RegisterState {
    let index = config.resolve().expect("valid preset").initial_index;
    RegisterState::basis(config.system.num_qubits(), index, mode).expect("register fits")
}

fn random_density(dim: usize, rng: &mut RandomSource) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(rng.uniform() - 0.5, rng.uniform() - 0.5));
    let rho = a.matmul(&a.adjoint());
    let t = rho.trace().re;
    rho.scale_real(1.0 / t)
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

fn max_population_gap(a: &[(f64, Vec<f64>)], b: &[(f64, Vec<f64>)]) -> f64 {
    a.iter()
        .zip(b)
        .map(|((ca, ea), (cb, eb))| ea.iter().zip(eb).map(|(x, y)| (x - y).abs()).fold((ca - cb).abs(), f64::max))
        .fold(0.0, f64::max)
}

fn algorithm_columns(s: &ResultSeries) -> Vec<(f64, Vec<f64>)> {
    s.rows.iter().map(|r| (r.algorithm.cavity, r.algorithm.emitters.clone())).collect()
}

fn oracle_columns(s: &ResultSeries) -> Vec<(f64, Vec<f64>)> {
    s.rows
        .iter()
        .map(|r| {
            let o = r.oracle.as_ref().expect("oracle columns");
            (o.cavity, o.emitters.clone())
        })
        .collect()
}

fn operator_identities() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    let a = annihilation_matrix(2);
    for (k, expect) in [1.0, 2f64.sqrt(), 3f64.sqrt()].into_iter().enumerate() {
        worst = worst.max((a[(k, k + 1)] - real(expect)).norm());
    }
    worst = worst.max((a.frobenius_norm().powi(2) - 6.0).abs());

    let sys = TcSystem { pump_amp: 0.7, frame_shift: Some(0.2), ..TcSystem::homogeneous(2, 1.1, 1.4, 0.6, 0.3, 0.1) };
    let ens = tc_program_ensemble(&sys, 0.37)?;
    let mut exchange = ComplexMatrix::zeros(8, 8);
    for p in ens.hamiltonian.iter().filter(|p| p.support == [0, 1, 2]) {
        exchange += &p.density().scale_real(p.coefficient);
    }
    worst = worst.max(exchange.max_abs_diff(&exchange_matrix(2).scale_real(sys.g[0])));
    worst = worst.max(ens.hamiltonian_matrix(sys.num_qubits())?.max_abs_diff(hamiltonian(&sys, 0.37)?.matrix()));

    for q in 1..=2 {
        let d = 1usize << (3 * q);
        let mut m = ComplexMatrix::zeros(d, d);
        for (c, ps) in pauli_decomposition_m(q) {
            m += &pauli_string(&ps).scale(c);
        }
        worst = worst.max(m.max_abs_diff(&m_matrix(q)));
        let g = gamma_vector(q);
        let swap = swap_registers(q).kron(&ComplexMatrix::identity(1 << q));
        let proj = ComplexMatrix::identity(1 << q).kron(&ComplexMatrix::outer(&g, &g));
        let mdm = m_matrix(q).adjoint().matmul(&m_matrix(q));
        worst = worst.max(mdm.max_abs_diff(&swap.matmul(&proj).matmul(&swap)));
    }

    let m = m_matrix(1);
    let mut sum1 = ComplexMatrix::zeros(8, 8);
    for u in four_unitary_grouping() {
        if !u.is_unitary(TOL) {
            return Ok((false, "a grouping term is not unitary".into()));
        }
        sum1 += &u;
    }
    worst = worst.max(sum1.max_abs_diff(&m.scale_real(2.0 * 2f64.sqrt())));
    let mut sum0 = ComplexMatrix::zeros(8, 8);
    for u in four_unitary_grouping_adjoint_branch() {
        if !u.is_unitary(TOL) {
            return Ok((false, "an adjoint-branch term is not unitary".into()));
        }
        sum0 += &u;
    }
    worst = worst.max(sum0.max_abs_diff(&m.adjoint().matmul(&m).scale_real(2.0)));
    Ok((worst <= TOL, format!("max deviation {worst:.2e} (limit {TOL:.0e})")))
}

fn channel_equivalence() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for q in 1..=2 {
        for delta in [0.01, 0.05, 0.1] {
            let exact = FixedInteraction::new(FixedInteractionImpl::ExactKraus, q, delta)?.superoperator();
            for kind in [FixedInteractionImpl::Protocol1, FixedInteractionImpl::Protocol2, FixedInteractionImpl::HybridJ] {
                let d = FixedInteraction::new(kind, q, delta)?.superoperator().max_abs_diff(&exact);
                let limit = 10.0 * delta * delta;
                pass &= d <= limit;
                if d > limit {
                    lines.push(format!("{kind:?} q={q} Δ={delta}: {d:.2e} > {limit:.1e}"));
                }
                if delta == 0.1 {
                    lines.push(format!("{kind:?} q={q} Δ=0.1: {d:.2e}"));
                }
            }
        }
    }
    Ok((pass, format!("max-entry distances within 10Δ²; {}", lines.join(", "))))
}

fn oracle_cross_validation() -> Outcome {
    let mut rng = RandomSource::new(7);
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for (name, _) in presets::PRESETS {
        let sys = preset(name).system;
        if sys.num_qubits() > MAX_DENSE_QUBITS {
            continue;
        }
        names.push(name);
        let t = 0.13;
        let l = liouville_matrix(&sys, t)?;
        for _ in 0..20 {
            let rho = random_density(sys.dim(), &mut rng);
            let via_matrix = unvectorize(&l.matrix().mul_vec(&vectorize(&rho)), sys.dim());
            let direct = lindblad_rhs(&sys, &rho, t)?;
            let scale = via_matrix.max_abs().max(1.0);
            worst = worst.max(direct.max_abs_diff(&via_matrix) / scale);
        }
    }
    let rhs_ok = worst <= 1e-11;

    let sys = preset("fig1").system;
    let init = initial_state(&preset("fig1"), Mode::Shot);
    let RegisterState::Shot { amplitudes, .. } = &init else { unreachable!() };
    let t = 0.02;
    let reference = evolve_liouville(&sys, &init.density(), 0.0, t, Method::Dense)?;
    let counts = [100usize, 1000, 10000];
    let seeds = [101u64, 202, 303, 404];
    let mut distances = Vec::new();
    for &p in &counts {
        let mut total = 0.0;
        for &seed in &seeds {
            let rho = mcwf_evolve(&sys, amplitudes, t, 2e-5, p, seed, Execution::Parallel)?;
            total += trace_distance(&rho, &reference)?;
        }
        distances.push(total / seeds.len() as f64);
    }
    let x: Vec<f64> = counts.iter().map(|&p| p as f64).collect();
    let slope = log_log_slope(&x, &distances);
    let slope_ok = (slope + 0.5).abs() <= 0.15;
    Ok((
        rhs_ok && slope_ok,
        format!(
            "rhs vs Liouvillian {worst:.1e} over {} (limit 1e-11); trajectory slope {slope:.3} (target -0.5 ± 0.15), distances {:?}",
            names.join("/"),
            distances.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>()
        ),
    ))
}

fn figure1() -> Outcome {
    let base = preset("fig1");
    let mut exact = base.clone();
    exact.run.mode = Some(RunMode::Exact);
    exact.run.shots = None;
    let e = run_scenario(&exact, &RunOptions::default())?;
    let dev = max_population_gap(&algorithm_columns(&e), &oracle_columns(&e));
    let s = run_scenario(&base, &RunOptions { oracle: false, ..Default::default() })?;
    let shot_gap = max_population_gap(&algorithm_columns(&s), &algorithm_columns(&e));
    let pass = e.rows.len() == 250 && dev <= 0.05 && shot_gap <= 0.09;
    Ok((pass, format!("{} points, exact vs oracle {dev:.4} (limit 0.05), shots vs exact {shot_gap:.4} (limit 0.09)", e.rows.len())))
}

fn figure5() -> Outcome {
    let config = preset("fig5");
    let s = run_scenario(&config, &RunOptions::default())?;
    let dev = max_population_gap(&algorithm_columns(&s), &oracle_columns(&s));
    let c = tc_program_ensemble(&config.system, 0.0)?.c;
    let delta = s
        .rows
        .iter()
        .filter(|r| r.time > 0.0)
        .map(|r| c * r.time / r.steps.expect("step count") as f64)
        .fold(0.0, f64::max);
    let pass = s.rows.len() == 19 && dev <= 0.05 && delta <= 0.05;
    Ok((pass, format!("{} points, deviation {dev:.4} (limit 0.05), largest c·t/n {delta:.2e}", s.rows.len())))
}

fn convergence_order() -> Outcome {
    let config = preset("fig1");
    let sys = config.system.clone();
    let init = initial_state(&config, Mode::Exact);
    let t = 0.1;
    let reference = evolve_liouville(&sys, &init.density(), 0.0, t, Method::Dense)?;
    let ns = [25usize, 50, 100, 200, 400];
    let mut errors = Vec::new();
    for &n in &ns {
        let Evolved::Exact(out) = evolve(&sys, &init, t, n, EvolveMode::Exact, TrotterOrder::First)? else {
            unreachable!()
        };
        errors.push(trace_distance(&out.density(), &reference)?);
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let split_slope = log_log_slope(&x, &errors);

    let config = preset("fig8");
    let sys = config.system.clone();
    let init = initial_state(&config, Mode::Exact);
    let t = 2.0;
    let reference = evolve_liouville(&sys, &init.density(), 0.0, t, Method::Dense)?;
    let c = tc_program_ensemble(&sys, 0.0)?.c;
    let base = (c * t / 0.05).ceil() as usize;
    let ns: Vec<usize> = (0..5).map(|k| base << k).collect();
    let mut wml_errors = Vec::new();
    for &n in &ns {
        let Evolved::Exact(out) = evolve_wml(&sys, &init, t, n, FixedInteractionImpl::HybridJ, WmlMode::ExactAveraged)?
        else {
            unreachable!()
        };
        wml_errors.push(trace_distance(&out.density(), &reference)?);
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let wml_slope = log_log_slope(&x, &wml_errors);
    let pass = (split_slope + 1.0).abs() <= 0.3 && (wml_slope + 1.0).abs() <= 0.3;
    Ok((pass, format!("split-j slope {split_slope:.3}, wml slope {wml_slope:.3} (target -1 ± 0.3)")))
}

fn g2_running_median() -> Outcome {
    let s = run_scenario(&preset("fig7"), &RunOptions::default())?;
    let g2 = s.g2.as_ref().expect("g2 run");
    let oracle = g2.oracle_g2.ok_or("no oracle g2")?;
    let inside = |m: &Option<f64>| m.is_some_and(|m| (m - oracle).abs() <= 0.1);
    let medians = &g2.estimate.running_median;
    let entry = (0..medians.len()).find(|&k| medians[k..].iter().all(inside));
    let reference_gap = (oracle - 0.1895).abs();
    let pass = entry.is_some() && reference_gap <= 0.02;
    let entry = entry.map_or("never".to_string(), |k| format!("from batch {}", k + 1));
    Ok((
        pass,
        format!(
            "oracle {oracle:.4}, final median {:.4}, inside ±0.1 {entry} of {}; |oracle - 0.1895| = {reference_gap:.4} (limit 0.02)",
            g2.estimate.estimate,
            medians.len()
        ),
    ))
}

fn c_bounds() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, _) in presets::PRESETS {
        let sys = preset(name).system;
        let c = tc_program_ensemble(&sys, 0.0)?.c;
        let bound = c_bound(&sys, sys.max_photons());
        let single = c_bound_single_coupling(&sys, sys.max_photons());
        pass &= c <= bound * (1.0 + 1e-12);
        let mark = if c > single { " (exceeds single-coupling form)" } else { "" };
        parts.push(format!("{name} {c:.4}/{bound:.4}{mark}"));
    }
    Ok((pass, format!("c/bound: {}", parts.join(", "))))
}

fn populations_in_range(s: &ResultSeries, max_photons: f64) -> bool {
    s.rows.iter().all(|r| {
        let a = &r.algorithm;
        (-1e-9..=max_photons + 1e-9).contains(&a.cavity) && a.emitters.iter().all(|e| (-1e-9..=1.0 + 1e-9).contains(e))
    })
}

fn large_smoke_runs() -> Outcome {
    let mut fig4 = preset("fig4");
    fig4.run.num_points = Some(4);
    fig4.run.shots = Some(100);
    let shots4 = run_scenario(&fig4, &RunOptions::default())?;
    let mut fig4_exact = fig4.clone();
    fig4_exact.run.mode = Some(RunMode::Exact);
    fig4_exact.run.shots = None;
    fig4_exact.run.num_points = Some(2);
    fig4_exact.run.t_end = Some(0.02);
    fig4_exact.algorithm.steps = Some(4);
    let exact4 = run_scenario(&fig4_exact, &RunOptions::default())?;

    let mut fig9 = preset("fig9");
    fig9.run.batches = Some(2);
    fig9.run.shots_per_batch = Some(1500);
    fig9.algorithm.steps = Some(100);
    let shots9 = run_scenario(&fig9, &RunOptions::default())?;
    let mut fig9_exact = fig9.clone();
    fig9_exact.run = RunConfig {
        kind: RunKind::TimeSeries,
        t_start: Some(0.0),
        t_end: Some(0.05),
        num_points: Some(2),
        mode: Some(RunMode::Exact),
        ..fig4_exact.run.clone()
    };
    fig9_exact.algorithm.steps = Some(10);
    let exact9 = run_scenario(&fig9_exact, &RunOptions::default())?;

    let g2 = shots9.g2.as_ref().expect("g2 run");
    let trace = |s: &ResultSeries| s.checks.iter().find(|c| c.name == "trace_deviation").map(|c| (c.value, c.passed));
    let (t4, ok4) = trace(&exact4).ok_or("missing trace check")?;
    let (t9, ok9) = trace(&exact9).ok_or("missing trace check")?;
    let pass = shots4.all_checks_passed()
        && populations_in_range(&shots4, 3.0)
        && exact4.all_checks_passed()
        && ok4
        && shots9.all_checks_passed()
        && g2.estimate.estimate.is_finite()
        && exact9.all_checks_passed()
        && ok9;
    Ok((
        pass,
        format!(
            "fig4 {} qubits, {} shot rows, exact trace deviation {t4:.1e}; fig9 {} qubits, g2 {:.3} over {} batches, exact trace deviation {t9:.1e}",
            shots4.metadata.num_qubits,
            shots4.rows.len(),
            shots9.metadata.num_qubits,
            g2.estimate.estimate,
            g2.estimate.running_median.len()
        ),
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("operator identities", operator_identities),
        ("fixed-interaction channels", channel_equivalence),
        ("oracle cross-validation", oracle_cross_validation),
        ("fig1 reproduction", figure1),
        ("fig5 reproduction", figure5),
        ("convergence order", convergence_order),
        ("g2 running median", g2_running_median),
        ("c bound", c_bounds),
        ("fig4 and fig9 smoke runs", large_smoke_runs),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!pass);
        println!(
            "criterion {} {}: {} ({:.1} s) {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
