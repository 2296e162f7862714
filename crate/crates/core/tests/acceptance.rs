//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use daqkit::blockir::{add, build_qft, chain, kron, n, rx, ry, rz, scale, x, y, z, cnot, cphase, h, hamevo};
use daqkit::daqc::{build_da_qft, daqc_transform, Strategy};
use daqkit::diffengine::{gpsr_gradient, gradient, spectral_gaps, DiffMode};
use daqkit::hamiltonian::{hamiltonian_factory, total_magnetization, HamiltonianSpec, Interaction, Strength};
use daqkit::runtime::dqc::{
    laplace_model, laplace_solution, laplace_terms, ode_model, ode_solution, train_laplace, train_ode,
    LaplaceSamples,
};
use daqkit::runtime::qubo::{five_node_qubo, solve_qubo};
use daqkit::runtime::{Optimizer, Predictor, QuboProblem, TrainConfig};
use daqkit::simulator::{run, sample, to_matrix, SampleCounts, StateVector};
use daqkit::{values, Block, Expr, QuantumCircuit, Register, Values};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = DMatrix<Complex64>;
type Outcome = Result<(bool, String), String>;

const SEED: u64 = 2024;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix(b: &Block, nq: usize) -> M {
    to_matrix(b, nq, &Values::new()).unwrap()
}

fn max_abs(m: &M) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Deviation of `u` from `v` after multiplying `u` by the best global phase.
fn aligned_deviation(u: &M, v: &M) -> f64 {
    let overlap: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    max_abs(&(u * Complex64::from_polar(1.0, overlap.arg()) - v))
}

fn bit(k: usize, q: usize, nq: usize) -> usize {
    (k >> (nq - 1 - q)) & 1
}

fn reverse_bits(k: usize, nq: usize) -> usize {
    (0..nq).fold(0, |acc, q| acc | (bit(k, q, nq) << q))
}

/// `DFT[k][j] = e^{2πi jk / N} / √N`, rows permuted to the bit-reversed
/// output order of a swap-free QFT.
fn reversed_dft(nq: usize) -> M {
    let dim = 1usize << nq;
    let norm = 1.0 / (dim as f64).sqrt();
    M::from_fn(dim, dim, |r, j| {
        let k = reverse_bits(r, nq);
        Complex64::from_polar(norm, 2.0 * PI * (j * k) as f64 / dim as f64)
    })
}

fn qft_vs_dft() -> Outcome {
    let mut worst: f64 = 0.0;
    for nq in 1..=5 {
        let support: Vec<usize> = (0..nq).collect();
        let u = matrix(&build_qft(&support).map_err(|e| e.to_string())?, nq);
        worst = worst.max(max_abs(&(u - reversed_dft(nq))));
    }
    Ok((worst <= 1e-10, format!("max |QFT - P·DFT| over 1..=5 qubits = {worst:.2e} (tol 1e-10)")))
}

fn three_way_derivatives() -> Outcome {
    let body = kron((0..4).map(|i| rx(i, Expr::constant((i + 1) as f64) * Expr::feature("x").acos())))
        .map_err(|e| e.to_string())?;
    let circuit = QuantumCircuit::with_qubits(4, body).map_err(|e| e.to_string())?;
    let obs = total_magnetization(4);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let v = values([("x", rng.random_range(-0.95..0.95))]);
        let g = |mode| gradient(&circuit, &obs, &v, &["x"], mode).map(|g| g[0]).map_err(|e| e.to_string());
        let (a, b, f) = (g(DiffMode::Gpsr)?, g(DiffMode::Adjoint)?, g(DiffMode::FiniteDiff)?);
        worst = worst.max((a - b).abs()).max((a - f).abs()).max((b - f).abs());
    }
    Ok((worst <= 1e-5, format!("max pairwise deviation over 10 x = {worst:.2e} (tol 1e-5)")))
}

fn gpsr_spectral() -> Outcome {
    let g = add([kron([z(0), z(1)]).unwrap(), z(1)]).unwrap();
    let gaps = spectral_gaps(&g, 2).map_err(|e| e.to_string())?;
    // Brute force: eigenvalues of the diagonal operator, then unique positive differences.
    let eig: Vec<f64> = (0..4)
        .map(|k| {
            let s = |q| 1.0 - 2.0 * bit(k, q, 2) as f64;
            s(0) * s(1) + s(1)
        })
        .collect();
    let mut oracle: Vec<f64> = Vec::new();
    for a in &eig {
        for b in &eig {
            let d = a - b;
            if d > 1e-12 && !oracle.iter().any(|o| (o - d).abs() < 1e-12) {
                oracle.push(d);
            }
        }
    }
    oracle.sort_by(f64::total_cmp);
    let gaps_ok = gaps.len() == oracle.len() && gaps.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-12);

    let circuit = QuantumCircuit::with_qubits(1, rx(0, Expr::feature("x"))).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let xv = rng.random_range(-PI..PI);
        let d = gpsr_gradient(&circuit, &z(0), &values([("x", xv)]), &["x"]).map_err(|e| e.to_string())?[0];
        worst = worst.max((d + xv.sin()).abs());
    }
    Ok((
        gaps_ok && worst <= 1e-8,
        format!("gaps {gaps:?} vs oracle {oracle:?}; max |d<Z>/dx + sin x| = {worst:.2e} (tol 1e-8)"),
    ))
}

fn random_zz(rng: &mut ChaCha8Rng, nq: usize, complete: bool) -> (Block, Vec<(usize, usize, f64)>, Vec<f64>) {
    let mut terms = Vec::new();
    let mut pairs = Vec::new();
    let mut local = vec![0.0; nq];
    for i in 0..nq {
        for j in (i + 1)..nq {
            if complete || rng.random_bool(0.7) {
                let v = rng.random_range(0.3..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                terms.push(scale(v, kron([z(i), z(j)]).unwrap()));
                pairs.push((i, j, v));
            }
        }
        if rng.random_bool(0.5) {
            local[i] = rng.random_range(-1.0..1.0);
            terms.push(scale(local[i], z(i)));
        }
    }
    if pairs.is_empty() {
        terms.push(scale(0.5, kron([z(0), z(1)]).unwrap()));
        pairs.push((0, 1, 0.5));
    }
    (add(terms).unwrap(), pairs, local)
}

fn diag_evolution(nq: usize, t: f64, energy: impl Fn(usize) -> f64) -> M {
    let dim = 1 << nq;
    M::from_fn(dim, dim, |r, col| if r == col { Complex64::from_polar(1.0, -t * energy(r)) } else { c(0.0, 0.0) })
}

fn daqc_instances() -> Outcome {
    let reg = Register::triangular_lattice(2, 2, 2.0).map_err(|e| e.to_string())?;
    let nq = reg.n_qubits();
    let strengths: Vec<Expr> = reg.distances().values().map(|d| Expr::constant(1.0 / d)).collect();
    let spec = HamiltonianSpec::new(reg, Interaction::NN).interaction_strength(Strength::PerItem(strengths)).all_node_pairs(true);
    let build = hamiltonian_factory(&spec).map_err(|e| e.to_string())?;
    let target = add([kron([n(0), n(1)]).unwrap(), kron([n(1), n(2)]).unwrap(), kron([n(2), n(0)]).unwrap()]).unwrap();
    let t = daqc_transform(nq, &target, 5.0, &build, Strategy::Sdaqc).map_err(|e| e.to_string())?;
    let exact = diag_evolution(nq, 5.0, |k| {
        let b = |q| bit(k, q, nq) as f64;
        b(0) * b(1) + b(1) * b(2) + b(2) * b(0)
    });
    let lattice = aligned_deviation(&matrix(&t.block, nq), &exact);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let nq = 3 + case % 2;
        let (build, _, _) = random_zz(&mut rng, nq, true);
        let (target, pairs, local) = random_zz(&mut rng, nq, false);
        let t_f = rng.random_range(0.2..2.0);
        let tr = daqc_transform(nq, &target, t_f, &build, Strategy::Sdaqc).map_err(|e| e.to_string())?;
        let exact = diag_evolution(nq, t_f, |k| {
            let s = |q| 1.0 - 2.0 * bit(k, q, nq) as f64;
            pairs.iter().map(|&(i, j, v)| v * s(i) * s(j)).sum::<f64>()
                + local.iter().enumerate().map(|(q, a)| a * s(q)).sum::<f64>()
        });
        worst = worst.max(aligned_deviation(&matrix(&tr.block, nq), &exact));
    }
    Ok((
        lattice <= 1e-8 && worst <= 1e-8,
        format!("9-atom lattice instance {lattice:.2e}, 20 random 3-4 qubit instances {worst:.2e} (tol 1e-8)"),
    ))
}

fn da_qft() -> Outcome {
    let nq = 3;
    let mut terms = Vec::new();
    for i in 0..nq {
        for j in (i + 1)..nq {
            terms.push(kron([z(i), z(j)]).unwrap());
        }
    }
    let build = add(terms).unwrap();
    let da = build_da_qft(nq, Strategy::Sdaqc, Some(&build)).map_err(|e| e.to_string())?;
    let digital = matrix(&build_qft(&[0, 1, 2]).unwrap(), nq);
    let dev = aligned_deviation(&matrix(&da.block, nq), &digital);
    Ok((dev <= 1e-7, format!("|U_da - U_digital| after phase alignment = {dev:.2e} (tol 1e-7)")))
}

fn dqc_ode() -> Outcome {
    let mut m = ode_model(DiffMode::Adjoint, SEED).map_err(|e| e.to_string())?;
    let cfg = TrainConfig::new(1000, 0.01, Optimizer::Adam, SEED).map_err(|e| e.to_string())?;
    let trace = train_ode(&mut m, 20, &cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut mse = 0.0;
    for k in 0..100 {
        let xv = -0.99 + 1.98 * k as f64 / 99.0;
        let d = m.predict(&values([("x", xv)])).map_err(|e| e.to_string())? - ode_solution(xv);
        worst = worst.max(d.abs());
        mse += d * d / 100.0;
    }
    Ok((
        worst <= 0.1 && mse <= 1e-2,
        format!(
            "loss {:.3e} -> {:.3e}; on 100 grid points max-abs {worst:.3e} (tol 0.1), MSE {mse:.3e} (tol 1e-2)",
            trace[0],
            trace.last().unwrap()
        ),
    ))
}

fn dqc_laplace() -> Outcome {
    let mut m = laplace_model(DiffMode::Adjoint, SEED).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let probe = LaplaceSamples::draw(100, &mut rng);
    let before = laplace_terms(&m, &probe).map_err(|e| e.to_string())?.interior;
    let cfg = TrainConfig::new(1000, 0.01, Optimizer::Adam, SEED).map_err(|e| e.to_string())?;
    train_laplace(&mut m, 100, &cfg).map_err(|e| e.to_string())?;
    let after = laplace_terms(&m, &probe).map_err(|e| e.to_string())?.interior;
    let grid = 150;
    let mut mse = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let (xv, yv) = (i as f64 / (grid - 1) as f64, j as f64 / (grid - 1) as f64);
            let u = m.predict(&values([("x", xv), ("y", yv)])).map_err(|e| e.to_string())?;
            mse += (u - laplace_solution(xv, yv)).powi(2);
        }
    }
    mse /= (grid * grid) as f64;
    Ok((
        mse <= 5e-2,
        format!("MSE on 150x150 grid {mse:.3e} (tol 5e-2); interior residual {before:.3e} -> {after:.3e}"),
    ))
}

fn optimal_frequency(counts: &SampleCounts) -> u64 {
    ["01011", "00111"].iter().map(|b| counts.get(*b).copied().unwrap_or(0)).sum()
}

fn qubo_qaoa() -> Outcome {
    let problem = QuboProblem::new(five_node_qubo(), 1000, 2).map_err(|e| e.to_string())?;
    let (best, argmin) = problem.brute_force();
    let a = argmin.len() == 2 && argmin.contains(&"01011".to_string()) && argmin.contains(&"00111".to_string());
    let second = problem.cost_table().into_iter().filter(|v| v - best > 1e-9).fold(f64::INFINITY, f64::min);

    let cfg = TrainConfig::new(100, 0.5, Optimizer::GradientFreeSearch, SEED).map_err(|e| e.to_string())?;
    let run = solve_qubo(&problem, &cfg).map_err(|e| e.to_string())?;
    let b = run.final_cost < run.initial_cost;
    let (f0, f1) = (optimal_frequency(&run.initial_counts), optimal_frequency(&run.final_counts));
    let c = f1 > f0;
    Ok((
        a && b && c,
        format!(
            "(a) minima {argmin:?} at {best:.5}, next {second:.5}; (b) sampled cost {:.4} -> {:.4}; (c) optimal frequency {f0} -> {f1} of 1000; embedding residual {:.1e}",
            run.initial_cost, run.final_cost, run.embedding.relative_residual
        ),
    ))
}

fn gate(kind: usize, a: usize, b: usize, angle: f64) -> Block {
    match kind {
        0 => h(a),
        1 => rx(a, angle),
        2 => ry(a, angle),
        3 => rz(a, angle),
        4 => x(a),
        5 if a != b => cnot(a, b),
        6 if a != b => cphase(a, b, angle),
        _ => y(a),
    }
}

fn random_state(nq: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..1 << nq).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn pauli_word(word: &[(usize, usize)]) -> Block {
    let ops: Vec<Block> = word.iter().map(|&(q, p)| [x, y, z][p](q)).collect();
    kron(ops).unwrap()
}

fn rot_matrix(axis: usize, t: f64) -> M {
    let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
    match axis {
        0 => M::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)]),
        1 => M::from_row_slice(2, 2, &[c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)]),
        _ => M::from_row_slice(2, 2, &[c(co, -si), c(0.0, 0.0), c(0.0, 0.0), c(co, si)]),
    }
}

fn simulator_properties() -> Outcome {
    let cfg = Config { cases: 100, failure_persistence: None, ..Config::default() };
    let gates = prop::collection::vec((0usize..8, 0usize..4, 0usize..4, -6.0f64..6.0), 1..25);

    let mut runner = TestRunner::new_with_rng(cfg.clone(), proptest::test_runner::TestRng::deterministic_rng(cfg.rng_algorithm));
    runner
        .run(&(gates.clone(), any::<u64>()), |(gs, seed)| {
            let body = chain(gs.iter().map(|&(k, a, b, t)| gate(k, a, b, t))).unwrap();
            let circuit = QuantumCircuit::with_qubits(4, body).unwrap();
            let psi = run(&circuit, &Values::new(), Some(random_state(4, seed))).unwrap();
            prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
            Ok(())
        })
        .map_err(|e| format!("norm preservation: {e}"))?;

    runner
        .run(&(0usize..3, -6.0f64..6.0, 0usize..3, -6.0f64..6.0), |(a, ta, b, tb)| {
            let rot = |axis: usize, q: usize, t: f64| [rx, ry, rz][axis](q, Expr::constant(t));
            let ka = rot_matrix(a, ta);
            let kb = rot_matrix(b, tb);
            let kr = matrix(&kron([rot(a, 0, ta), rot(b, 1, tb)]).unwrap(), 2);
            prop_assert!(max_abs(&(kr - ka.kronecker(&kb))) < 1e-12);
            let ch = matrix(&chain([rot(a, 0, ta), rot(b, 0, tb)]).unwrap(), 1);
            prop_assert!(max_abs(&(ch - &kb * &ka)) < 1e-12);
            Ok(())
        })
        .map_err(|e| format!("chain/kron semantics: {e}"))?;

    let term = (prop::collection::btree_map(0usize..3, 0usize..3, 1..3), -2.0f64..2.0);
    runner
        .run(&(prop::collection::vec(term, 1..5), -3.0f64..3.0), |(terms, t)| {
            let gen = add(terms.iter().map(|(w, co)| scale(*co, pauli_word(&w.iter().map(|(q, p)| (*q, *p)).collect::<Vec<_>>()))))
                .unwrap();
            let full = matrix(&hamevo(gen.clone(), t).unwrap(), 3);
            let half = matrix(&hamevo(gen, t / 2.0).unwrap(), 3);
            prop_assert!(max_abs(&(full - &half * &half)) < 1e-10);
            Ok(())
        })
        .map_err(|e| format!("HamEvo half-step composition: {e}"))?;

    runner
        .run(&(gates, any::<u64>(), 1usize..500), |(gs, seed, shots)| {
            let body = chain(gs.iter().map(|&(k, a, b, t)| gate(k, a, b, t))).unwrap();
            let circuit = QuantumCircuit::with_qubits(4, body).unwrap();
            let first = sample(&circuit, &Values::new(), shots, seed).unwrap();
            prop_assert_eq!(&first, &sample(&circuit, &Values::new(), shots, seed).unwrap());
            prop_assert_eq!(first.values().sum::<u64>(), shots as u64);
            Ok(())
        })
        .map_err(|e| format!("sampling determinism: {e}"))?;

    Ok((true, "norm, chain/kron, HamEvo half-step, sampling determinism: 100 cases each".into()))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("QFT equals bit-reversed DFT", qft_vs_dft, Duration::from_secs(1)),
        ("GPSR / adjoint / FD agreement", three_way_derivatives, Duration::from_secs(5)),
        ("GPSR spectral gaps and shift rule", gpsr_spectral, Duration::from_secs(60)),
        ("sDAQC Ising transform", daqc_instances, Duration::from_secs(30)),
        ("digital-analog QFT", da_qft, Duration::from_secs(60)),
        ("DQC ODE training", dqc_ode, Duration::from_secs(600)),
        ("DQC Laplace training", dqc_laplace, Duration::from_secs(1800)),
        ("QUBO analog QAOA", qubo_qaoa, Duration::from_secs(600)),
        ("simulator property suite", simulator_properties, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (k, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && elapsed <= *budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {detail} [{:.2}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
