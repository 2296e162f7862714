use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use daqkit::blockir::{add, build_feature_map, build_hea, build_qft, chain, kron, n, z, FeatureMapKind};
use daqkit::daqc::{daqc_transform, Strategy};
use daqkit::diffengine::{DiffMode, Objective};
use daqkit::hamiltonian::total_magnetization;
use daqkit::simulator::run;
use daqkit::{Block, QuantumCircuit, Values};

fn hea_circuit(nq: usize) -> (QuantumCircuit, Values) {
    let body = chain([build_feature_map(nq, "x", FeatureMapKind::Chebyshev, None).unwrap(), build_hea(nq, 3).unwrap()]).unwrap();
    let circuit = QuantumCircuit::with_qubits(nq, body).unwrap();
    let mut v: Values = circuit.block().variational_names().unwrap().into_iter().enumerate().map(|(k, s)| (s, 0.1 * k as f64)).collect();
    v.insert("x".into(), 0.3);
    (circuit, v)
}

fn state_vector(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_hea");
    for nq in [4, 8, 12] {
        let (circuit, v) = hea_circuit(nq);
        g.bench_with_input(BenchmarkId::from_parameter(nq), &nq, |b, _| b.iter(|| run(black_box(&circuit), &v, None).unwrap()));
    }
    g.finish();
    let mut g = c.benchmark_group("run_qft");
    for nq in [6, 10] {
        let support: Vec<usize> = (0..nq).collect();
        let circuit = QuantumCircuit::with_qubits(nq, build_qft(&support).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nq), &nq, |b, _| {
            b.iter(|| run(black_box(&circuit), &Values::new(), None).unwrap())
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient_hea6");
    let (circuit, v) = hea_circuit(6);
    let obs = total_magnetization(6);
    let objective = Objective::new(&circuit, &obs, &v).unwrap();
    let names = circuit.block().variational_names().unwrap();
    for mode in [DiffMode::Adjoint, DiffMode::Gpsr, DiffMode::FiniteDiff] {
        g.bench_function(mode.to_string(), |b| b.iter(|| objective.gradient(black_box(&v), &[], &names, mode).unwrap()));
    }
    g.finish();
}

fn zz_build(nq: usize) -> Block {
    let mut terms = Vec::new();
    for i in 0..nq {
        for j in (i + 1)..nq {
            terms.push(kron([z(i), z(j)]).unwrap());
        }
    }
    add(terms).unwrap()
}

fn transform(c: &mut Criterion) {
    let mut g = c.benchmark_group("daqc_transform");
    for nq in [3, 5, 7] {
        let build = zz_build(nq);
        let target = add((0..nq).map(|i| kron([n(i), n((i + 1) % nq)]).unwrap())).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nq), &nq, |b, &nq| {
            b.iter(|| daqc_transform(nq, black_box(&target), 1.0, &build, Strategy::Sdaqc).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, state_vector, gradients, transform);
criterion_main!(benches);
