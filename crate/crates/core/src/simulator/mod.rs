//! Dense state-vector backend.

mod apply;
mod program;
mod state;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blockir::{Block, QuantumCircuit};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::symexpr::Values;

pub(crate) use program::unique_gaps;
pub use program::{BoundOp, Op, Program};
pub use state::{bitstring, StateVector};

/// Largest register for which dense matrices are materialized.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Bitstring (qubit 0 first) to number of shots.
pub type SampleCounts = BTreeMap<String, u64>;

/// Computational basis state, or `|0...0>` when `bits` is `None`.
pub fn prepare_state(bits: Option<&str>, n_qubits: usize) -> Result<StateVector> {
    match bits {
        None => Ok(StateVector::zero(n_qubits)),
        Some(b) if b.len() != n_qubits => Err(Error::BadBitstring(b.to_string())),
        Some(b) => StateVector::product(b),
    }
}

fn initial(n_qubits: usize, state: Option<StateVector>) -> Result<StateVector> {
    match state {
        None => Ok(StateVector::zero(n_qubits)),
        Some(s) if s.n_qubits() != n_qubits => Err(Error::InvalidArgument(format!(
            "state has {} qubits, circuit has {n_qubits}",
            s.n_qubits()
        ))),
        Some(s) => Ok(s),
    }
}

/// Applies the circuit to `state` (default `|0...0>`).
pub fn run(circuit: &QuantumCircuit, values: &Values, state: Option<StateVector>) -> Result<StateVector> {
    let program = Program::compile(circuit.block(), circuit.n_qubits())?;
    run_program(&program, values, state)
}

pub fn run_program(program: &Program, values: &Values, state: Option<StateVector>) -> Result<StateVector> {
    let mut psi = initial(program.n_qubits(), state)?;
    let bound = program.bind(values, &[])?;
    program.apply(&bound, psi.amplitudes_mut());
    Ok(psi)
}

/// Draws `n_shots` bitstrings from `|psi|^2` with a ChaCha8 generator
/// seeded by `seed`.
pub fn sample(circuit: &QuantumCircuit, values: &Values, n_shots: usize, seed: u64) -> Result<SampleCounts> {
    let psi = run(circuit, values, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_state(&psi, n_shots, &mut rng)
}

pub fn sample_state(psi: &StateVector, n_shots: usize, rng: &mut impl Rng) -> Result<SampleCounts> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("n_shots must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(psi.amplitudes().len());
    let mut acc = 0.0;
    for p in psi.probabilities() {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..n_shots {
        let u = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *hits.entry(k).or_insert(0) += 1;
    }
    Ok(hits.into_iter().map(|(k, c)| (bitstring(k, psi.n_qubits()), c)).collect())
}

/// Lowers a Hermitian observable with coefficients evaluated at `values`.
pub fn observable_operator(observable: &Block, values: &Values) -> Result<PauliSum> {
    let op = PauliSum::from_block(observable, &mut |e| e.evaluate(values)).map_err(|e| match e {
        Error::InvalidBlock(m) => Error::NonHermitianObservable(m),
        other => other,
    })?;
    if !op.is_hermitian(1e-10) {
        return Err(Error::NonHermitianObservable("complex Pauli coefficients".into()));
    }
    Ok(op)
}

/// `<psi|O|psi>` for the state prepared by the circuit.
pub fn expectation(
    circuit: &QuantumCircuit,
    observable: &Block,
    values: &Values,
    state: Option<StateVector>,
) -> Result<f64> {
    let op = observable_operator(observable, values)?;
    if let Some(&q) = op.support().last() {
        if q >= circuit.n_qubits() {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits: circuit.n_qubits() });
        }
    }
    let psi = run(circuit, values, state)?;
    Ok(op.expectation(psi.n_qubits(), psi.amplitudes()).re)
}

/// Expectations for a batch of parameter valuations, shape `(batch, n_obs)`.
/// Batch entries run in parallel.
pub fn expectation_batch(circuit: &QuantumCircuit, observables: &[Block], batch: &[Values]) -> Result<DMatrix<f64>> {
    let program = Program::compile(circuit.block(), circuit.n_qubits())?;
    let rows: Vec<Vec<f64>> = batch
        .par_iter()
        .map(|v| {
            let psi = run_program(&program, v, None)?;
            observables
                .iter()
                .map(|o| Ok(observable_operator(o, v)?.expectation(psi.n_qubits(), psi.amplitudes()).re))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = DMatrix::zeros(batch.len(), observables.len());
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            out[(r, c)] = *v;
        }
    }
    Ok(out)
}

/// Dense matrix of a block on `n_qubits` qubits. Unitary blocks are applied
/// to every basis state; Hermitian operator blocks (sums, scales, `N`) are
/// expanded from their Pauli form.
pub fn to_matrix(block: &Block, n_qubits: usize, values: &Values) -> Result<DMatrix<Complex64>> {
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubitsForDense { got: n_qubits, max: MAX_DENSE_QUBITS });
    }
    let program = match Program::compile(block, n_qubits) {
        Ok(p) => p,
        Err(e @ Error::NonUnitaryBlockInCircuit(_)) => {
            return match PauliSum::from_block(block, &mut |x| x.evaluate(values)) {
                Ok(op) => Ok(op.to_dense(n_qubits)),
                Err(_) => Err(e),
            };
        }
        Err(e) => return Err(e),
    };
    let bound = program.bind(values, &[])?;
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..dim {
        col.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        col[j] = Complex64::new(1.0, 0.0);
        program.apply(&bound, &mut col);
        m.column_mut(j).copy_from_slice(&col);
    }
    Ok(m)
}
