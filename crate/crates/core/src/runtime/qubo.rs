//! Quadratic unconstrained binary optimization on an atom register: the
//! couplings are embedded in the atom geometry and an analog QAOA-style
//! ansatz is tuned on sampled costs.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::QuantumModel;
use super::train::{train_gradient_free, TrainConfig};
use crate::blockir::{chain, Block, QuantumCircuit};
use crate::daqc::{lower_analog, AnalogOp, Strategy};
use crate::diffengine::DiffMode;
use crate::error::{Error, Result};
use crate::hamiltonian::{RydbergParams, DEFAULT_C6};
use crate::register::Register;
use crate::simulator::{bitstring, SampleCounts};
use crate::symexpr::{Expr, Values};

/// Five-variable instance whose couplings come from a planar atom layout;
/// `01011` and `00111` are its two optimal assignments.
pub fn five_node_qubo() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            -10.0, 19.7365809, 19.7365809, 5.42015853, 5.42015853, //
            19.7365809, -10.0, 20.67626392, 0.17675796, 0.85604541, //
            19.7365809, 20.67626392, -10.0, 0.85604541, 0.17675796, //
            5.42015853, 0.17675796, 0.85604541, -10.0, 0.32306662, //
            5.42015853, 0.85604541, 0.17675796, 0.32306662, -10.0,
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    q: DMatrix<f64>,
    pub n_shots: usize,
    pub n_layers: usize,
}

impl QuboProblem {
    pub fn new(q: DMatrix<f64>, n_shots: usize, n_layers: usize) -> Result<Self> {
        if !q.is_square() || q != q.transpose() {
            return Err(Error::InvalidArgument("QUBO matrix must be square and symmetric".into()));
        }
        if q.nrows() == 0 || q.nrows() > 20 {
            return Err(Error::InvalidArgument(format!("{} QUBO variables", q.nrows())));
        }
        Ok(Self { q, n_shots, n_layers })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn n_variables(&self) -> usize {
        self.q.nrows()
    }

    /// `zᵀ Q z` with `z` read left to right from `bits`.
    pub fn cost(&self, bits: &str) -> Result<f64> {
        let n = self.n_variables();
        if bits.len() != n || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::BadBitstring(bits.to_string()));
        }
        let z: Vec<f64> = bits.bytes().map(|b| (b - b'0') as f64).collect();
        Ok((0..n).map(|i| (0..n).map(|j| z[i] * self.q[(i, j)] * z[j]).sum::<f64>()).sum())
    }

    /// Cost of every basis index, qubit 0 as the most significant bit.
    pub fn cost_table(&self) -> Vec<f64> {
        let n = self.n_variables();
        (0..1usize << n).map(|k| self.cost(&bitstring(k, n)).expect("valid bitstring")).collect()
    }

    /// Minimal cost and all assignments within `1e-9` of it.
    pub fn brute_force(&self) -> (f64, Vec<String>) {
        let table = self.cost_table();
        let best = table.iter().cloned().fold(f64::INFINITY, f64::min);
        let n = self.n_variables();
        let argmin = (0..table.len()).filter(|&k| table[k] - best <= 1e-9).map(|k| bitstring(k, n)).collect();
        (best, argmin)
    }

    /// Shot-weighted mean cost of a sample.
    pub fn counts_cost(&self, counts: &SampleCounts) -> Result<f64> {
        let shots: u64 = counts.values().sum();
        let mut total = 0.0;
        for (bits, c) in counts {
            total += *c as f64 * self.cost(bits)?;
        }
        Ok(total / shots.max(1) as f64)
    }
}

/// Mean cost of `problem.n_shots` samples drawn from the model.
pub fn qubo_loss(m: &QuantumModel, problem: &QuboProblem, seed: u64) -> Result<f64> {
    problem.counts_cost(&m.sample(&Values::new(), problem.n_shots, seed)?)
}

/// Infinite-shot limit of [`qubo_loss`]: `Σ_b |ψ_b|² cost(b)`.
pub fn exact_qubo_loss(m: &QuantumModel, problem: &QuboProblem) -> Result<f64> {
    let psi = m.run(&Values::new())?;
    Ok(psi.probabilities().iter().zip(problem.cost_table()).map(|(p, c)| p * c).sum())
}

/// Atom layout found by [`embed_qubo`].
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub register: Register,
    /// `‖C6/r⁶ − Q‖_F` over the off-diagonal entries.
    pub residual: f64,
    /// `residual` divided by the norm of the off-diagonal of `Q`.
    pub relative_residual: f64,
}

impl Embedding {
    /// Scores an existing layout against `q`.
    pub fn of(register: Register, q: &DMatrix<f64>, c6: f64) -> Result<Self> {
        let n = q.nrows();
        if register.n_qubits() != n {
            return Err(Error::InvalidArgument(format!("register has {} atoms, QUBO has {n} variables", register.n_qubits())));
        }
        let p: Vec<f64> = register.coords().iter().flatten().copied().collect();
        let residual = Mismatch { q, c6 }.eval(&p);
        let scale = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| q[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        let relative_residual = if scale > 0.0 { residual / scale } else { residual };
        Ok(Self { register, residual, relative_residual })
    }

    /// Fails with [`Error::EmbeddingNotConverged`] above `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if self.relative_residual > tol {
            return Err(Error::EmbeddingNotConverged(self.relative_residual));
        }
        Ok(())
    }
}

struct Mismatch<'a> {
    q: &'a DMatrix<f64>,
    c6: f64,
}

impl Mismatch<'_> {
    fn eval(&self, p: &[f64]) -> f64 {
        let n = self.q.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let r2 = (p[2 * i] - p[2 * j]).powi(2) + (p[2 * i + 1] - p[2 * j + 1]).powi(2);
                let d = self.c6 / r2.powi(3) - self.q[(i, j)];
                s += 2.0 * d * d;
            }
        }
        s.sqrt()
    }
}

impl CostFunction for Mismatch<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let c = self.eval(p);
        Ok(if c.is_nan() { f64::INFINITY } else { c })
    }
}

const EMBED_MAX_ITERS: u64 = 200_000;
const EMBED_RESTARTS: usize = 8;
const EMBED_STARTS: usize = 16;

/// Places atoms so that `C6 / r_ij⁶` approximates `Q_ij` for `i ≠ j`, by
/// Nelder–Mead over the `2n` coordinates. Each of several seeded starts in
/// the unit square is refined by restarting from its best point until it
/// stalls; the best layout wins.
pub fn embed_qubo(q: &DMatrix<f64>, c6: f64, seed: u64) -> Result<Embedding> {
    let n = q.nrows();
    if n < 2 || !q.is_square() {
        return Err(Error::InvalidArgument("embedding needs a square matrix with at least two variables".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = Vec::new();
    let mut best_cost = f64::INFINITY;
    for _ in 0..EMBED_STARTS {
        let x0: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        let (x, cost) = refine(q, c6, x0)?;
        if cost < best_cost {
            best = x;
            best_cost = cost;
        }
    }
    let coords = best.chunks(2).map(|c| [c[0], c[1]]).collect();
    Embedding::of(Register::from_coordinates(coords)?, q, c6)
}

fn refine(q: &DMatrix<f64>, c6: f64, x0: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let mut best_cost = Mismatch { q, c6 }.eval(&x0);
    let mut best = x0;
    for _ in 0..EMBED_RESTARTS {
        let solver = NelderMead::new(initial_simplex(&best))
            .with_sd_tolerance(1e-12)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let res = Executor::new(Mismatch { q, c6 }, solver)
            .configure(|s| s.max_iters(EMBED_MAX_ITERS))
            .run()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let state = res.state();
        let cost = state.get_best_cost();
        let improved = cost < best_cost * (1.0 - 1e-9);
        if let Some(p) = state.get_best_param() {
            if cost <= best_cost {
                best = p.clone();
                best_cost = cost;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((best, best_cost))
}

/// Start point plus one vertex per coordinate moved by 5% (or `2.5e-4` at zero).
fn initial_simplex(x0: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![x0.to_vec()];
    for k in 0..x0.len() {
        let mut v = x0.to_vec();
        v[k] = if v[k] != 0.0 { 1.05 * v[k] } else { 2.5e-4 };
        out.push(v);
    }
    out
}

/// `n_layers` repetitions of a global `RX(t_i)` pulse followed by a global
/// `RZ(s_i)` pulse, with the interaction always on.
pub fn qaoa_ansatz(register: &Register, n_layers: usize, p: &RydbergParams) -> Result<Block> {
    let mut blocks = Vec::with_capacity(2 * n_layers);
    for i in 0..n_layers {
        blocks.push(lower_analog(&AnalogOp::rx(Expr::var(format!("t{i}"))), register, p, Strategy::Bdaqc)?);
        blocks.push(lower_analog(&AnalogOp::rz(Expr::var(format!("s{i}"))), register, p, Strategy::Bdaqc)?);
    }
    Ok(chain(blocks)?.tagged("qaoa"))
}

pub fn qaoa_model(register: Register, n_layers: usize, seed: u64) -> Result<QuantumModel> {
    let p = RydbergParams { c6: DEFAULT_C6, ..Default::default() };
    let block = qaoa_ansatz(&register, n_layers, &p)?;
    QuantumModel::new(QuantumCircuit::new(register, block)?, vec![], DiffMode::FiniteDiff, seed)
}

/// Outcome of [`solve_qubo`].
#[derive(Debug, Clone)]
pub struct QuboRun {
    pub embedding: Embedding,
    pub initial_counts: SampleCounts,
    pub final_counts: SampleCounts,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Best-so-far sampled loss of the search.
    pub trace: Vec<f64>,
    pub model: QuantumModel,
}

/// Embeds `problem`, builds the analog ansatz and tunes it with the
/// gradient-free search on sampled costs. Every sample uses a fresh seed
/// drawn from `cfg.seed`.
pub fn solve_qubo(problem: &QuboProblem, cfg: &TrainConfig) -> Result<QuboRun> {
    tune_qubo(problem, embed_qubo(problem.matrix(), DEFAULT_C6, cfg.seed)?, cfg)
}

/// [`solve_qubo`] on a given layout.
pub fn tune_qubo(problem: &QuboProblem, embedding: Embedding, cfg: &TrainConfig) -> Result<QuboRun> {
    let mut model = qaoa_model(embedding.register.clone(), problem.n_layers, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let initial_counts = model.sample(&Values::new(), problem.n_shots, rng.random())?;
    let initial_cost = problem.counts_cost(&initial_counts)?;
    let trace = train_gradient_free(&mut model, |m, r| qubo_loss(m, problem, r.random()), cfg)?;
    let final_counts = model.sample(&Values::new(), problem.n_shots, rng.random())?;
    let final_cost = problem.counts_cost(&final_counts)?;
    Ok(QuboRun { embedding, initial_counts, final_counts, initial_cost, final_cost, trace, model })
}
