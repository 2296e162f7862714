use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use daqkit::blockir::{add, build_feature_map, build_hea, build_qft, kron, n, rx, z, FeatureMapKind};
use daqkit::daqc::{build_da_qft, daqc_transform, Strategy};
use daqkit::diffengine::{gradient, DiffMode};
use daqkit::hamiltonian::{hamiltonian_factory, total_magnetization, HamiltonianSpec, Interaction, Strength};
use daqkit::runtime::dqc::{
    laplace_model, laplace_solution, ode_model, ode_solution, train_laplace, train_ode,
};
use daqkit::hamiltonian::DEFAULT_C6;
use daqkit::runtime::qubo::five_node_qubo;
use daqkit::runtime::{solve_qubo, tune_qubo, Embedding, Optimizer, Predictor, QuantumModel, QuboProblem, TrainConfig};
use daqkit::simulator::{to_matrix, SampleCounts};
use daqkit::{values, Block, Expr, PauliSum, QuantumCircuit, Register, Values};

#[derive(Parser)]
#[command(name = "daqkit", version, about = "Digital-analog quantum program experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Seed for every random draw.
    #[arg(long)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Collocation points per epoch (per region for the Laplace problem).
    #[arg(long)]
    points: Option<usize>,
    /// gpsr, adjoint or fd.
    #[arg(long, default_value = "adjoint")]
    mode: String,
    /// Also write the loss trace (iter,loss) to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve df/dx = 4x³ + x² − 2x − 1/2, f(0) = 1, and report the solution on a grid.
    DqcOde {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Solve the Laplace equation on the unit square and report the solution on a grid.
    DqcLaplace {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 150)]
        grid: usize,
    },
    /// Embed the five-variable QUBO and tune the analog ansatz on sampled costs.
    Qubo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        /// Initial mutation scale of the evolution strategy.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Register JSON (`{"nodes": [[x, y], ...], "edges": [[i, j], ...]}`) used instead of embedding.
        #[arg(long)]
        register: Option<PathBuf>,
    },
    /// Compare the QFT against the DFT matrix and the digital-analog QFT against the QFT.
    QftCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        qubits: usize,
    },
    /// Rewrite N0N1 + N1N2 + N2N0 over t = 5 with a 9-atom lattice Hamiltonian and check the unitary.
    DaqcCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5.0)]
        time: f64,
    },
    /// Gradients of <Σ Z> after RX(i, (i+1) acos x) in every differentiation mode.
    DiffCheck {
        #[command(flatten)]
        common: Common,
        /// Number of random feature values.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Print the block tree of a constructor.
    Dump {
        #[command(flatten)]
        common: Common,
        /// qft, da-qft, hea, feature-map or dqc.
        #[arg(long, default_value = "qft")]
        circuit: String,
        #[arg(long, default_value_t = 3)]
        qubits: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Print the final state (index,re,im) instead of the tree. Trainable
        /// parameters take their seeded initial values.
        #[arg(long)]
        state: bool,
        /// Value given to every feature when running with `--state`.
        #[arg(long, default_value_t = 0.0)]
        feature: f64,
    },
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => write_file(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn to_json(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("iter,loss\n");
    for (k, l) in trace.iter().enumerate() {
        s += &format!("{k},{l}\n");
    }
    s
}

fn train_config(t: &TrainArgs, seed: u64) -> Result<TrainConfig> {
    Ok(TrainConfig::new(t.epochs, t.lr, Optimizer::Adam, seed)?)
}

#[derive(Serialize)]
struct GridPoint {
    x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    prediction: f64,
    exact: f64,
}

#[derive(Serialize)]
struct Solution {
    trace: Vec<f64>,
    grid: Vec<GridPoint>,
    mse: f64,
    max_abs: f64,
}

fn report_solution(common: &Common, train: &TrainArgs, trace: Vec<f64>, grid: Vec<GridPoint>) -> Result<()> {
    let errs: Vec<f64> = grid.iter().map(|p| p.prediction - p.exact).collect();
    let mse = errs.iter().map(|e| e * e).sum::<f64>() / errs.len().max(1) as f64;
    let max_abs = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    eprintln!("final loss {:.4e}, grid MSE {mse:.4e}, max-abs error {max_abs:.4e}", trace.last().copied().unwrap_or(f64::NAN));
    if let Some(path) = &train.trace {
        write_file(path, &trace_csv(&trace))?;
    }
    match common.format {
        Format::Json => emit(common, &to_json(&Solution { trace, grid, mse, max_abs })?),
        Format::Csv => {
            let two_d = grid.first().is_some_and(|p| p.y.is_some());
            let mut s = String::from(if two_d { "x,y,prediction,exact\n" } else { "x,prediction,exact\n" });
            for p in &grid {
                match p.y {
                    Some(y) => s += &format!("{},{},{},{}\n", p.x, y, p.prediction, p.exact),
                    None => s += &format!("{},{},{}\n", p.x, p.prediction, p.exact),
                }
            }
            emit(common, &s)
        }
    }
}

fn dqc_ode(common: &Common, train: &TrainArgs, grid: usize) -> Result<()> {
    let mut m = ode_model(train.mode.parse()?, common.seed)?;
    let trace = train_ode(&mut m, train.points.unwrap_or(20), &train_config(train, common.seed)?)?;
    let points = (0..grid)
        .map(|k| {
            let x = -0.99 + 1.98 * k as f64 / (grid.max(2) - 1) as f64;
            Ok(GridPoint { x, y: None, prediction: m.predict(&values([("x", x)]))?, exact: ode_solution(x) })
        })
        .collect::<Result<_>>()?;
    report_solution(common, train, trace, points)
}

fn dqc_laplace(common: &Common, train: &TrainArgs, grid: usize) -> Result<()> {
    let mut m = laplace_model(train.mode.parse()?, common.seed)?;
    let trace = train_laplace(&mut m, train.points.unwrap_or(100), &train_config(train, common.seed)?)?;
    let step = 1.0 / (grid.max(2) - 1) as f64;
    let mut points = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let (x, y) = (i as f64 * step, j as f64 * step);
            let prediction = m.predict(&values([("x", x), ("y", y)]))?;
            points.push(GridPoint { x, y: Some(y), prediction, exact: laplace_solution(x, y) });
        }
    }
    report_solution(common, train, trace, points)
}

#[derive(Serialize)]
struct QuboReport {
    optimal_bitstrings: Vec<String>,
    optimal_cost: f64,
    register: serde_json::Value,
    embedding_relative_residual: f64,
    initial_cost: f64,
    final_cost: f64,
    initial_counts: SampleCounts,
    final_counts: SampleCounts,
    trace: Vec<f64>,
    parameters: BTreeMap<String, f64>,
}

fn qubo(common: &Common, shots: usize, layers: usize, iters: usize, step: f64, register: Option<&Path>) -> Result<()> {
    let problem = QuboProblem::new(five_node_qubo(), shots, layers)?;
    let cfg = TrainConfig::new(iters, step, Optimizer::GradientFreeSearch, common.seed)?;
    let run = match register {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let embedding = Embedding::of(Register::from_json(&text)?, problem.matrix(), DEFAULT_C6)?;
            tune_qubo(&problem, embedding, &cfg)?
        }
        None => solve_qubo(&problem, &cfg)?,
    };
    if let Err(e) = run.embedding.check(1e-3) {
        eprintln!("warning: {e}");
    }
    let (optimal_cost, optimal_bitstrings) = problem.brute_force();
    eprintln!("sampled cost {:.4} -> {:.4}", run.initial_cost, run.final_cost);
    match common.format {
        Format::Json => emit(
            common,
            &to_json(&QuboReport {
                optimal_bitstrings,
                optimal_cost,
                register: serde_json::from_str(&run.embedding.register.to_json())?,
                embedding_relative_residual: run.embedding.relative_residual,
                initial_cost: run.initial_cost,
                final_cost: run.final_cost,
                parameters: run.model.var_params().clone(),
                initial_counts: run.initial_counts,
                final_counts: run.final_counts,
                trace: run.trace,
            })?,
        ),
        Format::Csv => {
            let mut keys: Vec<&String> = run.initial_counts.keys().chain(run.final_counts.keys()).collect();
            keys.sort();
            keys.dedup();
            let mut s = String::from("bitstring,cost,initial,final\n");
            for k in keys {
                let get = |c: &SampleCounts| c.get(k).copied().unwrap_or(0);
                s += &format!("{k},{},{},{}\n", problem.cost(k)?, get(&run.initial_counts), get(&run.final_counts));
            }
            emit(common, &s)
        }
    }
}

type Unitary = DMatrix<Complex64>;

/// Bit-reversed DFT matrix, `ω = e^{+2πi/N}`.
fn dft_bit_reversed(nq: usize) -> Unitary {
    let dim = 1usize << nq;
    let norm = 1.0 / (dim as f64).sqrt();
    let rev = |k: usize| (0..nq).fold(0, |acc, q| acc | (((k >> (nq - 1 - q)) & 1) << q));
    Unitary::from_fn(dim, dim, |r, j| {
        Complex64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * rev(r)) as f64 / dim as f64)
    })
}

/// Largest entry of `|e^{iφ} u − v|`.
fn distance(u: &Unitary, phase: f64, v: &Unitary) -> f64 {
    let p = Complex64::from_polar(1.0, phase);
    u.iter().zip(v.iter()).map(|(a, b)| (a * p - b).norm()).fold(0.0, f64::max)
}

#[derive(Serialize)]
struct Check {
    name: String,
    deviation: f64,
    tolerance: f64,
    pass: bool,
}

fn emit_checks(common: &Common, checks: &[Check]) -> Result<()> {
    match common.format {
        Format::Json => emit(common, &to_json(&checks)?),
        Format::Csv => {
            let mut s = String::from("check,deviation,tolerance,pass\n");
            for c in checks {
                s += &format!("{},{:e},{:e},{}\n", c.name, c.deviation, c.tolerance, c.pass);
            }
            emit(common, &s)
        }
    }
}

fn check(name: impl Into<String>, deviation: f64, tolerance: f64) -> Check {
    Check { name: name.into(), deviation, tolerance, pass: deviation <= tolerance }
}

fn qft_check(common: &Common, qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > 8 {
        bail!("--qubits must be in 1..=8");
    }
    let support: Vec<usize> = (0..qubits).collect();
    let qft = to_matrix(&build_qft(&support)?, qubits, &Values::new())?;
    let dft = dft_bit_reversed(qubits);
    let dev = distance(&qft, 0.0, &dft);
    let build = complete_zz(qubits);
    let da = build_da_qft(qubits, Strategy::Sdaqc, Some(&build))?;
    let da_dev = distance(&to_matrix(&da.block, qubits, &Values::new())?, da.global_phase, &qft);
    emit_checks(common, &[check("qft_vs_bit_reversed_dft", dev, 1e-10), check("sdaqc_qft_vs_digital", da_dev, 1e-7)])
}

fn complete_zz(nq: usize) -> Block {
    let mut terms = Vec::new();
    for i in 0..nq {
        for j in (i + 1)..nq {
            terms.push(kron([z(i), z(j)]).expect("distinct qubits"));
        }
    }
    if terms.is_empty() {
        return z(0);
    }
    add(terms).expect("non-empty")
}

fn daqc_check(common: &Common, time: f64) -> Result<()> {
    let reg = Register::triangular_lattice(2, 2, 2.0)?;
    let nq = reg.n_qubits();
    let strengths: Vec<Expr> = reg.distances().values().map(|d| Expr::constant(1.0 / d)).collect();
    let build = hamiltonian_factory(
        &HamiltonianSpec::new(reg, Interaction::NN).interaction_strength(Strength::PerItem(strengths)).all_node_pairs(true),
    )?;
    let target = add([kron([n(0), n(1)])?, kron([n(1), n(2)])?, kron([n(2), n(0)])?])?;
    let t = daqc_transform(nq, &target, time, &build, Strategy::Sdaqc)?;
    let energies = PauliSum::from_block(&target, &mut |e| e.evaluate(&Values::new()))?
        .diagonal(nq)
        .context("target is diagonal")?;
    let u = to_matrix(&t.block, nq, &Values::new())?;
    let dim = 1usize << nq;
    let exact = Unitary::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, -time * energies[r])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let err = distance(&u, t.global_phase, &exact);
    eprintln!("{} build evolutions, total |t| = {:.4}", t.times.len(), t.times.iter().map(|(_, s)| s.abs()).sum::<f64>());
    match common.format {
        Format::Json => {
            let times: Vec<_> = t.times.iter().map(|(flips, s)| serde_json::json!({ "flips": flips, "time": s })).collect();
            emit(
                common,
                &to_json(&serde_json::json!({
                    "target": target.to_string(),
                    "build": build.to_string(),
                    "final_time": time,
                    "global_phase": t.global_phase,
                    "times": times,
                    "max_unitary_error": err,
                }))?,
            )
        }
        Format::Csv => emit_checks(common, &[check("lattice_transform_vs_exact", err, 1e-8)]),
    }
}

#[derive(Serialize)]
struct DiffRow {
    x: f64,
    gpsr: f64,
    adjoint: f64,
    fd: f64,
    max_deviation: f64,
}

fn diff_check(common: &Common, samples: usize) -> Result<()> {
    let body = kron((0..4).map(|i| rx(i, Expr::constant((i + 1) as f64) * Expr::feature("x").acos())))?;
    let circuit = QuantumCircuit::with_qubits(4, body)?;
    let obs = total_magnetization(4);
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = rng.random_range(-0.95..0.95);
        let v = values([("x", x)]);
        let g = |mode| -> Result<f64> { Ok(gradient(&circuit, &obs, &v, &["x"], mode)?[0]) };
        let (gpsr, adjoint, fd) = (g(DiffMode::Gpsr)?, g(DiffMode::Adjoint)?, g(DiffMode::FiniteDiff)?);
        let max_deviation = (gpsr - adjoint).abs().max((gpsr - fd).abs()).max((adjoint - fd).abs());
        rows.push(DiffRow { x, gpsr, adjoint, fd, max_deviation });
    }
    let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.max_deviation));
    eprintln!("max pairwise deviation {worst:.3e}");
    match common.format {
        Format::Json => emit(common, &to_json(&serde_json::json!({ "rows": rows, "max_deviation": worst }))?),
        Format::Csv => {
            let mut s = String::from("x,gpsr,adjoint,fd,max_deviation\n");
            for r in &rows {
                s += &format!("{},{},{},{},{:e}\n", r.x, r.gpsr, r.adjoint, r.fd, r.max_deviation);
            }
            emit(common, &s)
        }
    }
}

fn dump_block(common: &Common, circuit: &str, qubits: usize, depth: usize) -> Result<Block> {
    let support: Vec<usize> = (0..qubits).collect();
    Ok(match circuit {
        "qft" => build_qft(&support)?,
        "da-qft" => build_da_qft(qubits, Strategy::Sdaqc, Some(&complete_zz(qubits)))?.block,
        "hea" => build_hea(qubits, depth)?,
        "feature-map" => build_feature_map(qubits, "x", FeatureMapKind::Chebyshev, None)?,
        "dqc" => {
            let m: QuantumModel = ode_model(DiffMode::Adjoint, common.seed)?;
            m.circuit().block().clone()
        }
        other => bail!("unknown circuit `{other}`"),
    })
}

fn dump_state(common: &Common, block: Block, feature: f64) -> Result<()> {
    let nq = block.qubit_support().iter().max().map_or(1, |q| q + 1);
    let features: Values = block.feature_names()?.into_iter().map(|f| (f, feature)).collect();
    let model = QuantumModel::new(QuantumCircuit::with_qubits(nq, block)?, vec![], DiffMode::Adjoint, common.seed)?;
    let psi = model.run(&features)?;
    match common.format {
        Format::Json => {
            let amps: Vec<[f64; 2]> = psi.amplitudes().iter().map(|a| [a.re, a.im]).collect();
            emit(common, &to_json(&serde_json::json!({ "n_qubits": nq, "amplitudes": amps }))?)
        }
        Format::Csv => {
            let mut s = String::from("index,re,im\n");
            for (k, a) in psi.amplitudes().iter().enumerate() {
                s += &format!("{k},{},{}\n", a.re, a.im);
            }
            emit(common, &s)
        }
    }
}

fn dump(common: &Common, circuit: &str, block: &Block) -> Result<()> {
    match common.format {
        Format::Json => emit(
            common,
            &to_json(&serde_json::json!({
                "circuit": circuit,
                "qubits": block.qubit_support(),
                "parameters": block.variational_names()?,
                "features": block.feature_names()?,
                "tree": block.tree(),
            }))?,
        ),
        Format::Csv => emit(common, &format!("{}\n", block.tree())),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::DqcOde { common, train, grid } => dqc_ode(common, train, *grid),
        Command::DqcLaplace { common, train, grid } => dqc_laplace(common, train, *grid),
        Command::Qubo { common, shots, layers, iters, step, register } => {
            qubo(common, *shots, *layers, *iters, *step, register.as_deref())
        }
        Command::QftCheck { common, qubits } => qft_check(common, *qubits),
        Command::DaqcCheck { common, time } => daqc_check(common, *time),
        Command::DiffCheck { common, samples } => diff_check(common, *samples),
        Command::Dump { common, circuit, qubits, depth, state, feature } => {
            let block = dump_block(common, circuit, *qubits, *depth)?;
            if *state {
                dump_state(common, block, *feature)
            } else {
                dump(common, circuit, &block)
            }
        }
    }
}
