//! Digital-analog layer: analog rotations lowered onto the Rydberg
//! Hamiltonian, the stepwise Ising-to-Ising transform and the digital-analog
//! QFT.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::blockir::{build_qft, chain, h, hamevo, kron, rz, x, Block};
use crate::error::{Error, Result};
use crate::hamiltonian::{rydberg_hamiltonian, RydbergParams};
use crate::pauli::{IsingTerms, PauliSum};
use crate::register::Register;
use crate::symexpr::{Expr, Values};

/// Rabi frequency used by `AnalogRX`/`AnalogRY` when none is configured, rad/µs.
pub const DEFAULT_OMEGA: f64 = PI;
/// Detuning used by `AnalogRZ` when none is configured, rad/µs.
pub const DEFAULT_DELTA: f64 = PI;

const MAX_TRANSFORM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Digital,
    /// Stepwise: interactions are off while single-qubit gates run.
    Sdaqc,
    /// Banged: the interaction is always on.
    Bdaqc,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "digital" => Ok(Self::Digital),
            "sdaqc" => Ok(Self::Sdaqc),
            "bdaqc" => Ok(Self::Bdaqc),
            other => Err(Error::InvalidArgument(format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Digital => "digital",
            Strategy::Sdaqc => "sdaqc",
            Strategy::Bdaqc => "bdaqc",
        })
    }
}

/// Global pulses acting on every atom of a register.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalogOp {
    RX { angle: Expr },
    RY { angle: Expr },
    RZ { angle: Expr },
    Rot { omega: Expr, delta: Expr, phase: Expr, duration: Expr },
    Interaction { duration: Expr },
}

impl AnalogOp {
    pub fn rx(angle: impl Into<Expr>) -> Self {
        AnalogOp::RX { angle: angle.into() }
    }

    pub fn ry(angle: impl Into<Expr>) -> Self {
        AnalogOp::RY { angle: angle.into() }
    }

    pub fn rz(angle: impl Into<Expr>) -> Self {
        AnalogOp::RZ { angle: angle.into() }
    }

    pub fn interaction(duration: impl Into<Expr>) -> Self {
        AnalogOp::Interaction { duration: duration.into() }
    }
}

fn or_default(e: &Expr, fallback: f64) -> Expr {
    if e.as_constant() == Some(0.0) {
        Expr::constant(fallback)
    } else {
        e.clone()
    }
}

/// Lowers a global pulse to `HamEvo(H_rydberg, duration)` on `register`.
///
/// `p.omega` and `p.delta` set the drive and detuning used by the rotations
/// (falling back to [`DEFAULT_OMEGA`] and [`DEFAULT_DELTA`] when zero); the
/// rotation angle fixes the duration. `RX`: `φ = 0`; `RY`: `φ = −π/2`, which
/// drives `+(Ω/2) Σ Y`; `RZ`: `Ω = 0`, `δ t = θ`, equal to `RZ(θ)` on every
/// qubit up to a global phase. The `C6 / r⁶` interaction is always present.
pub fn lower_analog(op: &AnalogOp, register: &Register, p: &RydbergParams, strategy: Strategy) -> Result<Block> {
    if strategy != Strategy::Bdaqc {
        return Err(Error::UnsupportedStrategy(format!("{strategy} for analog pulses")));
    }
    let with = |omega: Expr, delta: Expr, phi: Expr, duration: Expr| -> Result<Block> {
        let q = RydbergParams { omega, delta, phi, c6: p.c6, duration: duration.clone() };
        hamevo(rydberg_hamiltonian(register, &q)?, duration)
    };
    let zero = Expr::zero;
    match op {
        AnalogOp::RX { angle } => {
            let omega = or_default(&p.omega, DEFAULT_OMEGA);
            with(omega.clone(), zero(), zero(), angle / omega)
        }
        AnalogOp::RY { angle } => {
            let omega = or_default(&p.omega, DEFAULT_OMEGA);
            with(omega.clone(), zero(), Expr::constant(-PI / 2.0), angle / omega)
        }
        AnalogOp::RZ { angle } => {
            let delta = or_default(&p.delta, DEFAULT_DELTA);
            with(zero(), delta.clone(), zero(), angle / delta)
        }
        AnalogOp::Rot { omega, delta, phase, duration } => {
            with(omega.clone(), delta.clone(), phase.clone(), duration.clone())
        }
        AnalogOp::Interaction { duration } => with(zero(), zero(), zero(), duration.clone()),
    }
}

/// A block whose unitary equals the intended one up to `exp(i global_phase)`:
/// `exp(i global_phase) U_block = U_intended`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedBlock {
    pub block: Block,
    pub global_phase: f64,
}

/// Output of [`daqc_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct DaqcTransform {
    pub block: Block,
    pub global_phase: f64,
    /// Build-evolution time of each segment, keyed by its X-conjugated qubits.
    pub times: Vec<(Vec<usize>, f64)>,
}

fn ising_of(block: &Block, n_qubits: usize) -> Result<IsingTerms> {
    let op = PauliSum::from_block(block, &mut |e| e.evaluate(&Values::new())).map_err(|e| match e {
        Error::InvalidBlock(m) => Error::NonIsingGenerator(m),
        other => other,
    })?;
    op.ising_terms(n_qubits, 1e-12)
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// Sign of `Z_i Z_j` after conjugation by `X` on every qubit of `flip`.
fn pair_sign(flip: &[usize], i: usize, j: usize) -> f64 {
    let k = flip.iter().filter(|&&q| q == i || q == j).count();
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Rewrites `exp(−i t_f H_target)` using only evolutions of `H_build`,
/// X conjugations and single-qubit `RZ` gates. Both Hamiltonians must be
/// Ising (`I`, `Z`, `ZZ`; `N` terms expand into these) with numeric
/// coefficients.
///
/// When the target couplings are a uniform multiple `c` of the build
/// couplings, one evolution of duration `c t_f` suffices. Otherwise each
/// pair `(α, β)` gets a segment `X_α X_β · exp(−i t_αβ H_build) · X_α X_β`
/// and the times solve `M t = t_f g / h` with
/// `M_(ij),(αβ) = (−1)^(δ_iα + δ_iβ + δ_jα + δ_jβ)`. If `M` is singular
/// (as for four qubits) the system is widened with unconjugated and
/// single-flip segments and solved in the minimum-norm sense. Negative
/// times are kept as is.
pub fn daqc_transform(
    n_qubits: usize,
    gen_target: &Block,
    t_f: f64,
    gen_build: &Block,
    strategy: Strategy,
) -> Result<DaqcTransform> {
    if strategy != Strategy::Sdaqc {
        return Err(Error::UnsupportedStrategy(format!("{strategy} for the Ising transform")));
    }
    let target = ising_of(gen_target, n_qubits)?;
    let build = ising_of(gen_build, n_qubits)?;
    let g = |p: &(usize, usize)| target.pairs.get(p).copied().unwrap_or(0.0);
    let hb = |p: &(usize, usize)| build.pairs.get(p).copied().unwrap_or(0.0);
    let tol = 1e-12;

    for (p, v) in &target.pairs {
        if v.abs() > tol && hb(p).abs() <= tol {
            return Err(Error::SingularTransform(format!("build has no coupling on pair {p:?}")));
        }
    }
    let build_pairs: Vec<(usize, usize)> = pairs(n_qubits).into_iter().filter(|p| hb(p).abs() > tol).collect();
    let target_active = target.pairs.values().any(|v| v.abs() > tol);

    let segments: Vec<(Vec<usize>, f64)> = if !target_active {
        vec![]
    } else if let Some(c) = uniform_ratio(&build_pairs, g, hb) {
        vec![(vec![], c * t_f)]
    } else {
        solve_times(n_qubits, &build_pairs, t_f, g, hb)?
    };

    let mut blocks = Vec::new();
    let mut total_time = 0.0;
    let mut local_phase = vec![0.0; n_qubits];
    for (flip, t) in &segments {
        total_time += t;
        for (q, acc) in local_phase.iter_mut().enumerate() {
            let sign = if flip.contains(&q) { -1.0 } else { 1.0 };
            *acc += t * sign * build.local[q];
        }
        let evo = hamevo(gen_build.clone(), *t)?;
        if flip.is_empty() {
            blocks.push(evo);
        } else {
            let xs = || kron(flip.iter().map(|&q| x(q)));
            blocks.push(chain([xs()?, evo, xs()?])?);
        }
    }
    let corrections: Vec<Block> = (0..n_qubits)
        .filter_map(|q| {
            let theta = 2.0 * (t_f * target.local[q] - local_phase[q]);
            (theta.abs() > 1e-14).then(|| rz(q, theta))
        })
        .collect();
    if !corrections.is_empty() {
        blocks.push(kron(corrections)?);
    }
    if blocks.is_empty() {
        blocks.push(crate::blockir::id(0));
    }
    let global_phase = -t_f * target.constant + build.constant * total_time;
    Ok(DaqcTransform { block: chain(blocks)?.tagged("daqc_transform"), global_phase, times: segments })
}

fn uniform_ratio(
    build_pairs: &[(usize, usize)],
    g: impl Fn(&(usize, usize)) -> f64,
    h: impl Fn(&(usize, usize)) -> f64,
) -> Option<f64> {
    let first = build_pairs.first()?;
    let c = g(first) / h(first);
    build_pairs.iter().all(|p| (g(p) - c * h(p)).abs() <= 1e-12 * (1.0 + g(p).abs())).then_some(c)
}

fn solve_times(
    n: usize,
    build_pairs: &[(usize, usize)],
    t_f: f64,
    g: impl Fn(&(usize, usize)) -> f64,
    h: impl Fn(&(usize, usize)) -> f64,
) -> Result<Vec<(Vec<usize>, f64)>> {
    let rhs = DVector::from_iterator(build_pairs.len(), build_pairs.iter().map(|p| t_f * g(p) / h(p)));
    let pair_columns: Vec<Vec<usize>> = pairs(n).into_iter().map(|(a, b)| vec![a, b]).collect();
    let matrix = |cols: &[Vec<usize>]| {
        DMatrix::from_fn(build_pairs.len(), cols.len(), |r, c| {
            let (i, j) = build_pairs[r];
            pair_sign(&cols[c], i, j)
        })
    };

    let square = matrix(&pair_columns);
    if square.is_square() {
        let sv = square.singular_values();
        if sv.min() > 0.0 && sv.max() / sv.min() <= MAX_TRANSFORM_CONDITION {
            if let Some(t) = square.clone().lu().solve(&rhs) {
                return Ok(nonzero(pair_columns, t.iter().copied()));
            }
        }
    }

    let mut cols = vec![vec![]];
    cols.extend((0..n).map(|q| vec![q]));
    cols.extend(pair_columns);
    let wide = matrix(&cols);
    let svd = wide.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let t = svd
        .solve(&rhs, smax * 1e-12)
        .map_err(|e| Error::SingularTransform(e.to_string()))?;
    let residual = (&wide * &t - &rhs).amax();
    if residual > 1e-9 * (1.0 + rhs.amax()) {
        return Err(Error::SingularTransform(format!("least-squares residual {residual:e}")));
    }
    Ok(nonzero(cols, t.iter().copied()))
}

fn nonzero(cols: Vec<Vec<usize>>, times: impl Iterator<Item = f64>) -> Vec<(Vec<usize>, f64)> {
    cols.into_iter().zip(times).filter(|(_, t)| t.abs() > 1e-14).collect()
}

/// QFT on qubits `0..n`. `Sdaqc` keeps the Hadamards digital and replaces
/// each layer of controlled phases, `exp(i Σ_j α_j n_j n_l)`, by a
/// [`daqc_transform`] of `−Σ_j α_j n_j n_l` over unit time.
pub fn build_da_qft(n_qubits: usize, strategy: Strategy, gen_build: Option<&Block>) -> Result<PhasedBlock> {
    let support: Vec<usize> = (0..n_qubits).collect();
    match strategy {
        Strategy::Digital => Ok(PhasedBlock { block: build_qft(&support)?, global_phase: 0.0 }),
        Strategy::Bdaqc => Err(Error::UnsupportedStrategy("bdaqc for the QFT".into())),
        Strategy::Sdaqc => {
            let build = gen_build.ok_or_else(|| Error::InvalidArgument("sdaqc QFT needs a build Hamiltonian".into()))?;
            let mut layers = Vec::new();
            let mut phase = 0.0;
            for l in 0..n_qubits {
                layers.push(h(l));
                let terms: Vec<Block> = ((l + 1)..n_qubits)
                    .map(|j| {
                        let alpha = PI / 2f64.powi((j - l) as i32);
                        crate::blockir::scale(-alpha, kron([crate::blockir::n(j), crate::blockir::n(l)]).unwrap())
                    })
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                let t = daqc_transform(n_qubits, &crate::blockir::add(terms)?, 1.0, build, Strategy::Sdaqc)?;
                phase += t.global_phase;
                layers.push(t.block);
            }
            let block = if layers.len() == 1 { layers.pop().unwrap() } else { chain(layers)? };
            Ok(PhasedBlock { block: block.tagged("qft"), global_phase: phase })
        }
    }
}

/// Pairwise couplings of an Ising generator, for reporting.
pub fn ising_couplings(block: &Block, n_qubits: usize) -> Result<BTreeMap<(usize, usize), f64>> {
    Ok(ising_of(block, n_qubits)?.pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockir::{add, n, scale, z};
    use crate::simulator::to_matrix;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    type M = DMatrix<Complex64>;

    fn m(b: &Block, nq: usize) -> M {
        to_matrix(b, nq, &Values::new()).unwrap()
    }

    /// `exp(−i t H)` of a diagonal Hermitian matrix.
    fn diag_exp(hm: &M, t: f64) -> M {
        M::from_diagonal(&hm.diagonal().map(|d| Complex64::from_polar(1.0, -t * d.re)))
    }

    fn phased_dev(u: &M, v: &M, phase: f64) -> f64 {
        let e = Complex64::from_polar(1.0, phase);
        (u * e - v).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn two_qubit_single_segment() {
        let target = scale(0.8, kron([z(0), z(1)]).unwrap());
        let build = scale(2.0, kron([z(0), z(1)]).unwrap());
        let t = daqc_transform(2, &target, 1.5, &build, Strategy::Sdaqc).unwrap();
        assert_eq!(t.times, vec![(vec![], 1.5 * 0.8 / 2.0)]);
        let exact = diag_exp(&m(&target, 2), 1.5);
        assert!(phased_dev(&m(&t.block, 2), &exact, t.global_phase) < 1e-12);
    }

    #[test]
    fn identity_mapping_uses_total_time_t_f() {
        let build = add([kron([z(0), z(1)]).unwrap(), scale(0.5, kron([z(1), z(2)]).unwrap())]).unwrap();
        let t = daqc_transform(3, &build, 2.5, &build, Strategy::Sdaqc).unwrap();
        let total: f64 = t.times.iter().map(|(_, t)| t.abs()).sum();
        assert!((total - 2.5).abs() < 1e-12);
    }

    #[test]
    fn nn_triangle_with_complete_build() {
        let target = add([
            kron([n(0), n(1)]).unwrap(),
            kron([n(1), n(2)]).unwrap(),
            kron([n(2), n(0)]).unwrap(),
        ])
        .unwrap();
        let build = add([
            scale(1.0, kron([z(0), z(1)]).unwrap()),
            scale(0.7, kron([z(0), z(2)]).unwrap()),
            scale(1.3, kron([z(1), z(2)]).unwrap()),
            scale(0.2, z(1)),
        ])
        .unwrap();
        let t = daqc_transform(3, &target, 5.0, &build, Strategy::Sdaqc).unwrap();
        let exact = diag_exp(&m(&target, 3), 5.0);
        assert!(phased_dev(&m(&t.block, 3), &exact, t.global_phase) < 1e-10);
    }

    #[test]
    fn errors() {
        let zz = |a, b| kron([z(a), z(b)]).unwrap();
        assert!(matches!(
            daqc_transform(3, &zz(0, 2), 1.0, &zz(0, 1), Strategy::Sdaqc),
            Err(Error::SingularTransform(_))
        ));
        assert!(matches!(
            daqc_transform(2, &zz(0, 1), 1.0, &zz(0, 1), Strategy::Bdaqc),
            Err(Error::UnsupportedStrategy(_))
        ));
        assert!(matches!(
            daqc_transform(2, &x(0), 1.0, &zz(0, 1), Strategy::Sdaqc),
            Err(Error::NonIsingGenerator(_))
        ));
    }

    #[test]
    fn negative_time_equals_negated_generator() {
        let hm = add([kron([z(0), z(1)]).unwrap(), scale(0.3, x(2))]).unwrap();
        let a = m(&hamevo(hm.clone(), -0.8).unwrap(), 3);
        let b = m(&hamevo(scale(-1.0, hm), 0.8).unwrap(), 3);
        assert!(phased_dev(&a, &b, 0.0) < 1e-12);
    }

    #[test]
    fn digital_da_qft_is_plain_qft() {
        let b = build_da_qft(3, Strategy::Digital, None).unwrap();
        assert_eq!(b.block, build_qft(&[0, 1, 2]).unwrap());
        let one = build_da_qft(1, Strategy::Sdaqc, Some(&z(0))).unwrap();
        assert_eq!(one.block, build_qft(&[0]).unwrap());
    }

    #[test]
    fn analog_rx_on_isolated_atom() {
        let reg = Register::line(1, 1.0).unwrap();
        let b = lower_analog(&AnalogOp::rx(PI), &reg, &RydbergParams::default(), Strategy::Bdaqc).unwrap();
        let u = m(&b, 1);
        assert!((u[(1, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(lower_analog(&AnalogOp::rx(PI), &reg, &RydbergParams::default(), Strategy::Sdaqc).is_err());
    }

    #[test]
    fn analog_interaction_phases() {
        let reg = Register::line(2, 7.0).unwrap();
        let p = RydbergParams::default();
        let u = m(&lower_analog(&AnalogOp::interaction(0.3), &reg, &p, Strategy::Bdaqc).unwrap(), 2);
        let phase = Complex64::from_polar(1.0, -0.3 * p.c6 / 7f64.powi(6));
        for k in 0..3 {
            assert!((u[(k, k)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!((u[(3, 3)] - phase).norm() < 1e-12);
    }

    #[test]
    fn analog_rotations_decouple_to_digital() {
        let reg = Register::line(3, 5.0).unwrap();
        let p = RydbergParams { c6: f64::MIN_POSITIVE, ..Default::default() };
        let theta = 0.83;
        let cases = [
            (AnalogOp::rx(theta), kron((0..3).map(|q| crate::blockir::rx(q, theta))).unwrap()),
            (AnalogOp::ry(theta), kron((0..3).map(|q| crate::blockir::ry(q, theta))).unwrap()),
            (AnalogOp::rz(theta), kron((0..3).map(|q| rz(q, theta))).unwrap()),
        ];
        for (op, digital) in cases {
            let u = m(&lower_analog(&op, &reg, &p, Strategy::Bdaqc).unwrap(), 3);
            let v = m(&digital, 3);
            let phase = (v[(0, 0)] / u[(0, 0)]).arg();
            assert!(phased_dev(&u, &v, phase) < 1e-10, "{op:?}");
        }
    }
}
