//! Differentiable-circuit solvers: the model output is the trial function
//! and its feature derivatives enter the loss.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::model::{Predictor, QuantumModel};
use super::train::{train_adam, TrainConfig};
use crate::blockir::{build_feature_map, build_hea, chain, parallel_feature_maps, FeatureMapKind, QuantumCircuit};
use crate::diffengine::DiffMode;
use crate::error::{Error, Result};
use crate::hamiltonian::ising;
use crate::symexpr::{values, Values};

pub const DQC_QUBITS: usize = 4;
pub const DQC_DEPTH: usize = 3;

/// Right-hand side of `df/dx = 4x³ + x² − 2x − 1/2`.
pub fn ode_source(x: f64) -> f64 {
    4.0 * x.powi(3) + x * x - 2.0 * x - 0.5
}

/// Solution of the ODE with `f(0) = 1`.
pub fn ode_solution(x: f64) -> f64 {
    x.powi(4) + x.powi(3) / 3.0 - x * x - x / 2.0 + 1.0
}

/// Collocation points uniform in `(−0.99, 0.99)`.
pub fn sample_ode_points(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.99..0.99)).collect()
}

/// Chebyshev feature map on `x`, hardware-efficient ansatz, Ising observable.
pub fn ode_model(diff_mode: DiffMode, seed: u64) -> Result<QuantumModel> {
    let fm = build_feature_map(DQC_QUBITS, "x", FeatureMapKind::Chebyshev, None)?;
    let circuit = QuantumCircuit::with_qubits(DQC_QUBITS, chain([fm, build_hea(DQC_QUBITS, DQC_DEPTH)?])?)?;
    QuantumModel::new(circuit, vec![ising(DQC_QUBITS)], diff_mode, seed)
}

fn check_open_interval(points: &[f64]) -> Result<()> {
    match points.iter().find(|x| x.abs() >= 1.0 || x.is_nan()) {
        Some(x) => Err(Error::DomainError(format!("collocation point {x} outside (-1, 1)"))),
        None => Ok(()),
    }
}

/// `mean[(f'(x) − source(x))²] + (f(0) − 1)²`.
pub fn dqc_ode_loss<P: Predictor + Sync>(p: &P, points: &[f64]) -> Result<f64> {
    check_open_interval(points)?;
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|&x| Ok(p.derivative(&values([("x", x)]), "x")? - ode_source(x)))
        .collect::<Result<_>>()?;
    let boundary = p.predict(&values([("x", 0.0)]))? - 1.0;
    Ok(mean_square(&residuals) + boundary * boundary)
}

/// [`dqc_ode_loss`] and its gradient over the model parameters.
pub fn dqc_ode_loss_and_grad(m: &QuantumModel, points: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_open_interval(points)?;
    let mut acc = Accumulator::new(m.parameter_names().len());
    let parts: Vec<(f64, Vec<f64>)> = points
        .par_iter()
        .map(|&x| {
            let (d, g) = m.feature_derivative(&values([("x", x)]), "x", 1)?;
            Ok((d - ode_source(x), g))
        })
        .collect::<Result<_>>()?;
    acc.add_mean_square(&parts);
    let (f0, g0) = m.value_and_gradient(&values([("x", 0.0)]))?;
    acc.add_mean_square(&[(f0 - 1.0, g0)]);
    Ok(acc.finish())
}

/// Adam on [`dqc_ode_loss`] with `n_points` fresh collocation points per epoch.
pub fn train_ode(m: &mut QuantumModel, n_points: usize, cfg: &TrainConfig) -> Result<Vec<f64>> {
    train_adam(
        m,
        |m, rng| {
            let pts = sample_ode_points(n_points, rng);
            dqc_ode_loss_and_grad(m, &pts)
        },
        cfg,
    )
}

/// Harmonic reference `u(x, y) = e^{−πx} sin(πy)`.
pub fn laplace_solution(x: f64, y: f64) -> f64 {
    (-PI * x).exp() * (PI * y).sin()
}

/// Parallel Fourier feature maps (`x` on the first half of the qubits, `y`
/// on the second), hardware-efficient ansatz, Ising observable.
pub fn laplace_model(diff_mode: DiffMode, seed: u64) -> Result<QuantumModel> {
    let fm = parallel_feature_maps(DQC_QUBITS, &["x", "y"], FeatureMapKind::Fourier)?;
    let circuit = QuantumCircuit::with_qubits(DQC_QUBITS, chain([fm, build_hea(DQC_QUBITS, DQC_DEPTH)?])?)?;
    QuantumModel::new(circuit, vec![ising(DQC_QUBITS)], diff_mode, seed)
}

/// Collocation points per region of the unit square. Boundary entries hold
/// the free coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSamples {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
    pub interior: Vec<(f64, f64)>,
}

impl LaplaceSamples {
    pub fn draw(n: usize, rng: &mut impl Rng) -> Self {
        let line = |rng: &mut _| -> Vec<f64> { (0..n).map(|_| Rng::random::<f64>(rng)).collect() };
        let left = line(rng);
        let right = line(rng);
        let top = line(rng);
        let bottom = line(rng);
        let interior = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        Self { left, right, top, bottom, interior }
    }

    /// `(x, y, target)` for each boundary point.
    fn boundary(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        out.extend(self.left.iter().map(|&y| (0.0, y, (PI * y).sin())));
        out.extend(self.right.iter().map(|&y| (1.0, y, 0.0)));
        out.extend(self.top.iter().map(|&x| (x, 1.0, 0.0)));
        out.extend(self.bottom.iter().map(|&x| (x, 0.0, 0.0)));
        out
    }

    fn regions(&self) -> [std::ops::Range<usize>; 4] {
        let a = self.left.len();
        let b = a + self.right.len();
        let c = b + self.top.len();
        let d = c + self.bottom.len();
        [0..a, a..b, b..c, c..d]
    }
}

/// Mean-squared residual of each region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceTerms {
    /// `u(0, y) − sin(πy)`.
    pub left: f64,
    /// `u(1, y)`.
    pub right: f64,
    /// `u(x, 1)`.
    pub top: f64,
    /// `u(x, 0)`.
    pub bottom: f64,
    /// `u_xx + u_yy`.
    pub interior: f64,
}

impl LaplaceTerms {
    pub fn total(&self) -> f64 {
        self.left + self.right + self.top + self.bottom + self.interior
    }
}

fn xy(x: f64, y: f64) -> Values {
    values([("x", x), ("y", y)])
}

pub fn laplace_terms<P: Predictor + Sync>(p: &P, s: &LaplaceSamples) -> Result<LaplaceTerms> {
    let boundary: Vec<f64> = s
        .boundary()
        .par_iter()
        .map(|&(x, y, t)| Ok(p.predict(&xy(x, y))? - t))
        .collect::<Result<_>>()?;
    let interior: Vec<f64> = s
        .interior
        .par_iter()
        .map(|&(x, y)| {
            let v = xy(x, y);
            Ok(p.second_derivative(&v, "x")? + p.second_derivative(&v, "y")?)
        })
        .collect::<Result<_>>()?;
    let [l, r, t, b] = s.regions();
    Ok(LaplaceTerms {
        left: mean_square(&boundary[l]),
        right: mean_square(&boundary[r]),
        top: mean_square(&boundary[t]),
        bottom: mean_square(&boundary[b]),
        interior: mean_square(&interior),
    })
}

/// Sum of the five [`LaplaceTerms`].
pub fn dqc_laplace_loss<P: Predictor + Sync>(p: &P, s: &LaplaceSamples) -> Result<f64> {
    Ok(laplace_terms(p, s)?.total())
}

/// [`dqc_laplace_loss`] and its gradient over the model parameters.
pub fn dqc_laplace_loss_and_grad(m: &QuantumModel, s: &LaplaceSamples) -> Result<(f64, Vec<f64>)> {
    let boundary: Vec<(f64, Vec<f64>)> = s
        .boundary()
        .par_iter()
        .map(|&(x, y, t)| {
            let (f, g) = m.value_and_gradient(&xy(x, y))?;
            Ok((f - t, g))
        })
        .collect::<Result<_>>()?;
    let interior: Vec<(f64, Vec<f64>)> = s
        .interior
        .par_iter()
        .map(|&(x, y)| {
            let v = xy(x, y);
            let (dxx, gx) = m.feature_derivative(&v, "x", 2)?;
            let (dyy, gy) = m.feature_derivative(&v, "y", 2)?;
            Ok((dxx + dyy, gx.iter().zip(&gy).map(|(a, b)| a + b).collect()))
        })
        .collect::<Result<_>>()?;
    let mut acc = Accumulator::new(m.parameter_names().len());
    for r in s.regions() {
        acc.add_mean_square(&boundary[r]);
    }
    acc.add_mean_square(&interior);
    Ok(acc.finish())
}

/// Adam on [`dqc_laplace_loss`] with `n_points` fresh points per region and epoch.
pub fn train_laplace(m: &mut QuantumModel, n_points: usize, cfg: &TrainConfig) -> Result<Vec<f64>> {
    train_adam(
        m,
        |m, rng| {
            let s = LaplaceSamples::draw(n_points, rng);
            dqc_laplace_loss_and_grad(m, &s)
        },
        cfg,
    )
}

fn mean_square(r: &[f64]) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
}

/// Sums `mean(r²)` terms and their gradients `mean(2 r ∇r)`.
struct Accumulator {
    value: f64,
    grad: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self { value: 0.0, grad: vec![0.0; n] }
    }

    fn add_mean_square(&mut self, parts: &[(f64, Vec<f64>)]) {
        if parts.is_empty() {
            return;
        }
        let scale = 1.0 / parts.len() as f64;
        for (r, g) in parts {
            self.value += scale * r * r;
            for (a, b) in self.grad.iter_mut().zip(g) {
                *a += scale * 2.0 * r * b;
            }
        }
    }

    fn finish(self) -> (f64, Vec<f64>) {
        (self.value, self.grad)
    }
}
