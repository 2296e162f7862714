use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::QuantumModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Adam,
    GradientFreeSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_iter: usize,
    /// Adam step size, or the initial mutation scale of the evolution strategy.
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(max_iter: usize, learning_rate: f64, optimizer: Optimizer, seed: u64) -> Result<Self> {
        if learning_rate.is_nan() || learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {learning_rate}")));
        }
        Ok(Self { max_iter, learning_rate, optimizer, seed })
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adam moments for a fixed number of parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for k in 0..theta.len() {
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * grad[k];
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
            theta[k] -= self.lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + ADAM_EPSILON);
        }
    }
}

/// Runs `max_iter` Adam steps on the model parameters. `loss` returns the
/// loss and its gradient in [`QuantumModel::parameter_names`] order; it gets
/// a generator seeded from the config for any sampling it does. The trace
/// holds the loss seen before each step.
pub fn train_adam<F>(model: &mut QuantumModel, mut loss: F, cfg: &TrainConfig) -> Result<Vec<f64>>
where
    F: FnMut(&QuantumModel, &mut ChaCha8Rng) -> Result<(f64, Vec<f64>)>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = model.parameters();
    let mut opt = Adam::new(theta.len(), cfg.learning_rate);
    let mut trace = Vec::with_capacity(cfg.max_iter);
    for iteration in 0..cfg.max_iter {
        let (l, g) = loss(model, &mut rng)?;
        if l.is_nan() || g.iter().any(|x| x.is_nan()) {
            return Err(Error::NaNLoss { iteration, trace });
        }
        trace.push(l);
        opt.step(&mut theta, &g);
        model.set_parameters(&theta)?;
    }
    Ok(trace)
}

/// Seeded (1+1) evolution strategy with the one-fifth success rule. Evaluates
/// the start point, then `max_iter` Gaussian candidates; returns the best
/// point and the best-so-far trace (`max_iter + 1` entries).
pub fn one_plus_one_es<F>(x0: &[f64], mut f: F, sigma0: f64, max_iter: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(&[f64], &mut ChaCha8Rng) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = x0.to_vec();
    let mut best_f = f(&best, &mut rng)?;
    let mut sigma = sigma0;
    let mut trace = vec![best_f];
    let grow = 1.5f64;
    let shrink = grow.powf(-0.25);
    for _ in 0..max_iter {
        let candidate: Vec<f64> = best
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x + sigma * z
            })
            .collect();
        let fc = f(&candidate, &mut rng)?;
        if fc <= best_f {
            best = candidate;
            best_f = fc;
            sigma *= grow;
        } else {
            sigma *= shrink;
        }
        trace.push(best_f);
    }
    Ok((best, trace))
}

/// [`one_plus_one_es`] over the model parameters, leaving the best point in
/// the model. The initial mutation scale is `cfg.learning_rate`.
pub fn train_gradient_free<F>(model: &mut QuantumModel, mut loss: F, cfg: &TrainConfig) -> Result<Vec<f64>>
where
    F: FnMut(&QuantumModel, &mut ChaCha8Rng) -> Result<f64>,
{
    let mut probe = model.clone();
    let (best, trace) = one_plus_one_es(
        &model.parameters(),
        |theta, rng| {
            probe.set_parameters(theta)?;
            loss(&probe, rng)
        },
        cfg.learning_rate,
        cfg.max_iter,
        cfg.seed,
    )?;
    model.set_parameters(&best)?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockir::{rx, QuantumCircuit};
    use crate::diffengine::DiffMode;
    use crate::hamiltonian::total_magnetization;

    fn one_param_model() -> QuantumModel {
        let c = QuantumCircuit::with_qubits(1, rx(0, crate::symexpr::Expr::var("theta"))).unwrap();
        QuantumModel::new(c, vec![total_magnetization(1)], DiffMode::Adjoint, 1).unwrap()
    }

    #[test]
    fn adam_on_quadratic() {
        let mut m = one_param_model();
        let cfg = TrainConfig::new(500, 0.05, Optimizer::Adam, 0).unwrap();
        let quad = |m: &QuantumModel, _: &mut ChaCha8Rng| {
            let t = m.parameters()[0];
            Ok(((t - 3.0).powi(2), vec![2.0 * (t - 3.0)]))
        };
        train_adam(&mut m, quad, &cfg).unwrap();
        assert!((m.parameters()[0] - 3.0).abs() <= 1e-2);
    }

    #[test]
    fn zero_iterations_leave_parameters() {
        let mut m = one_param_model();
        let before = m.parameters();
        let cfg = TrainConfig::new(0, 0.1, Optimizer::Adam, 0).unwrap();
        let trace = train_adam(&mut m, |_, _| Ok((1.0, vec![1.0])), &cfg).unwrap();
        assert!(trace.is_empty());
        assert_eq!(m.parameters(), before);
    }

    #[test]
    fn nan_loss_aborts_with_trace() {
        let mut m = one_param_model();
        let cfg = TrainConfig::new(10, 0.1, Optimizer::Adam, 0).unwrap();
        let mut k = 0;
        let err = train_adam(
            &mut m,
            |_, _| {
                k += 1;
                Ok((if k == 3 { f64::NAN } else { 1.0 }, vec![0.1]))
            },
            &cfg,
        )
        .unwrap_err();
        assert_eq!(err, Error::NaNLoss { iteration: 2, trace: vec![1.0, 1.0] });
    }

    #[test]
    fn es_on_sphere() {
        let sphere = |x: &[f64], _: &mut ChaCha8Rng| Ok(x.iter().map(|v| v * v).sum::<f64>());
        let (_, trace) = one_plus_one_es(&[2.0, -1.5, 3.0, 0.7], sphere, 1.0, 199, 5).unwrap();
        assert!(*trace.last().unwrap() <= 1e-2, "{}", trace.last().unwrap());
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn es_budget_is_one_candidate_per_iteration() {
        let mut calls = 0;
        one_plus_one_es(
            &[1.0],
            |_, _| {
                calls += 1;
                Ok(0.0)
            },
            0.1,
            1,
            0,
        )
        .unwrap();
        assert_eq!(calls, 2);
    }

    #[test]
    fn invalid_learning_rate() {
        assert!(TrainConfig::new(1, 0.0, Optimizer::Adam, 0).is_err());
    }
}
