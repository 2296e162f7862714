//! Trainable models, optimizers and the application workloads built on them.

pub mod dqc;
pub mod model;
pub mod qubo;
pub mod train;

pub use model::{Predictor, QuantumModel};
pub use qubo::{embed_qubo, qubo_loss, solve_qubo, tune_qubo, Embedding, QuboProblem};
pub use train::{train_adam, train_gradient_free, Optimizer, TrainConfig};
