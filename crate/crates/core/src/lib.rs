//! Digital-analog quantum program construction, simulation and training.
//!
//! Programs are built as [`Block`] trees, bound to a [`Register`] in a
//! [`QuantumCircuit`], simulated by the state-vector engine in [`simulator`],
//! differentiated by [`diffengine`] and trained through [`runtime`].

pub mod blockir;
pub mod daqc;
pub mod diffengine;
pub mod error;
pub mod hamiltonian;
pub mod pauli;
pub mod register;
pub mod runtime;
pub mod simulator;
pub mod symexpr;

pub use blockir::{Block, BlockKind, GateKind, QuantumCircuit};
pub use error::{Error, Result};
pub use pauli::PauliSum;
pub use register::Register;
pub use symexpr::{values, Expr, ParamKind, Parameter, Values};
