use std::f64::consts::PI;

use super::{chain, cnot, cphase, h, kron, rx, ry, Block};
use crate::error::{Error, Result};
use crate::symexpr::Expr;

/// Quantum Fourier transform on `support`, without the terminal swap network.
///
/// For each position `l`: `H(q_l)` followed by `CPHASE(q_j, q_l, pi / 2^(j - l))`
/// for every `j > l`. The unitary equals the DFT matrix composed with a
/// bit-reversal of the output index.
pub fn build_qft(support: &[usize]) -> Result<Block> {
    if support.is_empty() {
        return Err(Error::EmptyComposition);
    }
    super::check_distinct(support)?;
    let mut layers = Vec::with_capacity(support.len());
    for l in 0..support.len() {
        let phases: Vec<Block> = ((l + 1)..support.len())
            .map(|j| cphase(support[j], support[l], PI / 2f64.powi((j - l) as i32)))
            .collect();
        if phases.is_empty() {
            layers.push(h(support[l]));
        } else {
            layers.push(chain([h(support[l]), chain(phases)?])?);
        }
    }
    let qft = if layers.len() == 1 { layers.pop().unwrap() } else { chain(layers)? };
    Ok(qft.tagged("qft"))
}

/// Hardware-efficient ansatz: each layer applies `RX`, `RY`, `RX` on every
/// qubit, then a `CNOT(i, i + 1)` ladder. Parameters are named
/// `theta_{layer}_{qubit}_{rot}`.
pub fn build_hea(n_qubits: usize, depth: usize) -> Result<Block> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!("hea needs at least 2 qubits, got {n_qubits}")));
    }
    if depth < 1 {
        return Err(Error::InvalidArgument("hea depth must be at least 1".into()));
    }
    let name = |l: usize, q: usize, r: usize| Expr::var(format!("theta_{l}_{q}_{r}"));
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let rot = |r: usize, f: fn(usize, Expr) -> Block| kron((0..n_qubits).map(|q| f(q, name(l, q, r))));
        let ladder = chain((0..n_qubits - 1).map(|i| cnot(i, i + 1)))?;
        layers.push(chain([
            rot(0, rx)?,
            rot(1, ry)?,
            rot(2, rx)?,
            ladder,
        ])?);
    }
    Ok(chain(layers)?.tagged("hea"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMapKind {
    /// `RX(q, x)`.
    Fourier,
    /// `RX(q, acos x)`; inputs must lie in `[-1, 1]`.
    Chebyshev,
}

impl std::str::FromStr for FeatureMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(Self::Fourier),
            "chebyshev" => Ok(Self::Chebyshev),
            other => Err(Error::InvalidArgument(format!("unknown feature map `{other}`"))),
        }
    }
}

/// Kron of `RX` rotations encoding the feature `param` on `support`
/// (default `0..n_qubits`).
pub fn build_feature_map(
    n_qubits: usize,
    param: &str,
    kind: FeatureMapKind,
    support: Option<&[usize]>,
) -> Result<Block> {
    let support: Vec<usize> = match support {
        Some(s) => s.to_vec(),
        None => (0..n_qubits).collect(),
    };
    if support.is_empty() {
        return Err(Error::EmptyComposition);
    }
    let x = Expr::feature(param);
    let angle = match kind {
        FeatureMapKind::Fourier => x,
        FeatureMapKind::Chebyshev => x.acos(),
    };
    Ok(kron(support.iter().map(|&q| rx(q, angle.clone())))?.tagged("feature_map"))
}

/// One feature map per variable on consecutive equal slices of the register:
/// with `("x", "y")` on 4 qubits, `x` drives qubits 0-1 and `y` qubits 2-3.
pub fn parallel_feature_maps(n_qubits: usize, params: &[&str], kind: FeatureMapKind) -> Result<Block> {
    if params.is_empty() {
        return Err(Error::EmptyComposition);
    }
    let width = n_qubits / params.len();
    if width == 0 || width * params.len() != n_qubits {
        return Err(Error::InvalidArgument(format!(
            "{n_qubits} qubits cannot be split evenly across {} variables",
            params.len()
        )));
    }
    let maps = params
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let support: Vec<usize> = (k * width..(k + 1) * width).collect();
            build_feature_map(n_qubits, p, kind, Some(&support))
        })
        .collect::<Result<Vec<_>>>()?;
    kron(maps)
}
