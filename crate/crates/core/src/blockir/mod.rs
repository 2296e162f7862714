//! Composable block IR.
//!
//! A [`Block`] is an immutable tree of primitive gates, Hamiltonian
//! evolutions and composites. `chain(A, B)` applies `A` first, so its matrix
//! is `B * A`. Qubit 0 is the most significant bit of a state index.

mod constructors;
mod display;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::register::Register;
use crate::symexpr::{Expr, ParamKind, Parameter};

pub use constructors::{build_feature_map, build_hea, build_qft, parallel_feature_maps, FeatureMapKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    N,
    I,
    RX,
    RY,
    RZ,
    CPHASE,
    CNOT,
    CZ,
}

impl GateKind {
    pub fn n_qubits(self) -> usize {
        match self {
            GateKind::CPHASE | GateKind::CNOT | GateKind::CZ => 2,
            _ => 1,
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CPHASE)
    }

    /// `N` is a projector, every other gate is unitary.
    pub fn is_unitary(self) -> bool {
        self != GateKind::N
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::N => "N",
            GateKind::I => "I",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CPHASE => "CPHASE",
            GateKind::CNOT => "CNOT",
            GateKind::CZ => "CZ",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Primitive { gate: GateKind, support: Vec<usize>, angle: Option<Expr> },
    HamEvo { generator: Box<Block>, time: Expr },
    Chain(Vec<Block>),
    Kron(Vec<Block>),
    Add(Vec<Block>),
    Scale { coeff: Expr, child: Box<Block> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    kind: BlockKind,
    tag: Option<String>,
}

impl Block {
    fn from_kind(kind: BlockKind) -> Self {
        Self { kind, tag: None }
    }

    /// Validated primitive gate.
    pub fn primitive(gate: GateKind, support: Vec<usize>, angle: Option<Expr>) -> Result<Self> {
        if support.len() != gate.n_qubits() {
            return Err(Error::InvalidBlock(format!(
                "{gate} acts on {} qubit(s), got support {support:?}",
                gate.n_qubits()
            )));
        }
        check_distinct(&support)?;
        match (gate.is_parametric(), &angle) {
            (true, None) => return Err(Error::InvalidBlock(format!("{gate} requires an angle"))),
            (false, Some(_)) => return Err(Error::InvalidBlock(format!("{gate} takes no angle"))),
            _ => {}
        }
        Ok(Self::from_kind(BlockKind::Primitive { gate, support, angle }))
    }

    /// `exp(-i t G)`. The generator must lower to a sum of Pauli strings with
    /// real coefficients.
    pub fn hamevo(generator: Block, time: impl Into<Expr>) -> Result<Self> {
        let ops = PauliSum::structure_of(&generator)
            .map_err(|e| Error::NonHermitianCoefficient(e.to_string()))?;
        if !ops.is_hermitian(1e-12) {
            return Err(Error::NonHermitianCoefficient(
                "generator has complex Pauli coefficients".into(),
            ));
        }
        Ok(Self::from_kind(BlockKind::HamEvo { generator: Box::new(generator), time: time.into() }))
    }

    pub fn kind(&self) -> &BlockKind {
        &self.kind
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn children(&self) -> &[Block] {
        match &self.kind {
            BlockKind::Chain(c) | BlockKind::Kron(c) | BlockKind::Add(c) => c,
            BlockKind::Scale { child, .. } => std::slice::from_ref(child.as_ref()),
            BlockKind::HamEvo { generator, .. } => std::slice::from_ref(generator.as_ref()),
            BlockKind::Primitive { .. } => &[],
        }
    }

    /// Sorted union of every primitive support.
    pub fn qubit_support(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        self.collect_support(&mut set);
        set.into_iter().collect()
    }

    fn collect_support(&self, out: &mut BTreeSet<usize>) {
        match &self.kind {
            BlockKind::Primitive { support, .. } => out.extend(support.iter().copied()),
            _ => self.children().iter().for_each(|c| c.collect_support(out)),
        }
    }

    /// Adjoint. Pushed down to the leaves: rotation angles and evolution
    /// times are negated, chains reversed, Hermitian gates unchanged.
    pub fn dagger(&self) -> Block {
        let kind = match &self.kind {
            BlockKind::Primitive { gate, support, angle } => BlockKind::Primitive {
                gate: *gate,
                support: support.clone(),
                angle: angle.as_ref().map(|a| -a),
            },
            BlockKind::HamEvo { generator, time } => {
                BlockKind::HamEvo { generator: generator.clone(), time: -time }
            }
            BlockKind::Chain(c) => BlockKind::Chain(c.iter().rev().map(Block::dagger).collect()),
            BlockKind::Kron(c) => BlockKind::Kron(c.iter().map(Block::dagger).collect()),
            BlockKind::Add(c) => BlockKind::Add(c.iter().map(Block::dagger).collect()),
            BlockKind::Scale { coeff, child } => {
                BlockKind::Scale { coeff: coeff.clone(), child: Box::new(child.dagger()) }
            }
        };
        Block { kind, tag: self.tag.clone() }
    }

    /// Every expression in the tree, in depth-first program order.
    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_exprs(&mut out);
        out
    }

    fn collect_exprs<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match &self.kind {
            BlockKind::Primitive { angle, .. } => out.extend(angle.iter()),
            BlockKind::HamEvo { generator, time } => {
                generator.collect_exprs(out);
                out.push(time);
            }
            BlockKind::Scale { coeff, child } => {
                out.push(coeff);
                child.collect_exprs(out);
            }
            _ => self.children().iter().for_each(|c| c.collect_exprs(out)),
        }
    }

    /// Distinct parameters sorted by name. A name used with two different
    /// kinds (or two fixed values) is rejected.
    pub fn parameters(&self) -> Result<Vec<Parameter>> {
        let mut seen: BTreeMap<String, Parameter> = BTreeMap::new();
        for e in self.expressions() {
            let mut local = BTreeMap::new();
            e.collect_into(&mut local);
            for (name, p) in local {
                match seen.get(&name) {
                    Some(prev) if prev.kind != p.kind => return Err(Error::ConflictingParameter(name)),
                    Some(_) => {}
                    None => {
                        seen.insert(name, p);
                    }
                }
            }
        }
        Ok(seen.into_values().collect())
    }

    /// Names of the trainable parameters.
    pub fn variational_names(&self) -> Result<Vec<String>> {
        Ok(self
            .parameters()?
            .into_iter()
            .filter(|p| p.kind == ParamKind::Variational)
            .map(|p| p.name)
            .collect())
    }

    /// Names of the feature (input) parameters.
    pub fn feature_names(&self) -> Result<Vec<String>> {
        Ok(self
            .parameters()?
            .into_iter()
            .filter(|p| p.kind == ParamKind::Feature)
            .map(|p| p.name)
            .collect())
    }

    /// Multi-line tree rendering.
    pub fn tree(&self) -> String {
        display::render_tree(self)
    }
}

fn check_distinct(qubits: &[usize]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &q in qubits {
        if !seen.insert(q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(())
}

fn fixed(gate: GateKind, support: Vec<usize>) -> Block {
    Block::primitive(gate, support, None).expect("valid fixed gate")
}

fn rotation(gate: GateKind, support: Vec<usize>, angle: Expr) -> Block {
    Block::primitive(gate, support, Some(angle)).expect("valid rotation")
}

pub fn x(q: usize) -> Block {
    fixed(GateKind::X, vec![q])
}

pub fn y(q: usize) -> Block {
    fixed(GateKind::Y, vec![q])
}

pub fn z(q: usize) -> Block {
    fixed(GateKind::Z, vec![q])
}

pub fn h(q: usize) -> Block {
    fixed(GateKind::H, vec![q])
}

/// Number operator `(I - Z) / 2`.
pub fn n(q: usize) -> Block {
    fixed(GateKind::N, vec![q])
}

pub fn id(q: usize) -> Block {
    fixed(GateKind::I, vec![q])
}

pub fn rx(q: usize, angle: impl Into<Expr>) -> Block {
    rotation(GateKind::RX, vec![q], angle.into())
}

pub fn ry(q: usize, angle: impl Into<Expr>) -> Block {
    rotation(GateKind::RY, vec![q], angle.into())
}

pub fn rz(q: usize, angle: impl Into<Expr>) -> Block {
    rotation(GateKind::RZ, vec![q], angle.into())
}

/// Panics if `control == target`; use [`Block::primitive`] for a fallible form.
pub fn cphase(control: usize, target: usize, angle: impl Into<Expr>) -> Block {
    rotation(GateKind::CPHASE, vec![control, target], angle.into())
}

/// Panics if `control == target`.
pub fn cnot(control: usize, target: usize) -> Block {
    fixed(GateKind::CNOT, vec![control, target])
}

/// Panics if `control == target`.
pub fn cz(control: usize, target: usize) -> Block {
    fixed(GateKind::CZ, vec![control, target])
}

/// Sequential composition; the first block is applied first.
pub fn chain(blocks: impl IntoIterator<Item = Block>) -> Result<Block> {
    let blocks: Vec<Block> = blocks.into_iter().collect();
    if blocks.is_empty() {
        return Err(Error::EmptyComposition);
    }
    Ok(Block::from_kind(BlockKind::Chain(blocks)))
}

/// Tensor product of blocks on pairwise-disjoint qubits.
pub fn kron(blocks: impl IntoIterator<Item = Block>) -> Result<Block> {
    let blocks: Vec<Block> = blocks.into_iter().collect();
    if blocks.is_empty() {
        return Err(Error::EmptyComposition);
    }
    let mut seen = BTreeSet::new();
    let mut overlap = BTreeSet::new();
    for b in &blocks {
        for q in b.qubit_support() {
            if !seen.insert(q) {
                overlap.insert(q);
            }
        }
    }
    if !overlap.is_empty() {
        return Err(Error::OverlappingSupport(overlap.into_iter().collect()));
    }
    Ok(Block::from_kind(BlockKind::Kron(blocks)))
}

/// Operator sum.
pub fn add(blocks: impl IntoIterator<Item = Block>) -> Result<Block> {
    let blocks: Vec<Block> = blocks.into_iter().collect();
    if blocks.is_empty() {
        return Err(Error::EmptyComposition);
    }
    Ok(Block::from_kind(BlockKind::Add(blocks)))
}

pub fn scale(coeff: impl Into<Expr>, block: Block) -> Block {
    Block::from_kind(BlockKind::Scale { coeff: coeff.into(), child: Box::new(block) })
}

/// `exp(-i t G)`; see [`Block::hamevo`].
pub fn hamevo(generator: Block, time: impl Into<Expr>) -> Result<Block> {
    Block::hamevo(generator, time)
}

/// A block bound to a register.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCircuit {
    register: Register,
    block: Block,
}

impl QuantumCircuit {
    pub fn new(register: Register, block: Block) -> Result<Self> {
        let n = register.n_qubits();
        if let Some(&q) = block.qubit_support().last() {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits: n });
            }
        }
        block.parameters()?;
        Ok(Self { register, block })
    }

    /// Circuit on `n` qubits with an all-to-all register.
    pub fn with_qubits(n_qubits: usize, block: Block) -> Result<Self> {
        Self::new(Register::all_to_all(n_qubits)?, block)
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn block(&self) -> &Block {
        &self.block
    }

    pub fn n_qubits(&self) -> usize {
        self.register.n_qubits()
    }
}
