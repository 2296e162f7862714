//! Lowering of circuit blocks into a flat list of executable operations.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::apply::{apply_1q, apply_2q, apply_dense, apply_diagonal};
use crate::blockir::{Block, BlockKind, GateKind};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliSum};
use crate::symexpr::{Expr, Values};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigendecomposition of a Hermitian generator on its local qubits.
#[derive(Debug, Clone)]
pub(crate) enum Spectrum {
    Diagonal(Vec<f64>),
    Dense { values: Vec<f64>, vectors: DMatrix<Complex64> },
}

impl Spectrum {
    fn of(local: &PauliSum, k: usize) -> Self {
        if let Some(d) = local.diagonal(k) {
            return Spectrum::Diagonal(d);
        }
        let eig = local.to_dense(k).symmetric_eigen();
        Spectrum::Dense { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    pub(crate) fn eigenvalues(&self) -> Vec<f64> {
        match self {
            Spectrum::Diagonal(d) => d.clone(),
            Spectrum::Dense { values, .. } => values.clone(),
        }
    }
}

/// Numeric generator of an evolution together with its spectrum.
#[derive(Debug, Clone)]
pub struct Generator {
    pub(crate) global: PauliSum,
    spectrum: Spectrum,
}

impl Generator {
    fn new(global: PauliSum, qubits: &[usize]) -> Self {
        let local = global.remapped(|q| qubits.iter().position(|&x| x == q).expect("generator qubit"));
        let spectrum = Spectrum::of(&local, qubits.len());
        Self { global, spectrum }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum.eigenvalues()
    }
}

/// One executable step. Parametric steps carry an occurrence index, counted
/// in program order over all rotations and evolutions.
#[derive(Debug, Clone)]
pub enum Op {
    Fixed { gate: GateKind, qubits: Vec<usize> },
    Rotation { gate: GateKind, qubits: Vec<usize>, angle: Expr, occurrence: usize },
    Evolution {
        qubits: Vec<usize>,
        generator: Block,
        cached: Option<Arc<Generator>>,
        time: Expr,
        occurrence: usize,
    },
}

impl Op {
    /// Argument expression and occurrence of a parametric step.
    pub fn argument(&self) -> Option<(&Expr, usize)> {
        match self {
            Op::Fixed { .. } => None,
            Op::Rotation { angle, occurrence, .. } => Some((angle, *occurrence)),
            Op::Evolution { time, occurrence, .. } => Some((time, *occurrence)),
        }
    }
}

/// Numeric operation ready to apply.
#[derive(Debug, Clone)]
pub enum BoundOp {
    One { qubit: usize, m: [Complex64; 4] },
    Two { qubits: [usize; 2], m: [Complex64; 16] },
    Diagonal { qubits: Vec<usize>, phases: Vec<Complex64> },
    Dense { qubits: Vec<usize>, m: DMatrix<Complex64> },
}

impl BoundOp {
    pub fn apply(&self, n_qubits: usize, amps: &mut [Complex64]) {
        match self {
            BoundOp::One { qubit, m } => apply_1q(amps, n_qubits, *qubit, m),
            BoundOp::Two { qubits, m } => apply_2q(amps, n_qubits, qubits[0], qubits[1], m),
            BoundOp::Diagonal { qubits, phases } => apply_diagonal(amps, n_qubits, qubits, phases),
            BoundOp::Dense { qubits, m } => apply_dense(amps, n_qubits, qubits, m),
        }
    }

    /// Conjugate transpose.
    pub fn inverse(&self) -> BoundOp {
        match self {
            BoundOp::One { qubit, m } => {
                BoundOp::One { qubit: *qubit, m: [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()] }
            }
            BoundOp::Two { qubits, m } => {
                let mut t = [ZERO; 16];
                for r in 0..4 {
                    for c in 0..4 {
                        t[4 * r + c] = m[4 * c + r].conj();
                    }
                }
                BoundOp::Two { qubits: *qubits, m: t }
            }
            BoundOp::Diagonal { qubits, phases } => {
                BoundOp::Diagonal { qubits: qubits.clone(), phases: phases.iter().map(|p| p.conj()).collect() }
            }
            BoundOp::Dense { qubits, m } => BoundOp::Dense { qubits: qubits.clone(), m: m.adjoint() },
        }
    }
}

/// A compiled circuit body.
#[derive(Debug, Clone)]
pub struct Program {
    n_qubits: usize,
    ops: Vec<Op>,
    n_occurrences: usize,
}

impl Program {
    /// Lowers a unitary block. `Add`, `Scale` and `N` outside of an
    /// evolution generator are rejected.
    pub fn compile(block: &Block, n_qubits: usize) -> Result<Self> {
        if let Some(&q) = block.qubit_support().last() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
        }
        let mut p = Program { n_qubits, ops: Vec::new(), n_occurrences: 0 };
        p.lower(block)?;
        Ok(p)
    }

    fn lower(&mut self, block: &Block) -> Result<()> {
        match block.kind() {
            BlockKind::Primitive { gate, support, angle } => {
                if !gate.is_unitary() {
                    return Err(Error::NonUnitaryBlockInCircuit(format!("{gate}({support:?})")));
                }
                match angle {
                    Some(a) => {
                        self.ops.push(Op::Rotation {
                            gate: *gate,
                            qubits: support.clone(),
                            angle: a.clone(),
                            occurrence: self.n_occurrences,
                        });
                        self.n_occurrences += 1;
                    }
                    None if *gate == GateKind::I => {}
                    None => self.ops.push(Op::Fixed { gate: *gate, qubits: support.clone() }),
                }
            }
            BlockKind::HamEvo { generator, time } => {
                let qubits = generator.qubit_support();
                let numeric = generator.expressions().iter().all(|e| e.is_numeric());
                let cached = if numeric {
                    let g = PauliSum::from_block(generator, &mut |e| e.evaluate(&Values::new()))?;
                    Some(Arc::new(Generator::new(g, &qubits)))
                } else {
                    None
                };
                self.ops.push(Op::Evolution {
                    qubits,
                    generator: (**generator).clone(),
                    cached,
                    time: time.clone(),
                    occurrence: self.n_occurrences,
                });
                self.n_occurrences += 1;
            }
            BlockKind::Chain(children) | BlockKind::Kron(children) => {
                for c in children {
                    self.lower(c)?;
                }
            }
            BlockKind::Add(_) => return Err(Error::NonUnitaryBlockInCircuit("AddBlock".into())),
            BlockKind::Scale { .. } => return Err(Error::NonUnitaryBlockInCircuit("ScaleBlock".into())),
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn n_occurrences(&self) -> usize {
        self.n_occurrences
    }

    /// Argument expression of each occurrence, in order.
    pub fn occurrence_exprs(&self) -> Vec<&Expr> {
        self.ops.iter().filter_map(|o| o.argument().map(|(e, _)| e)).collect()
    }

    /// Numeric generator of an evolution step.
    pub(crate) fn generator_of(&self, op: &Op, values: &Values) -> Result<Arc<Generator>> {
        match op {
            Op::Evolution { cached: Some(g), .. } => Ok(g.clone()),
            Op::Evolution { qubits, generator, .. } => {
                let g = PauliSum::from_block(generator, &mut |e| e.evaluate(values))?;
                if !g.is_hermitian(1e-12) {
                    return Err(Error::NonHermitianGenerator("complex coefficients".into()));
                }
                Ok(Arc::new(Generator::new(g, qubits)))
            }
            _ => Err(Error::InvalidArgument("not an evolution step".into())),
        }
    }

    /// `Ĝ` such that the step equals `exp(-i a Ĝ / 2)` in its argument `a`.
    pub fn effective_generator(&self, op: &Op, values: &Values) -> Result<PauliSum> {
        match op {
            Op::Rotation { gate, qubits, .. } => Ok(match gate {
                GateKind::RX => PauliSum::single(qubits[0], Pauli::X),
                GateKind::RY => PauliSum::single(qubits[0], Pauli::Y),
                GateKind::RZ => PauliSum::single(qubits[0], Pauli::Z),
                GateKind::CPHASE => {
                    let nc = number_op(qubits[0]);
                    let nt = number_op(qubits[1]);
                    nc.times(&nt).scaled((-2.0).into())
                }
                _ => unreachable!("non-parametric rotation"),
            }),
            Op::Evolution { .. } => Ok(self.generator_of(op, values)?.global.scaled(2.0.into())),
            Op::Fixed { .. } => Err(Error::InvalidArgument("fixed gate has no generator".into())),
        }
    }

    /// Distinct positive eigenvalue differences of the effective generator.
    pub fn spectral_gaps(&self, op: &Op, values: &Values) -> Result<Vec<f64>> {
        let eig = match op {
            Op::Rotation { gate: GateKind::CPHASE, .. } => vec![0.0, -2.0],
            Op::Rotation { .. } => vec![-1.0, 1.0],
            Op::Evolution { .. } => self.generator_of(op, values)?.eigenvalues().iter().map(|v| 2.0 * v).collect(),
            Op::Fixed { .. } => return Err(Error::InvalidArgument("fixed gate has no generator".into())),
        };
        Ok(unique_gaps(&eig, 1e-8))
    }

    /// Binds every step to numbers. `shifts` adds `delta` to the argument of
    /// occurrence `o` for each `(o, delta)`.
    pub fn bind(&self, values: &Values, shifts: &[(usize, f64)]) -> Result<Vec<BoundOp>> {
        self.ops.iter().map(|op| self.bind_op(op, values, shifts)).collect()
    }

    pub(crate) fn bind_op(&self, op: &Op, values: &Values, shifts: &[(usize, f64)]) -> Result<BoundOp> {
        let shifted = |e: &Expr, o: usize| -> Result<f64> {
            let base = e.evaluate(values)?;
            Ok(base + shifts.iter().filter(|(s, _)| *s == o).map(|(_, d)| d).sum::<f64>())
        };
        Ok(match op {
            Op::Fixed { gate, qubits } => fixed_gate(*gate, qubits),
            Op::Rotation { gate, qubits, angle, occurrence } => {
                rotation_gate(*gate, qubits, shifted(angle, *occurrence)?)
            }
            Op::Evolution { qubits, time, occurrence, .. } => {
                let t = shifted(time, *occurrence)?;
                let g = self.generator_of(op, values)?;
                evolution(&g.spectrum, qubits, t)
            }
        })
    }

    /// Applies every step to `amps` in program order.
    pub fn apply(&self, bound: &[BoundOp], amps: &mut [Complex64]) {
        for b in bound {
            b.apply(self.n_qubits, amps);
        }
    }
}

fn number_op(q: usize) -> PauliSum {
    PauliSum::identity(0.5).plus(&PauliSum::single(q, Pauli::Z).scaled((-0.5).into()))
}

pub(crate) fn unique_gaps(eigenvalues: &[f64], tol: f64) -> Vec<f64> {
    let mut gaps: Vec<f64> = Vec::new();
    for (i, a) in eigenvalues.iter().enumerate() {
        for b in &eigenvalues[i + 1..] {
            let d = (a - b).abs();
            if d > tol && !gaps.iter().any(|g| (g - d).abs() <= tol) {
                gaps.push(d);
            }
        }
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps
}

fn fixed_gate(gate: GateKind, qubits: &[usize]) -> BoundOp {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let one = |m: [Complex64; 4]| BoundOp::One { qubit: qubits[0], m };
    match gate {
        GateKind::X => one([ZERO, ONE, ONE, ZERO]),
        GateKind::Y => one([ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        GateKind::Z => BoundOp::Diagonal { qubits: qubits.to_vec(), phases: vec![ONE, -ONE] },
        GateKind::H => one([c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        GateKind::I => BoundOp::Diagonal { qubits: qubits.to_vec(), phases: vec![ONE, ONE] },
        GateKind::CZ => BoundOp::Diagonal { qubits: qubits.to_vec(), phases: vec![ONE, ONE, ONE, -ONE] },
        GateKind::CNOT => {
            let mut m = [ZERO; 16];
            m[0] = ONE;
            m[5] = ONE;
            m[11] = ONE;
            m[14] = ONE;
            BoundOp::Two { qubits: [qubits[0], qubits[1]], m }
        }
        _ => unreachable!("{gate} is not a fixed unitary gate"),
    }
}

fn rotation_gate(gate: GateKind, qubits: &[usize], a: f64) -> BoundOp {
    let (s, c) = (a / 2.0).sin_cos();
    let cc = Complex64::new(c, 0.0);
    let one = |m: [Complex64; 4]| BoundOp::One { qubit: qubits[0], m };
    match gate {
        GateKind::RX => one([cc, Complex64::new(0.0, -s), Complex64::new(0.0, -s), cc]),
        GateKind::RY => one([cc, Complex64::new(-s, 0.0), Complex64::new(s, 0.0), cc]),
        GateKind::RZ => BoundOp::Diagonal {
            qubits: qubits.to_vec(),
            phases: vec![Complex64::from_polar(1.0, -a / 2.0), Complex64::from_polar(1.0, a / 2.0)],
        },
        GateKind::CPHASE => BoundOp::Diagonal {
            qubits: qubits.to_vec(),
            phases: vec![ONE, ONE, ONE, Complex64::from_polar(1.0, a)],
        },
        _ => unreachable!("{gate} is not a rotation"),
    }
}

fn evolution(spectrum: &Spectrum, qubits: &[usize], t: f64) -> BoundOp {
    match spectrum {
        Spectrum::Diagonal(d) => BoundOp::Diagonal {
            qubits: qubits.to_vec(),
            phases: d.iter().map(|e| Complex64::from_polar(1.0, -e * t)).collect(),
        },
        Spectrum::Dense { values, vectors } => {
            let mut scaled = vectors.clone();
            for (j, e) in values.iter().enumerate() {
                let ph = Complex64::from_polar(1.0, -e * t);
                scaled.column_mut(j).iter_mut().for_each(|v| *v *= ph);
            }
            BoundOp::Dense { qubits: qubits.to_vec(), m: scaled * vectors.adjoint() }
        }
    }
}
