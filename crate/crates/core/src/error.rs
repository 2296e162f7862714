use thiserror::Error;

/// Errors raised anywhere in the program-construction, simulation and
/// training stack.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("no value supplied for parameter `{0}`")]
    MissingParameter(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("parameter `{0}` is declared with conflicting kinds")]
    ConflictingParameter(String),

    #[error("kron children act on overlapping qubits ({0:?})")]
    OverlappingSupport(Vec<usize>),
    #[error("cannot compose an empty list of blocks")]
    EmptyComposition,
    #[error("qubit {0} appears more than once")]
    DuplicateQubit(usize),
    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("register spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("register must contain at least one qubit")]
    EmptyRegister,
    #[error("atoms {0} and {1} are at the same position")]
    CoincidentAtoms(usize, usize),

    #[error("expected {expected} strengths, got {got}")]
    StrengthLengthMismatch { expected: usize, got: usize },
    #[error("operator is not Hermitian: {0}")]
    NonHermitianCoefficient(String),
    #[error("generator is not an Ising (Z/ZZ) Hamiltonian: {0}")]
    NonIsingGenerator(String),

    #[error("transform linear system is singular: {0}")]
    SingularTransform(String),
    #[error("strategy {0} is not supported here")]
    UnsupportedStrategy(String),

    #[error("block `{0}` is not unitary and cannot appear in a circuit body")]
    NonUnitaryBlockInCircuit(String),
    #[error("bad bitstring `{0}`")]
    BadBitstring(String),
    #[error("observable is not Hermitian: {0}")]
    NonHermitianObservable(String),
    #[error("dense matrices are limited to {max} qubits, got {got}")]
    TooManyQubitsForDense { got: usize, max: usize },
    #[error("qubit {qubit} is outside a register of {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("generator is not Hermitian: {0}")]
    NonHermitianGenerator(String),
    #[error("shift system is ill-conditioned (condition number {0:e})")]
    IllConditionedShifts(f64),
    #[error("adjoint differentiation supports digital gates only, found {0}")]
    AnalogBlockInAdjoint(String),
    #[error("parameter shift is not applicable: {0}")]
    ShiftRuleUnsupported(String),

    #[error("loss became NaN at iteration {iteration}")]
    NaNLoss { iteration: usize, trace: Vec<f64> },
    #[error("register embedding did not converge (residual {0:e})")]
    EmbeddingNotConverged(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
