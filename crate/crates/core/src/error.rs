use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("enumeration budget exceeded: {0}")]
    EnumerationBudgetExceeded(String),
    #[error("shortest vector of a rank-0 lattice is undefined")]
    ZeroRankLattice,
    #[error("Cartan matrix is not of finite type: {0}")]
    NotFiniteType(String),
    #[error("Cartan matrix is not irreducible")]
    NotIrreducible,
    #[error("not a root: {0}")]
    NotARoot(String),
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("weight is not dominated by the highest weight")]
    NotDominated,
    #[error("need {need} values, got {got}")]
    InsufficientValues { need: usize, got: usize },
    #[error("weight is not dominant integral")]
    NotDominant,
    #[error("central pairing must be positive, got {0}")]
    NonPositiveLevel(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("level {level} outside computed range 0..={bound}")]
    LevelOutOfRange { level: i64, bound: usize },
    #[error("radical quotient gives dimension {found} at a weight of multiplicity {expected}")]
    MultiplicityMismatch { expected: usize, found: usize },
    #[error("outside the truncation range: {0}")]
    RangeExceeded(String),
    #[error("unknown generator: {0}")]
    UnknownGenerator(String),
    #[error("scalar must be nonzero")]
    ZeroScalar,
    #[error("word contains a factor that is not a negative real-root unipotent")]
    NotUnipotentWord,
    #[error("u-(0) factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("matrix is singular")]
    SingularInput,
    #[error("element is not of the form u- h eta(tau): {0}")]
    NotIwasawaForm(String),
    #[error("admissibility check failed: {0}")]
    AdmissibilityFailure(String),
    #[error("element does not stabilize the integral lattice: {0}")]
    NotInStabilizer(String),
    #[error("tau must lie in (0, 1), got {0}")]
    TauOutOfRange(String),
    #[error("tail is not certified: {0}")]
    NotCertified(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
