use thiserror::Error;

/// Level pair, 1-based.
pub type Pair = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system spec: {0}")]
    InvalidSpec(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("coupling graph is not connected: components {components:?}")]
    NotConnected { components: Vec<Vec<usize>> },
    #[error("chain is not certified connected")]
    ChainNotConnected,
    #[error("chain restricted to levels 1..={m} does not couple every pair")]
    NotMConnected { m: usize },
    #[error("edge {edge:?} is not in the chain")]
    EdgeNotInChain { edge: Pair },
    #[error("edge {edge:?} has zero coupling")]
    DecoupledEdge { edge: Pair },
    #[error("edge {edge:?} has a squared gap shared with coupled pair {partner:?}")]
    ResonantGap { edge: Pair, partner: Pair },
    #[error("edge {edge:?} resonates with coupled pair {partner:?} inside the truncation")]
    ResonantTruncation { edge: Pair, partner: Pair },
    #[error("gap modulus {modulus} of the leading gap is repeated")]
    DegenerateGaps { modulus: f64 },
    #[error("phase correction undefined on edge {edge:?}: degenerate levels")]
    PhaseCorrectionUndefined { edge: Pair },
    #[error("phase correction on edge {edge:?} is not real (imaginary part {imag})")]
    PhaseCorrectionNotReal { edge: Pair, imag: f64 },
    #[error("control step {index} has value 0 and cannot be reparametrized")]
    ZeroValueStep { index: usize },
    #[error("steep segment slope {slope:e} exceeds cap {cap:e}; increase eta or lower N")]
    SlopeCap { slope: f64, cap: f64 },
    #[error("segment slope {slope} is below the floor {floor}")]
    SlopeFloor { slope: f64, floor: f64 },
    #[error("entry magnitude exceeded 1e300 at order {order}")]
    Overflow { order: usize },
    #[error("size {size} exceeds the configured maximum {max}")]
    SizeGuard { size: usize, max: usize },
    #[error("{value}/{denominator} is not in lowest terms")]
    NotLowestTerms { value: u64, denominator: u64 },
    #[error("arithmetic overflow in exact period computation")]
    ArithmeticOverflow,
    #[error("no drift time found within t_max = {t_max}")]
    NotFoundWithin { t_max: f64 },
    #[error("truncation {requested} exceeds system size {available}")]
    TruncationTooLarge { requested: usize, available: usize },
    #[error("unitarity defect {defect:e} persists after {renormalizations} renormalizations")]
    UnitarityBreach { defect: f64, renormalizations: usize },
    #[error("required integration step {step:e} is below the floor {floor:e}")]
    StepSizeFloor { step: f64, floor: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("round limit reached after {rounds} rounds; fidelity {achieved}")]
    RoundLimit { rounds: usize, achieved: f64 },
    #[error("report invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
