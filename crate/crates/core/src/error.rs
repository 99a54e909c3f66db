use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {n} outside the supported range 1..={max}")]
    QubitCountOutOfRange { n: usize, max: usize },

    #[error("qubit q{qubit} out of range for an {n}-qubit state")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("amplitude index {index} out of range for an {n}-qubit state")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("matrix is not unitary (deviation {deviation:.3e} exceeds {tolerance:.0e})")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("gate qubits must be distinct (q{qubit} repeated)")]
    DuplicateQubit { qubit: usize },

    #[error("two-level gate indices must differ (both {index})")]
    DuplicateIndex { index: usize },

    #[error("amplitude at index {index} is not finite")]
    NonFiniteAmplitude { index: usize },

    #[error("amplitude list has {got} entries, expected {expected}")]
    AmplitudeCountMismatch { got: usize, expected: usize },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("states act on different qubit counts ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },

    #[error("coefficient pair is not normalized (|alpha|^2+|beta|^2 = {norm_sq})")]
    UnnormalizedPair { norm_sq: f64 },

    #[error("target amplitudes are not normalized (sum |c|^2 = {norm_sq})")]
    UnnormalizedTarget { norm_sq: f64 },

    #[error("specification expects {expected} base pairs, found {got}")]
    BasePairCountMismatch { got: usize, expected: usize },

    #[error("variant level {level_k} outside 2..={n}")]
    VariantLevelOutOfRange { level_k: usize, n: usize },

    #[error("variant pattern for level {level_k} must cover {expected} qubits, found {got}")]
    VariantPatternLength {
        level_k: usize,
        expected: usize,
        got: usize,
    },

    #[error("state is not in standard form (odd-parity amplitude magnitude {magnitude:.3e})")]
    NotStandardForm { magnitude: f64 },

    #[error("state vector has vanishing norm")]
    ZeroState,

    #[error("degenerate location at level {level}, pattern {pattern:?}: both group masses below threshold")]
    DegenerateLocation { level: usize, pattern: String },

    #[error("trio test degenerate: every ratio pattern evaluates to 0 = 0")]
    DegenerateTrio,

    #[error("trio ({a}, {b}, {c}) stayed ambiguous after {retries} fillers")]
    AmbiguousTrio {
        a: usize,
        b: usize,
        c: usize,
        retries: usize,
    },

    #[error("trio ({a}, {b}, {c}) verdict contradicts the known sequence")]
    InconsistentTrio { a: usize, b: usize, c: usize },

    #[error("pair extraction at level {level}: denominator coefficient is zero")]
    DegeneratePair { level: usize },

    #[error("no ratio pattern found on trial {trial}")]
    NoRatioPattern { trial: u64 },

    #[error("sequencing requires at least 3 qubits, got {n}")]
    TooFewQubits { n: usize },

    #[error("filler must assign exactly the {expected} qubits outside the trio")]
    BadFiller { expected: usize },

    #[error("duplicate qubit q{qubit} in measurement assignment")]
    DuplicateAssignment { qubit: usize },

    #[error("polynomial bound c*n^k = {value} must stay below 2^n = {limit}")]
    PolyBoundTooLarge { value: f64, limit: f64 },

    #[error("variant cutoff K1 = {k1} outside 1..2^n")]
    CutoffOutOfRange { k1: u128 },

    #[error("gate script parse error on line {line}: {message}")]
    ScriptParse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("analysis report does not contain a successful sequencing outcome")]
    MissingRecoveredStructure,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
