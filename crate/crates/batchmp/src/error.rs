use thiserror::Error;

/// Errors surfaced by the batch arithmetic layers.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("limb-count mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("unsupported operand size: {bits} bits")]
    UnsupportedSize { bits: usize },

    #[error("lane {lane}: value does not fit in {bits} bits")]
    ValueTooLarge { lane: usize, bits: usize },

    #[error("lane {lane}: modulus must be odd")]
    EvenModulus { lane: usize },

    #[error("lane {lane}: modulus out of range")]
    ModulusOutOfRange { lane: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("window width {0} out of range 1..=5")]
    WindowOutOfRange(u32),

    #[error("carry out of the top limb: value exceeds capacity")]
    Overflow,

    #[error("requested lane backend is not available on this CPU")]
    BackendUnavailable,

    #[error("invalid hex input: {0}")]
    BadHex(String),
}
