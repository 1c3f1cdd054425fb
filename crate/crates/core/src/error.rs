use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("cannot embed a vector with zero norm")]
    ZeroVector,
    #[error("wire {wire} out of range for a {num_qubits}-qubit register")]
    WireOutOfRange { wire: usize, num_qubits: usize },
    #[error("gate wires must be distinct (got {0} twice)")]
    DuplicateWire(usize),
    #[error("data + ancilla qubits ({data} + {ancilla}) do not match a {total}-qubit state")]
    BadSplit {
        data: usize,
        ancilla: usize,
        total: usize,
    },
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("bad parameter shape: {0}")]
    BadShape(String),
    #[error("step {step} outside 1..={steps}")]
    StepOutOfRange { step: usize, steps: usize },
    #[error("unknown {what} '{name}'")]
    BadKind { what: &'static str, name: String },
    #[error("number of diffusion steps must be at least 1")]
    NoSteps,
    #[error("cannot max-normalize an all-zero vector")]
    AllZero,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite loss ({0})")]
    NonFiniteLoss(String),
    #[error("bad IDX magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { found: u32, expected: u32 },
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("invalid config: {key}: {message}")]
    Config { key: String, message: String },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
