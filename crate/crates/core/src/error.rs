use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{0}")]
    Dimension(String),
    #[error("bad idx magic: expected {expected:#010x}, found {found:#010x}")]
    IdxMagic { expected: u32, found: u32 },
    #[error("truncated idx stream: expected {expected} payload bytes, found {found}")]
    IdxTruncated { expected: usize, found: usize },
    #[error("label {value} out of range 0..=9 at index {index}")]
    LabelRange { value: u8, index: usize },
    #[error("{0}")]
    Validation(String),
    #[error("class subset {0:?} produced no examples")]
    EmptySubset(Vec<u8>),
    #[error("non-finite {what} in layer `{layer}` at step {step}")]
    NonFinite {
        what: &'static str,
        layer: String,
        step: u64,
    },
    #[error("cannot convert layer `{0}` to a spiking stage")]
    UnsupportedLayer(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
