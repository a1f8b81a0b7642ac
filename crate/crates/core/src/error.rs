use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("LFSR seed must be nonzero")]
    ZeroSeed,
    #[error("polynomial {poly:#x} is not primitive of order {order}")]
    NotPrimitive { order: u32, poly: u64 },
    #[error("guard interval of {nu} samples cannot hold a {n_pn}-chip sequence")]
    GuardTooShort { nu: usize, n_pn: usize },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("channel length {len} exceeds FFT size {n_fft}")]
    ChannelTooLong { len: usize, n_fft: usize },
    #[error("PN spectrum has a null at bin {bin}")]
    SpectralNull { bin: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pilot plan: {0}")]
    PilotPlan(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PilotPlan(_) | Error::GuardTooShort { .. } | Error::ChannelTooLong { .. } => 3,
            _ => 2,
        }
    }
}
