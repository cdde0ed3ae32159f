use thiserror::Error;

pub type Result<T, E = SedError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SedError {
    #[error("position |r| = {radius:e} is below the singularity floor {floor:e} (t = {t})")]
    Singular { radius: f64, floor: f64, t: f64 },

    #[error("energy {energy} is not bound; the Keplerian frequency is undefined")]
    Unbound { energy: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cutoff {cutoff} exceeds the top of the frequency grid {omega_max}")]
    GridTooShort { cutoff: f64, omega_max: f64 },

    #[error("time {t} lies outside the sampled span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    #[error("{what} is outside the domain of the distribution: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint was written for a different configuration (hash {found:016x}, expected {expected:016x})")]
    ConfigMismatch { found: u64, expected: u64 },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint digest mismatch; the file is corrupt")]
    Corrupt,
    #[error("checkpoint field is malformed: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(String),
}
