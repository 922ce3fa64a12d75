use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("beam pitch angle {0} rad is outside (0, pi/2)")]
    DegenerateGeometry(f64),
    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),
    #[error("normal matrix condition number {cond:.3e} exceeds 1e12; use a smaller window or a lower order")]
    IllConditioned { cond: f64 },
    #[error("window has {len} samples, at least {need} required")]
    WindowTooShort { len: usize, need: usize },
    #[error("window timestamps must be strictly increasing")]
    NonMonotonicTime,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid time step {0} s")]
    InvalidTimeStep(f64),
    #[error("attitude correction of {0:.3} rad exceeds the small-angle limit")]
    LargeAngle(f64),
    #[error("implausible DVL velocity magnitude {0:.3} m/s")]
    ImplausibleVelocity(f64),
    #[error("time {t} s is outside the segment [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("empty subspace basis")]
    EmptyBasis,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
