use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{value} is not coprime to the modulus {modulus}")]
    NotCoprime { value: i128, modulus: u64 },
    #[error("diagonal parameter must be positive, got {0}")]
    NonPositiveDiagonal(f64),
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    #[error("prime {prime} divides the modulus {modulus}")]
    PrimeDividesModulus { prime: u64, modulus: u64 },
    #[error("kernel radius {0} exceeds the certified enumeration bound 3")]
    RadiusTooLarge(f64),
    #[error("observable factors overlap: {0}")]
    OverlappingFactors(String),
    #[error("empty sample set")]
    EmptySet,
    #[error("matrix is not expanding: {0}")]
    NotExpanding(String),
    #[error("no primes below {cutoff} coprime to {modulus}")]
    NoPrimesAvailable { modulus: u64, cutoff: f64 },
    #[error("insufficient data for a rate fit: {0} usable points, need 3")]
    InsufficientData(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
