use thiserror::Error;

use crate::atom::AtomId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("measure space needs at least one atom")]
    EmptySpace,
    #[error("duplicate atom {0}")]
    DuplicateAtom(AtomId),
    #[error("atom {0} has non-positive weight")]
    NonPositiveWeight(AtomId),
    #[error("invalid family parameter: {0}")]
    InvalidFamily(String),
    #[error("atom {0} is not in the space")]
    AtomNotInSpace(AtomId),
    #[error("transformation does not fit the space: {0}")]
    IncompatibleMap(String),
    #[error("function value at {0} is negative")]
    NegativeValue(AtomId),
    #[error("invalid Lorentz index: {0}")]
    InvalidIndex(String),
    #[error("measure must be positive")]
    NonPositiveMeasure,
    #[error("time argument must be positive")]
    NonPositiveTime,
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("horizon {got} is shorter than the required {min}")]
    HorizonTooShort { min: usize, got: usize },
    #[error("window must contain at least one atom")]
    EmptyWindow,
    #[error("transformation is not injective: {first} and {second} both map to {image}")]
    NotInjective { first: AtomId, second: AtomId, image: AtomId },
    #[error("transformation is not invertible on this space")]
    NotInvertible,
    #[error("total mass of the space is infinite")]
    InfiniteMass,
    #[error("sample is not on the unit sphere (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("{count} subsets exceed the enumeration guard of {limit}")]
    SubsetExplosion { count: u128, limit: u128 },
    #[error("subset size {size} exceeds the limit of {max}")]
    SetSizeTooLarge { size: usize, max: usize },
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("ratio target must exceed 1")]
    InvalidTarget,
    #[error("thresholds must satisfy 0 <= low < high")]
    InvalidThresholds,
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
    #[error("cannot parse atom id from {0:?}")]
    ParseAtom(String),
}
