//! Exact measure data and Lorentz-space machinery for composition operators
//! on purely atomic measure spaces.
//!
//! Every measure of a set, preimage or image is an exact rational. Lorentz
//! norms involve real powers of those rationals and are returned as
//! [`CertifiedReal`] values carrying an explicit absolute error bound.
//!
//! Asymptotic properties (Li-Yorke chaos, expansivity) are rendered as
//! finite-horizon [`Verdict`]s backed by exact evidence: eventual-zero and
//! periodicity proofs where the set dynamics admit them, and geometric trend
//! certificates otherwise.

pub mod atom;
pub mod chaos;
pub mod error;
pub mod expansivity;
pub mod measure;
pub mod norm;
pub mod operators;
pub mod oracle;
pub mod rational;
pub mod rearrangement;
pub mod sequence;
pub mod simple;
pub mod transform;
pub mod verdict;

pub use atom::AtomId;
pub use error::{Error, Result};
pub use measure::{Family, MeasurableSet, MeasureSpace, SpaceWindow, TotalMass};
pub use norm::{CertifiedReal, Exponent, LorentzIndex};
pub use rational::Rational;
pub use rearrangement::StepFunction;
pub use simple::SimpleFunction;
pub use transform::Transformation;
pub use verdict::{Status, Verdict};
