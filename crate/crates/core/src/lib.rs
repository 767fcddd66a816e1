//! Exact thermodynamics of nucleic-acid strand systems: structure
//! enumeration, energy models, brute-force oracles for MFE / PF / density of
//! states, oracle reductions between them, candidate energy levels and
//! generators for counting-hard instances.

pub mod energy;
pub mod error;
pub mod exact;
pub mod hardness;
pub mod levels;
pub mod oracle;
pub mod reductions;
pub mod scalar;
pub mod strand;
pub mod structure;

pub use energy::{Energy, EnergyModel, NNParams};
pub use error::{Error, Result};
pub use levels::LevelSet;
pub use oracle::{BruteOracle, DensityOfStates, ThermoOracle, Weighting};
pub use scalar::Scalar;
pub use strand::{Base, BasePair, BaseRef, SecondaryStructure, Strand, StrandOrdering, StrandSystem};
pub use structure::StructureSpace;

/// Exact rational scalar used wherever results must be bit-exact.
pub type Rational = num_rational::BigRational;
/// Structure counts.
pub type Count = num_bigint::BigInt;

pub type ExactOracle = BruteOracle<Rational>;
pub type ApproxOracle = BruteOracle<f64>;
pub type ApproxOracle32 = BruteOracle<f32>;
