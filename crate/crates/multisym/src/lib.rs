//! Canonical geometry of restricted multicotangent bundles and numerical
//! verification of the equivalent Hamiltonian formulations of classical
//! field equations.

pub mod alternating;
pub mod bundle;
pub mod charts;
pub mod cli;
pub mod equations;
pub mod error;
pub mod expr;
pub mod nplectic;
pub mod problem;
pub mod report;
pub mod scalar;
pub mod sections;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Concrete double-precision aliases for the generic core types.
pub type Form = alternating::AlternatingForm<f64>;
pub type MultiVec = alternating::MultiVector<f64>;
pub type Domain = charts::ChartedDomain<f64>;
pub type Map = charts::SmoothMap<f64>;
pub type FormField64 = charts::FormField<f64>;
pub type Diff = charts::DiffConfig<f64>;
pub type HamiltonVolterra = bundle::HamiltonVolterraFunction<f64>;
