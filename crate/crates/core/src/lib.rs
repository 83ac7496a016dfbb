//! Three-qubit quantum absorption refrigerator coupled to Kerr-type
//! anharmonic baths.
//!
//! The physics modules are generic over `f32`/`f64`; the aliases below fix
//! the scalar for the common cases. [`experiments`] is `f64` only.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod liouvillian;
pub mod observables;
pub mod operators;
pub mod scalar;

pub use error::{Error, Result};

pub type RefrigeratorSpecF64 = operators::RefrigeratorSpec<f64>;
pub type RefrigeratorSpecF32 = operators::RefrigeratorSpec<f32>;
pub type BathSpecF64 = bath::BathSpec<f64>;
pub type BathSpecF32 = bath::BathSpec<f32>;
pub type BathsF64 = liouvillian::Baths<f64>;
pub type BathsF32 = liouvillian::Baths<f32>;
pub type GeneratorF64 = liouvillian::Generator<f64>;
pub type GeneratorF32 = liouvillian::Generator<f32>;
pub type DensityMatrixF64 = dynamics::DensityMatrix<f64>;
pub type DensityMatrixF32 = dynamics::DensityMatrix<f32>;
pub type OperatorF64 = scalar::Operator<f64>;
pub type OperatorF32 = scalar::Operator<f32>;
pub type ThermoReadoutF64 = observables::ThermoReadout<f64>;
pub type ThermoReadoutF32 = observables::ThermoReadout<f32>;
