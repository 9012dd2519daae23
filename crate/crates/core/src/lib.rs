//! Metamorphic testing pipeline: an MR description language, a SUT registry,
//! seeded test data, trial execution, constraint mining and mutation analysis.
//!
//! Numeric kernels (transformations, relation evaluation, builtin SUTs) are
//! generic over [`scalar::Scalar`] (`f32` or `f64`); trial logs, features and
//! reports are `f64`.

pub mod campaign;
pub mod catalog;
pub mod datagen;
pub mod digest;
pub mod dsl;
pub mod executor;
pub mod input;
pub mod miner;
pub mod mutation;
pub mod scalar;
pub mod seed;
pub mod sut;

pub use scalar::Scalar;

pub type Input64 = input::Input<f64>;
pub type Input32 = input::Input<f32>;
pub type BoundMr64 = dsl::BoundMr<f64>;
pub type BoundMr32 = dsl::BoundMr<f32>;
pub type BoundExpr64 = dsl::BoundExpr<f64>;
pub type BoundExpr32 = dsl::BoundExpr<f32>;
pub type BuiltinSut64 = sut::builtin::BuiltinSut<f64>;
pub type BuiltinSut32 = sut::builtin::BuiltinSut<f32>;
