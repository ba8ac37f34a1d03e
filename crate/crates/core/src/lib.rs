//! Physics-informed porosity modeling for laser powder bed fusion.
//!
//! Machine settings are turned into laser energy density and radiation
//! pressure features, porosity regressors are trained on them under
//! N-fold cross-validation, and pore suppressing / encouraging ranges of
//! each physical effect are located on normalized physics-porosity maps.
//!
//! The numeric modules are generic over [`Real`]; the aliases at the crate
//! root fix the scalar to `f64`, which the pipeline modules use.

// `!(x > 0)` guards reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod dataio;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod geometry;
pub mod physics;
pub mod pipge;
pub mod regress;
pub mod scalar;

pub use error::{Error, Result};
pub use dataio::dataset::Dataset;
pub use dataio::{PorosityRecord, PorosityTarget};
pub use scalar::Real;

pub type BuildSetup = geometry::BuildSetup<f64>;
pub type LaserSpec = geometry::LaserSpec<f64>;
pub type PartInstance = geometry::PartInstance<f64>;
pub type LayerPoint = geometry::LayerPoint<f64>;
pub type PhysicalConstants = physics::PhysicalConstants<f64>;
pub type PointEffects = physics::PointEffects<f64>;
pub type PhysicsProfile = features::PhysicsProfile<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type Normalizer = features::Normalizer<f64>;
pub type KernelSpec = regress::kernel::KernelSpec<f64>;
pub type SvrHyper = regress::svr::SvrHyper<f64>;
pub type GprHyper = regress::gpr::GprHyper<f64>;
pub type Hyperparameters = regress::Hyperparameters<f64>;
pub type TrainedModel = regress::TrainedModel<f64>;
