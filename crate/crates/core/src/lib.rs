//! Variational denoising with a joint regulariser built from the natural
//! first-order operators (curl, divergence and the two shears) of an
//! auxiliary vector field.
//!
//! The model is
//!
//! ```text
//! min_{u, w} ½‖u − f‖² + α‖∇u − w‖₂,₁ + α‖(√β1 curl w, √β2 div w, √β3 sh1 w, √β4 sh2 w)‖₂,₁
//! ```
//!
//! solved by an adaptive primal-dual iteration. Choosing `β = (0, ½, ½, ½)`
//! recovers second-order TGV; see [`models`] for the other named presets.

pub mod diffops;
pub mod field;
pub mod imaging;
pub mod metrics;
pub mod models;
pub mod regularizer;
pub mod solver;
pub mod sweep;

/// Library version, recorded in provenance files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use diffops::{Axis, BoundaryScheme, DiscretizationVariant, LinearMap};
pub use field::{Field, FieldError, QuadField, ScalarField, Shape, Space, SymField, VectorField};
pub use imaging::{BitDepth, ImagingError, NoiseSpec, SyntheticKind, SyntheticSpec};
pub use metrics::{MetricError, QualityTriple};
pub use models::{ModelError, ModelName, PresetOverrides};
pub use regularizer::{BetaVector, Energy, RegularizerError};
pub use solver::{solve, SolverConfig, SolverError, SolverReport};
pub use sweep::{SweepError, SweepPlan, SweepRecord};
