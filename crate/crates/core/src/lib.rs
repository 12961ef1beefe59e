//! Distributional laws of continuous-state branching processes.

pub mod config;
pub mod error;
pub mod laplace;
pub mod maxjump;
pub mod mechanism;
pub mod ode;
pub mod quad;
pub mod real;
pub mod roots;
pub mod simulate;
pub mod validate;

pub use config::{LevyConfig, MechanismConfig};
pub use error::{Error, Result};
pub use mechanism::{
    AssumptionReport, Boundary, BranchingMechanism, Criticality, Cutoff, LevyFamily, LevyMeasure, Region, Verdict,
};
pub use real::{Extended, Real};

/// Double-precision branching mechanism.
pub type Mechanism = BranchingMechanism<f64>;
pub type Levy = LevyMeasure<f64>;
pub type Mechanism32 = BranchingMechanism<f32>;
pub type Levy32 = LevyMeasure<f32>;
