//! Branching mechanisms and their Lévy measures.

mod branching;
mod levy;

pub use branching::{AssumptionReport, BranchingMechanism, Criticality, Region, Verdict};
pub use levy::{Boundary, Cutoff, LevyFamily, LevyMeasure};
