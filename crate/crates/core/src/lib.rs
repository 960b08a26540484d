//! Isoperimetric multi-bubble configurations on the weighted real line.
//!
//! The crate models labeled interval configurations under symmetric,
//! radially increasing densities with a zero at the origin, and provides:
//!
//! * [`density`]: built-in density families, weighted mass, inverse mass;
//! * [`configuration`]: labeled configurations, perimeter and mass
//!   functionals, the standard configuration builder, structure
//!   classification;
//! * [`moves`]: mass-preserving, perimeter-non-increasing rewrites
//!   (consolidate, transpose, alternating elimination, cross-origin merge)
//!   and the fixpoint reduction loop;
//! * [`flow`]: first-variation endpoint dynamics at speed 1/f with mass and
//!   perimeter instrumentation and event detection;
//! * [`optimizer`]: enumeration of competitor side assignments, desk-scale
//!   verification that the standard configuration minimizes perimeter,
//!   bifurcation sweeps, and the mass-inflation experiment.

pub mod configuration;
pub mod density;
pub mod error;
pub mod flow;
pub mod moves;
pub mod optimizer;
pub mod scenarios;

pub use crate::configuration::{
    Configuration, Interval, MassSpec, Orientation, RegionId, StructureReport,
};
pub use crate::density::{Density, DensityFlags, Direction, FlagReport, QuadratureSettings};
pub use crate::error::{Error, Result};
pub use crate::flow::{FlowOutcome, FlowSettings, FlowState, StopCondition, StopReason};
pub use crate::moves::MoveReport;
pub use crate::optimizer::{
    BifurcationReport, GridSpec, InflationTable, SignAssignment, VerificationReport,
};

#[cfg(feature = "parallel")]
pub(crate) fn parallel_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn parallel_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
