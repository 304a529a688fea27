//! Cell-transmission freeway corridor with metered on-ramps.
//!
//! Cells carry real-valued vehicle counts. Each step computes demand and
//! supply from a triangular fundamental diagram, moves `min(D, S)` between
//! neighbours, serves the mainline first at merges and lets ramps use the
//! residual supply. Off-ramps take a fixed share of a cell's outflow.

mod presets;
mod scenario;
mod sim;

pub use presets::{ramp_corridor, single_ramp_step};
pub use scenario::{
    ArrivalProcess, CellSpec, DemandStep, DetectorKind, DetectorLocation, DetectorSpec, FreewayScenario, GeometryVersion,
    MeterMode, OffRampSpec, RampSpec, SourceDemand, MAINLINE, profile_probability,
};
pub use sim::{DetectorReading, FreewayMetrics, FreewaySim};
