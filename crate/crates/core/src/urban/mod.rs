//! Store-and-forward arterial network with signalised intersections.
//!
//! Vehicles enter a link, travel its free-flow time in a delay line and then
//! join the link's queue. A queue discharges at saturation flow while one of
//! the phases serving the link shows green, as long as every downstream link
//! named in its turn split has room. Turn splits are applied as expected
//! values, so the only randomness is in the arrivals.

mod network;
mod preset;
mod signal;
mod sim;

pub use network::{IntersectionSpec, LinkSpec, Target, TurnSpec, UrbanNetwork, UrbanSource, EXIT};
pub use preset::arterial_corridor;
pub use signal::{Color, SignalPlan};
pub use sim::{LinkSaturation, SpatEvent, UrbanMetrics, UrbanSim, QUEUE_SPACING_M};
