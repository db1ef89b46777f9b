//! Time propagation of the master equation with observable recording.

mod integrate;
mod trajectory;

pub use integrate::{evolve, IntegratorConfig, Method, Observer};
pub use trajectory::{compute_p_sink, NegativitySeries, Snapshot, Trajectory, ValiditySummary};
