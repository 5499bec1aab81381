//! Synthetic telemetry: a nonlinear single-track vehicle simulator plus
//! maneuver scripting. Stands in for track acquisitions so the whole
//! pipeline is reproducible at desk scale.

mod params;
mod script;
mod sim;

pub use params::SingleTrackParams;
pub use script::{build_training_script, ManeuverScript, Schedule, Segment};
pub use sim::{add_measurement_noise, derivatives, rk4_step, simulate, SimState};
