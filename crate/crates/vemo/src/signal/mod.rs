//! Digital signal layer: Butterworth lowpass design, zero-phase filtering,
//! Welch spectral estimation and the nondimensional channel scaling used by
//! every other module.
//!
//! All operations here are pure functions over immutable inputs; filters and
//! scaling tables are freely shareable across threads once built.

mod butterworth;
mod psd;
mod scaling;

pub use butterworth::{Biquad, SosFilter};
pub use psd::{welch_psd, PsdEstimate};
pub use scaling::ScalingTable;
