//! Per-channel nondimensionalization.
//!
//! Model inputs and outputs are order-one: every channel is divided by a
//! fixed reference magnitude before entering the network and multiplied back
//! when leaving it. Channel order everywhere in the crate is
//! `[u_t, u_b, u_s, u_g, a_x, a_y, yaw_rate, v_x]`; the last four are the
//! state channels.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of model channels (4 controls + 4 states).
pub const NUM_CHANNELS: usize = 8;
/// Number of state channels (`a_x`, `a_y`, `yaw_rate`, `v_x`).
pub const NUM_STATES: usize = 4;

/// Reference magnitudes for nondimensionalization.
///
/// The acceleration factors are expressed as multiples of `gravity` so that
/// the conventional "2 g" reference stays meaningful if gravity is overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingTable {
    /// Throttle percentage reference.
    pub u_t: f64,
    /// Brake percentage reference.
    pub u_b: f64,
    /// Steering wheel angle reference, degrees.
    pub u_s_deg: f64,
    /// Gear reference (highest gear).
    pub u_g: f64,
    /// Longitudinal acceleration reference, multiples of `gravity`.
    pub a_x_g: f64,
    /// Lateral acceleration reference, multiples of `gravity`.
    pub a_y_g: f64,
    /// Yaw rate reference, degrees per second.
    pub yaw_rate_deg_s: f64,
    /// Longitudinal velocity reference, km/h.
    pub v_x_kmh: f64,
    /// Standard gravity, m/s^2.
    pub gravity: f64,
}

impl Default for ScalingTable {
    fn default() -> Self {
        Self {
            u_t: 100.0,
            u_b: 100.0,
            u_s_deg: 250.0,
            u_g: 6.0,
            a_x_g: 2.0,
            a_y_g: 2.0,
            yaw_rate_deg_s: 60.0,
            v_x_kmh: 280.0,
            gravity: 9.81,
        }
    }
}

impl ScalingTable {
    /// Effective divisor per channel, in canonical channel order.
    pub fn factors(&self) -> [f64; NUM_CHANNELS] {
        [
            self.u_t,
            self.u_b,
            self.u_s_deg,
            self.u_g,
            self.a_x_g * self.gravity,
            self.a_y_g * self.gravity,
            self.yaw_rate_deg_s,
            self.v_x_kmh,
        ]
    }

    /// Effective divisor for the four state channels.
    pub fn state_factors(&self) -> [f64; NUM_STATES] {
        let f = self.factors();
        [f[4], f[5], f[6], f[7]]
    }

    /// All factors must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("u_t", self.u_t),
            ("u_b", self.u_b),
            ("u_s_deg", self.u_s_deg),
            ("u_g", self.u_g),
            ("a_x_g", self.a_x_g),
            ("a_y_g", self.a_y_g),
            ("yaw_rate_deg_s", self.yaw_rate_deg_s),
            ("v_x_kmh", self.v_x_kmh),
            ("gravity", self.gravity),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Config(format!(
                    "scaling factor {name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Physical units -> dimensionless, element-wise.
    pub fn scale(&self, record: &[f64; NUM_CHANNELS]) -> [f64; NUM_CHANNELS] {
        let f = self.factors();
        std::array::from_fn(|i| record[i] / f[i])
    }

    /// Dimensionless -> physical units, element-wise.
    pub fn unscale(&self, record: &[f64; NUM_CHANNELS]) -> [f64; NUM_CHANNELS] {
        let f = self.factors();
        std::array::from_fn(|i| record[i] * f[i])
    }

    /// State channels only, physical -> dimensionless.
    pub fn scale_state(&self, state: &[f64; NUM_STATES]) -> [f64; NUM_STATES] {
        let f = self.state_factors();
        std::array::from_fn(|i| state[i] / f[i])
    }

    /// State channels only, dimensionless -> physical.
    pub fn unscale_state(&self, state: &[f64; NUM_STATES]) -> [f64; NUM_STATES] {
        let f = self.state_factors();
        std::array::from_fn(|i| state[i] * f[i])
    }
}
