//! Physical parameters of the synthetic single-track vehicle.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Planar single-track (bicycle) model parameters.
///
/// Defaults are sized to a GT3-like car: 1300 kg, 2.7 m wheelbase, drag
/// balance near 280 km/h in top gear, lateral grip a bit under 2 g. That
/// keeps every nondimensionalized channel inside (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleTrackParams {
    /// Vehicle mass, kg.
    pub mass_kg: f64,
    /// Yaw moment of inertia, kg m^2.
    pub yaw_inertia_kgm2: f64,
    /// Center of gravity to front axle, m.
    pub dist_front_m: f64,
    /// Center of gravity to rear axle, m.
    pub dist_rear_m: f64,
    /// Front axle cornering stiffness, N/rad.
    pub cornering_stiffness_front: f64,
    /// Rear axle cornering stiffness, N/rad.
    pub cornering_stiffness_rear: f64,
    /// Smooth lateral force saturation cap per axle, N.
    pub tire_force_cap_n: f64,
    /// Drive force at full throttle before the gear multiplier, N.
    pub drive_force_n: f64,
    /// Brake force at full brake, N.
    pub brake_force_n: f64,
    /// Aerodynamic drag, N per (m/s)^2.
    pub drag_coeff: f64,
    /// Drive force multiplier per gear, index 0 = first gear.
    pub gear_ratios: [f64; 6],
    /// Steering wheel degrees per road-wheel degree.
    pub steering_ratio: f64,
}

impl Default for SingleTrackParams {
    fn default() -> Self {
        Self {
            mass_kg: 1300.0,
            yaw_inertia_kgm2: 1700.0,
            dist_front_m: 1.25,
            dist_rear_m: 1.45,
            cornering_stiffness_front: 160_000.0,
            cornering_stiffness_rear: 170_000.0,
            tire_force_cap_n: 11_000.0,
            drive_force_n: 8_000.0,
            brake_force_n: 24_000.0,
            drag_coeff: 1.05,
            gear_ratios: [3.0, 2.2, 1.7, 1.3, 1.0, 0.8],
            steering_ratio: 11.0,
        }
    }
}

impl SingleTrackParams {
    /// Distance between the axles.
    pub fn wheelbase_m(&self) -> f64 {
        self.dist_front_m + self.dist_rear_m
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass_kg", self.mass_kg),
            ("yaw_inertia_kgm2", self.yaw_inertia_kgm2),
            ("dist_front_m", self.dist_front_m),
            ("dist_rear_m", self.dist_rear_m),
            ("cornering_stiffness_front", self.cornering_stiffness_front),
            ("cornering_stiffness_rear", self.cornering_stiffness_rear),
            ("tire_force_cap_n", self.tire_force_cap_n),
            ("drive_force_n", self.drive_force_n),
            ("brake_force_n", self.brake_force_n),
            ("drag_coeff", self.drag_coeff),
            ("steering_ratio", self.steering_ratio),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "vehicle parameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        for (i, r) in self.gear_ratios.iter().enumerate() {
            if !(*r > 0.0) || !r.is_finite() {
                return Err(Error::Config(format!(
                    "gear ratio {} must be strictly positive, got {r}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}
