//! Maneuver scripting: piecewise control schedules for the simulator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ControlVector;
use crate::{Error, Result};

/// Control value over one segment's local time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Constant(f64),
    /// Linear ramp across the whole segment.
    Ramp { from: f64, to: f64 },
    /// `amplitude * sin(2 pi freq t + phase)`.
    Sine {
        amplitude: f64,
        freq_hz: f64,
        phase_rad: f64,
    },
}

impl Schedule {
    fn value_at(&self, local_t: f64, duration: f64) -> f64 {
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Ramp { from, to } => {
                if duration > 0.0 {
                    from + (to - from) * (local_t / duration).clamp(0.0, 1.0)
                } else {
                    to
                }
            }
            Schedule::Sine {
                amplitude,
                freq_hz,
                phase_rad,
            } => amplitude * (2.0 * std::f64::consts::PI * freq_hz * local_t + phase_rad).sin(),
        }
    }

    /// Analytic value range over a segment.
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Schedule::Constant(v) => (v, v),
            Schedule::Ramp { from, to } => (from.min(to), from.max(to)),
            Schedule::Sine { amplitude, .. } => (-amplitude.abs(), amplitude.abs()),
        }
    }

    fn is_zero(&self) -> bool {
        self.bounds() == (0.0, 0.0)
    }
}

/// One scripted stretch: all four controls over `duration_s` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: f64,
    pub throttle: Schedule,
    pub brake: Schedule,
    pub steering: Schedule,
    /// Gear held over the segment, 1..=6.
    pub gear: u8,
}

impl Segment {
    fn zero_hold(duration_s: f64) -> Self {
        Segment {
            duration_s,
            throttle: Schedule::Constant(0.0),
            brake: Schedule::Constant(0.0),
            steering: Schedule::Constant(0.0),
            gear: 1,
        }
    }

    fn is_zero_hold(&self) -> bool {
        self.throttle.is_zero() && self.brake.is_zero() && self.steering.is_zero()
    }

    fn validate(&self, index: usize) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Config(format!(
                "segment {index}: duration must be positive, got {}",
                self.duration_s
            )));
        }
        let checks = [
            ("throttle", self.throttle, 0.0, 100.0),
            ("brake", self.brake, 0.0, 100.0),
            ("steering", self.steering, -179.999, 179.999),
        ];
        for (name, sched, lo, hi) in checks {
            let (s_lo, s_hi) = sched.bounds();
            if s_lo < lo || s_hi > hi {
                return Err(Error::Config(format!(
                    "segment {index}: {name} range [{s_lo}, {s_hi}] leaves its domain [{lo}, {hi}]"
                )));
            }
        }
        if !(1..=6).contains(&self.gear) {
            return Err(Error::Config(format!(
                "segment {index}: gear {} outside 1..=6",
                self.gear
            )));
        }
        Ok(())
    }
}

/// Piecewise control schedule covering a full acquisition, standstill to
/// standstill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverScript {
    pub segments: Vec<Segment>,
}

impl ManeuverScript {
    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    /// Controls at absolute time `t`; beyond the end the final values hold.
    pub fn control_at(&self, t: f64) -> ControlVector {
        let mut start = 0.0;
        let mut chosen = self.segments.last().expect("validated scripts are non-empty");
        let mut local = chosen.duration_s;
        for seg in &self.segments {
            if t < start + seg.duration_s {
                chosen = seg;
                local = t - start;
                break;
            }
            start += seg.duration_s;
        }
        ControlVector {
            u_t: chosen.throttle.value_at(local, chosen.duration_s),
            u_b: chosen.brake.value_at(local, chosen.duration_s),
            u_s: chosen.steering.value_at(local, chosen.duration_s),
            u_g: chosen.gear as f64,
        }
    }

    /// Segment-level checks: every schedule stays inside its control domain
    /// and the script begins and ends with a settling zero-control hold.
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Config("script has no segments".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            seg.validate(i)?;
        }
        let first = self.segments.first().unwrap();
        let last = self.segments.last().unwrap();
        for (name, seg) in [("first", first), ("last", last)] {
            if !seg.is_zero_hold() || seg.duration_s < 0.5 {
                return Err(Error::Config(format!(
                    "{name} segment must be an all-zero hold of at least 0.5 s \
                     so the run settles at a standstill"
                )));
            }
        }
        Ok(())
    }

    /// Number of sinusoidal-steering segments.
    pub fn count_sine_steering(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| matches!(s.steering, Schedule::Sine { amplitude, .. } if amplitude != 0.0))
            .count()
    }

    /// Number of braking segments.
    pub fn count_braking(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.brake.bounds().1 > 0.0)
            .count()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("cannot serialize script: {e}")))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let script: ManeuverScript =
            toml::from_str(text).map_err(|e| Error::Parse(format!("cannot parse script: {e}")))?;
        script.validate()?;
        Ok(script)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Crude longitudinal speed bookkeeping used while planning segments, so the
/// generated maneuvers stay inside a sane envelope. Nominal GT3-like forces;
/// the simulator itself is the ground truth.
fn estimate_speed_after(v0: f64, seg: &Segment) -> f64 {
    let mut v = v0;
    let steps = (seg.duration_s / 0.1).ceil() as usize;
    let dt = seg.duration_s / steps as f64;
    let ratio = [3.0, 2.2, 1.7, 1.3, 1.0, 0.8][(seg.gear - 1) as usize];
    for i in 0..steps {
        let t = (i as f64 + 0.5) * dt;
        let thr = seg.throttle.value_at(t, seg.duration_s);
        let brk = seg.brake.value_at(t, seg.duration_s);
        let a = thr / 100.0 * 6.15 * ratio - brk / 100.0 * 18.5 - 8.1e-4 * v * v;
        v = (v + a * dt).max(0.0);
    }
    v
}

/// Deterministic training maneuver generator.
///
/// Concatenates the maneuver families used for system identification:
/// constant-gear driving, sinusoidal steering at randomized frequency
/// (0.2..2 Hz) and amplitude, throttle bursts and braking ramps at varying
/// gears and intensities. Starts and ends at a standstill.
pub fn build_training_script(seed: u64, duration_s: f64) -> Result<ManeuverScript> {
    if !(duration_s >= 30.0) {
        return Err(Error::Config(format!(
            "training scripts need at least 30 s, got {duration_s}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments: Vec<Segment> = Vec::new();
    let mut used = 0.0;
    let push = |segments: &mut Vec<Segment>, used: &mut f64, v: &mut f64, seg: Segment| {
        *used += seg.duration_s;
        *v = estimate_speed_after(*v, &seg);
        segments.push(seg);
    };
    let mut v_est = 0.0;

    // Settle at standstill, then launch through the first gears.
    push(&mut segments, &mut used, &mut v_est, Segment::zero_hold(1.0));
    push(
        &mut segments,
        &mut used,
        &mut v_est,
        Segment {
            duration_s: 1.0,
            throttle: Schedule::Ramp { from: 0.0, to: 75.0 },
            brake: Schedule::Constant(0.0),
            steering: Schedule::Constant(0.0),
            gear: 1,
        },
    );
    push(
        &mut segments,
        &mut used,
        &mut v_est,
        Segment {
            duration_s: 1.5,
            throttle: Schedule::Constant(75.0),
            brake: Schedule::Constant(0.0),
            steering: Schedule::Constant(0.0),
            gear: 2,
        },
    );
    push(
        &mut segments,
        &mut used,
        &mut v_est,
        Segment {
            duration_s: 1.5,
            throttle: Schedule::Constant(70.0),
            brake: Schedule::Constant(0.0),
            steering: Schedule::Constant(0.0),
            gear: 3,
        },
    );

    // Main maneuver blocks; the shutdown tail needs this much room.
    const SHUTDOWN_S: f64 = 8.0;
    let mut first_block = true;
    loop {
        let remaining = duration_s - used - SHUTDOWN_S;
        if remaining < 8.5 {
            break;
        }
        // Keep speed inside a workable band, otherwise pick freely.
        let kind = if v_est > 50.0 {
            2
        } else if v_est < 18.0 {
            1
        } else if first_block {
            0
        } else {
            rng.gen_range(0..5u8)
        };
        first_block = false;
        let seg = match kind {
            // Sinusoidal steering at cruise throttle, whole periods so the
            // wheel returns to center.
            0 | 3 => {
                let freq = rng.gen_range(0.2..2.0);
                let target = rng.gen_range(3.0..6.0f64);
                let periods = (target * freq).round().max(1.0);
                let dur = (periods / freq).min(8.0);
                let amplitude = rng.gen_range(15.0..90.0);
                let cruise = (8.1e-4 * v_est * v_est / (6.15 * 1.3) * 100.0).clamp(5.0, 60.0);
                let throttle = if kind == 3 {
                    rng.gen_range(20.0..50.0)
                } else {
                    cruise
                };
                Segment {
                    duration_s: dur,
                    throttle: Schedule::Constant(throttle),
                    brake: Schedule::Constant(0.0),
                    steering: Schedule::Sine {
                        amplitude,
                        freq_hz: freq,
                        phase_rad: 0.0,
                    },
                    gear: 4,
                }
            }
            // Throttle burst at a random gear.
            1 => Segment {
                duration_s: rng.gen_range(1.5..3.5),
                throttle: Schedule::Constant(rng.gen_range(55.0..100.0)),
                brake: Schedule::Constant(0.0),
                steering: Schedule::Constant(0.0),
                gear: rng.gen_range(3..=5),
            },
            // Braking ramp at varying gear and intensity.
            2 => Segment {
                duration_s: rng.gen_range(1.0..2.5),
                throttle: Schedule::Constant(0.0),
                brake: Schedule::Ramp {
                    from: 10.0,
                    to: rng.gen_range(30.0..85.0),
                },
                steering: Schedule::Constant(0.0),
                gear: rng.gen_range(2..=4),
            },
            // Coast.
            _ => Segment {
                duration_s: rng.gen_range(0.8..1.5),
                throttle: Schedule::Constant(0.0),
                brake: Schedule::Constant(0.0),
                steering: Schedule::Constant(0.0),
                gear: 4,
            },
        };
        if used + seg.duration_s + SHUTDOWN_S > duration_s {
            break;
        }
        push(&mut segments, &mut used, &mut v_est, seg);
    }

    // Shutdown: brake to a crawl from any speed, then settle.
    push(
        &mut segments,
        &mut used,
        &mut v_est,
        Segment {
            duration_s: 2.5,
            throttle: Schedule::Constant(0.0),
            brake: Schedule::Ramp { from: 15.0, to: 75.0 },
            steering: Schedule::Constant(0.0),
            gear: 3,
        },
    );
    push(
        &mut segments,
        &mut used,
        &mut v_est,
        Segment {
            duration_s: 3.5,
            throttle: Schedule::Constant(0.0),
            brake: Schedule::Constant(75.0),
            steering: Schedule::Constant(0.0),
            gear: 2,
        },
    );
    let tail = (duration_s - used).max(0.5);
    push(
        &mut segments,
        &mut used,
        &mut v_est,
        Segment::zero_hold(tail),
    );

    let script = ManeuverScript { segments };
    script.validate()?;
    Ok(script)
}
