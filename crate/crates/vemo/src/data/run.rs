//! Telemetry runs: validated time series of control and state records.
//!
//! A run is a uniformly sampled sequence of `(ControlVector, StateVector)`
//! pairs that starts and ends with the vehicle at a standstill, so runs can
//! be concatenated without introducing nonphysical transients. Domain and
//! standstill rules are enforced at ingestion; derived data (filtered runs)
//! intentionally bypasses re-validation because lowpass filtering legitimately
//! produces fractional gears and slight domain overshoot.

use std::io::{Read, Write};

use crate::signal::{ScalingTable, SosFilter};
use crate::{Error, Result};

/// Standstill tolerances, applied to the first and last
/// [`STANDSTILL_SAMPLES`] samples of every ingested run.
pub const STANDSTILL_V_X_KMH: f64 = 0.5;
pub const STANDSTILL_ACCEL_MS2: f64 = 0.2;
pub const STANDSTILL_YAW_RATE_DEG_S: f64 = 0.5;
pub const STANDSTILL_SAMPLES: usize = 10;

/// Permitted timestamp jitter around the uniform grid, seconds.
const TIMESTAMP_JITTER_S: f64 = 1e-6;

/// Vehicle state channels (IMU and speedometer outputs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    /// Longitudinal acceleration, m/s^2.
    pub a_x: f64,
    /// Lateral acceleration, m/s^2.
    pub a_y: f64,
    /// Yaw rate, deg/s.
    pub yaw_rate: f64,
    /// Longitudinal velocity, km/h.
    pub v_x: f64,
}

/// Driver control channels.
///
/// The gear is stored as a float so that filtered runs (where the channel is
/// smoothed) share the same representation; ingestion validates integrality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlVector {
    /// Throttle percentage, 0..=100.
    pub u_t: f64,
    /// Brake percentage, 0..=100.
    pub u_b: f64,
    /// Steering wheel angle, deg, in (-180, 180).
    pub u_s: f64,
    /// Engaged gear, 1..=6.
    pub u_g: f64,
}

/// One telemetry sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub control: ControlVector,
    pub state: StateVector,
}

impl Record {
    /// Canonical channel order `[u_t, u_b, u_s, u_g, a_x, a_y, yaw_rate, v_x]`.
    pub fn channels(&self) -> [f64; 8] {
        [
            self.control.u_t,
            self.control.u_b,
            self.control.u_s,
            self.control.u_g,
            self.state.a_x,
            self.state.a_y,
            self.state.yaw_rate,
            self.state.v_x,
        ]
    }

    pub fn from_channels(c: [f64; 8]) -> Self {
        Self {
            control: ControlVector {
                u_t: c[0],
                u_b: c[1],
                u_s: c[2],
                u_g: c[3],
            },
            state: StateVector {
                a_x: c[4],
                a_y: c[5],
                yaw_rate: c[6],
                v_x: c[7],
            },
        }
    }
}

/// Column mapping for telemetry CSVs. Defaults to the canonical header
/// `t,u_t,u_b,u_s,u_g,a_x,a_y,yaw_rate,v_x`.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub t: String,
    pub u_t: String,
    pub u_b: String,
    pub u_s: String,
    pub u_g: String,
    pub a_x: String,
    pub a_y: String,
    pub yaw_rate: String,
    pub v_x: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            t: "t".into(),
            u_t: "u_t".into(),
            u_b: "u_b".into(),
            u_s: "u_s".into(),
            u_g: "u_g".into(),
            a_x: "a_x".into(),
            a_y: "a_y".into(),
            yaw_rate: "yaw_rate".into(),
            v_x: "v_x".into(),
        }
    }
}

/// Uniformly sampled, standstill-bounded telemetry time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    sample_rate_hz: f64,
    records: Vec<Record>,
    label: String,
}

impl Run {
    /// Build a run and enforce every ingestion rule (domains, standstill).
    pub fn new(sample_rate_hz: f64, records: Vec<Record>, label: impl Into<String>) -> Result<Self> {
        let run = Self::from_records_unvalidated(sample_rate_hz, records, label);
        run.validate()?;
        Ok(run)
    }

    /// Construct without domain validation. Used for derived data such as
    /// filtered runs, which legitimately leave the ingestion domains.
    pub(crate) fn from_records_unvalidated(
        sample_rate_hz: f64,
        records: Vec<Record>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            sample_rate_hz,
            records,
            label: label.into(),
        }
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// One channel as a contiguous series, canonical channel index 0..8.
    pub fn channel(&self, idx: usize) -> Vec<f64> {
        assert!(idx < 8, "channel index out of range");
        self.records.iter().map(|r| r.channels()[idx]).collect()
    }

    /// Domain, finiteness and standstill validation with row diagnostics.
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Validation(format!(
                "run '{}': sample rate must be positive, got {}",
                self.label, self.sample_rate_hz
            )));
        }
        if self.records.is_empty() {
            return Err(Error::Validation(format!("run '{}': empty run", self.label)));
        }
        for (i, rec) in self.records.iter().enumerate() {
            let row = i + 1;
            for (name, v) in [
                ("u_t", rec.control.u_t),
                ("u_b", rec.control.u_b),
                ("u_s", rec.control.u_s),
                ("u_g", rec.control.u_g),
                ("a_x", rec.state.a_x),
                ("a_y", rec.state.a_y),
                ("yaw_rate", rec.state.yaw_rate),
                ("v_x", rec.state.v_x),
            ] {
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "run '{}' row {row}: {name} is not finite",
                        self.label
                    )));
                }
            }
            let c = &rec.control;
            if !(0.0..=100.0).contains(&c.u_t) {
                return Err(Error::Validation(format!(
                    "run '{}' row {row}: u_t = {} outside [0, 100]",
                    self.label, c.u_t
                )));
            }
            if !(0.0..=100.0).contains(&c.u_b) {
                return Err(Error::Validation(format!(
                    "run '{}' row {row}: u_b = {} outside [0, 100]",
                    self.label, c.u_b
                )));
            }
            if !(c.u_s > -180.0 && c.u_s < 180.0) {
                return Err(Error::Validation(format!(
                    "run '{}' row {row}: u_s = {} outside (-180, 180)",
                    self.label, c.u_s
                )));
            }
            if c.u_g.fract() != 0.0 || !(1.0..=6.0).contains(&c.u_g) {
                return Err(Error::Validation(format!(
                    "run '{}' row {row}: u_g = {} is not an integer gear in 1..=6",
                    self.label, c.u_g
                )));
            }
            if rec.state.v_x < 0.0 {
                return Err(Error::Validation(format!(
                    "run '{}' row {row}: v_x = {} outside [0, +inf)",
                    self.label, rec.state.v_x
                )));
            }
        }
        self.check_standstill()?;
        Ok(())
    }

    fn check_standstill(&self) -> Result<()> {
        let n = self.records.len();
        let span = STANDSTILL_SAMPLES.min(n);
        let check = |rec: &Record, row: usize, end: &str| -> Result<()> {
            let s = &rec.state;
            if s.v_x >= STANDSTILL_V_X_KMH
                || s.a_x.abs() >= STANDSTILL_ACCEL_MS2
                || s.a_y.abs() >= STANDSTILL_ACCEL_MS2
                || s.yaw_rate.abs() >= STANDSTILL_YAW_RATE_DEG_S
            {
                return Err(Error::Validation(format!(
                    "run '{}' row {row}: {end} of run is not at a standstill \
                     (v_x={}, a_x={}, a_y={}, yaw_rate={})",
                    self.label, s.v_x, s.a_x, s.a_y, s.yaw_rate
                )));
            }
            Ok(())
        };
        for i in 0..span {
            check(&self.records[i], i + 1, "start")?;
            check(&self.records[n - 1 - i], n - i, "end")?;
        }
        Ok(())
    }

    /// Zero-phase filter all eight channels at the filter's cutoff.
    /// The result is derived data and is not re-validated.
    pub fn filtered(&self, filter: &SosFilter) -> Result<Run> {
        let mut channels: Vec<Vec<f64>> = Vec::with_capacity(8);
        for c in 0..8 {
            channels.push(filter.apply_zero_phase(&self.channel(c))?);
        }
        let records = (0..self.len())
            .map(|i| Record::from_channels(std::array::from_fn(|c| channels[c][i])))
            .collect();
        Ok(Run::from_records_unvalidated(
            self.sample_rate_hz,
            records,
            self.label.clone(),
        ))
    }

    /// Scale every record by the table, preserving metadata.
    pub fn scaled_channels(&self, scaling: &ScalingTable) -> Vec<[f64; 8]> {
        self.records
            .iter()
            .map(|r| scaling.scale(&r.channels()))
            .collect()
    }

    /// Parse a telemetry CSV. The stream must have a header row containing
    /// every mapped column; rows must be time-ordered on a uniform grid.
    pub fn from_csv(reader: impl Read, schema: &CsvSchema, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(format!("run '{label}': cannot read header: {e}")))?
            .clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("run '{label}': missing column '{name}'")))
        };
        let idx = [
            col(&schema.t)?,
            col(&schema.u_t)?,
            col(&schema.u_b)?,
            col(&schema.u_s)?,
            col(&schema.u_g)?,
            col(&schema.a_x)?,
            col(&schema.a_y)?,
            col(&schema.yaw_rate)?,
            col(&schema.v_x)?,
        ];

        let mut times = Vec::new();
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row_no = i + 1;
            let row = row.map_err(|e| {
                Error::Parse(format!("run '{label}' row {row_no}: malformed CSV row: {e}"))
            })?;
            let field = |j: usize| -> Result<f64> {
                let raw = row.get(idx[j]).ok_or_else(|| {
                    Error::Parse(format!("run '{label}' row {row_no}: missing field"))
                })?;
                raw.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "run '{label}' row {row_no}: cannot parse '{raw}' as a number"
                    ))
                })
            };
            times.push(field(0)?);
            records.push(Record::from_channels([
                field(1)?,
                field(2)?,
                field(3)?,
                field(4)?,
                field(5)?,
                field(6)?,
                field(7)?,
                field(8)?,
            ]));
        }
        if records.len() < 2 {
            return Err(Error::Validation(format!(
                "run '{label}': need at least 2 rows to establish the sample rate, got {}",
                records.len()
            )));
        }

        // Infer the sample rate from the full span; snap to integer Hz when
        // the file is within jitter of one, so round trips are bit-exact.
        let span = times[times.len() - 1] - times[0];
        if !(span > 0.0) {
            return Err(Error::Validation(format!(
                "run '{label}': timestamps are not increasing"
            )));
        }
        let mut fs = (times.len() - 1) as f64 / span;
        if (fs - fs.round()).abs() < 1e-3 && fs.round() > 0.0 {
            fs = fs.round();
        }
        let dt = 1.0 / fs;
        for i in 1..times.len() {
            let step = times[i] - times[i - 1];
            if (step - dt).abs() > TIMESTAMP_JITTER_S {
                return Err(Error::Validation(format!(
                    "run '{label}' row {}: timestamp step {} s deviates from the uniform grid {} s",
                    i + 1,
                    step,
                    dt
                )));
            }
        }

        Run::new(fs, records, label)
    }

    /// Write the canonical telemetry CSV. Floats use the shortest
    /// round-trippable representation, so load -> write -> load is bit-exact.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,u_t,u_b,u_s,u_g,a_x,a_y,yaw_rate,v_x")?;
        for (i, rec) in self.records.iter().enumerate() {
            let t = i as f64 / self.sample_rate_hz;
            let c = rec.channels();
            writeln!(
                w,
                "{t},{},{},{},{},{},{},{},{}",
                c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
            )?;
        }
        Ok(())
    }
}

/// Join standstill-bounded runs into one. Plain sequence joining is sound
/// because both sides of every junction are at rest.
pub fn concat_runs(runs: &[Run]) -> Result<Run> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Config("cannot concatenate an empty list of runs".into()))?;
    let fs = first.sample_rate_hz;
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for run in runs {
        let rel = (run.sample_rate_hz - fs).abs() / fs;
        if rel > 1e-9 {
            return Err(Error::Validation(format!(
                "run '{}': sample rate {} Hz does not match {} Hz",
                run.label, run.sample_rate_hz, fs
            )));
        }
        run.check_standstill()?;
        if run.is_empty() {
            return Err(Error::Validation(format!("run '{}': empty run", run.label)));
        }
        records.extend_from_slice(&run.records);
        labels.push(run.label.clone());
    }
    Ok(Run::from_records_unvalidated(fs, records, labels.join("+")))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    /// A domain-valid run with quiet standstill head/tail and random interior.
    pub fn random_run(rng: &mut impl Rng, len: usize, label: &str) -> Run {
        assert!(len >= 2 * STANDSTILL_SAMPLES + 2);
        let mut records = Vec::with_capacity(len);
        for i in 0..len {
            let quiet = i < STANDSTILL_SAMPLES || i >= len - STANDSTILL_SAMPLES;
            let rec = if quiet {
                Record::from_channels([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
            } else {
                Record::from_channels([
                    rng.gen_range(0.0..100.0),
                    rng.gen_range(0.0..100.0),
                    rng.gen_range(-170.0..170.0),
                    rng.gen_range(1..=6) as f64,
                    rng.gen_range(-18.0..18.0),
                    rng.gen_range(-18.0..18.0),
                    rng.gen_range(-80.0..80.0),
                    rng.gen_range(0.0..270.0),
                ])
            };
            records.push(rec);
        }
        Run::new(100.0, records, label).expect("generated run must validate")
    }
}
