//! Telemetry ingestion, run validation and sliding-window tensorization.

mod cache;
mod run;
mod window;

#[cfg(test)]
pub(crate) use run::test_support;

pub use cache::{read_cache, write_cache};
pub use run::{
    concat_runs, ControlVector, CsvSchema, Record, Run, StateVector, STANDSTILL_SAMPLES,
};
pub use window::{make_windows, split_dataset, WindowedDataset};
