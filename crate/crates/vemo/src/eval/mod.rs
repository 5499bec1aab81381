//! Evaluation protocol: one-step prediction metrics, error histograms,
//! relative-error time series, PSD comparison and cross-cutoff noise sweeps.

mod metrics;
mod plot;
mod report;
mod sweep;

pub use metrics::{max_abs_error, mean, median, relative_error_series, rmse};
pub use plot::{svg_histogram, svg_lines, SvgSeries};
pub use report::{one_step_eval, psd_band_error, ChannelEval, EvalReport, Histogram};
pub use sweep::{noise_sweep, ChannelMetrics, SweepMatrix, SweepRow};
