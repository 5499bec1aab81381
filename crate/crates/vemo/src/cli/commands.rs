//! The five pipeline commands.

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::cli::config::{fmt_hz, ExperimentConfig};
use crate::data::{concat_runs, make_windows, read_cache, split_dataset, CsvSchema, Run};
use crate::eval::{
    noise_sweep, one_step_eval, svg_histogram, svg_lines, EvalReport, SvgSeries,
};
use crate::nn::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::signal::SosFilter;
use crate::synth::{build_training_script, simulate};
use crate::{Error, Result};

fn provenance(cfg: &ExperimentConfig) -> Result<String> {
    Ok(format!(
        "# config_sha256 = {}\n# seed = {}\n",
        cfg.hash()?,
        cfg.synth.seed
    ))
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn require_file(path: &Path, hint: &str) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Config(format!(
            "missing {}: {hint}",
            path.display()
        )));
    }
    Ok(())
}

/// Simulate the configured training and test acquisitions and write them as
/// telemetry CSVs plus their maneuver scripts. Prints a manifest with the
/// duration and channel ranges of every run.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    ensure_dir(&cfg.paths.data_dir)?;
    let s = &cfg.synth;

    let mut runs = Vec::new();
    for i in 0..s.train_runs {
        let seed = s.seed.wrapping_add(i as u64);
        let script = build_training_script(seed, s.train_duration_s)?;
        let run = simulate(
            &s.vehicle,
            &script,
            s.sample_rate_hz,
            s.train_duration_s,
            &format!("train_{i}"),
        )?;
        script.save(&cfg.paths.data_dir.join(format!("train_{i}.script.toml")))?;
        let path = cfg.paths.data_dir.join(format!("train_{i}.csv"));
        run.write_csv(BufWriter::new(File::create(&path)?))?;
        runs.push(run);
    }
    let test_seed = s.seed.wrapping_add(1000);
    let script = build_training_script(test_seed, s.test_duration_s)?;
    let run = simulate(
        &s.vehicle,
        &script,
        s.sample_rate_hz,
        s.test_duration_s,
        "test",
    )?;
    script.save(&cfg.paths.data_dir.join("test.script.toml"))?;
    run.write_csv(BufWriter::new(File::create(
        cfg.paths.data_dir.join("test.csv"),
    )?))?;
    runs.push(run);

    println!("run        duration_s  channel ranges");
    for run in &runs {
        let mut lo = [f64::INFINITY; 8];
        let mut hi = [f64::NEG_INFINITY; 8];
        for rec in run.records() {
            for (c, v) in rec.channels().into_iter().enumerate() {
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
        let names = ["u_t", "u_b", "u_s", "u_g", "a_x", "a_y", "yaw", "v_x"];
        let ranges: Vec<String> = names
            .iter()
            .enumerate()
            .map(|(c, n)| format!("{n} [{:.2}, {:.2}]", lo[c], hi[c]))
            .collect();
        println!(
            "{:<10} {:<11} {}",
            run.label(),
            run.len() as f64 / run.sample_rate_hz(),
            ranges.join("  ")
        );
    }
    Ok(())
}

fn load_train_runs(cfg: &ExperimentConfig) -> Result<Vec<Run>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(&cfg.paths.data_dir)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cfg.paths.data_dir.display())))?
    {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("train_") && name.ends_with(".csv") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "no train_*.csv files in {}; run `generate` first",
            cfg.paths.data_dir.display()
        )));
    }
    paths.sort();
    let schema = CsvSchema::default();
    paths
        .iter()
        .map(|p| {
            let label = p.file_stem().unwrap().to_string_lossy().into_owned();
            Run::from_csv(File::open(p)?, &schema, label)
        })
        .collect()
}

fn load_test_run(cfg: &ExperimentConfig) -> Result<Run> {
    let path = cfg.paths.data_dir.join("test.csv");
    require_file(&path, "run `generate` first")?;
    Run::from_csv(File::open(&path)?, &CsvSchema::default(), "test")
}

/// Load, validate, filter at every configured cutoff, scale, window, and
/// write one dataset cache per cutoff for both the training set and the test
/// run.
pub fn cmd_preprocess(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    ensure_dir(&cfg.paths.cache_dir)?;
    let train_runs = load_train_runs(cfg)?;
    let test_run = load_test_run(cfg)?;
    let fs_hz = train_runs[0].sample_rate_hz();

    let mut cutoffs = cfg.preprocess.cutoff_list_hz.clone();
    if !cutoffs
        .iter()
        .any(|c| (c - cfg.preprocess.training_cutoff_hz).abs() < 1e-9)
    {
        cutoffs.push(cfg.preprocess.training_cutoff_hz);
    }

    for &cutoff in &cutoffs {
        let filter = SosFilter::butterworth_lowpass(cfg.preprocess.filter_order, cutoff, fs_hz)?;
        let filtered: Vec<Run> = train_runs
            .iter()
            .map(|r| r.filtered(&filter))
            .collect::<Result<_>>()?;
        let joined = concat_runs(&filtered)?;
        let train_ds = make_windows(&joined, cfg.preprocess.window_len, &cfg.scaling)?;
        crate::data::write_cache(&train_ds, &cfg.cache_path("train", cutoff))?;

        let test_ds = make_windows(
            &test_run.filtered(&filter)?,
            cfg.preprocess.window_len,
            &cfg.scaling,
        )?;
        crate::data::write_cache(&test_ds, &cfg.cache_path("test", cutoff))?;
        println!(
            "cutoff {:>5} Hz: train cache {} windows, test cache {} windows",
            fmt_hz(cutoff),
            train_ds.len(),
            test_ds.len()
        );
    }
    Ok(())
}

/// Train on the training-cutoff cache and persist the checkpoint plus the
/// per-epoch training log.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    ensure_dir(&cfg.paths.checkpoint_dir)?;
    let cache = cfg.cache_path("train", cfg.preprocess.training_cutoff_hz);
    require_file(&cache, "run `preprocess` first")?;
    let ds = read_cache(&cache)?;
    let (train_ds, val_ds) = split_dataset(&ds, cfg.split.train_fraction, cfg.split.val_fraction)?;

    let (params, log) = crate::train::fit(&train_ds, &val_ds, &cfg.train, &cfg.arch)?;
    let ck = Checkpoint {
        params,
        window_len: cfg.preprocess.window_len,
        scaling: cfg.scaling,
        training_cutoff_hz: cfg.preprocess.training_cutoff_hz,
    };
    let ck_path = cfg.checkpoint_path();
    save_checkpoint(&ck, &ck_path)?;
    write_text(
        &ck_path.with_extension("provenance.txt"),
        &provenance(cfg)?,
    )?;

    let log_path = ck_path.with_extension("train_log.csv");
    let mut w = BufWriter::new(File::create(&log_path)?);
    w.write_all(provenance(cfg)?.as_bytes())?;
    log.write_csv(&mut w)?;
    w.flush()?;

    println!(
        "trained {} epochs, best validation MAE {:.6}; checkpoint at {}",
        log.epochs.len(),
        log.best_val_mae().unwrap_or(f64::NAN),
        ck_path.display()
    );
    Ok(())
}

fn write_report_files(cfg: &ExperimentConfig, report: &EvalReport) -> Result<()> {
    ensure_dir(&cfg.paths.report_dir)?;
    let dir = &cfg.paths.report_dir;
    let stamp = provenance(cfg)?;

    let mut summary = stamp.clone();
    let mut buf = Vec::new();
    report.write_summary(&mut buf)?;
    summary.push_str(&String::from_utf8_lossy(&buf));
    write_text(&dir.join("summary.txt"), &summary)?;

    let mut metrics = stamp.clone();
    metrics.push_str("channel,rmse,mean_rel_pct,median_rel_pct,e_max\n");
    for c in &report.channels {
        metrics.push_str(&format!(
            "{},{},{},{},{}\n",
            c.name, c.rmse, c.mean_rel, c.median_rel, c.e_max
        ));
    }
    write_text(&dir.join("metrics.csv"), &metrics)?;

    // Relative-error time series, one column per channel.
    let mut relerr = stamp.clone();
    relerr.push_str("index,a_x,a_y,yaw_rate,v_x\n");
    for i in 0..report.n_windows {
        relerr.push_str(&format!(
            "{},{},{},{},{}\n",
            i,
            report.channels[0].rel_series[i],
            report.channels[1].rel_series[i],
            report.channels[2].rel_series[i],
            report.channels[3].rel_series[i]
        ));
    }
    write_text(&dir.join("relerr.csv"), &relerr)?;

    for c in &report.channels {
        let mut hist = stamp.clone();
        hist.push_str("bin_lo,bin_hi,count\n");
        let width = (c.histogram.hi - c.histogram.lo) / c.histogram.counts.len() as f64;
        for (i, count) in c.histogram.counts.iter().enumerate() {
            hist.push_str(&format!(
                "{},{},{count}\n",
                c.histogram.lo + i as f64 * width,
                c.histogram.lo + (i + 1) as f64 * width
            ));
        }
        write_text(&dir.join(format!("hist_{}.csv", c.name)), &hist)?;

        let mut psd = stamp.clone();
        psd.push_str("freq_hz,reference_power,prediction_power\n");
        for ((f, r), p) in c
            .psd_reference
            .frequencies
            .iter()
            .zip(&c.psd_reference.power)
            .zip(&c.psd_prediction.power)
        {
            psd.push_str(&format!("{f},{r},{p}\n"));
        }
        write_text(&dir.join(format!("psd_{}.csv", c.name)), &psd)?;

        // Plots: PSD comparison (log power), error histogram, relative-error
        // series with mean/median rules.
        let psd_svg = svg_lines(
            &format!("PSD comparison: {}", c.name),
            "frequency [Hz]",
            "log10 power density",
            &[
                SvgSeries {
                    label: "reference",
                    x: &c.psd_reference.frequencies,
                    y: &c.psd_reference.power,
                },
                SvgSeries {
                    label: "prediction",
                    x: &c.psd_prediction.frequencies,
                    y: &c.psd_prediction.power,
                },
            ],
            true,
        );
        write_text(&dir.join(format!("fig_psd_{}.svg", c.name)), &psd_svg)?;

        let hist_svg = svg_histogram(
            &format!("Relative error histogram: {}", c.name),
            "relative error [%]",
            c.histogram.lo,
            c.histogram.hi,
            &c.histogram.counts,
        );
        write_text(&dir.join(format!("fig_hist_{}.svg", c.name)), &hist_svg)?;

        let idx: Vec<f64> = (0..c.rel_series.len()).map(|i| i as f64).collect();
        let mean_line = vec![c.mean_rel; c.rel_series.len()];
        let median_line = vec![c.median_rel; c.rel_series.len()];
        let rel_svg = svg_lines(
            &format!("Relative error over time: {}", c.name),
            "window index",
            "relative error [%]",
            &[
                SvgSeries {
                    label: "rel. error",
                    x: &idx,
                    y: &c.rel_series,
                },
                SvgSeries {
                    label: "mean",
                    x: &idx,
                    y: &mean_line,
                },
                SvgSeries {
                    label: "median",
                    x: &idx,
                    y: &median_line,
                },
            ],
            false,
        );
        write_text(&dir.join(format!("fig_relerr_{}.svg", c.name)), &rel_svg)?;
    }
    Ok(())
}

/// One-step evaluation of the trained checkpoint on the matching test cache.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let ck_path = cfg.checkpoint_path();
    require_file(&ck_path, "run `train` first")?;
    let ck = load_checkpoint(&ck_path)?;
    let cache = cfg.cache_path("test", ck.training_cutoff_hz);
    require_file(&cache, "run `preprocess` first")?;
    let test_ds = read_cache(&cache)?;

    let report = one_step_eval(&ck, &test_ds)?;
    write_report_files(cfg, &report)?;

    let mut out = Vec::new();
    report.write_summary(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    println!("reports written to {}", cfg.paths.report_dir.display());
    Ok(())
}

/// Cross-cutoff robustness sweep of the trained checkpoint against the raw
/// test run.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let ck_path = cfg.checkpoint_path();
    require_file(&ck_path, "run `train` first")?;
    let ck = load_checkpoint(&ck_path)?;
    let raw_test = load_test_run(cfg)?;

    // Operator convenience: drop configured cutoffs below the training
    // cutoff instead of erroring; the sweep itself still rejects any.
    let mut cutoffs: Vec<f64> = cfg
        .sweep
        .cutoffs_hz
        .iter()
        .copied()
        .filter(|c| *c >= ck.training_cutoff_hz - 1e-9)
        .collect();
    cutoffs.sort_by(|a, b| b.total_cmp(a));
    if cutoffs.is_empty() {
        return Err(Error::Config(format!(
            "no sweep cutoffs at or above the training cutoff {} Hz",
            ck.training_cutoff_hz
        )));
    }

    let matrix = noise_sweep(&ck, &raw_test, &cutoffs, cfg.preprocess.filter_order)?;

    ensure_dir(&cfg.paths.report_dir)?;
    let stamp = provenance(cfg)?;
    let mut csv = stamp.clone();
    csv.push_str("input_cutoff_hz,channel,rmse,mean_rel_pct,median_rel_pct,e_max\n");
    for row in &matrix.rows {
        for (c, m) in row.channels.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.input_cutoff_hz,
                crate::nn::STATE_NAMES[c],
                m.rmse,
                m.mean_rel,
                m.median_rel,
                m.e_max
            ));
        }
    }
    write_text(&cfg.paths.report_dir.join("sweep.csv"), &csv)?;

    let mut table = stamp;
    let mut buf = Vec::new();
    matrix.write_table(&mut buf)?;
    table.push_str(&String::from_utf8_lossy(&buf));
    write_text(&cfg.paths.report_dir.join("sweep.txt"), &table)?;

    // Mean relative error vs input cutoff, one line per channel.
    let x: Vec<f64> = matrix.rows.iter().map(|r| r.input_cutoff_hz).collect();
    let ys: Vec<Vec<f64>> = (0..4)
        .map(|c| matrix.rows.iter().map(|r| r.channels[c].mean_rel).collect())
        .collect();
    let series: Vec<SvgSeries> = crate::nn::STATE_NAMES
        .iter()
        .zip(&ys)
        .map(|(name, y)| SvgSeries {
            label: name,
            x: &x,
            y,
        })
        .collect();
    let svg = svg_lines(
        "Mean relative error vs input cutoff",
        "input cutoff [Hz]",
        "mean relative error [%]",
        &series,
        false,
    );
    write_text(&cfg.paths.report_dir.join("fig_sweep.svg"), &svg)?;

    let mut out = Vec::new();
    matrix.write_table(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
