//! Generate a synthetic telemetry run: build a seeded maneuver script, run
//! the single-track simulator, and write the telemetry CSV.
//!
//! ```sh
//! cargo run --release --example simulate_telemetry
//! ```

use vemo::synth::{add_measurement_noise, build_training_script, simulate, SingleTrackParams};

fn main() -> vemo::Result<()> {
    let vehicle = SingleTrackParams::default();
    let script = build_training_script(42, 60.0)?;
    println!(
        "script: {} segments over {:.1} s ({} sinusoidal-steering, {} braking)",
        script.segments.len(),
        script.duration_s(),
        script.count_sine_steering(),
        script.count_braking()
    );

    let run = simulate(&vehicle, &script, 100.0, 60.0, "demo")?;
    let v_max = run
        .records()
        .iter()
        .map(|r| r.state.v_x)
        .fold(0.0f64, f64::max);
    let ay_max = run
        .records()
        .iter()
        .map(|r| r.state.a_y.abs())
        .fold(0.0f64, f64::max);
    println!(
        "simulated {} samples; top speed {:.1} km/h, peak |a_y| {:.2} m/s^2",
        run.len(),
        v_max,
        ay_max
    );

    // Optional measurement noise on the state channels.
    let noisy = add_measurement_noise(&run, &[0.2, 0.2, 0.5, 0.3], 7)?;

    let out = std::env::temp_dir().join("vemo_demo_run.csv");
    noisy.write_csv(std::io::BufWriter::new(std::fs::File::create(&out)?))?;
    println!("telemetry written to {}", out.display());
    Ok(())
}
