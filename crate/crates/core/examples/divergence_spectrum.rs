//! Divergence spectrum of a series with one variance change, and the
//! prefix-sum interval statistics behind it.
//!
//! `cargo run --example divergence_spectrum`

use regimescope::segment::divergence_spectrum;
use regimescope::stats::{build_prefix_stats, interval_stats};
use regimescope::{synth, Model, SegmentationConfig};

fn main() -> regimescope::Result<()> {
    let z = synth::piecewise_gaussian(&[(400, 0.0, 1.0), (300, 0.0, 4.0)], 42);
    let p = build_prefix_stats(&z)?;
    for (a, b) in [(1, 400), (401, 700), (1, 700)] {
        let s = interval_stats(&p, a, b)?;
        println!("z[{a}..={b}]: n={} mean={:+.3} sigma={:.3}", s.n, s.mean, s.std_dev());
    }

    let series = synth::movement_series(Model::Normal, z);
    let cfg = SegmentationConfig::default();
    let sp = divergence_spectrum(&series, 0..series.len(), cfg)?;
    println!(
        "{} cursors {}..={}, maximum {:.1} at t={} (threshold {})",
        sp.values.len(),
        sp.cursors().start,
        sp.cursors().end - 1,
        sp.max,
        sp.argmax,
        cfg.threshold
    );
    // Coarse text plot.
    let step = sp.values.len() / 24;
    for (t, d) in sp.points().step_by(step) {
        let bar = "#".repeat((d / sp.max * 50.0).max(0.0) as usize);
        println!("{t:>4} {d:>7.1} {bar}");
    }
    Ok(())
}
