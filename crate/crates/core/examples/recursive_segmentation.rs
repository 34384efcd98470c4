//! Recursive segmentation of a ten-regime synthetic series.
//!
//! `cargo run --release --example recursive_segmentation [seed]`

use std::time::Instant;

use regimescope::segment::recursive_segment;
use regimescope::{synth, Model, SegmentationConfig};

fn main() -> regimescope::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let regimes = synth::random_regimes(10, 200..=2000, &[1.0, 20.0, 60.0, 150.0], seed);
    let truth = synth::true_boundaries(&regimes);
    let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, seed));

    let started = Instant::now();
    let seg = recursive_segment(&series, SegmentationConfig::default())?;
    println!("N={} segmented in {:.2?}", series.len(), started.elapsed());

    println!("{:>6} {:>6} {:>10}", "true", "found", "delta");
    for t in &truth {
        let near = seg.boundaries.iter().min_by_key(|b| b.index.abs_diff(*t)).unwrap();
        println!("{t:>6} {:>6} {:>10.1}", near.index, near.delta);
    }
    println!("segments:");
    for (m, s) in seg.segments.iter().enumerate() {
        println!("  {m:>2} [{:>5}, {:>5}) sigma={:>7.2}", s.start, s.end, s.sigma());
    }
    Ok(())
}
