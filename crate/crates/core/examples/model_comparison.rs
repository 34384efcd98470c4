//! Segment the same bars under the normal and lognormal models and match
//! their boundaries within one trading day.
//!
//! `cargo run --example model_comparison`

use regimescope::ingest::movements;
use regimescope::report::compare_segmentations;
use regimescope::segment::recursive_segment;
use regimescope::{synth, Model, SegmentationConfig};

fn main() -> regimescope::Result<()> {
    let regimes: Vec<synth::Regime> = synth::random_regimes(12, 300..=1500, &[1.0, 3.0, 8.0], 8)
        .into_iter()
        .map(|(n, m, s)| (n, m, s * 2e-3))
        .collect();
    let bars = synth::bars_from_log_moves(1_000.0, &synth::piecewise_gaussian(&regimes, 8));
    let cfg = SegmentationConfig::default();
    let normal = recursive_segment(&movements(&bars, Model::Normal)?, cfg)?;
    let lognormal = recursive_segment(&movements(&bars, Model::Lognormal)?, cfg)?;

    let report = compare_segmentations(&normal, &lognormal, bars.bars_per_day())?;
    println!(
        "normal: {} segments, lognormal: {} segments",
        normal.segment_count(),
        lognormal.segment_count()
    );
    println!(
        "common boundaries within {} bars: {} ({} exact)",
        report.tolerance, report.common, report.exact
    );
    println!("unmatched normal: {:?}", report.unmatched_a);
    println!("unmatched lognormal: {:?}", report.unmatched_b);
    println!("{:>7} {:>7} {:>5} {:>5} {:>6}", "start", "end", "#N", "#LN", "common");
    for d in &report.intervals {
        println!(
            "{:>7} {:>7} {:>5} {:>5} {:>6}",
            d.start, d.end, d.segments_a, d.segments_b, d.common
        );
    }
    Ok(())
}
