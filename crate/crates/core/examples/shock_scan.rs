//! Heuristic scan of a phase timeline for precursor and inverted shock
//! sequences.
//!
//! `cargo run --example shock_scan`

use regimescope::cluster::cluster_segments;
use regimescope::report::{PhaseAnalysis, ShockConfig};
use regimescope::segment::recursive_segment;
use regimescope::{synth, Model, SegmentationConfig};

fn main() -> regimescope::Result<()> {
    // Calm, a staircase of rising moderate volatility, a crash, then a
    // calm spell inside a turbulent stretch.
    let regimes = [
        (1500, 0.0, 1.0),
        (400, 0.0, 8.0),
        (400, 0.0, 12.0),
        (1500, 0.0, 1.0),
        (300, 0.0, 150.0),
        (800, 0.0, 60.0),
        (300, 0.0, 10.0),
        (300, 0.0, 8.0),
        (800, 0.0, 60.0),
        (300, 0.0, 150.0),
    ];
    let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, 21));
    let seg = recursive_segment(&series, SegmentationConfig::default())?;
    let stats: Vec<_> = seg.segments.iter().map(|s| s.stats()).collect();
    let (tree, phases) = cluster_segments(&stats, 5.min(stats.len()))?;
    let cfg = ShockConfig {
        min_run: 2,
        window_bars: 1000,
    };
    let analysis = PhaseAnalysis::new(&seg, tree, phases, &cfg)?;

    for (i, s) in analysis.timeline.spans.iter().enumerate() {
        println!("{i:>2} [{:>5}, {:>5}) {:<8} sigma={:.1}", s.start_index, s.end_index, s.label, s.sigma);
    }
    println!("heuristic runs (window {} bars):", cfg.window_bars);
    for r in &analysis.shocks.runs {
        println!("  {:?} spans {:?} severity {:?}", r.direction, r.members, r.severity);
    }
    Ok(())
}
