//! Complete-link clustering of segments into labelled volatility phases.
//!
//! `cargo run --example volatility_phases [k]`

use regimescope::cluster::cluster_segments;
use regimescope::segment::recursive_segment;
use regimescope::{synth, Model, SegmentationConfig};

fn main() -> regimescope::Result<()> {
    let k = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let regimes = synth::random_regimes(14, 300..=1200, &[1.0, 4.0, 12.0, 40.0, 120.0], 3);
    let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, 3));
    let seg = recursive_segment(&series, SegmentationConfig::default())?;
    let stats: Vec<_> = seg.segments.iter().map(|s| s.stats()).collect();
    let (tree, phases) = cluster_segments(&stats, k.min(stats.len()))?;

    println!("{} segments, merge heights:", stats.len());
    for m in &tree.merges {
        println!("  {:>3} + {:<3} at {:>10.2} (size {})", m.left, m.right, m.height, m.size);
    }
    println!("newick: {}", tree.to_newick());
    println!("clusters at k={}:", phases.k);
    for c in &phases.clusters {
        println!("  {} {:<8} {} sigma={:.2} members={}", c.id, c.label, c.color, c.mean_sigma, c.members);
    }
    for (m, s) in seg.segments.iter().enumerate() {
        let c = phases.cluster_of(m);
        println!("  segment {m:>2} sigma={:>7.2} -> {}", s.sigma(), c.label);
    }
    Ok(())
}
