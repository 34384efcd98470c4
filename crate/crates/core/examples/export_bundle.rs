//! Write every export artifact for a segmented and clustered series.
//!
//! `cargo run --example export_bundle [out_dir]`

use std::path::PathBuf;

use regimescope::cluster::cluster_segments;
use regimescope::report::{export_bundle, segment_spectra, PhaseAnalysis, ShockConfig};
use regimescope::{synth, Model, SegmentationConfig, Segmenter};

fn main() -> regimescope::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("regimescope-export"));
    let regimes = synth::random_regimes(6, 400..=1000, &[1.0, 20.0, 150.0], 4);
    let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, 4));
    let g = Segmenter::new(&series, SegmentationConfig::default())?;
    let seg = g.recursive_segment()?;
    let stats: Vec<_> = seg.segments.iter().map(|s| s.stats()).collect();
    let (tree, phases) = cluster_segments(&stats, 3.min(stats.len()))?;
    let analysis = PhaseAnalysis::new(&seg, tree, phases, &ShockConfig::default())?;

    let bundle = export_bundle(&seg, Some(&analysis), &segment_spectra(&g, &seg, None))?;
    for path in bundle.write_to_dir(&out)? {
        println!("{:>8} bytes  {}", std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0), path.display());
    }
    let again = export_bundle(&seg, Some(&analysis), &segment_spectra(&g, &seg, None))?;
    println!("re-export identical: {}", again == bundle);
    Ok(())
}
