//! Boundary optimization: misplaced boundaries move to the divergence
//! maximum of their supersegment.
//!
//! `cargo run --example boundary_optimization`

use regimescope::segment::{Boundary, Provenance};
use regimescope::{synth, Model, SegmentationConfig, Segmenter};

fn main() -> regimescope::Result<()> {
    let regimes = [(800, 0.0, 1.0), (800, 0.0, 5.0), (800, 0.0, 1.0), (800, 0.0, 5.0)];
    let truth = synth::true_boundaries(&regimes);
    let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, 5));
    let g = Segmenter::new(&series, SegmentationConfig::default())?;

    let planted: Vec<Boundary> = truth
        .iter()
        .zip([20i64, -20, 20])
        .map(|(&t, off)| Boundary {
            index: (t as i64 + off) as usize,
            timestamp: series.timestamps()[0],
            delta: 0.0,
            provenance: Provenance::Automatic,
        })
        .collect();
    let start = g.from_boundaries(planted)?;
    println!("truth   {truth:?}");
    println!("planted {:?}", start.cursors());

    let (done, report) = g.optimize_boundaries(start)?;
    for m in &report.moves {
        println!(
            "sweep {}: {} -> {} (divergence {:.1} -> {:.1})",
            m.sweep, m.from, m.to, m.before, m.after
        );
    }
    println!(
        "final   {:?} after {} sweeps (converged: {})",
        done.cursors(),
        report.sweeps,
        report.converged
    );
    Ok(())
}
