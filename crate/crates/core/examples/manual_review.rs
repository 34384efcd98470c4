//! Manual review: force a cut, remove a boundary, pin a boundary, and
//! inspect the audit trail.
//!
//! `cargo run --example manual_review`

use chrono::Utc;
use regimescope::segment::{EditKind, ManualEdit};
use regimescope::{synth, Model, SegmentationConfig, Segmenter};

fn edit(kind: EditKind) -> ManualEdit {
    ManualEdit {
        kind,
        actor: "analyst".into(),
        timestamp: Utc::now(),
    }
}

fn main() -> regimescope::Result<()> {
    // The middle regime differs only slightly and may stay uncut.
    let regimes = [(900, 0.0, 1.0), (600, 0.0, 1.15), (900, 0.0, 6.0)];
    let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, 12));
    let g = Segmenter::new(&series, SegmentationConfig::default())?;
    let auto = g.recursive_segment()?;
    println!("automatic: {:?}", auto.cursors());

    // Force a cut inside the first segment, at its spectrum maximum.
    let cut = g.optimize_boundaries(g.apply_manual_edit(&auto, edit(EditKind::ForceCut { at: 100 }))?)?.0;
    println!("force cut: {:?}", cut.cursors());
    let added = cut.boundaries.iter().find(|b| b.provenance.is_manual()).unwrap();
    println!("  new boundary at {} with divergence {:.2}", added.index, added.delta);

    let last = *cut.cursors().last().unwrap();
    let pinned = g.apply_manual_edit(&cut, edit(EditKind::Accept { boundary: Some(last) }))?;
    let removed = g.apply_manual_edit(&pinned, edit(EditKind::RemoveBoundary { t: added.index }))?;
    println!("removed:   {:?}", removed.cursors());

    match g.apply_manual_edit(&removed, edit(EditKind::RemoveBoundary { t: 7 })) {
        Err(e) => println!("rejected:  {e}"),
        Ok(_) => unreachable!("no boundary at 7"),
    }
    println!("audit:");
    for e in &removed.audit {
        println!("  {} {:?}", e.actor, e.kind);
    }
    Ok(())
}
