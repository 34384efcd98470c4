//! A review session driven through the session store that backs the HTTP
//! service. With `serve`, also exposes it on http://127.0.0.1:8750.
//!
//! `cargo run --example review_service [serve]`

use std::sync::Arc;

use regimescope::ingest::write_bars_csv;
use regimescope::segment::EditKind;
use regimescope::service::{self, ClusterRequest, CreateSession, EditRequest, SessionStore};
use regimescope::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let moves: Vec<f64> = synth::piecewise_gaussian(&[(900, 0.0, 1.0), (700, 0.0, 12.0), (900, 0.0, 3.0)], 6)
        .iter()
        .map(|m| m * 1e-4)
        .collect();
    let mut csv = Vec::new();
    write_bars_csv(&synth::bars_from_log_moves(10_000.0, &moves), &mut csv)?;

    let store = Arc::new(SessionStore::open(None)?);
    let doc = store.create(CreateSession {
        bars_csv: Some(String::from_utf8(csv)?),
        ..Default::default()
    })?;
    println!("session {} v{}: {:?}", doc.id, doc.version, doc.current.cursors());

    let sp = store.spectrum(&doc.id, 0)?;
    println!("segment 0 spectrum: {} points, max {:.1} at {}", sp.points.len(), sp.max, sp.argmax);

    let doc = store.apply_edit(
        &doc.id,
        EditRequest {
            expected_version: doc.version,
            kind: EditKind::ForceCut { at: 300 },
            actor: Some("analyst".into()),
            timestamp: None,
        },
    )?;
    println!("after force cut v{}: {:?} ({:?})", doc.version, doc.current.cursors(), doc.status);

    let stale = store.apply_edit(
        &doc.id,
        EditRequest {
            expected_version: 0,
            kind: EditKind::Accept { boundary: None },
            actor: None,
            timestamp: None,
        },
    );
    println!("stale edit: {}", stale.unwrap_err());

    let doc = store.cluster(
        &doc.id,
        ClusterRequest {
            expected_version: doc.version,
            k: 3,
            shocks: None,
        },
    )?;
    let phases = &doc.cluster.as_ref().unwrap().analysis.phases;
    println!("clustered v{}: assignments {:?}", doc.version, phases.assignments);
    println!("replay matches: {}", doc.replay()? == doc.current);
    let bundle = store.export(&doc.id)?;
    println!("export: {:?}", bundle.files.iter().map(|(f, _)| f.file_name()).collect::<Vec<_>>());

    if std::env::args().nth(1).as_deref() == Some("serve") {
        let rt = tokio::runtime::Runtime::new()?;
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind(("127.0.0.1", service::DEFAULT_PORT)).await?;
            println!("listening on http://{}", listener.local_addr()?);
            service::serve(listener, store, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
            Ok::<_, Box<dyn std::error::Error>>(())
        })?;
    }
    Ok(())
}
