//! Aggregate irregular ticks into half-hour bars and derive movements.
//!
//! `cargo run --example ingest_ticks`

use chrono::{Duration, NaiveDate};
use regimescope::ingest::{aggregate_ticks, movements, write_bars_csv, Tick, TradingCalendar};
use regimescope::Model;

fn main() -> regimescope::Result<()> {
    let day = NaiveDate::from_ymd_opt(2024, 3, 4).unwrap();
    let open = day.and_hms_opt(9, 30, 0).unwrap().and_utc();
    // A tick roughly every 11 minutes over two sessions, with a gap.
    let mut ticks = Vec::new();
    for session in 0..2 {
        let start = open + Duration::days(session);
        for k in 0..34 {
            if (12..15).contains(&k) {
                continue;
            }
            let price = 18_000.0 + 5.0 * ((k * 37 % 11) as f64 - 5.0) + 20.0 * session as f64;
            ticks.push(Tick {
                timestamp: start + Duration::minutes(1 + 11 * k),
                price,
            });
        }
    }

    let calendar = TradingCalendar::default();
    let bars = aggregate_ticks(&ticks, &calendar)?;
    println!(
        "{} ticks -> {} bars ({} per session)",
        ticks.len(),
        bars.len(),
        calendar.bars_per_session()
    );
    let mut csv = Vec::new();
    write_bars_csv(&bars, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("\n...");

    for model in [Model::Normal, Model::Lognormal] {
        let z = movements(&bars, model)?;
        println!("{model:>9}: {} movements, first {:+.6}", z.len(), z.values()[0]);
    }
    Ok(())
}
