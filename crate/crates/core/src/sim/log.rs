use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sim::RoundRecord;

pub const CSV_HEADER: [&str; 9] = [
    "round",
    "mechanism",
    "winner",
    "payment",
    "revenue",
    "uav_x",
    "uav_y",
    "battery",
    "distance_flown",
];

/// One row per round. Floats use Rust's shortest round-trip formatting;
/// a missing winner is written as `-1`.
pub fn write_csv<W: Write>(records: &[RoundRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let winner = r.outcome.winner.map_or(-1, |w| w as i64);
        w.write_record([
            r.round.to_string(),
            r.mechanism.to_string(),
            winner.to_string(),
            r.outcome.payment.to_string(),
            r.outcome.revenue.to_string(),
            r.uav_position.x.to_string(),
            r.uav_position.y.to_string(),
            r.battery.to_string(),
            r.distance_flown.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Newline-delimited JSON, one full [`RoundRecord`] per line.
pub fn write_events<W: Write>(records: &[RoundRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)
            .map_err(|e| Error::InvalidInput(format!("cannot encode round {}: {e}", r.round)))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back a stream written by [`write_events`]. Blank lines are skipped.
pub fn read_events<R: BufRead>(input: R) -> Result<Vec<RoundRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("event line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    Ok(records)
}
