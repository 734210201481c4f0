//! CSV emission of result rows.

use std::io::Write;

use super::experiment::ResultRow;
use crate::control::ServoRecord;
use crate::error::Result;

/// Header for a chain whose first reported joint is `first_joint` (1-based)
/// and that reports `n_q` joints.
pub fn header(first_joint: usize, n_q: usize) -> Vec<String> {
    let mut h: Vec<String> = ["trial", "t", "eps_b", "eps_w"].map(String::from).to_vec();
    h.extend((0..n_q).map(|k| format!("eps_q{}", first_joint + k)));
    h.extend(
        [
            "ess",
            "n_pts",
            "n_edges",
            "eps_lump_b",
            "eps_lump_w",
            "degenerate",
        ]
        .map(String::from),
    );
    h
}

/// Writes rows with a header. Floats use the shortest representation that
/// reads back exactly, so equal rows give equal bytes.
pub fn write_rows<W: Write>(out: W, first_joint: usize, rows: &[ResultRow]) -> Result<()> {
    let n_q = rows.first().map_or(0, |r| r.eps_q.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(first_joint, n_q))?;
    for r in rows {
        let mut rec = vec![
            r.trial.to_string(),
            r.t.to_string(),
            r.eps_b.to_string(),
            r.eps_w.to_string(),
        ];
        rec.extend(r.eps_q.iter().map(f64::to_string));
        rec.extend([
            r.ess.to_string(),
            r.n_pts.to_string(),
            r.n_edges.to_string(),
            r.eps_lump_b.to_string(),
            r.eps_lump_w.to_string(),
            u8::from(r.degenerate).to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Servo log: `iteration,estimated_error,true_error,step`.
pub fn write_servo_log<W: Write>(out: W, log: &[ServoRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in log {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
