//! Post-burn-in statistics.

use serde::Serialize;

use super::experiment::ResultRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1) p`).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let q3 = quantile_sorted(&v, 0.75);
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile_sorted(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub eps_b: Stats,
    pub eps_w: Stats,
    pub eps_q: Vec<Stats>,
    pub eps_lump_b: Stats,
    pub eps_lump_w: Stats,
    pub ess_mean: f64,
    pub degenerate_rows: usize,
}

fn window(rows: &[ResultRow], burn_in: usize) -> Result<Vec<&ResultRow>> {
    let w: Vec<&ResultRow> = rows.iter().filter(|r| r.t > burn_in).collect();
    if w.is_empty() {
        Err(Error::EmptyWindow { burn_in })
    } else {
        Ok(w)
    }
}

/// Statistics over every row with `t > burn_in`, pooled over trials.
pub fn summarize(rows: &[ResultRow], burn_in: usize) -> Result<Summary> {
    let w = window(rows, burn_in)?;
    let col = |f: &dyn Fn(&ResultRow) -> f64| -> Stats {
        Stats::of(&w.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("window is non-empty")
    };
    let n_q = w[0].eps_q.len();
    Ok(Summary {
        rows: w.len(),
        eps_b: col(&|r| r.eps_b),
        eps_w: col(&|r| r.eps_w),
        eps_q: (0..n_q).map(|k| col(&|r| r.eps_q[k])).collect(),
        eps_lump_b: col(&|r| r.eps_lump_b),
        eps_lump_w: col(&|r| r.eps_lump_w),
        ess_mean: col(&|r| r.ess).mean,
        degenerate_rows: w.iter().filter(|r| r.degenerate).count(),
    })
}

/// Post-burn-in `(trial, mean eps_b, mean eps_w)` for each trial present.
pub fn trial_means(rows: &[ResultRow], burn_in: usize) -> Result<Vec<(usize, f64, f64)>> {
    let w = window(rows, burn_in)?;
    let mut out: Vec<(usize, f64, f64, usize)> = Vec::new();
    for r in w {
        match out.last_mut() {
            Some(last) if last.0 == r.trial => {
                last.1 += r.eps_b;
                last.2 += r.eps_w;
                last.3 += 1;
            }
            _ => out.push((r.trial, r.eps_b, r.eps_w, 1)),
        }
    }
    Ok(out
        .into_iter()
        .map(|(k, b, w, n)| (k, b / n as f64, w / n as f64))
        .collect())
}
