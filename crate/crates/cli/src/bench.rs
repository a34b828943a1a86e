//! Benchmark tables: every method on every instance, scored against the
//! best bound and the best objective found across methods.

use crate::solve::{run_method, Method};
use rayon::prelude::*;
use rmsched::lbbd::LbbdParams;
use rmsched::model::{gap, rpd};
use rmsched::oracle::OracleLimits;
use rmsched::{Instance, Time};
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    /// `|O|-|C|-|M|`.
    pub label: String,
    pub method: Method,
    pub best_lb: Option<Time>,
    pub best_obj: Option<Time>,
    pub objective: Option<Time>,
    pub gap_percent: Option<f64>,
    pub rpd_percent: Option<f64>,
    pub wall_ms: u128,
    pub proven_optimal: bool,
    /// Set on failed rows.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub params: LbbdParams,
    pub limits: OracleLimits,
}

struct Cell {
    objective: Option<Time>,
    lower_bound: Option<Time>,
    proven_optimal: bool,
    wall_ms: u128,
    error: Option<String>,
}

/// Rows ordered by instance, then by method in the order given.
pub fn run_bench(instances: &[(String, Instance)], methods: &[Method], settings: &BenchSettings) -> Vec<BenchRow> {
    let jobs: Vec<(usize, Method)> =
        (0..instances.len()).flat_map(|i| methods.iter().map(move |&m| (i, m))).collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(i, method)| match run_method(&instances[i].1, method, &settings.params, &settings.limits) {
            Ok(run) => Cell {
                objective: Some(run.objective),
                lower_bound: run.lower_bound,
                proven_optimal: run.proven_optimal,
                wall_ms: run.wall_ms,
                error: None,
            },
            Err(e) => Cell {
                objective: None,
                lower_bound: None,
                proven_optimal: false,
                wall_ms: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut rows = Vec::with_capacity(jobs.len());
    for (i, chunk) in cells.chunks(methods.len().max(1)).enumerate() {
        let best_lb = chunk.iter().filter_map(|c| c.lower_bound).max();
        let best_obj = chunk.iter().filter_map(|c| c.objective).min();
        for (cell, &method) in chunk.iter().zip(methods) {
            let gap_percent = match (cell.objective, best_lb) {
                (Some(o), Some(lb)) => gap(o as f64, lb as f64).ok(),
                _ => None,
            };
            let rpd_percent = match (cell.objective, best_obj) {
                (Some(o), Some(b)) => rpd(o as f64, b as f64).ok(),
                _ => None,
            };
            rows.push(BenchRow {
                name: instances[i].0.clone(),
                label: instances[i].1.label(),
                method,
                best_lb,
                best_obj,
                objective: cell.objective,
                gap_percent,
                rpd_percent,
                wall_ms: cell.wall_ms,
                proven_optimal: cell.proven_optimal,
                error: cell.error.clone(),
            });
        }
    }
    rows
}

pub const BENCH_HEADER: [&str; 11] =
    ["instance", "size", "method", "best_lb", "best_obj", "obj", "gap", "rpd", "wall_ms", "proven_optimal", "error"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.2}"))
}

pub fn write_bench_csv<W: Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.label.clone(),
            r.method.name().to_string(),
            opt(r.best_lb),
            opt(r.best_obj),
            opt(r.objective),
            pct(r.gap_percent),
            pct(r.rpd_percent),
            r.wall_ms.to_string(),
            r.proven_optimal.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
