//! Sensitivity sweeps: one generator parameter varied over levels, a few
//! replications per level, each solved by LBBD.

use rayon::prelude::*;
use rmsched::generator::{generate, GenConfig, GenError};
use rmsched::lbbd::{solve_lbbd, LbbdParams};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Configs,
    Machines,
    Eligibility,
    Reconfig,
    Setup,
    Area,
    OptVariance,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Configs => "configs",
            Axis::Machines => "machines",
            Axis::Eligibility => "eligibility",
            Axis::Reconfig => "reconfig",
            Axis::Setup => "setup",
            Axis::Area => "area",
            Axis::OptVariance => "opt-variance",
        }
    }

    /// `base` moved to `level` on this axis. Count axes round the level.
    pub fn apply(self, base: &GenConfig, level: f64) -> GenConfig {
        let mut cfg = *base;
        let count = level.round().max(0.0) as usize;
        match self {
            Axis::Configs => cfg.n_configs_per_machine = count,
            Axis::Machines => cfg.n_machines = count,
            Axis::Eligibility => cfg.scaling.eligibility = Some(level),
            Axis::Reconfig => cfg.scaling.reconfig = level,
            Axis::Setup => cfg.scaling.setup = level,
            Axis::Area => cfg.scaling.area = level,
            Axis::OptVariance => cfg.scaling.opt_variance = level,
        }
        cfg
    }
}

pub fn sweep_seed(base: u64, level_index: usize, replication: usize) -> u64 {
    base.wrapping_add(level_index as u64 * 1000).wrapping_add(replication as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub level: f64,
    pub runs: usize,
    /// `None` when every replication failed.
    pub mean_makespan: Option<f64>,
    pub mean_gap: Option<f64>,
    pub failures: usize,
}

/// Generator settings are checked for every level before anything is solved.
pub fn run_sweep(
    base: &GenConfig,
    axis: Axis,
    levels: &[f64],
    replications: usize,
    params: &LbbdParams,
) -> Result<Vec<SweepRow>, GenError> {
    let mut configs = Vec::new();
    for (li, &level) in levels.iter().enumerate() {
        for rep in 0..replications {
            let mut cfg = axis.apply(base, level);
            cfg.seed = sweep_seed(base.seed, li, rep);
            cfg.validate()?;
            configs.push((li, cfg));
        }
    }
    let results: Vec<(usize, Option<(f64, f64)>)> = configs
        .par_iter()
        .map(|(li, cfg)| {
            let solved = generate(cfg)
                .ok()
                .and_then(|inst| solve_lbbd(&inst, params).ok())
                .map(|r| (r.upper_bound as f64, r.gap_percent));
            (*li, solved)
        })
        .collect();

    Ok(levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let ok: Vec<(f64, f64)> = results.iter().filter(|(l, _)| *l == li).filter_map(|(_, r)| *r).collect();
            let mean = |f: fn(&(f64, f64)) -> f64| (!ok.is_empty()).then(|| ok.iter().map(f).sum::<f64>() / ok.len() as f64);
            SweepRow {
                level,
                runs: replications,
                mean_makespan: mean(|r| r.0),
                mean_gap: mean(|r| r.1),
                failures: replications - ok.len(),
            }
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(out: W, axis: Axis, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "level", "replications", "mean_makespan", "mean_gap", "failures"])?;
    for r in rows {
        w.write_record([
            axis.name().to_string(),
            r.level.to_string(),
            r.runs.to_string(),
            r.mean_makespan.map_or_else(String::new, |v| format!("{v:.2}")),
            r.mean_gap.map_or_else(String::new, |v| format!("{v:.2}")),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
