//! Logic-based Benders decomposition and the two-step warm start.
//!
//! Each iteration solves the master for an assignment, schedules every
//! machine exactly under it, and keeps the best full schedule. If the
//! longest machine is no longer than the master objective (within the
//! master's gap) the schedule is optimal. Otherwise each machine that
//! attains the longest makespan contributes an optimality cut and the loop
//! repeats.

use crate::master::{solve_master, Assignment, Cut, MasterError, MasterParams, MrtMode};
use crate::model::{
    compute_timing, gap, validate_instance, ConfigId, Instance, MachineId, OrderId, Schedule, Slot, Time,
    TimedSchedule, TimingError, ValidationReport,
};
use crate::subproblem::{solve_subproblem, AssignedOrder, SpError, SpInput, SpResult};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Node budget of the warm-start master; keeps the construction quick and
/// reproducible.
pub const WARMSTART_NODE_LIMIT: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbbdParams {
    pub total_time_limit: Option<Duration>,
    /// Master optimality gap in percent.
    pub mp_gap_limit: f64,
    pub sp_time_limit: Option<Duration>,
    pub max_iterations: Option<usize>,
    pub mrt_mode: MrtMode,
    /// Per-iteration cap on master search time.
    pub mp_time_limit: Option<Duration>,
    /// Per-iteration cap on master node expansions.
    pub mp_node_limit: Option<u64>,
    /// Start from [`warmstart_construct`] as the incumbent.
    pub warm_start: bool,
}

impl Default for LbbdParams {
    fn default() -> Self {
        Self {
            total_time_limit: Some(Duration::from_secs(600)),
            mp_gap_limit: 1.0,
            sp_time_limit: Some(Duration::from_secs(60)),
            max_iterations: None,
            mrt_mode: MrtMode::Static,
            mp_time_limit: None,
            mp_node_limit: None,
            warm_start: true,
        }
    }
}

impl LbbdParams {
    /// Settings for a proof of optimality: no master gap, no limits.
    pub fn exact() -> Self {
        Self {
            total_time_limit: None,
            mp_gap_limit: 0.0,
            sp_time_limit: None,
            max_iterations: None,
            mrt_mode: MrtMode::Static,
            mp_time_limit: None,
            mp_node_limit: None,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub mp_objective: Time,
    pub max_sp_makespan: Time,
    pub upper_bound: Time,
    pub lower_bound: Time,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_schedule: TimedSchedule,
    pub upper_bound: Time,
    pub lower_bound: Time,
    pub gap_percent: f64,
    /// Filled in by comparisons across methods.
    pub rpd_percent: Option<f64>,
    pub iterations: usize,
    pub cuts: usize,
    pub proven_optimal: bool,
    pub per_iteration_log: Vec<IterationLog>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LbbdError {
    #[error("invalid instance:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error("machine {machine}: {source}")]
    Subproblem { machine: MachineId, source: SpError },
    #[error(transparent)]
    Timing(#[from] TimingError),
}

pub fn make_cut(machine: MachineId, assignment: BTreeSet<(OrderId, ConfigId)>, sp_makespan: Time) -> Cut {
    Cut { machine, assignment_set: assignment, bound: sp_makespan }
}

pub fn solve_lbbd(instance: &Instance, params: &LbbdParams) -> Result<SolveResult, LbbdError> {
    check(instance)?;
    let start = Instant::now();
    let deadline = params.total_time_limit.map(|d| start + d);
    let remaining = || deadline.map(|d| d.saturating_duration_since(Instant::now()));

    let mut incumbent: Option<TimedSchedule> = None;
    let mut seed: Option<Assignment> = None;
    if params.warm_start {
        let ws = construct(instance, remaining(), params.sp_time_limit)?;
        seed = Some(assignment_of(&ws.schedule));
        incumbent = Some(ws);
    }

    let mut cuts: Vec<Cut> = Vec::new();
    let mut lower_bound: Time = 0;
    let mut bound_frozen = false;
    let mut all_exact = true;
    let mut proven = false;
    let mut log = Vec::new();
    let mut iteration = 0;
    let mut mp_time_limit = params.mp_time_limit;
    let mut mp_node_limit = params.mp_node_limit;

    loop {
        if iteration > 0
            && (params.max_iterations.is_some_and(|n| iteration >= n) || deadline.is_some_and(|d| Instant::now() >= d))
        {
            break;
        }
        iteration += 1;

        let mp_params = MasterParams {
            gap_limit: params.mp_gap_limit,
            time_limit: min_duration(mp_time_limit, remaining()),
            node_limit: mp_node_limit,
            mrt_mode: params.mrt_mode,
        };
        let mp = solve_master(instance, &cuts, &mp_params, seed.as_ref())?;
        if !bound_frozen {
            lower_bound = lower_bound.max(mp.lower_bound);
        }

        let sp_limit = min_duration(params.sp_time_limit, remaining());
        let solved = solve_machines(instance, &mp.assignment, sp_limit)?;
        let max_sp = solved.iter().map(|(_, r)| r.makespan).max().unwrap_or(0);
        let timed = assemble(instance, &solved)?;
        if incumbent.as_ref().is_none_or(|inc| timed.makespan < inc.makespan) {
            incumbent = Some(timed);
        }
        let upper_bound = incumbent.as_ref().expect("set above").makespan;
        lower_bound = lower_bound.min(upper_bound);
        log.push(IterationLog {
            iteration,
            mp_objective: mp.objective,
            max_sp_makespan: max_sp,
            upper_bound,
            lower_bound,
            wall_ms: start.elapsed().as_millis(),
        });

        let sp_exact = solved.iter().all(|(_, r)| r.proven_optimal);
        all_exact &= sp_exact;
        let confirmed = max_sp as f64 <= mp.objective as f64 * (1.0 + params.mp_gap_limit / 100.0);
        if (!mp.truncated && confirmed) || upper_bound <= lower_bound {
            proven = all_exact && !bound_frozen && upper_bound <= lower_bound;
            break;
        }

        let mut learned = false;
        for (m, result) in &solved {
            if result.makespan != max_sp || max_sp == 0 {
                continue;
            }
            let set: BTreeSet<(OrderId, ConfigId)> = mp
                .assignment
                .iter()
                .filter(|(_, &(mm, _))| mm == *m)
                .map(|(&o, &(_, c))| (o, c))
                .collect();
            if cuts.iter().any(|c| c.machine == *m && c.assignment_set == set && c.bound >= max_sp) {
                continue;
            }
            cuts.push(make_cut(*m, set, max_sp));
            learned = true;
        }
        if !sp_exact {
            // Cut bounds from truncated subproblems may overstate the optimum.
            bound_frozen = true;
        }
        if !learned {
            if !mp.truncated {
                break;
            }
            // The master repeated a known assignment before finishing; give it more room.
            mp_time_limit = mp_time_limit.map(|d| d * 2);
            mp_node_limit = mp_node_limit.map(|n| n.saturating_mul(2));
        }
        seed = Some(mp.assignment);
    }

    let best_schedule = incumbent.expect("at least one iteration ran");
    let upper_bound = best_schedule.makespan;
    let gap_percent = if upper_bound == 0 { 0.0 } else { gap(upper_bound as f64, lower_bound as f64).unwrap_or(0.0) };
    Ok(SolveResult {
        best_schedule,
        upper_bound,
        lower_bound,
        gap_percent,
        rpd_percent: None,
        iterations: iteration,
        cuts: cuts.len(),
        proven_optimal: proven,
        per_iteration_log: log,
    })
}

/// Two-step construction: assign orders with the master under the
/// utilized-set reconfiguration bound, then pack each configuration into
/// the fewest batches and sequence each machine's configurations.
pub fn warmstart_construct(instance: &Instance, time_limit: Option<Duration>) -> Result<TimedSchedule, LbbdError> {
    check(instance)?;
    construct(instance, time_limit, time_limit)
}

fn construct(
    instance: &Instance,
    time_limit: Option<Duration>,
    sp_time_limit: Option<Duration>,
) -> Result<TimedSchedule, LbbdError> {
    let params = MasterParams {
        gap_limit: 1.0,
        time_limit,
        node_limit: Some(WARMSTART_NODE_LIMIT),
        mrt_mode: MrtMode::Dynamic,
    };
    let mp = solve_master(instance, &[], &params, None)?;
    let solved = solve_machines(instance, &mp.assignment, min_duration(sp_time_limit, time_limit))?;
    Ok(assemble(instance, &solved)?)
}

fn check(instance: &Instance) -> Result<(), LbbdError> {
    let report = validate_instance(instance);
    if report.is_valid() {
        Ok(())
    } else {
        Err(LbbdError::InvalidInstance(report))
    }
}

fn min_duration(a: Option<Duration>, b: Option<Duration>) -> Option<Duration> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn assignment_of(schedule: &Schedule) -> Assignment {
    schedule.assignment.iter().map(|(&o, s)| (o, (s.machine, s.config))).collect()
}

/// Orders of `machine` grouped by configuration under `assignment`.
pub fn orders_by_config(
    instance: &Instance,
    assignment: &Assignment,
    machine: MachineId,
) -> BTreeMap<ConfigId, Vec<AssignedOrder>> {
    let m = instance.machine(machine).expect("assigned machine exists");
    let mut out: BTreeMap<ConfigId, Vec<AssignedOrder>> = BTreeMap::new();
    for (&o, &(mm, c)) in assignment {
        if mm != machine {
            continue;
        }
        let order = instance.order(o).expect("assigned order exists");
        let opt = m.config(c).and_then(|cfg| cfg.processing_time(o)).unwrap_or(0);
        out.entry(c).or_default().push(AssignedOrder { id: o, area: order.area, processing_time: opt });
    }
    out
}

fn solve_machines(
    instance: &Instance,
    assignment: &Assignment,
    time_limit: Option<Duration>,
) -> Result<Vec<(MachineId, SpResult)>, LbbdError> {
    instance
        .machines
        .par_iter()
        .map(|m| {
            let input = SpInput {
                machine: m,
                orders_by_config: orders_by_config(instance, assignment, m.id),
                time_limit,
            };
            solve_subproblem(&input)
                .map(|r| (m.id, r))
                .map_err(|source| LbbdError::Subproblem { machine: m.id, source })
        })
        .collect()
}

/// Full schedule with each machine's batches numbered in sequence order.
fn assemble(instance: &Instance, solved: &[(MachineId, SpResult)]) -> Result<TimedSchedule, TimingError> {
    let mut schedule = Schedule::default();
    for (m, result) in solved {
        if result.sequence.is_empty() {
            continue;
        }
        let mut batch = 0;
        for c in &result.sequence {
            for members in &result.batches[c] {
                for &o in members {
                    schedule.assignment.insert(o, Slot { machine: *m, config: *c, batch });
                }
                batch += 1;
            }
        }
        schedule.config_sequence.insert(*m, result.sequence.clone());
    }
    compute_timing(instance, &schedule)
}
