//! One entry point over the three solution methods.

use rmsched::lbbd::{solve_lbbd, warmstart_construct, IterationLog, LbbdError, LbbdParams};
use rmsched::oracle::{brute_force, OracleError, OracleLimits};
use rmsched::{Instance, Time, TimedSchedule};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Method {
    Lbbd,
    Warmstart,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lbbd => "lbbd",
            Method::Warmstart => "warmstart",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub timed: TimedSchedule,
    pub objective: Time,
    /// Proven lower bound, when the method yields one.
    pub lower_bound: Option<Time>,
    pub proven_optimal: bool,
    pub wall_ms: u128,
    pub log: Vec<IterationLog>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lbbd(#[from] LbbdError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl SolveError {
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, SolveError::Lbbd(LbbdError::InvalidInstance(_)) | SolveError::Oracle(OracleError::InvalidInstance(_)))
    }

    pub fn is_refusal(&self) -> bool {
        matches!(self, SolveError::Oracle(OracleError::TooLarge { .. } | OracleError::BudgetExceeded { .. }))
    }
}

/// Runs `method`; the warm start takes its limit from `params.total_time_limit`.
pub fn run_method(
    instance: &Instance,
    method: Method,
    params: &LbbdParams,
    limits: &OracleLimits,
) -> Result<MethodRun, SolveError> {
    let start = Instant::now();
    let run = match method {
        Method::Lbbd => {
            let r = solve_lbbd(instance, params)?;
            MethodRun {
                objective: r.upper_bound,
                lower_bound: Some(r.lower_bound),
                proven_optimal: r.proven_optimal,
                timed: r.best_schedule,
                wall_ms: 0,
                log: r.per_iteration_log,
            }
        }
        Method::Warmstart => {
            let timed = warmstart_construct(instance, params.total_time_limit)?;
            MethodRun {
                objective: timed.makespan,
                lower_bound: None,
                proven_optimal: false,
                timed,
                wall_ms: 0,
                log: Vec::new(),
            }
        }
        Method::Oracle => {
            let (timed, makespan) = brute_force(instance, limits)?;
            MethodRun {
                objective: makespan,
                lower_bound: Some(makespan),
                proven_optimal: true,
                timed,
                wall_ms: 0,
                log: Vec::new(),
            }
        }
    };
    Ok(MethodRun { wall_ms: start.elapsed().as_millis(), ..run })
}
