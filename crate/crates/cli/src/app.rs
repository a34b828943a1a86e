//! Subcommand implementations and exit-code mapping.

use crate::args::{
    BenchArgs, Cli, Command, ExportLpArgs, GanttArgs, GenArgs, MrtArg, ShapeArgs, SolveArgs, SolverArgs, SweepArgs,
    ValidateArgs,
};
use crate::bench::{run_bench, write_bench_csv, BenchSettings};
use crate::io::{read_instance, read_schedule, timed_to_json, write_text};
use crate::solve::run_method;
#[cfg(test)]
use crate::solve::Method;
use crate::sweep::{run_sweep, write_sweep_csv};
use clap::Parser;
use rmsched::generator::{generate, GenConfig, Scaling};
use rmsched::lbbd::{warmstart_construct, IterationLog, LbbdParams};
use rmsched::master::MrtMode;
use rmsched::model::{compute_timing, emit_milp, mip_start, validate_instance, validate_schedule};
use rmsched::oracle::OracleLimits;
use rmsched::Instance;
use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self { code: EXIT_INVALID, message: message.to_string() }
    }

    fn solver(message: impl ToString) -> Self {
        Self { code: EXIT_SOLVER, message: message.to_string() }
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match crate::config::merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message.trim_end());
            f.code
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Validate(a) => validate(a),
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a),
        Command::Gantt(a) => gantt(a),
        Command::ExportLp(a) => export_lp(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => write_text(p, text).map_err(Failure::invalid),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Failure::invalid),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let inst = read_instance(path).map_err(Failure::invalid)?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(Failure::invalid(format!("{}: invalid instance\n{report}", path.display())));
    }
    Ok(inst)
}

pub fn gen_config(shape: &ShapeArgs, seed: u64) -> GenConfig {
    GenConfig {
        n_orders: shape.orders,
        n_machines: shape.machines,
        n_configs_per_machine: shape.configs,
        remanufacturing_fraction: shape.remanuf_frac,
        seed,
        scaling: Scaling {
            reconfig: shape.scale_reconfig,
            setup: shape.scale_setup,
            area: shape.scale_area,
            opt_variance: shape.scale_opt_variance,
            eligibility: shape.eligibility,
        },
    }
}

fn seconds(what: &str, s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::invalid(format!("{what} must be a non-negative number of seconds")))
}

pub fn lbbd_params(a: &SolverArgs) -> Result<LbbdParams, Failure> {
    if !(a.mp_gap >= 0.0) {
        return Err(Failure::invalid("--mp-gap must be non-negative"));
    }
    Ok(LbbdParams {
        total_time_limit: Some(seconds("--time-limit", a.time_limit)?),
        mp_gap_limit: a.mp_gap,
        sp_time_limit: Some(seconds("--sp-time-limit", a.sp_time_limit)?),
        max_iterations: a.max_iters,
        mrt_mode: match a.mrt_mode {
            MrtArg::Static => MrtMode::Static,
            MrtArg::Dynamic => MrtMode::Dynamic,
        },
        mp_time_limit: a.mp_time_limit.map(|s| seconds("--mp-time-limit", s)).transpose()?,
        mp_node_limit: None,
        warm_start: !a.no_warm_start,
    })
}

fn gen(a: GenArgs) -> Outcome {
    let inst = generate(&gen_config(&a.shape, a.shape.seed)).map_err(Failure::invalid)?;
    emit(a.out.as_deref(), &crate::io::instance_to_json(&inst))
}

pub fn log_csv(log: &[IterationLog]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iter", "mp_obj", "max_sp", "ub", "lb", "wall_ms"]).expect("in-memory write");
    for r in log {
        w.serialize((r.iteration, r.mp_objective, r.max_sp_makespan, r.upper_bound, r.lower_bound, r.wall_ms))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii")
}

fn solve(a: SolveArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let params = lbbd_params(&a.solver)?;
    let run = run_method(&inst, a.method, &params, &OracleLimits::default()).map_err(|e| Failure {
        code: if e.is_invalid_input() {
            EXIT_INVALID
        } else if e.is_refusal() {
            EXIT_REFUSED
        } else {
            EXIT_SOLVER
        },
        message: e.to_string(),
    })?;
    if let Some(p) = &a.log {
        write_text(p, &log_csv(&run.log)).map_err(Failure::invalid)?;
    }
    let lb = run.lower_bound.map_or_else(|| "-".to_string(), |v| v.to_string());
    let gap = run
        .lower_bound
        .and_then(|lb| rmsched::model::gap(run.objective as f64, lb as f64).ok())
        .map_or_else(|| "-".to_string(), |g| format!("{g:.2}%"));
    let summary = format!(
        "{} {}: makespan {} lower bound {} gap {} optimal {} iterations {} time {} ms",
        a.method.name(),
        inst.label(),
        run.objective,
        lb,
        gap,
        run.proven_optimal,
        run.log.len(),
        run.wall_ms
    );
    match &a.out {
        Some(p) => {
            write_text(p, &timed_to_json(&run.timed)).map_err(Failure::invalid)?;
            println!("{summary}");
        }
        None => {
            eprintln!("{summary}");
            print!("{}", timed_to_json(&run.timed));
        }
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let Some(path) = a.schedule else {
        println!("instance {} ok", inst.label());
        return Ok(());
    };
    let (schedule, stated) = read_schedule(&path).map_err(Failure::invalid)?;
    let report = validate_schedule(&inst, &schedule);
    if !report.is_valid() {
        return Err(Failure::invalid(format!("{}: invalid schedule\n{report}", path.display())));
    }
    let timed = compute_timing(&inst, &schedule).map_err(Failure::invalid)?;
    if let Some(m) = stated.filter(|&m| m != timed.makespan) {
        return Err(Failure::invalid(format!("stated makespan {m} differs from computed {}", timed.makespan)));
    }
    println!("schedule ok, makespan {}", timed.makespan);
    Ok(())
}

fn bench(a: BenchArgs) -> Outcome {
    let mut instances = Vec::new();
    if let Some(n) = a.random {
        for i in 0..n as u64 {
            let seed = a.shape.seed + i;
            let inst = generate(&gen_config(&a.shape, seed)).map_err(Failure::invalid)?;
            instances.push((format!("{}-s{seed}", inst.label()), inst));
        }
    }
    for p in &a.instances {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        instances.push((name, load(p)?));
    }
    if instances.is_empty() {
        return Err(Failure::invalid("no instances: pass files or --random N"));
    }
    let settings = BenchSettings { params: lbbd_params(&a.solver)?, limits: OracleLimits::default() };
    let rows = run_bench(&instances, &a.methods, &settings);
    let mut buf = Vec::new();
    write_bench_csv(&mut buf, &rows).map_err(Failure::solver)?;
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("utf-8"))
}

fn sweep(a: SweepArgs) -> Outcome {
    let base = gen_config(&a.shape, a.shape.seed);
    let params = lbbd_params(&a.solver)?;
    let rows = run_sweep(&base, a.axis, &a.levels, a.replications, &params).map_err(Failure::invalid)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, a.axis, &rows).map_err(Failure::solver)?;
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("utf-8"))
}

fn gantt(a: GanttArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let (schedule, stated) = read_schedule(&a.schedule).map_err(Failure::invalid)?;
    let report = validate_schedule(&inst, &schedule);
    if !report.is_valid() {
        return Err(Failure::invalid(format!("{}: invalid schedule\n{report}", a.schedule.display())));
    }
    let mut timed = compute_timing(&inst, &schedule).map_err(Failure::invalid)?;
    if let Some(m) = stated {
        timed.makespan = m;
    }
    let svg = crate::gantt::gantt_svg(&inst, &timed).map_err(Failure::invalid)?;
    emit(a.out.as_deref(), &svg)
}

fn export_lp(a: ExportLpArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let lp = emit_milp(&inst).map_err(Failure::invalid)?;
    if let Some(p) = &a.mip_start {
        let ws = warmstart_construct(&inst, None).map_err(Failure::solver)?;
        write_text(p, &mip_start(&ws)).map_err(Failure::invalid)?;
    }
    emit(a.out.as_deref(), &lp)
}
