//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Run with `cargo test -p rmsched-cli --test acceptance`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmsched::generator::{generate, generate_detailed, GenConfig, BASE_OPT, BATCH_LIMIT_P, MACHINE_AREA_FLOOR, MACHINE_HEIGHT, ORDER_AREA, ORDER_HEIGHT, PHI, RECONFIG, SETUP};
use rmsched::lbbd::{orders_by_config, solve_lbbd, warmstart_construct, LbbdParams};
use rmsched::master::{evaluate_cut, machine_lb, Assignment, Cut, MrtMode};
use rmsched::model::{canonicalize, compute_timing, emit_milp, gap, rpd, validate_schedule};
use rmsched::oracle::{batch_level_makespan, batch_level_optimum, brute_force, OracleLimits};
use rmsched::subproblem::{solve_subproblem, SpInput};
use rmsched::{ConfigId, Instance, MachineId, OrderId, OrderKind, Schedule, Slot, Time, INITIAL_CONFIG};
use rmsched_cli::sweep::{run_sweep, Axis};
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

const EXACT_INSTANCES: u64 = 120;
const EXACT_RUNTIME: Duration = Duration::from_secs(300);
const SP_SAMPLES: usize = 200;
const LB_SAMPLES: usize = 500;
const CUT_SAMPLES: usize = 2000;
const SCHEDULE_SAMPLES: usize = 200;
const METRIC_TOL: f64 = 0.01;
const GENERATOR_DRAWS: usize = 10_000;
const BL_TOL: f64 = 0.01;
const BENCH_INSTANCES: u64 = 10;
const BENCH_TOTAL: Duration = Duration::from_secs(30);
const BENCH_MP: Duration = Duration::from_secs(10);
const BENCH_GAP: f64 = 10.0;
const BENCH_GAP_QUORUM: usize = 8;
const SWEEP_TOTAL: Duration = Duration::from_secs(10);
const SWEEP_MP: Duration = Duration::from_secs(5);
const SWEEP_REPLICATIONS: usize = 3;
const MACHINE_REDUCTION: f64 = 0.30;
const LP_TOL: f64 = 1e-6;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// Up to 6 orders, 3 configurations and 2 machines, shape cycling with the seed.
fn tiny(seed: u64) -> Instance {
    let orders = 1 + (seed % 6) as usize;
    let configs = 1 + (seed / 6 % 3) as usize;
    let machines = 1 + (seed / 18 % 2) as usize;
    generate(&GenConfig::new(orders, configs, machines, seed)).unwrap()
}

fn random_assignment(inst: &Instance, rng: &mut ChaCha8Rng) -> Assignment {
    inst.orders
        .iter()
        .map(|o| {
            let opts: Vec<(MachineId, ConfigId)> = inst.options_for(o).map(|(m, c)| (m.id, c.id)).collect();
            (o.id, opts[rng.random_range(0..opts.len())])
        })
        .collect()
}

/// Valid schedule with random batching and batch order, configurations free
/// to recur on a machine.
fn random_schedule(inst: &Instance, rng: &mut ChaCha8Rng) -> Schedule {
    let a = random_assignment(inst, rng);
    let mut s = Schedule::default();
    for m in &inst.machines {
        let mut mine: Vec<(OrderId, ConfigId)> =
            a.iter().filter(|(_, &(mm, _))| mm == m.id).map(|(&o, &(_, c))| (o, c)).collect();
        mine.shuffle(rng);
        let mut batches: Vec<(ConfigId, Vec<OrderId>, u64)> = Vec::new();
        for (o, c) in mine {
            let area = inst.order(o).unwrap().area;
            let open = !m.config(c).unwrap().batch_limit;
            match batches.iter().position(|b| open && b.0 == c && b.2 + area <= m.processing_area) {
                Some(i) if rng.random_bool(0.5) => {
                    batches[i].1.push(o);
                    batches[i].2 += area;
                }
                _ => batches.push((c, vec![o], area)),
            }
        }
        batches.shuffle(rng);
        let mut seq = Vec::new();
        for (i, (c, members, _)) in batches.into_iter().enumerate() {
            if !seq.contains(&c) {
                seq.push(c);
            }
            for o in members {
                s.assignment.insert(o, Slot { machine: m.id, config: c, batch: i });
            }
        }
        if !seq.is_empty() {
            s.config_sequence.insert(m.id, seq);
        }
    }
    s
}

struct Exact {
    instances: Vec<Instance>,
    optima: Vec<Time>,
    lbbd: Vec<(Time, bool)>,
    elapsed: Duration,
}

fn exact_runs() -> Exact {
    let start = Instant::now();
    let mut out = Exact { instances: Vec::new(), optima: Vec::new(), lbbd: Vec::new(), elapsed: Duration::ZERO };
    for seed in 0..EXACT_INSTANCES {
        let inst = tiny(seed);
        out.optima.push(brute_force(&inst, &OracleLimits::default()).unwrap().1);
        let r = solve_lbbd(&inst, &LbbdParams::exact()).unwrap();
        let valid = validate_schedule(&inst, &r.best_schedule.schedule).is_valid();
        out.lbbd.push((r.upper_bound, r.proven_optimal && valid));
        out.instances.push(inst);
    }
    out.elapsed = start.elapsed();
    out
}

fn criterion_1(exact: &Exact) -> Verdict {
    let equal = exact.optima.iter().zip(&exact.lbbd).filter(|(o, (ub, ok))| *o == ub && *ok).count();
    verdict(
        equal == exact.instances.len() && exact.elapsed <= EXACT_RUNTIME,
        format!("{equal}/{} equal to the oracle, proven and valid, {:.1} s", exact.instances.len(), exact.elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut samples, mut equal, mut seed) = (0, 0, 0);
    while samples < SP_SAMPLES {
        let n = rng.random_range(1..=6);
        let c = rng.random_range(1..=3);
        let inst = generate(&GenConfig::new(n, c, 1, seed)).unwrap();
        seed += 1;
        let a = random_assignment(&inst, &mut rng);
        let m = &inst.machines[0];
        let by_config = orders_by_config(&inst, &a, m.id);
        let exhaustive = batch_level_optimum(m, &by_config);
        let sp = solve_subproblem(&SpInput { machine: m, orders_by_config: by_config, time_limit: None }).unwrap();
        samples += 1;
        equal += usize::from(sp.proven_optimal && Some(sp.makespan) == exhaustive);
    }
    verdict(equal == samples, format!("{equal}/{samples} subproblems equal to batch-level enumeration"))
}

fn criterion_3(exact: &Exact) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut wrong, mut binding, mut overstated) = (0, 0, 0);
    let sp = |inst: &Instance, a: &Assignment, m: MachineId| -> Time {
        let machine = inst.machine(m).unwrap();
        let input = SpInput { machine, orders_by_config: orders_by_config(inst, a, m), time_limit: None };
        solve_subproblem(&input).unwrap().makespan
    };
    for i in 0..CUT_SAMPLES {
        let inst = tiny(i as u64 % EXACT_INSTANCES);
        let a = random_assignment(&inst, &mut rng);
        let source = if rng.random_bool(0.5) { a.clone() } else { random_assignment(&inst, &mut rng) };
        let m = inst.machines[rng.random_range(0..inst.machines.len())].id;
        let on = |x: &Assignment| -> BTreeSet<(OrderId, ConfigId)> {
            x.iter().filter(|(_, &(mm, _))| mm == m).map(|(&o, &(_, c))| (o, c)).collect()
        };
        let cut = Cut { machine: m, assignment_set: on(&source), bound: sp(&inst, &source, m) };
        let value = evaluate_cut(&cut, &a);
        let kept = cut.assignment_set.is_subset(&on(&a));
        binding += usize::from(kept);
        let ok = if kept { value == cut.bound as i64 } else { value <= 0 };
        wrong += usize::from(!ok);
        overstated += usize::from(value > sp(&inst, &a, m) as i64);
    }
    let below = exact.optima.iter().zip(&exact.lbbd).filter(|(o, (ub, _))| ub < o).count();
    verdict(
        wrong == 0 && overstated == 0 && below == 0,
        format!(
            "{wrong} wrong of {CUT_SAMPLES} cut evaluations ({binding} binding), {overstated} above the true machine makespan, {below} LBBD results below the oracle"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut samples, mut over, mut inverted, mut seed) = (0, 0, 0, 0);
    while samples < LB_SAMPLES {
        let inst = generate(&GenConfig::new(12, 4, 3, 400 + seed)).unwrap();
        seed += 1;
        let a = random_assignment(&inst, &mut rng);
        for m in &inst.machines {
            let g = orders_by_config(&inst, &a, m.id);
            let stat = machine_lb(m, &g, MrtMode::Static);
            let dynamic = machine_lb(m, &g, MrtMode::Dynamic);
            let sp = solve_subproblem(&SpInput { machine: m, orders_by_config: g, time_limit: None }).unwrap();
            over += usize::from(dynamic > sp.makespan || stat > sp.makespan);
            inverted += usize::from(dynamic < stat);
            samples += 1;
        }
    }
    verdict(
        over == 0 && inverted == 0,
        format!("{samples} samples, {over} bounds above the subproblem, {inverted} dynamic below static"),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut increased, mut changed) = (0, 0);
    for i in 0..SCHEDULE_SAMPLES {
        let inst = generate(&GenConfig::new(4 + i % 12, 1 + i % 4, 1 + i % 3, 500 + i as u64)).unwrap();
        let s = random_schedule(&inst, &mut rng);
        let grouped = canonicalize(&inst, &s);
        let canon = compute_timing(&inst, &grouped).unwrap().makespan;
        if !validate_schedule(&inst, &grouped).is_valid() || canon > batch_level_makespan(&inst, &s).unwrap() {
            increased += 1;
        }
        let mut permuted = grouped.clone();
        for m in grouped.machines_used() {
            let batches = grouped.batches_on(m);
            for c in grouped.config_sequence[&m].iter() {
                let idx: Vec<usize> = batches.iter().filter(|(_, (bc, _))| bc == c).map(|(&b, _)| b).collect();
                let mut shuffled = idx.clone();
                shuffled.shuffle(&mut rng);
                for (from, to) in idx.iter().zip(&shuffled) {
                    for o in &batches[from].1 {
                        permuted.assignment.get_mut(o).unwrap().batch = *to;
                    }
                }
            }
        }
        changed += usize::from(compute_timing(&inst, &permuted).unwrap().makespan != canon);
    }
    verdict(
        increased == 0 && changed == 0,
        format!("{SCHEDULE_SAMPLES} schedules, {increased} lengthened by grouping, {changed} changed by permuting batches"),
    )
}

fn criterion_6() -> Verdict {
    let g = gap(603.59, 598.61).unwrap();
    let r = rpd(603.59, 603.59).unwrap();
    let printed = (format!("{g:.2}"), format!("{r:.2}"));
    verdict(
        (g - 0.83).abs() <= METRIC_TOL && r.abs() <= METRIC_TOL && printed == ("0.83".into(), "0.00".into()),
        format!("gap {} rpd {}", printed.0, printed.1),
    )
}

fn criterion_7() -> Verdict {
    let mut violations: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && violations.len() < 5 {
            violations.push(what.to_string());
        }
    };
    let (mut configs, mut limited, mut orders, mut matrices) = (0usize, 0usize, 0usize, 0usize);
    let mut seed = 7000;
    while configs < GENERATOR_DRAWS || orders < GENERATOR_DRAWS {
        let g = generate_detailed(&GenConfig::new(20, 5, 4, seed)).unwrap();
        seed += 1;
        let inst = &g.instance;
        let min_h = inst.machines.iter().map(|m| m.processing_height).min().unwrap();
        for o in &inst.orders {
            orders += 1;
            check((ORDER_AREA.0..=ORDER_AREA.1).contains(&o.area), "order area");
            check((ORDER_HEIGHT.0..=ORDER_HEIGHT.1).contains(&o.height) && o.height <= min_h, "order height");
            check(inst.options_for(o).count() >= 1, "order without options");
        }
        let reman = inst.orders.iter().filter(|o| o.kind == OrderKind::Remanufacturing).count();
        check(reman == 10, "remanufacturing count");
        for m in &inst.machines {
            check((MACHINE_HEIGHT.0..=MACHINE_HEIGHT.1).contains(&m.processing_height), "machine height");
            check(m.processing_area >= MACHINE_AREA_FLOOR, "machine area");
            for c in &m.configs {
                configs += 1;
                limited += usize::from(c.batch_limit);
                check((SETUP.0..=SETUP.1).contains(&c.setup_time), "setup");
                let phi = g.phi[&(m.id, c.id)];
                check((PHI.0..=PHI.1).contains(&phi), "phi");
                let lo = ((BASE_OPT.0 as f64 * phi).round() as Time).max(1);
                let hi = (BASE_OPT.1 as f64 * phi).round() as Time;
                check(c.processing.values().all(|t| (lo..=hi).contains(t)), "processing time");
            }
            matrices += 1;
            let raw = &g.raw_reconfig[&m.id];
            check(raw.iter().all(|(_, t)| (RECONFIG.0..=RECONFIG.1).contains(&t)), "raw reconfiguration");
            check(raw.iter().all(|((a, b), t)| m.reconfig.get(a, b).is_some_and(|r| r <= t)), "repair raised an entry");
            let r = &m.reconfig;
            for ((i, j), t) in r.iter() {
                for k in r.nodes() {
                    if k == INITIAL_CONFIG || k == i || k == j {
                        continue;
                    }
                    if let (Some(a), Some(b)) = (r.get(i, k), r.get(k, j)) {
                        check(t <= a + b, "triangle inequality");
                    }
                }
            }
        }
    }
    let p = limited as f64 / configs as f64;
    let bl_ok = (p - BATCH_LIMIT_P).abs() <= BL_TOL;
    verdict(
        violations.is_empty() && bl_ok,
        format!(
            "{orders} orders, {configs} configurations, {matrices} matrices; BL frequency {p:.4}; violations: {}",
            if violations.is_empty() { "none".to_string() } else { violations.join(", ") }
        ),
    )
}

fn criterion_8() -> Verdict {
    let params = LbbdParams {
        total_time_limit: Some(BENCH_TOTAL),
        mp_time_limit: Some(BENCH_MP),
        ..LbbdParams::default()
    };
    let mut not_improving = 0;
    let mut within = 0;
    let mut gaps = Vec::new();
    for seed in 0..BENCH_INSTANCES {
        let inst = generate(&GenConfig::new(50, 5, 5, seed)).unwrap();
        let ws = warmstart_construct(&inst, None).unwrap().makespan;
        let r = solve_lbbd(&inst, &params).unwrap();
        not_improving += usize::from(r.upper_bound > ws || !validate_schedule(&inst, &r.best_schedule.schedule).is_valid());
        within += usize::from(r.gap_percent <= BENCH_GAP);
        gaps.push(format!("{:.2}", r.gap_percent));
    }
    verdict(
        not_improving == 0 && within >= BENCH_GAP_QUORUM,
        format!(
            "{within}/{BENCH_INSTANCES} gaps <= {BENCH_GAP}% [{}], {not_improving} upper bounds above the warm start, {} s per run",
            gaps.join(" "),
            BENCH_TOTAL.as_secs()
        ),
    )
}

fn criterion_9() -> Verdict {
    let params = LbbdParams { total_time_limit: Some(SWEEP_TOTAL), mp_time_limit: Some(SWEEP_MP), ..LbbdParams::default() };
    let base = GenConfig::new(50, 5, 5, 0);
    let mean = |axis, levels: &[f64]| -> Vec<f64> {
        run_sweep(&base, axis, levels, SWEEP_REPLICATIONS, &params)
            .unwrap()
            .iter()
            .map(|r| r.mean_makespan.unwrap_or(f64::NAN))
            .collect()
    };
    let machines = mean(Axis::Machines, &[5.0, 10.0]);
    let reduction = 1.0 - machines[1] / machines[0];
    let reconfig = mean(Axis::Reconfig, &[1.0, 0.5]);
    let saving = 1.0 - reconfig[1] / reconfig[0];
    verdict(
        reduction >= MACHINE_REDUCTION && reconfig[1] < reconfig[0],
        format!(
            "machines 5->10: {:.2} -> {:.2} ({:.1}% lower); reconfiguration x0.5: {:.2} -> {:.2} ({:.1}% lower)",
            machines[0],
            machines[1],
            100.0 * reduction,
            reconfig[0],
            reconfig[1],
            100.0 * saving
        ),
    )
}

const HIGHS_SCRIPT: &str = r#"
import sys, highspy
for path in sys.argv[1:]:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.readModel(path)
    h.run()
    ok = h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    print(h.getInfo().objective_function_value if ok else "nan")
"#;

fn criterion_10(exact: &Exact) -> Verdict {
    let probe = std::process::Command::new("python3").args(["-c", "import highspy"]).output();
    if !probe.is_ok_and(|o| o.status.success()) {
        return Verdict::Skip("optional check; needs python3 with highspy".into());
    }
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, inst) in exact.instances.iter().enumerate() {
        let path = dir.path().join(format!("t{i}.lp"));
        std::fs::write(&path, emit_milp(inst).unwrap()).unwrap();
        files.push(path);
    }
    let out = std::process::Command::new("python3").arg("-c").arg(HIGHS_SCRIPT).args(&files).output().unwrap();
    if !out.status.success() {
        return Verdict::Fail(format!("HiGHS run failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    let values: Vec<f64> = String::from_utf8_lossy(&out.stdout).lines().map(|l| l.trim().parse().unwrap_or(f64::NAN)).collect();
    let equal = values.iter().zip(&exact.optima).filter(|(v, &o)| (*v - o as f64).abs() <= LP_TOL * (1.0 + o as f64)).count();
    verdict(equal == exact.optima.len(), format!("{equal}/{} HiGHS optima equal to the oracle", exact.optima.len()))
}

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn main() {
    let exact = exact_runs();
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle equivalence", Box::new(|| criterion_1(&exact))),
        ("subproblem decomposition", Box::new(criterion_2)),
        ("cut validity", Box::new(|| criterion_3(&exact))),
        ("bound validity", Box::new(criterion_4)),
        ("canonical schedules", Box::new(criterion_5)),
        ("metrics arithmetic", Box::new(criterion_6)),
        ("generator conformance", Box::new(criterion_7)),
        ("scaled benchmark", Box::new(criterion_8)),
        ("sensitivity direction", Box::new(criterion_9)),
        ("LP export", Box::new(|| criterion_10(&exact))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {:>2} {tag} {name}: {detail} ({secs:.1} s)", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
