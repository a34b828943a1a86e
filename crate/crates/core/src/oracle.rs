//! Exhaustive solver for tiny instances.
//!
//! Every eligible order assignment is enumerated. For each machine every
//! set partition of every configuration's orders into feasible batches is
//! enumerated, together with every order of the utilized configurations.
//! Nothing is pruned, so the result is the true optimum.

use crate::model::{
    compute_timing, validate_instance, ConfigId, Instance, Machine, MachineId, OrderId, Schedule, Slot,
    Time, TimedSchedule, ValidationReport, INITIAL_CONFIG,
};
use crate::subproblem::AssignedOrder;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_orders: usize,
    pub max_machines: usize,
    pub max_configs_per_machine: usize,
    /// Largest number of complete assignments to enumerate.
    pub node_budget: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_orders: 7, max_machines: 2, max_configs_per_machine: 3, node_budget: 5_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {value} {what}, the oracle accepts at most {limit}")]
    TooLarge { what: &'static str, value: usize, limit: usize },
    #[error("{needed} assignments exceed the node budget of {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid instance:\n{0}")]
    InvalidInstance(ValidationReport),
}

#[derive(Debug, Clone)]
struct MachineBest {
    makespan: Time,
    sequence: Vec<ConfigId>,
    batches: BTreeMap<ConfigId, Vec<Vec<OrderId>>>,
}

/// Optimal schedule and makespan. Among optimal assignments the
/// lexicographically smallest one (orders by id, options by machine then
/// configuration id) is returned.
pub fn brute_force(instance: &Instance, limits: &OracleLimits) -> Result<(TimedSchedule, Time), OracleError> {
    let report = validate_instance(instance);
    if !report.is_valid() {
        return Err(OracleError::InvalidInstance(report));
    }
    let checks = [
        ("orders", instance.orders.len(), limits.max_orders),
        ("machines", instance.machines.len(), limits.max_machines),
        ("configurations on one machine", instance.max_configs(), limits.max_configs_per_machine),
    ];
    for (what, value, limit) in checks {
        if value > limit {
            return Err(OracleError::TooLarge { what, value, limit });
        }
    }

    let mut orders: Vec<_> = instance.orders.iter().collect();
    orders.sort_by_key(|o| o.id);
    let options: Vec<Vec<(MachineId, ConfigId)>> = orders
        .iter()
        .map(|o| {
            let mut opts: Vec<_> = instance.options_for(o).map(|(m, c)| (m.id, c.id)).collect();
            opts.sort_unstable();
            opts
        })
        .collect();
    let needed = options.iter().fold(1u64, |acc, o| acc.saturating_mul(o.len() as u64));
    if needed > limits.node_budget {
        return Err(OracleError::BudgetExceeded { needed, budget: limits.node_budget });
    }

    let mut memo: HashMap<(MachineId, Vec<(OrderId, ConfigId)>), MachineBest> = HashMap::new();
    let mut digits = vec![0usize; orders.len()];
    let mut best: Option<(Time, Vec<usize>)> = None;
    loop {
        let mut per_machine: BTreeMap<MachineId, Vec<(OrderId, ConfigId)>> = BTreeMap::new();
        for (i, &d) in digits.iter().enumerate() {
            let (m, c) = options[i][d];
            per_machine.entry(m).or_default().push((orders[i].id, c));
        }
        let mut makespan = 0;
        for (m, pairs) in per_machine {
            let machine = instance.machine(m).expect("option machine exists");
            let entry = memo
                .entry((m, pairs))
                .or_insert_with_key(|(_, pairs)| machine_optimum(instance, machine, pairs));
            makespan = makespan.max(entry.makespan);
        }
        if best.as_ref().is_none_or(|(b, _)| makespan < *b) {
            best = Some((makespan, digits.clone()));
        }
        if !advance(&mut digits, &options) {
            break;
        }
    }

    let (makespan, digits) = best.expect("at least one assignment");
    let mut per_machine: BTreeMap<MachineId, Vec<(OrderId, ConfigId)>> = BTreeMap::new();
    for (i, &d) in digits.iter().enumerate() {
        let (m, c) = options[i][d];
        per_machine.entry(m).or_default().push((orders[i].id, c));
    }
    let mut schedule = Schedule::default();
    for (m, pairs) in per_machine {
        let best = &memo[&(m, pairs)];
        let mut batch = 0;
        for c in &best.sequence {
            for members in &best.batches[c] {
                for &o in members {
                    schedule.assignment.insert(o, Slot { machine: m, config: *c, batch });
                }
                batch += 1;
            }
        }
        schedule.config_sequence.insert(m, best.sequence.clone());
    }
    let timed = compute_timing(instance, &schedule).expect("oracle schedule is consistent");
    debug_assert_eq!(timed.makespan, makespan);
    Ok((timed, makespan))
}

/// Odometer step with the last position turning fastest, so assignments
/// are visited in lexicographic order.
fn advance(digits: &mut [usize], options: &[Vec<(MachineId, ConfigId)>]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < options[i].len() {
            return true;
        }
        digits[i] = 0;
    }
    false
}

fn machine_optimum(instance: &Instance, machine: &Machine, pairs: &[(OrderId, ConfigId)]) -> MachineBest {
    let mut by_config: BTreeMap<ConfigId, Vec<OrderId>> = BTreeMap::new();
    for &(o, c) in pairs {
        by_config.entry(c).or_default().push(o);
    }
    let mut batches = BTreeMap::new();
    let mut busy = 0;
    for (&c, members) in &by_config {
        let config = machine.config(c).expect("option config exists");
        let areas: Vec<u64> = members.iter().map(|&o| instance.order(o).expect("order").area).collect();
        let mut fewest: Option<Vec<usize>> = None;
        for_each_partition(members.len(), &mut |labels| {
            let blocks = labels.iter().max().map_or(0, |&b| b + 1);
            if fewest.as_ref().is_some_and(|f| blocks >= f.iter().max().map_or(0, |&b| b + 1)) {
                return;
            }
            if partition_fits(labels, &areas, machine.processing_area, config.batch_limit) {
                fewest = Some(labels.to_vec());
            }
        });
        let labels = fewest.expect("singletons always fit a valid instance");
        let count = labels.iter().max().map_or(0, |&b| b + 1);
        let mut groups = vec![Vec::new(); count];
        for (i, &b) in labels.iter().enumerate() {
            groups[b].push(members[i]);
        }
        busy += members.iter().map(|&o| config.processing_time(o).expect("eligible")).sum::<Time>()
            + config.setup_time * count as Time;
        batches.insert(c, groups);
    }

    let configs: Vec<ConfigId> = by_config.keys().copied().collect();
    let mut best: Option<(Time, Vec<ConfigId>)> = None;
    for_each_permutation(&configs, &mut |seq| {
        let mut cost = 0;
        let mut prev = INITIAL_CONFIG;
        for &c in seq {
            cost += machine.reconfig_time(prev, c).expect("validated matrix");
            prev = c;
        }
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, seq.to_vec()));
        }
    });
    let (reconfig, sequence) = best.unwrap_or((0, Vec::new()));
    MachineBest { makespan: busy + reconfig, sequence, batches }
}

fn partition_fits(labels: &[usize], areas: &[u64], capacity: u64, batch_limit: bool) -> bool {
    let blocks = labels.iter().max().map_or(0, |&b| b + 1);
    let mut load = vec![0u64; blocks];
    let mut count = vec![0usize; blocks];
    for (i, &b) in labels.iter().enumerate() {
        load[b] += areas[i];
        count[b] += 1;
    }
    load.iter().all(|&a| a <= capacity) && (!batch_limit || count.iter().all(|&c| c <= 1))
}

/// Calls `f` with every set partition of `n` items as a restricted growth
/// string: item 0 is in block 0 and each item joins an existing block or
/// opens the next one.
pub fn for_each_partition(n: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, n: usize, max: usize, f: &mut dyn FnMut(&[usize])) {
        if labels.len() == n {
            f(labels);
            return;
        }
        let open = if labels.is_empty() { 0 } else { max + 1 };
        for b in 0..=open {
            labels.push(b);
            rec(labels, n, max.max(b), f);
            labels.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, 0, f);
}

/// Calls `f` with every permutation of `items` in lexicographic order of
/// positions.
pub fn for_each_permutation<T: Clone>(items: &[T], f: &mut dyn FnMut(&[T])) {
    fn rec<T: Clone>(items: &[T], used: &mut Vec<bool>, out: &mut Vec<T>, f: &mut dyn FnMut(&[T])) {
        if out.len() == items.len() {
            f(out);
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                out.push(items[i].clone());
                rec(items, used, out, f);
                out.pop();
                used[i] = false;
            }
        }
    }
    rec(items, &mut vec![false; items.len()], &mut Vec::with_capacity(items.len()), f);
}

/// Makespan of a schedule taken batch by batch in index order, paying a
/// reconfiguration whenever consecutive batches differ in configuration.
/// The configuration sequence is ignored. `None` if the schedule refers to
/// anything the instance lacks.
pub fn batch_level_makespan(instance: &Instance, schedule: &Schedule) -> Option<Time> {
    let mut makespan = 0;
    for m in schedule.machines_used() {
        let machine = instance.machine(m)?;
        let mut prev = INITIAL_CONFIG;
        let mut t = 0;
        for (config, members) in schedule.batches_on(m).into_values() {
            let cfg = machine.config(config)?;
            if config != prev {
                t += machine.reconfig_time(prev, config)?;
                prev = config;
            }
            t += cfg.setup_time;
            for o in members {
                t += cfg.processing_time(o)?;
            }
        }
        makespan = makespan.max(t);
    }
    Some(makespan)
}

/// Optimal makespan of one machine searched at batch level: every feasible
/// partition of every configuration's orders, then every order of all the
/// resulting batches, with configurations free to recur. Meant for a
/// handful of orders.
pub fn batch_level_optimum(machine: &Machine, orders_by_config: &BTreeMap<ConfigId, Vec<AssignedOrder>>) -> Option<Time> {
    struct Batch {
        config: ConfigId,
        work: Time,
    }
    let mut per_config: Vec<Vec<Vec<Batch>>> = Vec::new();
    for (&c, orders) in orders_by_config.iter().filter(|(_, v)| !v.is_empty()) {
        let cfg = machine.config(c)?;
        let areas: Vec<u64> = orders.iter().map(|o| o.area).collect();
        let mut options = Vec::new();
        for_each_partition(orders.len(), &mut |labels| {
            if !partition_fits(labels, &areas, machine.processing_area, cfg.batch_limit) {
                return;
            }
            let blocks = labels.iter().max().map_or(0, |&b| b + 1);
            let mut work = vec![cfg.setup_time; blocks];
            for (i, &b) in labels.iter().enumerate() {
                work[b] += orders[i].processing_time;
            }
            options.push(work.into_iter().map(|work| Batch { config: c, work }).collect());
        });
        if options.is_empty() {
            return None;
        }
        per_config.push(options);
    }

    let mut best: Option<Time> = None;
    let mut choice = vec![0usize; per_config.len()];
    loop {
        let batches: Vec<&Batch> = choice.iter().enumerate().flat_map(|(i, &k)| per_config[i][k].iter()).collect();
        let mut failed = false;
        for_each_permutation(&batches, &mut |seq| {
            let mut prev = INITIAL_CONFIG;
            let mut t = 0;
            for b in seq {
                if b.config != prev {
                    match machine.reconfig_time(prev, b.config) {
                        Some(r) => t += r,
                        None => {
                            failed = true;
                            return;
                        }
                    }
                    prev = b.config;
                }
                t += b.work;
            }
            best = Some(best.map_or(t, |b| b.min(t)));
        });
        if failed {
            return None;
        }
        let mut i = choice.len();
        loop {
            if i == 0 {
                return Some(best.unwrap_or(0));
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < per_config[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}
