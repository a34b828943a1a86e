//! Exact single-machine scheduling for a fixed order assignment.
//!
//! Once the orders of a machine are tied to configurations, the machine's
//! makespan separates into two independent parts. A configuration's duration
//! depends on its batching only through the number of batches formed, so
//! each configuration is packed into the fewest area-feasible batches. The
//! reconfiguration overhead depends only on the order of the utilized
//! configurations, which is a shortest Hamiltonian path from the initial
//! configuration.

use crate::model::{ConfigId, Machine, OrderId, ReconfigMatrix, Time, INITIAL_CONFIG};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Largest number of configurations [`sequence_configs`] will sequence.
pub const MAX_SEQUENCED_CONFIGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpError {
    #[error("order {order} has area {area} above the batch capacity {capacity}")]
    ItemTooLarge { order: OrderId, area: u64, capacity: u64 },
    #[error("machine {machine} has no configuration {config}")]
    UnknownConfig { machine: u32, config: ConfigId },
    #[error("order {order} is not eligible for configuration {config} of machine {machine}")]
    Ineligible { machine: u32, config: ConfigId, order: OrderId },
    #[error("no reconfiguration time {from} -> {to}")]
    MissingReconfig { from: ConfigId, to: ConfigId },
    #[error("{0} configurations exceed the sequencing limit of {MAX_SEQUENCED_CONFIGS}")]
    TooManyConfigs(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchItem {
    pub id: OrderId,
    pub area: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packing {
    /// Batches sorted by their smallest order id; ids ascending within a batch.
    pub batches: Vec<Vec<OrderId>>,
    /// False when the deadline cut the search short; the packing is then the
    /// first-fit-decreasing one.
    pub proven_optimal: bool,
}

/// Packs items into the fewest batches whose total area fits `capacity`.
///
/// With `batch_limit` every item gets its own batch. Otherwise the
/// first-fit-decreasing packing is the incumbent and a depth-first search
/// tries each smaller batch count down to the area lower bound. Items are
/// taken in descending area, ties by ascending id.
pub fn min_batches(
    items: &[BatchItem],
    capacity: u64,
    batch_limit: bool,
    deadline: Option<Instant>,
) -> Result<Packing, SpError> {
    if let Some(big) = items.iter().find(|i| i.area > capacity) {
        return Err(SpError::ItemTooLarge { order: big.id, area: big.area, capacity });
    }
    if batch_limit {
        let mut batches: Vec<Vec<OrderId>> = items.iter().map(|i| vec![i.id]).collect();
        batches.sort();
        return Ok(Packing { batches, proven_optimal: true });
    }

    let mut sorted = items.to_vec();
    sorted.sort_by(|a, b| b.area.cmp(&a.area).then(a.id.cmp(&b.id)));
    let areas: Vec<u64> = sorted.iter().map(|i| i.area).collect();

    let ffd = first_fit_decreasing(&areas, capacity);
    let ffd_count = ffd.iter().copied().max().map_or(0, |b| b + 1);
    let lower = area_lower_bound(&areas, capacity);

    let mut best = ffd;
    let mut proven = true;
    if lower < ffd_count {
        let mut search = PackSearch::new(&areas, capacity, deadline);
        for target in lower..ffd_count {
            match search.run(target) {
                Some(found) => {
                    best = found;
                    break;
                }
                None if search.timed_out => {
                    proven = false;
                    break;
                }
                None => {}
            }
        }
    }

    Ok(Packing { batches: collect_batches(&sorted, &best), proven_optimal: proven })
}

fn collect_batches(items: &[BatchItem], bin_of: &[usize]) -> Vec<Vec<OrderId>> {
    let count = bin_of.iter().copied().max().map_or(0, |b| b + 1);
    let mut batches = vec![Vec::new(); count];
    for (item, &bin) in items.iter().zip(bin_of) {
        batches[bin].push(item.id);
    }
    for b in &mut batches {
        b.sort_unstable();
    }
    batches.sort();
    batches
}

fn first_fit_decreasing(areas: &[u64], capacity: u64) -> Vec<usize> {
    let mut residual: Vec<u64> = Vec::new();
    areas
        .iter()
        .map(|&a| match residual.iter().position(|&r| r >= a) {
            Some(bin) => {
                residual[bin] -= a;
                bin
            }
            None => {
                residual.push(capacity - a);
                residual.len() - 1
            }
        })
        .collect()
}

/// Larger of the total-area bound and the number of items too big to share a
/// batch with each other.
fn area_lower_bound(areas: &[u64], capacity: u64) -> usize {
    let total: u64 = areas.iter().sum();
    let by_area = total.div_ceil(capacity) as usize;
    let large = areas.iter().filter(|&&a| 2 * a > capacity).count();
    by_area.max(large)
}

struct PackSearch<'a> {
    areas: &'a [u64],
    /// suffix_sum[i] = total area of items i..
    suffix_sum: Vec<u64>,
    capacity: u64,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
}

impl<'a> PackSearch<'a> {
    fn new(areas: &'a [u64], capacity: u64, deadline: Option<Instant>) -> Self {
        let mut suffix_sum = vec![0; areas.len() + 1];
        for i in (0..areas.len()).rev() {
            suffix_sum[i] = suffix_sum[i + 1] + areas[i];
        }
        Self { areas, suffix_sum, capacity, deadline, nodes: 0, timed_out: false }
    }

    fn run(&mut self, bins: usize) -> Option<Vec<usize>> {
        let mut residual = Vec::with_capacity(bins);
        let mut bin_of = vec![0; self.areas.len()];
        self.place(0, bins, &mut residual, &mut bin_of).then_some(bin_of)
    }

    fn place(&mut self, i: usize, bins: usize, residual: &mut Vec<u64>, bin_of: &mut [usize]) -> bool {
        if i == self.areas.len() {
            return true;
        }
        self.nodes += 1;
        if self.nodes % 1024 == 1 && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out = true;
        }
        if self.timed_out {
            return false;
        }
        let free: u64 = residual.iter().sum::<u64>() + (bins - residual.len()) as u64 * self.capacity;
        if self.suffix_sum[i] > free {
            return false;
        }
        let area = self.areas[i];
        for bin in 0..residual.len() {
            let r = residual[bin];
            // Bins with equal residual are interchangeable for the rest of the search.
            if r < area || residual[..bin].contains(&r) {
                continue;
            }
            residual[bin] -= area;
            bin_of[i] = bin;
            if self.place(i + 1, bins, residual, bin_of) {
                return true;
            }
            residual[bin] += area;
        }
        if residual.len() < bins {
            residual.push(self.capacity - area);
            bin_of[i] = residual.len() - 1;
            if self.place(i + 1, bins, residual, bin_of) {
                return true;
            }
            residual.pop();
        }
        false
    }
}

/// Cheapest order to visit every utilized configuration once, starting from
/// the initial configuration. Held-Karp over subsets; among equal-cost
/// sequences the lexicographically smallest is returned.
pub fn sequence_configs(
    utilized: &[ConfigId],
    reconfig: &ReconfigMatrix,
) -> Result<(Vec<ConfigId>, Time), SpError> {
    let mut nodes = utilized.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let n = nodes.len();
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    if n > MAX_SEQUENCED_CONFIGS {
        return Err(SpError::TooManyConfigs(n));
    }
    let lookup = |from: ConfigId, to: ConfigId| {
        reconfig.get(from, to).ok_or(SpError::MissingReconfig { from, to })
    };
    let start: Vec<Time> = nodes.iter().map(|&c| lookup(INITIAL_CONFIG, c)).collect::<Result<_, _>>()?;
    let mut arc = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                arc[i][j] = lookup(nodes[i], nodes[j])?;
            }
        }
    }

    // rest[mask * n + j]: cheapest way to visit everything outside `mask`
    // when standing at j, which is inside `mask`.
    let full = (1usize << n) - 1;
    let mut rest = vec![Time::MAX; (full + 1) * n];
    for j in 0..n {
        rest[full * n + j] = 0;
    }
    for mask in (1..full).rev() {
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let mut best = Time::MAX;
            for k in 0..n {
                if mask & (1 << k) == 0 {
                    best = best.min(arc[j][k] + rest[(mask | 1 << k) * n + k]);
                }
            }
            rest[mask * n + j] = best;
        }
    }

    let total = (0..n).map(|j| start[j] + rest[(1 << j) * n + j]).min().expect("n > 0");
    let mut sequence = Vec::with_capacity(n);
    let mut current = (0..n).find(|&j| start[j] + rest[(1 << j) * n + j] == total).expect("attained");
    let mut mask = 1usize << current;
    sequence.push(nodes[current]);
    while mask != full {
        let remaining = rest[mask * n + current];
        let next = (0..n)
            .find(|&k| mask & (1 << k) == 0 && arc[current][k] + rest[(mask | 1 << k) * n + k] == remaining)
            .expect("attained");
        mask |= 1 << next;
        current = next;
        sequence.push(nodes[current]);
    }
    Ok((sequence, total))
}

/// An order as seen by one machine's subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignedOrder {
    pub id: OrderId,
    pub area: u64,
    pub processing_time: Time,
}

#[derive(Debug, Clone)]
pub struct SpInput<'a> {
    pub machine: &'a Machine,
    /// Orders per utilized configuration. Configurations with an empty list
    /// are treated as unused.
    pub orders_by_config: BTreeMap<ConfigId, Vec<AssignedOrder>>,
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpResult {
    pub batches: BTreeMap<ConfigId, Vec<Vec<OrderId>>>,
    pub sequence: Vec<ConfigId>,
    pub makespan: Time,
    pub proven_optimal: bool,
}

impl SpResult {
    /// Processing plus setup time of each utilized configuration.
    pub fn durations(&self, input: &SpInput<'_>) -> BTreeMap<ConfigId, Time> {
        self.batches
            .iter()
            .map(|(&c, batches)| {
                let setup = input.machine.config(c).map_or(0, |cfg| cfg.setup_time);
                let opt: Time = input.orders_by_config[&c].iter().map(|o| o.processing_time).sum();
                (c, opt + setup * batches.len() as Time)
            })
            .collect()
    }
}

/// Minimum makespan of one machine for a fixed order-to-configuration
/// assignment.
pub fn solve_subproblem(input: &SpInput<'_>) -> Result<SpResult, SpError> {
    let machine = input.machine;
    let deadline = input.time_limit.map(|d| Instant::now() + d);
    let mut batches = BTreeMap::new();
    let mut busy: Time = 0;
    let mut proven = true;
    for (&config_id, orders) in &input.orders_by_config {
        if orders.is_empty() {
            continue;
        }
        let config = machine
            .config(config_id)
            .ok_or(SpError::UnknownConfig { machine: machine.id, config: config_id })?;
        if let Some(o) = orders.iter().find(|o| !config.is_eligible(o.id)) {
            return Err(SpError::Ineligible { machine: machine.id, config: config_id, order: o.id });
        }
        let items: Vec<BatchItem> = orders.iter().map(|o| BatchItem { id: o.id, area: o.area }).collect();
        let packing = min_batches(&items, machine.processing_area, config.batch_limit, deadline)?;
        proven &= packing.proven_optimal;
        busy += orders.iter().map(|o| o.processing_time).sum::<Time>()
            + config.setup_time * packing.batches.len() as Time;
        batches.insert(config_id, packing.batches);
    }
    let utilized: Vec<ConfigId> = batches.keys().copied().collect();
    let (sequence, reconfig) = sequence_configs(&utilized, &machine.reconfig)?;
    Ok(SpResult { batches, sequence, makespan: busy + reconfig, proven_optimal: proven })
}
