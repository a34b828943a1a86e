//! Master problem: assign every order to an eligible machine configuration.
//!
//! The master ignores batching and sequencing. Each machine's completion is
//! estimated from below by its processing load, one minimum reconfiguration
//! per utilized configuration, and the setups implied by the area its orders
//! occupy. Optimality cuts learned from solved subproblems raise the
//! objective of assignments that repeat a machine's earlier order set.
//!
//! The search is a best-first branch-and-bound with plunging: the most
//! promising open node is dived to a leaf, pushing its siblings on the way.

use crate::model::{ConfigId, Instance, Machine, MachineId, OrderId, Time};
use crate::subproblem::AssignedOrder;
use crate::tables::{Choice, Tables};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::time::{Duration, Instant};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// How the master estimates reconfiguration into a utilized configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MrtMode {
    /// Cheapest reconfiguration from any node of the machine.
    #[default]
    Static,
    /// Cheapest reconfiguration from the initial configuration or another
    /// utilized configuration.
    Dynamic,
}

pub type Assignment = BTreeMap<OrderId, (MachineId, ConfigId)>;

/// Benders optimality cut for one machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub machine: MachineId,
    /// `(order, configuration)` pairs the machine held when the cut was made.
    pub assignment_set: BTreeSet<(OrderId, ConfigId)>,
    /// Subproblem makespan for exactly that set.
    pub bound: Time,
}

/// Right-hand side of a cut under `assignment`: `bound * (1 - d)` where `d`
/// counts the cut's pairs the assignment no longer contains. Only `d = 0`
/// yields a positive value; everything else is non-binding.
pub fn evaluate_cut(cut: &Cut, assignment: &Assignment) -> i64 {
    let missing = cut
        .assignment_set
        .iter()
        .filter(|&&(o, c)| assignment.get(&o) != Some(&(cut.machine, c)))
        .count() as i64;
    cut.bound as i64 * (1 - missing)
}

/// Reconfiguration lower bound into each utilized configuration, restricted
/// to sources among the initial configuration and the other utilized ones.
pub fn tight_mrt(machine: &Machine, utilized: &BTreeSet<ConfigId>) -> BTreeMap<ConfigId, Time> {
    utilized
        .iter()
        .map(|&to| {
            let best = std::iter::once(crate::model::INITIAL_CONFIG)
                .chain(utilized.iter().copied())
                .filter(|&from| from != to)
                .filter_map(|from| machine.reconfig_time(from, to))
                .min()
                .unwrap_or(0);
            (to, best)
        })
        .collect()
}

/// Lower bound on a machine's subproblem makespan for a fixed assignment:
/// processing load, a reconfiguration estimate per utilized configuration,
/// and one setup per order (batch-limited configurations) or per
/// `ceil(total area / machine area)` batches otherwise.
pub fn machine_lb(machine: &Machine, assigned: &BTreeMap<ConfigId, Vec<AssignedOrder>>, mode: MrtMode) -> Time {
    let utilized: BTreeSet<ConfigId> =
        assigned.iter().filter(|(_, v)| !v.is_empty()).map(|(&c, _)| c).collect();
    let mrt = match mode {
        MrtMode::Static => utilized.iter().map(|&c| (c, machine.min_reconfig_into(c))).collect(),
        MrtMode::Dynamic => tight_mrt(machine, &utilized),
    };
    utilized
        .iter()
        .map(|c| {
            let orders = &assigned[c];
            let config = machine.config(*c);
            let setup = config.map_or(0, |cfg| cfg.setup_time);
            let limited = config.is_some_and(|cfg| cfg.batch_limit);
            let opt: Time = orders.iter().map(|o| o.processing_time).sum();
            let batches = if limited {
                orders.len() as Time
            } else {
                let area: u64 = orders.iter().map(|o| o.area).sum();
                area.div_ceil(machine.processing_area)
            };
            opt + mrt[c] + setup * batches
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterParams {
    /// Relative optimality gap in percent at which the search may stop.
    pub gap_limit: f64,
    pub time_limit: Option<Duration>,
    /// Cap on node expansions; makes truncated runs reproducible.
    pub node_limit: Option<u64>,
    pub mrt_mode: MrtMode,
}

impl Default for MasterParams {
    fn default() -> Self {
        Self { gap_limit: 1.0, time_limit: None, node_limit: None, mrt_mode: MrtMode::Static }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub assignment: Assignment,
    pub utilized: BTreeMap<MachineId, BTreeSet<ConfigId>>,
    /// Completion estimate of every machine, idle ones included.
    pub machine_estimates: BTreeMap<MachineId, Time>,
    pub objective: Time,
    /// Proven lower bound on the optimal master objective.
    pub lower_bound: Time,
    /// `(objective - lower_bound) / objective` in percent.
    pub proven_gap: f64,
    pub nodes: u64,
    /// Whether a time or node limit stopped the search.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MasterError {
    #[error("order {0} has no feasible machine configuration")]
    Infeasible(OrderId),
    #[error("machine {0} has more than 64 configurations")]
    TooManyConfigs(MachineId),
}

const MAX_OPEN_NODES: usize = 400_000;
const IMPROVE_ROUNDS: usize = 3;

/// Best assignment under the master objective: the largest machine estimate
/// or active cut bound. Stops once the proven gap is within
/// `params.gap_limit`, or at the time or node limit with the best assignment
/// found. A supplied `incumbent` seeds the upper bound.
pub fn solve_master(
    instance: &Instance,
    cuts: &[Cut],
    params: &MasterParams,
    incumbent: Option<&Assignment>,
) -> Result<MasterSolution, MasterError> {
    if let Some(m) = instance.machines.iter().find(|m| m.configs.len() > 64) {
        return Err(MasterError::TooManyConfigs(m.id));
    }
    let tables = Tables::new(instance);
    if let Some(pos) = tables.options.iter().position(Vec::is_empty) {
        return Err(MasterError::Infeasible(tables.orders[pos].id));
    }
    let mut search = Search::new(&tables, cuts, params);
    if let Some(seed) = incumbent {
        search.seed(seed);
    }
    search.run();
    Ok(search.into_solution())
}

#[derive(Clone, Copy, Default)]
struct Load {
    opt: Time,
    area: u64,
    count: u32,
}

struct DenseCut {
    len: u16,
    bound: Time,
}

/// Partial assignment with incrementally maintained aggregates.
#[derive(Clone)]
struct State {
    loads: Vec<Vec<Load>>,
    used: Vec<u64>,
    /// Static completion estimate per machine.
    ct: Vec<Time>,
    /// Same estimate with setups charged by area fraction.
    frac: Vec<f64>,
    cut_hits: Vec<u16>,
    cut_dead: Vec<bool>,
    active_cut: Time,
    remaining_frac: f64,
}

struct Node {
    bound: Time,
    seq: u64,
    choices: Vec<u16>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: smallest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .cmp(&self.bound)
            .then(self.choices.len().cmp(&other.choices.len()))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    t: &'a Tables,
    params: &'a MasterParams,
    /// Order positions in branching sequence.
    branch: Vec<usize>,
    min_frac: Vec<f64>,
    /// Per order position: bit set of machines it may run on.
    machine_mask: Vec<u64>,
    /// Machine subsets checked by [`Search::subset_bound`].
    subsets: Vec<u64>,
    /// First facility index of each machine in [`Search::ufl_bound`].
    fac_offset: Vec<usize>,
    /// Machine weights for [`Search::ufl_bound`], tuned at the root.
    lambda: Vec<f64>,
    cuts: Vec<DenseCut>,
    /// Per order position: (cut index, machine, config) the cut requires.
    cut_refs: Vec<Vec<(usize, usize, usize)>>,
    best: Option<(Time, Vec<usize>)>,
    /// Smallest bound among nodes discarded without proof of suboptimality.
    floor: Time,
    heap: BinaryHeap<Node>,
    seq: u64,
    nodes: u64,
    truncated: bool,
    improved: bool,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn new(t: &'a Tables, cuts: &[Cut], params: &'a MasterParams) -> Self {
        let n = t.orders.len();
        let mut branch: Vec<usize> = (0..n).collect();
        let max_opt = |o: usize| t.options[o].iter().map(|c| c.opt).max().unwrap_or(0);
        branch.sort_by(|&a, &b| max_opt(b).cmp(&max_opt(a)).then(t.orders[a].id.cmp(&t.orders[b].id)));

        let min_frac = (0..n)
            .map(|o| {
                t.options[o]
                    .iter()
                    .map(|c| c.opt as f64 + frac_setup(t, c, t.orders[o].area))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();

        let n_machines = t.machines.len();
        let machine_mask: Vec<u64> = t
            .options
            .iter()
            .map(|opts| opts.iter().fold(0u64, |acc, c| if c.machine < 64 { acc | 1 << c.machine } else { u64::MAX }))
            .collect();
        let subsets: Vec<u64> = if n_machines > 64 {
            Vec::new()
        } else if n_machines <= 6 {
            (1..1u64 << n_machines).collect()
        } else {
            let all = if n_machines == 64 { u64::MAX } else { (1u64 << n_machines) - 1 };
            let mut v = Vec::new();
            for i in 0..n_machines {
                v.push(1u64 << i);
                v.push(all & !(1u64 << i));
                for j in i + 1..n_machines {
                    v.push(1u64 << i | 1u64 << j);
                }
            }
            v
        };

        let fac_offset: Vec<usize> = t
            .machines
            .iter()
            .scan(0, |acc, m| {
                let start = *acc;
                *acc += m.configs.len();
                Some(start)
            })
            .collect();

        let mut dense = Vec::new();
        let mut cut_refs = vec![Vec::new(); n];
        for cut in cuts {
            let Some(m) = t.machine_pos(cut.machine) else { continue };
            let pairs: Option<Vec<(usize, usize)>> = cut
                .assignment_set
                .iter()
                .map(|&(o, c)| Some((t.order_pos(o)?, t.config_pos(m, c)?)))
                .collect();
            let Some(pairs) = pairs else { continue };
            if pairs.is_empty() {
                continue;
            }
            let idx = dense.len();
            for &(o, k) in &pairs {
                cut_refs[o].push((idx, m, k));
            }
            dense.push(DenseCut { len: pairs.len() as u16, bound: cut.bound });
        }

        Search {
            t,
            params,
            branch,
            min_frac,
            machine_mask,
            subsets,
            fac_offset,
            lambda: vec![1.0 / n_machines as f64; n_machines],
            cuts: dense,
            cut_refs,
            best: None,
            floor: Time::MAX,
            heap: BinaryHeap::new(),
            seq: 0,
            nodes: 0,
            truncated: false,
            improved: false,
            deadline: params.time_limit.map(|d| Instant::now() + d),
        }
    }

    fn root(&self) -> State {
        State {
            loads: self.t.machines.iter().map(|m| vec![Load::default(); m.configs.len()]).collect(),
            used: vec![0; self.t.machines.len()],
            ct: vec![0; self.t.machines.len()],
            frac: vec![0.0; self.t.machines.len()],
            cut_hits: vec![0; self.cuts.len()],
            cut_dead: vec![false; self.cuts.len()],
            active_cut: 0,
            remaining_frac: self.min_frac.iter().sum(),
        }
    }

    /// Increase of the static estimate of `choice.machine` if order `o` joins.
    fn delta(&self, s: &State, o: usize, c: &Choice) -> Time {
        let m = &self.t.machines[c.machine];
        let cfg = &m.configs[c.config];
        let load = s.loads[c.machine][c.config];
        let mrt = if s.used[c.machine] & (1 << c.config) == 0 { m.static_mrt[c.config] } else { 0 };
        let setup = if cfg.batch_limit {
            cfg.setup
        } else {
            let area = self.t.orders[o].area;
            cfg.setup * ((load.area + area).div_ceil(m.area) - load.area.div_ceil(m.area))
        };
        c.opt + mrt + setup
    }

    fn apply(&self, s: &mut State, o: usize, c: &Choice) {
        let d = self.delta(s, o, c);
        let m = &self.t.machines[c.machine];
        let area = self.t.orders[o].area;
        let first = s.used[c.machine] & (1 << c.config) == 0;
        s.ct[c.machine] += d;
        s.frac[c.machine] += c.opt as f64
            + frac_setup(self.t, c, area)
            + if first { m.static_mrt[c.config] as f64 } else { 0.0 };
        s.used[c.machine] |= 1 << c.config;
        let load = &mut s.loads[c.machine][c.config];
        load.opt += c.opt;
        load.area += area;
        load.count += 1;
        s.remaining_frac -= self.min_frac[o];
        for &(idx, m, k) in &self.cut_refs[o] {
            if s.cut_dead[idx] {
                continue;
            }
            if m == c.machine && k == c.config {
                s.cut_hits[idx] += 1;
                if s.cut_hits[idx] == self.cuts[idx].len {
                    s.active_cut = s.active_cut.max(self.cuts[idx].bound);
                }
            } else {
                s.cut_dead[idx] = true;
            }
        }
    }

    /// Lower bound on every completion of a state whose first `depth`
    /// branching orders are assigned.
    fn bound(&self, s: &State, depth: usize) -> Time {
        let mut lb = s.ct.iter().copied().max().unwrap_or(0).max(s.active_cut);
        for &o in &self.branch[depth..] {
            let best = self.t.options[o]
                .iter()
                .map(|c| s.ct[c.machine] + self.delta(s, o, c))
                .min()
                .unwrap_or(Time::MAX);
            lb = lb.max(best);
        }
        if depth < self.branch.len() {
            lb = lb.max(self.water_level(s, depth, None));
        }
        lb
    }

    /// Smallest level T such that the spare room below T on the machines of
    /// `subset` (all machines for `None`) absorbs the unassigned orders that
    /// can only run there. An idle machine starts at its cheapest
    /// reconfiguration; a busy one at its fractional estimate.
    fn water_level(&self, s: &State, depth: usize, subset: Option<u64>) -> Time {
        let load = match subset {
            None => s.remaining_frac.max(0.0),
            Some(mask) => self.branch[depth..]
                .iter()
                .filter(|&&o| self.machine_mask[o] & !mask == 0)
                .map(|&o| self.min_frac[o])
                .sum(),
        };
        if load <= 0.0 {
            return 0;
        }
        let mut bases: Vec<f64> = self
            .t
            .machines
            .iter()
            .enumerate()
            .filter(|(i, _)| subset.is_none_or(|mask| mask >> i & 1 == 1))
            .map(|(i, m)| if s.used[i] == 0 { m.min_static_mrt() as f64 } else { s.frac[i] })
            .collect();
        bases.sort_by(|a, b| a.total_cmp(b));
        let mut sum = 0.0;
        let mut level = 0.0;
        for (k, &base) in bases.iter().enumerate() {
            sum += base;
            level = (load + sum) / (k + 1) as f64;
            if bases.get(k + 1).is_none_or(|&next| level <= next) {
                break;
            }
        }
        (level - 1e-6).ceil().max(0.0) as Time
    }

    /// Largest water level over the machine subsets, each taking only the
    /// orders confined to it.
    fn subset_bound(&self, s: &State, depth: usize) -> Time {
        self.subsets.iter().map(|&mask| self.water_level(s, depth, Some(mask))).max().unwrap_or(0)
    }

    /// Lagrangian bound. Weighting the machine loads by `lambda` (summing to
    /// one) turns the rest of the assignment into uncapacitated facility
    /// location: each `(machine, configuration)` is a facility opened at its
    /// weighted reconfiguration cost, free if already utilized, and each
    /// unassigned order is a customer served at its weighted processing and
    /// fractional setup cost. Any dual ascent solution bounds the weighted
    /// load from below. Also returns the unweighted machine loads of the
    /// primal solution read off the tight facilities.
    fn ufl_bound(&self, s: &State, depth: usize, lambda: &[f64]) -> (f64, Vec<f64>) {
        let t = self.t;
        let mut slack: Vec<f64> = Vec::new();
        for (m, info) in t.machines.iter().enumerate() {
            for k in 0..info.configs.len() {
                let open = s.used[m] >> k & 1 == 1;
                slack.push(if open { 0.0 } else { lambda[m] * info.static_mrt[k] as f64 });
            }
        }
        let costs: Vec<Vec<(f64, usize, f64)>> = self.branch[depth..]
            .iter()
            .map(|&o| {
                let mut v: Vec<(f64, usize, f64)> = t.options[o]
                    .iter()
                    .map(|c| {
                        let raw = c.opt as f64 + frac_setup(t, c, t.orders[o].area);
                        (lambda[c.machine] * raw, self.fac_offset[c.machine] + c.config, raw)
                    })
                    .collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                v
            })
            .collect();
        let mut v: Vec<f64> = costs.iter().map(|c| c[0].0).collect();
        let mut reach: Vec<usize> = costs
            .iter()
            .zip(&v)
            .map(|(c, &vj)| c.iter().take_while(|x| x.0 <= vj + 1e-9).count())
            .collect();
        loop {
            let mut changed = false;
            for j in 0..costs.len() {
                let opts = &costs[j];
                let p = reach[j];
                let next = opts.get(p).map_or(f64::INFINITY, |x| x.0);
                let room = opts[..p].iter().map(|x| slack[x.1]).fold(f64::INFINITY, f64::min);
                let delta = (next - v[j]).min(room);
                if delta > 1e-9 && delta.is_finite() {
                    v[j] += delta;
                    for x in &opts[..p] {
                        slack[x.1] -= delta;
                    }
                    reach[j] += opts[p..].iter().take_while(|x| x.0 <= v[j] + 1e-9).count();
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let base: f64 = lambda.iter().zip(&s.frac).map(|(l, f)| l * f).sum();

        let mut loads = s.frac.clone();
        let mut opened: Vec<bool> = slack.iter().map(|&x| x <= 1e-9).collect();
        let mut charged = vec![false; slack.len()];
        for (m, info) in t.machines.iter().enumerate() {
            for k in 0..info.configs.len() {
                if s.used[m] >> k & 1 == 1 {
                    charged[self.fac_offset[m] + k] = true;
                }
            }
        }
        for opts in &costs {
            let pick = opts.iter().find(|x| opened[x.1]).unwrap_or(&opts[0]);
            let m = t.machines.iter().enumerate().rposition(|(i, _)| self.fac_offset[i] <= pick.1).expect("facility");
            opened[pick.1] = true;
            if !charged[pick.1] {
                charged[pick.1] = true;
                loads[m] += t.machines[m].static_mrt[pick.1 - self.fac_offset[m]] as f64;
            }
            loads[m] += pick.2;
        }
        (base + v.iter().sum::<f64>(), loads)
    }

    fn expensive_bound(&self, s: &State, depth: usize) -> Time {
        let (ufl, _) = self.ufl_bound(s, depth, &self.lambda);
        self.subset_bound(s, depth).max((ufl - 1e-6).ceil().max(0.0) as Time)
    }

    /// Tunes [`Search::lambda`] by multiplicative ascent on the primal loads
    /// and returns the best bound seen.
    fn tune_lambda(&mut self, s: &State) -> Time {
        let mut lambda = self.lambda.clone();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..60 {
            let (lb, loads) = self.ufl_bound(s, 0, &lambda);
            if lb > best {
                best = lb;
                self.lambda = lambda.clone();
            }
            let mean = loads.iter().sum::<f64>() / loads.len() as f64;
            if mean <= 0.0 {
                break;
            }
            for (l, g) in lambda.iter_mut().zip(&loads) {
                *l *= (0.2 * (g - mean) / mean).exp();
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
        (best - 1e-6).ceil().max(0.0) as Time
    }

    fn objective(&self, s: &State) -> Time {
        let machines = match self.params.mrt_mode {
            MrtMode::Static => s.ct.iter().copied().max().unwrap_or(0),
            MrtMode::Dynamic => (0..self.t.machines.len()).map(|m| self.dynamic_ct(s, m)).max().unwrap_or(0),
        };
        machines.max(s.active_cut)
    }

    fn dynamic_ct(&self, s: &State, m: usize) -> Time {
        let info = &self.t.machines[m];
        let mut ct = s.ct[m];
        let mut rest = s.used[m];
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            ct = ct - info.static_mrt[k] + info.tight_mrt(k, s.used[m]);
            rest &= rest - 1;
        }
        ct
    }

    fn prunes(&self, bound: Time) -> bool {
        match &self.best {
            None => false,
            Some((ub, _)) => bound >= *ub || (bound as f64) >= *ub as f64 * (1.0 - self.params.gap_limit / 100.0),
        }
    }

    /// Records a bound discarded only because of the gap tolerance.
    fn discard(&mut self, bound: Time) {
        if self.best.as_ref().is_none_or(|(ub, _)| bound < *ub) {
            self.floor = self.floor.min(bound);
        }
    }

    fn rebuild(&self, choices: &[u16]) -> State {
        let mut s = self.root();
        for (d, &i) in choices.iter().enumerate() {
            let o = self.branch[d];
            self.apply(&mut s, o, &self.t.options[o][i as usize]);
        }
        s
    }

    fn seed(&mut self, assignment: &Assignment) {
        let mut choices = Vec::with_capacity(self.branch.len());
        for &o in &self.branch {
            let Some(&(m_id, c_id)) = assignment.get(&self.t.orders[o].id) else { return };
            let found = self.t.options[o].iter().position(|c| {
                self.t.machines[c.machine].id == m_id && self.t.machines[c.machine].configs[c.config].id == c_id
            });
            let Some(i) = found else { return };
            choices.push(i as u16);
        }
        let obj = self.objective(&self.rebuild(&choices));
        self.best = Some((obj, choices.iter().map(|&i| i as usize).collect()));
    }

    /// Limits apply only once an incumbent exists; the first dive always
    /// reaches a leaf.
    fn out_of_budget(&mut self) -> bool {
        if self.best.is_none() {
            return false;
        }
        if self.params.node_limit.is_some_and(|limit| self.nodes >= limit) {
            self.truncated = true;
        }
        if self.nodes.is_multiple_of(128) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.truncated = true;
        }
        self.truncated
    }

    fn push(&mut self, bound: Time, choices: Vec<u16>) {
        if self.heap.len() >= MAX_OPEN_NODES {
            self.floor = self.floor.min(bound);
            return;
        }
        self.seq += 1;
        self.heap.push(Node { bound, seq: self.seq, choices });
    }

    fn run(&mut self) {
        let n = self.branch.len();
        if n == 0 {
            self.best = Some((0, Vec::new()));
            return;
        }
        let root = self.root();
        let ufl = self.tune_lambda(&root);
        let root_bound = self.bound(&root, 0).max(self.subset_bound(&root, 0)).max(ufl);
        self.push(root_bound, Vec::new());
        self.maybe_improve();

        while let Some(top) = self.heap.peek() {
            if self.prunes(top.bound) {
                // Everything left is at least this bound.
                let bound = top.bound;
                self.discard(bound);
                self.heap.clear();
                break;
            }
            if self.out_of_budget() {
                break;
            }
            let node = self.heap.pop().expect("peeked");
            let mut state = self.rebuild(&node.choices);
            let mut choices = node.choices;
            self.dive(&mut state, &mut choices, n, node.bound);
            self.maybe_improve();
        }
    }

    fn dive(&mut self, state: &mut State, choices: &mut Vec<u16>, n: usize, mut bound: Time) {
        loop {
            self.nodes += 1;
            let depth = choices.len();
            let o = self.branch[depth];
            let options = &self.t.options[o];

            if depth + 1 == n {
                for (i, c) in options.iter().enumerate() {
                    let mut child = state.clone();
                    self.apply(&mut child, o, c);
                    let obj = self.objective(&child);
                    if self.best.as_ref().is_none_or(|(ub, _)| obj < *ub) {
                        let mut full: Vec<usize> = choices.iter().map(|&x| x as usize).collect();
                        full.push(i);
                        self.best = Some((obj, full));
                    }
                }
                return;
            }

            bound = bound.max(self.expensive_bound(state, depth));
            if self.prunes(bound) {
                self.discard(bound);
                return;
            }
            let mut children: Vec<(Time, usize)> = Vec::with_capacity(options.len());
            for (i, c) in options.iter().enumerate() {
                let mut child = state.clone();
                self.apply(&mut child, o, c);
                let own = self.bound(&child, depth + 1);
                let b = own.max(bound);
                if self.prunes(b) {
                    self.discard(b);
                } else {
                    children.push((own, i));
                }
            }
            if children.is_empty() {
                return;
            }
            children.sort_unstable();
            for &(own, i) in &children[1..] {
                let mut c = choices.clone();
                c.push(i as u16);
                self.push(own.max(bound), c);
            }
            let (first_bound, first) = children[0];
            bound = first_bound.max(bound);
            self.apply(state, o, &options[first]);
            choices.push(first as u16);
            if self.out_of_budget() {
                // Keep the dive's current node open so the bound stays valid.
                self.push(bound, choices.clone());
                return;
            }
        }
    }

    fn maybe_improve(&mut self) {
        if !self.improved && self.best.is_some() {
            self.improved = true;
            for _ in 0..IMPROVE_ROUNDS {
                self.improve();
            }
        }
    }

    /// Completion estimate of machine `m` from its configuration loads.
    fn local_ct(&self, m: usize, loads: &[Load]) -> Time {
        let info = &self.t.machines[m];
        let used = loads.iter().enumerate().filter(|(_, l)| l.count > 0).fold(0u64, |acc, (k, _)| acc | 1 << k);
        loads
            .iter()
            .enumerate()
            .filter(|(_, l)| l.count > 0)
            .map(|(k, l)| {
                let cfg = &info.configs[k];
                let mrt = match self.params.mrt_mode {
                    MrtMode::Static => info.static_mrt[k],
                    MrtMode::Dynamic => info.tight_mrt(k, used),
                };
                let batches = if cfg.batch_limit { l.count as Time } else { l.area.div_ceil(info.area) };
                l.opt + mrt + cfg.setup * batches
            })
            .sum()
    }

    /// Simulated annealing over single-order moves, started from the
    /// incumbent. The move count and random seed are fixed, so the result
    /// depends only on the inputs.
    fn improve(&mut self) {
        let Some((start_obj, picks)) = self.best.clone() else { return };
        let n = self.branch.len();
        let machines = self.t.machines.len();
        let mut choice = picks;
        let mut loads: Vec<Vec<Load>> = self.t.machines.iter().map(|m| vec![Load::default(); m.configs.len()]).collect();
        let mut hits = vec![0u16; self.cuts.len()];
        for d in 0..n {
            let o = self.branch[d];
            let c = self.t.options[o][choice[d]];
            let l = &mut loads[c.machine][c.config];
            l.opt += c.opt;
            l.area += self.t.orders[o].area;
            l.count += 1;
            for &(idx, m, k) in &self.cut_refs[o] {
                if m == c.machine && k == c.config {
                    hits[idx] += 1;
                }
            }
        }
        let mut ct: Vec<Time> = (0..machines).map(|m| self.local_ct(m, &loads[m])).collect();
        let score = |ct: &[Time], hits: &[u16]| {
            let cut = self.cuts.iter().zip(hits).filter(|(c, &h)| h == c.len).map(|(c, _)| c.bound).max().unwrap_or(0);
            let obj = ct.iter().copied().max().unwrap_or(0).max(cut);
            let spread: f64 = ct.iter().map(|&x| (x as f64) * (x as f64)).sum();
            (obj, spread)
        };
        let (mut obj, mut spread) = score(&ct, &hits);
        let mut best = (start_obj, choice.clone());
        if obj < best.0 {
            best = (obj, choice.clone());
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let moves = (8_000 * n).min(400_000);
        let cool_every = (moves / 400).max(1);
        let mut temp = (0.05 * obj as f64).max(1.0);
        let norm = (obj as f64 * obj as f64).max(1.0);
        let move_load = |loads: &mut Vec<Vec<Load>>, hits: &mut Vec<u16>, o: usize, c: &Choice, sign: bool| {
            let l = &mut loads[c.machine][c.config];
            let area = self.t.orders[o].area;
            if sign {
                l.opt += c.opt;
                l.area += area;
                l.count += 1;
            } else {
                l.opt -= c.opt;
                l.area -= area;
                l.count -= 1;
            }
            for &(idx, m, k) in &self.cut_refs[o] {
                if m == c.machine && k == c.config {
                    if sign {
                        hits[idx] += 1;
                    } else {
                        hits[idx] -= 1;
                    }
                }
            }
        };
        for step in 0..moves {
            if step % cool_every == 0 && step > 0 {
                temp *= 0.985;
            }
            let d = rng.random_range(0..n);
            let o = self.branch[d];
            let opts = &self.t.options[o];
            if opts.len() < 2 {
                continue;
            }
            let i = rng.random_range(0..opts.len());
            if i == choice[d] {
                continue;
            }
            let (old, new) = (opts[choice[d]], opts[i]);
            move_load(&mut loads, &mut hits, o, &old, false);
            move_load(&mut loads, &mut hits, o, &new, true);
            let (ct_old, ct_new) = (ct[old.machine], ct[new.machine]);
            ct[old.machine] = self.local_ct(old.machine, &loads[old.machine]);
            ct[new.machine] = self.local_ct(new.machine, &loads[new.machine]);
            let (obj2, spread2) = score(&ct, &hits);
            let delta = obj2 as f64 - obj as f64 + (spread2 - spread) / norm;
            if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
                choice[d] = i;
                obj = obj2;
                spread = spread2;
                if obj < best.0 {
                    best = (obj, choice.clone());
                }
            } else {
                move_load(&mut loads, &mut hits, o, &new, false);
                move_load(&mut loads, &mut hits, o, &old, true);
                ct[old.machine] = ct_old;
                ct[new.machine] = ct_new;
            }
        }
        if best.0 < start_obj {
            self.best = Some(best);
        }
    }

    fn into_solution(self) -> MasterSolution {
        let (objective, picks) = self.best.clone().expect("search always reaches a leaf or a seed");
        let open = self.heap.peek().map_or(Time::MAX, |n| n.bound);
        let lower_bound = objective.min(self.floor).min(open);
        let proven_gap = if objective == 0 { 0.0 } else { (objective - lower_bound) as f64 / objective as f64 * 100.0 };

        let mut state = self.root();
        let mut assignment = Assignment::new();
        let mut utilized: BTreeMap<MachineId, BTreeSet<ConfigId>> = BTreeMap::new();
        for (d, &i) in picks.iter().enumerate() {
            let o = self.branch[d];
            let c = &self.t.options[o][i];
            self.apply(&mut state, o, c);
            let m = &self.t.machines[c.machine];
            assignment.insert(self.t.orders[o].id, (m.id, m.configs[c.config].id));
            utilized.entry(m.id).or_default().insert(m.configs[c.config].id);
        }
        let machine_estimates = (0..self.t.machines.len())
            .map(|m| {
                let ct = match self.params.mrt_mode {
                    MrtMode::Static => state.ct[m],
                    MrtMode::Dynamic => self.dynamic_ct(&state, m),
                };
                (self.t.machines[m].id, ct)
            })
            .collect();
        MasterSolution {
            assignment,
            utilized,
            machine_estimates,
            objective,
            lower_bound,
            proven_gap,
            nodes: self.nodes,
            truncated: self.truncated,
        }
    }
}

fn frac_setup(t: &Tables, c: &Choice, area: u64) -> f64 {
    let m = &t.machines[c.machine];
    let cfg = &m.configs[c.config];
    if cfg.batch_limit {
        cfg.setup as f64
    } else {
        cfg.setup as f64 * area as f64 / m.area as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MachineConfig, Order, OrderKind, ReconfigMatrix};

    fn cfg(id: ConfigId, setup: Time, limit: bool, opt: &[(OrderId, Time)]) -> MachineConfig {
        MachineConfig { id, setup_time: setup, batch_limit: limit, processing: opt.iter().copied().collect() }
    }

    fn reconfig(entries: &[((ConfigId, ConfigId), Time)]) -> ReconfigMatrix {
        entries.iter().copied().collect()
    }

    fn order(id: OrderId, area: u64) -> Order {
        Order { id, kind: OrderKind::Remanufacturing, area, height: 1 }
    }

    fn assigned(id: OrderId, area: u64, opt: Time) -> AssignedOrder {
        AssignedOrder { id, area, processing_time: opt }
    }

    #[test]
    fn machine_lb_substitution() {
        let m = Machine {
            id: 1,
            processing_area: 100,
            processing_height: 10,
            configs: vec![cfg(1, 7, false, &[(1, 20), (2, 30)])],
            reconfig: reconfig(&[((0, 1), 10)]),
        };
        let assigned = [(1, vec![assigned(1, 50, 20), assigned(2, 60, 30)])].into_iter().collect();
        assert_eq!(machine_lb(&m, &assigned, MrtMode::Static), 50 + 10 + 7 * 2);
        assert_eq!(machine_lb(&m, &BTreeMap::new(), MrtMode::Static), 0);
    }

    #[test]
    fn batch_limited_setup_per_order() {
        let m = Machine {
            id: 1,
            processing_area: 100,
            processing_height: 10,
            configs: vec![cfg(1, 6, true, &[(1, 1), (2, 1), (3, 1)])],
            reconfig: reconfig(&[((0, 1), 0)]),
        };
        let assigned = [(1, vec![assigned(1, 10, 1), assigned(2, 10, 1), assigned(3, 10, 1)])].into_iter().collect();
        assert_eq!(machine_lb(&m, &assigned, MrtMode::Static), 3 + 18);
    }

    fn two_config_machine() -> Machine {
        Machine {
            id: 1,
            processing_area: 100,
            processing_height: 10,
            configs: vec![cfg(1, 5, false, &[]), cfg(2, 5, false, &[])],
            reconfig: reconfig(&[((0, 1), 10), ((0, 2), 12), ((1, 2), 5), ((2, 1), 6)]),
        }
    }

    #[test]
    fn tight_mrt_examples() {
        let m = two_config_machine();
        let both = tight_mrt(&m, &[1, 2].into_iter().collect());
        assert_eq!(both, [(1, 6), (2, 5)].into_iter().collect());
        let single = tight_mrt(&m, &[2].into_iter().collect());
        assert_eq!(single, [(2, 12)].into_iter().collect());
    }

    #[test]
    fn evaluate_cut_cases() {
        let cut = Cut { machine: 1, assignment_set: [(1, 1), (2, 1)].into_iter().collect(), bound: 90 };
        let same: Assignment = [(1, (1, 1)), (2, (1, 1)), (3, (2, 1))].into_iter().collect();
        assert_eq!(evaluate_cut(&cut, &same), 90);
        let one_moved: Assignment = [(1, (1, 1)), (2, (2, 1)), (3, (2, 1))].into_iter().collect();
        assert_eq!(evaluate_cut(&cut, &one_moved), 0);
        let two_moved: Assignment = [(1, (1, 2)), (2, (2, 1))].into_iter().collect();
        assert_eq!(evaluate_cut(&cut, &two_moved), -90);
    }

    /// One order that can go to machine 1 (estimate 74) or machine 2 (60).
    fn choice_instance() -> Instance {
        Instance {
            orders: vec![order(1, 50)],
            machines: vec![
                Machine {
                    id: 1,
                    processing_area: 100,
                    processing_height: 10,
                    configs: vec![cfg(1, 7, false, &[(1, 57)])],
                    reconfig: reconfig(&[((0, 1), 10)]),
                },
                Machine {
                    id: 2,
                    processing_area: 100,
                    processing_height: 10,
                    configs: vec![cfg(1, 5, false, &[(1, 40)])],
                    reconfig: reconfig(&[((0, 1), 15)]),
                },
            ],
            batch_slots: 1,
        }
    }

    #[test]
    fn picks_cheaper_pair() {
        let sol = solve_master(&choice_instance(), &[], &MasterParams { gap_limit: 0.0, ..Default::default() }, None)
            .unwrap();
        assert_eq!(sol.objective, 60);
        assert_eq!(sol.assignment[&1], (2, 1));
        assert_eq!(sol.machine_estimates[&1], 0);
        assert_eq!(sol.proven_gap, 0.0);
    }

    #[test]
    fn active_cut_moves_the_assignment() {
        let cut = Cut { machine: 2, assignment_set: [(1, 1)].into_iter().collect(), bound: 80 };
        let sol = solve_master(&choice_instance(), &[cut], &MasterParams { gap_limit: 0.0, ..Default::default() }, None)
            .unwrap();
        assert_eq!(sol.assignment[&1], (1, 1));
        assert_eq!(sol.objective, 74);
    }

    #[test]
    fn seed_is_kept_when_nothing_beats_it() {
        let seed: Assignment = [(1, (2, 1))].into_iter().collect();
        let sol = solve_master(&choice_instance(), &[], &MasterParams::default(), Some(&seed)).unwrap();
        assert_eq!(sol.objective, 60);
        assert_eq!(sol.assignment, seed);
    }

    #[test]
    fn infeasible_order_is_an_error() {
        let mut inst = choice_instance();
        inst.orders.push(order(9, 10));
        assert_eq!(
            solve_master(&inst, &[], &MasterParams::default(), None),
            Err(MasterError::Infeasible(9))
        );
    }

    #[test]
    fn water_level_spreads_load() {
        // Two idle machines with cheapest reconfiguration 10 and 30; load 40
        // fills the first to 30, then both rise together to (40+40)/2 = 40.
        let inst = Instance {
            orders: vec![order(1, 10)],
            machines: vec![
                Machine {
                    id: 1,
                    processing_area: 100,
                    processing_height: 10,
                    configs: vec![cfg(1, 0, false, &[(1, 40)])],
                    reconfig: reconfig(&[((0, 1), 10)]),
                },
                Machine {
                    id: 2,
                    processing_area: 100,
                    processing_height: 10,
                    configs: vec![cfg(1, 0, false, &[(1, 40)])],
                    reconfig: reconfig(&[((0, 1), 30)]),
                },
            ],
            batch_slots: 1,
        };
        let tables = Tables::new(&inst);
        let params = MasterParams::default();
        let search = Search::new(&tables, &[], &params);
        assert_eq!(search.water_level(&search.root(), 0, None), 40);
    }
}
