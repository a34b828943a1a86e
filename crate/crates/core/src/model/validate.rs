use super::{ConfigId, Instance, MachineId, OrderId, Schedule, Time, INITIAL_CONFIG};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A single broken invariant of an instance or schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoOrders,
    NoMachines,
    ZeroBatchSlots,
    DuplicateOrder { order: OrderId },
    NonPositiveOrderArea { order: OrderId },
    NonPositiveOrderHeight { order: OrderId },
    OrderInfeasible { order: OrderId },
    BatchSlotsTooFew { machine: MachineId, assignable: usize, batch_slots: usize },
    DuplicateMachine { machine: MachineId },
    NonPositiveMachineArea { machine: MachineId },
    NonPositiveMachineHeight { machine: MachineId },
    NoConfigs { machine: MachineId },
    ReservedConfigId { machine: MachineId },
    DuplicateConfig { machine: MachineId, config: ConfigId },
    UnknownEligibleOrder { machine: MachineId, config: ConfigId, order: OrderId },
    NonPositiveProcessingTime { machine: MachineId, config: ConfigId, order: OrderId },
    MissingReconfig { machine: MachineId, from: ConfigId, to: ConfigId },
    UnknownReconfigNode { machine: MachineId, from: ConfigId, to: ConfigId },
    ReconfigIntoInitial { machine: MachineId, from: ConfigId },
    TriangleInequality {
        machine: MachineId,
        from: ConfigId,
        via: ConfigId,
        to: ConfigId,
        direct: Time,
        detour: Time,
    },
    // Schedule violations.
    Unassigned { order: OrderId },
    UnknownOrder { order: OrderId },
    UnknownMachine { machine: MachineId, order: OrderId },
    UnknownConfig { machine: MachineId, config: ConfigId, order: OrderId },
    Ineligible { machine: MachineId, config: ConfigId, order: OrderId },
    HeightExceeded { machine: MachineId, order: OrderId, height: u64, limit: u64 },
    BatchOutOfRange { machine: MachineId, order: OrderId, batch: usize, batch_slots: usize },
    MixedConfigBatch { machine: MachineId, batch: usize },
    BatchLimitExceeded { machine: MachineId, batch: usize, orders: usize },
    BatchAreaExceeded { machine: MachineId, batch: usize, area: u64, limit: u64 },
    SequenceMissing { machine: MachineId, config: ConfigId },
    SequenceUnused { machine: MachineId, config: ConfigId },
    SequenceRepeated { machine: MachineId, config: ConfigId },
    SequenceUnknownMachine { machine: MachineId },
}

impl Violation {
    pub fn machine(&self) -> Option<MachineId> {
        use Violation::*;
        match *self {
            BatchSlotsTooFew { machine, .. }
            | DuplicateMachine { machine }
            | NonPositiveMachineArea { machine }
            | NonPositiveMachineHeight { machine }
            | NoConfigs { machine }
            | ReservedConfigId { machine }
            | DuplicateConfig { machine, .. }
            | UnknownEligibleOrder { machine, .. }
            | NonPositiveProcessingTime { machine, .. }
            | MissingReconfig { machine, .. }
            | UnknownReconfigNode { machine, .. }
            | ReconfigIntoInitial { machine, .. }
            | TriangleInequality { machine, .. }
            | UnknownMachine { machine, .. }
            | UnknownConfig { machine, .. }
            | Ineligible { machine, .. }
            | HeightExceeded { machine, .. }
            | BatchOutOfRange { machine, .. }
            | MixedConfigBatch { machine, .. }
            | BatchLimitExceeded { machine, .. }
            | BatchAreaExceeded { machine, .. }
            | SequenceMissing { machine, .. }
            | SequenceUnused { machine, .. }
            | SequenceRepeated { machine, .. }
            | SequenceUnknownMachine { machine } => Some(machine),
            _ => None,
        }
    }

    pub fn order(&self) -> Option<OrderId> {
        use Violation::*;
        match *self {
            DuplicateOrder { order }
            | NonPositiveOrderArea { order }
            | NonPositiveOrderHeight { order }
            | OrderInfeasible { order }
            | UnknownEligibleOrder { order, .. }
            | NonPositiveProcessingTime { order, .. }
            | Unassigned { order }
            | UnknownOrder { order }
            | UnknownMachine { order, .. }
            | UnknownConfig { order, .. }
            | Ineligible { order, .. }
            | HeightExceeded { order, .. }
            | BatchOutOfRange { order, .. } => Some(order),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoOrders => write!(f, "instance has no orders"),
            NoMachines => write!(f, "instance has no machines"),
            ZeroBatchSlots => write!(f, "batch_slots must be positive"),
            DuplicateOrder { order } => write!(f, "order {order} defined more than once"),
            NonPositiveOrderArea { order } => write!(f, "order {order} has non-positive area"),
            NonPositiveOrderHeight { order } => write!(f, "order {order} has non-positive height"),
            OrderInfeasible { order } => write!(
                f,
                "order {order} infeasible: no eligible machine-configuration fits its area and height"
            ),
            BatchSlotsTooFew { machine, assignable, batch_slots } => write!(
                f,
                "machine {machine}: {assignable} assignable orders exceed batch_slots {batch_slots}"
            ),
            DuplicateMachine { machine } => write!(f, "machine {machine} defined more than once"),
            NonPositiveMachineArea { machine } => {
                write!(f, "machine {machine} has non-positive processing area")
            }
            NonPositiveMachineHeight { machine } => {
                write!(f, "machine {machine} has non-positive processing height")
            }
            NoConfigs { machine } => write!(f, "machine {machine} has no configurations"),
            ReservedConfigId { machine } => write!(
                f,
                "machine {machine}: configuration id 0 is reserved for the initial configuration"
            ),
            DuplicateConfig { machine, config } => {
                write!(f, "machine {machine}: configuration {config} defined more than once")
            }
            UnknownEligibleOrder { machine, config, order } => write!(
                f,
                "machine {machine} configuration {config}: eligibility lists unknown order {order}"
            ),
            NonPositiveProcessingTime { machine, config, order } => write!(
                f,
                "machine {machine} configuration {config}: order {order} has non-positive processing time"
            ),
            MissingReconfig { machine, from, to } => {
                write!(f, "machine {machine}: missing reconfiguration time {from} -> {to}")
            }
            UnknownReconfigNode { machine, from, to } => write!(
                f,
                "machine {machine}: reconfiguration entry {from} -> {to} names an unknown configuration"
            ),
            ReconfigIntoInitial { machine, from } => write!(
                f,
                "machine {machine}: reconfiguration entry {from} -> 0 targets the initial configuration"
            ),
            TriangleInequality { machine, from, via, to, direct, detour } => write!(
                f,
                "machine {machine}: triangle inequality violated, T[{from}][{to}] = {direct} > T[{from}][{via}] + T[{via}][{to}] = {detour}"
            ),
            Unassigned { order } => write!(f, "order {order} is not assigned"),
            UnknownOrder { order } => write!(f, "schedule assigns unknown order {order}"),
            UnknownMachine { machine, order } => {
                write!(f, "order {order} assigned to unknown machine {machine}")
            }
            UnknownConfig { machine, config, order } => write!(
                f,
                "order {order} assigned to unknown configuration {config} of machine {machine}"
            ),
            Ineligible { machine, config, order } => write!(
                f,
                "order {order} is not eligible for machine {machine} configuration {config}"
            ),
            HeightExceeded { machine, order, height, limit } => write!(
                f,
                "order {order} height {height} exceeds machine {machine} limit {limit}"
            ),
            BatchOutOfRange { machine, order, batch, batch_slots } => write!(
                f,
                "order {order} on machine {machine} uses batch {batch}, beyond batch_slots {batch_slots}"
            ),
            MixedConfigBatch { machine, batch } => write!(
                f,
                "machine {machine} batch {batch} mixes configurations"
            ),
            BatchLimitExceeded { machine, batch, orders } => write!(
                f,
                "machine {machine} batch {batch} holds {orders} orders under a batch limit of one"
            ),
            BatchAreaExceeded { machine, batch, area, limit } => write!(
                f,
                "machine {machine} batch {batch} area {area} exceeds processing area {limit}"
            ),
            SequenceMissing { machine, config } => write!(
                f,
                "machine {machine}: configuration {config} is used but missing from the sequence"
            ),
            SequenceUnused { machine, config } => write!(
                f,
                "machine {machine}: sequence lists configuration {config} which no batch uses"
            ),
            SequenceRepeated { machine, config } => write!(
                f,
                "machine {machine}: configuration {config} appears more than once in the sequence"
            ),
            SequenceUnknownMachine { machine } => {
                write!(f, "sequence given for unknown machine {machine}")
            }
        }
    }
}

/// Violations ordered by machine id, then order id. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_unsorted(mut violations: Vec<Violation>) -> Self {
        // Stable, so checks emitted in a fixed order stay in that order
        // within a (machine, order) key.
        violations.sort_by_key(|v| (v.machine(), v.order()));
        Self { violations }
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Violation> {
        self.violations.iter()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a ValidationReport {
    type Item = &'a Violation;
    type IntoIter = std::slice::Iter<'a, Violation>;

    fn into_iter(self) -> Self::IntoIter {
        self.violations.iter()
    }
}

pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut out = Vec::new();
    if instance.orders.is_empty() {
        out.push(Violation::NoOrders);
    }
    if instance.machines.is_empty() {
        out.push(Violation::NoMachines);
    }
    if instance.batch_slots == 0 {
        out.push(Violation::ZeroBatchSlots);
    }

    let mut order_ids = BTreeSet::new();
    for o in &instance.orders {
        if !order_ids.insert(o.id) {
            out.push(Violation::DuplicateOrder { order: o.id });
        }
        if o.area == 0 {
            out.push(Violation::NonPositiveOrderArea { order: o.id });
        }
        if o.height == 0 {
            out.push(Violation::NonPositiveOrderHeight { order: o.id });
        }
    }

    let mut machine_ids = BTreeSet::new();
    for m in &instance.machines {
        if !machine_ids.insert(m.id) {
            out.push(Violation::DuplicateMachine { machine: m.id });
        }
        if m.processing_area == 0 {
            out.push(Violation::NonPositiveMachineArea { machine: m.id });
        }
        if m.processing_height == 0 {
            out.push(Violation::NonPositiveMachineHeight { machine: m.id });
        }
        if m.configs.is_empty() {
            out.push(Violation::NoConfigs { machine: m.id });
        }
        let mut config_ids = BTreeSet::new();
        for c in &m.configs {
            if c.id == INITIAL_CONFIG {
                out.push(Violation::ReservedConfigId { machine: m.id });
            } else if !config_ids.insert(c.id) {
                out.push(Violation::DuplicateConfig { machine: m.id, config: c.id });
            }
            for (&order, &time) in &c.processing {
                if !order_ids.contains(&order) {
                    out.push(Violation::UnknownEligibleOrder { machine: m.id, config: c.id, order });
                } else if time == 0 {
                    out.push(Violation::NonPositiveProcessingTime { machine: m.id, config: c.id, order });
                }
            }
        }
        check_reconfig(m.id, &config_ids, &m.reconfig, &mut out);

        let assignable = instance
            .orders
            .iter()
            .filter(|o| m.configs.iter().any(|c| m.accepts(o, c)))
            .count();
        if assignable > instance.batch_slots && instance.batch_slots > 0 {
            out.push(Violation::BatchSlotsTooFew {
                machine: m.id,
                assignable,
                batch_slots: instance.batch_slots,
            });
        }
    }

    for o in &instance.orders {
        if instance.options_for(o).next().is_none() {
            out.push(Violation::OrderInfeasible { order: o.id });
        }
    }

    ValidationReport::from_unsorted(out)
}

fn check_reconfig(
    machine: MachineId,
    configs: &BTreeSet<ConfigId>,
    matrix: &super::ReconfigMatrix,
    out: &mut Vec<Violation>,
) {
    for ((from, to), _) in matrix.iter() {
        if to == INITIAL_CONFIG {
            out.push(Violation::ReconfigIntoInitial { machine, from });
        } else if from == to
            || !configs.contains(&to)
            || (from != INITIAL_CONFIG && !configs.contains(&from))
        {
            out.push(Violation::UnknownReconfigNode { machine, from, to });
        }
    }
    let nodes: Vec<ConfigId> = std::iter::once(INITIAL_CONFIG).chain(configs.iter().copied()).collect();
    for &from in &nodes {
        for &to in configs {
            if from != to && matrix.get(from, to).is_none() {
                out.push(Violation::MissingReconfig { machine, from, to });
            }
        }
    }
    for &from in &nodes {
        for &via in configs {
            for &to in configs {
                if from == via || via == to || from == to {
                    continue;
                }
                if let (Some(direct), Some(a), Some(b)) =
                    (matrix.get(from, to), matrix.get(from, via), matrix.get(via, to))
                {
                    if direct > a + b {
                        out.push(Violation::TriangleInequality {
                            machine,
                            from,
                            via,
                            to,
                            direct,
                            detour: a + b,
                        });
                    }
                }
            }
        }
    }
}

/// Checks a schedule against the full model semantics: single eligible
/// assignment per order, batch limits, one configuration per batch, height
/// and per-batch area limits, and configuration-sequence consistency.
///
/// Assumes the instance itself is valid.
pub fn validate_schedule(instance: &Instance, schedule: &Schedule) -> ValidationReport {
    let mut out = Vec::new();
    for o in &instance.orders {
        if !schedule.assignment.contains_key(&o.id) {
            out.push(Violation::Unassigned { order: o.id });
        }
    }

    // (machine, batch) -> (configs seen, order count, total area)
    let mut batches: BTreeMap<(MachineId, usize), (BTreeSet<ConfigId>, usize, u64)> = BTreeMap::new();
    let mut used: BTreeMap<MachineId, BTreeSet<ConfigId>> = BTreeMap::new();
    for (&order_id, slot) in &schedule.assignment {
        let Some(order) = instance.order(order_id) else {
            out.push(Violation::UnknownOrder { order: order_id });
            continue;
        };
        let Some(machine) = instance.machine(slot.machine) else {
            out.push(Violation::UnknownMachine { machine: slot.machine, order: order_id });
            continue;
        };
        let Some(config) = machine.config(slot.config) else {
            out.push(Violation::UnknownConfig {
                machine: machine.id,
                config: slot.config,
                order: order_id,
            });
            continue;
        };
        if !config.is_eligible(order_id) {
            out.push(Violation::Ineligible { machine: machine.id, config: config.id, order: order_id });
        }
        if order.height > machine.processing_height {
            out.push(Violation::HeightExceeded {
                machine: machine.id,
                order: order_id,
                height: order.height,
                limit: machine.processing_height,
            });
        }
        if slot.batch >= instance.batch_slots {
            out.push(Violation::BatchOutOfRange {
                machine: machine.id,
                order: order_id,
                batch: slot.batch,
                batch_slots: instance.batch_slots,
            });
        }
        let entry = batches.entry((machine.id, slot.batch)).or_default();
        entry.0.insert(config.id);
        entry.1 += 1;
        entry.2 += order.area;
        used.entry(machine.id).or_default().insert(config.id);
    }

    for (&(machine_id, batch), (configs, count, area)) in &batches {
        let machine = instance.machine(machine_id).expect("checked above");
        if configs.len() > 1 {
            out.push(Violation::MixedConfigBatch { machine: machine_id, batch });
        }
        let limited = configs
            .iter()
            .filter_map(|&c| machine.config(c))
            .any(|c| c.batch_limit);
        if limited && *count > 1 {
            out.push(Violation::BatchLimitExceeded { machine: machine_id, batch, orders: *count });
        }
        if *area > machine.processing_area {
            out.push(Violation::BatchAreaExceeded {
                machine: machine_id,
                batch,
                area: *area,
                limit: machine.processing_area,
            });
        }
    }

    for (&machine_id, sequence) in &schedule.config_sequence {
        if instance.machine(machine_id).is_none() {
            out.push(Violation::SequenceUnknownMachine { machine: machine_id });
            continue;
        }
        let used_here = used.get(&machine_id);
        let mut seen = BTreeSet::new();
        for &c in sequence {
            if !seen.insert(c) {
                out.push(Violation::SequenceRepeated { machine: machine_id, config: c });
            } else if !used_here.is_some_and(|u| u.contains(&c)) {
                out.push(Violation::SequenceUnused { machine: machine_id, config: c });
            }
        }
    }
    for (&machine_id, configs) in &used {
        let sequence = schedule.config_sequence.get(&machine_id);
        for &c in configs {
            if !sequence.is_some_and(|s| s.contains(&c)) {
                out.push(Violation::SequenceMissing { machine: machine_id, config: c });
            }
        }
    }

    ValidationReport::from_unsorted(out)
}
