//! Problem and solution data for batch scheduling on reconfigurable machines.
//!
//! An [`Instance`] holds orders and machines. Every machine owns a list of
//! configurations; configuration id `0` is reserved for the state the machine
//! is in at time zero and is never re-entered. A [`Schedule`] assigns each
//! order to a `(machine, configuration, batch)` slot and fixes the order in
//! which each machine runs its configurations.

mod canonical;
mod lp;
mod metrics;
mod timing;
mod validate;

pub use canonical::canonicalize;
pub use lp::{big_m, emit_milp, mip_start, LpError};
pub use metrics::{gap, rpd, MetricError};
pub use timing::{compute_timing, TimingError};
pub use validate::{validate_instance, validate_schedule, ValidationReport, Violation};

use std::collections::{BTreeMap, BTreeSet};

/// Integer time units. All processing, setup and reconfiguration times are
/// whole numbers so that search comparisons are exact.
pub type Time = u64;
pub type OrderId = u32;
pub type MachineId = u32;
pub type ConfigId = u32;

/// The configuration every machine starts in.
pub const INITIAL_CONFIG: ConfigId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderKind {
    Manufacturing,
    Remanufacturing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    pub id: OrderId,
    pub kind: OrderKind,
    pub area: u64,
    pub height: u64,
}

/// One configuration of a machine.
///
/// `processing` maps every eligible order to its processing time under this
/// configuration; an order absent from the map is not eligible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineConfig {
    pub id: ConfigId,
    pub setup_time: Time,
    /// When set, every batch formed under this configuration holds one order.
    pub batch_limit: bool,
    pub processing: BTreeMap<OrderId, Time>,
}

impl MachineConfig {
    pub fn is_eligible(&self, order: OrderId) -> bool {
        self.processing.contains_key(&order)
    }

    pub fn processing_time(&self, order: OrderId) -> Option<Time> {
        self.processing.get(&order).copied()
    }
}

/// Reconfiguration times of one machine, keyed by `(from, to)`.
///
/// `from` ranges over the initial configuration and the machine's own
/// configurations; `to` never equals [`INITIAL_CONFIG`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReconfigMatrix {
    entries: BTreeMap<(ConfigId, ConfigId), Time>,
}

impl ReconfigMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, from: ConfigId, to: ConfigId) -> Option<Time> {
        self.entries.get(&(from, to)).copied()
    }

    pub fn set(&mut self, from: ConfigId, to: ConfigId, time: Time) {
        self.entries.insert((from, to), time);
    }

    pub fn iter(&self) -> impl Iterator<Item = ((ConfigId, ConfigId), Time)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All nodes mentioned by any entry, in ascending order.
    pub fn nodes(&self) -> BTreeSet<ConfigId> {
        self.entries.keys().flat_map(|&(a, b)| [a, b]).collect()
    }
}

impl FromIterator<((ConfigId, ConfigId), Time)> for ReconfigMatrix {
    fn from_iter<I: IntoIterator<Item = ((ConfigId, ConfigId), Time)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub id: MachineId,
    pub processing_area: u64,
    pub processing_height: u64,
    pub configs: Vec<MachineConfig>,
    pub reconfig: ReconfigMatrix,
}

impl Machine {
    pub fn config(&self, id: ConfigId) -> Option<&MachineConfig> {
        self.configs.iter().find(|c| c.id == id)
    }

    /// Reconfiguration time, or `None` if the entry is missing.
    pub fn reconfig_time(&self, from: ConfigId, to: ConfigId) -> Option<Time> {
        self.reconfig.get(from, to)
    }

    /// Whether `order` may run on this machine under `config`: eligible and
    /// within the machine's height and area limits.
    pub fn accepts(&self, order: &Order, config: &MachineConfig) -> bool {
        config.is_eligible(order.id)
            && order.height <= self.processing_height
            && order.area <= self.processing_area
    }

    /// Smallest reconfiguration time into `to` from any other node of this
    /// machine, the initial configuration included.
    pub fn min_reconfig_into(&self, to: ConfigId) -> Time {
        std::iter::once(INITIAL_CONFIG)
            .chain(self.configs.iter().map(|c| c.id))
            .filter(|&from| from != to)
            .filter_map(|from| self.reconfig.get(from, to))
            .min()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub orders: Vec<Order>,
    pub machines: Vec<Machine>,
    /// Number of batch positions available on each machine.
    pub batch_slots: usize,
}

impl Instance {
    pub fn order(&self, id: OrderId) -> Option<&Order> {
        self.orders.iter().find(|o| o.id == id)
    }

    pub fn machine(&self, id: MachineId) -> Option<&Machine> {
        self.machines.iter().find(|m| m.id == id)
    }

    /// Largest configuration count over all machines.
    pub fn max_configs(&self) -> usize {
        self.machines.iter().map(|m| m.configs.len()).max().unwrap_or(0)
    }

    /// `orders-configs-machines`, the label used in benchmark tables.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}",
            self.orders.len(),
            self.max_configs(),
            self.machines.len()
        )
    }

    /// Every `(machine, config)` pair that can take `order`.
    pub fn options_for<'a>(
        &'a self,
        order: &'a Order,
    ) -> impl Iterator<Item = (&'a Machine, &'a MachineConfig)> + 'a {
        self.machines.iter().flat_map(move |m| {
            m.configs
                .iter()
                .filter(move |c| m.accepts(order, c))
                .map(move |c| (m, c))
        })
    }
}

/// Where one order runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub machine: MachineId,
    pub config: ConfigId,
    pub batch: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub assignment: BTreeMap<OrderId, Slot>,
    /// Order in which each machine runs its utilized configurations.
    pub config_sequence: BTreeMap<MachineId, Vec<ConfigId>>,
}

impl Schedule {
    /// Batches on `machine` keyed by batch index, each with its configuration
    /// and member orders in ascending id order.
    pub fn batches_on(&self, machine: MachineId) -> BTreeMap<usize, (ConfigId, Vec<OrderId>)> {
        let mut batches: BTreeMap<usize, (ConfigId, Vec<OrderId>)> = BTreeMap::new();
        for (&order, slot) in &self.assignment {
            if slot.machine == machine {
                batches
                    .entry(slot.batch)
                    .or_insert_with(|| (slot.config, Vec::new()))
                    .1
                    .push(order);
            }
        }
        batches
    }

    /// Machines referenced by the assignment.
    pub fn machines_used(&self) -> BTreeSet<MachineId> {
        self.assignment.values().map(|s| s.machine).collect()
    }

    /// `(order, config)` pairs on `machine`.
    pub fn pairs_on(&self, machine: MachineId) -> BTreeSet<(OrderId, ConfigId)> {
        self.assignment
            .iter()
            .filter(|(_, s)| s.machine == machine)
            .map(|(&o, s)| (o, s.config))
            .collect()
    }
}

/// A schedule together with its derived timing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedSchedule {
    pub schedule: Schedule,
    pub config_duration: BTreeMap<(MachineId, ConfigId), Time>,
    pub config_completion: BTreeMap<(MachineId, ConfigId), Time>,
    pub makespan: Time,
}

impl TimedSchedule {
    /// Completion time of the last configuration on `machine`, 0 when idle.
    pub fn machine_completion(&self, machine: MachineId) -> Time {
        self.config_completion
            .range((machine, ConfigId::MIN)..=(machine, ConfigId::MAX))
            .map(|(_, &t)| t)
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn order(id: OrderId, area: u64) -> Order {
        Order {
            id,
            kind: OrderKind::Manufacturing,
            area,
            height: 10,
        }
    }

    pub fn config(id: ConfigId, setup: Time, batch_limit: bool, opt: &[(OrderId, Time)]) -> MachineConfig {
        MachineConfig {
            id,
            setup_time: setup,
            batch_limit,
            processing: opt.iter().copied().collect(),
        }
    }

    pub fn machine(id: MachineId, area: u64, configs: Vec<MachineConfig>, reconfig: &[((ConfigId, ConfigId), Time)]) -> Machine {
        Machine {
            id,
            processing_area: area,
            processing_height: 100,
            configs,
            reconfig: reconfig.iter().copied().collect(),
        }
    }

    /// One machine, one configuration, two orders with OPT {20, 30}, setup 5
    /// and an initial reconfiguration of 10.
    pub fn two_orders(area_each: u64) -> Instance {
        Instance {
            orders: vec![order(1, area_each), order(2, area_each)],
            machines: vec![machine(
                1,
                100,
                vec![config(1, 5, false, &[(1, 20), (2, 30)])],
                &[((0, 1), 10)],
            )],
            batch_slots: 2,
        }
    }
}
