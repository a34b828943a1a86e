//! Dense, position-indexed copies of instance data for the search loops.

use crate::model::{ConfigId, Instance, MachineId, OrderId, Time, INITIAL_CONFIG};

pub(crate) struct ConfigInfo {
    pub id: ConfigId,
    pub setup: Time,
    pub batch_limit: bool,
}

pub(crate) struct MachineInfo {
    pub id: MachineId,
    pub area: u64,
    pub configs: Vec<ConfigInfo>,
    /// `(k + 1) x (k + 1)` reconfiguration times; node 0 is the initial
    /// configuration and node `i + 1` is `configs[i]`.
    pub reconfig: Vec<Vec<Time>>,
    /// Smallest reconfiguration into each configuration from any other node.
    pub static_mrt: Vec<Time>,
}

impl MachineInfo {
    pub fn reconfig(&self, from_node: usize, to_config: usize) -> Time {
        self.reconfig[from_node][to_config + 1]
    }

    /// Smallest reconfiguration into `target` from the initial configuration
    /// or any other configuration in `utilized` (a bitmask over configs).
    pub fn tight_mrt(&self, target: usize, utilized: u64) -> Time {
        let mut best = self.reconfig(0, target);
        let mut rest = utilized & !(1 << target);
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            best = best.min(self.reconfig(k + 1, target));
            rest &= rest - 1;
        }
        best
    }

    pub fn min_static_mrt(&self) -> Time {
        self.static_mrt.iter().copied().min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Choice {
    pub machine: usize,
    pub config: usize,
    pub opt: Time,
}

pub(crate) struct OrderInfo {
    pub id: OrderId,
    pub area: u64,
}

pub(crate) struct Tables {
    pub orders: Vec<OrderInfo>,
    pub machines: Vec<MachineInfo>,
    /// Feasible choices per order position, in instance machine/config order.
    pub options: Vec<Vec<Choice>>,
}

impl Tables {
    pub fn new(instance: &Instance) -> Self {
        let machines = instance
            .machines
            .iter()
            .map(|m| {
                let nodes: Vec<ConfigId> =
                    std::iter::once(INITIAL_CONFIG).chain(m.configs.iter().map(|c| c.id)).collect();
                let reconfig = nodes
                    .iter()
                    .map(|&a| {
                        nodes
                            .iter()
                            .map(|&b| if a == b { 0 } else { m.reconfig_time(a, b).unwrap_or(0) })
                            .collect()
                    })
                    .collect();
                MachineInfo {
                    id: m.id,
                    area: m.processing_area,
                    configs: m
                        .configs
                        .iter()
                        .map(|c| ConfigInfo { id: c.id, setup: c.setup_time, batch_limit: c.batch_limit })
                        .collect(),
                    reconfig,
                    static_mrt: m.configs.iter().map(|c| m.min_reconfig_into(c.id)).collect(),
                }
            })
            .collect();
        let options = instance
            .orders
            .iter()
            .map(|o| {
                instance
                    .machines
                    .iter()
                    .enumerate()
                    .flat_map(|(mi, m)| {
                        m.configs.iter().enumerate().filter_map(move |(ki, c)| {
                            m.accepts(o, c).then(|| Choice {
                                machine: mi,
                                config: ki,
                                opt: c.processing_time(o.id).unwrap_or(0),
                            })
                        })
                    })
                    .collect()
            })
            .collect();
        Tables {
            orders: instance.orders.iter().map(|o| OrderInfo { id: o.id, area: o.area }).collect(),
            machines,
            options,
        }
    }

    pub fn order_pos(&self, id: OrderId) -> Option<usize> {
        self.orders.iter().position(|o| o.id == id)
    }

    pub fn machine_pos(&self, id: MachineId) -> Option<usize> {
        self.machines.iter().position(|m| m.id == id)
    }

    pub fn config_pos(&self, machine: usize, id: ConfigId) -> Option<usize> {
        self.machines[machine].configs.iter().position(|c| c.id == id)
    }
}
