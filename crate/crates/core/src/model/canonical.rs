use super::{ConfigId, Instance, Schedule};
use std::collections::BTreeMap;

/// Groups each machine's batches by configuration.
///
/// Batches are read in ascending batch-index order. Configurations keep the
/// order of their first appearance, and all batches of one configuration are
/// moved next to each other without changing which orders share a batch. The
/// batch indices already used on a machine are reused, so an input that is
/// already grouped comes back unchanged. Under the triangle inequality this
/// never lengthens the machine: the grouped sequence shortcuts the walk of
/// the original batch order.
pub fn canonicalize(_instance: &Instance, schedule: &Schedule) -> Schedule {
    let mut out = Schedule::default();
    for machine in schedule.machines_used() {
        let batches = schedule.batches_on(machine);
        let indices: Vec<usize> = batches.keys().copied().collect();

        let mut order_of_configs: Vec<ConfigId> = Vec::new();
        let mut grouped: BTreeMap<ConfigId, Vec<Vec<u32>>> = BTreeMap::new();
        for (config, orders) in batches.into_values() {
            if !grouped.contains_key(&config) {
                order_of_configs.push(config);
            }
            grouped.entry(config).or_default().push(orders);
        }

        let mut next = indices.into_iter();
        for &config in &order_of_configs {
            for orders in &grouped[&config] {
                let batch = next.next().expect("one index per batch");
                for &order in orders {
                    out.assignment.insert(order, super::Slot { machine, config, batch });
                }
            }
        }
        out.config_sequence.insert(machine, order_of_configs);
    }
    out
}
