#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rmsched::generator::{generate, GenConfig};
use rmsched::master::Assignment;
use rmsched::{ConfigId, Instance, MachineId, OrderId, Schedule, Slot};
use std::collections::BTreeMap;

/// Instance with at most 6 orders, 3 configurations and 2 machines, shape
/// cycling with the seed.
pub fn tiny(seed: u64) -> Instance {
    let orders = 1 + (seed % 6) as usize;
    let configs = 1 + (seed / 6 % 3) as usize;
    let machines = 1 + (seed / 18 % 2) as usize;
    generate(&GenConfig::new(orders, configs, machines, seed)).unwrap()
}

pub fn random_assignment(instance: &Instance, rng: &mut ChaCha8Rng) -> Assignment {
    instance
        .orders
        .iter()
        .map(|o| {
            let opts: Vec<(MachineId, ConfigId)> = instance.options_for(o).map(|(m, c)| (m.id, c.id)).collect();
            (o.id, opts[rng.random_range(0..opts.len())])
        })
        .collect()
}

/// Valid schedule with random batching and a random batch order per machine.
/// Batches of one configuration may be separated by other configurations;
/// the configuration sequence lists configurations by first appearance.
pub fn random_schedule(instance: &Instance, rng: &mut ChaCha8Rng) -> Schedule {
    let assignment = random_assignment(instance, rng);
    let mut schedule = Schedule::default();
    for m in &instance.machines {
        let mut mine: Vec<(OrderId, ConfigId)> =
            assignment.iter().filter(|(_, &(mm, _))| mm == m.id).map(|(&o, &(_, c))| (o, c)).collect();
        mine.shuffle(rng);
        let mut batches: Vec<(ConfigId, Vec<OrderId>, u64)> = Vec::new();
        for (o, c) in mine {
            let area = instance.order(o).unwrap().area;
            let limited = m.config(c).unwrap().batch_limit;
            let fits: Vec<usize> = (0..batches.len())
                .filter(|&b| batches[b].0 == c && !limited && batches[b].2 + area <= m.processing_area)
                .collect();
            if !fits.is_empty() && rng.random_bool(0.6) {
                let b = fits[rng.random_range(0..fits.len())];
                batches[b].1.push(o);
                batches[b].2 += area;
            } else {
                batches.push((c, vec![o], area));
            }
        }
        batches.shuffle(rng);
        let mut sequence = Vec::new();
        for (idx, (c, members, _)) in batches.into_iter().enumerate() {
            if !sequence.contains(&c) {
                sequence.push(c);
            }
            for o in members {
                schedule.assignment.insert(o, Slot { machine: m.id, config: c, batch: idx });
            }
        }
        if !sequence.is_empty() {
            schedule.config_sequence.insert(m.id, sequence);
        }
    }
    schedule
}

/// Orders of `machine` grouped per configuration, ready for a subproblem.
pub fn grouped(
    instance: &Instance,
    assignment: &Assignment,
    machine: MachineId,
) -> BTreeMap<ConfigId, Vec<rmsched::subproblem::AssignedOrder>> {
    rmsched::lbbd::orders_by_config(instance, assignment, machine)
}
