use super::{ConfigId, Instance, MachineId, OrderId, Schedule, Time, TimedSchedule, INITIAL_CONFIG};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimingError {
    #[error("order {order} references an unknown machine, configuration or order")]
    UnknownReference { order: OrderId },
    #[error("order {order} is not eligible for machine {machine} configuration {config}")]
    Ineligible { order: OrderId, machine: MachineId, config: ConfigId },
    #[error("machine {machine}: configuration {config} is used but missing from the sequence")]
    SequenceOmits { machine: MachineId, config: ConfigId },
    #[error("machine {machine}: sequence entry {config} is unused or repeated")]
    SequenceInvalid { machine: MachineId, config: ConfigId },
    #[error("machine {machine}: no reconfiguration time {from} -> {to}")]
    MissingReconfig { machine: MachineId, from: ConfigId, to: ConfigId },
}

/// Derives configuration durations, completion times and the makespan.
///
/// A configuration's duration is the processing time of its orders plus one
/// setup per formed batch. Configurations run back to back in the machine's
/// sequence, each preceded by the reconfiguration from its predecessor (the
/// initial configuration for the first one).
pub fn compute_timing(instance: &Instance, schedule: &Schedule) -> Result<TimedSchedule, TimingError> {
    let mut processing: BTreeMap<(MachineId, ConfigId), Time> = BTreeMap::new();
    let mut batches: BTreeMap<(MachineId, ConfigId), BTreeSet<usize>> = BTreeMap::new();
    for (&order, slot) in &schedule.assignment {
        let config = instance
            .machine(slot.machine)
            .and_then(|m| m.config(slot.config))
            .ok_or(TimingError::UnknownReference { order })?;
        let opt = config.processing_time(order).ok_or(TimingError::Ineligible {
            order,
            machine: slot.machine,
            config: slot.config,
        })?;
        *processing.entry((slot.machine, slot.config)).or_default() += opt;
        batches.entry((slot.machine, slot.config)).or_default().insert(slot.batch);
    }

    let mut config_duration = BTreeMap::new();
    for (&(m, c), &opt) in &processing {
        let setup = instance.machine(m).and_then(|mm| mm.config(c)).map_or(0, |cfg| cfg.setup_time);
        config_duration.insert((m, c), opt + setup * batches[&(m, c)].len() as Time);
    }

    let mut config_completion = BTreeMap::new();
    let mut makespan = 0;
    for machine in &instance.machines {
        let used: BTreeSet<ConfigId> = config_duration
            .range((machine.id, ConfigId::MIN)..=(machine.id, ConfigId::MAX))
            .map(|(&(_, c), _)| c)
            .collect();
        let sequence = schedule.config_sequence.get(&machine.id).map(Vec::as_slice).unwrap_or(&[]);
        let mut seen = BTreeSet::new();
        for &c in sequence {
            if !used.contains(&c) || !seen.insert(c) {
                return Err(TimingError::SequenceInvalid { machine: machine.id, config: c });
            }
        }
        if let Some(&c) = used.difference(&seen).next() {
            return Err(TimingError::SequenceOmits { machine: machine.id, config: c });
        }

        let mut clock = 0;
        let mut current = INITIAL_CONFIG;
        for &c in sequence {
            let reconfig = machine.reconfig_time(current, c).ok_or(TimingError::MissingReconfig {
                machine: machine.id,
                from: current,
                to: c,
            })?;
            clock += reconfig + config_duration[&(machine.id, c)];
            config_completion.insert((machine.id, c), clock);
            current = c;
        }
        makespan = makespan.max(clock);
    }

    Ok(TimedSchedule {
        schedule: schedule.clone(),
        config_duration,
        config_completion,
        makespan,
    })
}
