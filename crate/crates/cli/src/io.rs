//! JSON files for instances and schedules.

use rmsched::{
    ConfigId, Instance, Machine, MachineConfig, MachineId, Order, OrderId, OrderKind, ReconfigMatrix, Schedule,
    Slot, Time, TimedSchedule,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("bad reconfiguration key {0:?}, expected \"from,to\"")]
    ReconfigKey(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    orders: Vec<OrderFile>,
    machines: Vec<MachineFile>,
    batch_slots: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct OrderFile {
    id: OrderId,
    kind: KindFile,
    area: u64,
    height: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
enum KindFile {
    M,
    R,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct MachineFile {
    id: MachineId,
    processing_area: u64,
    processing_height: u64,
    configs: Vec<ConfigFile>,
    reconfig: BTreeMap<String, Time>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    id: ConfigId,
    setup_time: Time,
    batch_limit: bool,
    eligible: BTreeMap<OrderId, Time>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    assignment: BTreeMap<OrderId, (MachineId, ConfigId, usize)>,
    config_sequence: BTreeMap<MachineId, Vec<ConfigId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    makespan: Option<Time>,
}

fn parse_key(key: &str) -> Result<(ConfigId, ConfigId), IoError> {
    let bad = || IoError::ReconfigKey(key.to_string());
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        orders: instance
            .orders
            .iter()
            .map(|o| OrderFile {
                id: o.id,
                kind: match o.kind {
                    OrderKind::Manufacturing => KindFile::M,
                    OrderKind::Remanufacturing => KindFile::R,
                },
                area: o.area,
                height: o.height,
            })
            .collect(),
        machines: instance
            .machines
            .iter()
            .map(|m| MachineFile {
                id: m.id,
                processing_area: m.processing_area,
                processing_height: m.processing_height,
                configs: m
                    .configs
                    .iter()
                    .map(|c| ConfigFile {
                        id: c.id,
                        setup_time: c.setup_time,
                        batch_limit: c.batch_limit,
                        eligible: c.processing.clone(),
                    })
                    .collect(),
                reconfig: m.reconfig.iter().map(|((a, b), t)| (format!("{a},{b}"), t)).collect(),
            })
            .collect(),
        batch_slots: instance.batch_slots,
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

pub fn instance_from_json(text: &str) -> Result<Instance, IoError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let mut machines = Vec::with_capacity(file.machines.len());
    for m in file.machines {
        let mut reconfig = ReconfigMatrix::new();
        for (key, t) in &m.reconfig {
            let (a, b) = parse_key(key)?;
            reconfig.set(a, b, *t);
        }
        machines.push(Machine {
            id: m.id,
            processing_area: m.processing_area,
            processing_height: m.processing_height,
            configs: m
                .configs
                .into_iter()
                .map(|c| MachineConfig {
                    id: c.id,
                    setup_time: c.setup_time,
                    batch_limit: c.batch_limit,
                    processing: c.eligible,
                })
                .collect(),
            reconfig,
        });
    }
    let orders = file
        .orders
        .into_iter()
        .map(|o| Order {
            id: o.id,
            kind: match o.kind {
                KindFile::M => OrderKind::Manufacturing,
                KindFile::R => OrderKind::Remanufacturing,
            },
            area: o.area,
            height: o.height,
        })
        .collect();
    Ok(Instance { orders, machines, batch_slots: file.batch_slots })
}

pub fn schedule_to_json(schedule: &Schedule, makespan: Option<Time>) -> String {
    let file = ScheduleFile {
        assignment: schedule.assignment.iter().map(|(&o, s)| (o, (s.machine, s.config, s.batch))).collect(),
        config_sequence: schedule.config_sequence.clone(),
        makespan,
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

pub fn timed_to_json(timed: &TimedSchedule) -> String {
    schedule_to_json(&timed.schedule, Some(timed.makespan))
}

/// The schedule and the makespan recorded next to it, if any.
pub fn schedule_from_json(text: &str) -> Result<(Schedule, Option<Time>), IoError> {
    let file: ScheduleFile = serde_json::from_str(text)?;
    let schedule = Schedule {
        assignment: file
            .assignment
            .into_iter()
            .map(|(o, (machine, config, batch))| (o, Slot { machine, config, batch }))
            .collect(),
        config_sequence: file.config_sequence,
    };
    Ok((schedule, file.makespan))
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

pub fn read_instance(path: &Path) -> Result<Instance, IoError> {
    instance_from_json(&read_text(path)?)
}

pub fn read_schedule(path: &Path) -> Result<(Schedule, Option<Time>), IoError> {
    schedule_from_json(&read_text(path)?)
}
