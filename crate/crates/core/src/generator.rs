//! Random benchmark instances.
//!
//! Draws use [`ChaCha8Rng`] seeded with [`rand_chacha::rand_core::SeedableRng::seed_from_u64`]
//! and happen in a fixed order: per machine its area, height, then per
//! configuration the setup time, batching limit and speed coefficient, then
//! its reconfiguration matrix row by row; afterwards per order its area,
//! height, eligible pairs and their processing times. The same
//! [`GenConfig`] therefore always yields the same instance.
//!
//! | quantity | distribution |
//! |---|---|
//! | order area | uniform integer 75..=200 |
//! | order height | uniform integer 50..=150 |
//! | machine area | `ceil(Normal(500, 150))`, redrawn below 250 |
//! | machine height | uniform integer 150..=300 |
//! | processing time | `round(U{20..=100} * phi)`, at least 1, `phi ~ U(0.8, 1.2)` per machine configuration |
//! | setup time | uniform integer 6..=8 |
//! | batching limit | true with probability 0.1 |
//! | reconfiguration | uniform integer 15..=30, then shortest-path closure |
//!
//! Eligibility: each order draws a machine count uniformly from
//! `1..=machines`, picks that many distinct machines, and marks each of
//! their configurations eligible with probability 0.75. If none is marked,
//! one configuration of the picked machines is forced.

use crate::model::{
    ConfigId, Instance, Machine, MachineConfig, MachineId, Order, OrderId, OrderKind, ReconfigMatrix, Time,
    INITIAL_CONFIG,
};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Multipliers applied to the base distributions, all 1 by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub reconfig: f64,
    pub setup: f64,
    /// Scales the machine area distribution and its redraw floor.
    pub area: f64,
    /// Scales the half-width of the processing-time range around its centre.
    pub opt_variance: f64,
    /// Replaces the 0.75 eligibility probability when set.
    pub eligibility: Option<f64>,
}

impl Default for Scaling {
    fn default() -> Self {
        Self { reconfig: 1.0, setup: 1.0, area: 1.0, opt_variance: 1.0, eligibility: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub n_orders: usize,
    pub n_machines: usize,
    pub n_configs_per_machine: usize,
    /// Share of orders that are remanufacturing orders; the last ones are.
    pub remanufacturing_fraction: f64,
    pub seed: u64,
    pub scaling: Scaling,
}

impl GenConfig {
    pub fn new(n_orders: usize, n_configs_per_machine: usize, n_machines: usize, seed: u64) -> Self {
        Self {
            n_orders,
            n_machines,
            n_configs_per_machine,
            remanufacturing_fraction: 0.5,
            seed,
            scaling: Scaling::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let counts = [
            ("orders", self.n_orders),
            ("machines", self.n_machines),
            ("configurations", self.n_configs_per_machine),
        ];
        for (what, n) in counts {
            if n == 0 {
                return Err(GenError::ZeroCount(what));
            }
        }
        if self.n_configs_per_machine > 64 {
            return Err(GenError::TooManyConfigs(self.n_configs_per_machine));
        }
        if !(0.0..=1.0).contains(&self.remanufacturing_fraction) {
            return Err(GenError::OutOfRange("remanufacturing fraction", self.remanufacturing_fraction));
        }
        let s = &self.scaling;
        for (what, v) in [
            ("reconfiguration scale", s.reconfig),
            ("setup scale", s.setup),
            ("area scale", s.area),
            ("processing-time variance scale", s.opt_variance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GenError::OutOfRange(what, v));
            }
        }
        if s.opt_variance > 1.5 {
            return Err(GenError::OutOfRange("processing-time variance scale", s.opt_variance));
        }
        if let Some(p) = s.eligibility {
            if !(p > 0.0 && p <= 1.0) {
                return Err(GenError::OutOfRange("eligibility probability", p));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("number of {0} must be positive")]
    ZeroCount(&'static str),
    #[error("{0} configurations per machine exceed the limit of 64")]
    TooManyConfigs(usize),
    #[error("{0} out of range: {1}")]
    OutOfRange(&'static str, f64),
}

/// An instance with the intermediate draws that do not survive into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    /// Speed coefficient per `(machine, configuration)`.
    pub phi: BTreeMap<(MachineId, ConfigId), f64>,
    /// Reconfiguration matrices before the shortest-path closure.
    pub raw_reconfig: BTreeMap<MachineId, ReconfigMatrix>,
}

pub const ORDER_AREA: (u64, u64) = (75, 200);
pub const ORDER_HEIGHT: (u64, u64) = (50, 150);
pub const MACHINE_HEIGHT: (u64, u64) = (150, 300);
pub const MACHINE_AREA_MEAN: f64 = 500.0;
pub const MACHINE_AREA_SD: f64 = 150.0;
pub const MACHINE_AREA_FLOOR: u64 = 250;
pub const BASE_OPT: (u64, u64) = (20, 100);
pub const PHI: (f64, f64) = (0.8, 1.2);
pub const SETUP: (u64, u64) = (6, 8);
pub const BATCH_LIMIT_P: f64 = 0.1;
pub const ELIGIBILITY_P: f64 = 0.75;
pub const RECONFIG: (u64, u64) = (15, 30);

pub fn generate(cfg: &GenConfig) -> Result<Instance, GenError> {
    generate_detailed(cfg).map(|g| g.instance)
}

pub fn generate_detailed(cfg: &GenConfig) -> Result<Generated, GenError> {
    cfg.validate()?;
    let s = cfg.scaling;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let area_dist = Normal::new(MACHINE_AREA_MEAN * s.area, MACHINE_AREA_SD * s.area).expect("positive sd");
    let area_floor = ((MACHINE_AREA_FLOOR as f64 * s.area).ceil() as u64).max(ORDER_AREA.1);

    let mut machines = Vec::with_capacity(cfg.n_machines);
    let mut phi = BTreeMap::new();
    let mut raw_reconfig = BTreeMap::new();
    for m in 1..=cfg.n_machines as MachineId {
        let processing_area = loop {
            let draw = area_dist.sample(&mut rng).ceil();
            if draw >= area_floor as f64 {
                break draw as u64;
            }
        };
        let processing_height = rng.random_range(MACHINE_HEIGHT.0..=MACHINE_HEIGHT.1);
        let mut configs = Vec::with_capacity(cfg.n_configs_per_machine);
        for c in 1..=cfg.n_configs_per_machine as ConfigId {
            let setup_time = scale(rng.random_range(SETUP.0..=SETUP.1), s.setup);
            let batch_limit = rng.random_bool(BATCH_LIMIT_P);
            phi.insert((m, c), rng.random_range(PHI.0..PHI.1));
            configs.push(MachineConfig { id: c, setup_time, batch_limit, processing: BTreeMap::new() });
        }
        let mut raw = ReconfigMatrix::new();
        for from in 0..=cfg.n_configs_per_machine as ConfigId {
            for to in 1..=cfg.n_configs_per_machine as ConfigId {
                if from != to {
                    raw.set(from, to, scale(rng.random_range(RECONFIG.0..=RECONFIG.1), s.reconfig));
                }
            }
        }
        let reconfig = enforce_triangle(&raw);
        raw_reconfig.insert(m, raw);
        machines.push(Machine { id: m, processing_area, processing_height, configs, reconfig });
    }

    let min_height = machines.iter().map(|m| m.processing_height).min().expect("machines");
    let eligibility_p = s.eligibility.unwrap_or(ELIGIBILITY_P);
    let half = (BASE_OPT.1 - BASE_OPT.0) as f64 / 2.0 * s.opt_variance;
    let centre = (BASE_OPT.0 + BASE_OPT.1) as f64 / 2.0;
    let opt_range = (((centre - half).round() as u64).max(1), (centre + half).round() as u64);
    let n_reman = (cfg.n_orders as f64 * cfg.remanufacturing_fraction).round() as usize;

    let mut orders = Vec::with_capacity(cfg.n_orders);
    for o in 1..=cfg.n_orders as OrderId {
        let area = rng.random_range(ORDER_AREA.0..=ORDER_AREA.1);
        let height = loop {
            let h = rng.random_range(ORDER_HEIGHT.0..=ORDER_HEIGHT.1);
            if h <= min_height {
                break h;
            }
        };
        let kind = if (o as usize) > cfg.n_orders - n_reman {
            OrderKind::Remanufacturing
        } else {
            OrderKind::Manufacturing
        };
        orders.push(Order { id: o, kind, area, height });

        let k = rng.random_range(1..=cfg.n_machines);
        let mut picked = sample(&mut rng, cfg.n_machines, k).into_vec();
        picked.sort_unstable();
        let mut eligible: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &m in &picked {
            for c in 0..cfg.n_configs_per_machine {
                if rng.random_bool(eligibility_p) {
                    eligible.insert((m, c));
                }
            }
        }
        if eligible.is_empty() {
            let m = picked[rng.random_range(0..picked.len())];
            eligible.insert((m, rng.random_range(0..cfg.n_configs_per_machine)));
        }
        for (m, c) in eligible {
            let f = phi[&(m as MachineId + 1, c as ConfigId + 1)];
            let base = rng.random_range(opt_range.0..=opt_range.1);
            let opt = ((base as f64 * f).round() as Time).max(1);
            machines[m].configs[c].processing.insert(o, opt);
        }
    }

    let batch_slots = machines
        .iter()
        .map(|m| {
            orders
                .iter()
                .filter(|o| m.configs.iter().any(|c| m.accepts(o, c)))
                .count()
        })
        .max()
        .unwrap_or(1)
        .max(1);
    Ok(Generated { instance: Instance { orders, machines, batch_slots }, phi, raw_reconfig })
}

fn scale(value: u64, factor: f64) -> Time {
    if factor == 1.0 {
        value
    } else {
        (value as f64 * factor).round() as Time
    }
}

/// Replaces every entry by the shortest path between its endpoints through
/// the matrix's other nodes. Entries are never added, and since nothing
/// leads into the initial configuration it never acts as an intermediate.
pub fn enforce_triangle(matrix: &ReconfigMatrix) -> ReconfigMatrix {
    let nodes: Vec<ConfigId> = matrix.nodes().into_iter().collect();
    let n = nodes.len();
    let index: BTreeMap<ConfigId, usize> = nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut dist = vec![vec![None::<Time>; n]; n];
    for ((from, to), t) in matrix.iter() {
        dist[index[&from]][index[&to]] = Some(t);
    }
    for k in 0..n {
        if nodes[k] == INITIAL_CONFIG {
            continue;
        }
        for i in 0..n {
            let Some(ik) = dist[i][k] else { continue };
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(kj) = dist[k][j] {
                    let via = ik + kj;
                    if dist[i][j].is_some_and(|d| via < d) {
                        dist[i][j] = Some(via);
                    }
                }
            }
        }
    }
    matrix.iter().map(|((from, to), _)| ((from, to), dist[index[&from]][index[&to]].expect("entry"))).collect()
}
