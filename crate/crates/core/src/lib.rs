//! Makespan scheduling of serial batches on parallel reconfigurable machines
//! in a hybrid manufacturing and remanufacturing shop.
//!
//! Each order is assigned to an eligible `(machine, configuration)` pair,
//! grouped into batches that fit the machine's processing area, and every
//! machine runs its utilized configurations one after another, paying a
//! reconfiguration time between them and a setup time per batch.
//!
//! * [`model`] holds the data types, validation, timing, metrics and the
//!   LP-format export of the monolithic MILP.
//! * [`subproblem`] schedules one machine exactly once its assignment is known.
//! * [`master`] assigns orders to machine configurations by branch-and-bound.
//! * [`lbbd`] couples the two with Benders optimality cuts and provides the
//!   two-step warm-start constructor.
//! * [`oracle`] enumerates tiny instances exhaustively.
//! * [`generator`] draws random benchmark instances.

pub mod generator;
pub mod lbbd;
pub mod master;
pub mod model;
pub mod oracle;
pub mod subproblem;

mod tables;

pub use model::{
    ConfigId, Instance, Machine, MachineConfig, MachineId, Order, OrderId, OrderKind, ReconfigMatrix,
    Schedule, Slot, Time, TimedSchedule, INITIAL_CONFIG,
};
