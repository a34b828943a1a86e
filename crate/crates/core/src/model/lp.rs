//! Monolithic MILP in LP file format.
//!
//! Variables: `x_o_b_m_c` (order `o` in batch `b` of machine `m` under
//! configuration `c`), `y_b_m_c` (batch formed), `z_m_c_cp` (configuration
//! `cp` runs after `c`), `w_m_c` (configuration utilized), `cd_m_c` and
//! `cct_m_c` (configuration duration and completion) and `Cmax`. Indices are
//! the ids used in the instance; batches are numbered from 0.

use super::{validate_instance, ConfigId, Instance, Time, TimedSchedule, ValidationReport, INITIAL_CONFIG};
use std::collections::BTreeSet;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("instance is invalid:\n{0}")]
    InvalidInstance(ValidationReport),
}

const TERMS_PER_LINE: usize = 8;

/// Constant used to switch off the disjunctive sequencing rows.
///
/// Sum over orders of the largest eligible processing-plus-setup time, plus
/// for every configuration the largest reconfiguration into it, plus the
/// largest reconfiguration time overall. The first two terms bound the
/// completion of any machine whose configurations each run once; the last
/// covers the one extra reconfiguration a relaxed sequencing row can add.
pub fn big_m(instance: &Instance) -> Time {
    let orders: Time = instance
        .orders
        .iter()
        .map(|o| {
            instance
                .options_for(o)
                .map(|(_, c)| c.processing_time(o.id).unwrap_or(0) + c.setup_time)
                .max()
                .unwrap_or(0)
        })
        .sum();
    let into: Time = instance
        .machines
        .iter()
        .flat_map(|m| {
            m.configs.iter().map(move |c| {
                m.reconfig
                    .iter()
                    .filter(|&((_, to), _)| to == c.id)
                    .map(|(_, t)| t)
                    .max()
                    .unwrap_or(0)
            })
        })
        .sum();
    let largest = instance
        .machines
        .iter()
        .flat_map(|m| m.reconfig.iter().map(|(_, t)| t))
        .max()
        .unwrap_or(0);
    orders + into + largest
}

struct Expr(Vec<(i64, String)>);

impl Expr {
    fn new() -> Self {
        Expr(Vec::new())
    }

    fn add(&mut self, coeff: i64, var: impl Into<String>) {
        if coeff != 0 {
            self.0.push((coeff, var.into()));
        }
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn render(&self, out: &mut String) {
        for (i, (coeff, var)) in self.0.iter().enumerate() {
            if i > 0 && i % TERMS_PER_LINE == 0 {
                out.push_str("\n   ");
            }
            let sign = if *coeff < 0 { "-" } else { "+" };
            let magnitude = coeff.unsigned_abs();
            if i == 0 && *coeff > 0 {
                // leading plus is omitted
            } else if i == 0 {
                out.push_str("- ");
            } else {
                let _ = write!(out, " {sign} ");
            }
            if magnitude != 1 {
                let _ = write!(out, "{magnitude} ");
            }
            out.push_str(var);
        }
    }
}

fn row(out: &mut String, name: &str, expr: &Expr, sense: &str, rhs: i64) {
    let _ = write!(out, " {name}: ");
    expr.render(out);
    let _ = writeln!(out, " {sense} {rhs}");
}

fn x(o: u32, b: usize, m: u32, c: ConfigId) -> String {
    format!("x_{o}_{b}_{m}_{c}")
}

fn y(b: usize, m: u32, c: ConfigId) -> String {
    format!("y_{b}_{m}_{c}")
}

fn z(m: u32, c: ConfigId, cp: ConfigId) -> String {
    format!("z_{m}_{c}_{cp}")
}

fn w(m: u32, c: ConfigId) -> String {
    format!("w_{m}_{c}")
}

fn cd(m: u32, c: ConfigId) -> String {
    format!("cd_{m}_{c}")
}

fn cct(m: u32, c: ConfigId) -> String {
    format!("cct_{m}_{c}")
}

/// Writes the full makespan MILP for `instance`.
///
/// Assignment variables exist only for `(order, machine, configuration)`
/// triples where the order is eligible and fits the machine's height and
/// area. Rows and columns are emitted in ascending id order.
pub fn emit_milp(instance: &Instance) -> Result<String, LpError> {
    let report = validate_instance(instance);
    if !report.is_valid() {
        return Err(LpError::InvalidInstance(report));
    }
    let big = big_m(instance) as i64;
    let n_orders = instance.orders.len() as i64;
    let slots = instance.batch_slots;

    let mut orders: Vec<_> = instance.orders.iter().collect();
    orders.sort_by_key(|o| o.id);
    let mut machines: Vec<_> = instance.machines.iter().collect();
    machines.sort_by_key(|m| m.id);

    let mut out = String::new();
    let _ = writeln!(out, "\\ makespan model: {} orders, {} machines, {} batch slots, G = {big}", orders.len(), machines.len(), slots);
    out.push_str("Minimize\n obj: Cmax\nSubject To\n");

    // Assignment of each order to exactly one batch-machine-configuration.
    for o in &orders {
        let mut e = Expr::new();
        for m in &machines {
            for c in &m.configs {
                if m.accepts(o, c) {
                    for b in 0..slots {
                        e.add(1, x(o.id, b, m.id, c.id));
                    }
                }
            }
        }
        row(&mut out, &format!("assign_{}", o.id), &e, "=", 1);
    }

    let mut binaries: Vec<String> = Vec::new();
    for m in &machines {
        let mut configs: Vec<_> = m.configs.iter().collect();
        configs.sort_by_key(|c| c.id);
        let eligible = |c: &super::MachineConfig| -> Vec<&super::Order> {
            orders.iter().copied().filter(|o| m.accepts(o, c)).collect()
        };

        for b in 0..slots {
            for c in &configs {
                let members = eligible(c);
                if c.batch_limit && !members.is_empty() {
                    let mut e = Expr::new();
                    for o in &members {
                        e.add(1, x(o.id, b, m.id, c.id));
                    }
                    row(&mut out, &format!("bl_{b}_{}_{}", m.id, c.id), &e, "<=", 1);
                }
            }
            let mut e = Expr::new();
            for c in &configs {
                e.add(1, y(b, m.id, c.id));
            }
            row(&mut out, &format!("onecfg_{b}_{}", m.id), &e, "<=", 1);
            for c in &configs {
                let members = eligible(c);
                if members.is_empty() {
                    continue;
                }
                let mut e = Expr::new();
                for o in &members {
                    e.add(1, x(o.id, b, m.id, c.id));
                }
                e.add(-n_orders, y(b, m.id, c.id));
                row(&mut out, &format!("form_{b}_{}_{}", m.id, c.id), &e, "<=", 0);
            }
        }

        for o in &orders {
            let mut e = Expr::new();
            for c in &configs {
                if m.accepts(o, c) {
                    for b in 0..slots {
                        e.add(o.height as i64, x(o.id, b, m.id, c.id));
                    }
                }
            }
            if !e.is_empty() {
                row(&mut out, &format!("height_{}_{}", o.id, m.id), &e, "<=", m.processing_height as i64);
            }
        }

        for b in 0..slots {
            let mut e = Expr::new();
            for o in &orders {
                for c in &configs {
                    if m.accepts(o, c) {
                        e.add(o.area as i64, x(o.id, b, m.id, c.id));
                    }
                }
            }
            if !e.is_empty() {
                row(&mut out, &format!("area_{b}_{}", m.id), &e, "<=", m.processing_area as i64);
            }
        }

        for c in &configs {
            let mut e = Expr::new();
            e.add(1, cd(m.id, c.id));
            for o in eligible(c) {
                let opt = c.processing_time(o.id).unwrap_or(0) as i64;
                for b in 0..slots {
                    e.add(-opt, x(o.id, b, m.id, c.id));
                }
            }
            for b in 0..slots {
                e.add(-(c.setup_time as i64), y(b, m.id, c.id));
            }
            row(&mut out, &format!("dur_{}_{}", m.id, c.id), &e, "=", 0);
        }

        for c in &configs {
            let mut e = Expr::new();
            for b in 0..slots {
                e.add(1, y(b, m.id, c.id));
            }
            e.add(-(slots as i64), w(m.id, c.id));
            row(&mut out, &format!("use_{}_{}", m.id, c.id), &e, "<=", 0);
        }

        for c in &configs {
            let t0 = m.reconfig_time(INITIAL_CONFIG, c.id).unwrap_or(0) as i64;
            let mut e = Expr::new();
            e.add(1, cct(m.id, c.id));
            e.add(-1, cd(m.id, c.id));
            e.add(-big, w(m.id, c.id));
            row(&mut out, &format!("init_{}_{}", m.id, c.id), &e, ">=", t0 - big);
        }

        for c in &configs {
            for cp in &configs {
                if c.id == cp.id {
                    continue;
                }
                let t = m.reconfig_time(c.id, cp.id).unwrap_or(0) as i64;
                let mut e = Expr::new();
                e.add(1, cct(m.id, cp.id));
                e.add(-1, cct(m.id, c.id));
                e.add(-1, cd(m.id, cp.id));
                e.add(-big, z(m.id, c.id, cp.id));
                e.add(-big, w(m.id, c.id));
                e.add(-big, w(m.id, cp.id));
                row(&mut out, &format!("seq_{}_{}_{}", m.id, c.id, cp.id), &e, ">=", t - 3 * big);
            }
        }

        for (i, c) in configs.iter().enumerate() {
            for cp in &configs[i + 1..] {
                let mut lo = Expr::new();
                lo.add(1, z(m.id, c.id, cp.id));
                lo.add(1, z(m.id, cp.id, c.id));
                lo.add(-1, w(m.id, c.id));
                lo.add(-1, w(m.id, cp.id));
                row(&mut out, &format!("ordlo_{}_{}_{}", m.id, c.id, cp.id), &lo, ">=", -1);
                let mut hi = Expr::new();
                hi.add(1, z(m.id, c.id, cp.id));
                hi.add(1, z(m.id, cp.id, c.id));
                hi.add(1, w(m.id, c.id));
                hi.add(1, w(m.id, cp.id));
                row(&mut out, &format!("ordhi_{}_{}_{}", m.id, c.id, cp.id), &hi, "<=", 3);
            }
        }

        for c in &configs {
            let mut e = Expr::new();
            e.add(1, "Cmax".to_string());
            e.add(-1, cct(m.id, c.id));
            row(&mut out, &format!("cmax_{}_{}", m.id, c.id), &e, ">=", 0);
        }

        for o in &orders {
            for c in &configs {
                if m.accepts(o, c) {
                    for b in 0..slots {
                        binaries.push(x(o.id, b, m.id, c.id));
                    }
                }
            }
        }
        for b in 0..slots {
            for c in &configs {
                binaries.push(y(b, m.id, c.id));
            }
        }
        for c in &configs {
            for cp in &configs {
                if c.id != cp.id {
                    binaries.push(z(m.id, c.id, cp.id));
                }
            }
        }
        for c in &configs {
            binaries.push(w(m.id, c.id));
        }
    }

    out.push_str("Binaries\n");
    for chunk in binaries.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    Ok(out)
}

/// Nonzero variable values of `timed` in the naming used by [`emit_milp`],
/// one `name value` pair per line, for seeding an external solver.
///
/// `z_m_c_cp` is set for every pair where `cp` follows `c` anywhere later in
/// the machine's sequence.
pub fn mip_start(timed: &TimedSchedule) -> String {
    let schedule = &timed.schedule;
    let mut out = String::new();
    let _ = writeln!(out, "# objective {}", timed.makespan);
    for (&o, s) in &schedule.assignment {
        let _ = writeln!(out, "{} 1", x(o, s.batch, s.machine, s.config));
    }
    let formed: BTreeSet<_> = schedule.assignment.values().map(|s| (s.machine, s.config, s.batch)).collect();
    for (m, c, b) in formed {
        let _ = writeln!(out, "{} 1", y(b, m, c));
    }
    for (&m, sequence) in &schedule.config_sequence {
        for (i, &c) in sequence.iter().enumerate() {
            let _ = writeln!(out, "{} 1", w(m, c));
            for &cp in &sequence[i + 1..] {
                let _ = writeln!(out, "{} 1", z(m, c, cp));
            }
        }
    }
    for (&(m, c), &d) in &timed.config_duration {
        let _ = writeln!(out, "{} {d}", cd(m, c));
    }
    for (&(m, c), &t) in &timed.config_completion {
        let _ = writeln!(out, "{} {t}", cct(m, c));
    }
    let _ = writeln!(out, "Cmax {}", timed.makespan);
    out
}
