//! SVG Gantt charts: a row per machine, black reconfigurations, grey setups
//! and one fill colour per configuration.

use rmsched::model::validate_schedule;
use rmsched::{ConfigId, Instance, MachineId, Time, TimedSchedule, INITIAL_CONFIG};
use std::fmt::Write;
use thiserror::Error;

pub const RECONFIG_FILL: &str = "#000000";
pub const SETUP_FILL: &str = "#9e9e9e";
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#86bcb6",
];

const LEFT: f64 = 80.0;
const TOP: f64 = 20.0;
const ROW: f64 = 40.0;
const BAR: f64 = 28.0;
const PLOT_WIDTH: f64 = 800.0;
const AXIS: f64 = 40.0;

#[derive(Debug, Error)]
pub enum GanttError {
    #[error("schedule is invalid:\n{0}")]
    Invalid(rmsched::model::ValidationReport),
    #[error("stated makespan {stated} disagrees with the schedule's {actual}")]
    Makespan { stated: Time, actual: Time },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Reconfig,
    Setup,
    Batch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub machine: MachineId,
    pub kind: SegmentKind,
    pub config: ConfigId,
    /// Batch index for setups and batches.
    pub batch: Option<usize>,
    pub start: Time,
    pub end: Time,
}

/// Every non-empty segment of the schedule, machine by machine in time order.
pub fn segments(instance: &Instance, timed: &TimedSchedule) -> Result<Vec<Segment>, GanttError> {
    let report = validate_schedule(instance, &timed.schedule);
    if !report.is_valid() {
        return Err(GanttError::Invalid(report));
    }
    let mut out = Vec::new();
    let mut makespan = 0;
    for machine in &instance.machines {
        let Some(sequence) = timed.schedule.config_sequence.get(&machine.id) else { continue };
        let batches = timed.schedule.batches_on(machine.id);
        let mut push = |kind, config, batch, start: Time, len: Time| {
            if len > 0 {
                out.push(Segment { machine: machine.id, kind, config, batch, start, end: start + len });
            }
            start + len
        };
        let mut t = 0;
        let mut prev = INITIAL_CONFIG;
        for &c in sequence {
            let cfg = machine.config(c).expect("validated");
            t = push(SegmentKind::Reconfig, c, None, t, machine.reconfig_time(prev, c).expect("validated"));
            for (&b, (_, members)) in batches.iter().filter(|(_, (bc, _))| *bc == c) {
                t = push(SegmentKind::Setup, c, Some(b), t, cfg.setup_time);
                let work = members.iter().map(|&o| cfg.processing_time(o).expect("validated")).sum();
                t = push(SegmentKind::Batch, c, Some(b), t, work);
            }
            prev = c;
        }
        makespan = makespan.max(t);
    }
    if makespan != timed.makespan {
        return Err(GanttError::Makespan { stated: timed.makespan, actual: makespan });
    }
    Ok(out)
}

pub fn config_fill(config: ConfigId) -> &'static str {
    PALETTE[(config as usize + PALETTE.len() - 1) % PALETTE.len()]
}

fn tick_step(span: Time) -> Time {
    let raw = (span as f64 / 10.0).max(1.0);
    let mag = 10f64.powi(raw.log10().floor() as i32);
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|k| k * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    step as Time
}

pub fn gantt_svg(instance: &Instance, timed: &TimedSchedule) -> Result<String, GanttError> {
    let segs = segments(instance, timed)?;
    let span = timed.makespan.max(1);
    let scale = PLOT_WIDTH / span as f64;
    let rows = instance.machines.len();
    let width = LEFT + PLOT_WIDTH + 20.0;
    let height = TOP + ROW * rows as f64 + AXIS;
    let axis_y = TOP + ROW * rows as f64;

    let mut s = String::new();
    writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"##
    )
    .unwrap();
    writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();
    for (row, m) in instance.machines.iter().enumerate() {
        let y = TOP + ROW * row as f64 + ROW / 2.0 + 4.0;
        writeln!(s, r##"<text x="{:.2}" y="{y:.2}" text-anchor="end">M{}</text>"##, LEFT - 8.0, m.id).unwrap();
    }
    for seg in &segs {
        let row = instance.machines.iter().position(|m| m.id == seg.machine).expect("segment machine");
        let x = LEFT + seg.start as f64 * scale;
        let w = (seg.end - seg.start) as f64 * scale;
        let y = TOP + ROW * row as f64 + (ROW - BAR) / 2.0;
        let (class, fill) = match seg.kind {
            SegmentKind::Reconfig => ("reconfig", RECONFIG_FILL),
            SegmentKind::Setup => ("setup", SETUP_FILL),
            SegmentKind::Batch => ("batch", config_fill(seg.config)),
        };
        let title = match seg.batch {
            Some(b) => format!("M{} C{} batch {b} {class} [{}, {}]", seg.machine, seg.config, seg.start, seg.end),
            None => format!("M{} {class} to C{} [{}, {}]", seg.machine, seg.config, seg.start, seg.end),
        };
        writeln!(
            s,
            r##"<rect class="{class}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{BAR:.2}" fill="{fill}" stroke="#ffffff" stroke-width="0.5"><title>{title}</title></rect>"##
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"<line x1="{LEFT:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="#000000"/>"##,
        LEFT + PLOT_WIDTH
    )
    .unwrap();
    let step = tick_step(span);
    let mut t = 0;
    while t <= span {
        let x = LEFT + t as f64 * scale;
        writeln!(s, r##"<line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##, axis_y + 5.0).unwrap();
        writeln!(s, r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"##, axis_y + 18.0).unwrap();
        t += step;
    }
    writeln!(
        s,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (makespan {})</text>"##,
        LEFT + PLOT_WIDTH / 2.0,
        axis_y + 34.0,
        timed.makespan
    )
    .unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}
