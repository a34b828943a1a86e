use rmsched::model::compute_timing;
use rmsched::{Instance, Machine, MachineConfig, Order, OrderKind, ReconfigMatrix, Schedule, Slot};
use rmsched_cli::gantt::{gantt_svg, segments, SegmentKind};
use std::collections::BTreeMap;

fn order(id: u32, area: u64) -> Order {
    Order { id, kind: OrderKind::Manufacturing, area, height: 50 }
}

fn config(id: u32, setup: u64, opt: &[(u32, u64)]) -> MachineConfig {
    MachineConfig { id, setup_time: setup, batch_limit: false, processing: opt.iter().copied().collect() }
}

fn reconfig(entries: &[((u32, u32), u64)]) -> ReconfigMatrix {
    entries.iter().copied().collect()
}

/// Two machines: the first runs configuration 1 then 2, the second a
/// single batch that starts without reconfiguring.
fn fixture() -> (Instance, Schedule) {
    let m1 = Machine {
        id: 1,
        processing_area: 300,
        processing_height: 200,
        configs: vec![config(1, 5, &[(1, 20), (2, 30), (3, 25)]), config(2, 4, &[(3, 15), (4, 10)])],
        reconfig: reconfig(&[((0, 1), 10), ((0, 2), 12), ((1, 2), 8), ((2, 1), 9)]),
    };
    let m2 = Machine {
        id: 2,
        processing_area: 300,
        processing_height: 200,
        configs: vec![config(1, 6, &[(4, 40), (5, 35)])],
        reconfig: reconfig(&[((0, 1), 0)]),
    };
    let inst = Instance {
        orders: vec![order(1, 150), order(2, 150), order(3, 200), order(4, 100), order(5, 100)],
        machines: vec![m1, m2],
        batch_slots: 5,
    };
    let mut s = Schedule::default();
    for (o, m, c, b) in [(1, 1, 1, 0), (2, 1, 1, 0), (3, 1, 2, 1), (4, 1, 2, 1), (5, 2, 1, 0)] {
        s.assignment.insert(o, Slot { machine: m, config: c, batch: b });
    }
    s.config_sequence.insert(1, vec![1, 2]);
    s.config_sequence.insert(2, vec![1]);
    (inst, s)
}

fn count(svg: &str, class: &str) -> usize {
    svg.matches(&format!("class=\"{class}\"")).count()
}

#[test]
fn single_batch_draws_three_segments() {
    let (mut inst, _) = fixture();
    inst.machines.truncate(1);
    inst.orders.truncate(1);
    inst.machines[0].configs.truncate(1);
    inst.machines[0].configs[0].processing.retain(|&o, _| o == 1);
    inst.machines[0].reconfig = reconfig(&[((0, 1), 10)]);
    inst.batch_slots = 1;
    let mut s = Schedule::default();
    s.assignment.insert(1, Slot { machine: 1, config: 1, batch: 0 });
    s.config_sequence.insert(1, vec![1]);
    let timed = compute_timing(&inst, &s).unwrap();
    let segs = segments(&inst, &timed).unwrap();
    let kinds: Vec<SegmentKind> = segs.iter().map(|s| s.kind).collect();
    assert_eq!(kinds, [SegmentKind::Reconfig, SegmentKind::Setup, SegmentKind::Batch]);
    assert_eq!(segs.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), [(0, 10), (10, 15), (15, 35)]);
    let svg = gantt_svg(&inst, &timed).unwrap();
    assert_eq!(count(&svg, "reconfig") + count(&svg, "setup") + count(&svg, "batch"), 3);
}

#[test]
fn two_configurations_draw_one_black_change() {
    let (inst, s) = fixture();
    let timed = compute_timing(&inst, &s).unwrap();
    let svg = gantt_svg(&inst, &timed).unwrap();
    let segs = segments(&inst, &timed).unwrap();
    let between: Vec<_> = segs
        .iter()
        .filter(|g| g.machine == 1 && g.kind == SegmentKind::Reconfig && g.start > 0)
        .collect();
    assert_eq!(between.len(), 1);
    assert_eq!((between[0].start, between[0].end), (65, 73));
    // Machine 2 starts in place, so only machine 1 has black segments.
    assert_eq!(count(&svg, "reconfig"), 2);
    assert_eq!(count(&svg, "setup"), 3);
    assert_eq!(count(&svg, "batch"), 3);
    assert_eq!(timed.makespan, 102);
}

#[test]
fn same_configuration_shares_a_colour() {
    let (inst, s) = fixture();
    let svg = gantt_svg(&inst, &compute_timing(&inst, &s).unwrap()).unwrap();
    let fills: BTreeMap<&str, &str> = svg
        .lines()
        .filter(|l| l.contains("class=\"batch\""))
        .map(|l| {
            let title = l.split("<title>").nth(1).unwrap();
            let fill = l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap();
            (&title[..5], fill)
        })
        .collect();
    assert_eq!(fills["M1 C1"], fills["M2 C1"]);
    assert_ne!(fills["M1 C1"], fills["M1 C2"]);
}

#[test]
fn invalid_schedule_is_refused() {
    let (inst, mut s) = fixture();
    s.config_sequence.insert(1, vec![1]);
    let timed = rmsched::TimedSchedule {
        schedule: s,
        config_duration: BTreeMap::new(),
        config_completion: BTreeMap::new(),
        makespan: 0,
    };
    assert!(gantt_svg(&inst, &timed).is_err());
}

#[test]
fn fixture_matches_golden_file() {
    let (inst, s) = fixture();
    let svg = gantt_svg(&inst, &compute_timing(&inst, &s).unwrap()).unwrap();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/fixture.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, &svg).unwrap();
    }
    assert_eq!(svg, std::fs::read_to_string(path).unwrap());
}
