use proptest::prelude::*;
use rmsched::generator::{generate, GenConfig};
use rmsched::lbbd::warmstart_construct;
use rmsched_cli::io::{instance_from_json, instance_to_json, schedule_from_json, schedule_to_json};
use rmsched::{Schedule, Slot};

fn arb_config() -> impl Strategy<Value = GenConfig> {
    (1usize..25, 1usize..5, 1usize..4, any::<u64>(), 0.0f64..=1.0).prop_map(|(o, c, m, seed, frac)| {
        let mut cfg = GenConfig::new(o, c, m, seed);
        cfg.remanufacturing_fraction = frac;
        cfg
    })
}

fn arb_schedule() -> impl Strategy<Value = (Schedule, Option<u64>)> {
    let slot = (1u32..5, 1u32..5, 0usize..30).prop_map(|(machine, config, batch)| Slot { machine, config, batch });
    (
        prop::collection::btree_map(1u32..40, slot, 0..20),
        prop::collection::btree_map(1u32..5, prop::collection::vec(1u32..6, 0..4), 0..4),
        prop::option::of(0u64..10_000),
    )
        .prop_map(|(assignment, config_sequence, makespan)| (Schedule { assignment, config_sequence }, makespan))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instances_round_trip(cfg in arb_config()) {
        let inst = generate(&cfg).unwrap();
        let text = instance_to_json(&inst);
        prop_assert_eq!(instance_from_json(&text).unwrap(), inst);
    }

    #[test]
    fn schedules_round_trip((schedule, makespan) in arb_schedule()) {
        let text = schedule_to_json(&schedule, makespan);
        prop_assert_eq!(schedule_from_json(&text).unwrap(), (schedule, makespan));
    }
}

#[test]
fn solved_schedule_round_trips() {
    let inst = generate(&GenConfig::new(12, 3, 3, 8)).unwrap();
    let timed = warmstart_construct(&inst, None).unwrap();
    let text = rmsched_cli::io::timed_to_json(&timed);
    assert_eq!(schedule_from_json(&text).unwrap(), (timed.schedule.clone(), Some(timed.makespan)));
}

