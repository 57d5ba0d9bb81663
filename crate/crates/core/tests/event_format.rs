//! Round-trip property for the event-log text format.

use gresilience::decision::Rationale;
use gresilience::energy::EnergySource;
use gresilience::events::{Event, EventKind, EventLog, Outcome};
use gresilience::game::Action;
use proptest::prelude::*;

fn label() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9-]{0,12}"
}

fn finite() -> impl Strategy<Value = f64> {
    -1.0e6..1.0e6f64
}

fn duration() -> impl Strategy<Value = f64> {
    0.0..1.0e4f64
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![Just(Action::Robot), Just(Action::Human)]
}

fn rationale() -> impl Strategy<Value = Rationale> {
    prop_oneof![
        Just(Rationale::HighConfidence),
        Just(Rationale::LowConfidence),
        Just(Rationale::GameSampled),
        Just(Rationale::PolicyFixed),
    ]
}

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![
        Just(Outcome::RobotPlaced),
        Just(Outcome::HumanPlaced),
        Just(Outcome::Discarded),
        Just(Outcome::Missed),
    ]
}

fn source() -> impl Strategy<Value = EnergySource> {
    prop_oneof![
        Just(EnergySource::Arm),
        Just(EnergySource::Compute),
        Just(EnergySource::Conveyor),
        Just(EnergySource::HumanAid),
    ]
}

fn kind() -> impl Strategy<Value = EventKind> {
    prop_oneof![
        (any::<u32>(), label(), any::<u64>(), label()).prop_map(
            |(schema_version, scenario_id, seed, policy)| EventKind::RunStart {
                schema_version,
                scenario_id,
                seed,
                policy,
            }
        ),
        label().prop_map(|color| EventKind::Arrival { color }),
        Just(EventKind::ImageEmpty),
        any::<bool>().prop_map(|novel| EventKind::Similarity { novel }),
        Just(EventKind::QueueInsert),
        (0.0..1.0f64, label(), any::<bool>())
            .prop_map(|(eps, label, second)| EventKind::Classified { eps, label, second }),
        any::<bool>().prop_map(|confident| EventKind::Gate { confident }),
        (0.0..1.0f64).prop_map(|factor| EventKind::Slowdown { factor }),
        Just(EventKind::SpeedRestored),
        (finite(), finite(), finite(), finite()).prop_map(
            |(human_time, arm_time, interaction_reduction, co2_reduction)| EventKind::Factors {
                human_time,
                arm_time,
                interaction_reduction,
                co2_reduction,
            }
        ),
        (
            action(),
            rationale(),
            proptest::option::of(0.0..1.0f64),
            proptest::option::of(0.0..1.0f64),
            proptest::option::of(0.0..1.0f64),
            proptest::option::of(finite()),
            proptest::option::of(finite()),
            any::<bool>(),
        )
            .prop_map(
                |(action, rationale, p_robot, sigma_p1, sigma_p2, eu_p1, eu_p2, fallback)| {
                    EventKind::Decision {
                        action,
                        rationale,
                        p_robot,
                        sigma_p1,
                        sigma_p2,
                        eu_p1,
                        eu_p2,
                        fallback,
                    }
                },
            ),
        (label(), any::<bool>(), duration(), duration()).prop_map(
            |(label, correct, duration_s, position_m)| EventKind::ArmPlaced {
                label,
                correct,
                duration_s,
                position_m,
            },
        ),
        (duration(), duration()).prop_map(|(duration_s, position_m)| EventKind::HumanPlaced {
            duration_s,
            position_m,
        }),
        duration().prop_map(|duration_s| EventKind::Correction { duration_s }),
        Just(EventKind::Validated),
        duration().prop_map(|position_m| EventKind::Missed { position_m }),
        duration().prop_map(|duration_s| EventKind::Retrieved { duration_s }),
        outcome().prop_map(|outcome| EventKind::ObjectDone { outcome }),
        (source(), duration(), duration()).prop_map(|(source, power_w, duration_s)| {
            EventKind::Energy {
                source,
                power_w,
                duration_s,
                joules: power_w * duration_s,
            }
        }),
        any::<u64>().prop_map(|objects| EventKind::RunEnd { objects }),
    ]
}

fn event() -> impl Strategy<Value = Event> {
    (any::<u32>(), proptest::option::of(any::<u64>()), kind())
        .prop_map(|(t, object_id, kind)| Event::new(u64::from(t), object_id, kind))
}

proptest! {
    #[test]
    fn single_event_lines_round_trip(e in event()) {
        let line = e.to_line();
        let parsed = Event::parse_line(&line, 1).unwrap();
        prop_assert_eq!(&parsed, &e);
        prop_assert_eq!(parsed.to_line(), line);
    }

    #[test]
    fn whole_logs_round_trip_byte_identically(mut events in proptest::collection::vec(event(), 0..40)) {
        events.sort_by_key(|e| e.t_ms);
        let mut log = EventLog::new();
        for e in events {
            log.push(e).unwrap();
        }
        let text = log.to_text();
        let reparsed = EventLog::parse_text(&text).unwrap();
        prop_assert_eq!(&reparsed, &log);
        prop_assert_eq!(reparsed.to_text(), text);
    }

    /// The parser never panics on arbitrary input, it only errors.
    #[test]
    fn parser_is_total_on_garbage(text in "\\PC{0,200}") {
        let _ = EventLog::parse_text(&text);
    }
}
