mod common;

use catcollapse::causal::*;
use catcollapse::harness::config::EprConfig;
use catcollapse::harness::ConfigSource;
use catcollapse::units::Units;
use proptest::prelude::*;

fn scenario(file: &str) -> EprScenario {
    let src = ConfigSource::read(&common::configs_dir().join(file)).unwrap();
    src.parse::<EprConfig>().unwrap().scenario().unwrap()
}

fn boost_x(e: &SpacetimeEvent, v: f64) -> SpacetimeEvent {
    let g = 1.0 / (1.0 - v * v).sqrt();
    let [x, y, z] = e.position;
    SpacetimeEvent::new([g * (x - v * e.time), y, z], g * (e.time - v * x))
}

fn event() -> impl Strategy<Value = SpacetimeEvent> {
    (prop::array::uniform3(-10.0..10.0f64), -10.0..10.0f64).prop_map(|(r, t)| SpacetimeEvent::new(r, t))
}

#[test]
fn three_detector_contact_is_brute_force_minimum() {
    let events = vec![
        ("a".to_string(), SpacetimeEvent::new([0.0, 0.0, 5.0], 5.0)),
        ("b".to_string(), SpacetimeEvent::new([4.0, 0.0, 0.0], 4.0)),
        ("c".to_string(), SpacetimeEvent::new([0.0, -6.0, 0.0], 6.0)),
    ];
    let s = contact_time(&events, ContactMode::OneWay).unwrap();
    let mut best = f64::INFINITY;
    for (i, (_, a)) in events.iter().enumerate() {
        for (j, (_, b)) in events.iter().enumerate() {
            if i != j {
                let d: f64 = (0..3).map(|k| (a.position[k] - b.position[k]).powi(2)).sum::<f64>().sqrt();
                best = best.min(a.time + d);
            }
        }
    }
    assert_eq!(s.t_contact, best);
    assert_eq!(s.entries.len(), 6);
}

#[test]
fn probes_before_contact_are_bit_identical() {
    let sc = scenario("epr_antisymmetric.json");
    for seed in 0..20 {
        let run = run_epr_scenario(&sc, seed).unwrap();
        let formed = run.cat.amplitudes();
        assert!(run.contact.t_contact.is_finite());
        for p in &run.probes {
            if p.t < run.contact.t_contact {
                assert_eq!(p.phase, Phase::Superposed);
                assert_eq!(
                    p.amplitudes.iter().map(|a| (a.re.to_bits(), a.im.to_bits())).collect::<Vec<_>>(),
                    formed.iter().map(|a| (a.re.to_bits(), a.im.to_bits())).collect::<Vec<_>>()
                );
            } else {
                assert_eq!(p.phase, Phase::Collapsed);
                assert_eq!(p.amplitudes.len(), 1);
            }
        }
        assert!(run.probes.iter().any(|p| p.t < run.contact.t_contact));
        assert!(run.probes.iter().any(|p| p.t >= run.contact.t_contact));
        // Every cat-state label is visited in order.
        let phases: Vec<Phase> = run.timeline.iter().map(|e| e.phase).collect();
        assert!(phases.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(phases.last(), Some(&Phase::Collapsed));
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let sc = scenario("epr_antisymmetric.json");
    let a = run_epr_scenario(&sc, 42).unwrap();
    let b = run_epr_scenario(&sc, 42).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn contact_delay_renders_ten_picoseconds() {
    let sc = scenario("epr_antisymmetric.json");
    let report = timescale_report(&sc).unwrap();
    assert_eq!(report.contact_delay, "10.0 ps");
    assert!(report.ordering_ok, "{:?}", report.violations);
    // 3 mm of light travel.
    let units = Units::default();
    assert_eq!(units.render_internal_time(3.0), "10.0 ps");
}

#[test]
fn timelike_configuration_is_rejected() {
    let sc = scenario("epr_timelike.json");
    assert!(matches!(run_epr_scenario(&sc, 0), Err(ScenarioError::Rejected(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_is_symmetric(a in event(), b in event()) {
        prop_assert_eq!(interval(&a, &b), interval(&b, &a));
    }

    #[test]
    fn interval_is_boost_invariant(a in event(), b in event(), v in -0.9..0.9f64) {
        let dr: f64 = (0..3).map(|k| (a.position[k] - b.position[k]).powi(2)).sum::<f64>().sqrt();
        let dt = (a.time - b.time).abs();
        prop_assume!((dr - dt).abs() > 1e-6 * dr.max(dt).max(1.0));
        prop_assert_eq!(interval(&a, &b), interval(&boost_x(&a, v), &boost_x(&b, v)));
    }

    #[test]
    fn contact_never_precedes_earliest_event(events in prop::collection::vec(event(), 2..6)) {
        let named: Vec<_> = events.into_iter().enumerate().map(|(i, e)| (format!("d{i}"), e)).collect();
        let one = contact_time(&named, ContactMode::OneWay).unwrap();
        let both = contact_time(&named, ContactMode::Mutual).unwrap();
        let earliest = named.iter().map(|(_, e)| e.time).fold(f64::INFINITY, f64::min);
        prop_assert!(one.t_contact >= earliest);
        prop_assert!(both.t_contact >= one.t_contact);
    }
}

#[test]
fn runs_serialize_to_json() {
    let sc = scenario("epr_antisymmetric.json");
    let run = run_epr_scenario(&sc, 3).unwrap();
    let json: serde_json::Value = serde_json::to_value(&run).unwrap();
    assert_eq!(json["contact"]["entries"].as_array().unwrap().len(), 12);
}
