//! Spacetime bookkeeping with `c = 1`.
//!
//! Intervals between absorption events decide whether detectors can have
//! influenced each other; the contact schedule gives the earliest time a
//! signal from one detection reaches another detector, which is when a cat
//! state is allowed to start collapsing.

mod scenario;

pub use scenario::{
    run_epr_scenario, timescale_report, CollapseDecision, CollapseEngine, EprRun, EprScenario, Phase,
    ProbeSnapshot, ScenarioError, TimelineEntry, TimescaleReport, UndecidedPolicy,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{DetectorId, DetectorSpec};
use crate::wavepacket::GaussianPulseSpec;
use crate::{dot3, norm3, sub3, Vec3};

/// Relative tolerance for classifying an interval as light-like.
pub const LIGHTLIKE_RTOL: f64 = 1e-12;

/// Allowed miss distance of a pulse centre from a detector, in transverse
/// pulse widths `1/Δ₀` (plus the detector's linear size).
pub const MISS_TOLERANCE_WIDTHS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalError {
    #[error("no events supplied")]
    NoEvents,
    #[error("detector `{0}` appears more than once")]
    DuplicateDetector(DetectorId),
    #[error("pulse misses detector `{id}`: closest approach {miss_distance} exceeds {tolerance}")]
    PhotonMissesDetector {
        id: DetectorId,
        miss_distance: f64,
        tolerance: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    pub position: Vec3,
    pub time: f64,
}

impl SpacetimeEvent {
    pub fn new(position: Vec3, time: f64) -> Self {
        Self { position, time }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalStatus {
    Spacelike,
    Lightlike,
    Timelike,
}

/// Classifies the separation of two events by the sign of `Δt² - |Δr|²`.
pub fn interval(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> CausalStatus {
    let dr = norm3(sub3(e1.position, e2.position));
    let dt = (e1.time - e2.time).abs();
    if (dr - dt).abs() <= LIGHTLIKE_RTOL * dr.max(dt) {
        CausalStatus::Lightlike
    } else if dr > dt {
        CausalStatus::Spacelike
    } else {
        CausalStatus::Timelike
    }
}

/// First pair (in input order) whose events are not space-like separated.
pub fn first_non_spacelike(
    events: &[(DetectorId, SpacetimeEvent)],
) -> Option<(DetectorId, DetectorId, CausalStatus)> {
    for (i, (a, ea)) in events.iter().enumerate() {
        for (b, eb) in &events[i + 1..] {
            let status = interval(ea, eb);
            if status != CausalStatus::Spacelike {
                return Some((a.clone(), b.clone(), status));
            }
        }
    }
    None
}

/// When a detector pair counts as being in contact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    /// A signal from either event has reached the other detector.
    #[default]
    OneWay,
    /// Signals from both events have reached the respective other detector.
    Mutual,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactSchedule {
    /// `(from, to)` → earliest arrival at `to` of a signal emitted at `from`'s
    /// event (or the mutual-contact time, see [`ContactMode`]).
    #[serde(serialize_with = "entries_as_list")]
    pub entries: BTreeMap<(DetectorId, DetectorId), f64>,
    /// Minimum over all entries; `+∞` with fewer than two events.
    pub t_contact: f64,
}

fn entries_as_list<S: serde::Serializer>(
    entries: &BTreeMap<(DetectorId, DetectorId), f64>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(entries.iter().map(|((from, to), t)| (from, to, t)))
}

/// Light-cone contact schedule `entry(i, j) = t_i + |r_i - r_j|`.
pub fn contact_time(
    events: &[(DetectorId, SpacetimeEvent)],
    mode: ContactMode,
) -> Result<ContactSchedule, CausalError> {
    if events.is_empty() {
        return Err(CausalError::NoEvents);
    }
    let mut seen = BTreeSet::new();
    for (id, _) in events {
        if !seen.insert(id) {
            return Err(CausalError::DuplicateDetector(id.clone()));
        }
    }
    let mut entries = BTreeMap::new();
    let mut t_contact = f64::INFINITY;
    for (i, (a, ea)) in events.iter().enumerate() {
        for (j, (b, eb)) in events.iter().enumerate() {
            if i == j {
                continue;
            }
            let distance = norm3(sub3(ea.position, eb.position));
            let one_way = ea.time + distance;
            let entry = match mode {
                ContactMode::OneWay => one_way,
                ContactMode::Mutual => one_way.max(eb.time + distance),
            };
            t_contact = t_contact.min(entry);
            entries.insert((a.clone(), b.clone()), entry);
        }
    }
    Ok(ContactSchedule { entries, t_contact })
}

/// Moment the pulse centre `k̂₀ t` (launched from the origin at `t = 0`)
/// passes closest to the detector.
pub fn absorption_event(
    pulse: &GaussianPulseSpec,
    det: &DetectorSpec,
) -> Result<SpacetimeEvent, CausalError> {
    let direction = pulse.group_velocity();
    let t = dot3(direction, det.position);
    let closest = pulse.center_at(t);
    let miss_distance = norm3(sub3(det.position, closest));
    let tolerance = MISS_TOLERANCE_WIDTHS / pulse.delta0 + det.volume.cbrt();
    if t <= 0.0 || miss_distance > tolerance {
        return Err(CausalError::PhotonMissesDetector {
            id: det.id.clone(),
            miss_distance,
            tolerance,
        });
    }
    Ok(SpacetimeEvent::new(det.position, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: f64, t: f64) -> SpacetimeEvent {
        SpacetimeEvent::new([x, 0.0, 0.0], t)
    }

    #[test]
    fn trichotomy() {
        assert_eq!(interval(&ev(0.0, 0.0), &ev(0.0, 0.0)), CausalStatus::Lightlike);
        assert_eq!(interval(&ev(0.0, 0.0), &ev(1.0, 0.0)), CausalStatus::Spacelike);
        assert_eq!(interval(&ev(0.0, 0.0), &ev(0.0, 1.0)), CausalStatus::Timelike);
        assert_eq!(interval(&ev(0.0, 0.0), &ev(1.0, 1.0)), CausalStatus::Lightlike);
    }

    #[test]
    fn two_event_contact() {
        let events = vec![("a".to_string(), ev(0.0, 2.0)), ("b".to_string(), ev(3.0, 2.0))];
        let s = contact_time(&events, ContactMode::OneWay).unwrap();
        assert_eq!(s.t_contact, 5.0);
        assert_eq!(s.entries.len(), 2);
    }

    #[test]
    fn single_event_never_contacts() {
        let s = contact_time(&[("a".to_string(), ev(0.0, 0.0))], ContactMode::OneWay).unwrap();
        assert!(s.entries.is_empty());
        assert_eq!(s.t_contact, f64::INFINITY);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let events = vec![("a".to_string(), ev(0.0, 0.0)), ("a".to_string(), ev(1.0, 0.0))];
        assert_eq!(
            contact_time(&events, ContactMode::OneWay),
            Err(CausalError::DuplicateDetector("a".into()))
        );
        assert_eq!(contact_time(&[], ContactMode::OneWay), Err(CausalError::NoEvents));
    }

    #[test]
    fn mutual_contact_waits_for_later_event() {
        let events = vec![("a".to_string(), ev(0.0, 0.0)), ("b".to_string(), ev(3.0, 1.0))];
        let one = contact_time(&events, ContactMode::OneWay).unwrap();
        let both = contact_time(&events, ContactMode::Mutual).unwrap();
        assert_eq!(one.t_contact, 3.0);
        assert_eq!(both.t_contact, 4.0);
    }
}
