//! End-to-end EPR pipeline: absorption events, cat formation, light-cone
//! gating and spin-boson driven collapse.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{contact_time, CausalError, ContactMode, ContactSchedule, SpacetimeEvent};
use crate::detection::{transit_time_seconds, DetectorId, DetectorSpec};
use crate::entangle::{
    self, collapse_cat, collapse_cat_to, evolve_entangled, is_anticorrelated, CatCollapse,
    CatState, Conditioning, EntangleError, TwoPhotonSpec,
};
use crate::rng::derive_seed;
use crate::spinboson::{
    collapse_trajectory_from, CollapseProtocol, CollapseVerdict, SpinBosonError, SpinBosonParams,
};
use crate::units::Units;

const ENTANGLE_STREAM: u64 = 0x656e_7461;
const SPINBOSON_STREAM: u64 = 0x7370_696e;
const BORN_STREAM: u64 = 0x626f_726e;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario rejected: {0}")]
    Rejected(EntangleError),
    #[error(transparent)]
    Entangle(EntangleError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    SpinBoson(#[from] SpinBosonError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl From<EntangleError> for ScenarioError {
    fn from(e: EntangleError) -> Self {
        match e {
            EntangleError::CausallyConnected { .. } => ScenarioError::Rejected(e),
            other => ScenarioError::Entangle(other),
        }
    }
}

/// What to do when the spin-boson verdict is undecided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum UndecidedPolicy {
    /// Resample the bath with fresh sub-seeds, at most `max_attempts` runs
    /// in total.
    Retry { max_attempts: usize },
    /// Report the undecided run and leave the cat uncollapsed.
    Report,
}

impl Default for UndecidedPolicy {
    fn default() -> Self {
        UndecidedPolicy::Retry { max_attempts: 10 }
    }
}

/// Spin-boson engine used once the branches are in contact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEngine {
    pub params: SpinBosonParams,
    pub bath_temperature: f64,
    pub protocol: CollapseProtocol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EprScenario {
    pub photons: TwoPhotonSpec,
    pub detectors: Vec<DetectorSpec>,
    pub conditioning: Conditioning,
    pub engine: CollapseEngine,
    pub units: Units,
    /// Lab times (internal units) at which the cat is inspected.
    pub probe_times: Vec<f64>,
    pub contact_mode: ContactMode,
    pub undecided_policy: UndecidedPolicy,
    pub decoherence_time_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Superposed,
    Collapsing,
    Collapsed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Superposed => "superposed",
            Phase::Collapsing => "collapsing",
            Phase::Collapsed => "collapsed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimelineEntry {
    pub t: f64,
    pub phase: Phase,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeSnapshot {
    pub t: f64,
    pub phase: Phase,
    pub amplitudes: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollapseDecision {
    /// A single branch: nothing to decide.
    Trivial,
    /// Two branches decided by the sign of `M_z`.
    SpinBoson {
        verdict: CollapseVerdict,
        tail_average: f64,
        attempts: usize,
        /// Engine-time length of the collapsing phase.
        duration: f64,
    },
    /// More than two branches: Born-rule selection.
    Born,
    /// Every spin-boson attempt was undecided; the cat is left intact.
    Undecided { attempts: usize, tail_average: f64 },
    /// Fewer than two detectors fired in any branch, so the branches never
    /// come into contact.
    NoContact,
}

#[derive(Clone, Debug, Serialize)]
pub struct EprRun {
    pub seed: u64,
    /// Absorption events of detectors fired in at least one branch.
    pub events: Vec<(DetectorId, SpacetimeEvent)>,
    pub formation_time: f64,
    pub contact: ContactSchedule,
    /// Cat state as formed; frozen until `contact.t_contact`.
    pub cat: CatState,
    pub probes: Vec<ProbeSnapshot>,
    pub decision: CollapseDecision,
    pub collapse: Option<CatCollapse>,
    pub timeline: Vec<TimelineEntry>,
}

impl EprRun {
    pub fn branch(&self) -> Option<usize> {
        self.collapse.as_ref().map(|c| c.joint.branch)
    }

    /// `None` unless the run collapsed onto exactly two detections.
    pub fn anticorrelated(&self) -> Option<bool> {
        self.collapse.as_ref().and_then(|c| is_anticorrelated(&c.joint))
    }

    pub fn is_undecided(&self) -> bool {
        matches!(self.decision, CollapseDecision::Undecided { .. })
    }
}

pub fn run_epr_scenario(scenario: &EprScenario, seed: u64) -> Result<EprRun, ScenarioError> {
    let cat = evolve_entangled(
        &scenario.photons,
        &scenario.detectors,
        scenario.conditioning,
        derive_seed(seed, ENTANGLE_STREAM),
    )?;

    let by_id = scenario
        .detectors
        .iter()
        .map(|d| (d.id.clone(), d.clone()))
        .collect();
    let all_events = entangle::absorption_events(&scenario.photons, &by_id)?;
    let fired: BTreeSet<DetectorId> = cat.branches.iter().flat_map(|b| b.fired()).collect();
    let events: Vec<(DetectorId, SpacetimeEvent)> = all_events
        .into_iter()
        .filter(|(id, _)| fired.contains(id))
        .collect();
    let formation_time = events.iter().map(|(_, e)| e.time).fold(0.0, f64::max);
    let contact = if events.is_empty() {
        ContactSchedule {
            entries: Default::default(),
            t_contact: f64::INFINITY,
        }
    } else {
        contact_time(&events, scenario.contact_mode)?
    };
    let t_contact = contact.t_contact;

    let (decision, collapse) = decide(scenario, &cat, t_contact, seed)?;

    let formed = cat.amplitudes();
    let probes = scenario
        .probe_times
        .iter()
        .map(|&t| match (&collapse, t < t_contact) {
            (Some(c), false) => ProbeSnapshot {
                t,
                phase: Phase::Collapsed,
                amplitudes: c.collapsed.amplitudes(),
            },
            _ => ProbeSnapshot {
                t,
                phase: Phase::Superposed,
                amplitudes: formed.clone(),
            },
        })
        .collect();

    let timeline = build_timeline(&events, formation_time, &cat, &contact, &decision, collapse.as_ref());
    Ok(EprRun {
        seed,
        events,
        formation_time,
        contact,
        cat,
        probes,
        decision,
        collapse,
        timeline,
    })
}

fn decide(
    scenario: &EprScenario,
    cat: &CatState,
    t_contact: f64,
    seed: u64,
) -> Result<(CollapseDecision, Option<CatCollapse>), ScenarioError> {
    match cat.branches.len() {
        0 => Err(EntangleError::EmptyBranchSet.into()),
        1 => Ok((CollapseDecision::Trivial, Some(collapse_cat_to(cat, 0)?))),
        _ if !t_contact.is_finite() => Ok((CollapseDecision::NoContact, None)),
        2 => {
            let amplitudes = cat.amplitudes();
            let norm = cat.norm_sqr().sqrt();
            let spin = [amplitudes[0] / norm, amplitudes[1] / norm];
            let max_attempts = match scenario.undecided_policy {
                UndecidedPolicy::Retry { max_attempts } => max_attempts.max(1),
                UndecidedPolicy::Report => 1,
            };
            let engine = &scenario.engine;
            let mut tail = f64::NAN;
            for attempt in 0..max_attempts {
                let sub_seed = derive_seed(derive_seed(seed, SPINBOSON_STREAM), attempt as u64);
                let result = collapse_trajectory_from(
                    &engine.params,
                    spin,
                    engine.bath_temperature,
                    &engine.protocol,
                    sub_seed,
                )?;
                tail = result.tail_average;
                let branch = match result.verdict {
                    CollapseVerdict::Plus => 0,
                    CollapseVerdict::Minus => 1,
                    CollapseVerdict::Undecided => continue,
                };
                let decision = CollapseDecision::SpinBoson {
                    verdict: result.verdict,
                    tail_average: tail,
                    attempts: attempt + 1,
                    duration: engine.protocol.t_final,
                };
                return Ok((decision, Some(collapse_cat_to(cat, branch)?)));
            }
            Ok((
                CollapseDecision::Undecided {
                    attempts: max_attempts,
                    tail_average: tail,
                },
                None,
            ))
        }
        _ => Ok((
            CollapseDecision::Born,
            Some(collapse_cat(cat, derive_seed(seed, BORN_STREAM))?),
        )),
    }
}

fn build_timeline(
    events: &[(DetectorId, SpacetimeEvent)],
    formation_time: f64,
    cat: &CatState,
    contact: &ContactSchedule,
    decision: &CollapseDecision,
    collapse: Option<&CatCollapse>,
) -> Vec<TimelineEntry> {
    let mut timeline: Vec<TimelineEntry> = events
        .iter()
        .map(|(id, e)| TimelineEntry {
            t: e.time,
            phase: Phase::Superposed,
            detail: format!("absorption window at {id}"),
        })
        .collect();
    timeline.push(TimelineEntry {
        t: formation_time,
        phase: Phase::Superposed,
        detail: format!("cat formed with {} branch(es)", cat.branches.len()),
    });
    let t_contact = contact.t_contact;
    if t_contact.is_finite() {
        let pair = contact
            .entries
            .iter()
            .find(|(_, &t)| t == t_contact)
            .map(|((a, b), _)| format!("{a} -> {b}"))
            .unwrap_or_default();
        timeline.push(TimelineEntry {
            t: t_contact,
            phase: Phase::Collapsing,
            detail: match decision {
                CollapseDecision::SpinBoson { duration, attempts, .. } => format!(
                    "light-cone contact {pair}; spin-boson window {duration} after {attempts} attempt(s)"
                ),
                CollapseDecision::Undecided { attempts, .. } => {
                    format!("light-cone contact {pair}; undecided after {attempts} attempt(s)")
                }
                _ => format!("light-cone contact {pair}"),
            },
        });
    }
    if let Some(c) = collapse {
        let t = if t_contact.is_finite() { t_contact } else { formation_time };
        timeline.push(TimelineEntry {
            t,
            phase: Phase::Collapsed,
            detail: format!("branch {} selected, fired [{}]", c.joint.branch, c.joint.fired().join(" ")),
        });
    }
    // Stable: equal times keep insertion order.
    timeline.sort_by(|a, b| a.t.total_cmp(&b.t));
    timeline
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimescaleReport {
    pub decoherence_time_s: f64,
    /// Longest photon transit time through any routed detector.
    pub transit_time_s: f64,
    /// `t_contact` minus the earliest absorption event.
    pub contact_delay_s: f64,
    pub decoherence: String,
    pub transit: String,
    pub contact_delay: String,
    /// `decoherence < transit < contact_delay`, strictly.
    pub ordering_ok: bool,
    pub violations: Vec<String>,
}

impl TimescaleReport {
    pub fn from_seconds(decoherence_time_s: f64, transit_time_s: f64, contact_delay_s: f64, units: &Units) -> Self {
        let mut violations = Vec::new();
        if !(decoherence_time_s < transit_time_s) {
            violations.push("decoherence time is not shorter than transit time".to_string());
        }
        if !(transit_time_s < contact_delay_s) {
            violations.push("transit time is not shorter than contact delay".to_string());
        }
        Self {
            decoherence_time_s,
            transit_time_s,
            contact_delay_s,
            decoherence: units.render_seconds(decoherence_time_s),
            transit: units.render_seconds(transit_time_s),
            contact_delay: units.render_seconds(contact_delay_s),
            ordering_ok: violations.is_empty(),
            violations,
        }
    }
}

/// Tabulates the three time scales for every routed detector.
pub fn timescale_report(scenario: &EprScenario) -> Result<TimescaleReport, ScenarioError> {
    let by_id = scenario
        .detectors
        .iter()
        .map(|d| (d.id.clone(), d.clone()))
        .collect();
    let events = entangle::absorption_events(&scenario.photons, &by_id)?;
    let schedule = contact_time(&events, scenario.contact_mode)?;
    let first = events.iter().map(|(_, e)| e.time).fold(f64::INFINITY, f64::min);
    let transit = scenario
        .detectors
        .iter()
        .map(|d| transit_time_seconds(d, &scenario.units))
        .fold(0.0, f64::max);
    let delay = scenario.units.internal_time_to_seconds(schedule.t_contact - first);
    Ok(TimescaleReport::from_seconds(
        scenario.decoherence_time_s,
        transit,
        delay,
        &scenario.units,
    ))
}
