//! Bundled hygiene workflow definitions and an independent reference
//! checker used to cross-validate the engine.
//!
//! [`reference_check`] reimplements the hand-hygiene rules as a direct
//! linear scan over the log, sharing no code with the engine. Its rules:
//!
//! - an episode runs from `room_enter` to `room_exit` per (worker, room),
//!   and hands start contaminated;
//! - a valid disinfection is a dispenser use (when `t_rub_valid`) or a
//!   sink start/end span of at least `t_wash_min` milliseconds;
//! - `hh.before_contact` fires at each bed contact with contaminated
//!   hands, except when the same bed is re-contacted within one
//!   uninterrupted contaminated stretch (the first contact of the
//!   stretch already alerted);
//! - bed contact and equipment touch re-contaminate; equipment also ends
//!   a same-bed stretch;
//! - `hh.on_exit` fires when the worker leaves after patient contact
//!   with no newer disinfection.
//!
//! [`compliance_stats`] counts hygiene opportunities from the same scan:
//! every bed contact that does not merely continue a same-bed stretch,
//! plus every exit after patient contact. Each opportunity is a moment
//! where a disinfection was required, so `1 - violations/opportunities`
//! is the compliance rate.

use std::collections::BTreeSet;
use std::collections::HashMap;

use serde::Serialize;

use crate::ledger::{Alert, BedId, EventKind, RoomId, SensorEvent, Severity, Trigger, WorkerId};

pub const RULE_BEFORE_CONTACT: &str = "hh.before_contact";
pub const RULE_ON_EXIT: &str = "hh.on_exit";
pub const RULE_CLEANING_OVERDUE: &str = "tc.overdue";

pub const HAND_HYGIENE_WORKFLOW: &str = "hand_hygiene";
pub const TERMINAL_CLEANING_WORKFLOW: &str = "terminal_cleaning";

/// Source text of the bundled hand-hygiene workflow.
pub fn hand_hygiene_definition() -> &'static str {
    include_str!("../../../workflows/hand_hygiene.wfdl")
}

/// Source text of the bundled terminal-cleaning workflow.
pub fn terminal_cleaning_definition() -> &'static str {
    include_str!("../../../workflows/terminal_cleaning.wfdl")
}

#[derive(Debug, Clone, PartialEq)]
pub struct HygieneParams {
    /// Minimum sink wash span that counts as a disinfection.
    pub t_wash_min: i64,
    /// Whether a dispenser rub counts as a disinfection.
    pub t_rub_valid: bool,
    /// Event kinds that leave hands contaminated.
    pub contaminating_kinds: BTreeSet<EventKind>,
}

impl Default for HygieneParams {
    fn default() -> Self {
        HygieneParams {
            t_wash_min: 40_000,
            t_rub_valid: true,
            contaminating_kinds: BTreeSet::from([
                EventKind::RoomEnter,
                EventKind::BedProximityStart,
                EventKind::EquipmentTouch,
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandStatus {
    Clean,
    Contaminated,
}

/// Hygiene state of one worker during one room visit.
#[derive(Debug, Clone, PartialEq)]
pub struct HandsState {
    pub worker: WorkerId,
    pub room: RoomId,
    pub status: HandStatus,
    pub contact_since_last_disinfection: bool,
    /// Bed of the current contaminated contact stretch, if one is open.
    pub run_bed: Option<BedId>,
    /// Start of the most recent sink wash; later washes overwrite it.
    pub wash_start: Option<i64>,
    /// Whether any bed contact happened during the episode.
    pub any_contact: bool,
}

impl HandsState {
    fn enter(worker: &str, room: &str, params: &HygieneParams) -> Self {
        let entry_contaminates = params.contaminating_kinds.contains(&EventKind::RoomEnter);
        HandsState {
            worker: worker.to_string(),
            room: room.to_string(),
            status: if entry_contaminates { HandStatus::Contaminated } else { HandStatus::Clean },
            contact_since_last_disinfection: false,
            run_bed: None,
            wash_start: None,
            any_contact: false,
        }
    }

    fn disinfect(&mut self) {
        self.status = HandStatus::Clean;
        self.contact_since_last_disinfection = false;
        self.run_bed = None;
    }
}

struct Analysis {
    alerts: Vec<Alert>,
    opportunities: u64,
}

/// Single scan shared by the checker and the statistics; emits alerts and
/// counts opportunities from the same episode states.
fn analyze(events: &[SensorEvent], params: &HygieneParams) -> Analysis {
    let mut episodes: HashMap<(WorkerId, RoomId), HandsState> = HashMap::new();
    let mut alerts = Vec::new();
    let mut opportunities = 0u64;
    let emit = |event: &SensorEvent, rule: &str, n: &mut Vec<Alert>| {
        n.push(Alert {
            alert_seq: n.len() as u64 + 1,
            ts: event.ts,
            workflow: HAND_HYGIENE_WORKFLOW.to_string(),
            rule: rule.to_string(),
            severity: Severity::Warning,
            scope: [
                ("room".to_string(), event.room.clone()),
                ("worker".to_string(), event.worker.clone()),
            ]
            .into(),
            trigger_seq: Trigger::Event(event.seq),
        });
    };

    for event in events {
        let key = (event.worker.clone(), event.room.clone());
        match event.kind {
            EventKind::RoomEnter => {
                // Re-entry while an episode is live changes nothing.
                episodes
                    .entry(key)
                    .or_insert_with(|| HandsState::enter(&event.worker, &event.room, params));
            }
            EventKind::RoomExit => {
                if let Some(state) = episodes.remove(&key) {
                    if state.any_contact {
                        opportunities += 1;
                    }
                    if state.contact_since_last_disinfection {
                        emit(event, RULE_ON_EXIT, &mut alerts);
                    }
                }
            }
            EventKind::BedProximityStart => {
                let Some(state) = episodes.get_mut(&key) else { continue };
                let bed = event.bed.as_deref().expect("bed events carry a bed");
                let continues_run = state.run_bed.as_deref() == Some(bed);
                if !continues_run {
                    opportunities += 1;
                    if state.status == HandStatus::Contaminated {
                        emit(event, RULE_BEFORE_CONTACT, &mut alerts);
                    }
                }
                // A stretch opens (or continues) only when the hands were
                // already contaminated; a clean contact starts none, so
                // re-contacting the same bed afterwards alerts.
                state.run_bed = match state.status {
                    HandStatus::Contaminated => Some(bed.to_string()),
                    HandStatus::Clean => None,
                };
                if params.contaminating_kinds.contains(&EventKind::BedProximityStart) {
                    state.status = HandStatus::Contaminated;
                }
                state.contact_since_last_disinfection = true;
                state.any_contact = true;
            }
            EventKind::EquipmentTouch => {
                let Some(state) = episodes.get_mut(&key) else { continue };
                if params.contaminating_kinds.contains(&EventKind::EquipmentTouch) {
                    state.status = HandStatus::Contaminated;
                }
                state.run_bed = None;
            }
            EventKind::DispenserUse => {
                let Some(state) = episodes.get_mut(&key) else { continue };
                if params.t_rub_valid {
                    state.disinfect();
                }
            }
            EventKind::SinkStart => {
                let Some(state) = episodes.get_mut(&key) else { continue };
                state.wash_start = Some(event.ts);
            }
            EventKind::SinkEnd => {
                let Some(state) = episodes.get_mut(&key) else { continue };
                // An end with no recorded start spans an unbounded wash.
                let span = state.wash_start.map_or(i64::MAX, |start| event.ts - start);
                if span >= params.t_wash_min {
                    state.disinfect();
                }
            }
            EventKind::BedProximityEnd
            | EventKind::CleaningComplete
            | EventKind::DischargeMarker => {}
        }
    }
    Analysis { alerts, opportunities }
}

/// Independent hand-hygiene checker; same alerts as the engine running
/// the bundled definition, computed without the engine.
pub fn reference_check(events: &[SensorEvent], params: &HygieneParams) -> Vec<Alert> {
    analyze(events, params).alerts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceStats {
    pub opportunities: u64,
    pub violations: u64,
    pub compliance_rate: f64,
}

/// Compliance over a log: opportunities from the episode scan, violations
/// from the hand-hygiene alerts among `alerts`.
pub fn compliance_stats(
    events: &[SensorEvent],
    alerts: &[Alert],
    params: &HygieneParams,
) -> ComplianceStats {
    let opportunities = analyze(events, params).opportunities;
    let violations = alerts
        .iter()
        .filter(|a| a.rule == RULE_BEFORE_CONTACT || a.rule == RULE_ON_EXIT)
        .count() as u64;
    let compliance_rate = if opportunities == 0 {
        1.0
    } else {
        1.0 - violations as f64 / opportunities as f64
    };
    ComplianceStats { opportunities, violations, compliance_rate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{load_workflows, process_log};
    use crate::ledger::EventKind as K;
    use crate::wfdl::parse_and_validate;

    fn ev(seq: u64, ts: i64, kind: K, bed: Option<&str>, device: Option<&str>) -> SensorEvent {
        SensorEvent {
            seq,
            ts,
            kind,
            worker: "w1".into(),
            room: "r1".into(),
            bed: bed.map(Into::into),
            device: device.map(Into::into),
        }
    }

    /// The bundled walkthrough scenario: rub on entry, contact with both
    /// beds back to back, rub, resumed contact, rub, exit.
    fn canonical() -> Vec<SensorEvent> {
        vec![
            ev(1, 1_000, K::RoomEnter, None, None),
            ev(2, 2_000, K::DispenserUse, None, Some("d1")),
            ev(3, 3_000, K::BedProximityStart, Some("b1"), None),
            ev(4, 60_000, K::BedProximityEnd, Some("b1"), None),
            ev(5, 61_000, K::BedProximityStart, Some("b2"), None),
            ev(6, 65_000, K::BedProximityEnd, Some("b2"), None),
            ev(7, 66_000, K::DispenserUse, None, Some("d1")),
            ev(8, 67_000, K::BedProximityStart, Some("b2"), None),
            ev(9, 90_000, K::BedProximityEnd, Some("b2"), None),
            ev(10, 91_000, K::DispenserUse, None, Some("d1")),
            ev(11, 92_000, K::RoomExit, None, None),
        ]
    }

    fn run_engine(events: &[SensorEvent]) -> Vec<Alert> {
        let def = parse_and_validate(hand_hygiene_definition()).unwrap();
        let cfg = load_workflows(&[def]).unwrap();
        process_log(&cfg, events, false).unwrap().alerts
    }

    #[test]
    fn bundled_definitions_validate_cleanly() {
        let hh = parse_and_validate(hand_hygiene_definition()).unwrap();
        assert_eq!(hh.ast.name, HAND_HYGIENE_WORKFLOW);
        assert_eq!(hh.ast.scope_fields, vec!["worker", "room"]);
        assert_eq!(hh.ast.states.len(), 4);
        assert!(hh.ast.transitions.len() >= 5);
        assert!(hh.warnings.is_empty());

        let tc = parse_and_validate(terminal_cleaning_definition()).unwrap();
        assert_eq!(tc.ast.name, TERMINAL_CLEANING_WORKFLOW);
        assert_eq!(tc.ast.scope_fields, vec!["room"]);
        assert!(tc.warnings.is_empty());
    }

    #[test]
    fn canonical_scenario_yields_one_alert_before_second_patient() {
        let alerts = run_engine(&canonical());
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].rule, RULE_BEFORE_CONTACT);
        assert_eq!(alerts[0].trigger_seq, Trigger::Event(5));
        assert_eq!(alerts[0].ts, 61_000);
        assert_eq!(alerts[0].severity, Severity::Warning);
    }

    #[test]
    fn checker_matches_engine_on_the_canonical_scenario() {
        let events = canonical();
        let expected = reference_check(&events, &HygieneParams::default());
        assert_eq!(run_engine(&events), expected);
        assert_eq!(expected.len(), 1);
        assert_eq!(expected[0].trigger_seq, Trigger::Event(5));
    }

    #[test]
    fn skipping_the_exit_disinfection_adds_an_exit_alert() {
        let mut events = canonical();
        events.remove(9);
        for (i, e) in events.iter_mut().enumerate() {
            e.seq = i as u64 + 1;
        }
        let alerts = run_engine(&events);
        assert_eq!(alerts.len(), 2);
        assert_eq!(alerts[1].rule, RULE_ON_EXIT);
        assert_eq!(alerts[1].trigger_seq, Trigger::Event(10));
        assert_eq!(reference_check(&events, &HygieneParams::default()), alerts);
    }

    #[test]
    fn short_wash_leaves_hands_contaminated() {
        // The entry rub is replaced by a 29 s wash, so the first contact
        // already violates, and so does the second (other bed, still no
        // valid disinfection).
        let events = vec![
            ev(1, 1_000, K::RoomEnter, None, None),
            ev(2, 2_000, K::SinkStart, None, Some("s1")),
            ev(3, 31_000, K::SinkEnd, None, Some("s1")),
            ev(4, 32_000, K::BedProximityStart, Some("b1"), None),
            ev(5, 60_000, K::BedProximityEnd, Some("b1"), None),
            ev(6, 61_000, K::BedProximityStart, Some("b2"), None),
            ev(7, 65_000, K::BedProximityEnd, Some("b2"), None),
            ev(8, 66_000, K::DispenserUse, None, Some("d1")),
            ev(9, 67_000, K::BedProximityStart, Some("b2"), None),
            ev(10, 90_000, K::BedProximityEnd, Some("b2"), None),
            ev(11, 91_000, K::DispenserUse, None, Some("d1")),
            ev(12, 92_000, K::RoomExit, None, None),
        ];
        let alerts = reference_check(&events, &HygieneParams::default());
        assert_eq!(alerts.len(), 2);
        assert_eq!(alerts[0].rule, RULE_BEFORE_CONTACT);
        assert_eq!(alerts[0].trigger_seq, Trigger::Event(4));
        assert_eq!(alerts[1].trigger_seq, Trigger::Event(6));
        assert_eq!(run_engine(&events), alerts);
    }

    #[test]
    fn long_wash_disinfects() {
        let events = vec![
            ev(1, 0, K::RoomEnter, None, None),
            ev(2, 100, K::SinkStart, None, Some("s1")),
            ev(3, 45_000, K::SinkEnd, None, Some("s1")),
            ev(4, 46_000, K::BedProximityStart, Some("b1"), None),
            ev(5, 47_000, K::BedProximityEnd, Some("b1"), None),
            ev(6, 48_000, K::DispenserUse, None, Some("d1")),
            ev(7, 49_000, K::RoomExit, None, None),
        ];
        assert!(reference_check(&events, &HygieneParams::default()).is_empty());
        assert!(run_engine(&events).is_empty());
    }

    #[test]
    fn no_contact_episode_is_silent() {
        let events = vec![
            ev(1, 0, K::RoomEnter, None, None),
            ev(2, 5_000, K::RoomExit, None, None),
        ];
        assert!(reference_check(&events, &HygieneParams::default()).is_empty());
        assert!(run_engine(&events).is_empty());
    }

    #[test]
    fn clean_contact_does_not_shield_a_same_bed_recontact() {
        // Disinfect, touch b1 (clean, no alert), touch b1 again without
        // disinfecting: the second touch happens with hands the first
        // contact contaminated, so it alerts despite the same bed.
        let events = vec![
            ev(1, 0, K::RoomEnter, None, None),
            ev(2, 1_000, K::DispenserUse, None, Some("d1")),
            ev(3, 2_000, K::BedProximityStart, Some("b1"), None),
            ev(4, 3_000, K::BedProximityEnd, Some("b1"), None),
            ev(5, 4_000, K::BedProximityStart, Some("b1"), None),
            ev(6, 5_000, K::BedProximityEnd, Some("b1"), None),
            ev(7, 6_000, K::DispenserUse, None, Some("d1")),
            ev(8, 7_000, K::RoomExit, None, None),
        ];
        let alerts = reference_check(&events, &HygieneParams::default());
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].trigger_seq, Trigger::Event(5));
        assert_eq!(run_engine(&events), alerts);
    }

    #[test]
    fn same_bed_recontact_within_a_contaminated_stretch_alerts_once() {
        let events = vec![
            ev(1, 0, K::RoomEnter, None, None),
            ev(2, 1_000, K::BedProximityStart, Some("b1"), None),
            ev(3, 2_000, K::BedProximityEnd, Some("b1"), None),
            ev(4, 3_000, K::BedProximityStart, Some("b1"), None),
            ev(5, 4_000, K::BedProximityEnd, Some("b1"), None),
            ev(6, 5_000, K::DispenserUse, None, Some("d1")),
            ev(7, 6_000, K::RoomExit, None, None),
        ];
        let alerts = reference_check(&events, &HygieneParams::default());
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].trigger_seq, Trigger::Event(2));
        assert_eq!(run_engine(&events), alerts);
    }

    #[test]
    fn equipment_touch_ends_a_same_bed_stretch() {
        let events = vec![
            ev(1, 0, K::RoomEnter, None, None),
            ev(2, 1_000, K::BedProximityStart, Some("b1"), None),
            ev(3, 2_000, K::BedProximityEnd, Some("b1"), None),
            ev(4, 3_000, K::EquipmentTouch, None, Some("iv_pump")),
            ev(5, 4_000, K::BedProximityStart, Some("b1"), None),
            ev(6, 5_000, K::BedProximityEnd, Some("b1"), None),
            ev(7, 6_000, K::DispenserUse, None, Some("d1")),
            ev(8, 7_000, K::RoomExit, None, None),
        ];
        let alerts = reference_check(&events, &HygieneParams::default());
        assert_eq!(alerts.len(), 2);
        assert_eq!(alerts[1].trigger_seq, Trigger::Event(5));
        assert_eq!(run_engine(&events), alerts);
    }

    #[test]
    fn invalid_rubs_can_be_configured() {
        let params = HygieneParams { t_rub_valid: false, ..HygieneParams::default() };
        let alerts = reference_check(&canonical(), &params);
        // Rubs no longer disinfect: both fresh contacts and the exit
        // violate; the resumed b2 contact continues a stretch.
        assert_eq!(alerts.len(), 3);
        assert_eq!(alerts[2].rule, RULE_ON_EXIT);
    }

    #[test]
    fn compliance_stats_on_the_canonical_scenario() {
        let events = canonical();
        let params = HygieneParams::default();
        let alerts = reference_check(&events, &params);
        let stats = compliance_stats(&events, &alerts, &params);
        assert_eq!(stats.opportunities, 4);
        assert_eq!(stats.violations, 1);
        assert!((stats.compliance_rate - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_log_is_fully_compliant() {
        let stats = compliance_stats(&[], &[], &HygieneParams::default());
        assert_eq!(stats.opportunities, 0);
        assert_eq!(stats.violations, 0);
        assert_eq!(stats.compliance_rate, 1.0);
    }

    #[test]
    fn foreign_alert_rules_do_not_count_as_violations() {
        let events = canonical();
        let params = HygieneParams::default();
        let mut alerts = reference_check(&events, &params);
        alerts.push(Alert {
            alert_seq: 99,
            ts: 92_000,
            workflow: TERMINAL_CLEANING_WORKFLOW.into(),
            rule: RULE_CLEANING_OVERDUE.into(),
            severity: Severity::Critical,
            scope: [("room".to_string(), "r1".to_string())].into(),
            trigger_seq: Trigger::timer("deadline"),
        });
        let stats = compliance_stats(&events, &alerts, &params);
        assert_eq!(stats.violations, 1);
    }

    fn discharge(seq: u64, ts: i64, room: &str) -> SensorEvent {
        SensorEvent {
            seq,
            ts,
            kind: K::DischargeMarker,
            worker: "his".into(),
            room: room.into(),
            bed: None,
            device: None,
        }
    }

    fn cleaning(seq: u64, ts: i64, room: &str) -> SensorEvent {
        SensorEvent {
            seq,
            ts,
            kind: K::CleaningComplete,
            worker: "cleaner".into(),
            room: room.into(),
            bed: None,
            device: None,
        }
    }

    fn run_cleaning(events: &[SensorEvent]) -> Vec<Alert> {
        let def = parse_and_validate(terminal_cleaning_definition()).unwrap();
        let cfg = load_workflows(&[def]).unwrap();
        process_log(&cfg, events, false).unwrap().alerts
    }

    #[test]
    fn cleaning_within_the_deadline_is_silent() {
        let alerts = run_cleaning(&[discharge(1, 0, "r1"), cleaning(2, 3_600_000, "r1")]);
        assert!(alerts.is_empty());
    }

    #[test]
    fn missed_deadline_raises_a_critical_alert() {
        let alerts = run_cleaning(&[discharge(1, 0, "r1"), discharge(2, 90_000_000, "r2")]);
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].rule, RULE_CLEANING_OVERDUE);
        assert_eq!(alerts[0].severity, Severity::Critical);
        assert_eq!(alerts[0].ts, 86_400_000);
        assert_eq!(alerts[0].scope["room"], "r1");
        assert_eq!(alerts[0].trigger_seq, Trigger::timer("deadline"));
    }

    #[test]
    fn discharges_in_different_rooms_run_independently() {
        let def = parse_and_validate(terminal_cleaning_definition()).unwrap();
        let cfg = load_workflows(&[def]).unwrap();
        let out = process_log(
            &cfg,
            &[discharge(1, 0, "r1"), discharge(2, 10, "r2"), cleaning(3, 1_000, "r1")],
            false,
        )
        .unwrap();
        assert_eq!(out.stats.instances_created, 2);
        assert_eq!(out.stats.instances_completed, 1);
        assert_eq!(out.stats.instances_live, 1);
    }

    #[test]
    fn late_cleaning_still_closes_an_overdue_room() {
        let alerts = run_cleaning(&[discharge(1, 0, "r1"), cleaning(2, 90_000_000, "r1")]);
        assert_eq!(alerts.len(), 1);
        let def = parse_and_validate(terminal_cleaning_definition()).unwrap();
        let cfg = load_workflows(&[def]).unwrap();
        let out = process_log(
            &cfg,
            &[discharge(1, 0, "r1"), cleaning(2, 90_000_000, "r1")],
            false,
        )
        .unwrap();
        assert_eq!(out.stats.instances_completed, 1);
    }
}
