//! Seeded ward simulator: workers with configurable compliance behavior
//! move through rooms and leave a sensor event log behind.
//!
//! All randomness flows through [`SplitMix64`], and draws happen in one
//! documented order, so a seed pins the byte-exact output:
//!
//! - policies run in list order, visits in sequence per policy;
//! - per visit: room index, contact count, then per contact the bed
//!   index, the compliance draw (only at a hygiene opportunity), and, on
//!   compliance, the method, the device, and for washes the duration;
//! - a final compliance draw covers the exit when patient contact
//!   happened;
//! - each emitted event first draws its dwell gap from the policy's
//!   range, except that a sink end is pinned to start plus wash duration.
//!
//! The first event sits exactly at `start_ts`; gaps of at least 1 ms keep
//! timestamps strictly increasing, so the output always validates.
//!
//! A worker draws compliance exactly at the moments the compliance
//! statistics count as opportunities: contacts that do not continue a
//! same-bed contaminated stretch, and exits after contact. Violations are
//! therefore independent Bernoulli trials with probability
//! `1 - p_comply`, which calibration tests rely on. That guarantee holds
//! when wash durations stay at or above the validity threshold;
//! configured shorter washes count as inadequate hygiene downstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hygiene::HygieneParams;
use crate::ledger::{EventKind, SensorEvent};

/// SplitMix64 generator; bit-exact across platforms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `0..n`. Plain modulo; the bias is negligible for
    /// the list sizes and ranges simulated here.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty draw range");
        self.next_u64() % n
    }

    /// Uniform draw in `lo..=hi`.
    pub fn next_range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "inverted draw range");
        lo + self.next_below((hi - lo) as u64 + 1) as i64
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub id: String,
    pub beds: Vec<String>,
    #[serde(default)]
    pub sinks: Vec<String>,
    #[serde(default)]
    pub dispensers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardLayout {
    pub rooms: Vec<RoomSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub worker: String,
    /// Probability of disinfecting at each hygiene opportunity.
    pub p_comply: f64,
    /// Probability of choosing the sink over the dispenser.
    pub p_wash_vs_rub: f64,
    /// Inclusive wash duration range in ms.
    pub wash_duration_range: [i64; 2],
    pub visits: u32,
    /// Inclusive bed contacts per visit.
    pub contacts_per_visit_range: [u32; 2],
    /// Inclusive gap between consecutive events in ms.
    pub dwell_ms_range: [i64; 2],
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{context} is not valid JSON: {source}")]
    MalformedJson {
        context: &'static str,
        source: serde_json::Error,
    },
    #[error("layout has no rooms")]
    EmptyLayout,
    #[error("room {room:?} has no beds")]
    RoomWithoutBeds { room: String },
    #[error("id {id:?} appears more than once in the layout")]
    DuplicateId { id: String },
    #[error("policy for worker {worker:?}: {message}")]
    BadPolicy { worker: String, message: String },
}

pub fn load_layout(text: &str) -> Result<WardLayout, SimError> {
    let layout: WardLayout = serde_json::from_str(text)
        .map_err(|source| SimError::MalformedJson { context: "layout", source })?;
    if layout.rooms.is_empty() {
        return Err(SimError::EmptyLayout);
    }
    let mut seen = std::collections::HashSet::new();
    for room in &layout.rooms {
        if room.beds.is_empty() {
            return Err(SimError::RoomWithoutBeds { room: room.id.clone() });
        }
        for id in std::iter::once(&room.id)
            .chain(&room.beds)
            .chain(&room.sinks)
            .chain(&room.dispensers)
        {
            if !seen.insert(id.clone()) {
                return Err(SimError::DuplicateId { id: id.clone() });
            }
        }
    }
    Ok(layout)
}

pub fn load_policies(text: &str) -> Result<Vec<AgentPolicy>, SimError> {
    let policies: Vec<AgentPolicy> = serde_json::from_str(text)
        .map_err(|source| SimError::MalformedJson { context: "policies", source })?;
    for p in &policies {
        let bad = |message: &str| SimError::BadPolicy {
            worker: p.worker.clone(),
            message: message.to_string(),
        };
        if !(0.0..=1.0).contains(&p.p_comply) {
            return Err(bad("p_comply must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&p.p_wash_vs_rub) {
            return Err(bad("p_wash_vs_rub must lie in [0, 1]"));
        }
        if p.wash_duration_range[0] < 1 || p.wash_duration_range[0] > p.wash_duration_range[1] {
            return Err(bad("wash_duration_range must satisfy 1 <= min <= max"));
        }
        if p.contacts_per_visit_range[0] > p.contacts_per_visit_range[1] {
            return Err(bad("contacts_per_visit_range must satisfy min <= max"));
        }
        if p.dwell_ms_range[0] < 1 || p.dwell_ms_range[0] > p.dwell_ms_range[1] {
            return Err(bad("dwell_ms_range must satisfy 1 <= min <= max"));
        }
    }
    Ok(policies)
}

struct Emitter {
    rng: SplitMix64,
    events: Vec<SensorEvent>,
    ts: i64,
    started: bool,
}

impl Emitter {
    /// Advances the clock by a dwell gap (except for the very first
    /// event) and appends the event with the next sequence number.
    fn emit(
        &mut self,
        dwell: [i64; 2],
        kind: EventKind,
        worker: &str,
        room: &str,
        bed: Option<&str>,
        device: Option<&str>,
    ) {
        if self.started {
            self.ts += self.rng.next_range_i64(dwell[0], dwell[1]);
        } else {
            self.started = true;
        }
        self.push(self.ts, kind, worker, room, bed, device);
    }

    /// Appends an event at a fixed timestamp (sink ends) and moves the
    /// clock there.
    fn emit_at(
        &mut self,
        ts: i64,
        kind: EventKind,
        worker: &str,
        room: &str,
        device: Option<&str>,
    ) {
        self.ts = ts;
        self.push(ts, kind, worker, room, None, device);
    }

    fn push(
        &mut self,
        ts: i64,
        kind: EventKind,
        worker: &str,
        room: &str,
        bed: Option<&str>,
        device: Option<&str>,
    ) {
        self.events.push(SensorEvent {
            seq: self.events.len() as u64 + 1,
            ts,
            kind,
            worker: worker.to_string(),
            room: room.to_string(),
            bed: bed.map(Into::into),
            device: device.map(Into::into),
        });
    }

    /// Emits one disinfection and reports whether it met the validity
    /// threshold. Method falls back to whatever the room offers; a room
    /// with neither device skips the disinfection entirely (returns
    /// false, an unavoidable violation).
    fn disinfect(&mut self, policy: &AgentPolicy, room: &RoomSpec, threshold: i64) -> bool {
        let wants_wash = self.rng.chance(policy.p_wash_vs_rub);
        let wash = match (wants_wash, !room.sinks.is_empty(), !room.dispensers.is_empty()) {
            (true, true, _) => true,
            (true, false, true) => false,
            (false, _, true) => false,
            (false, true, false) => true,
            (_, false, false) => return false,
        };
        if wash {
            let device = &room.sinks[self.rng.next_below(room.sinks.len() as u64) as usize];
            self.emit(
                policy.dwell_ms_range,
                EventKind::SinkStart,
                &policy.worker,
                &room.id,
                None,
                Some(device),
            );
            let duration = self
                .rng
                .next_range_i64(policy.wash_duration_range[0], policy.wash_duration_range[1]);
            self.emit_at(
                self.ts + duration,
                EventKind::SinkEnd,
                &policy.worker,
                &room.id,
                Some(device),
            );
            duration >= threshold
        } else {
            let device =
                &room.dispensers[self.rng.next_below(room.dispensers.len() as u64) as usize];
            self.emit(
                policy.dwell_ms_range,
                EventKind::DispenserUse,
                &policy.worker,
                &room.id,
                None,
                Some(device),
            );
            true
        }
    }
}

/// Generates a full sensor log. Inputs must satisfy the invariants that
/// [`load_layout`] and [`load_policies`] enforce.
pub fn simulate(
    layout: &WardLayout,
    policies: &[AgentPolicy],
    seed: u64,
    start_ts: i64,
) -> Vec<SensorEvent> {
    let threshold = HygieneParams::default().t_wash_min;
    let mut sim = Emitter {
        rng: SplitMix64::new(seed),
        events: Vec::new(),
        ts: start_ts,
        started: false,
    };

    for policy in policies {
        for _ in 0..policy.visits {
            let room =
                &layout.rooms[sim.rng.next_below(layout.rooms.len() as u64) as usize];
            let contacts = sim.rng.next_range_i64(
                policy.contacts_per_visit_range[0] as i64,
                policy.contacts_per_visit_range[1] as i64,
            );
            sim.emit(
                policy.dwell_ms_range,
                EventKind::RoomEnter,
                &policy.worker,
                &room.id,
                None,
                None,
            );
            // Mirror of the hygiene episode state: hands start
            // contaminated, stretches of same-bed contact are tracked so
            // compliance is drawn exactly once per opportunity.
            let mut contaminated = true;
            let mut run_bed: Option<usize> = None;
            let mut contact_since = false;

            for _ in 0..contacts {
                let bed = sim.rng.next_below(room.beds.len() as u64) as usize;
                if run_bed != Some(bed) {
                    // A hygiene opportunity: disinfect or violate. Only
                    // the hand status needs updating; the contact right
                    // below overwrites run_bed and contact_since anyway.
                    if sim.rng.chance(policy.p_comply)
                        && sim.disinfect(policy, room, threshold)
                    {
                        contaminated = false;
                    }
                }
                sim.emit(
                    policy.dwell_ms_range,
                    EventKind::BedProximityStart,
                    &policy.worker,
                    &room.id,
                    Some(&room.beds[bed]),
                    None,
                );
                sim.emit(
                    policy.dwell_ms_range,
                    EventKind::BedProximityEnd,
                    &policy.worker,
                    &room.id,
                    Some(&room.beds[bed]),
                    None,
                );
                run_bed = if contaminated { Some(bed) } else { None };
                contaminated = true;
                contact_since = true;
            }

            // Exit opportunity; the simulator never disinfects between
            // contacts on its own, so contact-since-disinfection equals
            // any-contact here.
            if contact_since && sim.rng.chance(policy.p_comply) {
                sim.disinfect(policy, room, threshold);
            }
            sim.emit(
                policy.dwell_ms_range,
                EventKind::RoomExit,
                &policy.worker,
                &room.id,
                None,
                None,
            );
        }
    }
    sim.events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{load_workflows, process_log};
    use crate::hygiene::{hand_hygiene_definition, reference_check};
    use crate::ledger::{log_to_string, validate_log};
    use crate::wfdl::parse_and_validate;

    #[test]
    fn rng_matches_the_published_sequence() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(rng.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(rng.next_u64(), 0x06c4_5d18_8009_454f);
        assert_eq!(rng.next_u64(), 0xf88b_b8a8_724c_81ec);

        let mut rng = SplitMix64::new(42);
        assert_eq!(rng.next_u64(), 0xbdd7_3226_2feb_6e95);
        assert_eq!(rng.next_u64(), 0x28ef_e333_b266_f103);
        assert_eq!(rng.next_u64(), 0x4752_6757_130f_9f52);
    }

    #[test]
    fn equal_states_produce_equal_streams() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_draws_stay_in_bounds() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..1000 {
            let f = rng.next_f64();
            assert!((0.0..1.0).contains(&f));
            let n = rng.next_below(7);
            assert!(n < 7);
            let r = rng.next_range_i64(-5, 5);
            assert!((-5..=5).contains(&r));
        }
        assert!(!rng.chance(0.0));
        assert!(rng.chance(1.0));
    }

    const FIG1: &str = r#"{"rooms":[{"id":"r1","beds":["b1","b2"],"sinks":["s1","s_bath"],"dispensers":["d1"]}]}"#;

    fn demo_policy(p_comply: f64) -> AgentPolicy {
        AgentPolicy {
            worker: "w1".into(),
            p_comply,
            p_wash_vs_rub: 0.4,
            wash_duration_range: [45_000, 60_000],
            visits: 20,
            contacts_per_visit_range: [1, 3],
            dwell_ms_range: [500, 30_000],
        }
    }

    #[test]
    fn layout_parses_and_validates() {
        let layout = load_layout(FIG1).unwrap();
        assert_eq!(layout.rooms.len(), 1);
        assert_eq!(layout.rooms[0].beds, vec!["b1", "b2"]);
        assert_eq!(layout.rooms[0].sinks.len(), 2);
        assert_eq!(layout.rooms[0].dispensers.len(), 1);
    }

    #[test]
    fn layout_errors() {
        assert!(matches!(load_layout("not json"), Err(SimError::MalformedJson { .. })));
        assert!(matches!(load_layout(r#"{"rooms":[]}"#), Err(SimError::EmptyLayout)));
        assert!(matches!(
            load_layout(r#"{"rooms":[{"id":"r1","beds":[]}]}"#),
            Err(SimError::RoomWithoutBeds { .. })
        ));
        let dup = r#"{"rooms":[{"id":"r1","beds":["b1"]},{"id":"r2","beds":["b1"]}]}"#;
        assert!(matches!(load_layout(dup), Err(SimError::DuplicateId { id }) if id == "b1"));
    }

    #[test]
    fn policy_errors() {
        let mut p = demo_policy(0.5);
        p.p_comply = 1.5;
        let text = serde_json::to_string(&vec![p]).unwrap();
        assert!(matches!(load_policies(&text), Err(SimError::BadPolicy { .. })));

        let mut p = demo_policy(0.5);
        p.dwell_ms_range = [0, 10];
        let text = serde_json::to_string(&vec![p]).unwrap();
        assert!(matches!(load_policies(&text), Err(SimError::BadPolicy { .. })));

        let mut p = demo_policy(0.5);
        p.contacts_per_visit_range = [3, 1];
        let text = serde_json::to_string(&vec![p]).unwrap();
        assert!(matches!(load_policies(&text), Err(SimError::BadPolicy { .. })));
    }

    #[test]
    fn same_seed_means_identical_bytes() {
        let layout = load_layout(FIG1).unwrap();
        let policies = vec![demo_policy(0.7)];
        let a = log_to_string(&simulate(&layout, &policies, 42, 0));
        let b = log_to_string(&simulate(&layout, &policies, 42, 0));
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn different_seeds_diverge() {
        let layout = load_layout(FIG1).unwrap();
        let policies = vec![demo_policy(0.7)];
        let a = log_to_string(&simulate(&layout, &policies, 1, 0));
        let b = log_to_string(&simulate(&layout, &policies, 2, 0));
        assert_ne!(a, b);
    }

    #[test]
    fn output_is_a_valid_log() {
        let layout = load_layout(FIG1).unwrap();
        let policies = vec![demo_policy(0.5), demo_policy(0.9)];
        for seed in [1, 2, 3] {
            let events = simulate(&layout, &policies, seed, 1_000);
            let report = validate_log(&events);
            assert!(report.is_ok(), "seed {seed}: {:?}", report.violations);
            assert_eq!(events[0].ts, 1_000);
            for pair in events.windows(2) {
                assert!(pair[1].ts > pair[0].ts, "timestamps must strictly increase");
                assert_eq!(pair[1].seq, pair[0].seq + 1);
            }
        }
    }

    #[test]
    fn full_compliance_produces_no_alerts() {
        let layout = load_layout(FIG1).unwrap();
        let policies = vec![demo_policy(1.0)];
        let def = parse_and_validate(hand_hygiene_definition()).unwrap();
        let cfg = load_workflows(&[def]).unwrap();
        for seed in [5, 6, 7] {
            let events = simulate(&layout, &policies, seed, 0);
            let out = process_log(&cfg, &events, false).unwrap();
            assert!(out.alerts.is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn zero_compliance_violates_every_visit() {
        let layout = load_layout(FIG1).unwrap();
        let mut policy = demo_policy(0.0);
        policy.visits = 10;
        policy.contacts_per_visit_range = [1, 1];
        let events = simulate(&layout, &[policy], 9, 0);
        let alerts = reference_check(&events, &Default::default());
        assert!(alerts.len() >= 10, "one violation per visit at least, got {}", alerts.len());
    }

    #[test]
    fn rooms_without_sinks_fall_back_to_the_dispenser() {
        let layout =
            load_layout(r#"{"rooms":[{"id":"r1","beds":["b1"],"dispensers":["d1"]}]}"#).unwrap();
        let mut policy = demo_policy(1.0);
        policy.p_wash_vs_rub = 1.0;
        let events = simulate(&layout, &[policy], 11, 0);
        assert!(events.iter().any(|e| e.kind == EventKind::DispenserUse));
        assert!(events.iter().all(|e| e.kind != EventKind::SinkStart));
    }

    #[test]
    fn bare_rooms_force_violations() {
        let layout = load_layout(r#"{"rooms":[{"id":"r1","beds":["b1"]}]}"#).unwrap();
        let mut policy = demo_policy(1.0);
        policy.visits = 5;
        policy.contacts_per_visit_range = [1, 1];
        let events = simulate(&layout, &[policy], 13, 0);
        let alerts = reference_check(&events, &Default::default());
        assert!(!alerts.is_empty());
    }
}
