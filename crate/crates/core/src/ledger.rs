//! Append-only sensor event log.
//!
//! Events are stored as JSON Lines: one object per line, UTF-8, LF line
//! endings. Replaying the same file always yields the same event sequence,
//! so every downstream consumer (engine, checkers, statistics) is
//! deterministic. Alerts produced by monitoring use the same format.
//!
//! The module also provides salted pseudonymization of worker and bed
//! identifiers for privacy-preserving exchange of logs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type WorkerId = String;
pub type RoomId = String;
pub type BedId = String;
pub type DeviceId = String;

/// Kinds of events emitted by the ward sensor network.
///
/// `DischargeMarker` never comes from a sensor: it is synthesized from ADT
/// discharge messages and injected into the monitored stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RoomEnter,
    RoomExit,
    BedProximityStart,
    BedProximityEnd,
    SinkStart,
    SinkEnd,
    DispenserUse,
    EquipmentTouch,
    CleaningComplete,
    DischargeMarker,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::RoomEnter,
        EventKind::RoomExit,
        EventKind::BedProximityStart,
        EventKind::BedProximityEnd,
        EventKind::SinkStart,
        EventKind::SinkEnd,
        EventKind::DispenserUse,
        EventKind::EquipmentTouch,
        EventKind::CleaningComplete,
        EventKind::DischargeMarker,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RoomEnter => "room_enter",
            EventKind::RoomExit => "room_exit",
            EventKind::BedProximityStart => "bed_proximity_start",
            EventKind::BedProximityEnd => "bed_proximity_end",
            EventKind::SinkStart => "sink_start",
            EventKind::SinkEnd => "sink_end",
            EventKind::DispenserUse => "dispenser_use",
            EventKind::EquipmentTouch => "equipment_touch",
            EventKind::CleaningComplete => "cleaning_complete",
            EventKind::DischargeMarker => "discharge_marker",
        }
    }

    pub fn from_name(name: &str) -> Option<EventKind> {
        EventKind::ALL.iter().copied().find(|k| k.as_str() == name)
    }

    /// True when events of this kind carry a `bed` field.
    pub fn has_bed(self) -> bool {
        matches!(self, EventKind::BedProximityStart | EventKind::BedProximityEnd)
    }

    /// True when events of this kind carry a `device` field.
    pub fn has_device(self) -> bool {
        matches!(
            self,
            EventKind::SinkStart
                | EventKind::SinkEnd
                | EventKind::DispenserUse
                | EventKind::EquipmentTouch
        )
    }

    /// Attribute names guaranteed to be present on events of this kind.
    pub fn attributes(self) -> &'static [&'static str] {
        if self.has_bed() {
            &["worker", "room", "bed"]
        } else if self.has_device() {
            &["worker", "room", "device"]
        } else {
            &["worker", "room"]
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sensor reading. `seq` is strictly increasing within a log and `ts`
/// is milliseconds of logical time, non-decreasing within a log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub seq: u64,
    pub ts: i64,
    pub kind: EventKind,
    pub worker: WorkerId,
    pub room: RoomId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bed: Option<BedId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceId>,
}

impl SensorEvent {
    /// Value of a named attribute, if present on this event.
    pub fn attribute(&self, name: &str) -> Option<&str> {
        match name {
            "worker" => Some(&self.worker),
            "room" => Some(&self.room),
            "bed" => self.bed.as_deref(),
            "device" => self.device.as_deref(),
            _ => None,
        }
    }
}

/// Alert severity, ordered from least to most urgent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Notice,
    Warning,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Notice => "notice",
            Severity::Warning => "warning",
            Severity::Critical => "critical",
        }
    }

    pub fn from_name(name: &str) -> Option<Severity> {
        match name {
            "notice" => Some(Severity::Notice),
            "warning" => Some(Severity::Warning),
            "critical" => Some(Severity::Critical),
            _ => None,
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What set an alert (or a trace entry) off: a logged event, named by its
/// `seq`, or a named workflow timer that expired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trigger {
    Event(u64),
    Timer(String),
}

impl Trigger {
    pub fn timer(name: &str) -> Trigger {
        Trigger::Timer(format!("timer:{name}"))
    }

    pub fn event_seq(&self) -> Option<u64> {
        match self {
            Trigger::Event(s) => Some(*s),
            Trigger::Timer(_) => None,
        }
    }
}

/// One emitted alert. `alert_seq` numbers alerts 1..n in emission order;
/// `scope` maps the owning workflow's scope fields to concrete ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub alert_seq: u64,
    pub ts: i64,
    pub workflow: String,
    pub rule: String,
    pub severity: Severity,
    pub scope: BTreeMap<String, String>,
    pub trigger_seq: Trigger,
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: unknown event kind {kind:?}")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: missing or invalid field {field:?}")]
    BadField { line: usize, field: &'static str },
    #[error("pseudonym collision: {a:?} and {b:?} both map to {pseudonym}")]
    PseudonymCollision { a: String, b: String, pseudonym: String },
}

fn field_str(
    obj: &serde_json::Map<String, serde_json::Value>,
    line: usize,
    field: &'static str,
) -> Result<String, LedgerError> {
    obj.get(field)
        .and_then(|v| v.as_str())
        .map(str::to_owned)
        .ok_or(LedgerError::BadField { line, field })
}

fn parse_event_line(text: &str, line: usize) -> Result<SensorEvent, LedgerError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LedgerError::MalformedLine {
            line,
            message: e.to_string(),
        })?;
    let obj = value.as_object().ok_or(LedgerError::MalformedLine {
        line,
        message: "expected a JSON object".into(),
    })?;
    let seq = obj
        .get("seq")
        .and_then(|v| v.as_u64())
        .ok_or(LedgerError::BadField { line, field: "seq" })?;
    let ts = obj
        .get("ts")
        .and_then(|v| v.as_i64())
        .ok_or(LedgerError::BadField { line, field: "ts" })?;
    let kind_name = field_str(obj, line, "kind")?;
    let kind = EventKind::from_name(&kind_name).ok_or(LedgerError::UnknownKind {
        line,
        kind: kind_name,
    })?;
    let worker = field_str(obj, line, "worker")?;
    let room = field_str(obj, line, "room")?;
    let bed = if kind.has_bed() {
        Some(field_str(obj, line, "bed")?)
    } else {
        obj.get("bed").and_then(|v| v.as_str()).map(str::to_owned)
    };
    let device = if kind.has_device() {
        Some(field_str(obj, line, "device")?)
    } else {
        obj.get("device").and_then(|v| v.as_str()).map(str::to_owned)
    };
    Ok(SensorEvent {
        seq,
        ts,
        kind,
        worker,
        room,
        bed,
        device,
    })
}

/// Reads a JSON-Lines event log. Blank lines are skipped; the first
/// malformed line aborts with its 1-based line number.
pub fn read_log<R: BufRead>(reader: R) -> Result<Vec<SensorEvent>, LedgerError> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(parse_event_line(&line, idx + 1)?);
    }
    Ok(events)
}

pub fn read_log_path(path: &Path) -> Result<Vec<SensorEvent>, LedgerError> {
    read_log(BufReader::new(File::open(path)?))
}

/// Writes events as JSON Lines (LF terminated). `read_log` of the output
/// reproduces the input exactly.
pub fn write_log<W: Write>(events: &[SensorEvent], mut writer: W) -> Result<(), LedgerError> {
    for event in events {
        serde_json::to_writer(&mut writer, event)
            .map_err(|e| LedgerError::MalformedLine { line: 0, message: e.to_string() })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn log_to_string(events: &[SensorEvent]) -> String {
    let mut buf = Vec::new();
    write_log(events, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serialized JSON is UTF-8")
}

/// Reads an alert log written by `write_alerts`.
pub fn read_alerts<R: BufRead>(reader: R) -> Result<Vec<Alert>, LedgerError> {
    let mut alerts = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        alerts.push(
            serde_json::from_str(&line).map_err(|e| LedgerError::MalformedLine {
                line: idx + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(alerts)
}

pub fn write_alerts<W: Write>(alerts: &[Alert], mut writer: W) -> Result<(), LedgerError> {
    for alert in alerts {
        serde_json::to_writer(&mut writer, alert)
            .map_err(|e| LedgerError::MalformedLine { line: 0, message: e.to_string() })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn alerts_to_string(alerts: &[Alert]) -> String {
    let mut buf = Vec::new();
    write_alerts(alerts, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serialized JSON is UTF-8")
}

/// One structural problem found by [`validate_log`], tied to the `seq` of
/// the offending event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogViolation {
    pub seq: u64,
    pub description: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<LogViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the structural invariants of an in-memory event list:
/// strictly increasing `seq`, non-decreasing `ts`, required `bed`/`device`
/// fields, and proper start/end pairing per (worker, room, bed-or-device).
/// Start events left open at the end of the log are tolerated (the log may
/// be a truncated capture).
pub fn validate_log(events: &[SensorEvent]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |seq: u64, description: String| {
        report.violations.push(LogViolation { seq, description });
    };
    let mut last_seq: Option<u64> = None;
    let mut last_ts: Option<i64> = None;
    // key -> seq of the open start event
    let mut open_beds: HashMap<(String, String, String), u64> = HashMap::new();
    let mut open_sinks: HashMap<(String, String, String), u64> = HashMap::new();

    for e in events {
        if let Some(prev) = last_seq {
            if e.seq <= prev {
                push(e.seq, format!("seq {} does not increase past {}", e.seq, prev));
            }
        }
        if let Some(prev) = last_ts {
            if e.ts < prev {
                push(e.seq, format!("ts {} decreases below {}", e.ts, prev));
            }
        }
        last_seq = Some(e.seq);
        last_ts = Some(e.ts);

        if e.kind.has_bed() && e.bed.is_none() {
            push(e.seq, format!("{} event without bed", e.kind));
            continue;
        }
        if e.kind.has_device() && e.device.is_none() {
            push(e.seq, format!("{} event without device", e.kind));
            continue;
        }
        match e.kind {
            EventKind::BedProximityStart => {
                let key = (e.worker.clone(), e.room.clone(), e.bed.clone().unwrap());
                if open_beds.insert(key, e.seq).is_some() {
                    push(e.seq, "bed_proximity_start while an earlier start is open".into());
                }
            }
            EventKind::BedProximityEnd => {
                let key = (e.worker.clone(), e.room.clone(), e.bed.clone().unwrap());
                if open_beds.remove(&key).is_none() {
                    push(e.seq, "bed_proximity_end without matching start".into());
                }
            }
            EventKind::SinkStart => {
                let key = (e.worker.clone(), e.room.clone(), e.device.clone().unwrap());
                if open_sinks.insert(key, e.seq).is_some() {
                    push(e.seq, "sink_start while an earlier start is open".into());
                }
            }
            EventKind::SinkEnd => {
                let key = (e.worker.clone(), e.room.clone(), e.device.clone().unwrap());
                if open_sinks.remove(&key).is_none() {
                    push(e.seq, "sink_end without matching start".into());
                }
            }
            _ => {}
        }
    }
    report
}

/// 64-bit FNV-1a over `data`.
pub fn fnv1a64(data: &[u8]) -> u64 {
    const OFFSET: u64 = 14695981039346656037;
    const PRIME: u64 = 1099511628211;
    let mut hash = OFFSET;
    for &b in data {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// Pseudonym for `id` under `salt`: "H" followed by the first 12 lowercase
/// hex digits of FNV-1a64(salt ‖ ":" ‖ id).
pub fn pseudonym(salt: &[u8], id: &str) -> String {
    let mut data = Vec::with_capacity(salt.len() + 1 + id.len());
    data.extend_from_slice(salt);
    data.push(b':');
    data.extend_from_slice(id.as_bytes());
    let hash = fnv1a64(&data);
    format!("H{}", &format!("{hash:016x}")[..12])
}

/// Replaces worker and bed identifiers with salted pseudonyms. Rooms,
/// devices, kinds, timestamps and sequence numbers are unchanged, so the
/// relational structure of the log survives. Two distinct source ids
/// mapping to the same pseudonym abort with an error.
pub fn pseudonymize(
    events: &[SensorEvent],
    salt: &[u8],
) -> Result<Vec<SensorEvent>, LedgerError> {
    let mut forward: BTreeMap<String, String> = BTreeMap::new();
    let mut reverse: HashMap<String, String> = HashMap::new();
    let mut map = |id: &str| -> Result<String, LedgerError> {
        if let Some(p) = forward.get(id) {
            return Ok(p.clone());
        }
        let p = pseudonym(salt, id);
        if let Some(other) = reverse.get(&p) {
            return Err(LedgerError::PseudonymCollision {
                a: other.clone(),
                b: id.to_owned(),
                pseudonym: p,
            });
        }
        forward.insert(id.to_owned(), p.clone());
        reverse.insert(p.clone(), id.to_owned());
        Ok(p)
    };

    let mut out = Vec::with_capacity(events.len());
    for e in events {
        let mut e = e.clone();
        e.worker = map(&e.worker)?;
        if let Some(bed) = &e.bed {
            e.bed = Some(map(bed)?);
        }
        out.push(e);
    }
    Ok(out)
}
