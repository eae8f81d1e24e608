//! Hospital information system feed: a pipe-delimited admit / transfer /
//! discharge format, a bed-occupancy registry built from it, and the two
//! bridges into the monitoring pipeline (synthetic discharge markers for
//! the cleaning workflow, severity escalation for contacts with
//! elevated-risk patients).
//!
//! The wire format is deliberately narrow and isolated behind
//! [`parse_adt_line`] so that a real HL7 adapter could replace it without
//! touching the registry.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Alert, EventKind, SensorEvent, Severity, Trigger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdtKind {
    Admit,
    Transfer,
    Discharge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    #[default]
    Standard,
    Elevated,
}

/// One admission / transfer / discharge message. Transfers carry the
/// destination room and bed; discharges carry the room and bed vacated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdtEvent {
    pub kind: AdtKind,
    pub patient: String,
    pub room: String,
    pub bed: String,
    pub ts: i64,
    pub risk: RiskLevel,
}

#[derive(Debug, Error)]
pub enum AdtError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("adt at ts {ts}: bed {room}/{bed} is already occupied by {occupant:?}")]
    BedOccupied {
        ts: i64,
        room: String,
        bed: String,
        occupant: String,
    },
    #[error("adt at ts {ts}: patient {patient:?} is already admitted")]
    AlreadyAdmitted { ts: i64, patient: String },
    #[error("adt at ts {ts}: patient {patient:?} is not currently admitted")]
    NotAdmitted { ts: i64, patient: String },
    #[error("adt at ts {ts}: patient {patient:?} is not in bed {room}/{bed}")]
    NotInStatedBed {
        ts: i64,
        patient: String,
        room: String,
        bed: String,
    },
    #[error("adt messages must be time-ordered: ts {ts} after {last}")]
    OutOfOrder { ts: i64, last: i64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses one `ADT|<kind>|<patient>|<room>|<bed>|<ts>[|risk=elevated]`
/// line. Use [`read_adt`] for whole files; it skips comments and blanks.
pub fn parse_adt_line(text: &str, line: usize) -> Result<AdtEvent, AdtError> {
    let err = |message: String| AdtError::Parse { line, message };
    let fields: Vec<&str> = text.split('|').collect();
    if fields.len() != 6 && fields.len() != 7 {
        return Err(err(format!("expected 6 or 7 fields, found {}", fields.len())));
    }
    if fields[0] != "ADT" {
        return Err(err(format!("expected leading \"ADT\", found {:?}", fields[0])));
    }
    let kind = match fields[1] {
        "A01" => AdtKind::Admit,
        "A02" => AdtKind::Transfer,
        "A03" => AdtKind::Discharge,
        other => return Err(err(format!("unknown message kind {other:?}"))),
    };
    for (name, value) in [("patient", fields[2]), ("room", fields[3]), ("bed", fields[4])] {
        if value.is_empty() {
            return Err(err(format!("empty {name} field")));
        }
    }
    let ts: i64 = fields[5]
        .parse()
        .map_err(|_| err(format!("timestamp {:?} is not an integer", fields[5])))?;
    let risk = match fields.get(6) {
        None => RiskLevel::Standard,
        Some(&"risk=elevated") => RiskLevel::Elevated,
        Some(other) => return Err(err(format!("unknown trailing field {other:?}"))),
    };
    Ok(AdtEvent {
        kind,
        patient: fields[2].to_string(),
        room: fields[3].to_string(),
        bed: fields[4].to_string(),
        ts,
        risk,
    })
}

/// Reads an ADT file: one message per line, `#` comments and blank lines
/// ignored.
pub fn read_adt<R: BufRead>(reader: R) -> Result<Vec<AdtEvent>, AdtError> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        events.push(parse_adt_line(trimmed, idx + 1)?);
    }
    Ok(events)
}

pub fn read_adt_path(path: &Path) -> Result<Vec<AdtEvent>, AdtError> {
    read_adt(BufReader::new(File::open(path)?))
}

/// One stay in one bed; `end_ts` is exclusive, `None` while open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyInterval {
    pub patient: String,
    pub start_ts: i64,
    pub end_ts: Option<i64>,
}

impl OccupancyInterval {
    fn contains(&self, ts: i64) -> bool {
        ts >= self.start_ts && self.end_ts.map_or(true, |end| ts < end)
    }
}

/// Bed occupancy over time plus patient risk, immutable once built.
/// Serializing and deserializing reproduces an equal registry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    /// room → bed → stays ordered by start, pairwise disjoint.
    beds: BTreeMap<String, BTreeMap<String, Vec<OccupancyInterval>>>,
    /// patient → first timestamp flagged elevated; elevation is sticky.
    elevated_since: BTreeMap<String, i64>,
}

impl Registry {
    /// The patient in `room`/`bed` at `ts`, if any. Stays are half-open:
    /// the admission instant counts, the vacating instant does not.
    pub fn occupant(&self, room: &str, bed: &str, ts: i64) -> Option<&str> {
        let stays = self.beds.get(room)?.get(bed)?;
        let idx = stays.partition_point(|s| s.start_ts <= ts);
        let stay = &stays[..idx].last()?;
        stay.contains(ts).then_some(stay.patient.as_str())
    }

    /// A patient's risk level at `ts`: elevated from the first message
    /// that flagged them onward, standard before and otherwise.
    pub fn risk_at(&self, patient: &str, ts: i64) -> RiskLevel {
        match self.elevated_since.get(patient) {
            Some(&since) if ts >= since => RiskLevel::Elevated,
            _ => RiskLevel::Standard,
        }
    }

    /// All stays flattened in (room, bed, start) order.
    pub fn intervals(&self) -> Vec<(&str, &str, &OccupancyInterval)> {
        let mut out = Vec::new();
        for (room, beds) in &self.beds {
            for (bed, stays) in beds {
                for stay in stays {
                    out.push((room.as_str(), bed.as_str(), stay));
                }
            }
        }
        out
    }

    fn open_stay(&mut self, room: &str, bed: &str) -> &mut Vec<OccupancyInterval> {
        self.beds
            .entry(room.to_string())
            .or_default()
            .entry(bed.to_string())
            .or_default()
    }
}

/// Replays time-ordered ADT messages into a registry.
///
/// Admissions require a free bed and a patient without an open stay (a
/// patient cannot occupy two beds at once, which would also make the
/// transfer source ambiguous). Transfers close the old stay and open the
/// destination at the same timestamp; discharges must name the bed the
/// patient actually occupies.
pub fn build_registry(events: &[AdtEvent]) -> Result<Registry, AdtError> {
    let mut registry = Registry::default();
    // patient → (room, bed) of the currently open stay.
    let mut open: HashMap<String, (String, String)> = HashMap::new();
    let mut last_ts = i64::MIN;

    for event in events {
        if event.ts < last_ts {
            return Err(AdtError::OutOfOrder { ts: event.ts, last: last_ts });
        }
        last_ts = event.ts;
        if event.risk == RiskLevel::Elevated {
            registry
                .elevated_since
                .entry(event.patient.clone())
                .or_insert(event.ts);
        }

        let occupied = |registry: &Registry, room: &str, bed: &str| {
            registry
                .beds
                .get(room)
                .and_then(|b| b.get(bed))
                .and_then(|stays| stays.last())
                .filter(|stay| stay.end_ts.is_none())
                .map(|stay| stay.patient.clone())
        };

        match event.kind {
            AdtKind::Admit => {
                if open.contains_key(&event.patient) {
                    return Err(AdtError::AlreadyAdmitted {
                        ts: event.ts,
                        patient: event.patient.clone(),
                    });
                }
                if let Some(occupant) = occupied(&registry, &event.room, &event.bed) {
                    return Err(AdtError::BedOccupied {
                        ts: event.ts,
                        room: event.room.clone(),
                        bed: event.bed.clone(),
                        occupant,
                    });
                }
                registry.open_stay(&event.room, &event.bed).push(OccupancyInterval {
                    patient: event.patient.clone(),
                    start_ts: event.ts,
                    end_ts: None,
                });
                open.insert(event.patient.clone(), (event.room.clone(), event.bed.clone()));
            }
            AdtKind::Transfer => {
                let Some((old_room, old_bed)) = open.get(&event.patient).cloned() else {
                    return Err(AdtError::NotAdmitted {
                        ts: event.ts,
                        patient: event.patient.clone(),
                    });
                };
                // Close the source first so a same-bed transfer is legal.
                registry
                    .open_stay(&old_room, &old_bed)
                    .last_mut()
                    .expect("open stay tracked in the index")
                    .end_ts = Some(event.ts);
                if let Some(occupant) = occupied(&registry, &event.room, &event.bed) {
                    return Err(AdtError::BedOccupied {
                        ts: event.ts,
                        room: event.room.clone(),
                        bed: event.bed.clone(),
                        occupant,
                    });
                }
                registry.open_stay(&event.room, &event.bed).push(OccupancyInterval {
                    patient: event.patient.clone(),
                    start_ts: event.ts,
                    end_ts: None,
                });
                open.insert(event.patient.clone(), (event.room.clone(), event.bed.clone()));
            }
            AdtKind::Discharge => {
                let current = open.get(&event.patient).cloned();
                if current.is_none() {
                    return Err(AdtError::NotAdmitted {
                        ts: event.ts,
                        patient: event.patient.clone(),
                    });
                }
                if current != Some((event.room.clone(), event.bed.clone())) {
                    return Err(AdtError::NotInStatedBed {
                        ts: event.ts,
                        patient: event.patient.clone(),
                        room: event.room.clone(),
                        bed: event.bed.clone(),
                    });
                }
                registry
                    .open_stay(&event.room, &event.bed)
                    .last_mut()
                    .expect("open stay tracked in the index")
                    .end_ts = Some(event.ts);
                open.remove(&event.patient);
            }
        }
    }
    Ok(registry)
}

/// One synthetic sensor event per discharge, worker `"his"`, so the
/// terminal-cleaning workflow can start its deadline. Sequence numbers
/// are provisional; [`merge_markers`] assigns final ones.
pub fn discharge_markers(events: &[AdtEvent]) -> Vec<SensorEvent> {
    events
        .iter()
        .filter(|e| e.kind == AdtKind::Discharge)
        .enumerate()
        .map(|(idx, e)| SensorEvent {
            seq: idx as u64 + 1,
            ts: e.ts,
            kind: EventKind::DischargeMarker,
            worker: "his".to_string(),
            room: e.room.clone(),
            bed: None,
            device: None,
        })
        .collect()
}

/// Merges markers into a sensor log by timestamp. On a timestamp tie the
/// sensor events come first; the result is renumbered 1..=N.
pub fn merge_markers(events: &[SensorEvent], markers: &[SensorEvent]) -> Vec<SensorEvent> {
    let mut merged = Vec::with_capacity(events.len() + markers.len());
    let mut markers = markers.iter().peekable();
    for event in events {
        while markers.peek().is_some_and(|m| m.ts < event.ts) {
            merged.push(markers.next().unwrap().clone());
        }
        merged.push(event.clone());
    }
    merged.extend(markers.cloned());
    for (idx, event) in merged.iter_mut().enumerate() {
        event.seq = idx as u64 + 1;
    }
    merged
}

/// Raises warning-level bed-contact alerts to critical when the bed's
/// occupant carries elevated risk at the moment of contact.
pub fn escalate_alerts(alerts: &mut [Alert], events: &[SensorEvent], registry: &Registry) {
    let by_seq: HashMap<u64, &SensorEvent> = events.iter().map(|e| (e.seq, e)).collect();
    for alert in alerts {
        if alert.severity != Severity::Warning {
            continue;
        }
        let Trigger::Event(seq) = &alert.trigger_seq else {
            continue;
        };
        let Some(event) = by_seq.get(seq) else { continue };
        if event.kind != EventKind::BedProximityStart {
            continue;
        }
        let Some(bed) = event.bed.as_deref() else { continue };
        if let Some(patient) = registry.occupant(&event.room, bed, event.ts) {
            if registry.risk_at(patient, event.ts) == RiskLevel::Elevated {
                alert.severity = Severity::Critical;
            }
        }
    }
}
