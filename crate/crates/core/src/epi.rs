//! Retrospective analysis: worker-patient contact networks, ranking of
//! outbreak origin candidates over time-respecting paths, and per-room
//! risk tables.
//!
//! A *time-respecting path* is a sequence of contacts with strictly
//! increasing start timestamps, consecutive contacts sharing a
//! participant, and each consecutive gap at most `window` milliseconds.
//! The first contact of a path only has to touch the starting node; the
//! window constrains the gaps between hops, not the first hop itself.
//! All path logic keys on contact start timestamps.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::his::Registry;
use crate::ledger::{Alert, EventKind, SensorEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Worker,
    Patient,
}

/// One worker-patient contact derived from a bed-proximity pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contact {
    pub worker: String,
    pub patient: String,
    pub room: String,
    pub start_ts: i64,
    pub end_ts: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContactGraph {
    /// Every worker seen in the sensor stream (synthetic feed events
    /// excluded) and every patient with a registry stay, so nodes
    /// without a single contact still rank as candidates.
    pub nodes: BTreeMap<String, NodeKind>,
    /// Sorted by (start_ts, end_ts, worker, patient).
    pub contacts: Vec<Contact>,
    /// Completed pairs whose bed had no occupant at the start.
    pub dropped_unoccupied: usize,
    /// Starts without an end, ends without a start, and zero-length
    /// pairs; none of these can form a contact edge.
    pub dropped_unpaired: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EpiError {
    #[error("infected set is empty")]
    EmptyInfectedSet,
    #[error("infected id {id:?} is not a node in the contact graph")]
    UnknownInfectedNode { id: String },
    #[error("candidate {id:?} is not a node in the contact graph")]
    UnknownCandidate { id: String },
}

/// Pairs bed-proximity starts and ends per (worker, room, bed) and
/// resolves each pair's patient from the registry at the start instant.
pub fn build_contact_network(events: &[SensorEvent], registry: &Registry) -> ContactGraph {
    let mut graph = ContactGraph::default();
    let mut open: HashMap<(&str, &str, &str), i64> = HashMap::new();

    for event in events {
        if event.kind == EventKind::DischargeMarker {
            continue;
        }
        graph
            .nodes
            .entry(event.worker.clone())
            .or_insert(NodeKind::Worker);
        let Some(bed) = event.bed.as_deref() else { continue };
        let key = (event.worker.as_str(), event.room.as_str(), bed);
        match event.kind {
            EventKind::BedProximityStart => {
                if open.insert(key, event.ts).is_some() {
                    graph.dropped_unpaired += 1;
                }
            }
            EventKind::BedProximityEnd => {
                let Some(start_ts) = open.remove(&key) else {
                    graph.dropped_unpaired += 1;
                    continue;
                };
                if event.ts <= start_ts {
                    graph.dropped_unpaired += 1;
                } else if let Some(patient) = registry.occupant(event.room.as_str(), bed, start_ts)
                {
                    graph.contacts.push(Contact {
                        worker: event.worker.clone(),
                        patient: patient.to_string(),
                        room: event.room.clone(),
                        start_ts,
                        end_ts: event.ts,
                    });
                } else {
                    graph.dropped_unoccupied += 1;
                }
            }
            _ => {}
        }
    }
    graph.dropped_unpaired += open.len();

    for (_, _, stay) in registry.intervals() {
        graph
            .nodes
            .entry(stay.patient.clone())
            .or_insert(NodeKind::Patient);
    }
    graph
        .contacts
        .sort_by(|a, b| {
            (a.start_ts, a.end_ts, &a.worker, &a.patient)
                .cmp(&(b.start_ts, b.end_ts, &b.worker, &b.patient))
        });
    graph
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub id: String,
    /// Fraction of the infected set reachable from this node.
    pub explained: f64,
    /// Earliest contact this node participates in, if any.
    pub first_contact_ts: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceResult {
    /// Sorted by explained desc, first contact asc (nodes without
    /// contacts last), id asc.
    pub ranked: Vec<Candidate>,
}

/// Contact indices incident to each node.
fn incidence(graph: &ContactGraph) -> HashMap<&str, Vec<usize>> {
    let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
    for (idx, c) in graph.contacts.iter().enumerate() {
        map.entry(&c.worker).or_default().push(idx);
        map.entry(&c.patient).or_default().push(idx);
    }
    map
}

/// Contacts reachable from `seeds` along time-respecting paths, as a
/// visited mask over `graph.contacts`.
fn reachable_contacts(graph: &ContactGraph, seeds: &[usize], window: i64) -> Vec<bool> {
    let contacts = &graph.contacts;
    let mut visited = vec![false; contacts.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &idx in seeds {
        if !visited[idx] {
            visited[idx] = true;
            queue.push_back(idx);
        }
    }
    while let Some(idx) = queue.pop_front() {
        let cur = &contacts[idx];
        let lo = contacts.partition_point(|c| c.start_ts <= cur.start_ts);
        let hi = contacts.partition_point(|c| c.start_ts - cur.start_ts <= window);
        for next in lo..hi.max(lo) {
            if visited[next] {
                continue;
            }
            let cand = &contacts[next];
            if cand.worker == cur.worker
                || cand.worker == cur.patient
                || cand.patient == cur.worker
                || cand.patient == cur.patient
            {
                visited[next] = true;
                queue.push_back(next);
            }
        }
    }
    visited
}

/// Ranks every node of the graph by how much of the infected set it can
/// reach along time-respecting paths. A node trivially reaches itself,
/// so an infected candidate always explains at least itself.
pub fn trace_patient_zero(
    graph: &ContactGraph,
    infected: &BTreeSet<String>,
    window: i64,
) -> Result<TraceResult, EpiError> {
    if infected.is_empty() {
        return Err(EpiError::EmptyInfectedSet);
    }
    for id in infected {
        if !graph.nodes.contains_key(id) {
            return Err(EpiError::UnknownInfectedNode { id: id.clone() });
        }
    }
    let incident = incidence(graph);
    let no_contacts: Vec<usize> = Vec::new();

    let mut ranked: Vec<(usize, Candidate)> = Vec::with_capacity(graph.nodes.len());
    for id in graph.nodes.keys() {
        let seeds = incident.get(id.as_str()).unwrap_or(&no_contacts);
        let visited = reachable_contacts(graph, seeds, window);
        let mut explained = usize::from(infected.contains(id));
        for target in infected {
            if target == id {
                continue;
            }
            let hit = visited.iter().enumerate().any(|(idx, &v)| {
                v && (graph.contacts[idx].worker == *target
                    || graph.contacts[idx].patient == *target)
            });
            explained += usize::from(hit);
        }
        let first_contact_ts = seeds
            .iter()
            .map(|&idx| graph.contacts[idx].start_ts)
            .min();
        ranked.push((
            explained,
            Candidate {
                id: id.clone(),
                explained: explained as f64 / infected.len() as f64,
                first_contact_ts,
            },
        ));
    }
    // Rank on the raw counts so float division cannot perturb order.
    ranked.sort_by(|(ca, a), (cb, b)| {
        cb.cmp(ca)
            .then_with(|| match (a.first_contact_ts, b.first_contact_ts) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(TraceResult {
        ranked: ranked.into_iter().map(|(_, c)| c).collect(),
    })
}

/// One witness path from a source node to an explained infected node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    pub target: String,
    /// Contacts along the path in travel order; empty when the target is
    /// the source itself.
    pub hops: Vec<Contact>,
}

/// For each infected node the source explains, returns one
/// time-respecting witness path: fewest hops, ties broken by earliest
/// first-contact start, then by contact order in the graph. Sorted by
/// target id.
pub fn trace_routes(
    graph: &ContactGraph,
    source: &str,
    infected: &BTreeSet<String>,
    window: i64,
) -> Result<Vec<Route>, EpiError> {
    if infected.is_empty() {
        return Err(EpiError::EmptyInfectedSet);
    }
    if !graph.nodes.contains_key(source) {
        return Err(EpiError::UnknownCandidate { id: source.to_string() });
    }
    for id in infected {
        if !graph.nodes.contains_key(id) {
            return Err(EpiError::UnknownInfectedNode { id: id.clone() });
        }
    }
    let contacts = &graph.contacts;
    let incident = incidence(graph);
    let no_contacts: Vec<usize> = Vec::new();

    // Lexicographic shortest path per contact: (hops, first contact
    // start, contact index), expanded in best-first order.
    type Key = (usize, i64, usize);
    let mut best: HashMap<usize, (Key, Option<usize>)> = HashMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<(Key, Option<usize>)>> = BinaryHeap::new();
    for &idx in incident.get(source).unwrap_or(&no_contacts) {
        heap.push(std::cmp::Reverse(((1, contacts[idx].start_ts, idx), None)));
    }
    while let Some(std::cmp::Reverse((key, prev))) = heap.pop() {
        let idx = key.2;
        if best.contains_key(&idx) {
            continue;
        }
        best.insert(idx, (key, prev));
        let cur = &contacts[idx];
        let lo = contacts.partition_point(|c| c.start_ts <= cur.start_ts);
        let hi = contacts.partition_point(|c| c.start_ts - cur.start_ts <= window);
        for next in lo..hi.max(lo) {
            if best.contains_key(&next) {
                continue;
            }
            let cand = &contacts[next];
            if cand.worker == cur.worker
                || cand.worker == cur.patient
                || cand.patient == cur.worker
                || cand.patient == cur.patient
            {
                heap.push(std::cmp::Reverse(((key.0 + 1, key.1, next), Some(idx))));
            }
        }
    }

    let mut routes = Vec::new();
    for target in infected {
        if target == source {
            routes.push(Route { target: target.clone(), hops: Vec::new() });
            continue;
        }
        let arrival = best
            .iter()
            .filter(|(&idx, _)| {
                contacts[idx].worker == *target || contacts[idx].patient == *target
            })
            .map(|(&idx, &(key, _))| (key, idx))
            .min();
        let Some((_, mut idx)) = arrival else { continue };
        let mut hops = vec![contacts[idx].clone()];
        while let Some((_, Some(prev))) = best.get(&idx) {
            idx = *prev;
            hops.push(contacts[idx].clone());
        }
        hops.reverse();
        routes.push(Route { target: target.clone(), hops });
    }
    Ok(routes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoomRisk {
    pub room: String,
    /// Completed bed-proximity pairs in the room, occupancy-blind.
    pub contacts: usize,
    /// Alerts whose scope names the room.
    pub violations: usize,
    /// violations / contacts, 0 when the room saw no contacts.
    pub violation_density: f64,
}

/// Per-room contact and violation table, sorted by violation density
/// descending, then room id.
pub fn risk_map(events: &[SensorEvent], alerts: &[Alert]) -> Vec<RoomRisk> {
    let mut contacts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut open: HashMap<(&str, &str, &str), i64> = HashMap::new();
    for event in events {
        contacts.entry(event.room.as_str()).or_default();
        let Some(bed) = event.bed.as_deref() else { continue };
        let key = (event.worker.as_str(), event.room.as_str(), bed);
        match event.kind {
            EventKind::BedProximityStart => {
                open.insert(key, event.ts);
            }
            EventKind::BedProximityEnd => {
                if open.remove(&key).is_some() {
                    *contacts.entry(event.room.as_str()).or_default() += 1;
                }
            }
            _ => {}
        }
    }

    let mut violations: BTreeMap<&str, usize> = BTreeMap::new();
    for alert in alerts {
        if let Some(room) = alert.scope.get("room") {
            *violations.entry(room.as_str()).or_default() += 1;
            contacts.entry(room.as_str()).or_default();
        }
    }

    let mut rows: Vec<RoomRisk> = contacts
        .iter()
        .map(|(&room, &contacts)| {
            let violations = violations.get(room).copied().unwrap_or(0);
            RoomRisk {
                room: room.to_string(),
                contacts,
                violations,
                violation_density: if contacts == 0 {
                    0.0
                } else {
                    violations as f64 / contacts as f64
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.violation_density
            .total_cmp(&a.violation_density)
            .then_with(|| a.room.cmp(&b.room))
    });
    rows
}
