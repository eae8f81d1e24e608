//! Workflow execution over ordered sensor event logs.
//!
//! The engine compiles validated workflow definitions into an indexed
//! form, then replays a log one event at a time. Each workflow keys its
//! instances by the scope attribute values, so one physical entity (a
//! worker in a room, a room awaiting cleaning) maps to at most one live
//! instance per workflow.
//!
//! Event processing is strictly deterministic. For each event:
//!
//! 1. every armed timer whose deadline lies before the event timestamp
//!    fires, ordered by (deadline, instance age, timer name); an event
//!    carrying exactly a timer's deadline is processed before that timer;
//! 2. workflows whose create pattern matches the event spawn an instance
//!    when none is live for the scope key;
//! 3. each live instance whose scope key matches the event attributes
//!    takes the first declared transition out of its current state whose
//!    pattern and guard accept the event. Actions run left to right, and
//!    reaching a final state retires the instance.
//!
//! A freshly created instance sees its creating event in step 3. After
//! the last event, timers due at or before the final timestamp fire.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::ledger::{Alert, EventKind, SensorEvent, Severity, Trigger};
use crate::wfdl::ast::{
    ActionDecl, CmpOp, GuardExpr, TransitionTrigger, VarType, WorkflowAst,
};
use crate::wfdl::ValidatedWorkflow;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("duplicate workflow name {name:?}")]
    DuplicateWorkflowName { name: String },
    #[error("event seq {seq} does not increase over previous seq {last}")]
    NonMonotonicSeq { seq: u64, last: u64 },
    #[error("event seq {seq} has ts {ts} before previous ts {last}")]
    NonMonotonicTs { seq: u64, ts: i64, last: i64 },
}

// ---------------------------------------------------------------------------
// Compiled form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttrId {
    Worker,
    Room,
    Bed,
    Device,
}

impl AttrId {
    fn from_name(name: &str) -> AttrId {
        match name {
            "worker" => AttrId::Worker,
            "room" => AttrId::Room,
            "bed" => AttrId::Bed,
            "device" => AttrId::Device,
            other => unreachable!("validation admits only attribute names, got {other:?}"),
        }
    }

    fn of<'a>(self, event: &'a SensorEvent) -> Option<&'a str> {
        match self {
            AttrId::Worker => Some(&event.worker),
            AttrId::Room => Some(&event.room),
            AttrId::Bed => event.bed.as_deref(),
            AttrId::Device => event.device.as_deref(),
        }
    }
}

/// Variable storage slot, per-type index into the instance arrays.
#[derive(Debug, Clone, Copy)]
enum VarSlot {
    Bool(usize),
    Timestamp(usize),
    Id(usize),
}

#[derive(Debug, Clone)]
enum GExpr {
    Bool(bool),
    Int(i64),
    Attr(AttrId),
    BoolVar(usize),
    IdVar(usize),
    /// Milliseconds since the timestamp variable was marked; an unset
    /// variable reads as `i64::MAX`, so "at least N ms ago" holds.
    Elapsed(usize),
    Not(Box<GExpr>),
    And(Box<GExpr>, Box<GExpr>),
    Or(Box<GExpr>, Box<GExpr>),
    Cmp {
        op: CmpOp,
        lhs: Box<GExpr>,
        rhs: Box<GExpr>,
    },
}

#[derive(Debug, Clone)]
enum CAction {
    Alert { rule: String, severity: Severity },
    SetBool { slot: usize, value: bool },
    ClearTimestamp(usize),
    ClearId(usize),
    Mark(usize),
    Bind { slot: usize, attr: AttrId },
    Start(usize),
    Cancel(usize),
}

#[derive(Debug)]
struct CompiledTransition {
    guard: Option<GExpr>,
    to: usize,
    actions: Vec<CAction>,
    from_name: usize,
    to_name: usize,
}

#[derive(Debug)]
struct CompiledWorkflow {
    name: String,
    scope_fields: Vec<String>,
    scope_attrs: Vec<AttrId>,
    create_kind: EventKind,
    state_names: Vec<String>,
    initial: usize,
    is_final: Vec<bool>,
    bool_count: usize,
    ts_count: usize,
    id_count: usize,
    timer_names: Vec<String>,
    timer_durations: Vec<i64>,
    /// Rank of each timer name in lexicographic order, used to break
    /// expiry ties between timers of the same instance.
    timer_rank: Vec<usize>,
    transitions: Vec<CompiledTransition>,
    /// Transition indices by (source state, event kind), document order.
    by_event: HashMap<(usize, EventKind), Vec<usize>>,
    /// Transition indices by (source state, timer), document order.
    by_timer: HashMap<(usize, usize), Vec<usize>>,
}

/// A set of compiled workflows ready to run. Build with [`load_workflows`].
#[derive(Debug)]
pub struct EngineConfig {
    workflows: Vec<CompiledWorkflow>,
}

impl EngineConfig {
    pub fn workflow_names(&self) -> Vec<&str> {
        self.workflows.iter().map(|w| w.name.as_str()).collect()
    }
}

pub fn load_workflows(defs: &[ValidatedWorkflow]) -> Result<EngineConfig, EngineError> {
    let mut workflows = Vec::with_capacity(defs.len());
    for def in defs {
        if defs.iter().filter(|d| d.ast.name == def.ast.name).count() > 1 {
            return Err(EngineError::DuplicateWorkflowName { name: def.ast.name.clone() });
        }
        workflows.push(compile(&def.ast));
    }
    Ok(EngineConfig { workflows })
}

fn compile(ast: &WorkflowAst) -> CompiledWorkflow {
    let state_index: HashMap<&str, usize> = ast
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let initial = ast
        .states
        .iter()
        .position(|s| s.is_initial)
        .expect("validation guarantees an initial state");

    let mut var_slots: HashMap<&str, VarSlot> = HashMap::new();
    let (mut bool_count, mut ts_count, mut id_count) = (0, 0, 0);
    for v in &ast.variables {
        let slot = match v.ty {
            VarType::Bool => {
                bool_count += 1;
                VarSlot::Bool(bool_count - 1)
            }
            VarType::Timestamp => {
                ts_count += 1;
                VarSlot::Timestamp(ts_count - 1)
            }
            VarType::Id => {
                id_count += 1;
                VarSlot::Id(id_count - 1)
            }
        };
        var_slots.insert(v.name.as_str(), slot);
    }

    let timer_names: Vec<String> = ast.timers.iter().map(|t| t.name.clone()).collect();
    let timer_index: HashMap<&str, usize> = ast
        .timers
        .iter()
        .enumerate()
        .map(|(i, t)| (t.name.as_str(), i))
        .collect();
    let mut sorted: Vec<usize> = (0..timer_names.len()).collect();
    sorted.sort_by(|&a, &b| timer_names[a].cmp(&timer_names[b]));
    let mut timer_rank = vec![0usize; timer_names.len()];
    for (rank, &timer) in sorted.iter().enumerate() {
        timer_rank[timer] = rank;
    }

    let mut transitions = Vec::with_capacity(ast.transitions.len());
    let mut by_event: HashMap<(usize, EventKind), Vec<usize>> = HashMap::new();
    let mut by_timer: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for decl in &ast.transitions {
        let from = state_index[decl.from_state.as_str()];
        let to = state_index[decl.to_state.as_str()];
        let index = transitions.len();
        match &decl.trigger {
            TransitionTrigger::Event(p) => {
                let kind = EventKind::from_name(&p.kind)
                    .expect("validation guarantees known event kinds");
                by_event.entry((from, kind)).or_default().push(index);
            }
            TransitionTrigger::Timeout { timer } => {
                by_timer
                    .entry((from, timer_index[timer.as_str()]))
                    .or_default()
                    .push(index);
            }
        }
        let actions = decl
            .actions
            .iter()
            .map(|a| compile_action(a, &var_slots, &timer_index))
            .collect();
        transitions.push(CompiledTransition {
            guard: decl.guard.as_ref().map(|g| compile_guard(g, &var_slots)),
            to,
            actions,
            from_name: from,
            to_name: to,
        });
    }

    CompiledWorkflow {
        name: ast.name.clone(),
        scope_fields: ast.scope_fields.clone(),
        scope_attrs: ast.scope_fields.iter().map(|f| AttrId::from_name(f)).collect(),
        create_kind: EventKind::from_name(&ast.create_pattern.kind)
            .expect("validation guarantees known event kinds"),
        state_names: ast.states.iter().map(|s| s.name.clone()).collect(),
        initial,
        is_final: ast.states.iter().map(|s| s.is_final).collect(),
        bool_count,
        ts_count,
        id_count,
        timer_names,
        timer_durations: ast.timers.iter().map(|t| t.duration_ms).collect(),
        timer_rank,
        transitions,
        by_event,
        by_timer,
    }
}

fn compile_action(
    decl: &ActionDecl,
    vars: &HashMap<&str, VarSlot>,
    timers: &HashMap<&str, usize>,
) -> CAction {
    match decl {
        ActionDecl::Alert { rule, severity } => CAction::Alert {
            rule: rule.clone(),
            severity: Severity::from_name(severity)
                .expect("validation guarantees known severities"),
        },
        ActionDecl::Set(name) => match vars[name.as_str()] {
            VarSlot::Bool(slot) => CAction::SetBool { slot, value: true },
            _ => unreachable!("validation restricts set to bool variables"),
        },
        ActionDecl::Clear(name) => match vars[name.as_str()] {
            VarSlot::Bool(slot) => CAction::SetBool { slot, value: false },
            VarSlot::Timestamp(slot) => CAction::ClearTimestamp(slot),
            VarSlot::Id(slot) => CAction::ClearId(slot),
        },
        ActionDecl::Mark(name) => match vars[name.as_str()] {
            VarSlot::Timestamp(slot) => CAction::Mark(slot),
            _ => unreachable!("validation restricts mark to timestamp variables"),
        },
        ActionDecl::Bind { var, attr } => match vars[var.as_str()] {
            VarSlot::Id(slot) => CAction::Bind { slot, attr: AttrId::from_name(attr) },
            _ => unreachable!("validation restricts bind to id variables"),
        },
        ActionDecl::StartTimer(name) => CAction::Start(timers[name.as_str()]),
        ActionDecl::CancelTimer(name) => CAction::Cancel(timers[name.as_str()]),
    }
}

fn compile_guard(g: &GuardExpr, vars: &HashMap<&str, VarSlot>) -> GExpr {
    match g {
        GuardExpr::Bool(b) => GExpr::Bool(*b),
        GuardExpr::Int(n) => GExpr::Int(*n),
        GuardExpr::Ident(name) => match vars.get(name.as_str()) {
            Some(VarSlot::Bool(slot)) => GExpr::BoolVar(*slot),
            Some(VarSlot::Id(slot)) => GExpr::IdVar(*slot),
            Some(VarSlot::Timestamp(_)) => {
                unreachable!("validation forbids bare timestamp reads")
            }
            None => GExpr::Attr(AttrId::from_name(name)),
        },
        GuardExpr::ElapsedSince(name) => match vars[name.as_str()] {
            VarSlot::Timestamp(slot) => GExpr::Elapsed(slot),
            _ => unreachable!("validation restricts elapsed_since to timestamps"),
        },
        GuardExpr::Not(inner) => GExpr::Not(Box::new(compile_guard(inner, vars))),
        GuardExpr::And(l, r) => GExpr::And(
            Box::new(compile_guard(l, vars)),
            Box::new(compile_guard(r, vars)),
        ),
        GuardExpr::Or(l, r) => GExpr::Or(
            Box::new(compile_guard(l, vars)),
            Box::new(compile_guard(r, vars)),
        ),
        GuardExpr::Cmp { op, lhs, rhs } => GExpr::Cmp {
            op: *op,
            lhs: Box::new(compile_guard(lhs, vars)),
            rhs: Box::new(compile_guard(rhs, vars)),
        },
    }
}

// ---------------------------------------------------------------------------
// Runtime state
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Instance {
    workflow: usize,
    scope_values: Vec<String>,
    /// Length-prefixed join of the scope values, the live-map key.
    scope_key: String,
    state: usize,
    bools: Vec<bool>,
    stamps: Vec<Option<i64>>,
    ids: Vec<Option<String>>,
    /// Armed deadline per timer; stale heap entries are skipped when they
    /// disagree with this.
    pending: Vec<Option<i64>>,
    created_order: u64,
    retired: bool,
}

/// Counters accumulated over one log replay.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EngineStats {
    pub events_consumed: u64,
    /// Events that neither created an instance nor fired a transition.
    pub events_unmatched: u64,
    pub instances_created: u64,
    pub instances_completed: u64,
    /// Instances still live after the final event.
    pub instances_live: u64,
    pub timers_fired: u64,
    pub alerts_total: u64,
    pub alerts_by_rule: BTreeMap<String, u64>,
}

/// One fired transition, recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub trigger: Trigger,
    pub workflow: String,
    pub scope: BTreeMap<String, String>,
    pub from: String,
    pub to: String,
}

/// Everything a replay produces: alerts in emission order, counters, and
/// the transition trace when requested.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorOutput {
    pub alerts: Vec<Alert>,
    pub stats: EngineStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

type TimerEntry = Reverse<(i64, u64, usize, usize, usize)>;

pub struct Engine<'c> {
    config: &'c EngineConfig,
    instances: Vec<Instance>,
    /// Per workflow: scope key to instance index, live instances only.
    live: Vec<HashMap<String, usize>>,
    /// (deadline, instance age, timer name rank, instance, timer).
    timer_queue: BinaryHeap<TimerEntry>,
    last_seq: u64,
    last_ts: Option<i64>,
    next_alert_seq: u64,
    next_created_order: u64,
    alerts: Vec<Alert>,
    trace: Option<Vec<TraceEntry>>,
    stats: EngineStats,
    key_buf: String,
}

/// Unambiguous encoding of a scope value list: each value is preceded by
/// its byte length, so no separator can collide with id contents.
fn build_scope_key(buf: &mut String, values: impl Iterator<Item = impl AsRef<str>>) {
    buf.clear();
    for v in values {
        let v = v.as_ref();
        let _ = write!(buf, "{}:", v.len());
        buf.push_str(v);
    }
}

impl<'c> Engine<'c> {
    pub fn new(config: &'c EngineConfig, trace: bool) -> Self {
        Engine {
            config,
            instances: Vec::new(),
            live: config.workflows.iter().map(|_| HashMap::new()).collect(),
            timer_queue: BinaryHeap::new(),
            last_seq: 0,
            last_ts: None,
            next_alert_seq: 1,
            next_created_order: 0,
            alerts: Vec::new(),
            trace: trace.then(Vec::new),
            stats: EngineStats::default(),
            key_buf: String::new(),
        }
    }

    pub fn step(&mut self, event: &SensorEvent) -> Result<(), EngineError> {
        if event.seq <= self.last_seq {
            return Err(EngineError::NonMonotonicSeq { seq: event.seq, last: self.last_seq });
        }
        if let Some(last) = self.last_ts {
            if event.ts < last {
                return Err(EngineError::NonMonotonicTs { seq: event.seq, ts: event.ts, last });
            }
        }
        self.last_seq = event.seq;
        self.last_ts = Some(event.ts);
        self.stats.events_consumed += 1;

        self.fire_due_timers(|deadline| deadline < event.ts);

        let config = self.config;
        let mut matched = false;
        for (w, wf) in config.workflows.iter().enumerate() {
            if wf.create_kind == event.kind && self.scope_key_of(wf, event) {
                if !self.live[w].contains_key(self.key_buf.as_str()) {
                    self.create_instance(w, wf, event);
                    matched = true;
                }
            }
        }
        for (w, wf) in config.workflows.iter().enumerate() {
            if !self.scope_key_of(wf, event) {
                continue;
            }
            let Some(&inst) = self.live[w].get(self.key_buf.as_str()) else {
                continue;
            };
            let state = self.instances[inst].state;
            let Some(candidates) = wf.by_event.get(&(state, event.kind)) else {
                continue;
            };
            let chosen = candidates.iter().copied().find(|&t| {
                self.guard_holds(&wf.transitions[t], inst, event.ts, Some(event))
            });
            if let Some(t) = chosen {
                self.fire_transition(w, inst, t, event.ts, Trigger::Event(event.seq), Some(event));
                matched = true;
            }
        }
        if !matched {
            self.stats.events_unmatched += 1;
        }
        Ok(())
    }

    /// Fires remaining timers due at or before the last event and closes
    /// the replay.
    pub fn finish(mut self) -> MonitorOutput {
        if let Some(last) = self.last_ts {
            self.fire_due_timers(|deadline| deadline <= last);
        }
        self.stats.instances_live = self.live.iter().map(|m| m.len() as u64).sum();
        MonitorOutput { alerts: self.alerts, stats: self.stats, trace: self.trace }
    }

    /// Builds the live-map key for this workflow from the event attributes
    /// into `self.key_buf`; false when the event lacks a scope attribute.
    fn scope_key_of(&mut self, wf: &CompiledWorkflow, event: &SensorEvent) -> bool {
        self.key_buf.clear();
        for &attr in &wf.scope_attrs {
            let Some(value) = attr.of(event) else {
                return false;
            };
            let _ = write!(self.key_buf, "{}:", value.len());
            self.key_buf.push_str(value);
        }
        true
    }

    fn create_instance(&mut self, w: usize, wf: &CompiledWorkflow, event: &SensorEvent) {
        let scope_values: Vec<String> = wf
            .scope_attrs
            .iter()
            .map(|a| {
                a.of(event)
                    .expect("create pattern binds every scope attribute")
                    .to_string()
            })
            .collect();
        let mut scope_key = String::new();
        build_scope_key(&mut scope_key, scope_values.iter());
        let index = self.instances.len();
        self.live[w].insert(scope_key.clone(), index);
        self.instances.push(Instance {
            workflow: w,
            scope_values,
            scope_key,
            state: wf.initial,
            bools: vec![false; wf.bool_count],
            stamps: vec![None; wf.ts_count],
            ids: vec![None; wf.id_count],
            pending: vec![None; wf.timer_durations.len()],
            created_order: self.next_created_order,
            retired: false,
        });
        self.next_created_order += 1;
        self.stats.instances_created += 1;
    }

    fn fire_due_timers(&mut self, due: impl Fn(i64) -> bool) {
        while let Some(&Reverse((deadline, _, _, inst, timer))) = self.timer_queue.peek() {
            if !due(deadline) {
                break;
            }
            self.timer_queue.pop();
            let instance = &mut self.instances[inst];
            if instance.retired || instance.pending[timer] != Some(deadline) {
                continue;
            }
            instance.pending[timer] = None;
            self.stats.timers_fired += 1;
            let w = instance.workflow;
            let wf = &self.config.workflows[w];
            let state = instance.state;
            let Some(candidates) = wf.by_timer.get(&(state, timer)) else {
                continue;
            };
            let chosen = candidates
                .iter()
                .copied()
                .find(|&t| self.guard_holds(&wf.transitions[t], inst, deadline, None));
            if let Some(t) = chosen {
                let trigger = Trigger::timer(&wf.timer_names[timer]);
                self.fire_transition(w, inst, t, deadline, trigger, None);
            }
        }
    }

    fn guard_holds(
        &self,
        transition: &CompiledTransition,
        inst: usize,
        now: i64,
        event: Option<&SensorEvent>,
    ) -> bool {
        let Some(guard) = &transition.guard else {
            return true;
        };
        let instance = &self.instances[inst];
        match eval(guard, instance, now, event) {
            Val::B(b) => b,
            _ => unreachable!("validation guarantees guards type as bool"),
        }
    }

    fn fire_transition(
        &mut self,
        w: usize,
        inst: usize,
        t: usize,
        now: i64,
        trigger: Trigger,
        event: Option<&SensorEvent>,
    ) {
        let wf = &self.config.workflows[w];
        let transition = &wf.transitions[t];
        for action in &transition.actions {
            match action {
                CAction::Alert { rule, severity } => {
                    let instance = &self.instances[inst];
                    let scope: BTreeMap<String, String> = wf
                        .scope_fields
                        .iter()
                        .cloned()
                        .zip(instance.scope_values.iter().cloned())
                        .collect();
                    self.alerts.push(Alert {
                        alert_seq: self.next_alert_seq,
                        ts: now,
                        workflow: wf.name.clone(),
                        rule: rule.clone(),
                        severity: *severity,
                        scope,
                        trigger_seq: trigger.clone(),
                    });
                    self.next_alert_seq += 1;
                    self.stats.alerts_total += 1;
                    *self.stats.alerts_by_rule.entry(rule.clone()).or_insert(0) += 1;
                }
                CAction::SetBool { slot, value } => {
                    self.instances[inst].bools[*slot] = *value;
                }
                CAction::ClearTimestamp(slot) => {
                    self.instances[inst].stamps[*slot] = None;
                }
                CAction::ClearId(slot) => {
                    self.instances[inst].ids[*slot] = None;
                }
                CAction::Mark(slot) => {
                    self.instances[inst].stamps[*slot] = Some(now);
                }
                CAction::Bind { slot, attr } => {
                    let value = event
                        .and_then(|e| attr.of(e))
                        .expect("validation ties bind attributes to the trigger pattern")
                        .to_string();
                    self.instances[inst].ids[*slot] = Some(value);
                }
                CAction::Start(timer) => {
                    let deadline = now + wf.timer_durations[*timer];
                    let instance = &mut self.instances[inst];
                    instance.pending[*timer] = Some(deadline);
                    self.timer_queue.push(Reverse((
                        deadline,
                        instance.created_order,
                        wf.timer_rank[*timer],
                        inst,
                        *timer,
                    )));
                }
                CAction::Cancel(timer) => {
                    self.instances[inst].pending[*timer] = None;
                }
            }
        }

        let instance = &mut self.instances[inst];
        instance.state = transition.to;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry {
                trigger,
                workflow: wf.name.clone(),
                scope: wf
                    .scope_fields
                    .iter()
                    .cloned()
                    .zip(instance.scope_values.iter().cloned())
                    .collect(),
                from: wf.state_names[transition.from_name].clone(),
                to: wf.state_names[transition.to_name].clone(),
            });
        }
        if wf.is_final[transition.to] {
            instance.retired = true;
            instance.pending.iter_mut().for_each(|p| *p = None);
            let key = std::mem::take(&mut instance.scope_key);
            self.live[w].remove(&key);
            self.stats.instances_completed += 1;
        }
    }
}

enum Val<'a> {
    B(bool),
    I(i64),
    S(Option<&'a str>),
}

fn eval<'a>(
    g: &'a GExpr,
    instance: &'a Instance,
    now: i64,
    event: Option<&'a SensorEvent>,
) -> Val<'a> {
    match g {
        GExpr::Bool(b) => Val::B(*b),
        GExpr::Int(n) => Val::I(*n),
        GExpr::Attr(attr) => Val::S(Some(
            event
                .and_then(|e| attr.of(e))
                .expect("validation ties guard attributes to the trigger pattern"),
        )),
        GExpr::BoolVar(slot) => Val::B(instance.bools[*slot]),
        GExpr::IdVar(slot) => Val::S(instance.ids[*slot].as_deref()),
        GExpr::Elapsed(slot) => Val::I(match instance.stamps[*slot] {
            Some(marked) => now - marked,
            None => i64::MAX,
        }),
        GExpr::Not(inner) => match eval(inner, instance, now, event) {
            Val::B(b) => Val::B(!b),
            _ => unreachable!("validation guarantees bool operand"),
        },
        GExpr::And(l, r) => Val::B(truthy(l, instance, now, event) && truthy(r, instance, now, event)),
        GExpr::Or(l, r) => Val::B(truthy(l, instance, now, event) || truthy(r, instance, now, event)),
        GExpr::Cmp { op, lhs, rhs } => {
            let l = eval(lhs, instance, now, event);
            let r = eval(rhs, instance, now, event);
            Val::B(match (l, r) {
                (Val::I(a), Val::I(b)) => match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Gt => a > b,
                },
                // An unbound id variable equals only another unbound one.
                (Val::S(a), Val::S(b)) => match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    _ => unreachable!("validation forbids ordered id comparison"),
                },
                (Val::B(a), Val::B(b)) => match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    _ => unreachable!("validation forbids ordered bool comparison"),
                },
                _ => unreachable!("validation guarantees matching comparison types"),
            })
        }
    }
}

fn truthy(g: &GExpr, instance: &Instance, now: i64, event: Option<&SensorEvent>) -> bool {
    match eval(g, instance, now, event) {
        Val::B(b) => b,
        _ => unreachable!("validation guarantees bool operand"),
    }
}

/// Replays a whole log and returns the combined output.
pub fn process_log(
    config: &EngineConfig,
    events: &[SensorEvent],
    trace: bool,
) -> Result<MonitorOutput, EngineError> {
    let mut engine = Engine::new(config, trace);
    for event in events {
        engine.step(event)?;
    }
    Ok(engine.finish())
}
