//! Semantic validation of parsed workflow definitions.
//!
//! Validation resolves names, type-checks guards, and enforces the static
//! rules the execution engine relies on:
//!
//! - state, variable and timer names are unique in their namespace;
//! - exactly one `initial` state and at least one `final` state;
//! - transitions reference declared states, variables and timers;
//! - event patterns use known event kinds and only attributes those kinds
//!   are guaranteed to carry; guards only read pattern-bound attributes;
//! - guards type-check to bool; `elapsed_since` takes a timestamp
//!   variable; ordered comparisons need integers, `==`/`!=` also accept
//!   bool pairs or id-valued pairs;
//! - `set` needs a bool, `mark` a timestamp, `bind` an id variable;
//! - timer durations are at least 1 ms;
//! - no two transitions share (source state, trigger) with guards that are
//!   both constantly true, since that would make dispatch ambiguous.
//!
//! States unreachable from the initial state are reported as warnings, not
//! errors.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::{ErrorKind, ParseError};
use crate::ledger::EventKind;

/// A workflow that passed validation, ready for engine compilation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedWorkflow {
    pub ast: WorkflowAst,
    pub warnings: Vec<String>,
}

pub fn parse_and_validate(source: &str) -> Result<ValidatedWorkflow, Vec<ParseError>> {
    let ast = super::parse(source).map_err(|e| vec![e])?;
    validate(ast)
}

pub fn validate(ast: WorkflowAst) -> Result<ValidatedWorkflow, Vec<ParseError>> {
    let mut v = Validator { ast: &ast, errors: Vec::new() };
    v.run();
    if !v.errors.is_empty() {
        return Err(v.errors);
    }
    let warnings = unreachable_state_warnings(&ast);
    Ok(ValidatedWorkflow { ast, warnings })
}

struct Validator<'a> {
    ast: &'a WorkflowAst,
    errors: Vec<ParseError>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Bool,
    Int,
    Id,
}

impl<'a> Validator<'a> {
    fn error(&mut self, pos: Pos, message: String) {
        self.errors.push(ParseError {
            line: pos.line,
            column: pos.column,
            kind: ErrorKind::Semantic,
            message,
        });
    }

    fn var(&self, name: &str) -> Option<&'a VarDecl> {
        self.ast.variables.iter().find(|v| v.name == name)
    }

    fn run(&mut self) {
        self.check_declarations();
        self.check_pattern(&self.ast.create_pattern, true);
        for (index, t) in self.ast.transitions.iter().enumerate() {
            self.check_transition(index, t);
        }
        self.check_static_determinism();
    }

    fn check_declarations(&mut self) {
        let mut seen_states = HashSet::new();
        for s in &self.ast.states {
            if !seen_states.insert(s.name.as_str()) {
                self.error(s.pos, format!("duplicate state {:?}", s.name));
            }
        }
        let initials = self.ast.states.iter().filter(|s| s.is_initial).count();
        if initials != 1 {
            let pos = self.ast.states.first().map(|s| s.pos).unwrap_or_default();
            self.error(pos, format!("expected exactly one initial state, found {initials}"));
        }
        if !self.ast.states.iter().any(|s| s.is_final) {
            let pos = self.ast.states.first().map(|s| s.pos).unwrap_or_default();
            self.error(pos, "no final state declared".into());
        }

        let mut seen_vars = HashSet::new();
        for v in &self.ast.variables {
            if !seen_vars.insert(v.name.as_str()) {
                self.error(v.pos, format!("duplicate variable {:?}", v.name));
            }
            if matches!(v.name.as_str(), "worker" | "room" | "bed" | "device") {
                self.error(
                    v.pos,
                    format!("variable {:?} shadows an event attribute name", v.name),
                );
            }
        }
        let mut seen_timers = HashSet::new();
        for t in &self.ast.timers {
            if !seen_timers.insert(t.name.as_str()) {
                self.error(t.pos, format!("duplicate timer {:?}", t.name));
            }
            if t.duration_ms < 1 {
                self.error(t.pos, format!("timer {:?} duration must be at least 1 ms", t.name));
            }
        }

        let mut seen_scope = HashSet::new();
        for f in &self.ast.scope_fields {
            if !seen_scope.insert(f.as_str()) {
                let pos = self.ast.create_pattern.pos;
                self.error(pos, format!("duplicate scope field {f:?}"));
            }
        }
    }

    /// Event kind exists, attributes are legal for that kind, and (for the
    /// create pattern) the scope fields are all bound.
    fn check_pattern(&mut self, pattern: &EventPattern, is_create: bool) {
        let Some(kind) = EventKind::from_name(&pattern.kind) else {
            self.error(pattern.pos, format!("unknown event kind {:?}", pattern.kind));
            return;
        };
        let legal = kind.attributes();
        let mut seen = HashSet::new();
        for arg in &pattern.args {
            if !legal.contains(&arg.as_str()) {
                self.error(
                    pattern.pos,
                    format!("event kind {} has no attribute {:?}", kind, arg),
                );
            }
            if !seen.insert(arg.as_str()) {
                self.error(pattern.pos, format!("attribute {:?} bound twice", arg));
            }
        }
        if is_create {
            for field in &self.ast.scope_fields {
                if !pattern.args.contains(field) {
                    self.error(
                        pattern.pos,
                        format!("create pattern does not bind scope field {field:?}"),
                    );
                }
            }
        }
    }

    fn check_transition(&mut self, index: usize, t: &TransitionDecl) {
        let state_names: HashSet<&str> =
            self.ast.states.iter().map(|s| s.name.as_str()).collect();
        if !state_names.contains(t.from_state.as_str()) {
            self.error(t.pos, format!("undeclared state {:?}", t.from_state));
        }
        if !state_names.contains(t.to_state.as_str()) {
            self.error(t.pos, format!("undeclared state {:?}", t.to_state));
        }

        let bound: Vec<&str> = match &t.trigger {
            TransitionTrigger::Event(pattern) => {
                self.check_pattern(pattern, false);
                pattern.args.iter().map(String::as_str).collect()
            }
            TransitionTrigger::Timeout { timer } => {
                if !self.ast.timers.iter().any(|d| &d.name == timer) {
                    self.error(t.pos, format!("undeclared timer {timer:?}"));
                }
                Vec::new()
            }
        };

        if let Some(guard) = &t.guard {
            match self.guard_type(guard, &bound, t.pos) {
                Some(Ty::Bool) | None => {}
                Some(other) => {
                    self.error(
                        t.pos,
                        format!("guard of transition #{} is {other:?}, expected bool", index + 1),
                    );
                }
            }
        }

        for action in &t.actions {
            self.check_action(action, &bound, t.pos);
        }
    }

    fn check_action(&mut self, action: &ActionDecl, bound: &[&str], pos: Pos) {
        match action {
            ActionDecl::Alert { severity, .. } => {
                if crate::ledger::Severity::from_name(severity).is_none() {
                    self.error(pos, format!("unknown severity {severity:?}"));
                }
            }
            ActionDecl::Set(name) => match self.var(name) {
                None => self.error(pos, format!("undeclared variable {name:?}")),
                Some(v) if v.ty != VarType::Bool => {
                    self.error(pos, format!("set needs a bool variable, {name:?} is {}", v.ty.as_str()));
                }
                Some(_) => {}
            },
            ActionDecl::Clear(name) => {
                if self.var(name).is_none() {
                    self.error(pos, format!("undeclared variable {name:?}"));
                }
            }
            ActionDecl::Mark(name) => match self.var(name) {
                None => self.error(pos, format!("undeclared variable {name:?}")),
                Some(v) if v.ty != VarType::Timestamp => {
                    self.error(pos, format!("mark needs a timestamp variable, {name:?} is {}", v.ty.as_str()));
                }
                Some(_) => {}
            },
            ActionDecl::Bind { var, attr } => {
                match self.var(var) {
                    None => self.error(pos, format!("undeclared variable {var:?}")),
                    Some(v) if v.ty != VarType::Id => {
                        self.error(pos, format!("bind needs an id variable, {var:?} is {}", v.ty.as_str()));
                    }
                    Some(_) => {}
                }
                if !bound.contains(&attr.as_str()) {
                    self.error(pos, format!("attribute {attr:?} is not bound by the trigger pattern"));
                }
            }
            ActionDecl::StartTimer(name) | ActionDecl::CancelTimer(name) => {
                if !self.ast.timers.iter().any(|d| &d.name == name) {
                    self.error(pos, format!("undeclared timer {name:?}"));
                }
            }
        }
    }

    /// Infers the type of a guard expression; pushes errors and returns
    /// None when a subexpression is already broken.
    fn guard_type(&mut self, expr: &GuardExpr, bound: &[&str], pos: Pos) -> Option<Ty> {
        match expr {
            GuardExpr::Bool(_) => Some(Ty::Bool),
            GuardExpr::Int(_) => Some(Ty::Int),
            GuardExpr::Ident(name) => {
                if bound.contains(&name.as_str()) {
                    return Some(Ty::Id);
                }
                match self.var(name) {
                    Some(v) => match v.ty {
                        VarType::Bool => Some(Ty::Bool),
                        VarType::Id => Some(Ty::Id),
                        VarType::Timestamp => {
                            self.error(
                                pos,
                                format!("timestamp variable {name:?} can only be read via elapsed_since"),
                            );
                            None
                        }
                    },
                    None => {
                        self.error(pos, format!("undeclared identifier {name:?} in guard"));
                        None
                    }
                }
            }
            GuardExpr::ElapsedSince(name) => match self.var(name) {
                Some(v) if v.ty == VarType::Timestamp => Some(Ty::Int),
                Some(v) => {
                    self.error(
                        pos,
                        format!("elapsed_since needs a timestamp variable, {name:?} is {}", v.ty.as_str()),
                    );
                    None
                }
                None => {
                    self.error(pos, format!("undeclared variable {name:?} in guard"));
                    None
                }
            },
            GuardExpr::Not(inner) => {
                match self.guard_type(inner, bound, pos) {
                    Some(Ty::Bool) | None => {}
                    Some(other) => self.error(pos, format!("'not' applied to {other:?}")),
                }
                Some(Ty::Bool)
            }
            GuardExpr::And(l, r) | GuardExpr::Or(l, r) => {
                for side in [l, r] {
                    match self.guard_type(side, bound, pos) {
                        Some(Ty::Bool) | None => {}
                        Some(other) => self.error(pos, format!("boolean operator applied to {other:?}")),
                    }
                }
                Some(Ty::Bool)
            }
            GuardExpr::Cmp { op, lhs, rhs } => {
                let lt = self.guard_type(lhs, bound, pos);
                let rt = self.guard_type(rhs, bound, pos);
                if let (Some(lt), Some(rt)) = (lt, rt) {
                    let ok = match op {
                        CmpOp::Eq | CmpOp::Ne => lt == rt,
                        _ => lt == Ty::Int && rt == Ty::Int,
                    };
                    if !ok {
                        self.error(
                            pos,
                            format!("cannot compare {lt:?} {} {rt:?}", op.as_str()),
                        );
                    }
                }
                Some(Ty::Bool)
            }
        }
    }

    /// Two transitions on the same (state, trigger) may not both carry a
    /// guard that can never be false.
    fn check_static_determinism(&mut self) {
        let mut by_trigger: HashMap<(&str, String), Vec<usize>> = HashMap::new();
        for (index, t) in self.ast.transitions.iter().enumerate() {
            if !t.guard_is_constant_true() {
                continue;
            }
            let trigger = match &t.trigger {
                TransitionTrigger::Event(p) => format!("event {}", p.kind),
                TransitionTrigger::Timeout { timer } => format!("timeout {timer}"),
            };
            by_trigger
                .entry((t.from_state.as_str(), trigger))
                .or_default()
                .push(index);
        }
        let mut clashes: Vec<_> = by_trigger
            .into_iter()
            .filter(|(_, indices)| indices.len() > 1)
            .collect();
        clashes.sort_by(|a, b| a.1.cmp(&b.1));
        for ((state, trigger), indices) in clashes {
            let listed = indices
                .iter()
                .map(|i| format!("#{}", i + 1))
                .collect::<Vec<_>>()
                .join(" and ");
            let pos = self.ast.transitions[indices[0]].pos;
            self.error(
                pos,
                format!(
                    "transitions {listed} from state {state:?} on {trigger} are both unconditionally enabled"
                ),
            );
        }
    }
}

fn unreachable_state_warnings(ast: &WorkflowAst) -> Vec<String> {
    let index_of: HashMap<&str, usize> = ast
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let Some(initial) = ast.states.iter().position(|s| s.is_initial) else {
        return Vec::new();
    };
    let mut reached: BTreeSet<usize> = BTreeSet::from([initial]);
    let mut frontier = vec![initial];
    while let Some(state) = frontier.pop() {
        for t in &ast.transitions {
            if index_of.get(t.from_state.as_str()) == Some(&state) {
                if let Some(&to) = index_of.get(t.to_state.as_str()) {
                    if reached.insert(to) {
                        frontier.push(to);
                    }
                }
            }
        }
    }
    ast.states
        .iter()
        .enumerate()
        .filter(|(i, _)| !reached.contains(i))
        .map(|(_, s)| format!("state {:?} is unreachable from the initial state", s.name))
        .collect()
}
