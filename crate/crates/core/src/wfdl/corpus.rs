//! Seeded generator of random, always-valid workflow definitions.
//!
//! Fuzz tests use these as print/parse round-trip subjects, so the
//! generator promises only structural validity: every produced AST
//! passes validation (possibly with unreachable-state warnings), but the
//! workflows are not meant to encode sensible monitoring rules.

use crate::ledger::EventKind;
use crate::simward::SplitMix64;

use super::ast::*;

const SEVERITIES: [&str; 3] = ["notice", "warning", "critical"];

struct Gen {
    rng: SplitMix64,
    states: Vec<String>,
    bool_vars: Vec<String>,
    ts_vars: Vec<String>,
    id_vars: Vec<String>,
    timers: Vec<String>,
}

impl Gen {
    fn below(&mut self, n: usize) -> usize {
        self.rng.next_below(n as u64) as usize
    }

    fn pick<'a>(&mut self, items: &'a [String]) -> &'a str {
        let idx = self.below(items.len());
        &items[idx]
    }

    /// Distinct subset of `pool` with at least `min` elements, keeping
    /// pool order.
    fn subset(&mut self, pool: &[&str], min: usize) -> Vec<String> {
        loop {
            let chosen: Vec<String> = pool
                .iter()
                .filter(|_| self.rng.chance(0.6))
                .map(|s| s.to_string())
                .collect();
            if chosen.len() >= min {
                return chosen;
            }
        }
    }

    fn int_expr(&mut self) -> GuardExpr {
        if !self.ts_vars.is_empty() && self.rng.chance(0.3) {
            let var = self.pick(&self.ts_vars.clone()).to_string();
            GuardExpr::ElapsedSince(var)
        } else {
            GuardExpr::Int(self.rng.next_below(100_000) as i64)
        }
    }

    fn cmp_op(&mut self) -> CmpOp {
        [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt][self.below(6)]
    }

    fn bool_atom(&mut self, bound: &[String]) -> GuardExpr {
        let mut options = vec![0, 1];
        if !self.bool_vars.is_empty() {
            options.push(2);
        }
        if self.id_vars.len() + bound.len() >= 2 {
            options.push(3);
        }
        match options[self.below(options.len())] {
            0 => GuardExpr::Bool(true),
            1 => GuardExpr::Bool(false),
            2 => {
                let var = self.pick(&self.bool_vars.clone()).to_string();
                GuardExpr::Ident(var)
            }
            _ => {
                // Equality between two id-typed operands (variables or
                // attributes bound by the trigger pattern).
                let pool: Vec<String> =
                    self.id_vars.iter().chain(bound).cloned().collect();
                let lhs = self.pick(&pool).to_string();
                let rhs = self.pick(&pool).to_string();
                let op = if self.rng.chance(0.5) { CmpOp::Eq } else { CmpOp::Ne };
                GuardExpr::Cmp {
                    op,
                    lhs: Box::new(GuardExpr::Ident(lhs)),
                    rhs: Box::new(GuardExpr::Ident(rhs)),
                }
            }
        }
    }

    fn guard(&mut self, bound: &[String], depth: usize) -> GuardExpr {
        if depth == 0 {
            return self.bool_atom(bound);
        }
        match self.below(6) {
            0 => self.bool_atom(bound),
            1 => GuardExpr::Not(Box::new(self.guard(bound, depth - 1))),
            2 => GuardExpr::And(
                Box::new(self.guard(bound, depth - 1)),
                Box::new(self.guard(bound, depth - 1)),
            ),
            3 => GuardExpr::Or(
                Box::new(self.guard(bound, depth - 1)),
                Box::new(self.guard(bound, depth - 1)),
            ),
            _ => {
                let lhs = self.int_expr();
                let rhs = self.int_expr();
                GuardExpr::Cmp {
                    op: self.cmp_op(),
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                }
            }
        }
    }

    fn actions(&mut self, trigger_args: &[String], rule_no: usize) -> Vec<ActionDecl> {
        let mut actions = Vec::new();
        for _ in 0..self.below(4) {
            let mut options = vec![0];
            if !self.bool_vars.is_empty() {
                options.push(1);
                options.push(2);
            }
            if !self.ts_vars.is_empty() {
                options.push(3);
            }
            if !self.id_vars.is_empty() && !trigger_args.is_empty() {
                options.push(4);
            }
            if !self.timers.is_empty() {
                options.push(5);
                options.push(6);
            }
            let action = match options[self.below(options.len())] {
                0 => ActionDecl::Alert {
                    rule: format!("check.r{rule_no}"),
                    severity: SEVERITIES[self.below(3)].to_string(),
                },
                1 => ActionDecl::Set(self.pick(&self.bool_vars.clone()).to_string()),
                2 => {
                    let pool: Vec<String> = self
                        .bool_vars
                        .iter()
                        .chain(&self.ts_vars)
                        .chain(&self.id_vars)
                        .cloned()
                        .collect();
                    ActionDecl::Clear(self.pick(&pool).to_string())
                }
                3 => ActionDecl::Mark(self.pick(&self.ts_vars.clone()).to_string()),
                4 => ActionDecl::Bind {
                    var: self.pick(&self.id_vars.clone()).to_string(),
                    attr: self.pick(&trigger_args.to_vec()).to_string(),
                },
                5 => ActionDecl::StartTimer(self.pick(&self.timers.clone()).to_string()),
                _ => ActionDecl::CancelTimer(self.pick(&self.timers.clone()).to_string()),
            };
            actions.push(action);
        }
        actions
    }
}

/// Builds a random structurally valid workflow. Equal seeds produce
/// equal ASTs; all positions are zero.
pub fn random_workflow(seed: u64) -> WorkflowAst {
    let mut g = Gen {
        rng: SplitMix64::new(seed),
        states: Vec::new(),
        bool_vars: Vec::new(),
        ts_vars: Vec::new(),
        id_vars: Vec::new(),
        timers: Vec::new(),
    };

    let n_states = 2 + g.below(4);
    g.states = (0..n_states).map(|i| format!("s{i}")).collect();
    let n_vars = g.below(4);
    for i in 0..n_vars {
        match g.below(3) {
            0 => g.bool_vars.push(format!("v{i}")),
            1 => g.ts_vars.push(format!("v{i}")),
            _ => g.id_vars.push(format!("v{i}")),
        }
    }
    let n_timers = g.below(3);
    g.timers = (0..n_timers).map(|i| format!("t{i}")).collect();

    let create_kind = EventKind::ALL[g.below(EventKind::ALL.len())];
    let create_args = g.subset(create_kind.attributes(), 1);
    let scope_refs: Vec<&str> = create_args.iter().map(String::as_str).collect();
    let scope_fields = g.subset(&scope_refs, 1);

    let mut variables = Vec::new();
    for name in g.bool_vars.clone() {
        variables.push(VarDecl { name, ty: VarType::Bool, pos: Pos::default() });
    }
    for name in g.ts_vars.clone() {
        variables.push(VarDecl { name, ty: VarType::Timestamp, pos: Pos::default() });
    }
    for name in g.id_vars.clone() {
        variables.push(VarDecl { name, ty: VarType::Id, pos: Pos::default() });
    }

    let timers = g
        .timers
        .clone()
        .into_iter()
        .map(|name| TimerDecl {
            name,
            duration_ms: 1 + g.rng.next_below(3_600_000) as i64,
            pos: Pos::default(),
        })
        .collect();

    let states: Vec<StateDecl> = g
        .states
        .clone()
        .into_iter()
        .enumerate()
        .map(|(i, name)| StateDecl {
            is_initial: i == 0,
            is_final: i == n_states - 1 || (i > 0 && g.rng.chance(0.25)),
            name,
            pos: Pos::default(),
        })
        .collect();

    let mut transitions = Vec::new();
    // (from state, trigger discriminator) pairs already taken by a
    // transition whose guard can never be false; a second unguarded
    // transition there would break static determinism.
    let mut unconditional: std::collections::HashSet<(String, String)> =
        std::collections::HashSet::new();
    let n_transitions = 1 + g.below(8);
    for i in 0..n_transitions {
        let use_timer = !g.timers.is_empty() && g.rng.chance(0.25);
        let (trigger, key, trigger_args) = if use_timer {
            let timer = g.pick(&g.timers.clone()).to_string();
            (
                TransitionTrigger::Timeout { timer: timer.clone() },
                format!("timeout:{timer}"),
                Vec::new(),
            )
        } else {
            let kind = EventKind::ALL[g.below(EventKind::ALL.len())];
            let args = g.subset(kind.attributes(), 0);
            (
                TransitionTrigger::Event(EventPattern {
                    kind: kind.as_str().to_string(),
                    args: args.clone(),
                    pos: Pos::default(),
                }),
                kind.as_str().to_string(),
                args,
            )
        };
        let from_state = g.pick(&g.states.clone()).to_string();
        let to_state = g.pick(&g.states.clone()).to_string();
        let mut guard = if g.rng.chance(0.5) {
            Some(g.guard(&trigger_args, 2))
        } else {
            None
        };
        let constant_true = matches!(guard, None | Some(GuardExpr::Bool(true)));
        if constant_true {
            if !unconditional.insert((from_state.clone(), key)) {
                // Slot taken: make this one conditional to stay valid.
                guard = Some(GuardExpr::Cmp {
                    op: CmpOp::Lt,
                    lhs: Box::new(GuardExpr::Int(1)),
                    rhs: Box::new(GuardExpr::Int(2)),
                });
            }
        }
        let actions = g.actions(&trigger_args, i);
        transitions.push(TransitionDecl {
            trigger,
            guard,
            from_state,
            to_state,
            actions,
            pos: Pos::default(),
        });
    }

    WorkflowAst {
        name: format!("fuzz_{seed}"),
        scope_fields,
        create_pattern: EventPattern {
            kind: create_kind.as_str().to_string(),
            args: create_args,
            pos: Pos::default(),
        },
        states,
        variables,
        timers,
        transitions,
    }
}
