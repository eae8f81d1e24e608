//! Canonical text rendering of workflow definitions.
//!
//! `print` emits a normalized form: two-space indentation, one item per
//! line, declarations before the create pattern before transitions, and
//! alert severities always spelled out. Parentheses in guards are the
//! minimum required by operator precedence.
//!
//! Printing then reparsing yields a structurally identical definition:
//! `parse(&print(&ast))` equals `ast` up to source positions.

use std::fmt::Write;

use super::ast::*;

pub fn print(ast: &WorkflowAst) -> String {
    let mut out = String::new();
    let _ = write!(out, "workflow {:?} scope (", ast.name);
    out.push_str(&ast.scope_fields.join(", "));
    out.push_str(") {\n");

    for s in &ast.states {
        let _ = write!(out, "  state {}", s.name);
        if s.is_initial {
            out.push_str(" initial");
        }
        if s.is_final {
            out.push_str(" final");
        }
        out.push_str(";\n");
    }
    for v in &ast.variables {
        let _ = writeln!(out, "  var {}: {};", v.name, v.ty.as_str());
    }
    for t in &ast.timers {
        let _ = writeln!(out, "  timer {} = {} ms;", t.name, t.duration_ms);
    }
    let _ = writeln!(out, "  create on {};", pattern(&ast.create_pattern));
    for t in &ast.transitions {
        out.push_str("  on ");
        match &t.trigger {
            TransitionTrigger::Event(p) => out.push_str(&pattern(p)),
            TransitionTrigger::Timeout { timer } => {
                let _ = write!(out, "timeout({timer})");
            }
        }
        if let Some(g) = &t.guard {
            out.push_str(" when ");
            guard(&mut out, g, 0);
        }
        let _ = write!(out, ": {} -> {}", t.from_state, t.to_state);
        for a in &t.actions {
            out.push(' ');
            action(&mut out, a);
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    out
}

fn pattern(p: &EventPattern) -> String {
    format!("{}({})", p.kind, p.args.join(", "))
}

fn action(out: &mut String, a: &ActionDecl) {
    match a {
        ActionDecl::Alert { rule, severity } => {
            let _ = write!(out, "alert {rule:?} severity {severity}");
        }
        ActionDecl::Set(name) => {
            let _ = write!(out, "set {name}");
        }
        ActionDecl::Clear(name) => {
            let _ = write!(out, "clear {name}");
        }
        ActionDecl::Mark(name) => {
            let _ = write!(out, "mark {name}");
        }
        ActionDecl::Bind { var, attr } => {
            let _ = write!(out, "bind {var} = {attr}");
        }
        ActionDecl::StartTimer(name) => {
            let _ = write!(out, "start {name}");
        }
        ActionDecl::CancelTimer(name) => {
            let _ = write!(out, "cancel {name}");
        }
    }
}

/// Precedence levels, loosest to tightest: or(1), and(2), not(3), cmp(4),
/// atoms(5). A subexpression is parenthesized when its own level is looser
/// than the context requires.
fn guard(out: &mut String, g: &GuardExpr, min_level: u8) {
    let level = match g {
        GuardExpr::Or(..) => 1,
        GuardExpr::And(..) => 2,
        GuardExpr::Not(..) => 3,
        GuardExpr::Cmp { .. } => 4,
        _ => 5,
    };
    let parens = level < min_level;
    if parens {
        out.push('(');
    }
    match g {
        GuardExpr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        GuardExpr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        GuardExpr::Ident(name) => out.push_str(name),
        GuardExpr::ElapsedSince(name) => {
            let _ = write!(out, "elapsed_since({name})");
        }
        GuardExpr::Not(inner) => {
            out.push_str("not ");
            guard(out, inner, 3);
        }
        GuardExpr::And(l, r) => {
            // Left-associative: the right operand must bind tighter.
            guard(out, l, 2);
            out.push_str(" and ");
            guard(out, r, 3);
        }
        GuardExpr::Or(l, r) => {
            guard(out, l, 1);
            out.push_str(" or ");
            guard(out, r, 2);
        }
        GuardExpr::Cmp { op, lhs, rhs } => {
            // Comparisons do not chain; both operands must be atoms.
            guard(out, lhs, 5);
            let _ = write!(out, " {} ", op.as_str());
            guard(out, rhs, 5);
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(source: &str) -> (WorkflowAst, String) {
        let ast = parse(source).unwrap();
        let printed = print(&ast);
        let reparsed = parse(&printed).unwrap();
        assert_eq!(reparsed.positionless(), ast.positionless(), "{printed}");
        (ast, printed)
    }

    #[test]
    fn canonical_layout() {
        let (_, printed) = roundtrip(
            "workflow \"w\" scope (worker) { state a initial; state b final; var seen: bool; timer lapse = 500 ms; create on room_enter(worker, room); on room_exit(worker, room) when seen: a -> b alert \"r\"; }",
        );
        let expected = "workflow \"w\" scope (worker) {\n  state a initial;\n  state b final;\n  var seen: bool;\n  timer lapse = 500 ms;\n  create on room_enter(worker, room);\n  on room_exit(worker, room) when seen: a -> b alert \"r\" severity notice;\n}\n";
        assert_eq!(printed, expected);
    }

    #[test]
    fn printing_is_a_fixed_point() {
        let (ast, printed) = roundtrip(
            "workflow \"w\" scope (worker) { state a initial final; create on room_enter(worker); on timeout(lapse): a -> a start lapse cancel lapse; timer lapse = 1 ms; }",
        );
        let again = print(&parse(&printed).unwrap());
        assert_eq!(printed, again);
        assert_eq!(ast.timers.len(), 1);
    }

    #[test]
    fn guard_parentheses_are_minimal() {
        let (_, printed) = roundtrip(
            "workflow \"w\" scope (worker) { state a initial final; var p: bool; var q: bool; var r: bool; create on room_enter(worker); on room_exit(worker) when (p or q) and not (q or r): a -> a; }",
        );
        assert!(printed.contains("when (p or q) and not (q or r):"), "{printed}");

        let (_, printed) = roundtrip(
            "workflow \"w\" scope (worker) { state a initial final; var p: bool; var q: bool; var r: bool; create on room_enter(worker); on room_exit(worker) when p or (q and r): a -> a; }",
        );
        // Redundant parentheses around the tighter operand are dropped.
        assert!(printed.contains("when p or q and r:"), "{printed}");
    }

    #[test]
    fn redundant_parens_around_comparisons_are_dropped() {
        // 'not' binds looser than comparisons, so the source parens add
        // nothing and the canonical form omits them.
        let (_, printed) = roundtrip(
            "workflow \"w\" scope (worker) { state a initial final; var t0: timestamp; create on room_enter(worker); on room_exit(worker) when not (elapsed_since(t0) >= 40000): a -> a mark t0; }",
        );
        assert!(printed.contains("when not elapsed_since(t0) >= 40000:"), "{printed}");
    }

    #[test]
    fn bind_and_id_comparisons_print() {
        let (_, printed) = roundtrip(
            "workflow \"w\" scope (worker) { state a initial final; var last: id; create on room_enter(worker); on bed_proximity_start(worker, room, bed) when bed != last: a -> a bind last = bed; }",
        );
        assert!(printed.contains("when bed != last: a -> a bind last = bed;"), "{printed}");
    }
}
