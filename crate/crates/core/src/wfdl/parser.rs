//! Recursive-descent parser for workflow definitions.
//!
//! Grammar (EBNF):
//!
//! ```text
//! workflow   = "workflow" STRING "scope" "(" ident { "," ident } ")" "{" { item } "}" ;
//! item       = "state" ident [ "initial" ] [ "final" ] ";"
//!            | "var" ident ":" ( "bool" | "timestamp" | "id" ) ";"
//!            | "timer" ident "=" INT "ms" ";"
//!            | "create" "on" eventpat ";"
//!            | "on" ( eventpat | "timeout" "(" ident ")" ) [ "when" guard ]
//!                ":" ident "->" ident { action } ";" ;
//! eventpat   = ident "(" [ ident { "," ident } ] ")" ;
//! action     = "alert" STRING [ "severity" ident ]
//!            | "set" ident | "clear" ident | "mark" ident
//!            | "bind" ident "=" ident
//!            | "start" ident | "cancel" ident ;
//! guard      = and_expr { "or" and_expr } ;
//! and_expr   = not_expr { "and" not_expr } ;
//! not_expr   = "not" not_expr | cmp_expr ;
//! cmp_expr   = atom [ ( "<" | "<=" | "==" | "!=" | ">=" | ">" ) atom ] ;
//! atom       = "true" | "false" | INT | ident
//!            | "elapsed_since" "(" ident ")" | "(" guard ")" ;
//! ```
//!
//! The parser stops at the first error and reports its source position.
//! An `alert` action without an explicit severity defaults to `notice`.

use super::ast::*;
use super::lexer::{is_keyword, tokenize, Token, TokenKind};
use super::{ErrorKind, ParseError};

pub fn parse(source: &str) -> Result<WorkflowAst, ParseError> {
    let tokens = tokenize(source)?;
    Parser { tokens, at: 0 }.workflow()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let token = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        token
    }

    fn error(&self, pos: Pos, message: String) -> ParseError {
        ParseError {
            line: pos.line,
            column: pos.column,
            kind: ErrorKind::Syntactic,
            message,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let token = self.peek();
        self.error(
            token.pos,
            format!("expected {expected}, found {}", token.kind.describe()),
        )
    }

    /// Consumes the keyword `word` (stored as an identifier token).
    fn expect_keyword(&mut self, word: &str) -> Result<Pos, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(name) if name == word => Ok(self.next().pos),
            _ => Err(self.unexpected(&format!("'{word}'"))),
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(name) if name == word)
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.at_keyword(word) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(name) if !is_keyword(name) => {
                let name = name.clone();
                let pos = self.next().pos;
                Ok((name, pos))
            }
            TokenKind::Ident(name) => {
                let pos = self.peek().pos;
                Err(self.error(pos, format!("{name:?} is a reserved word, expected {what}")))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect(&mut self, kind: TokenKind, describe: &str) -> Result<Pos, ParseError> {
        if self.peek().kind == kind {
            Ok(self.next().pos)
        } else {
            Err(self.unexpected(describe))
        }
    }

    fn workflow(&mut self) -> Result<WorkflowAst, ParseError> {
        self.expect_keyword("workflow")?;
        let name = match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                self.next();
                s
            }
            _ => return Err(self.unexpected("workflow name string")),
        };
        self.expect_keyword("scope")?;
        self.expect(TokenKind::LParen, "'('")?;
        let mut scope_fields = vec![self.expect_ident("scope field")?.0];
        while self.peek().kind == TokenKind::Comma {
            self.next();
            scope_fields.push(self.expect_ident("scope field")?.0);
        }
        self.expect(TokenKind::RParen, "')'")?;
        self.expect(TokenKind::LBrace, "'{'")?;

        let mut states = Vec::new();
        let mut variables = Vec::new();
        let mut timers = Vec::new();
        let mut transitions = Vec::new();
        let mut create_pattern: Option<EventPattern> = None;

        loop {
            if self.peek().kind == TokenKind::RBrace {
                let close = self.next().pos;
                self.expect(TokenKind::Eof, "end of input")?;
                let create_pattern = create_pattern.ok_or_else(|| {
                    self.error(close, "missing create declaration".into())
                })?;
                return Ok(WorkflowAst {
                    name,
                    scope_fields,
                    create_pattern,
                    states,
                    variables,
                    timers,
                    transitions,
                });
            }
            if self.eat_keyword("state") {
                let (name, pos) = self.expect_ident("state name")?;
                let is_initial = self.eat_keyword("initial");
                let is_final = self.eat_keyword("final");
                self.expect(TokenKind::Semi, "';'")?;
                states.push(StateDecl { name, is_initial, is_final, pos });
            } else if self.eat_keyword("var") {
                let (name, pos) = self.expect_ident("variable name")?;
                self.expect(TokenKind::Colon, "':'")?;
                let ty = if self.eat_keyword("bool") {
                    VarType::Bool
                } else if self.eat_keyword("timestamp") {
                    VarType::Timestamp
                } else if self.eat_keyword("id") {
                    VarType::Id
                } else {
                    return Err(self.unexpected("'bool', 'timestamp' or 'id'"));
                };
                self.expect(TokenKind::Semi, "';'")?;
                variables.push(VarDecl { name, ty, pos });
            } else if self.eat_keyword("timer") {
                let (name, pos) = self.expect_ident("timer name")?;
                self.expect(TokenKind::Assign, "'='")?;
                let duration_ms = match self.peek().kind {
                    TokenKind::Int(n) => {
                        self.next();
                        n
                    }
                    _ => return Err(self.unexpected("duration in milliseconds")),
                };
                self.expect_keyword("ms")?;
                self.expect(TokenKind::Semi, "';'")?;
                timers.push(TimerDecl { name, duration_ms, pos });
            } else if self.at_keyword("create") {
                let pos = self.next().pos;
                self.expect_keyword("on")?;
                let pattern = self.event_pattern()?;
                self.expect(TokenKind::Semi, "';'")?;
                if create_pattern.is_some() {
                    return Err(self.error(pos, "duplicate create declaration".into()));
                }
                create_pattern = Some(pattern);
            } else if self.at_keyword("on") {
                let pos = self.next().pos;
                transitions.push(self.transition(pos)?);
            } else {
                return Err(self.unexpected(
                    "'state', 'var', 'timer', 'create', 'on' or '}'",
                ));
            }
        }
    }

    fn event_pattern(&mut self) -> Result<EventPattern, ParseError> {
        let (kind, pos) = self.expect_ident("event kind")?;
        self.expect(TokenKind::LParen, "'('")?;
        let mut args = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            args.push(self.expect_ident("attribute name")?.0);
            while self.peek().kind == TokenKind::Comma {
                self.next();
                args.push(self.expect_ident("attribute name")?.0);
            }
        }
        self.expect(TokenKind::RParen, "')'")?;
        Ok(EventPattern { kind, args, pos })
    }

    fn transition(&mut self, pos: Pos) -> Result<TransitionDecl, ParseError> {
        let trigger = if self.at_keyword("timeout") {
            self.next();
            self.expect(TokenKind::LParen, "'('")?;
            let (timer, _) = self.expect_ident("timer name")?;
            self.expect(TokenKind::RParen, "')'")?;
            TransitionTrigger::Timeout { timer }
        } else {
            TransitionTrigger::Event(self.event_pattern()?)
        };
        let guard = if self.eat_keyword("when") {
            Some(self.guard()?)
        } else {
            None
        };
        self.expect(TokenKind::Colon, "':'")?;
        let (from_state, _) = self.expect_ident("source state")?;
        self.expect(TokenKind::Arrow, "'->'")?;
        let (to_state, _) = self.expect_ident("target state")?;
        let mut actions = Vec::new();
        while self.peek().kind != TokenKind::Semi {
            actions.push(self.action()?);
        }
        self.expect(TokenKind::Semi, "';'")?;
        Ok(TransitionDecl { trigger, guard, from_state, to_state, actions, pos })
    }

    fn action(&mut self) -> Result<ActionDecl, ParseError> {
        if self.eat_keyword("alert") {
            let rule = match &self.peek().kind {
                TokenKind::Str(s) => {
                    let s = s.clone();
                    self.next();
                    s
                }
                _ => return Err(self.unexpected("alert rule string")),
            };
            let severity = if self.eat_keyword("severity") {
                self.expect_ident("severity name")?.0
            } else {
                "notice".to_string()
            };
            Ok(ActionDecl::Alert { rule, severity })
        } else if self.eat_keyword("set") {
            Ok(ActionDecl::Set(self.expect_ident("variable name")?.0))
        } else if self.eat_keyword("clear") {
            Ok(ActionDecl::Clear(self.expect_ident("variable name")?.0))
        } else if self.eat_keyword("mark") {
            Ok(ActionDecl::Mark(self.expect_ident("variable name")?.0))
        } else if self.eat_keyword("bind") {
            let (var, _) = self.expect_ident("variable name")?;
            self.expect(TokenKind::Assign, "'='")?;
            let (attr, _) = self.expect_ident("attribute name")?;
            Ok(ActionDecl::Bind { var, attr })
        } else if self.eat_keyword("start") {
            Ok(ActionDecl::StartTimer(self.expect_ident("timer name")?.0))
        } else if self.eat_keyword("cancel") {
            Ok(ActionDecl::CancelTimer(self.expect_ident("timer name")?.0))
        } else {
            Err(self.unexpected("an action or ';'"))
        }
    }

    fn guard(&mut self) -> Result<GuardExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = GuardExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<GuardExpr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.eat_keyword("and") {
            let rhs = self.not_expr()?;
            lhs = GuardExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<GuardExpr, ParseError> {
        if self.eat_keyword("not") {
            Ok(GuardExpr::Not(Box::new(self.not_expr()?)))
        } else {
            self.cmp_expr()
        }
    }

    fn cmp_expr(&mut self) -> Result<GuardExpr, ParseError> {
        let lhs = self.atom()?;
        let op = match self.peek().kind {
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::Le => CmpOp::Le,
            TokenKind::EqEq => CmpOp::Eq,
            TokenKind::Ne => CmpOp::Ne,
            TokenKind::Ge => CmpOp::Ge,
            TokenKind::Gt => CmpOp::Gt,
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.atom()?;
        Ok(GuardExpr::Cmp { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn atom(&mut self) -> Result<GuardExpr, ParseError> {
        if self.eat_keyword("true") {
            return Ok(GuardExpr::Bool(true));
        }
        if self.eat_keyword("false") {
            return Ok(GuardExpr::Bool(false));
        }
        if self.eat_keyword("elapsed_since") {
            self.expect(TokenKind::LParen, "'('")?;
            let (var, _) = self.expect_ident("timestamp variable")?;
            self.expect(TokenKind::RParen, "')'")?;
            return Ok(GuardExpr::ElapsedSince(var));
        }
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.next();
                Ok(GuardExpr::Int(n))
            }
            TokenKind::LParen => {
                self.next();
                let inner = self.guard()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            _ => {
                let (name, _) = self.expect_ident("a guard expression")?;
                Ok(GuardExpr::Ident(name))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_workflow_parses() {
        let ast = parse(
            "workflow \"w\" scope (worker) { state a initial final; create on room_enter(worker, room); }",
        )
        .unwrap();
        assert_eq!(ast.name, "w");
        assert_eq!(ast.scope_fields, vec!["worker"]);
        assert_eq!(ast.states.len(), 1);
        assert!(ast.states[0].is_initial && ast.states[0].is_final);
        assert_eq!(ast.create_pattern.kind, "room_enter");
        assert_eq!(ast.create_pattern.args, vec!["worker", "room"]);
        assert!(ast.transitions.is_empty());
    }

    #[test]
    fn empty_source_reports_line_one_column_one() {
        let err = parse("").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
        assert_eq!(err.kind, ErrorKind::Syntactic);
    }

    #[test]
    fn missing_semicolon_points_at_offending_token() {
        let err = parse("workflow \"w\" scope (worker) {\n  state a initial final\n}").unwrap_err();
        assert_eq!((err.line, err.column), (3, 1));
        assert_eq!(err.kind, ErrorKind::Syntactic);
    }

    #[test]
    fn duplicate_create_is_rejected() {
        let err = parse(
            "workflow \"w\" scope (worker) {\n  state a initial final;\n  create on room_enter(worker);\n  create on room_exit(worker);\n}",
        )
        .unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("duplicate create"));
    }

    #[test]
    fn missing_create_is_rejected() {
        let err = parse("workflow \"w\" scope (worker) { state a initial final; }").unwrap_err();
        assert!(err.message.contains("missing create"));
    }

    #[test]
    fn transitions_parse_guards_and_actions() {
        let ast = parse(
            r#"workflow "w" scope (worker, room) {
  state a initial;
  state b final;
  var seen: bool;
  var last: id;
  var t0: timestamp;
  timer lapse = 1000 ms;
  create on room_enter(worker, room);
  on bed_proximity_start(worker, room, bed) when not seen and bed != last or elapsed_since(t0) >= 40000:
    a -> b alert "x.y" severity critical set seen bind last = bed mark t0 start lapse;
  on timeout(lapse): a -> b cancel lapse;
}"#,
        )
        .unwrap();
        assert_eq!(ast.transitions.len(), 2);
        let t = &ast.transitions[0];
        assert_eq!(t.actions.len(), 5);
        assert!(matches!(
            t.actions[0],
            ActionDecl::Alert { ref rule, ref severity } if rule == "x.y" && severity == "critical"
        ));
        // "or" binds loosest: (not seen and bed != last) or (elapsed >= 40000)
        assert!(matches!(t.guard, Some(GuardExpr::Or(_, _))));
        assert!(matches!(
            ast.transitions[1].trigger,
            TransitionTrigger::Timeout { ref timer } if timer == "lapse"
        ));
    }

    #[test]
    fn alert_severity_defaults_to_notice() {
        let ast = parse(
            "workflow \"w\" scope (worker) { state a initial final; create on room_enter(worker); on room_exit(worker): a -> a alert \"r\"; }",
        )
        .unwrap();
        assert!(matches!(
            ast.transitions[0].actions[0],
            ActionDecl::Alert { ref severity, .. } if severity == "notice"
        ));
    }

    #[test]
    fn reserved_word_cannot_name_a_state() {
        let err = parse("workflow \"w\" scope (worker) { state timer; create on room_enter(worker); }")
            .unwrap_err();
        assert!(err.message.contains("reserved"));
    }

    #[test]
    fn unexpected_item_keyword_is_reported() {
        let err = parse("workflow \"w\" scope (worker) { stote a; create on room_enter(worker); }")
            .unwrap_err();
        assert_eq!((err.line, err.column), (1, 31));
        assert!(err.message.contains("expected 'state'"));
    }
}
