//! Abstract syntax for workflow definitions.
//!
//! Declarations keep their source order, which matters: transition order
//! is the tie-breaker when several guarded transitions are enabled at once.
//! Every declaration carries the position of its first token so semantic
//! diagnostics can point back into the source.

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Pos {
        Pos { line, column }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowAst {
    pub name: String,
    pub scope_fields: Vec<String>,
    pub create_pattern: EventPattern,
    pub states: Vec<StateDecl>,
    pub variables: Vec<VarDecl>,
    pub timers: Vec<TimerDecl>,
    pub transitions: Vec<TransitionDecl>,
}

impl WorkflowAst {
    /// Copy with all source positions zeroed. Structural comparisons
    /// (round-trip tests in particular) go through this, since reprinting
    /// moves declarations to different lines.
    pub fn positionless(&self) -> WorkflowAst {
        let mut ast = self.clone();
        ast.create_pattern.pos = Pos::default();
        for s in &mut ast.states {
            s.pos = Pos::default();
        }
        for v in &mut ast.variables {
            v.pos = Pos::default();
        }
        for t in &mut ast.timers {
            t.pos = Pos::default();
        }
        for t in &mut ast.transitions {
            t.pos = Pos::default();
            if let TransitionTrigger::Event(p) = &mut t.trigger {
                p.pos = Pos::default();
            }
        }
        ast
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDecl {
    pub name: String,
    pub is_initial: bool,
    pub is_final: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarType {
    Bool,
    Timestamp,
    Id,
}

impl VarType {
    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Bool => "bool",
            VarType::Timestamp => "timestamp",
            VarType::Id => "id",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: VarType,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimerDecl {
    pub name: String,
    pub duration_ms: i64,
    pub pos: Pos,
}

/// `kind(attr, attr, ...)`: matches events of `kind` and binds the listed
/// attributes for use in guards and `bind` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPattern {
    pub kind: String,
    pub args: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionTrigger {
    Event(EventPattern),
    Timeout { timer: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDecl {
    pub trigger: TransitionTrigger,
    pub guard: Option<GuardExpr>,
    pub from_state: String,
    pub to_state: String,
    pub actions: Vec<ActionDecl>,
    pub pos: Pos,
}

impl TransitionDecl {
    /// Guard that can never be false: absent, or the literal `true`.
    pub fn guard_is_constant_true(&self) -> bool {
        matches!(self.guard, None | Some(GuardExpr::Bool(true)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionDecl {
    /// Emit an alert labelled `rule` at the given severity.
    Alert { rule: String, severity: String },
    /// Set a bool variable to true.
    Set(String),
    /// Reset a variable to its initial value (false / unset).
    Clear(String),
    /// Store the current timestamp into a timestamp variable.
    Mark(String),
    /// Store a bound event attribute into an id variable.
    Bind { var: String, attr: String },
    /// Arm a timer; its deadline is the current timestamp plus the
    /// declared duration.
    StartTimer(String),
    /// Disarm a timer if pending.
    CancelTimer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Boolean guard expression. Identifiers resolve to declared variables or
/// to attributes bound by the transition's event pattern; resolution and
/// type checking happen during validation.
#[derive(Debug, Clone, PartialEq)]
pub enum GuardExpr {
    Bool(bool),
    Int(i64),
    Ident(String),
    ElapsedSince(String),
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
    Cmp {
        op: CmpOp,
        lhs: Box<GuardExpr>,
        rhs: Box<GuardExpr>,
    },
}
