//! Workflow definition language: a small textual notation for the state
//! machines the monitoring engine executes.
//!
//! A definition names a workflow, lists the event attributes that key its
//! instances (the scope), declares states, variables and timers, gives the
//! event pattern that creates instances, and lists guarded transitions
//! with their actions. See the grammar in [`parser`] and the semantic
//! rules in [`validate`].
//!
//! The usual entry point is [`parse_and_validate`]; [`print`] renders a
//! definition back to canonical text.

pub mod ast;
pub mod corpus;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::WorkflowAst;
pub use parser::parse;
pub use printer::print;
pub use validate::{parse_and_validate, validate, ValidatedWorkflow};

/// Which stage of processing rejected the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The raw text could not be tokenized.
    Lexical,
    /// The token stream does not match the grammar.
    Syntactic,
    /// The definition parses but breaks a semantic rule.
    Semantic,
}

impl ErrorKind {
    fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Lexical => "lexical error",
            ErrorKind::Syntactic => "syntax error",
            ErrorKind::Semantic => "semantic error",
        }
    }
}

/// A rejected definition, with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub kind: ErrorKind,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.kind.as_str(), self.message)
    }
}

impl std::error::Error for ParseError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_includes_position_and_stage() {
        let e = ParseError {
            line: 3,
            column: 7,
            kind: ErrorKind::Syntactic,
            message: "expected ';'".into(),
        };
        assert_eq!(e.to_string(), "3:7: syntax error: expected ';'");
    }

    #[test]
    fn parse_and_validate_reports_parse_errors_as_a_single_entry() {
        let errors = parse_and_validate("workflow").unwrap_err();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].kind, ErrorKind::Syntactic);
    }

    #[test]
    fn parse_and_validate_accepts_a_complete_definition() {
        let v = parse_and_validate(
            "workflow \"demo\" scope (worker, room) {\n  state inside initial;\n  state out final;\n  create on room_enter(worker, room);\n  on room_exit(worker, room): inside -> out;\n}",
        )
        .unwrap();
        assert_eq!(v.ast.name, "demo");
        assert!(v.warnings.is_empty());
    }
}
