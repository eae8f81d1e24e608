//! Tokenizer for workflow definition sources.
//!
//! Identifiers are `[a-z_][a-z0-9_]*`, integers are decimal, strings are
//! double-quoted without escapes, and `#` starts a comment running to the
//! end of the line.

use super::ast::Pos;
use super::{ErrorKind, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Arrow,
    Assign,
    Lt,
    Le,
    EqEq,
    Ne,
    Ge,
    Gt,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("{name:?}"),
            TokenKind::Str(_) => "string literal".into(),
            TokenKind::Int(n) => format!("integer {n}"),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::Semi => "';'".into(),
            TokenKind::Colon => "':'".into(),
            TokenKind::Arrow => "'->'".into(),
            TokenKind::Assign => "'='".into(),
            TokenKind::Lt => "'<'".into(),
            TokenKind::Le => "'<='".into(),
            TokenKind::EqEq => "'=='".into(),
            TokenKind::Ne => "'!='".into(),
            TokenKind::Ge => "'>='".into(),
            TokenKind::Gt => "'>'".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

/// Words with grammatical meaning; rejected where an identifier is
/// expected so that misplaced syntax fails early with a clear position.
pub const KEYWORDS: &[&str] = &[
    "workflow", "scope", "state", "initial", "final", "var", "bool", "timestamp", "id", "timer",
    "ms", "create", "on", "timeout", "when", "alert", "severity", "set", "clear", "mark", "bind",
    "start", "cancel", "and", "or", "not", "true", "false", "elapsed_since",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line: u32 = 1;
    let mut column: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(c) = c {
                if c == '\n' {
                    line += 1;
                    column = 1;
                } else {
                    column += 1;
                }
            }
            c
        }};
    }

    loop {
        let pos = Pos::new(line, column);
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => {
                tokens.push(Token { kind: TokenKind::Eof, pos });
                return Ok(tokens);
            }
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            'a'..='z' | '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' {
                        word.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                tokens.push(Token { kind: TokenKind::Ident(word), pos });
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let value: i64 = digits.parse().map_err(|_| ParseError {
                    line: pos.line,
                    column: pos.column,
                    kind: ErrorKind::Lexical,
                    message: format!("integer literal {digits} is too large"),
                })?;
                tokens.push(Token { kind: TokenKind::Int(value), pos });
            }
            '"' => {
                bump!();
                let mut text = String::new();
                loop {
                    match chars.peek().copied() {
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\n') | None => {
                            return Err(ParseError {
                                line: pos.line,
                                column: pos.column,
                                kind: ErrorKind::Lexical,
                                message: "unterminated string literal".into(),
                            });
                        }
                        Some(c) => {
                            text.push(c);
                            bump!();
                        }
                    }
                }
                tokens.push(Token { kind: TokenKind::Str(text), pos });
            }
            '{' => { bump!(); tokens.push(Token { kind: TokenKind::LBrace, pos }); }
            '}' => { bump!(); tokens.push(Token { kind: TokenKind::RBrace, pos }); }
            '(' => { bump!(); tokens.push(Token { kind: TokenKind::LParen, pos }); }
            ')' => { bump!(); tokens.push(Token { kind: TokenKind::RParen, pos }); }
            ',' => { bump!(); tokens.push(Token { kind: TokenKind::Comma, pos }); }
            ';' => { bump!(); tokens.push(Token { kind: TokenKind::Semi, pos }); }
            ':' => { bump!(); tokens.push(Token { kind: TokenKind::Colon, pos }); }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('>') => {
                        bump!();
                        tokens.push(Token { kind: TokenKind::Arrow, pos });
                    }
                    _ => {
                        return Err(ParseError {
                            line: pos.line,
                            column: pos.column,
                            kind: ErrorKind::Lexical,
                            message: "expected '->' after '-'".into(),
                        });
                    }
                }
            }
            '=' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    tokens.push(Token { kind: TokenKind::EqEq, pos });
                } else {
                    tokens.push(Token { kind: TokenKind::Assign, pos });
                }
            }
            '!' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    tokens.push(Token { kind: TokenKind::Ne, pos });
                } else {
                    return Err(ParseError {
                        line: pos.line,
                        column: pos.column,
                        kind: ErrorKind::Lexical,
                        message: "expected '!=' after '!'".into(),
                    });
                }
            }
            '<' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    tokens.push(Token { kind: TokenKind::Le, pos });
                } else {
                    tokens.push(Token { kind: TokenKind::Lt, pos });
                }
            }
            '>' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    tokens.push(Token { kind: TokenKind::Ge, pos });
                } else {
                    tokens.push(Token { kind: TokenKind::Gt, pos });
                }
            }
            other => {
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    kind: ErrorKind::Lexical,
                    message: format!("illegal character {other:?}"),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_positions_across_lines() {
        let tokens = tokenize("state a;\n  var b: bool;").unwrap();
        let var = tokens.iter().find(|t| t.kind == TokenKind::Ident("var".into())).unwrap();
        assert_eq!((var.pos.line, var.pos.column), (2, 3));
    }

    #[test]
    fn illegal_character_reports_its_position() {
        let err = tokenize("state a;\nstate @b;").unwrap_err();
        assert_eq!((err.line, err.column), (2, 7));
        assert_eq!(err.kind, ErrorKind::Lexical);
    }

    #[test]
    fn uppercase_is_not_an_identifier_character() {
        let err = tokenize("state A;").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Lexical);
        assert_eq!((err.line, err.column), (1, 7));
    }

    #[test]
    fn unterminated_string_is_lexical_error() {
        let err = tokenize("workflow \"oops").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Lexical);
        assert_eq!((err.line, err.column), (1, 10));
    }

    #[test]
    fn comments_run_to_end_of_line() {
        let tokens = tokenize("# heading\non # trailing\n").unwrap();
        let kinds: Vec<_> = tokens.iter().map(|t| &t.kind).collect();
        assert_eq!(kinds.len(), 2); // "on" + EOF
        assert_eq!(*kinds[0], TokenKind::Ident("on".into()));
    }

    #[test]
    fn comparison_operators_lex_distinctly() {
        let tokens = tokenize("< <= == != >= > = ->").unwrap();
        let kinds: Vec<_> = tokens.into_iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Lt,
                TokenKind::Le,
                TokenKind::EqEq,
                TokenKind::Ne,
                TokenKind::Ge,
                TokenKind::Gt,
                TokenKind::Assign,
                TokenKind::Arrow,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn oversized_integer_is_rejected() {
        let err = tokenize("timer t = 99999999999999999999 ms;").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Lexical);
    }
}
