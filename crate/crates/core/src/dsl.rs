//! The pipe-delimited command wire format, e.g. `P2|V03|D1`.
//!
//! ```text
//! sequence ::= token ("|" token)*
//! token    ::= "P" digit | "D" digit | "V" digit digit
//! digit    ::= "0" | "1" | "2" | "3"
//! ```
//!
//! Visit tokens carry `<row><col>` grid coordinates; pick and drop tokens
//! carry a slot index. Whitespace around a token is ignored.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::game::{Command, LocationId, SlotIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    /// Malformed token. `position` is the zero-based token index.
    #[error("syntax error in command {position}: {reason}")]
    Syntax { position: usize, reason: SyntaxReason },
    #[error("command {position} uses a digit outside 0-3")]
    Range { position: usize },
    #[error("cannot serialize an empty program")]
    EmptyProgram,
}

impl DslError {
    pub fn position(&self) -> Option<usize> {
        match self {
            DslError::Syntax { position, .. } | DslError::Range { position } => Some(*position),
            DslError::EmptyProgram => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntaxReason {
    EmptyToken,
    UnknownCommand,
    WrongDigitCount,
    NotADigit,
}

impl core::fmt::Display for SyntaxReason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            SyntaxReason::EmptyToken => "empty command",
            SyntaxReason::UnknownCommand => "expected P, D or V",
            SyntaxReason::WrongDigitCount => "wrong number of digits",
            SyntaxReason::NotADigit => "expected a digit",
        })
    }
}

pub fn parse(text: &str) -> Result<Vec<Command>, DslError> {
    text.split('|').enumerate().map(|(position, token)| parse_token(position, token.trim())).collect()
}

fn parse_token(position: usize, token: &str) -> Result<Command, DslError> {
    let syntax = |reason| DslError::Syntax { position, reason };
    let mut chars = token.chars();
    let letter = chars.next().ok_or(syntax(SyntaxReason::EmptyToken))?;
    let digits = chars.as_str();
    let expected = match letter {
        'P' | 'D' => 1,
        'V' => 2,
        _ => return Err(syntax(SyntaxReason::UnknownCommand)),
    };
    if digits.chars().count() != expected {
        return Err(syntax(SyntaxReason::WrongDigitCount));
    }
    let mut values = [0u8; 2];
    for (i, c) in digits.chars().enumerate() {
        values[i] = c.to_digit(10).ok_or(syntax(SyntaxReason::NotADigit))? as u8;
    }
    // Every digit is checked for shape before any is checked for range, so a
    // token like "V4x" is a syntax error rather than a range error.
    let range = DslError::Range { position };
    match letter {
        'P' => SlotIndex::new(values[0]).map(Command::Pick).ok_or(range),
        'D' => SlotIndex::new(values[0]).map(Command::Drop).ok_or(range),
        _ => LocationId::from_coords(values[0], values[1]).map(Command::Visit).ok_or(range),
    }
}

/// Renders commands in canonical form, the inverse of [`parse`].
pub fn serialize(cmds: &[Command]) -> Result<String, DslError> {
    if cmds.is_empty() {
        return Err(DslError::EmptyProgram);
    }
    let mut out = String::with_capacity(cmds.len() * 4);
    for (i, cmd) in cmds.iter().enumerate() {
        if i > 0 {
            out.push('|');
        }
        // writing into a String cannot fail
        let _ = match cmd {
            Command::Pick(s) => write!(out, "P{}", s.get()),
            Command::Drop(s) => write!(out, "D{}", s.get()),
            Command::Visit(l) => write!(out, "V{}", l),
        };
    }
    Ok(out)
}
