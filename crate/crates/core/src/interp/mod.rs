//! Interpreter for the C subset students write.
//!
//! [`compile`] lexes, parses and type-checks source text. [`execute`] runs the
//! result over a simulated flat memory and returns the ordered [`Command`]
//! trace produced by calls to the built-in functions `V`, `P` and `D`.
//!
//! Memory is a growable array of cells, one per `int`, pointer or function
//! pointer. Arrays occupy contiguous cells and every address step moves by one
//! cell.

pub mod ast;
mod check;
mod exec;
mod lexer;
mod parser;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use ast::{BaseType, CType, Span};
pub use check::Facts;
pub use exec::{MemoryImage, Pointer, Value};

use crate::game::Command;

/// The three game functions callable from student code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Intrinsic {
    Visit,
    Pick,
    Drop,
}

pub(crate) const INTRINSICS: [(&str, Intrinsic); 3] =
    [("V", Intrinsic::Visit), ("P", Intrinsic::Pick), ("D", Intrinsic::Drop)];

impl Intrinsic {
    pub fn by_name(name: &str) -> Option<Intrinsic> {
        INTRINSICS.iter().find(|(n, _)| *n == name).map(|&(_, f)| f)
    }

    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::Visit => "V",
            Intrinsic::Pick => "P",
            Intrinsic::Drop => "D",
        }
    }
}

/// A compile-time error: syntax or typing.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: error: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError { line: span.line, col: span.col, message: message.into() }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic { severity: Severity::Error, line: self.line, col: self.col, message: self.message.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecErrorKind {
    Runtime,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: error: {message}")]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
    /// Commands emitted before the failure.
    pub partial_trace: Vec<Command>,
    pub steps: u32,
}

impl ExecError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic { severity: Severity::Error, line: self.line, col: self.col, message: self.message.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Note,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Note => "note",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// Renders as `line:col: severity: message`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.severity, self.message)
    }
}

/// A compiled program.
#[derive(Clone, Debug)]
pub struct Program {
    source: String,
    stmts: Vec<ast::Stmt>,
    types: Vec<CType>,
    facts: Facts,
    warnings: Vec<Diagnostic>,
}

impl Program {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn statements(&self) -> &[ast::Stmt] {
        &self.stmts
    }

    pub fn facts(&self) -> Facts {
        self.facts
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    /// Static type of an expression, before array or function decay.
    pub fn type_of(&self, e: &ast::Expr) -> CType {
        self.types[e.id]
    }
}

pub fn compile(source: &str) -> Result<Program, ParseError> {
    let tokens = lexer::tokenize(source)?;
    let mut parser = parser::Parser::new(tokens);
    let stmts = parser.program()?;
    let mut checker = check::Checker::new(parser.expr_count());
    checker.program(&stmts)?;
    let facts = checker.facts;
    let warnings = core::mem::take(&mut checker.warnings);
    Ok(Program { source: String::from(source), stmts, types: checker.into_types(), facts, warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u32,
}

pub const DEFAULT_STEP_BUDGET: u32 = 10_000;

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: DEFAULT_STEP_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecResult {
    pub trace: Vec<Command>,
    /// Source position of the call that emitted each trace command.
    pub call_sites: Vec<Span>,
    /// Non-error diagnostics (compile warnings).
    pub diagnostics: Vec<Diagnostic>,
    pub steps: u32,
}

pub fn execute(program: &Program, limits: Limits) -> Result<ExecResult, ExecError> {
    let mut machine = exec::Machine::new(program, limits);
    machine.run()?;
    let steps = machine.steps();
    Ok(ExecResult { trace: machine.trace, call_sites: machine.call_sites, diagnostics: program.warnings.clone(), steps })
}

/// Compiles and runs `source` with the default step budget.
pub fn trace_of(source: &str) -> Result<Vec<Command>, TraceError> {
    let program = compile(source)?;
    Ok(execute(&program, Limits::default())?.trace)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Compile(#[from] ParseError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl TraceError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            TraceError::Compile(e) => e.to_diagnostic(),
            TraceError::Exec(e) => e.to_diagnostic(),
        }
    }
}

/// Pointer features a task can require of a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ConstraintTag {
    /// Declares a data pointer and dereferences it with unary `*`.
    #[cfg_attr(feature = "serde", serde(rename = "usesPointer"))]
    UsesPointer,
    /// Binary `+`/`-`, `++`/`--` or `+=`/`-=` on an address-typed operand.
    #[cfg_attr(feature = "serde", serde(rename = "usesPointerArithmetic"))]
    UsesPointerArithmetic,
    /// Declares an array or indexes with `[]`.
    #[cfg_attr(feature = "serde", serde(rename = "usesArray"))]
    UsesArray,
    /// Casts from or to a `void` pointer.
    #[cfg_attr(feature = "serde", serde(rename = "usesVoidCast"))]
    UsesVoidCast,
    /// Declares a pointer with two or more levels of data indirection.
    #[cfg_attr(feature = "serde", serde(rename = "usesDoubleIndirection"))]
    UsesDoubleIndirection,
    /// Declares a function pointer.
    #[cfg_attr(feature = "serde", serde(rename = "usesFunctionPointer"))]
    UsesFunctionPointer,
}

impl ConstraintTag {
    pub const ALL: [ConstraintTag; 6] = [
        ConstraintTag::UsesPointer,
        ConstraintTag::UsesPointerArithmetic,
        ConstraintTag::UsesArray,
        ConstraintTag::UsesVoidCast,
        ConstraintTag::UsesDoubleIndirection,
        ConstraintTag::UsesFunctionPointer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintTag::UsesPointer => "usesPointer",
            ConstraintTag::UsesPointerArithmetic => "usesPointerArithmetic",
            ConstraintTag::UsesArray => "usesArray",
            ConstraintTag::UsesVoidCast => "usesVoidCast",
            ConstraintTag::UsesDoubleIndirection => "usesDoubleIndirection",
            ConstraintTag::UsesFunctionPointer => "usesFunctionPointer",
        }
    }

    /// Short requirement phrase shown to students.
    pub fn requirement(self) -> &'static str {
        match self {
            ConstraintTag::UsesPointer => "declare a pointer and dereference it",
            ConstraintTag::UsesPointerArithmetic => "use pointer arithmetic",
            ConstraintTag::UsesArray => "use an array",
            ConstraintTag::UsesVoidCast => "cast a void pointer",
            ConstraintTag::UsesDoubleIndirection => "use a double or triple pointer",
            ConstraintTag::UsesFunctionPointer => "call through a function pointer",
        }
    }

    pub fn holds(self, facts: &Facts) -> bool {
        match self {
            ConstraintTag::UsesPointer => facts.declares_pointer && facts.dereferences,
            ConstraintTag::UsesPointerArithmetic => facts.pointer_arithmetic,
            ConstraintTag::UsesArray => facts.declares_array || facts.indexes,
            ConstraintTag::UsesVoidCast => facts.void_cast,
            ConstraintTag::UsesDoubleIndirection => facts.double_indirection,
            ConstraintTag::UsesFunctionPointer => facts.function_pointer,
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown constraint tag '{0}'")]
pub struct UnknownTag(pub String);

impl FromStr for ConstraintTag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstraintTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownTag(String::from(s)))
    }
}

/// Decides each requested tag syntactically.
pub fn check_constraints<'a>(
    program: &Program,
    tags: impl IntoIterator<Item = &'a ConstraintTag>,
) -> BTreeMap<ConstraintTag, bool> {
    tags.into_iter().map(|&t| (t, t.holds(&program.facts))).collect()
}

/// Like [`check_constraints`], for tag names coming from text.
pub fn check_constraint_names(program: &Program, names: &[&str]) -> Result<BTreeMap<ConstraintTag, bool>, UnknownTag> {
    let tags = names.iter().map(|n| n.parse()).collect::<Result<Vec<ConstraintTag>, _>>()?;
    Ok(check_constraints(program, &tags))
}

#[cfg(test)]
mod tests;
