//! Tree-walking evaluator over a flat cell memory.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;
use super::{ExecError, ExecErrorKind, Intrinsic, Limits, Program};
use crate::game::{Command, LocationId, SlotIndex};

/// A runtime value held in one memory cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Ptr(Pointer),
    Null,
    Func(Intrinsic),
}

/// An address into cell memory, carrying the bounds of the object it was
/// derived from so that out-of-object accesses can be reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pointer {
    pub cell: i64,
    pub base: usize,
    pub len: usize,
}

/// Cells and variable bindings for one execution.
#[derive(Debug, Default)]
pub struct MemoryImage {
    cells: Vec<Option<Value>>,
    scopes: Vec<Vec<(String, usize, CType)>>,
}

impl MemoryImage {
    pub fn cells(&self) -> &[Option<Value>] {
        &self.cells
    }

    fn allocate(&mut self, n: usize) -> usize {
        let start = self.cells.len();
        self.cells.resize(start + n, None);
        start
    }

    fn lookup(&self, name: &str) -> Option<(usize, CType)> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.iter().rev().find(|(n, ..)| n == name))
            .map(|&(_, cell, ty)| (cell, ty))
    }
}

enum Flow {
    Normal,
    Break,
    Continue,
}

type Exec<T> = Result<T, ExecError>;

pub(crate) struct Machine<'p> {
    program: &'p Program,
    memory: MemoryImage,
    pub(crate) trace: Vec<Command>,
    pub(crate) call_sites: Vec<Span>,
    steps: u32,
    limits: Limits,
}

impl<'p> Machine<'p> {
    pub(crate) fn new(program: &'p Program, limits: Limits) -> Self {
        Machine { program, memory: MemoryImage::default(), trace: Vec::new(), call_sites: Vec::new(), steps: 0, limits }
    }

    pub(crate) fn steps(&self) -> u32 {
        self.steps
    }

    fn fail(&self, span: Span, kind: ExecErrorKind, message: impl Into<String>) -> ExecError {
        ExecError {
            kind,
            line: span.line,
            col: span.col,
            message: message.into(),
            partial_trace: self.trace.clone(),
            steps: self.steps,
        }
    }

    fn runtime(&self, span: Span, message: impl Into<String>) -> ExecError {
        self.fail(span, ExecErrorKind::Runtime, message)
    }

    fn tick(&mut self, span: Span) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            let message = format!("step budget of {} exhausted; is there a loop that never ends?", self.limits.max_steps);
            return Err(self.fail(span, ExecErrorKind::BudgetExceeded, message));
        }
        Ok(())
    }

    pub(crate) fn run(&mut self) -> Exec<()> {
        let program = self.program;
        self.memory.scopes.push(Vec::new());
        for s in &program.stmts {
            match self.stmt(s)? {
                Flow::Normal => {}
                // the checker rejects break/continue outside loops
                Flow::Break | Flow::Continue => break,
            }
        }
        Ok(())
    }

    fn with_scope<T>(&mut self, f: impl FnOnce(&mut Self) -> Exec<T>) -> Exec<T> {
        let mark = self.memory.cells.len();
        self.memory.scopes.push(Vec::new());
        let r = f(self);
        self.memory.scopes.pop();
        self.memory.cells.truncate(mark);
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Exec<Flow> {
        self.tick(s.span)?;
        match &s.kind {
            StmtKind::Decl(decls) => {
                for d in decls {
                    self.declare(d)?;
                }
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => self.eval(e).map(|_| Flow::Normal),
            StmtKind::Block(body) => self.with_scope(|m| {
                for s in body {
                    match m.stmt(s)? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                }
                Ok(Flow::Normal)
            }),
            StmtKind::If { cond, then, otherwise } => {
                if self.truthy(cond)? {
                    self.stmt(then)
                } else if let Some(o) = otherwise {
                    self.stmt(o)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                loop {
                    self.tick(cond.span)?;
                    if !self.truthy(cond)? {
                        break;
                    }
                    if let Flow::Break = self.stmt(body)? {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::For { init, cond, step, body } => self.with_scope(|m| {
                if let Some(init) = init {
                    m.stmt(init)?;
                }
                loop {
                    m.tick(s.span)?;
                    if let Some(cond) = cond {
                        if !m.truthy(cond)? {
                            break;
                        }
                    }
                    if let Flow::Break = m.stmt(body)? {
                        break;
                    }
                    if let Some(step) = step {
                        m.eval(step)?;
                    }
                }
                Ok(Flow::Normal)
            }),
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Empty => Ok(Flow::Normal),
        }
    }

    fn declare(&mut self, d: &Declarator) -> Exec<()> {
        let count = d.ty.array_len.unwrap_or(1);
        let elem = d.ty.element();
        let start = self.memory.allocate(count);
        match &d.init {
            None => {}
            Some(Initializer::Expr(e)) => {
                let v = self.eval(e)?;
                self.memory.cells[start] = Some(coerce(v, elem));
            }
            Some(Initializer::List(items, _)) => {
                for (i, item) in items.iter().enumerate() {
                    let v = self.eval(item)?;
                    self.memory.cells[start + i] = Some(coerce(v, elem));
                }
                let zero = if elem.is_int() { Value::Int(0) } else { Value::Null };
                for cell in &mut self.memory.cells[start + items.len()..start + count] {
                    *cell = Some(zero);
                }
            }
        }
        // Bind after evaluating the initializer, so `int x = x;` sees an outer x.
        self.memory
            .scopes
            .last_mut()
            .expect("a scope is always open during execution")
            .push((d.name.clone(), start, d.ty));
        Ok(())
    }

    fn truthy(&mut self, e: &Expr) -> Exec<bool> {
        Ok(match self.eval(e)? {
            Value::Int(n) => n != 0,
            Value::Null => false,
            Value::Ptr(_) | Value::Func(_) => true,
        })
    }

    fn load(&self, span: Span, p: Pointer) -> Exec<Value> {
        let cell = self.check_access(span, p)?;
        self.memory.cells[cell]
            .ok_or_else(|| self.runtime(span, "reading a value that was never initialized"))
    }

    fn store(&mut self, span: Span, p: Pointer, v: Value) -> Exec<()> {
        let cell = self.check_access(span, p)?;
        self.memory.cells[cell] = Some(v);
        Ok(())
    }

    fn check_access(&self, span: Span, p: Pointer) -> Exec<usize> {
        let inside = p.cell >= p.base as i64 && p.cell < (p.base + p.len) as i64;
        if !inside {
            let offset = p.cell - p.base as i64;
            return Err(self.runtime(
                span,
                format!("pointer is {} elements past the start of an object of size {}; access is out of bounds", offset, p.len),
            ));
        }
        let cell = p.cell as usize;
        if cell >= self.memory.cells.len() {
            return Err(self.runtime(span, "dereferencing a pointer to a variable that no longer exists"));
        }
        Ok(cell)
    }

    fn as_pointer(&self, span: Span, v: Value) -> Exec<Pointer> {
        match v {
            Value::Ptr(p) => Ok(p),
            Value::Null | Value::Int(0) => Err(self.runtime(span, "dereferencing a NULL pointer")),
            _ => Err(self.runtime(span, "dereferencing something that is not a pointer")),
        }
    }

    fn as_int(&self, span: Span, v: Value) -> Exec<i64> {
        match v {
            Value::Int(n) => Ok(n),
            _ => Err(self.runtime(span, "expected an integer value")),
        }
    }

    /// Address of an lvalue expression.
    fn place(&mut self, e: &Expr) -> Exec<Pointer> {
        match &e.kind {
            ExprKind::Var(name) => {
                let (cell, ty) = self
                    .memory
                    .lookup(name)
                    .ok_or_else(|| self.runtime(e.span, format!("'{}' is not a variable", name)))?;
                Ok(Pointer { cell: cell as i64, base: cell, len: ty.array_len.unwrap_or(1) })
            }
            ExprKind::Unary(UnaryOp::Deref, inner) => {
                let v = self.eval(inner)?;
                self.as_pointer(e.span, v)
            }
            ExprKind::Index(base, index) => {
                let p = self.index_address(e.span, base, index)?;
                Ok(p)
            }
            _ => Err(self.runtime(e.span, "expression does not name a memory location")),
        }
    }

    fn index_address(&mut self, span: Span, base: &Expr, index: &Expr) -> Exec<Pointer> {
        let b = self.eval(base)?;
        let i = self.eval(index)?;
        let (p, n) = match (b, i) {
            (Value::Int(n), other) => (other, n),
            (other, Value::Int(n)) => (other, n),
            _ => return Err(self.runtime(span, "indexing needs a pointer and an integer")),
        };
        let p = self.as_pointer(span, p)?;
        self.offset(span, p, n)
    }

    fn offset(&self, span: Span, p: Pointer, n: i64) -> Exec<Pointer> {
        let cell = p.cell.checked_add(n).ok_or_else(|| self.runtime(span, "pointer arithmetic overflow"))?;
        Ok(Pointer { cell, ..p })
    }

    fn eval(&mut self, e: &Expr) -> Exec<Value> {
        match &e.kind {
            ExprKind::IntLit(n) => Ok(Value::Int(*n)),
            ExprKind::Var(name) => match self.memory.lookup(name) {
                Some((cell, ty)) if ty.is_array() => {
                    Ok(Value::Ptr(Pointer { cell: cell as i64, base: cell, len: ty.array_len.unwrap_or(1) }))
                }
                Some((cell, _)) => self.load(e.span, Pointer { cell: cell as i64, base: cell, len: 1 }),
                None => Intrinsic::by_name(name)
                    .map(Value::Func)
                    .ok_or_else(|| self.runtime(e.span, format!("'{}' is not declared", name))),
            },
            ExprKind::Unary(op, inner) => match op {
                UnaryOp::Neg => {
                    let n = self.eval(inner)?;
                    let n = self.as_int(e.span, n)?;
                    n.checked_neg().map(Value::Int).ok_or_else(|| self.runtime(e.span, "integer overflow"))
                }
                UnaryOp::Not => Ok(Value::Int(i64::from(!self.truthy(inner)?))),
                UnaryOp::AddrOf => {
                    if self.program.type_of(inner).is_function_designator() {
                        return self.eval(inner);
                    }
                    self.place(inner).map(Value::Ptr)
                }
                UnaryOp::Deref => {
                    if self.program.type_of(e).is_function_designator() {
                        return self.eval(inner);
                    }
                    let p = self.place(e)?;
                    self.read_place(e, p)
                }
            },
            ExprKind::Index(..) => {
                let p = self.place(e)?;
                self.read_place(e, p)
            }
            ExprKind::Step { delta, prefix, target } => {
                let p = self.place(target)?;
                let old = self.load(e.span, p)?;
                let new = self.add(e.span, old, *delta)?;
                self.store(e.span, p, new)?;
                Ok(if *prefix { new } else { old })
            }
            ExprKind::Binary(op, lhs, rhs) => self.binary(e.span, *op, lhs, rhs),
            ExprKind::Assign(op, target, value) => {
                let ty = self.program.type_of(target);
                let p = self.place(target)?;
                let v = self.eval(value)?;
                let new = match op {
                    AssignOp::Set => coerce(v, ty),
                    AssignOp::Add | AssignOp::Sub => {
                        let old = self.load(e.span, p)?;
                        let n = self.as_int(e.span, v)?;
                        let n = if *op == AssignOp::Sub { n.checked_neg().unwrap_or(i64::MAX) } else { n };
                        self.add(e.span, old, n)?
                    }
                };
                self.store(e.span, p, new)?;
                Ok(new)
            }
            ExprKind::Call(callee, args) => {
                let f = self.eval(callee)?;
                let arg = self.eval(&args[0])?;
                let arg = self.as_int(args[0].span, arg)?;
                match f {
                    Value::Func(intrinsic) => {
                        let cmd = self.intrinsic(e.span, intrinsic, arg)?;
                        self.trace.push(cmd);
                        self.call_sites.push(e.span);
                        Ok(Value::Int(0))
                    }
                    Value::Null | Value::Int(0) => Err(self.runtime(e.span, "calling through a NULL function pointer")),
                    _ => Err(self.runtime(e.span, "calling something that is not a function")),
                }
            }
            ExprKind::Cast(ty, inner) => {
                let v = self.eval(inner)?;
                Ok(coerce(v, *ty))
            }
        }
    }

    fn read_place(&mut self, e: &Expr, p: Pointer) -> Exec<Value> {
        self.load(e.span, p)
    }

    fn intrinsic(&self, span: Span, f: Intrinsic, arg: i64) -> Exec<Command> {
        let out_of_range = |what: &str, max: u8| {
            self.runtime(span, format!("{}({}) is out of range; {} must be between 0 and {}", f.name(), arg, what, max))
        };
        let small = u8::try_from(arg).ok();
        match f {
            Intrinsic::Visit => small
                .and_then(LocationId::new)
                .map(Command::Visit)
                .ok_or_else(|| out_of_range("a location", 15)),
            Intrinsic::Pick => small.and_then(SlotIndex::new).map(Command::Pick).ok_or_else(|| out_of_range("a slot index", 3)),
            Intrinsic::Drop => small.and_then(SlotIndex::new).map(Command::Drop).ok_or_else(|| out_of_range("a slot index", 3)),
        }
    }

    fn add(&self, span: Span, v: Value, n: i64) -> Exec<Value> {
        match v {
            Value::Int(a) => a.checked_add(n).map(Value::Int).ok_or_else(|| self.runtime(span, "integer overflow")),
            Value::Ptr(p) => self.offset(span, p, n).map(Value::Ptr),
            Value::Null => Err(self.runtime(span, "arithmetic on a NULL pointer")),
            Value::Func(_) => Err(self.runtime(span, "arithmetic on a function")),
        }
    }

    fn binary(&mut self, span: Span, op: BinOp, lhs: &Expr, rhs: &Expr) -> Exec<Value> {
        match op {
            BinOp::And => {
                let r = self.truthy(lhs)? && self.truthy(rhs)?;
                return Ok(Value::Int(i64::from(r)));
            }
            BinOp::Or => {
                let r = self.truthy(lhs)? || self.truthy(rhs)?;
                return Ok(Value::Int(i64::from(r)));
            }
            _ => {}
        }
        let l = self.eval(lhs)?;
        let r = self.eval(rhs)?;
        let overflow = || self.runtime(span, "integer overflow");
        match (op, l, r) {
            (BinOp::Add, Value::Int(a), Value::Int(b)) => a.checked_add(b).map(Value::Int).ok_or_else(overflow),
            (BinOp::Add, p @ Value::Ptr(_), Value::Int(n)) | (BinOp::Add, Value::Int(n), p @ Value::Ptr(_)) => self.add(span, p, n),
            (BinOp::Sub, Value::Int(a), Value::Int(b)) => a.checked_sub(b).map(Value::Int).ok_or_else(overflow),
            (BinOp::Sub, p @ Value::Ptr(_), Value::Int(n)) => self.add(span, p, n.checked_neg().ok_or_else(overflow)?),
            (BinOp::Sub, Value::Ptr(a), Value::Ptr(b)) => Ok(Value::Int(a.cell - b.cell)),
            (BinOp::Add | BinOp::Sub, Value::Null, _) | (BinOp::Add | BinOp::Sub, _, Value::Null) => {
                Err(self.runtime(span, "arithmetic on a NULL pointer"))
            }
            (BinOp::Mul, Value::Int(a), Value::Int(b)) => a.checked_mul(b).map(Value::Int).ok_or_else(overflow),
            (BinOp::Div | BinOp::Rem, Value::Int(_), Value::Int(0)) => Err(self.runtime(span, "division by zero")),
            (BinOp::Div, Value::Int(a), Value::Int(b)) => a.checked_div(b).map(Value::Int).ok_or_else(overflow),
            (BinOp::Rem, Value::Int(a), Value::Int(b)) => a.checked_rem(b).map(Value::Int).ok_or_else(overflow),
            (BinOp::Eq | BinOp::Ne, a, b) => {
                let same = identity(a, b) == identity(b, a);
                Ok(Value::Int(i64::from(same == (op == BinOp::Eq))))
            }
            (BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge, a, b) => {
                let (a, b) = match (a, b) {
                    (Value::Int(a), Value::Int(b)) => (a, b),
                    (Value::Ptr(a), Value::Ptr(b)) => (a.cell, b.cell),
                    _ => return Err(self.runtime(span, "comparing a NULL pointer")),
                };
                let r = match op {
                    BinOp::Lt => a < b,
                    BinOp::Gt => a > b,
                    BinOp::Le => a <= b,
                    _ => a >= b,
                };
                Ok(Value::Int(i64::from(r)))
            }
            _ => Err(self.runtime(span, format!("operator {} cannot be applied here", op.symbol()))),
        }
    }
}

#[derive(PartialEq)]
enum Identity {
    Int(i64),
    Cell(i64),
    Null,
    Func(Intrinsic),
}

/// What a value denotes for `==`, with a literal 0 compared against a
/// pointer standing for NULL.
fn identity(v: Value, other: Value) -> Identity {
    match v {
        Value::Int(0) if !matches!(other, Value::Int(_)) => Identity::Null,
        Value::Int(n) => Identity::Int(n),
        Value::Ptr(p) => Identity::Cell(p.cell),
        Value::Null => Identity::Null,
        Value::Func(f) => Identity::Func(f),
    }
}

/// Converts a value on store or cast: a literal 0 stored into a pointer
/// becomes NULL.
fn coerce(v: Value, target: CType) -> Value {
    match v {
        Value::Int(0) if target.is_pointer() => Value::Null,
        other => other,
    }
}
