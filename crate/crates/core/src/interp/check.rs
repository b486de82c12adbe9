//! Static checks: name resolution, typing and the syntactic facts that
//! constraint tags are decided from.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ast::*;
use super::{Diagnostic, ParseError, Severity, INTRINSICS};

/// Syntactic features observed while checking a program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Facts {
    pub declares_pointer: bool,
    pub dereferences: bool,
    pub declares_array: bool,
    pub indexes: bool,
    pub pointer_arithmetic: bool,
    pub void_cast: bool,
    pub double_indirection: bool,
    pub function_pointer: bool,
}

struct Binding {
    name: String,
    ty: CType,
    span: Span,
    used: bool,
}

pub(crate) struct Checker {
    types: Vec<CType>,
    scopes: Vec<Vec<Binding>>,
    loop_depth: usize,
    pub(crate) facts: Facts,
    pub(crate) warnings: Vec<Diagnostic>,
}

type Check<T> = Result<T, ParseError>;

fn err<T>(span: Span, message: impl Into<String>) -> Check<T> {
    Err(ParseError::new(span, message))
}

fn is_null_constant(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::IntLit(0))
}

impl Checker {
    pub(crate) fn new(expr_count: usize) -> Self {
        Checker {
            types: vec![CType::INT; expr_count],
            scopes: vec![Vec::new()],
            loop_depth: 0,
            facts: Facts::default(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn into_types(self) -> Vec<CType> {
        self.types
    }

    pub(crate) fn program(&mut self, stmts: &[Stmt]) -> Check<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        self.pop_scope();
        self.warnings.sort_by_key(|d| (d.line, d.col));
        Ok(())
    }

    fn push_scope(&mut self) {
        self.scopes.push(Vec::new());
    }

    fn pop_scope(&mut self) {
        if let Some(scope) = self.scopes.pop() {
            for b in scope.into_iter().filter(|b| !b.used) {
                self.warnings.push(Diagnostic {
                    severity: Severity::Warning,
                    line: b.span.line,
                    col: b.span.col,
                    message: format!("variable '{}' is declared but never used", b.name),
                });
            }
        }
    }

    fn lookup(&mut self, name: &str) -> Option<CType> {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(b) = scope.iter_mut().rev().find(|b| b.name == name) {
                b.used = true;
                return Some(b.ty);
            }
        }
        INTRINSICS.iter().any(|(n, _)| *n == name).then_some(CType::FUNCTION)
    }

    fn stmt(&mut self, s: &Stmt) -> Check<()> {
        match &s.kind {
            StmtKind::Decl(decls) => decls.iter().try_for_each(|d| self.declare(d)),
            StmtKind::Expr(e) => self.expr(e).map(|_| ()),
            StmtKind::Block(body) => {
                self.push_scope();
                let r = body.iter().try_for_each(|s| self.stmt(s));
                self.pop_scope();
                r
            }
            StmtKind::If { cond, then, otherwise } => {
                self.condition(cond)?;
                self.stmt(then)?;
                otherwise.as_deref().map_or(Ok(()), |o| self.stmt(o))
            }
            StmtKind::While { cond, body } => {
                self.condition(cond)?;
                self.loop_body(body)
            }
            StmtKind::For { init, cond, step, body } => {
                self.push_scope();
                let r = (|| {
                    if let Some(init) = init {
                        self.stmt(init)?;
                    }
                    if let Some(cond) = cond {
                        self.condition(cond)?;
                    }
                    if let Some(step) = step {
                        self.expr(step)?;
                    }
                    self.loop_body(body)
                })();
                self.pop_scope();
                r
            }
            StmtKind::Break | StmtKind::Continue if self.loop_depth == 0 => {
                err(s.span, "'break' and 'continue' are only allowed inside a loop")
            }
            StmtKind::Break | StmtKind::Continue | StmtKind::Empty => Ok(()),
        }
    }

    fn loop_body(&mut self, body: &Stmt) -> Check<()> {
        self.loop_depth += 1;
        let r = self.stmt(body);
        self.loop_depth -= 1;
        r
    }

    fn condition(&mut self, cond: &Expr) -> Check<()> {
        let t = self.value(cond)?;
        if !t.is_scalar() {
            return err(cond.span, format!("a condition must be a number or pointer, not {}", t));
        }
        Ok(())
    }

    fn declare(&mut self, d: &Declarator) -> Check<()> {
        let ty = d.ty;
        if ty.element().is_void() {
            return err(d.span, format!("variable '{}' cannot have type void; did you mean void *?", d.name));
        }
        if self.scopes.last().is_some_and(|s| s.iter().any(|b| b.name == d.name)) {
            return err(d.span, format!("'{}' is already declared in this scope", d.name));
        }
        let elem = ty.element();
        if elem.is_function_pointer() || (elem.base == BaseType::Function && elem.indirection > 1) {
            self.facts.function_pointer = true;
        }
        if elem.is_object_pointer() {
            self.facts.declares_pointer = true;
        }
        if elem.object_indirection() >= 2 {
            self.facts.double_indirection = true;
        }
        if ty.is_array() {
            self.facts.declares_array = true;
        }
        match &d.init {
            None => {}
            Some(Initializer::Expr(e)) => {
                if ty.is_array() {
                    return err(e.span, format!("array '{}' must be initialized with a list like {{1, 2, 3}}", d.name));
                }
                self.assignable(ty, e, &d.name)?;
            }
            Some(Initializer::List(items, span)) => {
                let len = ty.array_len.ok_or_else(|| {
                    ParseError::new(*span, format!("'{}' is not an array; initialize it with a single value", d.name))
                })?;
                if items.len() > len {
                    return err(*span, format!("too many initializers for array '{}' of size {}", d.name, len));
                }
                for item in items {
                    self.assignable(elem, item, &d.name)?;
                }
            }
        }
        self.scopes
            .last_mut()
            .expect("scope stack is never empty while checking")
            .push(Binding { name: d.name.clone(), ty, span: d.span, used: false });
        Ok(())
    }

    /// Checks that `value` can be stored into an object of type `target`.
    fn assignable(&mut self, target: CType, value: &Expr, what: &str) -> Check<()> {
        let source = self.value(value)?;
        let ok = if target.is_int() {
            source.is_int()
        } else if target.is_function_pointer() {
            source == target || is_null_constant(value)
        } else if target.is_object_pointer() {
            source == target
                || is_null_constant(value)
                || (source.is_void_pointer())
                || (target.is_void_pointer() && source.is_object_pointer())
        } else {
            false
        };
        if ok {
            return Ok(());
        }
        let hint = if target.is_int() && source.is_pointer() {
            "; did you mean to dereference it with *?"
        } else if target.is_pointer() && source.is_int() {
            "; did you mean to take an address with &?"
        } else if source.is_void() {
            "; V, P and D do not return a value"
        } else {
            ""
        };
        err(value.span, format!("cannot store a value of type {} in '{}' of type {}{}", source, what, target, hint))
    }

    /// Type of an expression used as a value (after decay).
    fn value(&mut self, e: &Expr) -> Check<CType> {
        Ok(self.expr(e)?.decay())
    }

    fn operand(&mut self, e: &Expr) -> Check<CType> {
        let t = self.value(e)?;
        if t.is_void() {
            return err(e.span, "V, P and D do not return a value");
        }
        Ok(t)
    }

    fn is_lvalue(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Var(_) => !self.types[e.id].is_function_designator(),
            ExprKind::Unary(UnaryOp::Deref, _) => !self.types[e.id].is_function_designator(),
            ExprKind::Index(..) => true,
            _ => false,
        }
    }

    fn expr(&mut self, e: &Expr) -> Check<CType> {
        let t = self.expr_inner(e)?;
        self.types[e.id] = t;
        Ok(t)
    }

    fn expr_inner(&mut self, e: &Expr) -> Check<CType> {
        match &e.kind {
            ExprKind::IntLit(_) => Ok(CType::INT),
            ExprKind::Var(name) => self
                .lookup(name)
                .ok_or_else(|| ParseError::new(e.span, format!("'{}' is not declared", name))),
            ExprKind::Unary(op, inner) => self.unary(e, *op, inner),
            ExprKind::Step { target, .. } => {
                let t = self.expr(target)?;
                if !self.is_lvalue(target) || t.is_array() {
                    return err(e.span, "++ and -- need a variable or dereferenced location");
                }
                if t.is_int() {
                    Ok(t)
                } else if t.supports_arithmetic() {
                    self.facts.pointer_arithmetic = true;
                    Ok(t)
                } else {
                    err(e.span, format!("cannot increment a value of type {}{}", t, void_hint(t)))
                }
            }
            ExprKind::Binary(op, lhs, rhs) => self.binary(e, *op, lhs, rhs),
            ExprKind::Assign(op, target, value) => {
                let t = self.expr(target)?;
                if t.is_array() {
                    return err(e.span, "an array cannot be assigned; assign its elements or use a pointer");
                }
                if !self.is_lvalue(target) {
                    return err(target.span, "left side of assignment must be a variable or dereferenced location");
                }
                match op {
                    AssignOp::Set => {
                        let what = describe_target(target);
                        self.assignable(t, value, &what)?;
                    }
                    AssignOp::Add | AssignOp::Sub => {
                        let v = self.operand(value)?;
                        if t.supports_arithmetic() && v.is_int() {
                            self.facts.pointer_arithmetic = true;
                        } else if !(t.is_int() && v.is_int()) {
                            return err(e.span, format!("cannot add or subtract {} and {}{}", t, v, void_hint(t)));
                        }
                    }
                }
                Ok(t)
            }
            ExprKind::Index(base, index) => {
                self.facts.indexes = true;
                let b = self.operand(base)?;
                let i = self.operand(index)?;
                let ptr = if b.is_pointer() && i.is_int() {
                    b
                } else if i.is_pointer() && b.is_int() {
                    i
                } else {
                    return err(e.span, format!("cannot index a value of type {}", b));
                };
                if !ptr.supports_arithmetic() {
                    return err(e.span, format!("cannot index through {}{}", ptr, void_hint(ptr)));
                }
                Ok(ptr.pointee().unwrap_or(CType::INT))
            }
            ExprKind::Call(callee, args) => {
                let f = self.value(callee)?;
                if !f.is_function_pointer() {
                    return err(callee.span, format!("a value of type {} cannot be called", f));
                }
                if args.len() != 1 {
                    return err(e.span, format!("V, P and D take exactly one argument, found {}", args.len()));
                }
                let a = self.operand(&args[0])?;
                if !a.is_int() {
                    return err(args[0].span, format!("argument must be an int, found {}{}", a, deref_hint(a)));
                }
                Ok(CType::VOID)
            }
            ExprKind::Cast(target, inner) => {
                let source = self.operand(inner)?;
                let ok = (target.is_int() && source.is_int())
                    || (target.is_object_pointer() && source.is_object_pointer())
                    || (target.is_object_pointer() && is_null_constant(inner));
                if !ok {
                    return err(e.span, format!("cannot cast {} to {}", source, target));
                }
                if source.is_void_pointer() || (target.base == BaseType::Void && target.indirection >= 1) {
                    self.facts.void_cast = true;
                }
                Ok(*target)
            }
        }
    }

    fn unary(&mut self, e: &Expr, op: UnaryOp, inner: &Expr) -> Check<CType> {
        match op {
            UnaryOp::Neg => {
                let t = self.operand(inner)?;
                if !t.is_int() {
                    return err(e.span, format!("cannot negate a value of type {}", t));
                }
                Ok(CType::INT)
            }
            UnaryOp::Not => {
                let t = self.operand(inner)?;
                if !t.is_scalar() {
                    return err(e.span, format!("cannot apply ! to a value of type {}", t));
                }
                Ok(CType::INT)
            }
            UnaryOp::AddrOf => {
                let t = self.expr(inner)?;
                if t.is_function_designator() {
                    return Ok(t.decay());
                }
                if t.is_array() {
                    return err(e.span, "taking the address of a whole array is not supported; use the array name or &a[0]");
                }
                if !self.is_lvalue(inner) {
                    return err(e.span, "& needs a variable or element to take the address of");
                }
                if t.indirection >= MAX_INDIRECTION {
                    return err(e.span, "at most three levels of pointer indirection are supported");
                }
                Ok(t.pointer_to())
            }
            UnaryOp::Deref => {
                let t = self.value(inner)?;
                if t.is_void_pointer() {
                    return err(e.span, "cannot dereference a void pointer; cast it first, e.g. *(int *)p");
                }
                let Some(target) = t.pointee() else {
                    return err(e.span, format!("cannot dereference a value of type {}", t));
                };
                if !target.is_function_designator() {
                    self.facts.dereferences = true;
                }
                Ok(target)
            }
        }
    }

    fn binary(&mut self, e: &Expr, op: BinOp, lhs: &Expr, rhs: &Expr) -> Check<CType> {
        let l = self.operand(lhs)?;
        let r = self.operand(rhs)?;
        let mismatch = || {
            let hint = if l.is_void_pointer() || r.is_void_pointer() { void_hint(CType::scalar(BaseType::Void, 1)) } else { "" };
            err(e.span, format!("operator {} cannot combine {} and {}{}", op.symbol(), l, r, hint))
        };
        match op {
            BinOp::Add => {
                if l.is_int() && r.is_int() {
                    Ok(CType::INT)
                } else if l.supports_arithmetic() && r.is_int() {
                    self.facts.pointer_arithmetic = true;
                    Ok(l)
                } else if l.is_int() && r.supports_arithmetic() {
                    self.facts.pointer_arithmetic = true;
                    Ok(r)
                } else {
                    mismatch()
                }
            }
            BinOp::Sub => {
                if l.is_int() && r.is_int() {
                    Ok(CType::INT)
                } else if l.supports_arithmetic() && r.is_int() {
                    self.facts.pointer_arithmetic = true;
                    Ok(l)
                } else if l.supports_arithmetic() && l == r {
                    self.facts.pointer_arithmetic = true;
                    Ok(CType::INT)
                } else {
                    mismatch()
                }
            }
            BinOp::Mul | BinOp::Div | BinOp::Rem => {
                if l.is_int() && r.is_int() {
                    Ok(CType::INT)
                } else {
                    mismatch()
                }
            }
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                if (l.is_int() && r.is_int()) || (l.is_object_pointer() && l == r) {
                    Ok(CType::INT)
                } else {
                    mismatch()
                }
            }
            BinOp::Eq | BinOp::Ne => {
                let compatible = (l.is_int() && r.is_int())
                    || (l.is_pointer() && l == r)
                    || (l.is_object_pointer() && r.is_void_pointer())
                    || (l.is_void_pointer() && r.is_object_pointer())
                    || (l.is_pointer() && is_null_constant(rhs))
                    || (r.is_pointer() && is_null_constant(lhs));
                if compatible {
                    Ok(CType::INT)
                } else {
                    mismatch()
                }
            }
            BinOp::And | BinOp::Or => {
                if l.is_scalar() && r.is_scalar() {
                    Ok(CType::INT)
                } else {
                    mismatch()
                }
            }
        }
    }
}

fn void_hint(t: CType) -> &'static str {
    if t.is_void_pointer() {
        "; cast the void pointer to int * first"
    } else {
        ""
    }
}

fn deref_hint(t: CType) -> &'static str {
    if t.is_object_pointer() {
        "; did you mean to dereference it with *?"
    } else {
        ""
    }
}

fn describe_target(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var(name) => name.clone(),
        ExprKind::Unary(UnaryOp::Deref, _) => String::from("the dereferenced location"),
        _ => String::from("the array element"),
    }
}
