use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

pub type ExprId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int,
    Void,
    /// The one function signature in the language, `void (int)`.
    Function,
}

/// A type in the C subset.
///
/// `indirection` counts pointer levels on top of `base`. A `Function` base at
/// indirection 0 is a function designator such as `V`; at indirection 1 it is
/// a function pointer. `array_len` marks a one-dimensional array whose
/// elements have the `base`/`indirection` type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CType {
    pub base: BaseType,
    pub indirection: u8,
    pub array_len: Option<usize>,
}

/// Deepest pointer nesting accepted in declarations and casts.
pub const MAX_INDIRECTION: u8 = 3;

impl CType {
    pub const INT: CType = CType::scalar(BaseType::Int, 0);
    pub const VOID: CType = CType::scalar(BaseType::Void, 0);
    pub const FUNCTION: CType = CType::scalar(BaseType::Function, 0);

    pub const fn scalar(base: BaseType, indirection: u8) -> Self {
        CType { base, indirection, array_len: None }
    }

    pub fn is_array(&self) -> bool {
        self.array_len.is_some()
    }

    pub fn element(&self) -> CType {
        CType { array_len: None, ..*self }
    }

    /// Array-to-pointer and function-to-pointer conversion.
    pub fn decay(&self) -> CType {
        if self.is_array() || *self == CType::FUNCTION {
            CType::scalar(self.base, self.indirection + 1)
        } else {
            *self
        }
    }

    pub fn is_int(&self) -> bool {
        *self == CType::INT
    }

    pub fn is_void(&self) -> bool {
        *self == CType::VOID
    }

    pub fn is_function_designator(&self) -> bool {
        *self == CType::FUNCTION
    }

    pub fn is_function_pointer(&self) -> bool {
        !self.is_array() && self.base == BaseType::Function && self.indirection == 1
    }

    /// Any pointer, including function pointers.
    pub fn is_pointer(&self) -> bool {
        !self.is_array() && self.indirection >= 1
    }

    /// A pointer to data (not to a function).
    pub fn is_object_pointer(&self) -> bool {
        self.is_pointer() && !self.is_function_pointer()
    }

    pub fn is_void_pointer(&self) -> bool {
        !self.is_array() && self.base == BaseType::Void && self.indirection == 1
    }

    /// Pointers that support `+`, `-`, `++`, `--` and indexing.
    pub fn supports_arithmetic(&self) -> bool {
        self.is_object_pointer() && !self.is_void_pointer()
    }

    /// Levels of pointer indirection to data, ignoring the function level.
    pub fn object_indirection(&self) -> u8 {
        match self.base {
            BaseType::Function => self.indirection.saturating_sub(1),
            _ => self.indirection,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.is_int() || self.is_pointer()
    }

    pub fn pointee(&self) -> Option<CType> {
        self.is_pointer().then(|| CType::scalar(self.base, self.indirection - 1))
    }

    pub fn pointer_to(&self) -> CType {
        CType::scalar(self.base, self.indirection + 1)
    }
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stars = |f: &mut fmt::Formatter<'_>, n: u8| (0..n).try_for_each(|_| f.write_str("*"));
        match self.base {
            BaseType::Function if self.indirection == 0 => f.write_str("void (int)")?,
            BaseType::Function => {
                f.write_str("void (")?;
                stars(f, self.indirection)?;
                f.write_str(")(int)")?;
            }
            base => {
                f.write_str(if base == BaseType::Int { "int" } else { "void" })?;
                stars(f, self.indirection)?;
            }
        }
        if let Some(n) = self.array_len {
            write!(f, "[{}]", n)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
    AddrOf,
    Deref,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub id: ExprId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    IntLit(i64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    /// `++`/`--`, prefix or postfix. `delta` is +1 or -1.
    Step { delta: i64, prefix: bool, target: Box<Expr> },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Assign(AssignOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Cast(CType, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Expr>, Span),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub ty: CType,
    pub init: Option<Initializer>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl(Vec<Declarator>),
    Expr(Expr),
    Block(Vec<Stmt>),
    If { cond: Expr, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Expr>, body: Box<Stmt> },
    Break,
    Continue,
    Empty,
}
