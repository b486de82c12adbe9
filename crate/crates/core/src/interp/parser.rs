//! Recursive-descent parser for the C subset.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{Tok, Token};
use super::ParseError;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_id: ExprId,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0, next_id: 0 }
    }

    pub(crate) fn expr_count(&self) -> usize {
        self.next_id
    }

    pub(crate) fn program(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        while self.peek() != &Tok::Eof {
            stmts.push(self.statement()?);
        }
        Ok(stmts)
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, context: &str) -> Result<Span, ParseError> {
        if self.peek() == &tok {
            Ok(self.advance().span)
        } else {
            Err(self.error(format!("expected {} {}, found {}", tok.describe(), context, self.peek().describe())))
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.span(), message)
    }

    fn ident(&mut self, context: &str) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.advance().span;
                Ok((name, span))
            }
            other => Err(self.error(format!("expected a name {}, found {}", context, other.describe()))),
        }
    }

    fn mk(&mut self, span: Span, kind: ExprKind) -> Expr {
        let id = self.next_id;
        self.next_id += 1;
        Expr { id, span, kind }
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        let kind = match self.peek() {
            Tok::KwInt | Tok::KwVoid => return self.declaration(),
            Tok::LBrace => {
                self.advance();
                let mut body = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    if self.peek() == &Tok::Eof {
                        return Err(self.error("missing '}' to close block"));
                    }
                    body.push(self.statement()?);
                }
                StmtKind::Block(body)
            }
            Tok::KwIf => {
                self.advance();
                self.expect(Tok::LParen, "after 'if'")?;
                let cond = self.expression()?;
                self.expect(Tok::RParen, "after the if condition")?;
                let then = Box::new(self.statement()?);
                let otherwise = if self.eat(&Tok::KwElse) { Some(Box::new(self.statement()?)) } else { None };
                StmtKind::If { cond, then, otherwise }
            }
            Tok::KwWhile => {
                self.advance();
                self.expect(Tok::LParen, "after 'while'")?;
                let cond = self.expression()?;
                self.expect(Tok::RParen, "after the loop condition")?;
                StmtKind::While { cond, body: Box::new(self.statement()?) }
            }
            Tok::KwFor => return self.for_loop(),
            Tok::KwBreak => {
                self.advance();
                self.expect(Tok::Semi, "after 'break'")?;
                StmtKind::Break
            }
            Tok::KwContinue => {
                self.advance();
                self.expect(Tok::Semi, "after 'continue'")?;
                StmtKind::Continue
            }
            Tok::Semi => {
                self.advance();
                StmtKind::Empty
            }
            _ => {
                let e = self.expression()?;
                self.expect(Tok::Semi, "after expression")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { span, kind })
    }

    fn for_loop(&mut self) -> Result<Stmt, ParseError> {
        let span = self.advance().span;
        self.expect(Tok::LParen, "after 'for'")?;
        let init = match self.peek() {
            Tok::Semi => {
                self.advance();
                None
            }
            Tok::KwInt | Tok::KwVoid => Some(Box::new(self.declaration()?)),
            _ => {
                let s = self.span();
                let e = self.expression()?;
                self.expect(Tok::Semi, "after the loop initializer")?;
                Some(Box::new(Stmt { span: s, kind: StmtKind::Expr(e) }))
            }
        };
        let cond = if self.peek() == &Tok::Semi { None } else { Some(self.expression()?) };
        self.expect(Tok::Semi, "after the loop condition")?;
        let step = if self.peek() == &Tok::RParen { None } else { Some(self.expression()?) };
        self.expect(Tok::RParen, "to close the loop header")?;
        let body = Box::new(self.statement()?);
        Ok(Stmt { span, kind: StmtKind::For { init, cond, step, body } })
    }

    fn base_type(&mut self) -> Result<BaseType, ParseError> {
        match self.advance().tok {
            Tok::KwInt => Ok(BaseType::Int),
            Tok::KwVoid => Ok(BaseType::Void),
            other => Err(ParseError::new(self.span(), format!("expected a type, found {}", other.describe()))),
        }
    }

    fn stars(&mut self) -> u8 {
        let mut n = 0u8;
        while self.eat(&Tok::Star) {
            n = n.saturating_add(1);
        }
        n
    }

    fn declaration(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        let base = self.base_type()?;
        let mut decls = Vec::new();
        loop {
            decls.push(self.init_declarator(base)?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Semi, "after declaration")?;
        Ok(Stmt { span, kind: StmtKind::Decl(decls) })
    }

    fn init_declarator(&mut self, base: BaseType) -> Result<Declarator, ParseError> {
        let stars = self.stars();
        let (name, span, ty) = if self.peek() == &Tok::LParen {
            self.function_pointer_declarator(base, stars)?
        } else {
            let (name, span) = self.ident("in declaration")?;
            if self.peek() == &Tok::LParen {
                return Err(ParseError::new(
                    span,
                    "function definitions are not supported; write statements at the top level",
                ));
            }
            let len = self.array_suffix()?;
            (name, span, CType { base, indirection: stars, array_len: len })
        };
        if ty.indirection > MAX_INDIRECTION {
            return Err(ParseError::new(span, "at most three levels of pointer indirection are supported"));
        }
        let init = if self.eat(&Tok::Assign) {
            if self.peek() == &Tok::LBrace {
                let open = self.advance().span;
                let mut items = Vec::new();
                while self.peek() != &Tok::RBrace {
                    items.push(self.assignment()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "to close the initializer list")?;
                Some(Initializer::List(items, open))
            } else {
                Some(Initializer::Expr(self.assignment()?))
            }
        } else {
            None
        };
        let mut ty = ty;
        if ty.array_len == Some(0) {
            match &init {
                Some(Initializer::List(items, _)) if !items.is_empty() => ty.array_len = Some(items.len()),
                _ => return Err(ParseError::new(span, format!("array '{}' needs a size or an initializer list", name))),
            }
        }
        Ok(Declarator { name, ty, init, span })
    }

    /// `(*name[n])(int)` after the base type and any leading stars.
    fn function_pointer_declarator(&mut self, base: BaseType, stars: u8) -> Result<(String, Span, CType), ParseError> {
        let open = self.advance().span;
        let inner = self.stars();
        if inner == 0 {
            return Err(ParseError::new(open, "expected '*' in function pointer declaration"));
        }
        let (name, span) = self.ident("in function pointer declaration")?;
        let len = self.array_suffix()?;
        self.expect(Tok::RParen, "after the function pointer name")?;
        self.expect(Tok::LParen, "to start the parameter list")?;
        self.parameter_list()?;
        if base != BaseType::Void || stars != 0 {
            return Err(ParseError::new(span, "function pointers must have the type void (*)(int), like V, P and D"));
        }
        Ok((name, span, CType { base: BaseType::Function, indirection: inner, array_len: len }))
    }

    fn parameter_list(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::KwInt && self.peek_at(1) != &Tok::Star {
            self.advance();
            if let Tok::Ident(_) = self.peek() {
                self.advance();
            }
            self.expect(Tok::RParen, "after the parameter list")?;
            Ok(())
        } else {
            Err(self.error("function pointers must take exactly one int parameter"))
        }
    }

    /// Returns `Some(0)` for `[]`, whose length comes from the initializer.
    fn array_suffix(&mut self) -> Result<Option<usize>, ParseError> {
        if !self.eat(&Tok::LBracket) {
            return Ok(None);
        }
        let len = match self.peek().clone() {
            Tok::Int(n) => {
                let span = self.advance().span;
                if n <= 0 || n > 4096 {
                    return Err(ParseError::new(span, "array size must be between 1 and 4096"));
                }
                n as usize
            }
            Tok::RBracket => 0,
            other => return Err(self.error(format!("array size must be a number, found {}", other.describe()))),
        };
        self.expect(Tok::RBracket, "after array size")?;
        if self.peek() == &Tok::LBracket {
            return Err(self.error("multi-dimensional arrays are not supported"));
        }
        Ok(Some(len))
    }

    // ---- expressions ----

    pub(crate) fn expression(&mut self) -> Result<Expr, ParseError> {
        let e = self.assignment()?;
        if self.peek() == &Tok::Comma {
            return Err(self.error("the comma operator is not supported"));
        }
        Ok(e)
    }

    fn assignment(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.binary(0)?;
        let op = match self.peek() {
            Tok::Assign => AssignOp::Set,
            Tok::PlusAssign => AssignOp::Add,
            Tok::MinusAssign => AssignOp::Sub,
            _ => return Ok(lhs),
        };
        let span = self.advance().span;
        let rhs = self.assignment()?;
        Ok(self.mk(span, ExprKind::Assign(op, Box::new(lhs), Box::new(rhs))))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let (op, prec) = match self.peek() {
                Tok::OrOr => (BinOp::Or, 1),
                Tok::AndAnd => (BinOp::And, 2),
                Tok::EqEq => (BinOp::Eq, 3),
                Tok::NotEq => (BinOp::Ne, 3),
                Tok::Lt => (BinOp::Lt, 4),
                Tok::Gt => (BinOp::Gt, 4),
                Tok::Le => (BinOp::Le, 4),
                Tok::Ge => (BinOp::Ge, 4),
                Tok::Plus => (BinOp::Add, 5),
                Tok::Minus => (BinOp::Sub, 5),
                Tok::Star => (BinOp::Mul, 6),
                Tok::Slash => (BinOp::Div, 6),
                Tok::Percent => (BinOp::Rem, 6),
                _ => return Ok(lhs),
            };
            if prec < min_prec {
                return Ok(lhs);
            }
            let span = self.advance().span;
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk(span, ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Minus => Some(UnaryOp::Neg),
            Tok::Bang => Some(UnaryOp::Not),
            Tok::Amp => Some(UnaryOp::AddrOf),
            Tok::Star => Some(UnaryOp::Deref),
            Tok::Plus => {
                self.advance();
                return self.unary();
            }
            Tok::PlusPlus | Tok::MinusMinus => {
                let delta = if self.advance().tok == Tok::PlusPlus { 1 } else { -1 };
                let target = Box::new(self.unary()?);
                return Ok(self.mk(span, ExprKind::Step { delta, prefix: true, target }));
            }
            Tok::LParen if matches!(self.peek_at(1), Tok::KwInt | Tok::KwVoid) => {
                self.advance();
                let base = self.base_type()?;
                let stars = self.stars();
                if self.peek() == &Tok::LParen {
                    return Err(self.error("casts to function pointer types are not supported"));
                }
                self.expect(Tok::RParen, "to close the cast")?;
                if stars > MAX_INDIRECTION {
                    return Err(ParseError::new(span, "at most three levels of pointer indirection are supported"));
                }
                let operand = Box::new(self.unary()?);
                return Ok(self.mk(span, ExprKind::Cast(CType::scalar(base, stars), operand)));
            }
            _ => None,
        };
        match op {
            Some(op) => {
                self.advance();
                let operand = Box::new(self.unary()?);
                Ok(self.mk(span, ExprKind::Unary(op, operand)))
            }
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            match self.peek() {
                Tok::LBracket => {
                    self.advance();
                    let index = self.expression()?;
                    self.expect(Tok::RBracket, "after index")?;
                    e = self.mk(span, ExprKind::Index(Box::new(e), Box::new(index)));
                }
                Tok::LParen => {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek() != &Tok::RParen {
                        loop {
                            args.push(self.assignment()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "after call arguments")?;
                    e = self.mk(e.span, ExprKind::Call(Box::new(e), args));
                }
                Tok::PlusPlus | Tok::MinusMinus => {
                    let delta = if self.advance().tok == Tok::PlusPlus { 1 } else { -1 };
                    e = self.mk(span, ExprKind::Step { delta, prefix: false, target: Box::new(e) });
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(self.mk(span, ExprKind::IntLit(n)))
            }
            Tok::Ident(name) => {
                self.advance();
                Ok(self.mk(span, ExprKind::Var(name)))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expression()?;
                self.expect(Tok::RParen, "to close the parenthesis")?;
                Ok(e)
            }
            other => Err(self.error(format!("expected an expression, found {}", other.describe()))),
        }
    }
}
