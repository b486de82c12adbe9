use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Int(i64),
    Ident(String),
    KwInt,
    KwVoid,
    KwFor,
    KwWhile,
    KwIf,
    KwElse,
    KwBreak,
    KwContinue,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    PlusAssign,
    MinusAssign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    PlusPlus,
    MinusMinus,
    Amp,
    AndAnd,
    OrOr,
    Bang,
    EqEq,
    NotEq,
    Lt,
    Gt,
    Le,
    Ge,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        let s = match self {
            Tok::Int(n) => return format!("number {}", n),
            Tok::Ident(name) => return format!("'{}'", name),
            Tok::KwInt => "'int'",
            Tok::KwVoid => "'void'",
            Tok::KwFor => "'for'",
            Tok::KwWhile => "'while'",
            Tok::KwIf => "'if'",
            Tok::KwElse => "'else'",
            Tok::KwBreak => "'break'",
            Tok::KwContinue => "'continue'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::LBracket => "'['",
            Tok::RBracket => "']'",
            Tok::Semi => "';'",
            Tok::Comma => "','",
            Tok::Assign => "'='",
            Tok::PlusAssign => "'+='",
            Tok::MinusAssign => "'-='",
            Tok::Plus => "'+'",
            Tok::Minus => "'-'",
            Tok::Star => "'*'",
            Tok::Slash => "'/'",
            Tok::Percent => "'%'",
            Tok::PlusPlus => "'++'",
            Tok::MinusMinus => "'--'",
            Tok::Amp => "'&'",
            Tok::AndAnd => "'&&'",
            Tok::OrOr => "'||'",
            Tok::Bang => "'!'",
            Tok::EqEq => "'=='",
            Tok::NotEq => "'!='",
            Tok::Lt => "'<'",
            Tok::Gt => "'>'",
            Tok::Le => "'<='",
            Tok::Ge => "'>='",
            Tok::Eof => "end of input",
        };
        s.to_string()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer { chars: source.chars().collect(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        lexer.skip_trivia()?;
        let span = lexer.span();
        let Some(c) = lexer.peek(0) else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            lexer.number(span)?
        } else if c.is_ascii_alphabetic() || c == '_' {
            lexer.word()
        } else {
            lexer.punct(span)?
        };
        out.push(Token { tok, span });
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn span(&self) -> Span {
        Span { line: self.line, col: self.col }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.span();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(ParseError::new(start, "unterminated comment")),
                        }
                    }
                }
                (Some('#'), _) if self.col == 1 => {
                    return Err(ParseError::new(
                        self.span(),
                        "preprocessor directives are not supported; V, P and D are built in",
                    ))
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok, ParseError> {
        let mut value: i64 = 0;
        while let Some(d) = self.peek(0).and_then(|c| c.to_digit(10)) {
            self.bump();
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(i64::from(d)))
                .ok_or_else(|| ParseError::new(span, "integer literal is too large"))?;
        }
        if self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ParseError::new(span, "malformed number"));
        }
        Ok(Tok::Int(value))
    }

    fn word(&mut self) -> Tok {
        let start = self.pos;
        while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        match word.as_str() {
            "int" => Tok::KwInt,
            "void" => Tok::KwVoid,
            "for" => Tok::KwFor,
            "while" => Tok::KwWhile,
            "if" => Tok::KwIf,
            "else" => Tok::KwElse,
            "break" => Tok::KwBreak,
            "continue" => Tok::KwContinue,
            _ => Tok::Ident(word),
        }
    }

    fn punct(&mut self, span: Span) -> Result<Tok, ParseError> {
        let c = self.bump().unwrap_or('\0');
        let next = self.peek(0);
        let (tok, consume_next) = match (c, next) {
            ('+', Some('+')) => (Tok::PlusPlus, true),
            ('+', Some('=')) => (Tok::PlusAssign, true),
            ('-', Some('-')) => (Tok::MinusMinus, true),
            ('-', Some('=')) => (Tok::MinusAssign, true),
            ('&', Some('&')) => (Tok::AndAnd, true),
            ('|', Some('|')) => (Tok::OrOr, true),
            ('=', Some('=')) => (Tok::EqEq, true),
            ('!', Some('=')) => (Tok::NotEq, true),
            ('<', Some('=')) => (Tok::Le, true),
            ('>', Some('=')) => (Tok::Ge, true),
            ('+', _) => (Tok::Plus, false),
            ('-', _) => (Tok::Minus, false),
            ('*', _) => (Tok::Star, false),
            ('/', _) => (Tok::Slash, false),
            ('%', _) => (Tok::Percent, false),
            ('&', _) => (Tok::Amp, false),
            ('!', _) => (Tok::Bang, false),
            ('=', _) => (Tok::Assign, false),
            ('<', _) => (Tok::Lt, false),
            ('>', _) => (Tok::Gt, false),
            ('(', _) => (Tok::LParen, false),
            (')', _) => (Tok::RParen, false),
            ('{', _) => (Tok::LBrace, false),
            ('}', _) => (Tok::RBrace, false),
            ('[', _) => (Tok::LBracket, false),
            (']', _) => (Tok::RBracket, false),
            (';', _) => (Tok::Semi, false),
            (',', _) => (Tok::Comma, false),
            _ => return Err(ParseError::new(span, format!("unexpected character '{}'", c))),
        };
        if consume_next {
            self.bump();
        }
        Ok(tok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_pointer_expression() {
        assert_eq!(
            toks("V(*(locations + i)); // go"),
            vec![
                Tok::Ident("V".into()),
                Tok::LParen,
                Tok::Star,
                Tok::LParen,
                Tok::Ident("locations".into()),
                Tok::Plus,
                Tok::Ident("i".into()),
                Tok::RParen,
                Tok::RParen,
                Tok::Semi,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn tracks_positions_across_comments() {
        let t = tokenize("/* a\n b */ int\n  x;").unwrap();
        assert_eq!(t[0].span, Span { line: 2, col: 7 });
        assert_eq!(t[1].span, Span { line: 3, col: 3 });
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("int x = 1 @ 2;").unwrap_err();
        assert_eq!((err.line, err.col), (1, 11));
        assert!(tokenize("/* open").is_err());
        assert!(tokenize("#include <stdio.h>").is_err());
        assert!(tokenize("int 9x;").is_err());
    }
}
