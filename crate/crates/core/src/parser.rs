//! Concrete syntax: class tables, expressions and capsule literals.
//!
//! ```text
//! program    := classdecl* ("main" expr ";")?
//! classdecl  := "class" Id "extends" Id "{" (fielddecl | methoddecl)* "}"
//! fielddecl  := Type Id ";"
//! methoddecl := Type Id "(" (Type Id ("," Type Id)*)? ")" "{" expr "}" ("corec" "{" expr "}")?
//! capsule    := value ("where" Id "=" value (";" Id "=" value)*)?
//! ```
//!
//! Expressions use the usual precedence: `?:` binds loosest, then one
//! non-associative comparison, then additive and multiplicative operators,
//! unary minus and finally postfix `.f` / `.m(args)`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ast::{name, BinOp, Expr, Name, OpenValue};
use crate::capsule::{Capsule, Environment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: BTreeSet<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.col)?;
        let exp: Vec<&str> = self.expected.iter().map(String::as_str).collect();
        match exp.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub ty: Name,
    pub name: Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub ret: Name,
    pub name: Name,
    pub params: Vec<(Name, Name)>,
    pub body: Expr,
    pub cobody: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: Name,
    pub superclass: Name,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceProgram {
    pub classes: Vec<ClassDecl>,
    pub main: Option<Expr>,
}

impl fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.classes {
            writeln!(f, "class {} extends {} {{", c.name, c.superclass)?;
            for fd in &c.fields {
                writeln!(f, "  {} {};", fd.ty, fd.name)?;
            }
            for m in &c.methods {
                let params: Vec<String> =
                    m.params.iter().map(|(t, x)| format!("{t} {x}")).collect();
                write!(
                    f,
                    "  {} {}({}) {{ {} }}",
                    m.ret,
                    m.name,
                    params.join(", "),
                    m.body
                )?;
                if let Some(co) = &m.cobody {
                    write!(f, " corec {{ {co} }}")?;
                }
                writeln!(f)?;
            }
            writeln!(f, "}}")?;
        }
        if let Some(e) = &self.main {
            writeln!(f, "main {e};")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 20] = [
    "==", "!=", "<=", ">=", "{", "}", "(", ")", ";", ",", ".", "?", ":", "+", "-", "*", "/", "%",
    "<", ">",
];
const EQUALS: &str = "=";

const KEYWORDS: [&str; 12] = [
    "class", "extends", "corec", "new", "this", "any", "if", "else", "true", "false", "main",
    "where",
];

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, found: String| ParseError {
        line,
        col,
        expected: BTreeSet::from(["token".to_string()]),
        found,
    };
    while i < chars.len() {
        let ch = chars[i];
        if ch == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if ch == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        }
        if ch.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<i64>()
                .map_err(|_| err(l0, c0, format!("integer `{text}` out of range")))?;
            out.push(Spanned {
                tok: Tok::Int(n),
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            i += sym.len();
            col += sym.len();
            out.push(Spanned {
                tok: Tok::Sym(sym),
                line: l0,
                col: c0,
            });
            continue;
        }
        if ch == '=' {
            i += 1;
            col += 1;
            out.push(Spanned {
                tok: Tok::Sym(EQUALS),
                line: l0,
                col: c0,
            });
            continue;
        }
        return Err(err(l0, c0, format!("character `{ch}`")));
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let s = &self.toks[self.pos];
        Err(ParseError {
            line: s.line,
            col: s.col,
            expected: expected.iter().map(|e| e.to_string()).collect(),
            found: s.tok.to_string(),
        })
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<()> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.error(&[&format!("`{sym}`")])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let n = name(s);
                self.bump();
                Ok(n)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn type_name(&mut self) -> PResult<Name> {
        self.ident().or_else(|_| self.error(&["type"]))
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => self.error(&["end of input"]),
        }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut prog = SourceProgram::default();
        while self.is_kw("class") {
            prog.classes.push(self.class_decl()?);
        }
        if self.is_kw("main") {
            self.bump();
            prog.main = Some(self.expr()?);
            self.expect_sym(";")?;
        }
        match self.peek() {
            Tok::Eof => Ok(prog),
            _ => self.error(&["`class`", "`main`", "end of input"]),
        }
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        self.expect_kw("class")?;
        let cname = self.ident()?;
        self.expect_kw("extends")?;
        let superclass = self.ident()?;
        self.expect_sym("{")?;
        let mut decl = ClassDecl {
            name: cname,
            superclass,
            fields: vec![],
            methods: vec![],
        };
        while !self.is_sym("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error(&["`}`", "member declaration"]);
            }
            let ty = self.type_name()?;
            let member = self.ident()?;
            if self.eat_sym(";") {
                decl.fields.push(FieldDecl { ty, name: member });
                continue;
            }
            if !self.is_sym("(") {
                return self.error(&["`;`", "`(`"]);
            }
            self.bump();
            let mut params = Vec::new();
            if !self.is_sym(")") {
                loop {
                    let pty = self.type_name()?;
                    // `this` is accepted here so validation can report it.
                    let pname = if self.is_kw("this") {
                        self.bump();
                        name("this")
                    } else {
                        self.ident()?
                    };
                    params.push((pty, pname));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            self.expect_sym("{")?;
            let body = self.expr()?;
            self.expect_sym("}")?;
            let cobody = if self.is_kw("corec") {
                self.bump();
                self.expect_sym("{")?;
                let co = self.expr()?;
                self.expect_sym("}")?;
                Some(co)
            } else {
                None
            };
            decl.methods.push(MethodDecl {
                ret: ty,
                name: member,
                params,
                body,
                cobody,
            });
        }
        self.bump();
        Ok(decl)
    }

    fn expr(&mut self) -> PResult<Expr> {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.ternary())
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.comparison()?;
        if self.eat_sym("?") {
            let then = self.expr()?;
            self.expect_sym(":")?;
            let other = self.expr()?;
            return Ok(Expr::if_(cond, then, other));
        }
        Ok(cond)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::binop(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::binop(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                Tok::Sym("%") => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binop(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            self.bump();
            if let Tok::Int(n) = *self.peek() {
                self.bump();
                return self.postfix(Expr::Int(-n));
            }
            let inner = stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.unary())?;
            return Ok(Expr::binop(BinOp::Sub, Expr::Int(0), inner));
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.eat_sym(".") {
            let member = self.ident()?;
            if self.is_sym("(") {
                let args = self.args()?;
                e = Expr::Call(Box::new(e), member, args);
            } else {
                e = Expr::Field(Box::new(e), member);
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(out);
            }
            if !self.eat_sym(",") {
                return self.error(&["`,`", "`)`"]);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::Bool(s == "true"))
                }
                "this" => {
                    self.bump();
                    Ok(Expr::var("this"))
                }
                "any" => {
                    self.bump();
                    Ok(Expr::Any)
                }
                "new" => {
                    self.bump();
                    let c = self.ident()?;
                    let args = self.args()?;
                    Ok(Expr::New(c, args))
                }
                "if" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let c = self.expr()?;
                    self.expect_sym(")")?;
                    let t = self.expr()?;
                    self.expect_kw("else")?;
                    let e = self.expr()?;
                    Ok(Expr::if_(c, t, e))
                }
                "Math"
                    if self.peek_at(1) == &Tok::Sym(".")
                        && self.peek_at(2) == &Tok::Ident("min".into()) =>
                {
                    self.bump();
                    self.bump();
                    self.bump();
                    let args = self.args()?;
                    match <[Expr; 2]>::try_from(args) {
                        Ok([a, b]) => Ok(Expr::binop(BinOp::Min, a, b)),
                        Err(_) => self.error(&["two arguments to Math.min"]),
                    }
                }
                _ => Ok(Expr::Var(self.ident()?)),
            },
            _ => self.error(&["expression"]),
        }
    }

    fn open_value(&mut self) -> PResult<OpenValue> {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.open_value_inner())
    }

    fn open_value_inner(&mut self) -> PResult<OpenValue> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(OpenValue::Int(n))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => Ok(OpenValue::Int(-n)),
                    _ => {
                        self.pos -= 1;
                        self.error(&["integer"])
                    }
                }
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(OpenValue::Bool(s == "true"))
            }
            Tok::Ident(s) if s == "new" => {
                self.bump();
                let c = self.ident()?;
                self.expect_sym("(")?;
                let mut args = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        args.push(self.open_value()?);
                        if self.eat_sym(")") {
                            break;
                        }
                        if !self.eat_sym(",") {
                            return self.error(&["`,`", "`)`"]);
                        }
                    }
                }
                Ok(OpenValue::Obj(c, args))
            }
            Tok::Ident(_) => Ok(OpenValue::Var(self.ident()?)),
            _ => self.error(&["value"]),
        }
    }

    fn capsule(&mut self) -> PResult<Capsule> {
        let open = self.open_value()?;
        let mut env = Environment::new();
        if self.is_kw("where") {
            self.bump();
            loop {
                let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
                let x = self.ident()?;
                self.expect_sym(EQUALS)?;
                let u = self.open_value()?;
                if env.insert(x.clone(), u).is_some() {
                    return Err(ParseError {
                        line,
                        col,
                        expected: BTreeSet::from(["fresh variable".to_string()]),
                        found: format!("duplicate binding for `{x}`"),
                    });
                }
                if !self.eat_sym(";") {
                    break;
                }
            }
        }
        self.expect_eof()?;
        let c = Capsule::new_unchecked(open, env);
        if !c.is_closed() {
            let s = &self.toks[self.pos];
            return Err(ParseError {
                line: s.line,
                col: s.col,
                expected: BTreeSet::from(["binding for every variable".to_string()]),
                found: "unbound variable".to_string(),
            });
        }
        Ok(c)
    }
}

pub fn parse_program(text: &str) -> Result<SourceProgram, ParseError> {
    Parser::new(text)?.program()
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses the canonical capsule text `v where x0 = …; …`.
pub fn parse_capsule(text: &str) -> Result<Capsule, ParseError> {
    Parser::new(text)?.capsule()
}
