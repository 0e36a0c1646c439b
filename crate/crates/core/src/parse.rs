//! Parser for the textual surface language: session types, processes,
//! environment files (`.env`) and combined session files (`.mps`).
//!
//! Grammar outline (`+` is lowest precedence and right-associative, the
//! prefix dot binds tighter, `rec X .` and `else` extend maximally right):
//!
//! ```text
//! type  ::= tsum
//! tsum  ::= tatom ('+' tsum)?
//! tatom ::= 'end' | TYPEVAR | '(' tsum ')'
//!         | 'rec' TYPEVAR '.' tsum
//!         | part ('!'|'?') label '(' sort ')' '.' tcont
//! tcont ::= tatom
//! sort  ::= 'nat' | 'int' | 'str' | 'bool' | 'unit'
//!
//! proc  ::= psum
//! psum  ::= patom ('+' psum)?
//! patom ::= '0' | PROCVAR | '(' psum ')'
//!         | 'rec' PROCVAR '.' psum
//!         | 'if' expr 'then' psum 'else' psum
//!         | part '!' label '<' expr '>' '.' pcont
//!         | part '?' label '(' var ')' '.' pcont
//! pcont ::= patom
//!
//! expr  ::= eand ('or' expr)?
//! eand  ::= ecmp ('and' eand)?
//! ecmp  ::= eun (('<' | '=') eun)?
//! eun   ::= 'not' eun | eatom
//! eatom ::= NAT | ('+'|'-') NAT | STRING | 'true' | 'false' | '()'
//!         | var | '(' expr ')'
//!
//! env   ::= (part ':' tsum)*
//! file  ::= ('participant' part 'type' tsum 'proc' psum)+
//! ```
//!
//! Unsigned decimals are naturals; an explicit `+`/`-` sign makes an
//! integer literal. `#` starts a line comment. Participants and labels are
//! lowercase identifiers, type and process variables uppercase ones.

use std::fmt;

use crate::syntax::{
    is_closed, is_contractive, is_well_behaved, Expr, Participant, Process, Session, SessionType,
    Sort, Thread, TypeEnv,
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LIdent(String),
    UIdent(String),
    Nat(u64),
    Str(String),
    Kw(&'static str),
    Bang,
    Question,
    LParen,
    RParen,
    Dot,
    Plus,
    Minus,
    Lt,
    Gt,
    Colon,
    Equals,
    Zero,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LIdent(s) => write!(f, "identifier `{}`", s),
            Tok::UIdent(s) => write!(f, "variable `{}`", s),
            Tok::Nat(n) => write!(f, "number `{}`", n),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::Kw(k) => write!(f, "`{}`", k),
            Tok::Bang => write!(f, "`!`"),
            Tok::Question => write!(f, "`?`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Equals => write!(f, "`=`"),
            Tok::Zero => write!(f, "`0`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "rec",
    "end",
    "if",
    "then",
    "else",
    "true",
    "false",
    "not",
    "and",
    "or",
    "nat",
    "int",
    "str",
    "bool",
    "unit",
    "participant",
    "type",
    "proc",
];

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

/// A parse failure with its source position and the token classes that
/// would have been accepted there.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at {}:{}: expected {}, found {}",
            self.line,
            self.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }
    loop {
        let (tline, tcol) = (line, col);
        let Some(&c) = chars.peek() else {
            toks.push(Token {
                tok: Tok::Eof,
                line,
                col,
            });
            return Ok(toks);
        };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut n = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    n.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            if n == "0" {
                Tok::Zero
            } else {
                let v = n.parse::<u64>().map_err(|_| ParseError {
                    line: tline,
                    col: tcol,
                    found: format!("number `{}`", n),
                    expected: vec!["a smaller number".into()],
                })?;
                Tok::Nat(v)
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut id = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    id.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            if let Some(kw) = KEYWORDS.iter().find(|k| **k == id) {
                Tok::Kw(kw)
            } else if id.chars().next().unwrap().is_ascii_uppercase() {
                Tok::UIdent(id)
            } else {
                Tok::LIdent(id)
            }
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    None => {
                        return Err(ParseError {
                            line: tline,
                            col: tcol,
                            found: "end of input".into(),
                            expected: vec!["closing `\"`".into()],
                        })
                    }
                    Some('"') => break,
                    Some('\\') => match bump!() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        other => {
                            return Err(ParseError {
                                line,
                                col,
                                found: other
                                    .map(|c| format!("`{}`", c))
                                    .unwrap_or_else(|| "end of input".into()),
                                expected: vec!["an escape (\\\" \\\\ \\n \\t)".into()],
                            })
                        }
                    },
                    Some(ch) => s.push(ch),
                }
            }
            Tok::Str(s)
        } else {
            bump!();
            match c {
                '!' => Tok::Bang,
                '?' => Tok::Question,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                ':' => Tok::Colon,
                '=' => Tok::Equals,
                other => {
                    return Err(ParseError {
                        line: tline,
                        col: tcol,
                        found: format!("`{}`", other),
                        expected: vec!["a token".into()],
                    })
                }
            }
        };
        toks.push(Token {
            tok,
            line: tline,
            col: tcol,
        });
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.fail(&[what])
        }
    }

    fn lident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::LIdent(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.fail(&[what]),
        }
    }

    fn uident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::UIdent(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.fail(&[what]),
        }
    }

    fn eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.fail(&["end of input"])
        }
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        let s = match self.peek() {
            Tok::Kw("nat") => Sort::Nat,
            Tok::Kw("int") => Sort::Int,
            Tok::Kw("str") => Sort::Str,
            Tok::Kw("bool") => Sort::Bool,
            Tok::Kw("unit") => Sort::Unit,
            _ => return self.fail(&["a sort (nat, int, str, bool, unit)"]),
        };
        self.advance();
        Ok(s)
    }

    fn type_sum(&mut self) -> Result<SessionType, ParseError> {
        let first = self.type_atom()?;
        if *self.peek() == Tok::Plus {
            self.advance();
            let rest = self.type_sum()?;
            Ok(SessionType::sum(first, rest))
        } else {
            Ok(first)
        }
    }

    fn type_atom(&mut self) -> Result<SessionType, ParseError> {
        match self.peek().clone() {
            Tok::Kw("end") => {
                self.advance();
                Ok(SessionType::End)
            }
            Tok::UIdent(v) => {
                self.advance();
                Ok(SessionType::var(v))
            }
            Tok::LParen => {
                self.advance();
                let t = self.type_sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Kw("rec") => {
                self.advance();
                let v = self.uident("a type variable")?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.type_sum()?;
                Ok(SessionType::mu(v, body))
            }
            Tok::LIdent(peer) => {
                self.advance();
                let send = match self.peek() {
                    Tok::Bang => true,
                    Tok::Question => false,
                    _ => return self.fail(&["`!`", "`?`"]),
                };
                self.advance();
                let label = self.lident("a label")?;
                self.expect(Tok::LParen, "`(`")?;
                let payload = self.sort()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Dot, "`.`")?;
                let cont = self.type_atom()?;
                Ok(if send {
                    SessionType::out(peer, label, payload, cont)
                } else {
                    SessionType::inp(peer, label, payload, cont)
                })
            }
            _ => self.fail(&["a session type"]),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.expr_and()?;
        if *self.peek() == Tok::Kw("or") {
            self.advance();
            let rhs = self.expr()?;
            Ok(Expr::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn expr_and(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.expr_cmp()?;
        if *self.peek() == Tok::Kw("and") {
            self.advance();
            let rhs = self.expr_and()?;
            Ok(Expr::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn expr_cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.expr_unary()?;
        match self.peek() {
            Tok::Lt => {
                self.advance();
                let rhs = self.expr_unary()?;
                Ok(Expr::lt(lhs, rhs))
            }
            Tok::Equals => {
                self.advance();
                let rhs = self.expr_unary()?;
                Ok(Expr::eq(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn expr_unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Kw("not") {
            self.advance();
            let e = self.expr_unary()?;
            Ok(Expr::not(e))
        } else {
            self.expr_atom()
        }
    }

    fn expr_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.advance();
                Ok(Expr::Nat(n))
            }
            Tok::Zero => {
                self.advance();
                Ok(Expr::Nat(0))
            }
            Tok::Plus | Tok::Minus => {
                let neg = *self.peek() == Tok::Minus;
                self.advance();
                match self.peek().clone() {
                    Tok::Nat(n) => {
                        self.advance();
                        let z = n as i64;
                        Ok(Expr::Int(if neg { -z } else { z }))
                    }
                    Tok::Zero => {
                        self.advance();
                        Ok(Expr::Int(0))
                    }
                    _ => self.fail(&["a number"]),
                }
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::Kw("true") => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::Kw("false") => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::LIdent(x) => {
                self.advance();
                Ok(Expr::var(x))
            }
            Tok::LParen => {
                self.advance();
                if *self.peek() == Tok::RParen {
                    self.advance();
                    Ok(Expr::Unit)
                } else {
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(e)
                }
            }
            _ => self.fail(&["an expression"]),
        }
    }

    fn proc_sum(&mut self) -> Result<Process, ParseError> {
        let first = self.proc_atom()?;
        if *self.peek() == Tok::Plus {
            self.advance();
            let rest = self.proc_sum()?;
            Ok(Process::sum(first, rest))
        } else {
            Ok(first)
        }
    }

    fn proc_atom(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.advance();
                Ok(Process::Inaction)
            }
            Tok::UIdent(v) => {
                self.advance();
                Ok(Process::pvar(v))
            }
            Tok::LParen => {
                self.advance();
                let p = self.proc_sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::Kw("rec") => {
                self.advance();
                let v = self.uident("a process variable")?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.proc_sum()?;
                Ok(Process::mu(v, body))
            }
            Tok::Kw("if") => {
                self.advance();
                let cond = self.expr()?;
                self.expect(Tok::Kw("then"), "`then`")?;
                let t = self.proc_sum()?;
                self.expect(Tok::Kw("else"), "`else`")?;
                let e = self.proc_sum()?;
                Ok(Process::if_then_else(cond, t, e))
            }
            Tok::LIdent(peer) => {
                self.advance();
                match self.peek() {
                    Tok::Bang => {
                        self.advance();
                        let label = self.lident("a label")?;
                        self.expect(Tok::Lt, "`<`")?;
                        let e = self.expr()?;
                        self.expect(Tok::Gt, "`>`")?;
                        self.expect(Tok::Dot, "`.`")?;
                        let cont = self.proc_atom()?;
                        Ok(Process::send(peer, label, e, cont))
                    }
                    Tok::Question => {
                        self.advance();
                        let label = self.lident("a label")?;
                        self.expect(Tok::LParen, "`(`")?;
                        let binder = self.lident("a variable")?;
                        self.expect(Tok::RParen, "`)`")?;
                        self.expect(Tok::Dot, "`.`")?;
                        let cont = self.proc_atom()?;
                        Ok(Process::recv(peer, label, binder, cont))
                    }
                    _ => self.fail(&["`!`", "`?`"]),
                }
            }
            _ => self.fail(&["a process"]),
        }
    }

    fn env(&mut self) -> Result<TypeEnv, ParseError> {
        let mut d = TypeEnv::new();
        loop {
            if *self.peek() == Tok::Eof {
                return Ok(d);
            }
            let (line, col) = self.here();
            let name = self.lident("a participant name")?;
            if d.contains(&Participant::new(name.clone())) {
                return Err(ParseError {
                    line,
                    col,
                    found: format!("duplicate binding for `{}`", name),
                    expected: vec!["a fresh participant name".into()],
                });
            }
            self.expect(Tok::Colon, "`:`")?;
            let t = self.type_sum()?;
            d.insert(Participant::new(name), t);
        }
    }

    fn file(&mut self) -> Result<SourceFile, ParseError> {
        let mut decls: Vec<ParticipantDecl> = Vec::new();
        loop {
            if *self.peek() == Tok::Eof {
                if decls.is_empty() {
                    return self.fail(&["`participant`"]);
                }
                return Ok(SourceFile { decls });
            }
            let (line, col) = self.here();
            self.expect(Tok::Kw("participant"), "`participant`")?;
            let name = self.lident("a participant name")?;
            if decls.iter().any(|d| d.name.as_str() == name) {
                return Err(ParseError {
                    line,
                    col,
                    found: format!("duplicate participant `{}`", name),
                    expected: vec!["a fresh participant name".into()],
                });
            }
            self.expect(Tok::Kw("type"), "`type`")?;
            let declared_type = self.type_sum()?;
            self.expect(Tok::Kw("proc"), "`proc`")?;
            let body = self.proc_sum()?;
            decls.push(ParticipantDecl {
                name: Participant::new(name),
                declared_type,
                body,
                line,
            });
        }
    }
}

/// One `participant <name> type <T> proc <P>` block of a session file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantDecl {
    pub name: Participant,
    pub declared_type: SessionType,
    pub body: Process,
    pub line: usize,
}

/// A parsed `.mps` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub decls: Vec<ParticipantDecl>,
}

impl SourceFile {
    pub fn session(&self) -> Session {
        Session::new(
            self.decls
                .iter()
                .map(|d| Thread {
                    participant: d.name.clone(),
                    body: d.body.clone(),
                })
                .collect(),
        )
        .expect("parser rejects duplicate participants")
    }

    pub fn declared_env(&self) -> TypeEnv {
        self.decls
            .iter()
            .map(|d| (d.name.clone(), d.declared_type.clone()))
            .collect()
    }
}

pub fn parse_type(text: &str) -> Result<SessionType, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.type_sum()?;
    p.eof()?;
    Ok(t)
}

pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(text)?;
    let q = p.proc_sum()?;
    p.eof()?;
    Ok(q)
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.eof()?;
    Ok(e)
}

pub fn parse_env(text: &str) -> Result<TypeEnv, ParseError> {
    let mut p = Parser::new(text)?;
    p.env()
}

pub fn parse_file(text: &str) -> Result<SourceFile, ParseError> {
    let mut p = Parser::new(text)?;
    p.file()
}

/// Why a grammatically valid type was rejected at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfReason {
    NotContractive,
    Open,
    NotWellBehaved,
}

impl fmt::Display for WfReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WfReason::NotContractive => {
                "not contractive: a recursion variable occurs unguarded by any prefix"
            }
            WfReason::Open => "not closed: a recursion variable occurs free",
            WfReason::NotWellBehaved => {
                "not well-behaved: a sum has duplicate labels, mixed polarity or mixed peers"
            }
        })
    }
}

fn wf_reason(t: &SessionType) -> Option<WfReason> {
    if !is_contractive(t) {
        Some(WfReason::NotContractive)
    } else if !is_closed(t) {
        Some(WfReason::Open)
    } else if !is_well_behaved(t) {
        Some(WfReason::NotWellBehaved)
    } else {
        None
    }
}

/// Errors raised when loading a surface file: a parse failure, or a
/// grammatically valid input that violates well-formedness.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("type of `{participant}` is ill-formed: {reason}")]
    IllFormedType {
        participant: Participant,
        reason: WfReason,
    },
    #[error("process of `{participant}` is not closed")]
    OpenProcess { participant: Participant },
}

/// Parse an environment file and check every binding is well-formed.
pub fn load_env(text: &str) -> Result<TypeEnv, LoadError> {
    let d = parse_env(text)?;
    for (p, t) in d.iter() {
        if let Some(reason) = wf_reason(t) {
            return Err(LoadError::IllFormedType {
                participant: p.clone(),
                reason,
            });
        }
    }
    Ok(d)
}

/// Parse a session file; declared types must be well-formed and process
/// bodies closed.
pub fn load_file(text: &str) -> Result<SourceFile, LoadError> {
    let f = parse_file(text)?;
    for d in &f.decls {
        if let Some(reason) = wf_reason(&d.declared_type) {
            return Err(LoadError::IllFormedType {
                participant: d.name.clone(),
                reason,
            });
        }
        if !d.body.is_closed() {
            return Err(LoadError::OpenProcess {
                participant: d.name.clone(),
            });
        }
    }
    Ok(f)
}
