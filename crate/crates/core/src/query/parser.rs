//! Recursive-descent parser for the query subset.

use std::collections::BTreeMap;

use super::ast::{Condition, Form, GraphPattern, Node, Query, TriplePattern};
use super::QueryError;
use crate::rdf::{Term, MMDB_NS};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    Prefixed(String, String),
    Literal(String),
    Punct(&'static str),
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, message: impl Into<String>) -> QueryError {
        QueryError::Syntax { line: self.line, column: self.col, message: message.into() }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while !matches!(self.peek_char(), None | Some('\n')) {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek_char(), Some(c) if c.is_alphanumeric() || c == '_' || c == '-') {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    /// Next token with the position where it starts.
    fn next(&mut self) -> Result<(Tok, usize, usize), QueryError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek_char() else { return Ok((Tok::Eof, line, col)) };
        let tok = match c {
            '?' | '$' => {
                self.bump();
                let name = self.ident();
                if name.is_empty() {
                    return Err(self.err("expected a variable name"));
                }
                Tok::Var(name)
            }
            '<' => {
                self.bump();
                let start = self.pos;
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some(c) if !c.is_whitespace() => {}
                        _ => return Err(self.err("unterminated IRI")),
                    }
                }
                Tok::Iri(self.src[start..self.pos - 1].to_string())
            }
            '"' => {
                self.bump();
                let mut out = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => out.push('\n'),
                            Some('t') => out.push('\t'),
                            Some(c @ ('"' | '\\')) => out.push(c),
                            _ => return Err(self.err("bad escape in literal")),
                        },
                        Some(c) => out.push(c),
                        None => return Err(self.err("unterminated literal")),
                    }
                }
                Tok::Literal(out)
            }
            '{' | '}' | '(' | ')' | '.' | '*' | '=' => {
                self.bump();
                Tok::Punct(match c {
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '.' => ".",
                    '*' => "*",
                    _ => "=",
                })
            }
            '!' => {
                self.bump();
                if self.peek_char() == Some('=') {
                    self.bump();
                    Tok::Punct("!=")
                } else {
                    Tok::Punct("!")
                }
            }
            '&' | '|' => {
                self.bump();
                if self.bump() != Some(c) {
                    return Err(self.err(format!("expected `{c}{c}`")));
                }
                Tok::Punct(if c == '&' { "&&" } else { "||" })
            }
            c if c.is_alphabetic() || c == '_' => {
                let word = self.ident();
                if self.peek_char() == Some(':') {
                    self.bump();
                    let local = self.ident();
                    Tok::Prefixed(word, local)
                } else {
                    Tok::Word(word)
                }
            }
            ':' => {
                self.bump();
                Tok::Prefixed(String::new(), self.ident())
            }
            other => return Err(self.err(format!("unexpected character `{other}`"))),
        };
        Ok((tok, line, col))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    line: usize,
    col: usize,
    prefixes: BTreeMap<String, String>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, QueryError> {
        let mut lexer = Lexer { src, pos: 0, line: 1, col: 1 };
        let (tok, line, col) = lexer.next()?;
        let mut prefixes = BTreeMap::new();
        prefixes.insert("mmdb".to_string(), MMDB_NS.to_string());
        Ok(Parser { lexer, tok, line, col, prefixes })
    }

    fn err(&self, message: impl Into<String>) -> QueryError {
        QueryError::Syntax { line: self.line, column: self.col, message: message.into() }
    }

    fn advance(&mut self) -> Result<Tok, QueryError> {
        let (tok, line, col) = self.lexer.next()?;
        self.line = line;
        self.col = col;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.tok, Tok::Punct(q) if q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), QueryError> {
        if self.is_punct(p) {
            self.advance()?;
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`, found {}", describe(&self.tok))))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.is_keyword(kw) {
            self.advance()?;
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`, found {}", describe(&self.tok))))
        }
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        let mut declared = Vec::new();
        while self.is_keyword("PREFIX") {
            self.advance()?;
            let Tok::Prefixed(name, local) = self.advance()? else {
                return Err(self.err("expected `name:` after PREFIX"));
            };
            if !local.is_empty() {
                return Err(self.err("expected `name:` after PREFIX"));
            }
            let Tok::Iri(ns) = self.advance()? else {
                return Err(self.err("expected a namespace IRI"));
            };
            self.prefixes.insert(name.clone(), ns.clone());
            declared.push((name, ns));
        }
        let (form, star) = if self.is_keyword("SELECT") {
            self.advance()?;
            let mut vars = Vec::new();
            let mut star = false;
            if self.is_punct("*") {
                self.advance()?;
                star = true;
            } else {
                while let Tok::Var(v) = &self.tok {
                    vars.push(v.clone());
                    self.advance()?;
                }
                if vars.is_empty() {
                    return Err(self.err("SELECT needs `*` or at least one variable"));
                }
            }
            (Form::Select(vars), star)
        } else if self.is_keyword("ASK") {
            self.advance()?;
            (Form::Ask, false)
        } else {
            return Err(self.err(format!("expected SELECT or ASK, found {}", describe(&self.tok))));
        };
        if self.is_keyword("WHERE") {
            self.advance()?;
        } else if !matches!(form, Form::Ask) {
            self.expect_keyword("WHERE")?;
        }
        let pattern = self.group()?;
        if self.tok != Tok::Eof {
            return Err(self.err(format!("unexpected {} after query", describe(&self.tok))));
        }
        let pattern_vars = pattern.vars();
        let form = match form {
            Form::Select(_) if star => Form::Select(pattern_vars),
            Form::Select(vars) => {
                if let Some(v) = vars.iter().find(|v| !pattern_vars.contains(v)) {
                    return Err(QueryError::UnboundAnswerVariable(v.clone()));
                }
                Form::Select(vars)
            }
            Form::Ask => Form::Ask,
        };
        Ok(Query { prefixes: declared, form, pattern })
    }

    fn group(&mut self) -> Result<GraphPattern, QueryError> {
        self.expect_punct("{")?;
        let mut parts: Vec<GraphPattern> = Vec::new();
        let mut bgp: Vec<TriplePattern> = Vec::new();
        let mut filters: Vec<Condition> = Vec::new();
        loop {
            if self.is_punct("}") {
                self.advance()?;
                break;
            }
            if self.is_punct(".") {
                self.advance()?;
                continue;
            }
            if self.is_keyword("FILTER") {
                self.advance()?;
                self.expect_punct("(")?;
                filters.push(self.or_condition()?);
                self.expect_punct(")")?;
                continue;
            }
            if self.is_punct("{") {
                if !bgp.is_empty() {
                    parts.push(GraphPattern::Bgp(std::mem::take(&mut bgp)));
                }
                let mut p = self.group()?;
                while self.is_keyword("UNION") {
                    self.advance()?;
                    p = GraphPattern::Union(Box::new(p), Box::new(self.group()?));
                }
                parts.push(p);
                continue;
            }
            if self.tok == Tok::Eof {
                return Err(self.err("unterminated group, expected `}`"));
            }
            let s = self.node()?;
            let p = self.node()?;
            if matches!(p, Node::Term(Term::Literal(_))) {
                return Err(self.err("predicate must be an IRI or a variable"));
            }
            let o = self.node()?;
            bgp.push(TriplePattern::new(s, p, o));
            if !self.is_punct(".") && !self.is_punct("}") && !self.is_punct("{") && !self.is_keyword("FILTER") {
                return Err(self.err(format!("expected `.` or `}}`, found {}", describe(&self.tok))));
            }
        }
        if !bgp.is_empty() || parts.is_empty() {
            parts.push(GraphPattern::Bgp(bgp));
        }
        let mut iter = parts.into_iter();
        let first = iter.next().expect("at least one part");
        let mut pattern = iter.fold(first, |acc, p| GraphPattern::Join(Box::new(acc), Box::new(p)));
        if let Some(cond) = filters.into_iter().reduce(|a, b| Condition::And(Box::new(a), Box::new(b))) {
            let vars = pattern.vars();
            if let Some(v) = cond.vars().into_iter().find(|v| !vars.contains(v)) {
                return Err(QueryError::UnboundFilterVariable(v));
            }
            pattern = GraphPattern::Filter(Box::new(pattern), cond);
        }
        Ok(pattern)
    }

    fn node(&mut self) -> Result<Node, QueryError> {
        let node = match &self.tok {
            Tok::Var(v) => Node::Var(v.clone()),
            Tok::Iri(iri) => Node::Term(Term::Iri(iri.clone())),
            Tok::Literal(s) => Node::Term(Term::Literal(s.clone())),
            Tok::Prefixed(p, local) => {
                let ns = self.prefixes.get(p).ok_or_else(|| self.err(format!("unknown prefix `{p}:`")))?;
                Node::Term(Term::Iri(format!("{ns}{local}")))
            }
            other => return Err(self.err(format!("expected a term or variable, found {}", describe(other)))),
        };
        self.advance()?;
        Ok(node)
    }

    fn or_condition(&mut self) -> Result<Condition, QueryError> {
        let mut left = self.and_condition()?;
        while self.is_punct("||") {
            self.advance()?;
            left = Condition::Or(Box::new(left), Box::new(self.and_condition()?));
        }
        Ok(left)
    }

    fn and_condition(&mut self) -> Result<Condition, QueryError> {
        let mut left = self.unary_condition()?;
        while self.is_punct("&&") {
            self.advance()?;
            left = Condition::And(Box::new(left), Box::new(self.unary_condition()?));
        }
        Ok(left)
    }

    fn unary_condition(&mut self) -> Result<Condition, QueryError> {
        if self.is_punct("!") {
            self.advance()?;
            return Ok(Condition::Not(Box::new(self.unary_condition()?)));
        }
        if self.is_punct("(") {
            self.advance()?;
            let c = self.or_condition()?;
            self.expect_punct(")")?;
            return Ok(c);
        }
        let a = self.node()?;
        let eq = if self.is_punct("=") {
            true
        } else if self.is_punct("!=") {
            false
        } else {
            return Err(self.err(format!("expected `=` or `!=`, found {}", describe(&self.tok))));
        };
        self.advance()?;
        let b = self.node()?;
        Ok(if eq { Condition::Eq(a, b) } else { Condition::Ne(a, b) })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("`{w}`"),
        Tok::Var(v) => format!("`?{v}`"),
        Tok::Iri(i) => format!("`<{i}>`"),
        Tok::Prefixed(p, l) => format!("`{p}:{l}`"),
        Tok::Literal(s) => format!("literal \"{s}\""),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    Parser::new(text)?.query()
}
