//! Ground RDF graphs: the metadata half of a storage instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Bound;

use thiserror::Error;

use crate::types::{format_iri, quote, Value};

/// Namespace behind the predeclared `mmdb:` prefix.
pub const MMDB_NS: &str = "urn:mmdb:";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
    #[error("predicate must be an IRI, found literal {0}")]
    LiteralPredicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Literal(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Term {
        Term::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Term {
        Term::Literal(s.into())
    }

    /// An IRI in the `mmdb:` namespace.
    pub fn mmdb(local: &str) -> Term {
        Term::Iri(format!("{MMDB_NS}{local}"))
    }

    pub fn text(&self) -> &str {
        match self {
            Term::Iri(s) | Term::Literal(s) => s,
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn to_value(&self) -> Value {
        match self {
            Term::Iri(s) => Value::Iri(s.clone()),
            Term::Literal(s) => Value::Literal(s.clone()),
        }
    }

    /// The term denoted by an `L`- or `I`-typed value.
    pub fn from_value(v: &Value) -> Option<Term> {
        match v {
            Value::Iri(s) => Some(Term::Iri(s.clone())),
            Value::Literal(s) => Some(Term::Literal(s.clone())),
            _ => None,
        }
    }

    fn min() -> Term {
        Term::Iri(String::new())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => f.write_str(&format_iri(s)),
            Term::Literal(s) => f.write_str(&quote(s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, RdfError> {
        if !predicate.is_iri() {
            return Err(RdfError::LiteralPredicate(predicate.to_string()));
        }
        Ok(Triple { subject, predicate, object })
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A set of ground triples, indexed by subject and by predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetadataGraph {
    spo: BTreeSet<Triple>,
    // (p, o, s) ordering of the same triples
    pos: BTreeSet<(Term, Term, Term)>,
}

impl MetadataGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.spo.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.spo.iter()
    }

    pub fn add(&mut self, t: Triple) -> bool {
        self.pos.insert((t.predicate.clone(), t.object.clone(), t.subject.clone()));
        self.spo.insert(t)
    }

    pub fn discard(&mut self, t: &Triple) -> bool {
        self.pos.remove(&(t.predicate.clone(), t.object.clone(), t.subject.clone()));
        self.spo.remove(t)
    }

    /// `g ∪ ts`.
    pub fn insert<'a>(&self, ts: impl IntoIterator<Item = &'a Triple>) -> MetadataGraph {
        let mut g = self.clone();
        for t in ts {
            g.add(t.clone());
        }
        g
    }

    /// `g ∖ ts`. Deleting absent triples is a no-op.
    pub fn delete<'a>(&self, ts: impl IntoIterator<Item = &'a Triple>) -> MetadataGraph {
        let mut g = self.clone();
        for t in ts {
            g.discard(t);
        }
        g
    }

    /// Triples matching the given positions (`None` matches anything).
    pub fn matching<'a>(
        &'a self,
        s: Option<&'a Term>,
        p: Option<&'a Term>,
        o: Option<&'a Term>,
    ) -> Box<dyn Iterator<Item = Triple> + 'a> {
        let keep = move |t: &Triple| p.map_or(true, |p| &t.predicate == p) && o.map_or(true, |o| &t.object == o);
        match (s, p) {
            (Some(s), _) => {
                let lo = Triple { subject: s.clone(), predicate: Term::min(), object: Term::min() };
                Box::new(
                    self.spo
                        .range((Bound::Included(lo), Bound::Unbounded))
                        .take_while(move |t| &t.subject == s)
                        .filter(move |t| keep(t))
                        .cloned(),
                )
            }
            (None, Some(p)) => {
                let lo = (p.clone(), o.cloned().unwrap_or_else(Term::min), Term::min());
                Box::new(
                    self.pos
                        .range((Bound::Included(lo), Bound::Unbounded))
                        .take_while(move |(tp, to, _)| tp == p && o.map_or(true, |o| to == o))
                        .map(|(p, o, s)| Triple { subject: s.clone(), predicate: p.clone(), object: o.clone() }),
                )
            }
            (None, None) => Box::new(self.spo.iter().filter(move |t| keep(t)).cloned()),
        }
    }

    /// Every term occurring in the graph.
    pub fn terms(&self) -> BTreeSet<&Term> {
        self.spo.iter().flat_map(|t| t.terms()).collect()
    }

    /// Parses the line-oriented triple format.
    pub fn parse(text: &str) -> Result<MetadataGraph, RdfError> {
        let mut prefixes: BTreeMap<String, String> = BTreeMap::new();
        prefixes.insert("mmdb".into(), MMDB_NS.into());
        let mut g = MetadataGraph::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let mut cur = Cursor { rest: raw.trim(), line };
            if cur.rest.is_empty() || cur.rest.starts_with('#') {
                continue;
            }
            if let Some(after) = cur.rest.strip_prefix("@prefix") {
                cur.rest = after.trim_start();
                let (name, after) = cur
                    .rest
                    .split_once(':')
                    .ok_or_else(|| cur.error("expected `name:` after @prefix"))?;
                cur.rest = after.trim_start();
                let Term::Iri(ns) = cur.term(&prefixes)? else {
                    return Err(cur.error("prefix namespace must be an IRI"));
                };
                cur.finish()?;
                prefixes.insert(name.trim().to_string(), ns);
                continue;
            }
            let s = cur.term(&prefixes)?;
            let p = cur.term(&prefixes)?;
            let o = cur.term(&prefixes)?;
            cur.finish()?;
            g.add(Triple::new(s, p, o)?);
        }
        Ok(g)
    }

    /// Serializes in the format read by [`MetadataGraph::parse`].
    pub fn to_text(&self) -> String {
        self.spo.iter().map(|t| format!("{t}\n")).collect()
    }
}

impl<'a> FromIterator<&'a Triple> for MetadataGraph {
    fn from_iter<I: IntoIterator<Item = &'a Triple>>(iter: I) -> Self {
        MetadataGraph::new().insert(iter)
    }
}

impl FromIterator<Triple> for MetadataGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = MetadataGraph::new();
        for t in iter {
            g.add(t);
        }
        g
    }
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: &str) -> RdfError {
        RdfError::Syntax { line: self.line, message: message.into() }
    }

    fn finish(&mut self) -> Result<(), RdfError> {
        match self.rest.trim() {
            "." => Ok(()),
            "" => Err(self.error("missing terminating `.`")),
            other => Err(self.error(&format!("unexpected trailing input `{other}`"))),
        }
    }

    fn term(&mut self, prefixes: &BTreeMap<String, String>) -> Result<Term, RdfError> {
        self.rest = self.rest.trim_start();
        if let Some(body) = self.rest.strip_prefix('<') {
            let end = body.find('>').ok_or_else(|| self.error("unterminated IRI"))?;
            self.rest = &body[end + 1..];
            return Ok(Term::Iri(body[..end].to_string()));
        }
        if let Some(body) = self.rest.strip_prefix('"') {
            let mut out = String::new();
            let mut chars = body.char_indices();
            while let Some((i, c)) = chars.next() {
                match c {
                    '"' => {
                        self.rest = &body[i + 1..];
                        return Ok(Term::Literal(out));
                    }
                    '\\' => match chars.next() {
                        Some((_, 'n')) => out.push('\n'),
                        Some((_, 't')) => out.push('\t'),
                        Some((_, c @ ('"' | '\\'))) => out.push(c),
                        _ => return Err(self.error("bad escape in literal")),
                    },
                    c => out.push(c),
                }
            }
            return Err(self.error("unterminated literal"));
        }
        let end = self.rest.find(char::is_whitespace).unwrap_or(self.rest.len());
        let mut word = &self.rest[..end];
        // allow `ex:o.` without a space before the terminator
        if word.ends_with('.') && word.len() > 1 {
            word = &word[..word.len() - 1];
        }
        let (prefix, local) = word.split_once(':').ok_or_else(|| self.error(&format!("expected a term, found `{word}`")))?;
        let ns = prefixes.get(prefix).ok_or_else(|| RdfError::UnknownPrefix(prefix.into()))?;
        self.rest = &self.rest[word.len()..];
        Ok(Term::Iri(format!("{ns}{local}")))
    }
}
