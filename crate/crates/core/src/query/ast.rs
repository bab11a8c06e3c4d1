use std::collections::BTreeSet;
use std::fmt;

use crate::rdf::{Term, MMDB_NS};

/// A term or a `?variable` in a triple pattern or filter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Term(Term),
    Var(String),
}

impl Node {
    pub fn var(name: &str) -> Node {
        Node::Var(name.trim_start_matches('?').to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: Node,
    pub predicate: Node,
    pub object: Node,
}

impl TriplePattern {
    pub fn new(subject: Node, predicate: Node, object: Node) -> Self {
        TriplePattern { subject, predicate, object }
    }

    pub fn nodes(&self) -> [&Node; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Eq(Node, Node),
    Ne(Node, Node),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GraphPattern {
    Bgp(Vec<TriplePattern>),
    Join(Box<GraphPattern>, Box<GraphPattern>),
    Union(Box<GraphPattern>, Box<GraphPattern>),
    Filter(Box<GraphPattern>, Condition),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Select(Vec<String>),
    Ask,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    /// Declared prefixes, kept so the query prints the way it was written.
    pub prefixes: Vec<(String, String)>,
    pub form: Form,
    pub pattern: GraphPattern,
}

impl Query {
    /// Answer variables; empty for `ASK`.
    pub fn answer_vars(&self) -> &[String] {
        match &self.form {
            Form::Select(vars) => vars,
            Form::Ask => &[],
        }
    }
}

fn push_var(out: &mut Vec<String>, n: &Node) {
    if let Node::Var(v) = n {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
}

impl Condition {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.into_iter().collect()
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            Condition::Eq(a, b) | Condition::Ne(a, b) => {
                push_var(out, a);
                push_var(out, b);
            }
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Condition::Not(c) => c.collect(out),
        }
    }
}

impl GraphPattern {
    /// Variables in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            GraphPattern::Bgp(tps) => tps.iter().flat_map(TriplePattern::nodes).for_each(|n| push_var(out, n)),
            GraphPattern::Join(a, b) | GraphPattern::Union(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            GraphPattern::Filter(p, _) => p.collect(out),
        }
    }
}

struct Printer<'a> {
    prefixes: &'a [(String, String)],
}

impl Printer<'_> {
    fn node(&self, n: &Node) -> String {
        match n {
            Node::Var(v) => format!("?{v}"),
            Node::Term(Term::Iri(iri)) => {
                for (p, ns) in self.prefixes {
                    if let Some(local) = iri.strip_prefix(ns.as_str()) {
                        if is_local(local) {
                            return format!("{p}:{local}");
                        }
                    }
                }
                match iri.strip_prefix(MMDB_NS) {
                    Some(local) if is_local(local) => format!("mmdb:{local}"),
                    _ => format!("<{iri}>"),
                }
            }
            Node::Term(t) => t.to_string(),
        }
    }

    fn condition(&self, c: &Condition) -> String {
        match c {
            Condition::Eq(a, b) => format!("{} = {}", self.node(a), self.node(b)),
            Condition::Ne(a, b) => format!("{} != {}", self.node(a), self.node(b)),
            Condition::And(a, b) => format!("({} && {})", self.condition(a), self.condition(b)),
            Condition::Or(a, b) => format!("({} || {})", self.condition(a), self.condition(b)),
            Condition::Not(a) => format!("!({})", self.condition(a)),
        }
    }

    /// Contents of a group, without the braces.
    fn group_body(&self, p: &GraphPattern) -> String {
        match p {
            GraphPattern::Bgp(tps) => tps
                .iter()
                .map(|tp| format!("{} {} {}", self.node(&tp.subject), self.node(&tp.predicate), self.node(&tp.object)))
                .collect::<Vec<_>>()
                .join(" . "),
            GraphPattern::Join(a, b) => format!("{} {}", self.group(a), self.group(b)),
            GraphPattern::Union(a, b) => format!("{} UNION {}", self.group(a), self.group(b)),
            GraphPattern::Filter(inner, c) => {
                format!("{} FILTER({})", self.group(inner), self.condition(c))
            }
        }
    }

    fn group(&self, p: &GraphPattern) -> String {
        format!("{{ {} }}", self.group_body(p))
    }
}

fn is_local(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let printer = Printer { prefixes: &self.prefixes };
        for (p, ns) in &self.prefixes {
            writeln!(f, "PREFIX {p}: <{ns}>")?;
        }
        match &self.form {
            Form::Select(vars) => {
                f.write_str("SELECT")?;
                for v in vars {
                    write!(f, " ?{v}")?;
                }
            }
            Form::Ask => f.write_str("ASK")?,
        }
        write!(f, " WHERE {}", printer.group(&self.pattern))
    }
}
