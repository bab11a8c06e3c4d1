//! SPARQL subset: basic graph patterns combined with join, `UNION` and
//! `FILTER`, in `SELECT` and `ASK` forms, under set semantics.

mod ast;
mod parser;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use ast::{Condition, Form, GraphPattern, Node, Query, TriplePattern};
pub use parser::parse_query;

use crate::rdf::{MetadataGraph, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("answer variable ?{0} does not occur in the pattern")]
    UnboundAnswerVariable(String),
    #[error("filter variable ?{0} does not occur in the filtered pattern")]
    UnboundFilterVariable(String),
}

/// A partial assignment of variables to terms.
pub type Mapping = BTreeMap<String, Term>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Rows(BTreeSet<Vec<Term>>),
    Bool(bool),
}

fn resolve<'a>(n: &'a Node, m: &'a Mapping) -> Option<&'a Term> {
    match n {
        Node::Term(t) => Some(t),
        Node::Var(v) => m.get(v),
    }
}

/// Extends `m` so the pattern's image is a triple of `g`, in every possible way.
fn extend(g: &MetadataGraph, tp: &TriplePattern, m: &Mapping, out: &mut Vec<Mapping>) {
    let (s, p, o) = (resolve(&tp.subject, m), resolve(&tp.predicate, m), resolve(&tp.object, m));
    'triples: for t in g.matching(s, p, o) {
        let mut next = m.clone();
        for (node, term) in tp.nodes().into_iter().zip(t.terms()) {
            if let Node::Var(v) = node {
                match next.get(v) {
                    Some(bound) if bound != term => continue 'triples,
                    Some(_) => {}
                    None => {
                        next.insert(v.clone(), term.clone());
                    }
                }
            }
        }
        out.push(next);
    }
}

/// `⟦P⟧` for a basic graph pattern: all total mappings θ with θ(P) ⊆ g.
pub fn eval_bgp(g: &MetadataGraph, bgp: &[TriplePattern]) -> BTreeSet<Mapping> {
    let mut current = vec![Mapping::new()];
    for tp in bgp {
        let mut next = Vec::new();
        for m in &current {
            extend(g, tp, m, &mut next);
        }
        current = next;
        if current.is_empty() {
            break;
        }
    }
    current.into_iter().collect()
}

fn compatible(a: &Mapping, b: &Mapping) -> bool {
    a.iter().all(|(k, v)| b.get(k).map_or(true, |w| w == v))
}

fn holds(c: &Condition, m: &Mapping) -> bool {
    match c {
        // an unbound operand makes the comparison false rather than an error
        Condition::Eq(a, b) => matches!((resolve(a, m), resolve(b, m)), (Some(x), Some(y)) if x == y),
        Condition::Ne(a, b) => matches!((resolve(a, m), resolve(b, m)), (Some(x), Some(y)) if x != y),
        Condition::And(a, b) => holds(a, m) && holds(b, m),
        Condition::Or(a, b) => holds(a, m) || holds(b, m),
        Condition::Not(a) => !holds(a, m),
    }
}

pub fn eval_pattern(g: &MetadataGraph, p: &GraphPattern) -> BTreeSet<Mapping> {
    match p {
        GraphPattern::Bgp(tps) => eval_bgp(g, tps),
        GraphPattern::Join(a, b) => {
            let left = eval_pattern(g, a);
            if left.is_empty() {
                return left;
            }
            let right = eval_pattern(g, b);
            let mut out = BTreeSet::new();
            for l in &left {
                for r in right.iter().filter(|r| compatible(l, r)) {
                    let mut merged = l.clone();
                    merged.extend(r.iter().map(|(k, v)| (k.clone(), v.clone())));
                    out.insert(merged);
                }
            }
            out
        }
        GraphPattern::Union(a, b) => {
            let mut out = eval_pattern(g, a);
            out.extend(eval_pattern(g, b));
            out
        }
        GraphPattern::Filter(inner, c) => eval_pattern(g, inner).into_iter().filter(|m| holds(c, m)).collect(),
    }
}

/// Answer tuples, positional in the order of the answer variables.
/// `ASK` yields the empty tuple when the pattern has a solution.
pub fn answer_rows(g: &MetadataGraph, q: &Query) -> BTreeSet<Vec<Term>> {
    let vars = q.answer_vars();
    eval_pattern(g, &q.pattern)
        .into_iter()
        .filter_map(|m| vars.iter().map(|v| m.get(v).cloned()).collect::<Option<Vec<_>>>())
        .collect()
}

pub fn answer(g: &MetadataGraph, q: &Query) -> Answer {
    match q.form {
        Form::Select(_) => Answer::Rows(answer_rows(g, q)),
        Form::Ask => Answer::Bool(!eval_pattern(g, &q.pattern).is_empty()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Triple;

    fn lit(s: &str) -> Term {
        Term::literal(s)
    }

    fn graph(ts: &[(&str, &str, &str)]) -> MetadataGraph {
        ts.iter().map(|(s, p, o)| Triple::new(lit(s), Term::mmdb(p), lit(o)).unwrap()).collect()
    }

    fn tp(s: &str, p: &str, o: &str) -> TriplePattern {
        let node = |x: &str, pred: bool| {
            if x.starts_with('?') {
                Node::var(x)
            } else if pred {
                Node::Term(Term::mmdb(x))
            } else {
                Node::Term(lit(x))
            }
        };
        TriplePattern::new(node(s, false), node(p, true), node(o, false))
    }

    #[test]
    fn parse_select() {
        let q = parse_query("SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }").unwrap();
        assert_eq!(q.form, Form::Select(vec!["id".into(), "c".into()]));
        assert_eq!(q.pattern, GraphPattern::Bgp(vec![tp("?id", "faceCount", "?c")]));
    }

    #[test]
    fn parse_empty_ask() {
        let q = parse_query("ASK WHERE { }").unwrap();
        assert_eq!(q.form, Form::Ask);
        assert_eq!(q.pattern, GraphPattern::Bgp(vec![]));
    }

    #[test]
    fn parse_select_star() {
        let q = parse_query("SELECT * WHERE { ?id mmdb:faceSegment ?s . ?id mmdb:prodSegment ?s . }").unwrap();
        assert_eq!(q.form, Form::Select(vec!["id".into(), "s".into()]));
        assert_eq!(
            q.pattern,
            GraphPattern::Bgp(vec![tp("?id", "faceSegment", "?s"), tp("?id", "prodSegment", "?s")])
        );
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_query("SELECT ?x WHERE { ?id mmdb:p ?c }"),
            Err(QueryError::UnboundAnswerVariable("x".into()))
        );
        let err = parse_query("SELECT ?id WHERE {\n  ?id mmdb:p \n}").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { line: 3, column: 1, .. }), "{err:?}");
        assert!(matches!(parse_query("SELECT ?a WHERE { ?a zz:p ?b }"), Err(QueryError::Syntax { .. })));
        assert_eq!(
            parse_query("ASK { ?a mmdb:p ?b FILTER(?z = \"x\") }"),
            Err(QueryError::UnboundFilterVariable("z".into()))
        );
    }

    #[test]
    fn unparse_round_trip() {
        for text in [
            "SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }",
            "PREFIX ex: <http://ex.org/>\nSELECT * WHERE { ?a ex:p ?b . { ?b ex:q ?c } UNION { ?b ex:r ?c } FILTER(?c != \"x\" && !(?a = ex:z)) }",
            "ASK { }",
            "SELECT ?k WHERE { { ?i ?k ?s . FILTER(?k = mmdb:faceSegment) } UNION { ?i ?k ?s . FILTER(?k = mmdb:prodSegment || ?k = <http://e/x y>) } }",
        ] {
            let Ok(q) = parse_query(text) else { continue };
            let again = parse_query(&q.to_string()).unwrap_or_else(|e| panic!("{e}: {q}"));
            assert_eq!(again, q, "{q}");
        }
    }

    #[test]
    fn num_seg_answers() {
        let g = graph(&[("i1", "faceCount", "3"), ("i2", "faceCount", "0")]);
        let q = parse_query("SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }").unwrap();
        let rows: BTreeSet<Vec<Term>> = [vec![lit("i1"), lit("3")], vec![lit("i2"), lit("0")]].into_iter().collect();
        assert_eq!(answer(&g, &q), Answer::Rows(rows));
    }

    #[test]
    fn ask_on_empty_graph() {
        let q = parse_query("ASK WHERE { ?a mmdb:p ?b }").unwrap();
        assert_eq!(answer(&MetadataGraph::new(), &q), Answer::Bool(false));
        let q = parse_query("ASK WHERE { }").unwrap();
        assert_eq!(answer(&MetadataGraph::new(), &q), Answer::Bool(true));
    }

    #[test]
    fn segments_two_rows() {
        let g = graph(&[("i1", "faceSegment", "(0,0)..(4,4)"), ("i1", "faceSegment", "(5,5)..(9,9)")]);
        let q = parse_query("SELECT ?id ?seg WHERE { ?id mmdb:faceSegment ?seg }").unwrap();
        assert_eq!(answer_rows(&g, &q).len(), 2);
    }

    #[test]
    fn join_and_filter() {
        let g = graph(&[("a", "p", "b"), ("b", "q", "c")]);
        let join = GraphPattern::Join(
            Box::new(GraphPattern::Bgp(vec![tp("?x", "p", "?y")])),
            Box::new(GraphPattern::Bgp(vec![tp("?y", "q", "?z")])),
        );
        let expected: Mapping =
            [("x".into(), lit("a")), ("y".into(), lit("b")), ("z".into(), lit("c"))].into_iter().collect();
        assert_eq!(eval_pattern(&g, &join), [expected].into_iter().collect());

        let g = graph(&[("a", "p", "b"), ("a", "p", "c")]);
        let f = GraphPattern::Filter(
            Box::new(GraphPattern::Bgp(vec![tp("?x", "p", "?y")])),
            Condition::Eq(Node::var("y"), Node::Term(lit("b"))),
        );
        assert_eq!(eval_pattern(&g, &f).len(), 1);
    }

    #[test]
    fn union_is_idempotent() {
        let g = graph(&[("a", "p", "b"), ("c", "p", "d")]);
        let p = GraphPattern::Bgp(vec![tp("?x", "p", "?y")]);
        let u = GraphPattern::Union(Box::new(p.clone()), Box::new(p.clone()));
        assert_eq!(eval_pattern(&g, &u), eval_pattern(&g, &p));
    }

    #[test]
    fn empty_bgp_has_one_solution() {
        assert_eq!(eval_bgp(&MetadataGraph::new(), &[]), [Mapping::new()].into_iter().collect());
    }

    #[test]
    fn repeated_variable_in_pattern() {
        let g = graph(&[("a", "p", "a"), ("a", "p", "b")]);
        assert_eq!(eval_bgp(&g, &[tp("?x", "p", "?x")]).len(), 1);
    }
}
