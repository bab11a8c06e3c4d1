//! Net-definition files.
//!
//! ```text
//! net filter
//! prefix ex: <http://example.org/>
//! types { str, oid, L }
//! actions {
//!   action mark(a: oid, seg: rect) {
//!     del-mm { (...) }  add-mm { (s, p, o) }
//!     del-mo { a }      add-mo { a -> markIMG(src(a), seg, "oval", "red") }
//!   }
//! }
//! places {
//!   place ch_in : str x oid
//!   view tags : L x L = "SELECT ?id ?tag WHERE { ?id mmdb:containsObj ?tag }"
//! }
//! transitions {
//!   transition Accept {
//!     guard tag::str = "human" && id2::str = id
//!     vars { k: str }
//!     in ch_in (id, a)
//!     read tags (id2, tag)
//!     out ch_out (id, a)
//!     action mark(a, (0,0)..(1,1))
//!   }
//! }
//! channels ch_in -> ch_out
//! init {
//!   token ch_in ("i1", @img1) * 1
//!   triples "seed.ttl"
//!   objects "seed.json"
//!   supply n = ["f0", "f1"]
//! }
//! ```
//!
//! `#` starts a comment. Names that are not plain identifiers are quoted.
//! Fresh variables are written `νx`; `"s"::L` denotes a literal.

mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::action::ActionDef;
use crate::expr::{Expr, Guard};
use crate::net::{FlowKind, Net, PlaceKind};
use crate::types::{format_color, quote, DataType, Value};
use parser::Parser;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_net(src: &str) -> Result<Net, ParseError> {
    let mut p = Parser::new(src)?;
    let net = p.net()?;
    p.expect_end()?;
    Ok(net)
}

/// A constant in file syntax, e.g. `"i1"`, `@img1`, `"3"::L`, `(0,0)..(2,2)`.
pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let mut p = Parser::new(src)?;
    let v = p.value()?;
    p.expect_end()?;
    Ok(v)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

pub fn parse_guard(src: &str) -> Result<Guard, ParseError> {
    let mut p = Parser::new(src)?;
    let g = p.guard()?;
    p.expect_end()?;
    Ok(g)
}

pub fn parse_type(src: &str) -> Result<DataType, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.data_type()?;
    p.expect_end()?;
    Ok(t)
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if (c.is_alphabetic() || c == '_') && c != 'ν')
        && cs.all(|c| c.is_alphanumeric() || c == '_')
}

fn name(s: &str) -> String {
    if is_ident(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn list<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn collect_types(t: &DataType, out: &mut BTreeSet<String>) {
    match t {
        DataType::Set(items) | DataType::Tuple(items) => items.iter().for_each(|i| collect_types(i, out)),
        _ => {}
    }
    out.insert(t.to_string());
}

fn write_action(out: &mut String, a: &ActionDef) {
    let params: Vec<String> = a.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
    let _ = writeln!(out, "  action {}({}) {{", a.name, params.join(", "));
    let triples = |ts: &[crate::action::TripleTemplate]| {
        ts.iter().map(|t| format!("({}, {}, {})", t.subject, t.predicate, t.object)).collect::<Vec<_>>().join(", ")
    };
    if !a.del_mm.is_empty() {
        let _ = writeln!(out, "    del-mm {{ {} }}", triples(&a.del_mm));
    }
    if !a.add_mm.is_empty() {
        let _ = writeln!(out, "    add-mm {{ {} }}", triples(&a.add_mm));
    }
    if !a.del_mo.is_empty() {
        let _ = writeln!(out, "    del-mo {{ {} }}", list(&a.del_mo));
    }
    if !a.add_mo.is_empty() {
        let gens: Vec<String> =
            a.add_mo.iter().map(|g| format!("{} -> {}({})", g.target, g.function, list(&g.args))).collect();
        let _ = writeln!(out, "    add-mo {{ {} }}", gens.join(", "));
    }
    out.push_str("  }\n");
}

/// Prints a net in file syntax; [`parse_net`] reads it back to an equal net
/// (flows grouped by transition).
pub fn write_net(net: &Net) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "net {}", name(&net.name));
    for (p, iri) in &net.prefixes {
        let _ = writeln!(out, "prefix {p}: <{iri}>");
    }

    let mut types = BTreeSet::new();
    net.places.values().flat_map(|p| &p.color).for_each(|t| collect_types(t, &mut types));
    net.actions.values().flat_map(|a| &a.params).for_each(|p| collect_types(&p.ty, &mut types));
    if !types.is_empty() {
        let _ = writeln!(out, "\ntypes {{ {} }}", types.into_iter().collect::<Vec<_>>().join(", "));
    }

    if !net.actions.is_empty() {
        out.push_str("\nactions {\n");
        for a in net.actions.values() {
            write_action(&mut out, a);
        }
        out.push_str("}\n");
    }

    out.push_str("\nplaces {\n");
    for p in net.places.values() {
        match &p.kind {
            PlaceKind::Control => {
                let _ = writeln!(out, "  place {} : {}", name(&p.name), format_color(&p.color));
            }
            PlaceKind::View(q) => {
                let _ = writeln!(out, "  view {} : {} = {}", name(&p.name), format_color(&p.color), quote(&q.to_string()));
            }
        }
    }
    out.push_str("}\n");

    out.push_str("\ntransitions {\n");
    for t in net.transitions.values() {
        let _ = writeln!(out, "  transition {} {{", name(&t.name));
        if t.guard != Guard::True {
            let _ = writeln!(out, "    guard {}", t.guard);
        }
        if !t.declared.is_empty() {
            let vars: Vec<String> = t.declared.iter().map(|(v, ty)| format!("{v}: {ty}")).collect();
            let _ = writeln!(out, "    vars {{ {} }}", vars.join(", "));
        }
        for f in net.flows_of(&t.name) {
            let kw = match f.kind {
                FlowKind::Input => "in",
                FlowKind::Output => "out",
                FlowKind::Read => "read",
            };
            let _ = writeln!(out, "    {kw} {} ({})", name(&f.place), list(&f.inscription));
        }
        if let Some(call) = &t.action {
            let _ = writeln!(out, "    action {}({})", call.action, list(&call.args));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");

    if let Some((cin, cout)) = &net.channels {
        let _ = writeln!(out, "\nchannels {} -> {}", name(cin), name(cout));
    }

    let init = &net.init;
    if !init.tokens.is_empty() || init.triples_file.is_some() || init.objects_file.is_some() || !init.supply.is_empty() {
        out.push_str("\ninit {\n");
        for (place, vals, n) in &init.tokens {
            let mult = if *n == 1 { String::new() } else { format!(" * {n}") };
            let _ = writeln!(out, "  token {} ({}){mult}", name(place), list(vals));
        }
        if let Some(f) = &init.triples_file {
            let _ = writeln!(out, "  triples {}", quote(f));
        }
        if let Some(f) = &init.objects_file {
            let _ = writeln!(out, "  objects {}", quote(f));
        }
        for (var, vals) in &init.supply {
            let _ = writeln!(out, "  supply {var} = [{}]", list(vals));
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests;
