//! State identity, optionally up to a renaming of minted fresh values.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Marking, Snapshot, FRESH_PREFIX};
use crate::action::Storage;
use crate::media::Address;
use crate::rdf::{MetadataGraph, Term, Triple};
use crate::types::{Multiset, Value};

/// The part of a snapshot that determines its identity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey {
    pub marking: Marking,
    pub storage: Storage,
}

impl StateKey {
    pub fn exact(s: &Snapshot) -> StateKey {
        StateKey { marking: s.marking.clone(), storage: s.storage.clone() }
    }
}

fn is_fresh(s: &str) -> bool {
    s.starts_with(FRESH_PREFIX)
}

fn abstract_value(v: &Value) -> Value {
    v.map_atoms(&|s: &str| is_fresh(s).then(|| FRESH_PREFIX.to_string()))
}

fn abstract_text(s: &str) -> &str {
    if is_fresh(s) {
        FRESH_PREFIX
    } else {
        s
    }
}

fn abstract_term(t: &Term) -> Term {
    match t {
        Term::Iri(s) => Term::Iri(abstract_text(s).into()),
        Term::Literal(s) => Term::Literal(abstract_text(s).into()),
    }
}

/// Component of a snapshot, ordered with fresh values masked out.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum Item<'a> {
    Token(&'a str, Vec<Value>, usize),
    Triple([Term; 3]),
    Object(String, &'a crate::media::SyntheticImage),
}

/// Key identifying `s` up to a consistent renaming of minted values.
///
/// Minted values are renamed in order of first occurrence, walking the
/// snapshot's components sorted with those values masked. Equal keys always
/// mean isomorphic states; some isomorphic states with symmetric structure
/// may still receive different keys.
pub fn canonical_key(s: &Snapshot) -> StateKey {
    let mut items: Vec<(Item, Vec<String>)> = Vec::new();
    for (place, tokens) in &s.marking {
        for (tok, n) in tokens.iter() {
            let mut atoms = Vec::new();
            for v in tok {
                v.for_each_atom(&mut |a| {
                    if let Some(l) = a.lexical().filter(|l| is_fresh(l)) {
                        atoms.push(l);
                    }
                });
            }
            items.push((Item::Token(place, tok.iter().map(abstract_value).collect(), n), atoms));
        }
    }
    for t in s.storage.metadata.iter() {
        let atoms = t.terms().iter().map(|x| x.text()).filter(|x| is_fresh(x)).map(String::from).collect();
        let masked = [abstract_term(&t.subject), abstract_term(&t.predicate), abstract_term(&t.object)];
        items.push((Item::Triple(masked), atoms));
    }
    for (a, obj) in s.storage.objects.iter() {
        let atoms = if is_fresh(a.as_str()) { vec![a.0.clone()] } else { vec![] };
        items.push((Item::Object(abstract_text(a.as_str()).into(), obj), atoms));
    }
    if items.iter().all(|(_, atoms)| atoms.is_empty()) {
        return StateKey::exact(s);
    }
    // ties between masked-equal items fall back to the concrete names
    items.sort();

    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    for (_, atoms) in &items {
        for a in atoms {
            if !rename.contains_key(a) {
                let kind = a[FRESH_PREFIX.len()..].split(':').next().unwrap_or("");
                let fresh = format!("{FRESH_PREFIX}{kind}:{}", rename.len());
                rename.insert(a.clone(), fresh);
            }
        }
    }
    let map = |x: &str| rename.get(x).cloned();
    let rename_term = |t: &Term| match t {
        Term::Iri(x) => Term::Iri(map(x).unwrap_or_else(|| x.clone())),
        Term::Literal(x) => Term::Literal(map(x).unwrap_or_else(|| x.clone())),
    };

    let marking = s
        .marking
        .iter()
        .map(|(p, tokens)| {
            let mut m = Multiset::new();
            for (tok, n) in tokens.iter() {
                m.add(tok.iter().map(|v| v.map_atoms(&map)).collect(), n);
            }
            (p.clone(), m)
        })
        .collect();
    let metadata: MetadataGraph = s
        .storage
        .metadata
        .iter()
        .map(|t| Triple { subject: rename_term(&t.subject), predicate: rename_term(&t.predicate), object: rename_term(&t.object) })
        .collect();
    let objects = s
        .storage
        .objects
        .iter()
        .map(|(a, o)| (Address::new(map(a.as_str()).unwrap_or_else(|| a.0.clone())), o.clone()))
        .collect();
    StateKey { marking, storage: Storage { metadata: Arc::new(metadata), objects: Arc::new(objects) } }
}
