#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use mmnet::action::Storage;
use mmnet::media::{Address, ObjectStore, SyntheticImage};
use mmnet::net::Net;
use mmnet::rdf::{MetadataGraph, Term, Triple};
use mmnet::runtime::{Runtime, Snapshot, Supply};
use mmnet::text::parse_net;
use mmnet::types::{Rect, Value};

pub const SHIPPED: &[&str] = &["splitter", "filter", "enricher", "detector", "pipeline"];

pub fn face(i: i64) -> Rect {
    Rect::new(10 + 30 * i, 10, 30 + 30 * i, 30).unwrap()
}

pub fn product(i: i64) -> Rect {
    Rect::new(10 + 30 * i, 60, 30 + 30 * i, 80).unwrap()
}

pub fn image(faces: i64, products: i64) -> SyntheticImage {
    let mut img = SyntheticImage::new(100, 100);
    for i in 0..faces {
        img = img.with_region("human face", face(i));
    }
    for i in 0..products {
        img = img.with_region("product", product(i));
    }
    img
}

/// `("s", mmdb:p, "o")` with literal subject and object.
pub fn triple(s: &str, p: &str, o: &str) -> Triple {
    Triple::new(Term::literal(s), Term::mmdb(p), Term::literal(o)).unwrap()
}

pub fn storage(img: SyntheticImage, triples: Vec<Triple>) -> Storage {
    Storage::new(triples.into_iter().collect(), ObjectStore::new().put_or_update(Address::new("a1"), img))
}

pub fn img_token() -> Vec<Value> {
    vec![Value::str("i1"), Value::oid("a1")]
}

/// Splitter input as the detector leaves it for `k` faces.
pub fn splitter_seed(k: i64) -> Storage {
    let mut ts = vec![triple("i1", "faceCount", &k.to_string())];
    ts.extend((0..k).map(|i| triple("i1", "faceSegment", &face(i).to_string())));
    storage(image(k, 0), ts)
}

/// Adds one token to `place` and sets up the runtime with the net's own supply.
pub fn start(mut net: Net, place: &str, token: Vec<Value>, st: Storage) -> (Runtime, Snapshot, Supply) {
    net.init.tokens.push((place.into(), token, 1));
    let supply = Supply::new(net.init.supply.clone());
    let rt = Runtime::new(net).unwrap_or_else(|e| panic!("{e:?}"));
    let s0 = rt.initial_snapshot(st).unwrap();
    (rt, s0, supply)
}

pub fn nets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../nets")
}

/// A shipped example with the storage files its `init` block names.
pub fn load_example(name: &str) -> (Runtime, Snapshot, Supply) {
    let dir = nets_dir();
    let net = parse_net(&fs::read_to_string(dir.join(format!("{name}.mmnet"))).unwrap()).unwrap();
    let metadata = match &net.init.triples_file {
        Some(f) => MetadataGraph::parse(&fs::read_to_string(dir.join(f)).unwrap()).unwrap(),
        None => MetadataGraph::new(),
    };
    let objects = match &net.init.objects_file {
        Some(f) => ObjectStore::from_json(&fs::read_to_string(dir.join(f)).unwrap()).unwrap(),
        None => ObjectStore::new(),
    };
    let supply = Supply::new(net.init.supply.clone());
    let rt = Runtime::new(net).unwrap();
    let s0 = rt.initial_snapshot(Storage::new(metadata, objects)).unwrap();
    (rt, s0, supply)
}

fn atoms(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Str(s) | Value::Literal(s) | Value::Iri(s) | Value::Oid(s) => {
            out.insert(s.clone());
        }
        Value::Int(i) => {
            out.insert(i.to_string());
        }
        Value::Rect(r) => {
            out.insert(r.to_string());
        }
        Value::Set(s) => s.items().iter().flatten().for_each(|x| atoms(x, out)),
        Value::Tuple(items) => items.iter().for_each(|x| atoms(x, out)),
        Value::Media(_) => {}
    }
}

/// Lexical forms of every value in the snapshot: token components, triple
/// terms, object addresses and the strings and boxes inside objects.
pub fn lexicals(s: &Snapshot) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for tokens in s.marking.values() {
        for (tok, _) in tokens.iter() {
            tok.iter().for_each(|v| atoms(v, &mut out));
        }
    }
    for t in s.storage.metadata.iter() {
        for term in [&t.subject, &t.predicate, &t.object] {
            out.insert(term.text().to_string());
        }
    }
    for (a, obj) in s.storage.objects.iter() {
        out.insert(a.0.clone());
        for r in &obj.regions {
            out.insert(r.tag.clone());
            out.insert(r.bbox.to_string());
        }
        for d in &obj.decorations {
            out.extend([d.shape.clone(), d.color.clone(), d.bbox.to_string()]);
        }
    }
    out
}
