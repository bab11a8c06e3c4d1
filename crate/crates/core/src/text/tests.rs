use proptest::prelude::*;

use super::*;
use crate::expr::Var;
use crate::types::{Rect, TypedSet};

const SAMPLE: &str = r#"
# a small filter-like net
net sample
prefix ex: <http://example.org/>

actions {
  action tag(id: str, a: oid, seg: rect) {
    del-mm { (id::L, mmdb:faceSegment, seg::L) }
    add-mm { (id::L, ex:tagged, "yes"::L), (id::L, mmdb:address, a::L) }
    add-mo { a -> markIMG(src(a), seg, "oval", "red") }
  }
}

places {
  place ch_in : str x oid
  place "counter place" : str x int
  place ch_out : str x oid
  place out : set<str x oid>
  view tags : L x L = "SELECT ?id ?tag WHERE { ?id mmdb:containsObj ?tag }"
}

transitions {
  transition Accept {
    guard (tag::str = "human" || tag::str = "product") && id2::str = id
    in ch_in (id, a)
    read tags (id2, tag)
    out ch_out (id, a)
    action tag(id, a, (0,0)..(2,2))
  }
  transition "Count down" {
    guard c > 0 && !empty(s)
    vars { k: str, νid: str, νa: oid }
    in "counter place" (id, c)
    in out (s)
    out "counter place" (id, c - 1)
    out out (ins(s, νid, νa))
    out ch_out (k, @"odd addr")
  }
}

channels ch_in -> ch_out

init {
  token ch_in ("i1", @img1)
  token "counter place" ("i1", -2) * 3
  token out (set<str x oid>{})
  triples "seed.ttl"
  supply k = ["a", "b\"c"]
}
"#;

#[test]
fn sample_parses() {
    let net = parse_net(SAMPLE).unwrap();
    assert_eq!(net.name, "sample");
    assert_eq!(net.places.len(), 5);
    assert!(net.places["tags"].is_view());
    assert_eq!(net.transitions.len(), 2);
    assert_eq!(net.flows.len(), 8);
    assert_eq!(net.channels, Some(("ch_in".into(), "ch_out".into())));
    let a = &net.actions["tag"];
    assert_eq!(a.add_mm.len(), 2);
    assert_eq!(a.add_mm[0].predicate, Expr::Const(Value::iri("http://example.org/tagged")));
    assert_eq!(a.add_mm[0].object, Expr::Const(Value::literal("yes")));
    let t = &net.transitions["Count down"];
    assert_eq!(t.declared[&Var::new("k")], DataType::Str);
    assert_eq!(net.init.tokens[1], ("counter place".into(), vec![Value::str("i1"), Value::Int(-2)], 3));
    assert_eq!(net.init.tokens[2].1, vec![Value::Set(TypedSet::empty(vec![DataType::Str, DataType::Oid]))]);
    assert_eq!(net.init.supply["k"], vec![Value::str("a"), Value::str("b\"c")]);
    assert_eq!(net.fresh_out_vars("Count down").unwrap().len(), 2);
    assert!(net.validate().is_empty(), "{:?}", net.validate());
}

#[test]
fn sample_round_trips() {
    let net = parse_net(SAMPLE).unwrap();
    let text = write_net(&net);
    let again = parse_net(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(again, net);
    assert_eq!(write_net(&again), text);
}

#[test]
fn errors_carry_positions() {
    let e = parse_net("net x\nplaces {\n  place p : strr\n}").unwrap_err();
    assert_eq!((e.line, e.column), (3, 13));
    assert!(e.message.contains("strr"));
    let e = parse_net("net x\nbogus").unwrap_err();
    assert_eq!(e.line, 2);
    let e = parse_net("net x\nplaces { view v : L = \"SELECT ?x WHERE {\" }").unwrap_err();
    assert!(e.message.contains("view `v`"));
    let e = parse_net("net x\ntransitions { transition t { guard foo(x) } }").unwrap_err();
    assert!(e.message.contains("unknown predicate"));
    assert!(parse_net("net x\nactions { action a(x: int) { add-mm { (x, x) } } }").is_err());
}

#[test]
fn values_parse() {
    assert_eq!(parse_value("\"3\"::L").unwrap(), Value::literal("3"));
    assert_eq!(parse_value("\"3\"::L::int").unwrap(), Value::Int(3));
    assert_eq!(parse_value("@img1").unwrap(), Value::oid("img1"));
    assert_eq!(parse_value("(1, 2)..(3,4)").unwrap(), Value::Rect(Rect::new(1, 2, 3, 4).unwrap()));
    assert_eq!(parse_value("mmdb:faceCount").unwrap(), Value::iri("urn:mmdb:faceCount"));
    assert!(parse_value("x").is_err());
    assert!(parse_value("1 2").is_err());
}

#[test]
fn guard_precedence() {
    let g = parse_guard("a = 1 || b = 2 && !c = 3").unwrap();
    let expect = Guard::eq(Expr::var("a"), Expr::Const(Value::Int(1))).or(Guard::eq(
        Expr::var("b"),
        Expr::Const(Value::Int(2)),
    )
    .and(Guard::Not(Box::new(Guard::eq(Expr::var("c"), Expr::Const(Value::Int(3)))))));
    assert_eq!(g, expect);
    assert_eq!(parse_guard("(a - 1) = b").unwrap(), Guard::eq(Expr::call("minus", vec![Expr::var("a"), Expr::Const(Value::Int(1))]), Expr::var("b")));
    assert_eq!(parse_guard("=_int(a, b)").unwrap(), Guard::pred("=_int", vec![Expr::var("a"), Expr::var("b")]));
}

fn arb_const() -> impl Strategy<Value = Value> {
    prop_oneof![
        "[a-z \"\\\\]{0,5}".prop_map(Value::Str),
        (-50i64..50).prop_map(Value::Int),
        "[a-z]{0,4}".prop_map(Value::Literal),
        "[a-z][a-z0-9-]{0,4}".prop_map(|s| Value::iri(format!("urn:mmdb:{s}"))),
        "[a-z]{1,4}".prop_map(|s| Value::iri(format!("http://x.org/{s}"))),
        "[a-z][a-z0-9]{0,4}".prop_map(Value::Oid),
        "ν:oid:[0-9]".prop_map(Value::Oid),
        (0i64..5, 0i64..5, 0i64..5).prop_map(|(x, y, d)| Value::Rect(Rect::new(x, y, x + d, y + d).unwrap())),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        "[a-z][a-z0-9_]{0,3}".prop_filter("keyword", |s| s != "true" && s != "set").prop_map(|s| Expr::var(&s)),
        "[a-z]{1,3}".prop_map(|s| Expr::fresh(&s)),
        arb_const().prop_map(Expr::Const),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::call("minus", vec![a, b])),
            (prop::sample::select(vec!["src", "getL", "ins", "f"]), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(f, args)| Expr::call(f, args)),
            (inner, prop::sample::select(vec![DataType::Int, DataType::Literal, DataType::Str, DataType::Rect]))
                .prop_filter("folds to a literal", |(e, t)| !(matches!(e, Expr::Const(Value::Str(_))) && *t == DataType::Literal))
                .prop_map(|(e, t)| e.cast(t)),
        ]
    })
}

fn arb_guard() -> impl Strategy<Value = Guard> {
    let atom = prop_oneof![
        Just(Guard::True),
        (prop::sample::select(vec!["=", "!=", "<", ">=", "=_int"]), arb_expr(), arb_expr())
            .prop_map(|(p, a, b)| Guard::pred(p, vec![a, b])),
        arb_expr().prop_map(|e| Guard::pred("empty", vec![e])),
    ];
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Guard::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.or(b)),
        ]
    })
}

proptest! {
    #[test]
    fn exprs_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let parsed = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{err}: {text}")))?;
        prop_assert_eq!(parsed, e);
    }

    #[test]
    fn guards_round_trip(g in arb_guard()) {
        let text = g.to_string();
        let parsed = parse_guard(&text).map_err(|err| TestCaseError::fail(format!("{err}: {text}")))?;
        prop_assert_eq!(parsed, g);
    }

    #[test]
    fn constants_round_trip(v in arb_const()) {
        prop_assert_eq!(parse_value(&v.to_string()).unwrap(), v);
    }
}
