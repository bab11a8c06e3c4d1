//! Host-provided interpretation of predicate and function symbols.
//!
//! The registry is built once and is read-only afterwards. Each symbol
//! carries a typing rule, used by static validation, and an evaluator.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::{DataType, EvalError, TypedSet, Value};
use crate::media::{self, Address, ObjectStore};

/// Typing rule for a predicate: `Ok(())` or a description of what was expected.
pub type PredicateRule = fn(&[DataType]) -> Result<(), String>;
/// Typing rule for a function: result type or a description of what was expected.
pub type FunctionRule = fn(&[DataType]) -> Result<DataType, String>;

pub struct PredicateDef {
    pub name: &'static str,
    pub signature: &'static str,
    pub arity: Arity,
    pub rule: PredicateRule,
    pub eval: fn(&[Value]) -> bool,
}

pub struct FunctionDef {
    pub name: &'static str,
    pub signature: &'static str,
    pub arity: Arity,
    pub rule: FunctionRule,
    pub eval: fn(&[Value], &ObjectStore) -> Result<Value, EvalError>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    fn admits(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }

    fn describe(self) -> String {
        match self {
            Arity::Exactly(k) => k.to_string(),
            Arity::AtLeast(k) => format!("at least {k}"),
        }
    }
}

/// Summary of one registered data type: its symbols in Γ and Φ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeInfo {
    pub name: &'static str,
    pub kind: DataType,
    pub predicates: Vec<&'static str>,
    pub functions: Vec<&'static str>,
}

#[derive(Clone, Debug)]
pub struct TypeDomain {
    pub ordinary: Vec<TypeInfo>,
    pub media: Vec<TypeInfo>,
}

pub struct Registry {
    predicates: BTreeMap<&'static str, PredicateDef>,
    functions: BTreeMap<&'static str, FunctionDef>,
}

/// The standard registry shared by the whole crate.
pub fn standard() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(Registry::build)
}

/// The registered type domain.
pub fn type_domain() -> TypeDomain {
    let info = |name, kind, predicates: &[&'static str], functions: &[&'static str]| TypeInfo {
        name,
        kind,
        predicates: predicates.to_vec(),
        functions: functions.to_vec(),
    };
    TypeDomain {
        ordinary: vec![
            info("str", DataType::Str, &["=_s"], &[]),
            info("int", DataType::Int, &["=_int", "<_int"], &["succ", "minus"]),
            info("L", DataType::Literal, &["=_L"], &[]),
            info("I", DataType::Iri, &["=_I"], &[]),
            info("oid", DataType::Oid, &["=_oid"], &["src"]),
            info("rect", DataType::Rect, &["=_rect"], &[]),
            info("set", DataType::Set(vec![]), &["empty"], &["ins", "getL", "rem"]),
        ],
        media: vec![info(
            "jpg",
            DataType::Media("jpg".into()),
            &[],
            &["sub", "addr", "countIMGs", "detectIMG", "extractIMG", "markIMG"],
        )],
    }
}

fn show(types: &[DataType]) -> String {
    types.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn comparable(t: &DataType) -> bool {
    !t.is_media() && !matches!(t, DataType::Tuple(_))
}

fn same_type_rule(args: &[DataType]) -> Result<(), String> {
    match args {
        [a, b] if a == b && comparable(a) => Ok(()),
        _ => Err("two arguments of the same non-media type".into()),
    }
}

fn rule_for(expected: &'static [DataType]) -> impl Fn(&[DataType]) -> Result<(), String> {
    move |args| {
        if args == expected {
            Ok(())
        } else {
            Err(show(expected))
        }
    }
}

macro_rules! exact_rule {
    ($($t:expr),*) => {
        |args: &[DataType]| rule_for(&[$($t),*])(args)
    };
}

fn int_pair(args: &[DataType]) -> Result<(), String> {
    exact_rule!(DataType::Int, DataType::Int)(args)
}

fn ints(args: &[Value]) -> (i64, i64) {
    match args {
        [Value::Int(a), Value::Int(b)] => (*a, *b),
        _ => unreachable!("typing rule admits two ints"),
    }
}

fn set_arg<'a>(name: &str, v: &'a Value) -> Result<&'a TypedSet, EvalError> {
    match v {
        Value::Set(s) => Ok(s),
        other => Err(EvalError::TypeMismatch {
            context: format!("argument of `{name}`"),
            expected: "set".into(),
            found: other.data_type().to_string(),
        }),
    }
}

fn media_arg<'a>(name: &str, v: &'a Value) -> Result<&'a media::SyntheticImage, EvalError> {
    match v {
        Value::Media(m) => Ok(m),
        other => Err(EvalError::TypeMismatch {
            context: format!("argument of `{name}`"),
            expected: "jpg".into(),
            found: other.data_type().to_string(),
        }),
    }
}

fn text_arg(v: &Value) -> &str {
    match v {
        Value::Str(s) | Value::Literal(s) => s,
        _ => unreachable!("typing rule admits str or L"),
    }
}

fn rect_arg(v: &Value) -> &crate::types::Rect {
    match v {
        Value::Rect(r) => r,
        _ => unreachable!("typing rule admits rect"),
    }
}

fn is_text(t: &DataType) -> bool {
    matches!(t, DataType::Str | DataType::Literal)
}

fn is_jpg(t: &DataType) -> bool {
    matches!(t, DataType::Media(f) if f == "jpg")
}

/// Element arguments of `ins`/`rem`: either the components of the element
/// tuple or a single tuple value.
fn element_args_rule(args: &[DataType]) -> Result<DataType, String> {
    let Some(DataType::Set(elem)) = args.first() else {
        return Err("a set followed by an element".into());
    };
    let given: Vec<DataType> = args[1..].iter().flat_map(DataType::flatten).collect();
    if &given == elem {
        Ok(DataType::Set(elem.clone()))
    } else {
        Err(format!("set<{0}> followed by an element of type {0}", super::format_color(elem)))
    }
}

fn element_values(args: &[Value]) -> Vec<Value> {
    args[1..].iter().cloned().flat_map(Value::flatten).collect()
}

impl Registry {
    fn build() -> Registry {
        let mut predicates = BTreeMap::new();
        let mut add_pred = |def: PredicateDef| {
            predicates.insert(def.name, def);
        };
        for (name, signature) in [
            ("=", "=(t, t)"),
            ("=_s", "=_s(str, str)"),
            ("=_int", "=_int(int, int)"),
            ("=_oid", "=_oid(oid, oid)"),
            ("=_L", "=_L(L, L)"),
            ("=_I", "=_I(I, I)"),
            ("=_rect", "=_rect(rect, rect)"),
        ] {
            let rule: PredicateRule = match name {
                "=_s" => exact_rule!(DataType::Str, DataType::Str),
                "=_int" => exact_rule!(DataType::Int, DataType::Int),
                "=_oid" => exact_rule!(DataType::Oid, DataType::Oid),
                "=_L" => exact_rule!(DataType::Literal, DataType::Literal),
                "=_I" => exact_rule!(DataType::Iri, DataType::Iri),
                "=_rect" => exact_rule!(DataType::Rect, DataType::Rect),
                _ => same_type_rule,
            };
            add_pred(PredicateDef { name, signature, arity: Arity::Exactly(2), rule, eval: |a| a[0] == a[1] });
        }
        add_pred(PredicateDef {
            name: "!=",
            signature: "!=(t, t)",
            arity: Arity::Exactly(2),
            rule: same_type_rule,
            eval: |a| a[0] != a[1],
        });
        for (name, eval) in [
            ("<", (|a: &[Value]| ints(a).0 < ints(a).1) as fn(&[Value]) -> bool),
            ("<_int", |a| ints(a).0 < ints(a).1),
            (">", |a| ints(a).0 > ints(a).1),
            ("<=", |a| ints(a).0 <= ints(a).1),
            (">=", |a| ints(a).0 >= ints(a).1),
        ] {
            add_pred(PredicateDef { name, signature: "(int, int)", arity: Arity::Exactly(2), rule: int_pair, eval });
        }
        add_pred(PredicateDef {
            name: "empty",
            signature: "empty(set)",
            arity: Arity::Exactly(1),
            rule: |a| match a {
                [DataType::Set(_)] => Ok(()),
                _ => Err("a set".into()),
            },
            eval: |a| matches!(&a[0], Value::Set(s) if s.is_empty()),
        });

        let mut functions = BTreeMap::new();
        let mut add_fn = |def: FunctionDef| {
            functions.insert(def.name, def);
        };
        add_fn(FunctionDef {
            name: "succ",
            signature: "succ(int) -> int",
            arity: Arity::Exactly(1),
            rule: |a| match a {
                [DataType::Int] => Ok(DataType::Int),
                _ => Err("int".into()),
            },
            eval: |a, _| match a {
                [Value::Int(i)] => i.checked_add(1).map(Value::Int).ok_or(EvalError::Overflow("succ".into())),
                _ => unreachable!(),
            },
        });
        add_fn(FunctionDef {
            name: "minus",
            signature: "minus(int, int) -> int",
            arity: Arity::Exactly(2),
            rule: |a| int_pair(a).map(|_| DataType::Int),
            eval: |a, _| {
                let (x, y) = ints(a);
                x.checked_sub(y).map(Value::Int).ok_or(EvalError::Overflow("minus".into()))
            },
        });
        add_fn(FunctionDef {
            name: "ins",
            signature: "ins(set<A>, A) -> set<A>",
            arity: Arity::AtLeast(2),
            rule: element_args_rule,
            eval: |a, _| Ok(Value::Set(set_arg("ins", &a[0])?.insert(element_values(a))?)),
        });
        add_fn(FunctionDef {
            name: "rem",
            signature: "rem(set<A>, A) -> set<A>",
            arity: Arity::AtLeast(2),
            rule: element_args_rule,
            eval: |a, _| {
                let set = set_arg("rem", &a[0])?;
                if set.is_empty() {
                    return Err(EvalError::EmptySetAccess("rem".into()));
                }
                Ok(Value::Set(set.remove(&element_values(a))?))
            },
        });
        add_fn(FunctionDef {
            name: "getL",
            signature: "getL(set<A>) -> A",
            arity: Arity::Exactly(1),
            rule: |a| match a {
                [DataType::Set(elem)] => Ok(DataType::element_of(elem)),
                _ => Err("a set".into()),
            },
            eval: |a, _| {
                let set = set_arg("getL", &a[0])?;
                let last = set.last().ok_or_else(|| EvalError::EmptySetAccess("getL".into()))?;
                Ok(if last.len() == 1 { last[0].clone() } else { Value::Tuple(last.to_vec()) })
            },
        });
        add_fn(FunctionDef {
            name: "src",
            signature: "src(oid) -> jpg",
            arity: Arity::Exactly(1),
            rule: |a| match a {
                [DataType::Oid] => Ok(DataType::Media("jpg".into())),
                _ => Err("oid".into()),
            },
            eval: |a, store| match a {
                [Value::Oid(addr)] => Ok(Value::Media(store.src(&Address::new(addr.clone()))?)),
                _ => unreachable!(),
            },
        });
        add_fn(FunctionDef {
            name: "addr",
            signature: "addr(jpg) -> oid",
            arity: Arity::Exactly(1),
            rule: |a| match a {
                [t] if is_jpg(t) => Ok(DataType::Oid),
                _ => Err("jpg".into()),
            },
            eval: |a, store| Ok(Value::Oid(store.addr(media_arg("addr", &a[0])?)?.0)),
        });
        add_fn(FunctionDef {
            name: "countIMGs",
            signature: "countIMGs(jpg, str) -> int",
            arity: Arity::Exactly(2),
            rule: |a| match a {
                [m, f] if is_jpg(m) && is_text(f) => Ok(DataType::Int),
                _ => Err("jpg, str".into()),
            },
            eval: |a, _| Ok(Value::Int(media::count_imgs(media_arg("countIMGs", &a[0])?, text_arg(&a[1])))),
        });
        add_fn(FunctionDef {
            name: "detectIMG",
            signature: "detectIMG(jpg, str) -> set<rect>",
            arity: Arity::Exactly(2),
            rule: |a| match a {
                [m, f] if is_jpg(m) && is_text(f) => Ok(DataType::Set(vec![DataType::Rect])),
                _ => Err("jpg, str".into()),
            },
            eval: |a, _| Ok(Value::Set(media::detect_img(media_arg("detectIMG", &a[0])?, text_arg(&a[1])))),
        });
        add_fn(FunctionDef {
            name: "extractIMG",
            signature: "extractIMG(jpg, rect) -> jpg",
            arity: Arity::Exactly(2),
            rule: |a| match a {
                [m, DataType::Rect] if is_jpg(m) => Ok(DataType::Media("jpg".into())),
                _ => Err("jpg, rect".into()),
            },
            eval: |a, _| {
                let img = media::extract_img(media_arg("extractIMG", &a[0])?, rect_arg(&a[1]))?;
                Ok(Value::Media(Arc::new(img)))
            },
        });
        add_fn(FunctionDef {
            name: "sub",
            signature: "sub(jpg, jpg) -> jpg",
            arity: Arity::Exactly(2),
            rule: |a| match a {
                [m, n] if is_jpg(m) && is_jpg(n) => Ok(DataType::Media("jpg".into())),
                _ => Err("jpg, jpg".into()),
            },
            eval: |a, _| {
                let img = media::sub(media_arg("sub", &a[0])?, media_arg("sub", &a[1])?);
                Ok(Value::Media(Arc::new(img)))
            },
        });
        add_fn(FunctionDef {
            name: "markIMG",
            signature: "markIMG(jpg, rect, str, str) -> jpg",
            arity: Arity::Exactly(4),
            rule: |a| match a {
                [m, DataType::Rect, s, c] if is_jpg(m) && is_text(s) && is_text(c) => Ok(DataType::Media("jpg".into())),
                _ => Err("jpg, rect, str, str".into()),
            },
            eval: |a, _| {
                let img = media::mark_img(media_arg("markIMG", &a[0])?, rect_arg(&a[1]), text_arg(&a[2]), text_arg(&a[3]))?;
                Ok(Value::Media(Arc::new(img)))
            },
        });

        Registry { predicates, functions }
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.get(name)
    }

    pub fn predicate_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.predicates.keys().copied()
    }

    pub fn function_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.functions.keys().copied()
    }

    /// Static check of a predicate application.
    pub fn check_predicate(&self, name: &str, args: &[DataType]) -> Result<(), EvalError> {
        let def = self.predicate(name).ok_or_else(|| EvalError::UnknownPredicate(name.into()))?;
        if !def.arity.admits(args.len()) {
            return Err(EvalError::ArityMismatch { name: name.into(), expected: def.arity.describe(), found: args.len() });
        }
        (def.rule)(args).map_err(|expected| EvalError::TypeMismatch {
            context: format!("arguments of `{name}`"),
            expected,
            found: show(args),
        })
    }

    /// Static result type of a function application.
    pub fn function_type(&self, name: &str, args: &[DataType]) -> Result<DataType, EvalError> {
        let def = self.function(name).ok_or_else(|| EvalError::UnknownFunction(name.into()))?;
        if !def.arity.admits(args.len()) {
            return Err(EvalError::ArityMismatch { name: name.into(), expected: def.arity.describe(), found: args.len() });
        }
        (def.rule)(args).map_err(|expected| EvalError::TypeMismatch {
            context: format!("arguments of `{name}`"),
            expected,
            found: show(args),
        })
    }

    pub fn eval_predicate(&self, name: &str, args: &[Value]) -> Result<bool, EvalError> {
        let types: Vec<DataType> = args.iter().map(Value::data_type).collect();
        self.check_predicate(name, &types)?;
        Ok((self.predicates[name].eval)(args))
    }

    pub fn eval_function(&self, name: &str, args: &[Value], store: &ObjectStore) -> Result<Value, EvalError> {
        let types: Vec<DataType> = args.iter().map(Value::data_type).collect();
        self.function_type(name, &types)?;
        (self.functions[name].eval)(args, store)
    }
}

/// Evaluates a predicate symbol from the standard registry.
pub fn eval_predicate(name: &str, args: &[Value]) -> Result<bool, EvalError> {
    standard().eval_predicate(name, args)
}

/// Evaluates a function symbol from the standard registry.
pub fn eval_function(name: &str, args: &[Value], store: &ObjectStore) -> Result<Value, EvalError> {
    standard().eval_function(name, args, store)
}
