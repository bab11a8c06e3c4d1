//! Typed value universe: data types, values, the cast function, multisets,
//! and the registry of predicates and functions over those values.

mod multiset;
pub mod registry;

pub use multiset::{Multiset, NotSubset};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::media::{MediaError, SyntheticImage};

/// Kind of a data type. Media types live in their own domain, disjoint from
/// the ordinary ones.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataType {
    Str,
    Int,
    /// RDF literal.
    Literal,
    /// RDF IRI.
    Iri,
    /// Object address.
    Oid,
    Rect,
    /// Finite set of tuples over the given element types.
    Set(Vec<DataType>),
    /// Intermediate tuple produced by functions such as `getL`; flattened
    /// into the surrounding inscription.
    Tuple(Vec<DataType>),
    /// Multimedia object of the named format.
    Media(String),
}

impl DataType {
    pub fn is_media(&self) -> bool {
        matches!(self, DataType::Media(_))
    }

    /// Number of inscription slots a value of this type occupies.
    pub fn width(&self) -> usize {
        match self {
            DataType::Tuple(items) => items.len(),
            _ => 1,
        }
    }

    /// Component types a value of this type occupies in an inscription.
    pub fn flatten(&self) -> Vec<DataType> {
        match self {
            DataType::Tuple(items) => items.clone(),
            other => vec![other.clone()],
        }
    }

    /// Type of a single element drawn from a set over `elem`.
    pub fn element_of(elem: &[DataType]) -> DataType {
        if elem.len() == 1 {
            elem[0].clone()
        } else {
            DataType::Tuple(elem.to_vec())
        }
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, items: &[DataType]) -> fmt::Result {
    if items.is_empty() {
        return f.write_str("unit");
    }
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" x ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Str => f.write_str("str"),
            DataType::Int => f.write_str("int"),
            DataType::Literal => f.write_str("L"),
            DataType::Iri => f.write_str("I"),
            DataType::Oid => f.write_str("oid"),
            DataType::Rect => f.write_str("rect"),
            DataType::Set(items) => {
                f.write_str("set<")?;
                write_product(f, items)?;
                f.write_str(">")
            }
            DataType::Tuple(items) => {
                f.write_str("(")?;
                write_product(f, items)?;
                f.write_str(")")
            }
            DataType::Media(fmt_name) if fmt_name == "jpg" => f.write_str("jpg"),
            DataType::Media(fmt_name) => write!(f, "media<{fmt_name}>"),
        }
    }
}

/// Writes a color (cartesian product of types) as `t1 x t2 x ...`.
pub fn format_color(color: &[DataType]) -> String {
    struct Color<'a>(&'a [DataType]);
    impl fmt::Display for Color<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_product(f, self.0)
        }
    }
    Color(color).to_string()
}

/// Axis-aligned rectangle with `x1 <= x2` and `y1 <= y2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rect {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid rectangle `{0}`")]
pub struct InvalidRect(pub String);

impl Rect {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Result<Self, InvalidRect> {
        if x1 > x2 || y1 > y2 {
            return Err(InvalidRect(format!("({x1},{y1})..({x2},{y2})")));
        }
        Ok(Rect { x1, y1, x2, y2 })
    }

    pub fn width(&self) -> i64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i64 {
        self.y2 - self.y1
    }

    pub fn contains(&self, other: &Rect) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Rect {
        Rect {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})..({},{})", self.x1, self.y1, self.x2, self.y2)
    }
}

impl FromStr for Rect {
    type Err = InvalidRect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidRect(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (a, b) = compact.split_once("..").ok_or_else(bad)?;
        let pair = |p: &str| -> Result<(i64, i64), InvalidRect> {
            let inner = p.strip_prefix('(').and_then(|p| p.strip_suffix(')')).ok_or_else(bad)?;
            let (x, y) = inner.split_once(',').ok_or_else(bad)?;
            Ok((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
        };
        let (x1, y1) = pair(a)?;
        let (x2, y2) = pair(b)?;
        Rect::new(x1, y1, x2, y2).map_err(|_| bad())
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite set of tuples that remembers insertion order, so that "the last
/// element" is the most recently inserted one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedSet {
    elem: Vec<DataType>,
    items: Vec<Vec<Value>>,
}

impl TypedSet {
    pub fn empty(elem: Vec<DataType>) -> Self {
        TypedSet { elem, items: Vec::new() }
    }

    /// Builds a set from tuples, dropping duplicates after their first
    /// occurrence.
    pub fn from_items(elem: Vec<DataType>, items: impl IntoIterator<Item = Vec<Value>>) -> Result<Self, EvalError> {
        let mut set = TypedSet::empty(elem);
        for item in items {
            set = set.insert(item)?;
        }
        Ok(set)
    }

    pub fn element_types(&self) -> &[DataType] {
        &self.elem
    }

    pub fn items(&self) -> &[Vec<Value>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: &[Value]) -> bool {
        self.items.iter().any(|i| i == item)
    }

    fn check_item(&self, item: &[Value]) -> Result<(), EvalError> {
        let found: Vec<DataType> = item.iter().map(Value::data_type).collect();
        if found != self.elem {
            return Err(EvalError::TypeMismatch {
                context: "set element".into(),
                expected: format_color(&self.elem),
                found: format_color(&found),
            });
        }
        Ok(())
    }

    pub fn insert(&self, item: Vec<Value>) -> Result<TypedSet, EvalError> {
        self.check_item(&item)?;
        let mut next = self.clone();
        if !next.contains(&item) {
            next.items.push(item);
        }
        Ok(next)
    }

    pub fn remove(&self, item: &[Value]) -> Result<TypedSet, EvalError> {
        self.check_item(item)?;
        let mut next = self.clone();
        next.items.retain(|i| i != item);
        Ok(next)
    }

    pub fn last(&self) -> Option<&[Value]> {
        self.items.last().map(Vec::as_slice)
    }
}

/// A typed constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Str(String),
    Int(i64),
    Literal(String),
    Iri(String),
    Oid(String),
    Rect(Rect),
    Set(TypedSet),
    Tuple(Vec<Value>),
    Media(Arc<SyntheticImage>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Value {
        Value::Literal(s.into())
    }

    pub fn iri(s: impl Into<String>) -> Value {
        Value::Iri(s.into())
    }

    pub fn oid(s: impl Into<String>) -> Value {
        Value::Oid(s.into())
    }

    pub fn data_type(&self) -> DataType {
        match self {
            Value::Str(_) => DataType::Str,
            Value::Int(_) => DataType::Int,
            Value::Literal(_) => DataType::Literal,
            Value::Iri(_) => DataType::Iri,
            Value::Oid(_) => DataType::Oid,
            Value::Rect(_) => DataType::Rect,
            Value::Set(s) => DataType::Set(s.elem.clone()),
            Value::Tuple(items) => DataType::Tuple(items.iter().map(Value::data_type).collect()),
            Value::Media(_) => DataType::Media("jpg".into()),
        }
    }

    /// Lexical form of an atomic value; `None` for sets, tuples and media.
    pub fn lexical(&self) -> Option<String> {
        match self {
            Value::Str(s) | Value::Literal(s) | Value::Iri(s) | Value::Oid(s) => Some(s.clone()),
            Value::Int(i) => Some(i.to_string()),
            Value::Rect(r) => Some(r.to_string()),
            Value::Set(_) | Value::Tuple(_) | Value::Media(_) => None,
        }
    }

    /// Spreads a tuple into its components; any other value is a single slot.
    pub fn flatten(self) -> Vec<Value> {
        match self {
            Value::Tuple(items) => items,
            other => vec![other],
        }
    }

    /// Visits every atomic constant, descending into sets and tuples.
    pub fn for_each_atom(&self, f: &mut dyn FnMut(&Value)) {
        match self {
            Value::Set(s) => s.items.iter().flatten().for_each(|v| v.for_each_atom(f)),
            Value::Tuple(items) => items.iter().for_each(|v| v.for_each_atom(f)),
            Value::Media(_) => {}
            atom => f(atom),
        }
    }

    /// Rewrites every string-like atom through `rename`, leaving structure intact.
    pub fn map_atoms(&self, rename: &dyn Fn(&str) -> Option<String>) -> Value {
        let map = |s: &String| rename(s).unwrap_or_else(|| s.clone());
        match self {
            Value::Str(s) => Value::Str(map(s)),
            Value::Literal(s) => Value::Literal(map(s)),
            Value::Iri(s) => Value::Iri(map(s)),
            Value::Oid(s) => Value::Oid(map(s)),
            Value::Set(set) => Value::Set(TypedSet {
                elem: set.elem.clone(),
                items: set.items.iter().map(|t| t.iter().map(|v| v.map_atoms(rename)).collect()).collect(),
            }),
            Value::Tuple(items) => Value::Tuple(items.iter().map(|v| v.map_atoms(rename)).collect()),
            other => other.clone(),
        }
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn is_plain_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

pub(crate) fn format_oid(s: &str) -> String {
    if is_plain_name(s) {
        format!("@{s}")
    } else {
        format!("@{}", quote(s))
    }
}

pub(crate) fn format_iri(s: &str) -> String {
    match s.strip_prefix(crate::rdf::MMDB_NS) {
        Some(local) if is_plain_name(local) => format!("mmdb:{local}"),
        _ => format!("<{s}>"),
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, items: &[Value]) -> fmt::Result {
    f.write_str("(")?;
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(")")
}

/// Writes values in the textual literal syntax of net-definition files.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(&quote(s)),
            Value::Int(i) => write!(f, "{i}"),
            Value::Literal(s) => write!(f, "{}::L", quote(s)),
            Value::Iri(s) => f.write_str(&format_iri(s)),
            Value::Oid(s) => f.write_str(&format_oid(s)),
            Value::Rect(r) => write!(f, "{r}"),
            Value::Set(set) => {
                write!(f, "set<{}>{{", format_color(&set.elem))?;
                for (i, item) in set.items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if item.len() == 1 {
                        write!(f, "{}", item[0])?;
                    } else {
                        write_tuple(f, item)?;
                    }
                }
                f.write_str("}")
            }
            Value::Tuple(items) => write_tuple(f, items),
            Value::Media(img) => write!(
                f,
                "<media {}x{}, {} regions, {} decorations>",
                img.width,
                img.height,
                img.regions.len(),
                img.decorations.len()
            ),
        }
    }
}

/// Errors raised while evaluating predicates, functions, and casts.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no cast rule from {from} to {to}")]
    NoCastRule { from: DataType, to: DataType },
    #[error("cannot cast {value} to {to}")]
    CastFailure { value: String, to: DataType },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch { name: String, expected: String, found: usize },
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch { context: String, expected: String, found: String },
    #[error("`{0}` applied to an empty set")]
    EmptySetAccess(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("integer overflow in `{0}`")]
    Overflow(String),
    #[error(transparent)]
    Media(#[from] MediaError),
}

/// The cast function `::`. Supported pairs are the identity, every ordinary
/// type to and from RDF literals, and strings to and from IRIs.
pub fn cast(v: &Value, target: &DataType) -> Result<Value, EvalError> {
    let from = v.data_type();
    if &from == target {
        return Ok(v.clone());
    }
    let fail = || EvalError::CastFailure { value: v.to_string(), to: target.clone() };
    let out = match (v, target) {
        (Value::Str(s) | Value::Oid(s) | Value::Iri(s), DataType::Literal) => Value::Literal(s.clone()),
        (Value::Int(i), DataType::Literal) => Value::Literal(i.to_string()),
        (Value::Rect(r), DataType::Literal) => Value::Literal(r.to_string()),
        (Value::Literal(s), DataType::Str) => Value::Str(s.clone()),
        (Value::Literal(s), DataType::Oid) => Value::Oid(s.clone()),
        (Value::Literal(s), DataType::Iri) => Value::Iri(s.clone()),
        (Value::Literal(s), DataType::Int) => {
            let i: i64 = s.trim().parse().map_err(|_| fail())?;
            if i.to_string() != *s {
                // keep the round trip lossless: "03" or " 3" are not integers
                return Err(fail());
            }
            Value::Int(i)
        }
        (Value::Literal(s), DataType::Rect) => {
            let r: Rect = s.parse().map_err(|_| fail())?;
            if r.to_string() != *s {
                return Err(fail());
            }
            Value::Rect(r)
        }
        (Value::Str(s), DataType::Iri) => Value::Iri(s.clone()),
        (Value::Iri(s), DataType::Str) => Value::Str(s.clone()),
        _ => return Err(EvalError::NoCastRule { from, to: target.clone() }),
    };
    Ok(out)
}

/// Whether `cast` has a rule from `from` to `to` (it may still fail on a
/// particular value, e.g. a non-numeric literal cast to `int`).
pub fn can_cast(from: &DataType, to: &DataType) -> bool {
    use DataType::*;
    from == to
        || matches!(
            (from, to),
            (Str | Oid | Iri | Int | Rect, Literal) | (Literal, Str | Oid | Iri | Int | Rect) | (Str, Iri) | (Iri, Str)
        )
}
