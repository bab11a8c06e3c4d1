//! Terms and guard formulas shared by arc inscriptions, guards and actions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::media::ObjectStore;
use crate::types::registry::standard;
use crate::types::{cast, can_cast, DataType, EvalError, Value};

/// A variable; fresh (ν) variables are distinct from ordinary ones of the same name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub fresh: bool,
}

impl Var {
    pub fn new(name: impl Into<String>) -> Var {
        Var { name: name.into(), fresh: false }
    }

    pub fn fresh(name: impl Into<String>) -> Var {
        Var { name: name.into(), fresh: true }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fresh {
            write!(f, "ν{}", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

pub type Env = BTreeMap<Var, Value>;
pub type TypeEnv = BTreeMap<Var, DataType>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(Var),
    Const(Value),
    Call(String, Vec<Expr>),
    Cast(Box<Expr>, DataType),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Var::new(name))
    }

    pub fn fresh(name: &str) -> Expr {
        Expr::Var(Var::fresh(name))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.into(), args)
    }

    pub fn cast(self, ty: DataType) -> Expr {
        Expr::Cast(Box::new(self), ty)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Const(_) => {}
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Cast(e, _) => e.collect_vars(out),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Whether the term contains `src(v)` for the given variable-or-constant term.
    pub fn reads_source_of(&self, target: &Expr) -> bool {
        match self {
            Expr::Call(f, args) if f == "src" && args.len() == 1 && &args[0] == target => true,
            Expr::Call(_, args) => args.iter().any(|a| a.reads_source_of(target)),
            Expr::Cast(e, _) => e.reads_source_of(target),
            _ => false,
        }
    }

    pub fn eval(&self, env: &Env, store: &ObjectStore) -> Result<Value, EvalError> {
        match self {
            Expr::Var(v) => env.get(v).cloned().ok_or_else(|| EvalError::UnboundVariable(v.to_string())),
            Expr::Const(c) => Ok(c.clone()),
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(env, store)).collect::<Result<Vec<_>, _>>()?;
                standard().eval_function(f, &vals, store)
            }
            Expr::Cast(e, ty) => cast(&e.eval(env, store)?, ty),
        }
    }

    /// Static type under the given variable types.
    pub fn infer(&self, types: &TypeEnv) -> Result<DataType, EvalError> {
        match self {
            Expr::Var(v) => types.get(v).cloned().ok_or_else(|| EvalError::UnboundVariable(v.to_string())),
            Expr::Const(c) => Ok(c.data_type()),
            Expr::Call(f, args) => {
                let tys = args.iter().map(|a| a.infer(types)).collect::<Result<Vec<_>, _>>()?;
                standard().function_type(f, &tys)
            }
            Expr::Cast(e, ty) => {
                let from = e.infer(types)?;
                if can_cast(&from, ty) {
                    Ok(ty.clone())
                } else {
                    Err(EvalError::NoCastRule { from, to: ty.clone() })
                }
            }
        }
    }

    /// Replaces bound variables by constants.
    pub fn substitute(&self, env: &Env) -> Expr {
        match self {
            Expr::Var(v) => env.get(v).map_or_else(|| self.clone(), |c| Expr::Const(c.clone())),
            Expr::Const(_) => self.clone(),
            Expr::Call(f, args) => Expr::Call(f.clone(), args.iter().map(|a| a.substitute(env)).collect()),
            Expr::Cast(e, ty) => Expr::Cast(Box::new(e.substitute(env)), ty.clone()),
        }
    }
}

fn is_minus(e: &Expr) -> bool {
    matches!(e, Expr::Call(f, args) if f == "minus" && args.len() == 2)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Call(name, args) if name == "minus" && args.len() == 2 => {
                if is_minus(&args[1]) {
                    write!(f, "{} - ({})", args[0], args[1])
                } else {
                    write!(f, "{} - {}", args[0], args[1])
                }
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Cast(e, ty) => {
                if is_minus(e) {
                    write!(f, "({e})::{ty}")
                } else {
                    write!(f, "{e}::{ty}")
                }
            }
        }
    }
}

/// Guard formulas: predicate atoms closed under negation, conjunction and disjunction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    Pred(String, Vec<Expr>),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn pred(name: &str, args: Vec<Expr>) -> Guard {
        Guard::Pred(name.into(), args)
    }

    pub fn eq(a: Expr, b: Expr) -> Guard {
        Guard::pred("=", vec![a, b])
    }

    pub fn not(self) -> Guard {
        Guard::Not(Box::new(self))
    }

    pub fn and(self, other: Guard) -> Guard {
        Guard::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Guard) -> Guard {
        Guard::Or(Box::new(self), Box::new(other))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Guard::True => {}
            Guard::Pred(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Guard::Not(g) => g.collect_vars(out),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn eval(&self, env: &Env, store: &ObjectStore) -> Result<bool, EvalError> {
        Ok(match self {
            Guard::True => true,
            Guard::Pred(p, args) => {
                let vals = args.iter().map(|a| a.eval(env, store)).collect::<Result<Vec<_>, _>>()?;
                standard().eval_predicate(p, &vals)?
            }
            Guard::Not(g) => !g.eval(env, store)?,
            Guard::And(a, b) => a.eval(env, store)? && b.eval(env, store)?,
            Guard::Or(a, b) => a.eval(env, store)? || b.eval(env, store)?,
        })
    }

    pub fn check(&self, types: &TypeEnv) -> Result<(), EvalError> {
        match self {
            Guard::True => Ok(()),
            Guard::Pred(p, args) => {
                let tys = args.iter().map(|a| a.infer(types)).collect::<Result<Vec<_>, _>>()?;
                standard().check_predicate(p, &tys)
            }
            Guard::Not(g) => g.check(types),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.check(types)?;
                b.check(types)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Guard::Or(..) => 0,
            Guard::And(..) => 1,
            _ => 2,
        }
    }
}

const INFIX: &[&str] = &["=", "!=", "<", ">", "<=", ">="];

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, g: &Guard, min: u8| {
            if g.precedence() < min {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        };
        match self {
            Guard::True => f.write_str("true"),
            Guard::Pred(p, args) if INFIX.contains(&p.as_str()) && args.len() == 2 => {
                write!(f, "{} {p} {}", args[0], args[1])
            }
            Guard::Pred(p, args) => write!(f, "{}", Expr::Call(p.clone(), args.clone())),
            Guard::Not(g) => {
                f.write_str("!")?;
                // `!a = b` would read as a negated left operand, `!=_int(..)` as `!=`
                if matches!(**g, Guard::Pred(ref p, _) if !p.starts_with(char::is_alphabetic)) {
                    write!(f, "({g})")
                } else {
                    child(f, g, 2)
                }
            }
            Guard::And(a, b) => {
                child(f, a, 1)?;
                f.write_str(" && ")?;
                child(f, b, 2)
            }
            Guard::Or(a, b) => {
                child(f, a, 0)?;
                f.write_str(" || ")?;
                child(f, b, 1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TypedSet;

    fn env(pairs: &[(&str, Value)]) -> Env {
        pairs.iter().map(|(k, v)| (Var::new(*k), v.clone())).collect()
    }

    #[test]
    fn eval_cast_and_minus() {
        let e = Expr::call("minus", vec![Expr::var("c").cast(DataType::Int), Expr::Const(Value::Int(1))]);
        let v = e.eval(&env(&[("c", Value::literal("3"))]), &ObjectStore::new()).unwrap();
        assert_eq!(v, Value::Int(2));
        assert_eq!(e.to_string(), "c::int - 1");
    }

    #[test]
    fn unbound_variable() {
        assert_eq!(
            Expr::fresh("a").eval(&Env::new(), &ObjectStore::new()),
            Err(EvalError::UnboundVariable("νa".into()))
        );
    }

    #[test]
    fn guard_with_casts() {
        let g = Guard::eq(Expr::var("id"), Expr::var("id'").cast(DataType::Str))
            .and(Guard::pred(">", vec![Expr::var("c"), Expr::Const(Value::Int(0))]));
        let e = env(&[("id", Value::str("i1")), ("id'", Value::literal("i1")), ("c", Value::Int(2))]);
        assert_eq!(g.eval(&e, &ObjectStore::new()), Ok(true));
        assert_eq!(g.to_string(), "id = id'::str && c > 0");
    }

    #[test]
    fn guard_typing() {
        let types: TypeEnv =
            [(Var::new("s"), DataType::Set(vec![DataType::Str])), (Var::new("c"), DataType::Int)].into_iter().collect();
        assert!(Guard::pred("empty", vec![Expr::var("s")]).not().check(&types).is_ok());
        assert!(Guard::pred("empty", vec![Expr::var("c")]).check(&types).is_err());
        assert!(matches!(
            Guard::eq(Expr::var("x"), Expr::var("c")).check(&types),
            Err(EvalError::UnboundVariable(_))
        ));
    }

    #[test]
    fn guard_display_parenthesizes() {
        let a = Guard::eq(Expr::var("x"), Expr::Const(Value::str("human")));
        let b = Guard::eq(Expr::var("x"), Expr::Const(Value::str("product")));
        let g = a.clone().or(b).not().and(Guard::True);
        assert_eq!(g.to_string(), "!(x = \"human\" || x = \"product\") && true");
        assert_eq!(a.not().to_string(), "!(x = \"human\")");
    }

    #[test]
    fn infer_set_functions() {
        let types: TypeEnv = [(Var::new("s"), DataType::Set(vec![DataType::Str, DataType::Oid]))].into_iter().collect();
        let e = Expr::call("rem", vec![Expr::var("s"), Expr::call("getL", vec![Expr::var("s")])]);
        assert_eq!(e.infer(&types), Ok(DataType::Set(vec![DataType::Str, DataType::Oid])));
        let set = TypedSet::from_items(vec![DataType::Str, DataType::Oid], [vec![Value::str("x"), Value::oid("y")]]).unwrap();
        let out = e.eval(&env(&[("s", Value::Set(set))]), &ObjectStore::new()).unwrap();
        assert_eq!(out, Value::Set(TypedSet::empty(vec![DataType::Str, DataType::Oid])));
    }

    #[test]
    fn substitute_replaces_bound_only() {
        let e = Expr::call("ins", vec![Expr::var("s"), Expr::fresh("id")]);
        let sub = e.substitute(&env(&[("s", Value::Int(1))]));
        assert_eq!(sub, Expr::call("ins", vec![Expr::Const(Value::Int(1)), Expr::fresh("id")]));
        assert!(e.reads_source_of(&Expr::var("a")) == false);
        assert!(Expr::call("sub", vec![Expr::call("src", vec![Expr::var("a")])]).reads_source_of(&Expr::var("a")));
    }
}
