//! Parameterized actions over a storage instance.
//!
//! An action deletes and adds metadata triples and deletes, creates or
//! updates addressed objects. Additions win over deletions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Env, Expr, TypeEnv, Var};
use crate::media::{Address, ObjectStore, SyntheticImage};
use crate::rdf::{MetadataGraph, Term, Triple, MMDB_NS};
use crate::types::{cast, DataType, EvalError, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("action `{action}`: missing parameter `{param}`")]
    MissingParameter { action: String, param: String },
    #[error("action `{action}`: parameter `{param}` expects {expected}, got {found}")]
    TypeMismatch { action: String, param: String, expected: DataType, found: String },
    #[error("action `{action}` expects {expected} argument(s), got {found}")]
    ArityMismatch { action: String, expected: usize, found: usize },
    #[error("action `{action}`: {position} must evaluate to an RDF term, got {found}")]
    NotATerm { action: String, position: &'static str, found: String },
    #[error("action `{action}`: predicate must be an IRI, got literal {found}")]
    LiteralPredicate { action: String, found: String },
    #[error("action `{action}`: expected an object address, got {found}")]
    NotAnAddress { action: String, found: String },
    #[error("action `{action}`: conflicting objects generated for address {address}")]
    ConflictingGenerators { action: String, address: String },
    #[error("action `{action}`: {source}")]
    Eval { action: String, source: EvalError },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: DataType,
}

impl Param {
    pub fn new(name: &str, ty: DataType) -> Param {
        Param { name: name.into(), ty }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TripleTemplate {
    pub subject: Expr,
    pub predicate: Expr,
    pub object: Expr,
}

impl TripleTemplate {
    pub fn new(subject: Expr, predicate: Expr, object: Expr) -> Self {
        TripleTemplate { subject, predicate, object }
    }

    fn exprs(&self) -> [&Expr; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

/// `target ▷ function(args)`: writes the function's result at `target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub target: Expr,
    pub function: String,
    pub args: Vec<Expr>,
}

impl Generator {
    fn as_call(&self) -> Expr {
        Expr::Call(self.function.clone(), self.args.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub del_mm: Vec<TripleTemplate>,
    pub add_mm: Vec<TripleTemplate>,
    pub del_mo: Vec<Expr>,
    pub add_mo: Vec<Generator>,
}

/// The storage instance `(M_db, O_db)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Storage {
    pub metadata: Arc<MetadataGraph>,
    pub objects: Arc<ObjectStore>,
}

impl Storage {
    pub fn new(metadata: MetadataGraph, objects: ObjectStore) -> Storage {
        Storage { metadata: Arc::new(metadata), objects: Arc::new(objects) }
    }

    /// Object addresses named by `mmdb:address` triples that do not resolve.
    pub fn dangling_addresses(&self) -> Vec<String> {
        let address = Term::Iri(format!("{MMDB_NS}address"));
        self.metadata
            .matching(None, Some(&address), None)
            .map(|t| t.object.text().to_string())
            .filter(|a| !self.objects.contains(&Address::new(a.clone())))
            .collect()
    }
}

/// An action with its parameters replaced by constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionInstance {
    pub name: String,
    pub args: Vec<Value>,
    del_mm: Vec<TripleTemplate>,
    add_mm: Vec<TripleTemplate>,
    del_mo: Vec<Expr>,
    add_mo: Vec<Generator>,
}

/// The four effect sets of an instance, evaluated against a storage instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundEffects {
    pub del_mm: BTreeSet<Triple>,
    pub add_mm: BTreeSet<Triple>,
    pub del_mo: BTreeSet<Address>,
    pub add_mo: BTreeMap<Address, Arc<SyntheticImage>>,
}

impl ActionDef {
    pub fn new(name: &str, params: Vec<Param>) -> ActionDef {
        ActionDef { name: name.into(), params, del_mm: vec![], add_mm: vec![], del_mo: vec![], add_mo: vec![] }
    }

    pub fn param_types(&self) -> TypeEnv {
        self.params.iter().map(|p| (Var::new(&p.name), p.ty.clone())).collect()
    }

    /// Static well-formedness; each entry describes one violation.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        for p in &self.params {
            if !seen.insert(&p.name) {
                errors.push(format!("action `{}`: duplicate parameter `{}`", self.name, p.name));
            }
        }
        let types = self.param_types();
        let check_vars = |e: &Expr, errors: &mut Vec<String>| {
            for v in e.vars() {
                if v.fresh || !types.contains_key(&v) {
                    errors.push(format!("action `{}`: `{v}` is not a parameter", self.name));
                }
            }
        };
        for (part, templates) in [("del-mm", &self.del_mm), ("add-mm", &self.add_mm)] {
            for t in templates {
                for (pos, e) in ["subject", "predicate", "object"].into_iter().zip(t.exprs()) {
                    check_vars(e, &mut errors);
                    match e.infer(&types) {
                        Ok(DataType::Iri) => {}
                        Ok(DataType::Literal) if pos != "predicate" => {}
                        Ok(other) => errors.push(format!(
                            "action `{}`: {part} {pos} `{e}` has type {other}, expected {}",
                            self.name,
                            if pos == "predicate" { "I" } else { "L or I" }
                        )),
                        Err(err) => errors.push(format!("action `{}`: {part} {pos} `{e}`: {err}", self.name)),
                    }
                }
            }
        }
        for e in &self.del_mo {
            check_vars(e, &mut errors);
            match e.infer(&types) {
                Ok(DataType::Oid) => {}
                Ok(other) => errors.push(format!("action `{}`: del-mo `{e}` has type {other}, expected oid", self.name)),
                Err(err) => errors.push(format!("action `{}`: del-mo `{e}`: {err}", self.name)),
            }
        }
        for g in &self.add_mo {
            check_vars(&g.target, &mut errors);
            match g.target.infer(&types) {
                Ok(DataType::Oid) => {}
                Ok(other) => {
                    errors.push(format!("action `{}`: add-mo target `{}` has type {other}, expected oid", self.name, g.target))
                }
                Err(err) => errors.push(format!("action `{}`: add-mo target `{}`: {err}", self.name, g.target)),
            }
            let call = g.as_call();
            check_vars(&call, &mut errors);
            match call.infer(&types) {
                Ok(t) if t.is_media() => {}
                Ok(other) => errors.push(format!(
                    "action `{}`: generator `{call}` yields {other}, expected a media type",
                    self.name
                )),
                Err(err) => errors.push(format!("action `{}`: generator `{call}`: {err}", self.name)),
            }
        }
        errors
    }

    /// Advisory consistency warnings: object deletions without matching
    /// metadata deletions, and object creations without an address triple.
    pub fn lint(&self) -> Vec<String> {
        fn mentions(template: &TripleTemplate, e: &Expr) -> bool {
            let vars = e.vars();
            template.exprs().iter().any(|t| {
                !t.vars().is_disjoint(&vars) || (vars.is_empty() && contains_const(t, e))
            })
        }
        fn contains_const(hay: &Expr, needle: &Expr) -> bool {
            let Expr::Const(n) = needle else { return false };
            match hay {
                Expr::Const(c) => c.lexical().is_some() && c.lexical() == n.lexical(),
                Expr::Call(_, args) => args.iter().any(|a| contains_const(a, needle)),
                Expr::Cast(e, _) => contains_const(e, needle),
                Expr::Var(_) => false,
            }
        }
        let address = Expr::Const(Value::iri(format!("{MMDB_NS}address")));
        let mut warnings = Vec::new();
        for e in &self.del_mo {
            if !self.del_mm.iter().any(|t| mentions(t, e)) {
                warnings.push(format!("action `{}` deletes object `{e}` but none of its metadata", self.name));
            }
        }
        for g in &self.add_mo {
            let updates = g.args.iter().any(|a| a.reads_source_of(&g.target));
            let registered = self.add_mm.iter().any(|t| {
                t.predicate == address && {
                    let obj = TripleTemplate::new(t.object.clone(), t.object.clone(), t.object.clone());
                    mentions(&obj, &g.target)
                }
            });
            if !updates && !registered {
                warnings.push(format!(
                    "action `{}` creates object `{}` without adding an mmdb:address triple for it",
                    self.name, g.target
                ));
            }
        }
        warnings
    }

    /// `ασ`: substitutes the parameters, casting each value to its declared type.
    pub fn instantiate(&self, sigma: &BTreeMap<String, Value>) -> Result<ActionInstance, ActionError> {
        let mut env = Env::new();
        let mut args = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let v = sigma
                .get(&p.name)
                .ok_or_else(|| ActionError::MissingParameter { action: self.name.clone(), param: p.name.clone() })?;
            let v = cast(v, &p.ty).map_err(|_| ActionError::TypeMismatch {
                action: self.name.clone(),
                param: p.name.clone(),
                expected: p.ty.clone(),
                found: v.data_type().to_string(),
            })?;
            env.insert(Var::new(&p.name), v.clone());
            args.push(v);
        }
        let sub_t = |t: &TripleTemplate| {
            TripleTemplate::new(t.subject.substitute(&env), t.predicate.substitute(&env), t.object.substitute(&env))
        };
        Ok(ActionInstance {
            name: self.name.clone(),
            args,
            del_mm: self.del_mm.iter().map(sub_t).collect(),
            add_mm: self.add_mm.iter().map(sub_t).collect(),
            del_mo: self.del_mo.iter().map(|e| e.substitute(&env)).collect(),
            add_mo: self
                .add_mo
                .iter()
                .map(|g| Generator {
                    target: g.target.substitute(&env),
                    function: g.function.clone(),
                    args: g.args.iter().map(|a| a.substitute(&env)).collect(),
                })
                .collect(),
        })
    }

    /// Instantiates with positional arguments.
    pub fn instantiate_positional(&self, args: &[Value]) -> Result<ActionInstance, ActionError> {
        if args.len() != self.params.len() {
            return Err(ActionError::ArityMismatch {
                action: self.name.clone(),
                expected: self.params.len(),
                found: args.len(),
            });
        }
        let sigma = self.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
        self.instantiate(&sigma)
    }
}

impl ActionInstance {
    fn eval(&self, e: &Expr, objects: &ObjectStore) -> Result<Value, ActionError> {
        e.eval(&Env::new(), objects).map_err(|source| ActionError::Eval { action: self.name.clone(), source })
    }

    fn ground_triple(&self, t: &TripleTemplate, objects: &ObjectStore) -> Result<Triple, ActionError> {
        let mut terms = Vec::with_capacity(3);
        for (pos, e) in ["subject", "predicate", "object"].into_iter().zip(t.exprs()) {
            let v = self.eval(e, objects)?;
            let term = Term::from_value(&v).ok_or_else(|| ActionError::NotATerm {
                action: self.name.clone(),
                position: pos,
                found: v.to_string(),
            })?;
            terms.push(term);
        }
        let [s, p, o]: [Term; 3] = terms.try_into().expect("three positions");
        Triple::new(s, p, o).map_err(|_| ActionError::LiteralPredicate {
            action: self.name.clone(),
            found: t.predicate.to_string(),
        })
    }

    fn address(&self, e: &Expr, objects: &ObjectStore) -> Result<Address, ActionError> {
        match self.eval(e, objects)? {
            Value::Oid(a) => Ok(Address::new(a)),
            other => Err(ActionError::NotAnAddress { action: self.name.clone(), found: other.to_string() }),
        }
    }

    /// Evaluates every effect against the given (pre-state) object store.
    pub fn ground(&self, objects: &ObjectStore) -> Result<GroundEffects, ActionError> {
        let mut out = GroundEffects::default();
        for t in &self.del_mm {
            out.del_mm.insert(self.ground_triple(t, objects)?);
        }
        for t in &self.add_mm {
            out.add_mm.insert(self.ground_triple(t, objects)?);
        }
        for e in &self.del_mo {
            out.del_mo.insert(self.address(e, objects)?);
        }
        for g in &self.add_mo {
            let target = self.address(&g.target, objects)?;
            let obj = match self.eval(&g.as_call(), objects)? {
                Value::Media(m) => m,
                other => return Err(ActionError::NotAnAddress { action: self.name.clone(), found: other.to_string() }),
            };
            match out.add_mo.get(&target) {
                Some(prev) if prev != &obj => {
                    return Err(ActionError::ConflictingGenerators { action: self.name.clone(), address: target.0 })
                }
                _ => {
                    out.add_mo.insert(target, obj);
                }
            }
        }
        Ok(out)
    }

    /// `apply(ασ, I)`.
    pub fn apply(&self, storage: &Storage) -> Result<Storage, ActionError> {
        Ok(self.ground(&storage.objects)?.apply(storage))
    }
}

impl GroundEffects {
    /// `M' = (M ∖ mm⁻) ∪ mm⁺`; objects: deletions first, then generator writes.
    pub fn apply(&self, storage: &Storage) -> Storage {
        let metadata = if self.del_mm.is_empty() && self.add_mm.is_empty() {
            storage.metadata.clone()
        } else {
            Arc::new(storage.metadata.delete(&self.del_mm).insert(&self.add_mm))
        };
        let objects = if self.del_mo.is_empty() && self.add_mo.is_empty() {
            storage.objects.clone()
        } else {
            let mut o = (*storage.objects).clone();
            for a in &self.del_mo {
                o = o.remove(a);
            }
            for (a, obj) in &self.add_mo {
                o = o.put_or_update(a.clone(), obj.clone());
            }
            Arc::new(o)
        };
        Storage { metadata, objects }
    }
}
