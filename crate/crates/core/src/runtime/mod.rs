//! Execution semantics: snapshots, bindings, enablement and firing.

mod canon;
mod explore;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

pub use canon::{canonical_key, StateKey};
pub use explore::{Bounds, Edge, ExploreOptions, Lts, Reachability, Truncation};
pub use trace::{format_binding, Step, Trace};

use crate::action::{ActionDef, ActionError, Storage};
use crate::expr::{Env, Expr, Guard, TypeEnv, Var};
use crate::net::{FlowKind, Net, ValidationError};
use crate::query::{answer_rows, Query};
use crate::types::{cast, DataType, EvalError, Multiset, Value};

pub type Marking = BTreeMap<String, Multiset<Vec<Value>>>;
pub type Binding = BTreeMap<Var, Value>;

/// Prefix of every value minted for a fresh variable.
pub const FRESH_PREFIX: &str = "ν:";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("transition `{transition}`: no supply for external-input variable `{var}`")]
    NoSupply { transition: String, var: String },
    #[error("transition `{transition}` is not enabled: {reason}")]
    NotEnabled { transition: String, reason: String },
    #[error("transition `{transition}`: {source}")]
    Eval { transition: String, source: EvalError },
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("view `{place}`: {message}")]
    View { place: String, message: String },
    #[error("initial marking: {0}")]
    InitialMarking(String),
}

/// `(I, m)`: storage plus marking. View places are kept up to date with
/// their queries. `minted` counts fresh values handed out so far; it is
/// bookkeeping, not part of the state's identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub storage: Storage,
    pub marking: Marking,
    pub minted: u64,
}

impl Snapshot {
    pub fn tokens(&self, place: &str) -> Option<&Multiset<Vec<Value>>> {
        self.marking.get(place)
    }

    pub fn count(&self, place: &str) -> usize {
        self.marking.get(place).map_or(0, Multiset::size)
    }

    /// `place:count` for every nonempty place, in net order.
    pub fn summary(&self, net: &Net) -> String {
        let parts: Vec<String> = net
            .places
            .keys()
            .filter_map(|p| {
                let n = self.count(p);
                (n > 0).then(|| format!("{p}:{n}"))
            })
            .collect();
        format!(
            "{} | triples:{} objects:{}",
            if parts.is_empty() { "-".to_string() } else { parts.join(" ") },
            self.storage.metadata.len(),
            self.storage.objects.len()
        )
    }
}

/// `Val(s)`: every constant in the marking and the storage.
pub fn values_of(s: &Snapshot) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    for tokens in s.marking.values() {
        for tok in tokens.distinct() {
            for v in tok {
                v.for_each_atom(&mut |a| {
                    out.insert(a.clone());
                });
            }
        }
    }
    for t in s.storage.metadata.iter() {
        for term in t.terms() {
            out.insert(term.to_value());
        }
    }
    for (a, obj) in s.storage.objects.iter() {
        out.insert(Value::Oid(a.0.clone()));
        for r in &obj.regions {
            out.insert(Value::Str(r.tag.clone()));
            out.insert(Value::Rect(r.bbox));
        }
        for d in &obj.decorations {
            out.insert(Value::Str(d.shape.clone()));
            out.insert(Value::Str(d.color.clone()));
            out.insert(Value::Rect(d.bbox));
        }
    }
    out
}

fn lexicals(values: &BTreeSet<Value>) -> BTreeSet<String> {
    values.iter().filter_map(Value::lexical).collect()
}

/// Source of values for external-input variables.
pub trait InputSupply {
    /// Candidate values for `var`, or `None` when it has no supply.
    fn values(&self, var: &str) -> Option<Vec<Value>>;
}

/// Per-variable finite value lists. As an [`InputSupply`] it offers every value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Supply {
    pub lists: BTreeMap<String, Vec<Value>>,
}

impl Supply {
    pub fn new(lists: BTreeMap<String, Vec<Value>>) -> Supply {
        Supply { lists }
    }

    pub fn with(mut self, var: &str, values: Vec<Value>) -> Supply {
        self.lists.insert(var.into(), values);
        self
    }

    pub fn round_robin(&self) -> RoundRobin<'_> {
        RoundRobin { supply: self, cursor: BTreeMap::new() }
    }
}

impl InputSupply for Supply {
    fn values(&self, var: &str) -> Option<Vec<Value>> {
        self.lists.get(var).filter(|l| !l.is_empty()).cloned()
    }
}

/// Offers one value per variable, cycling through the list as values are used.
#[derive(Clone, Debug)]
pub struct RoundRobin<'a> {
    supply: &'a Supply,
    cursor: BTreeMap<String, usize>,
}

impl RoundRobin<'_> {
    /// Moves past the values used by a fired binding.
    pub fn advance(&mut self, vars: impl IntoIterator<Item = String>) {
        for v in vars {
            *self.cursor.entry(v).or_insert(0) += 1;
        }
    }
}

impl InputSupply for RoundRobin<'_> {
    fn values(&self, var: &str) -> Option<Vec<Value>> {
        let list = self.supply.lists.get(var).filter(|l| !l.is_empty())?;
        let i = self.cursor.get(var).copied().unwrap_or(0) % list.len();
        Some(vec![list[i].clone()])
    }
}

struct TransitionInfo {
    name: String,
    inputs: Vec<(String, Vec<Var>)>,
    reads: Vec<(String, Vec<Var>)>,
    outputs: Vec<(String, Vec<Expr>)>,
    guard: Guard,
    action: Option<(ActionDef, Vec<Expr>)>,
    types: TypeEnv,
    fresh: Vec<Var>,
    external: Vec<Var>,
}

/// A validated net ready for simulation.
pub struct Runtime {
    net: Net,
    infos: IndexMap<String, TransitionInfo>,
    views: Vec<(String, Query, Vec<DataType>)>,
}

fn vars_of(inscription: &[Expr]) -> Vec<Var> {
    inscription.iter().filter_map(|e| e.as_var().cloned()).collect()
}

impl Runtime {
    /// Validates the net; any error makes it unusable for simulation.
    pub fn new(net: Net) -> Result<Runtime, Vec<ValidationError>> {
        let errors = net.validate();
        if !errors.is_empty() {
            return Err(errors);
        }
        let mut infos = IndexMap::new();
        for (name, tr) in &net.transitions {
            let mut sink = Vec::new();
            let types = crate::net::infer_types(&net, name, &mut sink);
            let mut inputs = Vec::new();
            let mut reads = Vec::new();
            let mut outputs = Vec::new();
            for f in net.flows_of(name) {
                match f.kind {
                    FlowKind::Input => inputs.push((f.place.clone(), vars_of(&f.inscription))),
                    FlowKind::Read => reads.push((f.place.clone(), vars_of(&f.inscription))),
                    FlowKind::Output => outputs.push((f.place.clone(), f.inscription.clone())),
                }
            }
            let action = tr.action.as_ref().map(|c| (net.actions[&c.action].clone(), c.args.clone()));
            let fresh = net.fresh_out_vars(name).expect("known transition").into_iter().collect();
            let external = net.external_vars(name).expect("known transition").into_iter().collect();
            infos.insert(
                name.clone(),
                TransitionInfo { name: name.clone(), inputs, reads, outputs, guard: tr.guard.clone(), action, types, fresh, external },
            );
        }
        let views = net
            .views()
            .map(|p| (p.name.clone(), p.query().expect("view").clone(), p.color.clone()))
            .collect();
        Ok(Runtime { net, infos, views })
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    fn info(&self, t: &str) -> Result<&TransitionInfo, RuntimeError> {
        self.infos.get(t).ok_or_else(|| RuntimeError::UnknownTransition(t.into()))
    }

    /// Snapshot built from the net's initial tokens and the given storage.
    pub fn initial_snapshot(&self, storage: Storage) -> Result<Snapshot, RuntimeError> {
        let mut marking = Marking::new();
        for p in self.net.places.values().filter(|p| !p.is_view()) {
            marking.insert(p.name.clone(), Multiset::new());
        }
        for (place, tuple, n) in &self.net.init.tokens {
            let tok: Vec<Value> = tuple.iter().cloned().flat_map(Value::flatten).collect();
            marking
                .get_mut(place)
                .ok_or_else(|| RuntimeError::InitialMarking(format!("unknown place `{place}`")))?
                .add(tok, *n);
        }
        let mut s = Snapshot { storage, marking, minted: 0 };
        self.refresh_views(&mut s)?;
        Ok(s)
    }

    /// Replaces every view marking by the answers of its query.
    fn refresh_views(&self, s: &mut Snapshot) -> Result<(), RuntimeError> {
        for (place, q, color) in &self.views {
            let mut tokens = Multiset::new();
            for row in answer_rows(&s.storage.metadata, q) {
                let tok = row
                    .iter()
                    .zip(color)
                    .map(|(term, ty)| cast(&term.to_value(), ty))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| RuntimeError::View { place: place.clone(), message: e.to_string() })?;
                tokens.add(tok, 1);
            }
            s.marking.insert(place.clone(), tokens);
        }
        Ok(())
    }

    /// The marking every view place must have in storage `storage`.
    pub fn view_markings(&self, storage: &Storage) -> Result<Marking, RuntimeError> {
        let mut s = Snapshot { storage: storage.clone(), marking: Marking::new(), minted: 0 };
        self.refresh_views(&mut s)?;
        Ok(s.marking)
    }

    /// Assignments of the input variables drawn from tokens, respecting
    /// multiplicities when several arcs read the same place.
    fn input_envs(&self, info: &TransitionInfo, s: &Snapshot) -> Vec<Env> {
        struct Search<'a> {
            arcs: Vec<(&'a str, &'a [Var], bool)>,
            s: &'a Snapshot,
            out: Vec<Env>,
        }
        impl Search<'_> {
            fn go(&mut self, i: usize, env: &mut Env, used: &mut BTreeMap<(usize, Vec<Value>), usize>) {
                if i == self.arcs.len() {
                    self.out.push(env.clone());
                    return;
                }
                let (place, vars, consuming) = self.arcs[i];
                let Some(tokens) = self.s.marking.get(place) else { return };
                let place_id = self.arcs.iter().position(|a| a.0 == place).expect("present");
                for (tok, count) in tokens.iter() {
                    if tok.len() != vars.len() {
                        continue;
                    }
                    let key = (place_id, tok.clone());
                    if consuming && used.get(&key).copied().unwrap_or(0) >= count {
                        continue;
                    }
                    let mut added = Vec::new();
                    let mut ok = true;
                    for (v, val) in vars.iter().zip(tok) {
                        match env.get(v) {
                            Some(prev) if prev != val => {
                                ok = false;
                                break;
                            }
                            Some(_) => {}
                            None => {
                                env.insert(v.clone(), val.clone());
                                added.push(v);
                            }
                        }
                    }
                    if ok {
                        if consuming {
                            *used.entry(key.clone()).or_insert(0) += 1;
                        }
                        self.go(i + 1, env, used);
                        if consuming {
                            *used.get_mut(&key).expect("just added") -= 1;
                        }
                    }
                    for v in added {
                        env.remove(v);
                    }
                }
            }
        }
        let arcs = info
            .inputs
            .iter()
            .map(|(p, v)| (p.as_str(), v.as_slice(), true))
            .chain(info.reads.iter().map(|(p, v)| (p.as_str(), v.as_slice(), false)))
            .collect();
        let mut search = Search { arcs, s, out: Vec::new() };
        search.go(0, &mut Env::new(), &mut BTreeMap::new());
        search.out
    }

    fn eval_err(t: &str) -> impl Fn(EvalError) -> RuntimeError + '_ {
        move |source| RuntimeError::Eval { transition: t.into(), source }
    }

    /// Every binding under which `t` is enabled in `s`. Fresh variables get
    /// one canonical choice of new values, so the result is finite.
    pub fn enabled_bindings(&self, t: &str, s: &Snapshot, supply: &dyn InputSupply) -> Result<Vec<Binding>, RuntimeError> {
        let info = self.info(t)?;
        let mut candidates = Vec::new();
        for env in self.input_envs(info, s) {
            if info.guard.eval(&env, &s.storage.objects).map_err(Self::eval_err(t))? {
                candidates.push(env);
            }
        }
        if candidates.is_empty() {
            return Ok(candidates);
        }
        let mut external_values = Vec::new();
        for v in &info.external {
            let vals = supply
                .values(&v.name)
                .ok_or_else(|| RuntimeError::NoSupply { transition: t.into(), var: v.name.clone() })?;
            let ty = &info.types[v];
            let vals = vals.iter().map(|x| cast(x, ty)).collect::<Result<Vec<_>, _>>().map_err(Self::eval_err(t))?;
            external_values.push((v, vals));
        }
        let used = if info.fresh.is_empty() { BTreeSet::new() } else { lexicals(&values_of(s)) };
        let mut out = Vec::new();
        for env in candidates {
            let mut partial = vec![env];
            for (v, vals) in &external_values {
                partial = partial
                    .into_iter()
                    .flat_map(|e| {
                        vals.iter().map(move |x| {
                            let mut e = e.clone();
                            e.insert((*v).clone(), x.clone());
                            e
                        })
                    })
                    .collect();
            }
            for mut b in partial {
                let mut taken = used.clone();
                for v in &info.external {
                    taken.extend(b[v].lexical());
                }
                let mut counter = s.minted;
                for v in &info.fresh {
                    let val = mint(&info.types[v], &mut counter, &taken);
                    taken.extend(val.lexical());
                    b.insert(v.clone(), val);
                }
                out.push(b);
            }
        }
        Ok(out)
    }

    /// All enabled (transition, binding) pairs, in net order.
    pub fn enabled(&self, s: &Snapshot, supply: &dyn InputSupply) -> Result<Vec<(String, Binding)>, RuntimeError> {
        let mut out = Vec::new();
        for t in self.infos.keys() {
            for b in self.enabled_bindings(t, s, supply)? {
                out.push((t.clone(), b));
            }
        }
        Ok(out)
    }

    /// Checks every enablement condition for a given binding.
    pub fn check_enabled(&self, t: &str, b: &Binding, s: &Snapshot) -> Result<(), RuntimeError> {
        let info = self.info(t)?;
        let not = |reason: String| RuntimeError::NotEnabled { transition: t.into(), reason };
        for v in info.types.keys() {
            if !b.contains_key(v) {
                return Err(not(format!("`{v}` is unbound")));
            }
        }
        let mut needed: BTreeMap<&str, Multiset<Vec<Value>>> = BTreeMap::new();
        for (place, vars) in &info.inputs {
            let tok: Vec<Value> = vars.iter().map(|v| b[v].clone()).collect();
            needed.entry(place).or_default().add(tok, 1);
        }
        for (place, need) in &needed {
            let have = s.marking.get(*place).cloned().unwrap_or_default();
            if !need.is_subset(&have) {
                return Err(not(format!("place `{place}` lacks the required tokens")));
            }
        }
        for (place, vars) in &info.reads {
            let tok: Vec<Value> = vars.iter().map(|v| b[v].clone()).collect();
            if s.marking.get(place).map_or(0, |m| m.count(&tok)) == 0 {
                return Err(not(format!("view `{place}` has no matching answer")));
            }
        }
        if !info.guard.eval(b, &s.storage.objects).map_err(Self::eval_err(t))? {
            return Err(not("guard is false".into()));
        }
        if !info.fresh.is_empty() {
            let mut taken = lexicals(&values_of(s));
            for v in &info.external {
                taken.extend(b[v].lexical());
            }
            for v in &info.fresh {
                let lex = b[v].lexical().unwrap_or_default();
                if !taken.insert(lex) {
                    return Err(not(format!("value of `{v}` is not fresh")));
                }
            }
        }
        Ok(())
    }

    /// Fires `t` under `b`: `m' = m − σ(F_in) + σ(F_out)`, storage updated
    /// by the action. Terms are evaluated against the pre-firing storage.
    pub fn fire(&self, t: &str, b: &Binding, s: &Snapshot) -> Result<Snapshot, RuntimeError> {
        self.check_enabled(t, b, s)?;
        let info = self.info(t)?;
        let objects = &s.storage.objects;
        let mut marking = s.marking.clone();
        for (place, vars) in &info.inputs {
            let tok: Vec<Value> = vars.iter().map(|v| b[v].clone()).collect();
            marking.get_mut(place).expect("checked").remove(&tok, 1);
        }
        for (place, inscription) in &info.outputs {
            let mut tok = Vec::new();
            for e in inscription {
                tok.extend(e.eval(b, objects).map_err(Self::eval_err(t))?.flatten());
            }
            marking.entry(place.clone()).or_default().add(tok, 1);
        }
        let storage = match &info.action {
            None => s.storage.clone(),
            Some((def, args)) => {
                let vals = args.iter().map(|e| e.eval(b, objects)).collect::<Result<Vec<_>, _>>().map_err(Self::eval_err(t))?;
                def.instantiate_positional(&vals)?.apply(&s.storage)?
            }
        };
        let mut minted = s.minted;
        for v in &info.fresh {
            if let Some(n) = minted_index(&b[v]) {
                minted = minted.max(n + 1);
            }
        }
        let metadata_changed = !Arc::ptr_eq(&storage.metadata, &s.storage.metadata);
        let mut next = Snapshot { storage, marking, minted };
        if metadata_changed {
            self.refresh_views(&mut next)?;
        }
        Ok(next)
    }

    /// External-input variables of `t`.
    pub fn external_vars(&self, t: &str) -> Result<Vec<String>, RuntimeError> {
        Ok(self.info(t)?.external.iter().map(|v| v.name.clone()).collect())
    }

    pub fn transition_names(&self) -> impl Iterator<Item = &str> {
        self.infos.values().map(|i| i.name.as_str())
    }

    /// Fires the least enabled (transition, binding) pair until none is
    /// enabled or `max_steps` firings happened.
    pub fn run(&self, s0: &Snapshot, supply: &Supply, max_steps: usize) -> Result<(Trace, Snapshot), RuntimeError> {
        let mut rr = supply.round_robin();
        let mut s = s0.clone();
        let mut trace = Trace::default();
        while trace.steps.len() < max_steps {
            let mut enabled = self.enabled(&s, &rr)?;
            if enabled.is_empty() {
                break;
            }
            enabled.sort();
            let (t, b) = enabled.swap_remove(0);
            s = self.fire(&t, &b, &s)?;
            rr.advance(self.external_vars(&t)?);
            trace.steps.push(Step { transition: t, binding: b });
        }
        Ok((trace, s))
    }

    /// Re-fires a recorded trace, returning every intermediate snapshot.
    pub fn replay(&self, s0: &Snapshot, trace: &Trace) -> Result<Vec<Snapshot>, RuntimeError> {
        let mut states = vec![s0.clone()];
        for step in &trace.steps {
            let next = self.fire(&step.transition, &step.binding, states.last().expect("nonempty"))?;
            states.push(next);
        }
        Ok(states)
    }
}

fn mint(ty: &DataType, counter: &mut u64, taken: &BTreeSet<String>) -> Value {
    loop {
        let n = *counter;
        *counter += 1;
        let v = match ty {
            DataType::Oid => Value::Oid(format!("{FRESH_PREFIX}oid:{n}")),
            DataType::Int => Value::Int(n as i64),
            _ => Value::Str(format!("{FRESH_PREFIX}str:{n}")),
        };
        if !taken.contains(&v.lexical().expect("atomic")) {
            return v;
        }
    }
}

fn minted_index(v: &Value) -> Option<u64> {
    match v {
        Value::Int(i) => u64::try_from(*i).ok(),
        other => other.lexical()?.strip_prefix(FRESH_PREFIX)?.split_once(':')?.1.parse().ok(),
    }
}
