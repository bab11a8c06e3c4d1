//! Net structure: places, transitions, flows, guards and action assignments.

mod validate;

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use thiserror::Error;

pub(crate) use validate::infer_types;
pub use validate::{ValidationError, Warning};

use crate::action::ActionDef;
use crate::expr::{Expr, Guard, Var};
use crate::query::{parse_query, Query, QueryError};
use crate::types::{DataType, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("query of view `{place}`: {source}")]
    Query { place: String, source: QueryError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceKind {
    Control,
    /// Read-only place whose marking is the answer set of the query.
    View(Query),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub name: String,
    pub color: Vec<DataType>,
    pub kind: PlaceKind,
}

impl Place {
    pub fn is_view(&self) -> bool {
        matches!(self.kind, PlaceKind::View(_))
    }

    pub fn query(&self) -> Option<&Query> {
        match &self.kind {
            PlaceKind::View(q) => Some(q),
            PlaceKind::Control => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlowKind {
    /// Consumes tokens from the place.
    Input,
    /// Produces tokens into the place.
    Output,
    /// Non-consuming read of a view place.
    Read,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    pub place: String,
    pub transition: String,
    pub kind: FlowKind,
    pub inscription: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionCall {
    pub action: String,
    pub args: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub guard: Guard,
    pub action: Option<ActionCall>,
    /// Explicitly declared variable types, for variables whose type cannot
    /// be read off an arc or an action parameter.
    pub declared: BTreeMap<Var, DataType>,
}

impl Transition {
    pub fn new(name: &str) -> Transition {
        Transition { name: name.into(), guard: Guard::True, action: None, declared: BTreeMap::new() }
    }

    pub fn with_guard(mut self, guard: Guard) -> Transition {
        self.guard = guard;
        self
    }

    pub fn with_action(mut self, action: &str, args: Vec<Expr>) -> Transition {
        self.action = Some(ActionCall { action: action.into(), args });
        self
    }
}

/// Initial configuration shipped with a net: tokens, storage files, and
/// value lists for external-input variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InitSpec {
    pub tokens: Vec<(String, Vec<Value>, usize)>,
    pub triples_file: Option<String>,
    pub objects_file: Option<String>,
    pub supply: BTreeMap<String, Vec<Value>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    /// Prefixes used when printing the net.
    pub prefixes: Vec<(String, String)>,
    pub places: IndexMap<String, Place>,
    pub transitions: IndexMap<String, Transition>,
    pub flows: Vec<Flow>,
    pub actions: IndexMap<String, ActionDef>,
    /// `(ch_in, ch_out)` for nets meant to be composed.
    pub channels: Option<(String, String)>,
    pub init: InitSpec,
}

impl Net {
    pub fn new(name: &str) -> Net {
        Net { name: name.into(), ..Net::default() }
    }

    fn check_fresh_name(&self, name: &str) -> Result<(), NetError> {
        if self.places.contains_key(name) || self.transitions.contains_key(name) {
            Err(NetError::DuplicateName(name.into()))
        } else {
            Ok(())
        }
    }

    pub fn add_control(&mut self, name: &str, color: Vec<DataType>) -> Result<(), NetError> {
        self.check_fresh_name(name)?;
        self.places.insert(name.into(), Place { name: name.into(), color, kind: PlaceKind::Control });
        Ok(())
    }

    pub fn add_view(&mut self, name: &str, color: Vec<DataType>, query: &str) -> Result<(), NetError> {
        self.check_fresh_name(name)?;
        let q = parse_query(query).map_err(|source| NetError::Query { place: name.into(), source })?;
        self.places.insert(name.into(), Place { name: name.into(), color, kind: PlaceKind::View(q) });
        Ok(())
    }

    pub fn add_transition(&mut self, t: Transition) -> Result<(), NetError> {
        self.check_fresh_name(&t.name)?;
        self.transitions.insert(t.name.clone(), t);
        Ok(())
    }

    pub fn add_action(&mut self, a: ActionDef) {
        self.actions.insert(a.name.clone(), a);
    }

    fn flow(&mut self, place: &str, transition: &str, kind: FlowKind, inscription: Vec<Expr>) {
        self.flows.push(Flow { place: place.into(), transition: transition.into(), kind, inscription });
    }

    pub fn input(&mut self, place: &str, transition: &str, inscription: Vec<Expr>) {
        self.flow(place, transition, FlowKind::Input, inscription);
    }

    pub fn output(&mut self, transition: &str, place: &str, inscription: Vec<Expr>) {
        self.flow(place, transition, FlowKind::Output, inscription);
    }

    pub fn read(&mut self, place: &str, transition: &str, inscription: Vec<Expr>) {
        self.flow(place, transition, FlowKind::Read, inscription);
    }

    pub fn flows_of<'a>(&'a self, transition: &'a str) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| f.transition == transition)
    }

    pub fn transition(&self, name: &str) -> Result<&Transition, NetError> {
        self.transitions.get(name).ok_or_else(|| NetError::UnknownTransition(name.into()))
    }

    /// `InVars(t)`: variables on input and read arcs.
    pub fn in_vars(&self, t: &str) -> Result<BTreeSet<Var>, NetError> {
        self.transition(t)?;
        let mut out = BTreeSet::new();
        for f in self.flows_of(t).filter(|f| f.kind != FlowKind::Output) {
            f.inscription.iter().for_each(|e| e.collect_vars(&mut out));
        }
        Ok(out)
    }

    /// `OutVars(t)`: variables on output arcs and in the action arguments.
    pub fn out_vars(&self, t: &str) -> Result<BTreeSet<Var>, NetError> {
        let tr = self.transition(t)?;
        let mut out = BTreeSet::new();
        for f in self.flows_of(t).filter(|f| f.kind == FlowKind::Output) {
            f.inscription.iter().for_each(|e| e.collect_vars(&mut out));
        }
        if let Some(call) = &tr.action {
            call.args.iter().for_each(|e| e.collect_vars(&mut out));
        }
        Ok(out)
    }

    /// Fresh (ν) output variables.
    pub fn fresh_out_vars(&self, t: &str) -> Result<BTreeSet<Var>, NetError> {
        Ok(self.out_vars(t)?.into_iter().filter(|v| v.fresh).collect())
    }

    /// Non-fresh output variables not bound by any input: values for these
    /// come from outside the net.
    pub fn external_vars(&self, t: &str) -> Result<BTreeSet<Var>, NetError> {
        let ins = self.in_vars(t)?;
        Ok(self.out_vars(t)?.into_iter().filter(|v| !v.fresh && !ins.contains(v)).collect())
    }

    pub fn views(&self) -> impl Iterator<Item = &Place> {
        self.places.values().filter(|p| p.is_view())
    }

    pub fn validate(&self) -> Vec<ValidationError> {
        validate::validate(self)
    }

    /// Non-blocking findings: external-input variables and action consistency.
    pub fn warnings(&self) -> Vec<Warning> {
        validate::warnings(self)
    }
}
