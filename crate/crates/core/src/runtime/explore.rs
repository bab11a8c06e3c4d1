//! Bounded breadth-first construction of the reachability graph.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::canon::{canonical_key, StateKey};
use super::trace::{format_binding, Step, Trace};
use super::{Binding, Runtime, RuntimeError, Snapshot, Supply};
use crate::net::Net;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_depth: usize,
    pub max_states: usize,
    pub max_tokens_per_place: usize,
    pub max_triples: usize,
    pub max_objects: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_depth: 1_000, max_states: 100_000, max_tokens_per_place: 64, max_triples: 100_000, max_objects: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExploreOptions {
    pub bounds: Bounds,
    /// Identify states that differ only in the names of minted values.
    pub canonicalize: bool,
    /// Compute the successors of a frontier in parallel.
    pub parallel: bool,
}

/// Which bounds cut the search short.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Truncation {
    pub depth: bool,
    pub states: bool,
    pub tokens: bool,
    pub triples: bool,
    pub objects: bool,
}

impl Truncation {
    pub fn any(&self) -> bool {
        self.depth || self.states || self.tokens || self.triples || self.objects
    }

    pub fn reasons(&self) -> Vec<&'static str> {
        [
            (self.depth, "max-depth"),
            (self.states, "max-states"),
            (self.tokens, "max-tokens-per-place"),
            (self.triples, "max-triples"),
            (self.objects, "max-objects"),
        ]
        .into_iter()
        .filter_map(|(hit, name)| hit.then_some(name))
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub transition: String,
    pub binding: Binding,
}

/// The explored fragment of the labeled transition system. State 0 is initial.
#[derive(Clone, Debug)]
pub struct Lts {
    pub states: Vec<Snapshot>,
    pub depth: Vec<usize>,
    pub edges: Vec<Edge>,
    pub truncated: Truncation,
    expanded: Vec<bool>,
    parent: Vec<Option<usize>>,
}

impl PartialEq for Lts {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states && self.edges == other.edges && self.truncated == other.truncated
    }
}

impl Lts {
    /// Expanded states without successors.
    pub fn deadlocks(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.states.len()];
        for e in &self.edges {
            has_out[e.from] = true;
        }
        (0..self.states.len()).filter(|&i| self.expanded[i] && !has_out[i]).collect()
    }

    /// The breadth-first path from the initial state to `state`.
    pub fn trace_to(&self, state: usize) -> Trace {
        let mut steps = Vec::new();
        let mut cur = state;
        while let Some(e) = self.parent[cur] {
            let edge = &self.edges[e];
            steps.push(Step { transition: edge.transition.clone(), binding: edge.binding.clone() });
            cur = edge.from;
        }
        steps.reverse();
        Trace { steps }
    }

    pub fn to_dot(&self, net: &Net) -> String {
        let mut out = String::from("digraph lts {\n  node [shape=box, fontname=monospace];\n");
        for (i, s) in self.states.iter().enumerate() {
            let label = s.summary(net).replace('"', "\\\"");
            writeln!(out, "  s{i} [label=\"s{i}\\n{label}\"];").expect("string write");
        }
        for e in &self.edges {
            let label = format!("{} {}", e.transition, format_binding(&e.binding)).replace('\\', "\\\\").replace('"', "\\\"");
            writeln!(out, "  s{} -> s{} [label=\"{label}\"];", e.from, e.to).expect("string write");
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reachability {
    Reachable(Trace),
    /// The whole reachable fragment was explored without a witness.
    NotReachable,
    /// No witness found, but some bound cut the search short.
    Truncated(Truncation),
}

type Successor = (String, Binding, Snapshot, StateKey);

impl Runtime {
    fn successors(&self, s: &Snapshot, supply: &Supply, canonicalize: bool) -> Result<Vec<Successor>, RuntimeError> {
        let mut out = Vec::new();
        for (t, b) in self.enabled(s, supply)? {
            let next = self.fire(&t, &b, s)?;
            let key = if canonicalize { canonical_key(&next) } else { StateKey::exact(&next) };
            out.push((t, b, next, key));
        }
        Ok(out)
    }

    fn within(&self, s: &Snapshot, bounds: &Bounds, trunc: &mut Truncation) -> bool {
        let mut ok = true;
        if s.marking.values().any(|m| m.size() > bounds.max_tokens_per_place) {
            trunc.tokens = true;
            ok = false;
        }
        if s.storage.metadata.len() > bounds.max_triples {
            trunc.triples = true;
            ok = false;
        }
        if s.storage.objects.len() > bounds.max_objects {
            trunc.objects = true;
            ok = false;
        }
        ok
    }

    /// Explores breadth-first until the bounds are hit or `stop` holds in a
    /// newly found state, whose index is then returned.
    pub fn explore_until(
        &self,
        s0: &Snapshot,
        supply: &Supply,
        opts: &ExploreOptions,
        stop: &(dyn Fn(&Snapshot) -> bool + Sync),
    ) -> Result<(Lts, Option<usize>), RuntimeError> {
        let b = &opts.bounds;
        let key0 = if opts.canonicalize { canonical_key(s0) } else { StateKey::exact(s0) };
        let mut index: HashMap<StateKey, usize> = HashMap::new();
        index.insert(key0, 0);
        let mut lts = Lts {
            states: vec![s0.clone()],
            depth: vec![0],
            edges: Vec::new(),
            truncated: Truncation::default(),
            expanded: vec![false],
            parent: vec![None],
        };
        if stop(s0) {
            return Ok((lts, Some(0)));
        }
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let (expand, at_limit): (Vec<usize>, Vec<usize>) = frontier.iter().partition(|&&i| lts.depth[i] < b.max_depth);
            for i in at_limit {
                if !self.enabled(&lts.states[i], supply)?.is_empty() {
                    lts.truncated.depth = true;
                }
            }
            let states = &lts.states;
            let results: Vec<Result<Vec<Successor>, RuntimeError>> = if opts.parallel {
                expand.par_iter().map(|&i| self.successors(&states[i], supply, opts.canonicalize)).collect()
            } else {
                expand.iter().map(|&i| self.successors(&states[i], supply, opts.canonicalize)).collect()
            };
            let mut next = Vec::new();
            for (&i, succs) in expand.iter().zip(results) {
                lts.expanded[i] = true;
                for (t, binding, s, key) in succs? {
                    if !self.within(&s, b, &mut lts.truncated) {
                        continue;
                    }
                    let to = match index.get(&key) {
                        Some(&j) => j,
                        None => {
                            if lts.states.len() >= b.max_states {
                                lts.truncated.states = true;
                                continue;
                            }
                            let j = lts.states.len();
                            index.insert(key, j);
                            let found = stop(&s);
                            lts.states.push(s);
                            lts.depth.push(lts.depth[i] + 1);
                            lts.expanded.push(false);
                            lts.parent.push(Some(lts.edges.len()));
                            lts.edges.push(Edge { from: i, to: j, transition: t, binding });
                            if found {
                                return Ok((lts, Some(j)));
                            }
                            next.push(j);
                            continue;
                        }
                    };
                    lts.edges.push(Edge { from: i, to, transition: t, binding });
                }
            }
            frontier = next;
        }
        Ok((lts, None))
    }

    pub fn explore(&self, s0: &Snapshot, supply: &Supply, opts: &ExploreOptions) -> Result<Lts, RuntimeError> {
        Ok(self.explore_until(s0, supply, opts, &|_| false)?.0)
    }

    /// Whether some reachable snapshot marks `place` with at least one token.
    pub fn reachable_nonempty(
        &self,
        s0: &Snapshot,
        place: &str,
        supply: &Supply,
        opts: &ExploreOptions,
    ) -> Result<Reachability, RuntimeError> {
        if !self.net().places.contains_key(place) {
            return Err(RuntimeError::UnknownPlace(place.into()));
        }
        let (lts, hit) = self.explore_until(s0, supply, opts, &|s| s.count(place) > 0)?;
        Ok(match hit {
            Some(i) => Reachability::Reachable(lts.trace_to(i)),
            None if lts.truncated.any() => Reachability::Truncated(lts.truncated),
            None => Reachability::NotReachable,
        })
    }
}
