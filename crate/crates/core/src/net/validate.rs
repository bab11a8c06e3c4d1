use std::collections::BTreeSet;
use std::fmt;

use super::{FlowKind, Net};
use crate::expr::{TypeEnv, Var};
use crate::types::{can_cast, format_color, DataType};

/// A violated well-formedness condition: which clause, where, and why.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub clause: &'static str,
    pub location: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.clause, self.location, self.message)
    }
}

impl std::error::Error for ValidationError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    /// Output variable bound neither by an input nor by ν: needs a supply.
    ExternalInput { transition: String, var: Var },
    Consistency(String),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ExternalInput { transition, var } => {
                write!(f, "transition `{transition}`: `{var}` is an external-input variable")
            }
            Warning::Consistency(msg) => f.write_str(msg),
        }
    }
}

struct Report<'a> {
    errors: &'a mut Vec<ValidationError>,
}

impl Report<'_> {
    fn push(&mut self, clause: &'static str, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ValidationError { clause, location: location.into(), message: message.into() });
    }
}

const FRESH_TYPES: &[DataType] = &[DataType::Oid, DataType::Str, DataType::Int];

/// Variable types of a transition, read off its arcs, action parameters and
/// explicit declarations. Problems are appended to `errors`.
pub(crate) fn infer_types(net: &Net, t: &str, errors: &mut Vec<ValidationError>) -> TypeEnv {
    let mut rep = Report { errors };
    let Some(tr) = net.transitions.get(t) else {
        rep.push("transition", t, "unknown transition");
        return TypeEnv::new();
    };
    let loc = format!("transition `{t}`");
    let mut types = TypeEnv::new();
    let mut assign = |rep: &mut Report, v: &Var, ty: &DataType, origin: &str| match types.get(v) {
        Some(prev) if prev != ty => rep.push(
            "variable type",
            loc.clone(),
            format!("`{v}` is used as {prev} and as {ty} ({origin})"),
        ),
        Some(_) => {}
        None => {
            types.insert(v.clone(), ty.clone());
        }
    };
    for (v, ty) in &tr.declared {
        assign(&mut rep, v, ty, "declaration");
    }
    for f in net.flows_of(t).filter(|f| f.kind != FlowKind::Output) {
        let Some(place) = net.places.get(&f.place) else { continue };
        if f.inscription.len() != place.color.len() {
            continue; // reported by the inscription check
        }
        for (e, ty) in f.inscription.iter().zip(&place.color) {
            if let Some(v) = e.as_var() {
                assign(&mut rep, v, ty, &format!("arc from `{}`", f.place));
            }
        }
    }
    for f in net.flows_of(t).filter(|f| f.kind == FlowKind::Output) {
        let Some(place) = net.places.get(&f.place) else { continue };
        if f.inscription.len() != place.color.len() {
            continue;
        }
        for (e, ty) in f.inscription.iter().zip(&place.color) {
            if let Some(v) = e.as_var() {
                if !types.contains_key(v) {
                    types.insert(v.clone(), ty.clone());
                }
            }
        }
    }
    if let Some(call) = &tr.action {
        if let Some(def) = net.actions.get(&call.action) {
            for (e, p) in call.args.iter().zip(&def.params) {
                if let Some(v) = e.as_var() {
                    if !types.contains_key(v) {
                        types.insert(v.clone(), p.ty.clone());
                    }
                }
            }
        }
    }
    types
}

pub(super) fn validate(net: &Net) -> Vec<ValidationError> {
    let mut errors = Vec::new();

    for a in net.actions.values() {
        for msg in a.validate() {
            errors.push(ValidationError { clause: "action definition", location: format!("action `{}`", a.name), message: msg });
        }
    }

    let mut rep = Report { errors: &mut errors };
    for name in net.places.keys() {
        if net.transitions.contains_key(name) {
            rep.push("P ∩ T = ∅", format!("`{name}`"), "name used for both a place and a transition");
        }
    }

    for p in net.views() {
        let loc = format!("view `{}`", p.name);
        for ty in &p.color {
            if !matches!(ty, DataType::Literal | DataType::Iri) {
                rep.push("view color", loc.clone(), format!("view colors range over L and I, found {ty}"));
            }
        }
        let q = p.query().expect("view has a query");
        if q.answer_vars().len() != p.color.len() {
            rep.push(
                "type(w) = color(p)",
                loc.clone(),
                format!("query answers {} column(s) but the color has {}", q.answer_vars().len(), p.color.len()),
            );
        }
    }

    for f in &net.flows {
        let loc = format!("arc `{}`–`{}`", f.place, f.transition);
        let Some(place) = net.places.get(&f.place) else {
            rep.push("arc endpoints", loc, format!("unknown place `{}`", f.place));
            continue;
        };
        if !net.transitions.contains_key(&f.transition) {
            rep.push("arc endpoints", loc, format!("unknown transition `{}`", f.transition));
            continue;
        }
        match (place.is_view(), f.kind) {
            (true, FlowKind::Input) => rep.push("view arcs", loc.clone(), "view places connect only through read arcs"),
            (true, FlowKind::Output) => rep.push("view arcs", loc.clone(), "view places cannot receive output arcs"),
            (false, FlowKind::Read) => rep.push("view arcs", loc.clone(), "read arcs attach only to view places"),
            _ => {}
        }
        if f.kind != FlowKind::Output {
            for e in &f.inscription {
                match e.as_var() {
                    Some(v) if !v.fresh => {}
                    Some(v) => rep.push("F_in inscription", loc.clone(), format!("fresh variable `{v}` on an input arc")),
                    None => rep.push("F_in inscription", loc.clone(), format!("`{e}` is not a variable")),
                }
            }
            if f.inscription.len() != place.color.len() {
                rep.push(
                    "type(F_in(p,t)) = color(p)",
                    loc.clone(),
                    format!("inscription has {} item(s), color {} has {}", f.inscription.len(), format_color(&place.color), place.color.len()),
                );
            }
        }
    }

    for (name, tr) in &net.transitions {
        let loc = format!("transition `{name}`");
        let types = infer_types(net, name, rep.errors);
        let ins = net.in_vars(name).unwrap_or_default();
        let outs = net.out_vars(name).unwrap_or_default();
        let mut all: BTreeSet<Var> = ins.union(&outs).cloned().collect();
        tr.guard.collect_vars(&mut all);
        let mut untyped = false;
        for v in &all {
            match types.get(v) {
                None => {
                    untyped = true;
                    rep.push("variable type", loc.clone(), format!("cannot infer the type of `{v}`; declare it"));
                }
                Some(ty) if v.fresh && !FRESH_TYPES.contains(ty) => {
                    rep.push("fresh variable", loc.clone(), format!("`{v}` has type {ty}; fresh values exist only for oid, str and int"))
                }
                _ => {}
            }
        }

        for f in net.flows_of(name).filter(|f| f.kind == FlowKind::Output) {
            let Some(place) = net.places.get(&f.place) else { continue };
            let aloc = format!("arc `{name}`–`{}`", f.place);
            let mut found = Vec::new();
            let mut ok = true;
            for e in &f.inscription {
                match e.infer(&types) {
                    Ok(ty) => found.extend(ty.flatten()),
                    Err(err) => {
                        ok = false;
                        if !untyped {
                            rep.push("F_out inscription", aloc.clone(), format!("`{e}`: {err}"));
                        }
                    }
                }
            }
            if ok && found != place.color {
                rep.push(
                    "type(F_out(t,p)) = color(p)",
                    aloc,
                    format!("inscription has type {}, place color is {}", format_color(&found), format_color(&place.color)),
                );
            }
        }

        let guard_vars = tr.guard.vars();
        for v in guard_vars.difference(&ins) {
            rep.push("Vars(guard(t)) ⊆ InVars(t)", loc.clone(), format!("guard variable `{v}` is not bound by an input arc"));
        }
        if guard_vars.is_subset(&ins) && !untyped {
            if let Err(err) = tr.guard.check(&types) {
                rep.push("guard typing", loc.clone(), err.to_string());
            }
        }

        if let Some(call) = &tr.action {
            let Some(def) = net.actions.get(&call.action) else {
                rep.push("act(t)", loc.clone(), format!("unknown action `{}`", call.action));
                continue;
            };
            if call.args.len() != def.params.len() {
                rep.push(
                    "act(t)",
                    loc.clone(),
                    format!("`{}` takes {} argument(s), {} given", def.name, def.params.len(), call.args.len()),
                );
                continue;
            }
            for (e, p) in call.args.iter().zip(&def.params) {
                match e.infer(&types) {
                    Ok(ty) if can_cast(&ty, &p.ty) => {}
                    Ok(ty) => rep.push(
                        "act(t)",
                        loc.clone(),
                        format!("argument `{e}` of type {ty} does not fit parameter `{}: {}`", p.name, p.ty),
                    ),
                    Err(err) if !untyped => rep.push("act(t)", loc.clone(), format!("argument `{e}`: {err}")),
                    Err(_) => {}
                }
            }
        }
    }

    for (place, tuple, _) in &net.init.tokens {
        let loc = format!("initial marking of `{place}`");
        match net.places.get(place) {
            None => rep.push("initial marking", loc, "unknown place"),
            Some(p) if p.is_view() => rep.push("initial marking", loc, "view markings are derived from their query"),
            Some(p) => {
                let found: Vec<DataType> = tuple.iter().flat_map(|v| v.data_type().flatten()).collect();
                if found != p.color {
                    rep.push(
                        "initial marking",
                        loc,
                        format!("token has type {}, place color is {}", format_color(&found), format_color(&p.color)),
                    );
                }
            }
        }
    }

    if let Some((cin, cout)) = &net.channels {
        for c in [cin, cout] {
            match net.places.get(c) {
                Some(p) if !p.is_view() => {}
                _ => rep.push("channels", format!("`{c}`"), "channels must be control places of the net"),
            }
        }
    }
    errors
}

pub(super) fn warnings(net: &Net) -> Vec<Warning> {
    let mut out = Vec::new();
    for t in net.transitions.keys() {
        for var in net.external_vars(t).unwrap_or_default() {
            out.push(Warning::ExternalInput { transition: t.clone(), var });
        }
    }
    for a in net.actions.values() {
        out.extend(a.lint().into_iter().map(Warning::Consistency));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, Guard};
    use crate::net::Transition;
    use crate::types::Value;

    fn base() -> Net {
        let mut n = Net::new("n");
        n.add_control("in", vec![DataType::Str, DataType::Oid]).unwrap();
        n.add_control("out", vec![DataType::Str, DataType::Oid]).unwrap();
        n.add_view("tags", vec![DataType::Literal, DataType::Literal], "SELECT ?id ?tag WHERE { ?id mmdb:containsObj ?tag }")
            .unwrap();
        n.add_transition(Transition::new("t").with_guard(Guard::eq(Expr::var("id"), Expr::var("id'").cast(DataType::Str))))
            .unwrap();
        n.input("in", "t", vec![Expr::var("id"), Expr::var("a")]);
        n.read("tags", "t", vec![Expr::var("id'"), Expr::var("tag")]);
        n.output("t", "out", vec![Expr::var("id"), Expr::var("a")]);
        n
    }

    #[test]
    fn well_formed_net() {
        assert_eq!(base().validate(), vec![]);
    }

    #[test]
    fn guard_variable_outside_inputs() {
        let mut n = base();
        n.transitions["t"].guard = Guard::eq(Expr::var("zz"), Expr::Const(Value::str("x")));
        n.transitions["t"].declared.insert(Var::new("zz"), DataType::Str);
        let errs = n.validate();
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].clause, "Vars(guard(t)) ⊆ InVars(t)");
    }

    #[test]
    fn output_into_view() {
        let mut n = base();
        n.output("t", "tags", vec![Expr::var("id").cast(DataType::Literal), Expr::var("a").cast(DataType::Literal)]);
        let errs = n.validate();
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].clause, "view arcs");
    }

    #[test]
    fn output_type_mismatch() {
        let mut n = base();
        n.flows.retain(|f| f.kind != FlowKind::Output);
        n.output("t", "out", vec![Expr::var("a"), Expr::var("id")]);
        let errs = n.validate();
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].clause, "type(F_out(t,p)) = color(p)");
    }

    #[test]
    fn terms_on_input_arcs_rejected() {
        let mut n = base();
        n.flows[0].inscription[0] = Expr::Const(Value::str("x"));
        let errs = n.validate();
        assert!(errs.iter().any(|e| e.clause == "F_in inscription"), "{errs:?}");
    }

    #[test]
    fn external_input_is_a_warning() {
        let mut n = base();
        n.add_control("names", vec![DataType::Str]).unwrap();
        n.output("t", "names", vec![Expr::var("n")]);
        assert_eq!(n.validate(), vec![]);
        assert_eq!(n.warnings(), vec![Warning::ExternalInput { transition: "t".into(), var: Var::new("n") }]);
    }

    #[test]
    fn bad_initial_token() {
        let mut n = base();
        n.init.tokens.push(("in".into(), vec![Value::str("i1")], 1));
        n.init.tokens.push(("tags".into(), vec![Value::literal("i1"), Value::literal("x")], 1));
        assert_eq!(n.validate().len(), 2);
    }
}
