use std::fmt::Write as _;

use super::{Binding, Runtime, RuntimeError, Snapshot};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Step {
    pub transition: String,
    pub binding: Binding,
}

/// A firing sequence with the bindings used.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
}

pub fn format_binding(b: &Binding) -> String {
    b.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn transitions(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.transition.as_str()).collect()
    }

    /// One line per firing: step number, transition, binding, and the
    /// marking summary after the step.
    pub fn render(&self, rt: &Runtime, s0: &Snapshot) -> Result<String, RuntimeError> {
        let states = rt.replay(s0, self)?;
        let mut out = String::new();
        for (i, (step, s)) in self.steps.iter().zip(&states[1..]).enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", i + 1, step.transition, format_binding(&step.binding), s.summary(rt.net()))
                .expect("string write");
        }
        Ok(out)
    }
}
