//! Token-game session: list enabled pairs, fire the chosen one, undo.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use mmnet::runtime::{format_binding, InputSupply, Runtime, RuntimeError, Snapshot, Supply};
use mmnet::text::parse_value;
use mmnet::types::Value;

use crate::load::CliError;

/// Offers one value per external variable, cycling like `run` does, so a
/// session that always picks `0` replays `mmnet run`.
#[derive(Clone)]
struct Offer {
    lists: BTreeMap<String, Vec<Value>>,
    cursor: BTreeMap<String, usize>,
}

impl InputSupply for Offer {
    fn values(&self, var: &str) -> Option<Vec<Value>> {
        let list = self.lists.get(var).filter(|l| !l.is_empty())?;
        let i = self.cursor.get(var).copied().unwrap_or(0) % list.len();
        Some(vec![list[i].clone()])
    }
}

pub struct Session<'a> {
    rt: &'a Runtime,
    // each snapshot with the supply cursors in effect there
    stack: Vec<(Snapshot, BTreeMap<String, usize>)>,
    offer: Offer,
}

fn line(input: &mut dyn BufRead) -> Result<Option<String>, CliError> {
    let mut buf = String::new();
    let n = input.read_line(&mut buf).map_err(|e| CliError::Io { path: "<stdin>".into(), message: e.to_string() })?;
    Ok((n > 0).then(|| buf.trim().to_string()))
}

impl<'a> Session<'a> {
    pub fn new(rt: &'a Runtime, s0: Snapshot, supply: &Supply) -> Self {
        Session { rt, stack: vec![(s0, BTreeMap::new())], offer: Offer { lists: supply.lists.clone(), cursor: BTreeMap::new() } }
    }

    fn current(&self) -> &Snapshot {
        &self.stack.last().expect("nonempty stack").0
    }

    fn print_marking(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (place, tokens) in &self.current().marking {
            let items: Vec<String> = tokens
                .iter()
                .map(|(tok, n)| {
                    let vals: Vec<String> = tok.iter().map(Value::to_string).collect();
                    let mult = if n == 1 { String::new() } else { format!("*{n}") };
                    format!("({}){mult}", vals.join(", "))
                })
                .collect();
            if !items.is_empty() {
                writeln!(out, "  {place}: {}", items.join(" "))?;
            }
        }
        Ok(())
    }

    fn print_storage(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let st = &self.current().storage;
        for t in st.metadata.iter() {
            writeln!(out, "  {t}")?;
        }
        for (a, o) in st.objects.iter() {
            writeln!(out, "  @{} {}x{} regions:{} decorations:{}", a.as_str(), o.width, o.height, o.regions.len(), o.decorations.len())?;
        }
        Ok(())
    }

    pub fn play(&mut self, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
        let io = CliError::output;
        loop {
            let mut enabled = match self.rt.enabled(self.current(), &self.offer) {
                Ok(e) => e,
                Err(RuntimeError::NoSupply { var, .. }) => {
                    write!(out, "value for {var}: ").map_err(io)?;
                    out.flush().map_err(io)?;
                    let Some(text) = line(input)? else { break };
                    match parse_value(&text) {
                        Ok(v) => self.offer.lists.entry(var).or_default().push(v),
                        Err(e) => writeln!(out, "invalid value: {e}").map_err(io)?,
                    }
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            enabled.sort();
            writeln!(out, "state {}: {}", self.stack.len() - 1, self.current().summary(self.rt.net())).map_err(io)?;
            if enabled.is_empty() {
                writeln!(out, "  no enabled transitions").map_err(io)?;
            }
            for (i, (t, b)) in enabled.iter().enumerate() {
                writeln!(out, "  [{i}] {t} {}", format_binding(b)).map_err(io)?;
            }
            write!(out, "> ").map_err(io)?;
            out.flush().map_err(io)?;
            let Some(cmd) = line(input)? else { break };
            match cmd.as_str() {
                "q" => break,
                "u" => {
                    if self.stack.len() > 1 {
                        self.stack.pop();
                        self.offer.cursor = self.stack.last().expect("nonempty stack").1.clone();
                    } else {
                        writeln!(out, "nothing to undo").map_err(io)?;
                    }
                }
                "m" => self.print_marking(out).map_err(io)?,
                "s" => self.print_storage(out).map_err(io)?,
                _ => match cmd.parse::<usize>().ok().and_then(|i| enabled.get(i)) {
                    Some((t, b)) => {
                        let next = self.rt.fire(t, b, self.current())?;
                        for v in self.rt.external_vars(t)? {
                            *self.offer.cursor.entry(v).or_insert(0) += 1;
                        }
                        self.stack.push((next, self.offer.cursor.clone()));
                    }
                    None => writeln!(out, "invalid selection `{cmd}`").map_err(io)?,
                },
            }
        }
        writeln!(out, "final: {}", self.current().summary(self.rt.net())).map_err(io)?;
        Ok(())
    }
}
