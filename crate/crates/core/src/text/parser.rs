use std::collections::BTreeMap;

use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::action::{ActionDef, Generator, Param, TripleTemplate};
use crate::expr::{Env, Expr, Guard, Var};
use crate::media::ObjectStore;
use crate::net::{Net, Transition};
use crate::rdf::MMDB_NS;
use crate::types::{registry::standard, DataType, TypedSet, Value};

const INFIX: &[&str] = &["=", "!=", "<", ">", "<=", ">="];

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        let mut prefixes = BTreeMap::new();
        prefixes.insert("mmdb".to_string(), MMDB_NS.to_string());
        Ok(Parser { toks: tokenize(src)?, pos: 0, prefixes })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        let t = &self.toks[pos];
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Fresh(s) => format!("`ν{s}`"),
            Tok::PName(p, l) => format!("`{p}:{l}`"),
            Tok::Iri(s) => format!("`<{s}>`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Rect(r) => format!("`{r}`"),
            Tok::Oid(s) => format!("`@{s}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.err(format!("expected {wanted}, found {}", Self::describe(self.peek())))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    /// `del-mm` and friends lex as three tokens.
    fn eat_dashed(&mut self, a: &str, b: &str) -> bool {
        let hit = matches!(self.peek(), Tok::Ident(s) if s == a)
            && matches!(self.peek_at(1), Tok::Punct("-"))
            && matches!(self.peek_at(2), Tok::Ident(s) if s == b);
        if hit {
            self.pos += 3;
        }
        hit
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    /// Place, transition or net name: identifier or quoted string.
    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("a string")),
        }
    }

    /// `name: type`; `name:type` lexes as a prefixed name and is accepted too.
    fn typed_name(&mut self) -> Result<(String, DataType), ParseError> {
        if let Tok::PName(n, ty) = self.peek().clone() {
            let at = self.pos;
            self.advance();
            let ty = self.simple_type(&ty).ok_or_else(|| self.err_at(at, format!("unknown type `{ty}`")))?;
            return Ok((n, ty));
        }
        let n = self.ident()?;
        self.expect_punct(":")?;
        Ok((n, self.data_type()?))
    }

    fn simple_type(&self, name: &str) -> Option<DataType> {
        Some(match name {
            "str" => DataType::Str,
            "int" => DataType::Int,
            "L" => DataType::Literal,
            "I" => DataType::Iri,
            "oid" => DataType::Oid,
            "rect" => DataType::Rect,
            "jpg" => DataType::Media("jpg".into()),
            _ => return None,
        })
    }

    pub fn data_type(&mut self) -> Result<DataType, ParseError> {
        let at = self.pos;
        let name = self.ident()?;
        if let Some(t) = self.simple_type(&name) {
            return Ok(t);
        }
        match name.as_str() {
            "set" => {
                self.expect_punct("<")?;
                let c = self.color()?;
                self.expect_punct(">")?;
                Ok(DataType::Set(c))
            }
            "media" => {
                self.expect_punct("<")?;
                let f = self.ident()?;
                self.expect_punct(">")?;
                Ok(DataType::Media(f))
            }
            _ => Err(self.err_at(at, format!("unknown type `{name}`"))),
        }
    }

    pub fn color(&mut self) -> Result<Vec<DataType>, ParseError> {
        if self.eat_kw("unit") {
            return Ok(vec![]);
        }
        let mut out = vec![self.data_type()?];
        while self.eat_kw("x") {
            out.push(self.data_type()?);
        }
        Ok(out)
    }

    // ---- expressions -------------------------------------------------

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.postfix()?;
        while self.eat_punct("-") {
            let rhs = self.postfix()?;
            e = Expr::call("minus", vec![e, rhs]);
        }
        Ok(e)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while self.eat_punct("::") {
            let ty = self.data_type()?;
            e = match e {
                // `"x"::L` is the written form of a literal constant
                Expr::Const(Value::Str(s)) if ty == DataType::Literal => Expr::Const(Value::Literal(s)),
                e => e.cast(ty),
            };
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.eat_punct(")") {
            loop {
                out.push(self.expr()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(out)
    }

    fn iri(&self, prefix: &str, local: &str, at: usize) -> Result<String, ParseError> {
        let ns = self.prefixes.get(prefix).ok_or_else(|| self.err_at(at, format!("unknown prefix `{prefix}:`")))?;
        Ok(format!("{ns}{local}"))
    }

    fn constant(&self, e: &Expr, at: usize) -> Result<Value, ParseError> {
        e.eval(&Env::new(), &ObjectStore::new()).map_err(|err| self.err_at(at, format!("not a constant: {err}")))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.pos;
        match self.advance() {
            Tok::Int(i) => Ok(Expr::Const(Value::Int(i))),
            Tok::Punct("-") => match self.advance() {
                Tok::Int(i) => Ok(Expr::Const(Value::Int(-i))),
                _ => Err(self.err_at(at, "`-` must be followed by an integer here")),
            },
            Tok::Str(s) => Ok(Expr::Const(Value::Str(s))),
            Tok::Rect(r) => Ok(Expr::Const(Value::Rect(r))),
            Tok::Oid(s) => Ok(Expr::Const(Value::Oid(s))),
            Tok::Iri(s) => Ok(Expr::Const(Value::Iri(s))),
            Tok::PName(p, l) => Ok(Expr::Const(Value::Iri(self.iri(&p, &l, at)?))),
            Tok::Fresh(n) => Ok(Expr::fresh(&n)),
            Tok::Ident(n) if n == "set" && self.is_punct("<") => {
                self.advance();
                let elem = self.color()?;
                self.expect_punct(">")?;
                self.expect_punct("{")?;
                let mut items = Vec::new();
                if !self.eat_punct("}") {
                    loop {
                        let item_at = self.pos;
                        let e = self.expr()?;
                        items.push(self.constant(&e, item_at)?.flatten());
                        if self.eat_punct("}") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                let set = TypedSet::from_items(elem, items).map_err(|e| self.err_at(at, e.to_string()))?;
                Ok(Expr::Const(Value::Set(set)))
            }
            Tok::Ident(n) if self.is_punct("(") => Ok(Expr::call(&n, self.args()?)),
            Tok::Ident(n) => Ok(Expr::var(&n)),
            Tok::Punct("(") => {
                let first = self.expr()?;
                if self.eat_punct(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_punct(",") {
                    items.push(self.expr()?);
                }
                self.expect_punct(")")?;
                let values = items.iter().map(|e| self.constant(e, at)).collect::<Result<Vec<_>, _>>()?;
                Ok(Expr::Const(Value::Tuple(values)))
            }
            t => {
                self.pos = at;
                Err(self.err(format!("expected an expression, found {}", Self::describe(&t))))
            }
        }
    }

    /// `(e1, ..., en)` — an arc inscription or value tuple.
    fn tuple(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.args()
    }

    // ---- guards ------------------------------------------------------

    pub fn guard(&mut self) -> Result<Guard, ParseError> {
        let mut g = self.conj()?;
        while self.eat_punct("||") {
            g = g.or(self.conj()?);
        }
        Ok(g)
    }

    fn conj(&mut self) -> Result<Guard, ParseError> {
        let mut g = self.neg()?;
        while self.eat_punct("&&") {
            g = g.and(self.neg()?);
        }
        Ok(g)
    }

    fn neg(&mut self) -> Result<Guard, ParseError> {
        if self.eat_punct("!") {
            return Ok(self.neg()?.not());
        }
        self.atom()
    }

    fn infix_ahead(&self) -> bool {
        matches!(self.peek(), Tok::Punct(p) if INFIX.contains(p) || *p == "::" || *p == "-")
    }

    fn atom(&mut self) -> Result<Guard, ParseError> {
        if self.eat_kw("true") {
            return Ok(Guard::True);
        }
        if self.is_punct("(") {
            let save = self.pos;
            self.advance();
            if let Ok(g) = self.guard() {
                if self.eat_punct(")") && !self.infix_ahead() {
                    return Ok(g);
                }
            }
            self.pos = save;
        }
        let at = self.pos;
        let lhs = self.expr()?;
        if let Tok::Punct(op) = self.peek().clone() {
            if INFIX.contains(&op) {
                self.advance();
                let rhs = self.expr()?;
                return Ok(Guard::pred(op, vec![lhs, rhs]));
            }
        }
        match lhs {
            Expr::Call(name, args) if standard().predicate(&name).is_some() => Ok(Guard::Pred(name, args)),
            Expr::Call(name, _) => Err(self.err_at(at, format!("unknown predicate `{name}`"))),
            _ => Err(self.err_at(at, "expected a predicate")),
        }
    }

    // ---- net files ---------------------------------------------------

    pub fn at_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub fn value(&mut self) -> Result<Value, ParseError> {
        let at = self.pos;
        let e = self.expr()?;
        self.constant(&e, at)
    }

    pub fn net(&mut self) -> Result<Net, ParseError> {
        self.expect_kw("net")?;
        let mut net = Net::new(&self.name()?);
        while !self.at_end() {
            let at = self.pos;
            let section = self.ident()?;
            match section.as_str() {
                "prefix" => {
                    let p = self.ident()?;
                    self.expect_punct(":")?;
                    let iri = match self.advance() {
                        Tok::Iri(s) => s,
                        _ => return Err(self.err_at(self.pos - 1, "expected `<iri>`")),
                    };
                    self.prefixes.insert(p.clone(), iri.clone());
                    net.prefixes.push((p, iri));
                }
                "types" => {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        self.data_type()?;
                        self.eat_punct(",");
                    }
                }
                "actions" => {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        let a = self.action()?;
                        if net.actions.contains_key(&a.name) {
                            return Err(self.err_at(at, format!("duplicate action `{}`", a.name)));
                        }
                        net.add_action(a);
                    }
                }
                "places" => {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        self.place(&mut net)?;
                    }
                }
                "transitions" => {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        self.transition(&mut net)?;
                    }
                }
                "channels" => {
                    let cin = self.name()?;
                    self.expect_punct("->")?;
                    let cout = self.name()?;
                    net.channels = Some((cin, cout));
                }
                "init" => {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        self.init_item(&mut net)?;
                    }
                }
                other => return Err(self.err_at(at, format!("unknown section `{other}`"))),
            }
        }
        Ok(net)
    }

    fn templates(&mut self) -> Result<Vec<TripleTemplate>, ParseError> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            let at = self.pos;
            let parts = self.tuple()?;
            let [s, p, o]: [Expr; 3] = parts.try_into().map_err(|_| self.err_at(at, "a triple template has three parts"))?;
            out.push(TripleTemplate::new(s, p, o));
            self.eat_punct(",");
        }
        Ok(out)
    }

    fn action(&mut self) -> Result<ActionDef, ParseError> {
        self.expect_kw("action")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let (n, ty) = self.typed_name()?;
                params.push(Param::new(&n, ty));
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        let mut a = ActionDef::new(&name, params);
        self.expect_punct("{")?;
        while !self.eat_punct("}") {
            if self.eat_dashed("del", "mm") {
                a.del_mm.extend(self.templates()?);
            } else if self.eat_dashed("add", "mm") {
                a.add_mm.extend(self.templates()?);
            } else if self.eat_dashed("del", "mo") {
                self.expect_punct("{")?;
                while !self.eat_punct("}") {
                    a.del_mo.push(self.expr()?);
                    self.eat_punct(",");
                }
            } else if self.eat_dashed("add", "mo") {
                self.expect_punct("{")?;
                while !self.eat_punct("}") {
                    let target = self.expr()?;
                    self.expect_punct("->")?;
                    let function = self.ident()?;
                    let args = self.args()?;
                    a.add_mo.push(Generator { target, function, args });
                    self.eat_punct(",");
                }
            } else {
                return Err(self.unexpected("`del-mm`, `add-mm`, `del-mo` or `add-mo`"));
            }
        }
        Ok(a)
    }

    fn place(&mut self, net: &mut Net) -> Result<(), ParseError> {
        let at = self.pos;
        let view = if self.eat_kw("view") {
            true
        } else {
            self.expect_kw("place")?;
            false
        };
        let name = self.name()?;
        self.expect_punct(":")?;
        let color = self.color()?;
        let res = if view {
            self.expect_punct("=")?;
            let q = self.string()?;
            net.add_view(&name, color, &q)
        } else {
            net.add_control(&name, color)
        };
        res.map_err(|e| self.err_at(at, e.to_string()))
    }

    fn transition(&mut self, net: &mut Net) -> Result<(), ParseError> {
        let at = self.pos;
        self.expect_kw("transition")?;
        let name = self.name()?;
        let mut t = Transition::new(&name);
        let mut flows = Vec::new();
        self.expect_punct("{")?;
        while !self.eat_punct("}") {
            let kw_at = self.pos;
            match self.ident()?.as_str() {
                "guard" => t.guard = self.guard()?,
                "vars" => {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        let var = if let Tok::Fresh(n) = self.peek().clone() {
                            self.advance();
                            self.expect_punct(":")?;
                            (Var::fresh(n), self.data_type()?)
                        } else {
                            let (n, ty) = self.typed_name()?;
                            (Var::new(n), ty)
                        };
                        t.declared.insert(var.0, var.1);
                        self.eat_punct(",");
                    }
                }
                kind @ ("in" | "out" | "read") => {
                    let kind = kind.to_string();
                    let place = self.name()?;
                    flows.push((kind, place, self.tuple()?));
                }
                "action" => {
                    let a = self.ident()?;
                    let args = self.args()?;
                    t = t.with_action(&a, args);
                }
                other => return Err(self.err_at(kw_at, format!("unexpected `{other}` in transition"))),
            }
        }
        net.add_transition(t).map_err(|e| self.err_at(at, e.to_string()))?;
        for (kind, place, insc) in flows {
            match kind.as_str() {
                "in" => net.input(&place, &name, insc),
                "out" => net.output(&name, &place, insc),
                _ => net.read(&place, &name, insc),
            }
        }
        Ok(())
    }

    fn init_item(&mut self, net: &mut Net) -> Result<(), ParseError> {
        let at = self.pos;
        match self.ident()?.as_str() {
            "token" => {
                let place = self.name()?;
                self.expect_punct("(")?;
                let mut vals = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        vals.push(self.value()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                let mut n = 1;
                if self.eat_punct("*") {
                    n = match self.advance() {
                        Tok::Int(i) if i > 0 => i as usize,
                        _ => return Err(self.err_at(self.pos - 1, "expected a positive multiplicity")),
                    };
                }
                net.init.tokens.push((place, vals, n));
            }
            "triples" => net.init.triples_file = Some(self.string()?),
            "objects" => net.init.objects_file = Some(self.string()?),
            "supply" => {
                let var = self.ident()?;
                self.expect_punct("=")?;
                self.expect_punct("[")?;
                let mut vals = Vec::new();
                if !self.eat_punct("]") {
                    loop {
                        vals.push(self.value()?);
                        if self.eat_punct("]") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                net.init.supply.insert(var, vals);
            }
            other => return Err(self.err_at(at, format!("unexpected `{other}` in init"))),
        }
        Ok(())
    }
}
