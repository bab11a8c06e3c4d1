use crate::types::Rect;

use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Fresh(String),
    /// `prefix:local`
    PName(String, String),
    Iri(String),
    Str(String),
    Int(i64),
    Rect(Rect),
    Oid(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCT: &[&str] = &[
    "::", "->", "&&", "||", "!=", "<=", ">=", "(", ")", "{", "}", "[", "]", ",", ":", "=", "<", ">", "!", "-", "*",
];

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.col, message: message.into() }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| f(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn string(&mut self) -> Result<String, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string")),
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c @ ('"' | '\\')) => s.push(c),
                    _ => return Err(self.err("bad escape in string")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    /// `(x1,y1)..(x2,y2)`, possibly with blanks, starting at the current `(`.
    fn try_rect(&mut self) -> Option<Rect> {
        let cs = &self.chars[self.pos..];
        let mut i = 0;
        let blanks = |i: &mut usize| {
            while cs.get(*i).is_some_and(|c| *c == ' ') {
                *i += 1;
            }
        };
        let lit = |i: &mut usize, s: &str| {
            for c in s.chars() {
                if cs.get(*i) != Some(&c) {
                    return false;
                }
                *i += 1;
            }
            true
        };
        let int = |i: &mut usize| -> Option<i64> {
            let start = *i;
            if cs.get(*i) == Some(&'-') {
                *i += 1;
            }
            while cs.get(*i).is_some_and(|c| c.is_ascii_digit()) {
                *i += 1;
            }
            cs[start..*i].iter().collect::<String>().parse().ok()
        };
        let pair = |i: &mut usize| -> Option<(i64, i64)> {
            blanks(i);
            lit(i, "(").then_some(())?;
            blanks(i);
            let x = int(i)?;
            blanks(i);
            lit(i, ",").then_some(())?;
            blanks(i);
            let y = int(i)?;
            blanks(i);
            lit(i, ")").then_some((x, y))
        };
        let (x1, y1) = pair(&mut i)?;
        blanks(&mut i);
        lit(&mut i, "..").then_some(())?;
        let (x2, y2) = pair(&mut i)?;
        let rect = Rect::new(x1, y1, x2, y2).ok()?;
        for _ in 0..i {
            self.bump();
        }
        Some(rect)
    }

    fn next(&mut self) -> Result<Option<Token>, ParseError> {
        loop {
            match self.peek(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    self.take_while(|c| c != '\n');
                }
                _ => break,
            }
        }
        let (line, column) = (self.line, self.col);
        let Some(c) = self.peek(0) else { return Ok(None) };
        let tok = if c == 'ν' {
            self.bump();
            let name = self.take_while(ident_char);
            if name.is_empty() {
                return Err(self.err("expected a variable name after `ν`"));
            }
            Tok::Fresh(name)
        } else if ident_start(c) {
            let name = self.take_while(ident_char);
            if self.peek(0) == Some(':') && self.peek(1).is_some_and(|c| ident_char(c)) {
                self.bump();
                let local = self.take_while(|c| ident_char(c) || c == '-');
                Tok::PName(name, local)
            } else {
                Tok::Ident(name)
            }
        } else if c.is_ascii_digit() {
            let digits = self.take_while(|c| c.is_ascii_digit());
            Tok::Int(digits.parse().map_err(|_| self.err(format!("integer `{digits}` out of range")))?)
        } else if c == '"' {
            Tok::Str(self.string()?)
        } else if c == '@' {
            self.bump();
            match self.peek(0) {
                Some('"') => Tok::Oid(self.string()?),
                _ => {
                    let name = self.take_while(|c| ident_char(c) || c == '-');
                    if name.is_empty() {
                        return Err(self.err("expected an address after `@`"));
                    }
                    Tok::Oid(name)
                }
            }
        } else if c == '(' && self.peek(1).is_some_and(|c| c.is_ascii_digit() || c == '-' || c == ' ') {
            match self.try_rect() {
                Some(r) => Tok::Rect(r),
                None => {
                    self.bump();
                    Tok::Punct("(")
                }
            }
        } else if c == '<' && self.iri_ahead() {
            self.bump();
            let iri = self.take_while(|c| c != '>');
            self.bump();
            Tok::Iri(iri)
        } else if (c == '=' || c == '<') && self.peek(1) == Some('_') {
            // typed predicate names such as `=_int` and `<_int`
            self.bump();
            let rest = self.take_while(ident_char);
            Tok::Ident(format!("{c}{rest}"))
        } else {
            let p = PUNCT
                .iter()
                .find(|p| p.chars().enumerate().all(|(i, pc)| self.peek(i) == Some(pc)))
                .ok_or_else(|| self.err(format!("unexpected character `{c}`")))?;
            for _ in 0..p.len() {
                self.bump();
            }
            Tok::Punct(p)
        };
        Ok(Some(Token { tok, line, column }))
    }

    /// `<` starting an IRI: no blanks before the closing `>` and a `:` inside.
    fn iri_ahead(&self) -> bool {
        let mut colon = false;
        for c in self.chars[self.pos + 1..].iter() {
            match c {
                '>' => return colon,
                ':' => colon = true,
                c if c.is_whitespace() || *c == '<' => return false,
                _ => {}
            }
        }
        false
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(t) = lx.next()? {
        out.push(t);
    }
    out.push(Token { tok: Tok::Eof, line: lx.line, column: lx.col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn rects_and_tuples() {
        assert_eq!(toks("(1,2)..(3, 4)"), vec![Tok::Rect(Rect::new(1, 2, 3, 4).unwrap()), Tok::Eof]);
        assert_eq!(
            toks("(1, 2)"),
            vec![Tok::Punct("("), Tok::Int(1), Tok::Punct(","), Tok::Int(2), Tok::Punct(")"), Tok::Eof]
        );
    }

    #[test]
    fn iris_versus_less_than() {
        assert_eq!(toks("<urn:x>"), vec![Tok::Iri("urn:x".into()), Tok::Eof]);
        assert_eq!(toks("a < b"), vec![Tok::Ident("a".into()), Tok::Punct("<"), Tok::Ident("b".into()), Tok::Eof]);
        assert_eq!(toks("set<str x oid>")[1], Tok::Punct("<"));
    }

    #[test]
    fn names_and_comments() {
        assert_eq!(
            toks("mmdb:face-count νa @img1 # tail\n=_int"),
            vec![
                Tok::PName("mmdb".into(), "face-count".into()),
                Tok::Fresh("a".into()),
                Tok::Oid("img1".into()),
                Tok::Ident("=_int".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("c: L")[1], Tok::Punct(":"));
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("a\n  b").unwrap();
        assert_eq!((t[1].line, t[1].column), (2, 3));
        let e = tokenize("a\n $").unwrap_err();
        assert_eq!((e.line, e.column), (2, 2));
        assert!(tokenize("\"open").is_err());
    }
}
