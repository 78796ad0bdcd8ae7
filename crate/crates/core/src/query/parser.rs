//! Recursive-descent parser for the query grammar:
//!
//! ```text
//! expr   := term ('OR' term)*
//! term   := factor ('AND' factor)*
//! factor := '(' expr ')' | pred
//! pred   := attr op value | label
//! op     := '==' | '!=' | '<=' | '>='
//! ```
//!
//! A bare `label` stands for `attr == label` when exactly one attribute declares it.

use super::{Cmp, Node, PredicateQuery};
use crate::dataset::Schema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    LParen,
    RParen,
    And,
    Or,
    Op(Cmp),
    Word(&'a str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok<'_>)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'=' | b'!' | b'<' | b'>' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(syntax(i, "expected one of ==, !=, <=, >="));
                }
                i += 2;
                Tok::Op(match c {
                    b'=' => Cmp::Eq,
                    b'!' => Cmp::Neq,
                    b'<' => Cmp::Leq,
                    _ => Cmp::Geq,
                })
            }
            c if is_word(c) => {
                while i < bytes.len() && is_word(bytes[i]) {
                    i += 1;
                }
                let w = &text[start..i];
                if w.eq_ignore_ascii_case("and") {
                    Tok::And
                } else if w.eq_ignore_ascii_case("or") {
                    Tok::Or
                } else {
                    Tok::Word(w)
                }
            }
            _ => return Err(syntax(i, &format!("unexpected character `{}`", c as char))),
        };
        out.push((start, tok));
    }
    Ok(out)
}

fn is_word(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'.')
}

fn syntax(position: usize, message: &str) -> Error {
    Error::Syntax { position, message: message.to_string() }
}

struct Parser<'a, 's> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
    schema: &'s Schema,
}

impl<'a> Parser<'a, '_> {
    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn expr(&mut self) -> Result<Node> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Node::Or(terms) })
    }

    fn term(&mut self) -> Result<Node> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Node::And(factors) })
    }

    fn factor(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(syntax(self.offset(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Word(_)) => self.pred(),
            Some(_) => Err(syntax(self.offset(), "expected a predicate or `(`")),
            None => Err(syntax(self.end, "unexpected end of query")),
        }
    }

    fn pred(&mut self) -> Result<Node> {
        let Some(Tok::Word(first)) = self.peek().cloned() else { unreachable!() };
        self.pos += 1;
        if let Some(Tok::Op(cmp)) = self.peek().cloned() {
            self.pos += 1;
            let value = match self.peek().cloned() {
                Some(Tok::Word(v)) => v,
                _ => return Err(syntax(self.offset(), "expected a value")),
            };
            self.pos += 1;
            let (idx, attr) = self
                .schema
                .attribute(first)
                .ok_or_else(|| Error::UnknownAttribute(first.to_string()))?;
            let code = attr.parse_value(value)?;
            return Ok(Node::leaf(idx, cmp, code));
        }
        self.bare_label(first)
    }

    fn bare_label(&self, label: &str) -> Result<Node> {
        let hits: Vec<(usize, u64)> = self
            .schema
            .attributes
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.code_of(label).map(|c| (i, c)))
            .collect();
        match hits.as_slice() {
            [(idx, code)] => Ok(Node::leaf(*idx, Cmp::Eq, *code)),
            [] if self.schema.attribute(label).is_some() => {
                Err(syntax(self.offset(), &format!("expected an operator after `{label}`")))
            }
            [] => Err(Error::UnknownValue { attr: "*".into(), cell: label.to_string() }),
            _ => Err(syntax(
                self.offset(),
                &format!("label `{label}` is declared by several attributes; qualify it"),
            )),
        }
    }
}

pub fn parse_query(text: &str, schema: &Schema) -> Result<PredicateQuery> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), schema };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(PredicateQuery::new(root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Attribute;

    fn schema() -> Schema {
        Schema::new(vec![
            Attribute::with_labels("age", 2, [("Child", 0), ("Adult", 1)]),
            Attribute::with_labels("marital", 2, [("Single", 0), ("Married", 1), ("Divorced", 2)]),
            Attribute::with_labels("prof", 2, [("Teacher", 0), ("Student", 1)]),
            Attribute::new("score", 2),
        ])
        .unwrap()
    }

    #[test]
    fn bare_labels() {
        let q = parse_query("Single AND Teacher", &schema()).unwrap();
        assert_eq!(*q.root(), Node::And(vec![Node::leaf(1, Cmp::Eq, 0), Node::leaf(2, Cmp::Eq, 0)]));
    }

    #[test]
    fn nesting_and_precedence() {
        let s = schema();
        let q = parse_query("(Adult AND Single) OR Teacher", &s).unwrap();
        assert_eq!(
            *q.root(),
            Node::Or(vec![
                Node::And(vec![Node::leaf(0, Cmp::Eq, 1), Node::leaf(1, Cmp::Eq, 0)]),
                Node::leaf(2, Cmp::Eq, 0),
            ])
        );
        let q2 = parse_query("Adult AND Single or Teacher", &s).unwrap();
        assert_eq!(q, q2);
    }

    #[test]
    fn binary_literals_and_ops() {
        let s = schema();
        let q = parse_query("score >= 01", &s).unwrap();
        assert_eq!(*q.root(), Node::leaf(3, Cmp::Geq, 1));
        let q = parse_query("marital != Divorced", &s).unwrap();
        assert_eq!(*q.root(), Node::leaf(1, Cmp::Neq, 2));
        let q = parse_query("score <= 3", &s).unwrap();
        assert_eq!(*q.root(), Node::leaf(3, Cmp::Leq, 3));
    }

    #[test]
    fn errors() {
        let s = schema();
        assert!(matches!(parse_query("height == 01", &s), Err(Error::UnknownAttribute(a)) if a == "height"));
        assert!(matches!(parse_query("marital == Widowed", &s), Err(Error::UnknownValue { .. })));
        assert!(matches!(parse_query("Widowed", &s), Err(Error::UnknownValue { .. })));
        assert!(matches!(parse_query("(Adult AND Single", &s), Err(Error::Syntax { position: 17, .. })));
        assert!(matches!(parse_query("Adult AND", &s), Err(Error::Syntax { position: 9, .. })));
        assert!(matches!(parse_query("age = 01", &s), Err(Error::Syntax { position: 4, .. })));
        assert!(matches!(parse_query("Adult Single", &s), Err(Error::Syntax { position: 6, .. })));
        assert!(matches!(parse_query("score >= 111", &s), Err(Error::WidthOverflow(_))));
        assert!(matches!(parse_query("", &s), Err(Error::Syntax { position: 0, .. })));
    }
}
