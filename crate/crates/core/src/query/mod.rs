//! Predicate queries: AST, evaluation, sensitivity, and reversible circuits.

mod circuit;
mod clifford_t;
mod parser;

pub use circuit::{compile_circuit, gate_cost, GateCost, ReversibleCircuit};
pub use clifford_t::{decompose_to_clifford_t, CliffordTCircuit};
pub use parser::parse_query;

use std::fmt;

use num_rational::Ratio;

use crate::dataset::{Dataset, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Eq,
    Neq,
    /// Unsigned `code <= value`.
    Leq,
    /// Unsigned `code >= value`.
    Geq,
}

impl Cmp {
    pub fn holds(self, code: u64, value: u64) -> bool {
        match self {
            Cmp::Eq => code == value,
            Cmp::Neq => code != value,
            Cmp::Leq => code <= value,
            Cmp::Geq => code >= value,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Neq => "!=",
            Cmp::Leq => "<=",
            Cmp::Geq => ">=",
        }
    }
}

/// A single-attribute predicate. `attr` indexes the schema's attribute list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub attr: usize,
    pub cmp: Cmp,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(Leaf),
    And(Vec<Node>),
    Or(Vec<Node>),
}

impl Node {
    pub fn leaf(attr: usize, cmp: Cmp, value: u64) -> Node {
        Node::Leaf(Leaf { attr, cmp, value })
    }

    fn eval(&self, codes: &dyn Fn(usize) -> u64) -> bool {
        match self {
            Node::Leaf(l) => l.cmp.holds(codes(l.attr), l.value),
            Node::And(children) => children.iter().all(|c| c.eval(codes)),
            Node::Or(children) => children.iter().any(|c| c.eval(codes)),
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::And(c) | Node::Or(c) => c.iter().for_each(|n| n.leaves(out)),
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Node::Leaf(_) => true,
            Node::And(c) | Node::Or(c) => !c.is_empty() && c.iter().all(Node::is_valid),
        }
    }
}

/// A conjunction/disjunction of attribute predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateQuery {
    root: Node,
}

impl PredicateQuery {
    /// Panics if an `And`/`Or` node has no children.
    pub fn new(root: Node) -> Self {
        assert!(root.is_valid(), "And/Or nodes need at least one child");
        PredicateQuery { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.root.leaves(&mut out);
        out
    }

    /// q(x) on a row bitstring. The index prefix is ignored.
    pub fn eval_row(&self, schema: &Schema, row: u128) -> bool {
        self.root.eval(&|attr| schema.extract(row, attr))
    }

    /// q(x) on a tuple of attribute codes.
    pub fn eval_payload(&self, payload: &[u64]) -> bool {
        self.root.eval(&|attr| payload[attr])
    }

    /// q(D) = (1/n) Σ q(x_i), exactly.
    pub fn eval_dataset(&self, d: &Dataset) -> Ratio<u64> {
        let hits = d.rows().iter().filter(|r| self.eval_row(d.schema(), **r)).count();
        Ratio::new(hits as u64, d.n() as u64)
    }

    /// Renders the query back into the textual grammar.
    pub fn display<'a>(&'a self, schema: &'a Schema) -> impl fmt::Display + 'a {
        QueryDisplay { node: &self.root, schema, top: true }
    }
}

/// Δq = 1/n for every normalised counting query.
pub fn global_sensitivity(_q: &PredicateQuery, n: usize) -> Ratio<u64> {
    Ratio::new(1, n as u64)
}

struct QueryDisplay<'a> {
    node: &'a Node,
    schema: &'a Schema,
    top: bool,
}

impl fmt::Display for QueryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (children, sep) = match self.node {
            Node::Leaf(l) => {
                let a = &self.schema.attributes[l.attr];
                return write!(f, "{} {} {}", a.name, l.cmp.symbol(), a.literal(l.value));
            }
            Node::And(c) => (c, " AND "),
            Node::Or(c) => (c, " OR "),
        };
        if !self.top {
            write!(f, "(")?;
        }
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                write!(f, "{sep}")?;
            }
            write!(f, "{}", QueryDisplay { node: c, schema: self.schema, top: false })?;
        }
        if !self.top {
            write!(f, ")")?;
        }
        Ok(())
    }
}
