use std::collections::BTreeMap;

use super::{Cmp, Leaf, Node, PredicateQuery};
use crate::dataset::Schema;
use crate::gate::Gate;

/// A permutation circuit that writes q(x) onto `output_qubit`.
///
/// Qubits `0..data_qubits` hold the row, laid out as in [`crate::dataset`].
/// Ancilla `k` is qubit `data_qubits + k` and starts in `ancilla_init[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversibleCircuit {
    pub qubit_count: usize,
    pub data_qubits: usize,
    pub gates: Vec<Gate>,
    pub output_qubit: usize,
    pub ancilla_init: Vec<bool>,
}

impl ReversibleCircuit {
    /// Basis index of the full register for data row `row`.
    pub fn initial_index(&self, row: u128) -> u128 {
        self.ancilla_init
            .iter()
            .enumerate()
            .fold(row, |acc, (k, b)| acc | ((*b as u128) << (self.data_qubits + k)))
    }

    /// Runs the circuit on one basis row and reads the output bit.
    pub fn evaluate(&self, row: u128) -> bool {
        let out = self.gates.iter().fold(self.initial_index(row), |idx, g| g.permute(idx));
        (out >> self.output_qubit) & 1 == 1
    }

    /// Every gate in range, none targeting one of its own controls.
    pub fn is_well_formed(&self) -> bool {
        self.output_qubit < self.qubit_count
            && self.ancilla_init.len() + self.data_qubits == self.qubit_count
            && self
                .gates
                .iter()
                .all(|g| g.is_permutation() && g.is_well_formed() && g.qubits().iter().all(|q| *q < self.qubit_count))
    }
}

struct Builder<'s> {
    schema: &'s Schema,
    next: usize,
    ancilla_init: Vec<bool>,
    gates: Vec<Gate>,
}

impl Builder<'_> {
    fn alloc(&mut self, init: bool) -> usize {
        let q = self.next;
        self.next += 1;
        self.ancilla_init.push(init);
        q
    }

    /// Ancilla set to [x_j == a_j]: starts at |1⟩, CNOT from x_j, X when a_j = 1.
    fn bit_equal(&mut self, x: usize, a: bool) -> usize {
        let b = self.alloc(true);
        self.gates.push(Gate::Cnot { control: x, target: b });
        if a {
            self.gates.push(Gate::X(b));
        }
        b
    }

    fn node(&mut self, node: &Node) -> usize {
        match node {
            Node::Leaf(leaf) => self.leaf(leaf),
            Node::And(children) if children.len() == 1 => self.node(&children[0]),
            Node::Or(children) if children.len() == 1 => self.node(&children[0]),
            Node::And(children) => {
                let outs: Vec<usize> = children.iter().map(|c| self.node(c)).collect();
                let t = self.alloc(false);
                self.gates.push(Gate::controlled_x(&outs, t));
                t
            }
            Node::Or(children) => {
                // φ_1 ∨ … ∨ φ_k = ¬(¬φ_1 ∧ … ∧ ¬φ_k)
                let outs: Vec<usize> = children.iter().map(|c| self.node(c)).collect();
                for o in &outs {
                    self.gates.push(Gate::X(*o));
                }
                let t = self.alloc(true);
                self.gates.push(Gate::controlled_x(&outs, t));
                t
            }
        }
    }

    fn leaf(&mut self, leaf: &Leaf) -> usize {
        let attr = &self.schema.attributes[leaf.attr];
        let offset = self.schema.offset(leaf.attr);
        let width = attr.width;
        let bit = |j: usize| (leaf.value >> (width - 1 - j)) & 1 == 1;
        match leaf.cmp {
            Cmp::Eq | Cmp::Neq if width == 1 => {
                let x = offset;
                let b = self.alloc(leaf.cmp == Cmp::Eq);
                self.gates.push(Gate::Cnot { control: x, target: b });
                if bit(0) {
                    self.gates.push(Gate::X(b));
                }
                b
            }
            Cmp::Eq | Cmp::Neq => {
                let bs: Vec<usize> = (0..width).map(|j| self.bit_equal(offset + j, bit(j))).collect();
                let out = self.alloc(leaf.cmp == Cmp::Neq);
                self.gates.push(Gate::controlled_x(&bs, out));
                out
            }
            Cmp::Leq | Cmp::Geq => self.compare(offset, width, leaf.cmp == Cmp::Geq, bit),
        }
    }

    /// MSB-first unsigned comparison against a constant.
    ///
    /// `x < a` (for `>=`) or `x > a` (for `<=`) holds iff some bit j is the first
    /// position where x and a differ in the offending direction. Those events
    /// are disjoint, so flipping a |1⟩ output once per event leaves the
    /// negation of their union.
    fn compare(&mut self, offset: usize, width: usize, geq: bool, bit: impl Fn(usize) -> bool) -> usize {
        let offending = |j: usize| if geq { bit(j) } else { !bit(j) };
        let last = (0..width).rev().find(|&j| offending(j));
        let out = self.alloc(true);
        let Some(last) = last else { return out };
        // prefix[j]: ancilla holding ∧_{i<j} [x_i == a_i]; None while the prefix is empty.
        let mut prefix: Option<usize> = None;
        for j in 0..=last {
            let x = offset + j;
            if offending(j) {
                // for >=: a_j = 1 and x_j = 0; for <=: a_j = 0 and x_j = 1
                if geq {
                    self.gates.push(Gate::X(x));
                }
                match prefix {
                    None => self.gates.push(Gate::Cnot { control: x, target: out }),
                    Some(p) => self.gates.push(Gate::Toffoli { c1: p, c2: x, target: out }),
                }
                if geq {
                    self.gates.push(Gate::X(x));
                }
            }
            if j < last {
                let b = self.bit_equal(x, bit(j));
                prefix = Some(match prefix {
                    None => b,
                    Some(p) => {
                        let c = self.alloc(false);
                        self.gates.push(Gate::Toffoli { c1: p, c2: b, target: c });
                        c
                    }
                });
            }
        }
        out
    }
}

/// Compiles `q` to a reversible circuit over `schema`'s row layout (including
/// its index prefix, which the circuit never reads).
pub fn compile_circuit(q: &PredicateQuery, schema: &Schema) -> ReversibleCircuit {
    let data = schema.row_width();
    let mut b = Builder { schema, next: data, ancilla_init: Vec::new(), gates: Vec::new() };
    let output = b.node(q.root());
    ReversibleCircuit {
        qubit_count: b.next,
        data_qubits: data,
        gates: b.gates,
        output_qubit: output,
        ancilla_init: b.ancilla_init,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateCost {
    pub x: usize,
    pub cnot: usize,
    pub toffoli: usize,
    /// Multi-controlled X gates with three or more controls, keyed by control count.
    pub mcx_by_arity: BTreeMap<usize, usize>,
    pub ancillas: usize,
}

impl GateCost {
    pub fn total_gates(&self) -> usize {
        self.x + self.cnot + self.toffoli + self.mcx_by_arity.values().sum::<usize>()
    }

    /// Elementary gate count after lowering k-control MCX to 2k − 3 Toffolis.
    pub fn elementary_gates(&self) -> usize {
        self.x
            + self.cnot
            + self.toffoli
            + self.mcx_by_arity.iter().map(|(k, c)| (2 * k - 3) * c).sum::<usize>()
    }
}

pub fn gate_cost(c: &ReversibleCircuit) -> GateCost {
    let mut cost = GateCost { ancillas: c.qubit_count - c.data_qubits, ..Default::default() };
    for g in &c.gates {
        match g {
            Gate::X(_) => cost.x += 1,
            Gate::Cnot { .. } => cost.cnot += 1,
            Gate::Toffoli { .. } => cost.toffoli += 1,
            Gate::Mcx { controls, .. } => *cost.mcx_by_arity.entry(controls.len()).or_default() += 1,
            other => panic!("{} in a reversible circuit", other.name()),
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Dataset};
    use crate::query::parse_query;

    fn all_rows(schema: &Schema) -> impl Iterator<Item = u128> {
        0..(1u128 << schema.row_width())
    }

    #[test]
    fn one_bit_equality() {
        let s = Schema::new(vec![Attribute::new("b", 1)]).unwrap();
        let q = parse_query("b == 1", &s).unwrap();
        let c = compile_circuit(&q, &s);
        assert!(c.is_well_formed());
        assert!(!c.evaluate(0));
        assert!(c.evaluate(1));
        let cost = gate_cost(&c);
        assert_eq!((cost.x, cost.cnot, cost.toffoli, cost.ancillas), (1, 1, 0, 1));
    }

    #[test]
    fn and_of_two_bits_truth_table() {
        let s = Schema::new(vec![Attribute::new("a", 1), Attribute::new("b", 1)]).unwrap();
        let q = parse_query("a == 1 AND b == 1", &s).unwrap();
        let c = compile_circuit(&q, &s);
        for row in 0..4u128 {
            assert_eq!(c.evaluate(row), row == 0b11, "row {row:02b}");
        }
    }

    #[test]
    fn geq_two_bit_truth_table() {
        let s = Schema::new(vec![Attribute::new("a", 2)]).unwrap();
        let q = parse_query("a >= 01", &s).unwrap();
        let c = compile_circuit(&q, &s);
        let ones: Vec<String> = all_rows(&s)
            .filter(|r| c.evaluate(*r))
            .map(|r| crate::dataset::bitstring(r, 2))
            .collect();
        assert_eq!(ones, ["10", "01", "11"]);
        for r in all_rows(&s) {
            assert_eq!(c.evaluate(r), q.eval_row(&s, r));
        }
    }

    #[test]
    fn comparisons_exhaustive_three_bits() {
        let s = Schema::new(vec![Attribute::new("a", 3)]).unwrap();
        for op in ["<=", ">=", "==", "!="] {
            for v in 0..8 {
                let q = parse_query(&format!("a {op} {v:03b}"), &s).unwrap();
                let c = compile_circuit(&q, &s);
                assert!(c.is_well_formed());
                for r in all_rows(&s) {
                    assert_eq!(c.evaluate(r), q.eval_row(&s, r), "a {op} {v:03b} on {r:03b}");
                }
            }
        }
    }

    #[test]
    fn and_adds_one_toffoli_and_one_ancilla() {
        let s = Schema::new(vec![Attribute::new("a", 2), Attribute::new("b", 2)]).unwrap();
        let left = gate_cost(&compile_circuit(&parse_query("a == 10", &s).unwrap(), &s));
        let right = gate_cost(&compile_circuit(&parse_query("b == 01", &s).unwrap(), &s));
        let both = gate_cost(&compile_circuit(&parse_query("a == 10 AND b == 01", &s).unwrap(), &s));
        assert_eq!(both.toffoli, left.toffoli + right.toffoli + 1);
        assert_eq!(both.ancillas, left.ancillas + right.ancillas + 1);
        assert_eq!(both.x, left.x + right.x);
        assert_eq!(both.cnot, left.cnot + right.cnot);
    }

    #[test]
    fn equality_cost_linear_in_width() {
        // per bit: one CNOT and one ancilla, X only where the constant has a 1
        for width in 2..=12 {
            let s = Schema::new(vec![Attribute::new("a", width)]).unwrap();
            let value = (1u64 << width) - 1;
            let q = parse_query(&format!("a == {value}"), &s).unwrap();
            let cost = gate_cost(&compile_circuit(&q, &s));
            assert_eq!(cost.cnot, width);
            assert_eq!(cost.x, width);
            assert_eq!(cost.ancillas, width + 1);
            assert_eq!(cost.elementary_gates(), 4 * width - 3);
        }
    }

    #[test]
    fn prefix_is_transparent() {
        let s = Schema::new(vec![Attribute::new("a", 2)]).unwrap();
        let d = Dataset::new(s, vec![vec![0], vec![1], vec![2], vec![3], vec![1]]).unwrap();
        let q = parse_query("a <= 01", d.schema()).unwrap();
        let c = compile_circuit(&q, d.schema());
        assert_eq!(c.data_qubits, 5);
        for r in d.rows() {
            assert_eq!(c.evaluate(*r), q.eval_row(d.schema(), *r));
        }
    }
}
