use std::fmt;

/// A gate on qubits of a register. Qubit `q` is bit `q` of a basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    X(usize),
    Z(usize),
    H(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Tdg(usize),
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
    Mcx { controls: Vec<usize>, target: usize },
}

impl Gate {
    /// Multi-controlled X, using the narrowest variant for the control count.
    pub fn controlled_x(controls: &[usize], target: usize) -> Gate {
        match *controls {
            [] => Gate::X(target),
            [c] => Gate::Cnot { control: c, target },
            [c1, c2] => Gate::Toffoli { c1, c2, target },
            _ => Gate::Mcx { controls: controls.to_vec(), target },
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(q) | Gate::Z(q) | Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::T(q) | Gate::Tdg(q) => {
                vec![*q]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Toffoli { c1, c2, target } => vec![*c1, *c2, *target],
            Gate::Mcx { controls, target } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
        }
    }

    /// Gates that map basis states to basis states.
    pub fn is_permutation(&self) -> bool {
        matches!(self, Gate::X(_) | Gate::Cnot { .. } | Gate::Toffoli { .. } | Gate::Mcx { .. })
    }

    pub fn is_clifford(&self) -> bool {
        matches!(
            self,
            Gate::X(_) | Gate::Z(_) | Gate::H(_) | Gate::S(_) | Gate::Sdg(_) | Gate::Cnot { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "x",
            Gate::Z(_) => "z",
            Gate::H(_) => "h",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::T(_) => "t",
            Gate::Tdg(_) => "tdg",
            Gate::Cnot { .. } => "cx",
            Gate::Toffoli { .. } => "ccx",
            Gate::Mcx { .. } => "mcx",
        }
    }

    /// No gate may use the same qubit twice.
    pub fn is_well_formed(&self) -> bool {
        let q = self.qubits();
        (0..q.len()).all(|i| !q[i + 1..].contains(&q[i]))
    }

    /// Applies a permutation gate to a basis index. Panics on non-permutation gates.
    pub fn permute(&self, index: u128) -> u128 {
        let bit = |q: usize| (index >> q) & 1 == 1;
        let flip = |q: usize| index ^ (1u128 << q);
        match self {
            Gate::X(q) => flip(*q),
            Gate::Cnot { control, target } => {
                if bit(*control) {
                    flip(*target)
                } else {
                    index
                }
            }
            Gate::Toffoli { c1, c2, target } => {
                if bit(*c1) && bit(*c2) {
                    flip(*target)
                } else {
                    index
                }
            }
            Gate::Mcx { controls, target } => {
                if controls.iter().all(|c| bit(*c)) {
                    flip(*target)
                } else {
                    index
                }
            }
            other => panic!("{} is not a permutation gate", other.name()),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}
