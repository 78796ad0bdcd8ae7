use super::ReversibleCircuit;
use crate::gate::Gate;

/// A gate list over {X, Z, H, S, T, T†, CNOT}.
///
/// `qubit_count` may exceed the source circuit's register: MCX lowering uses
/// clean ancillas that start in |0⟩ and are returned to |0⟩.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordTCircuit {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
}

impl CliffordTCircuit {
    pub fn t_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::T(_) | Gate::Tdg(_))).count()
    }
}

/// Standard 7-T Toffoli.
pub fn toffoli_gates(a: usize, b: usize, t: usize) -> [Gate; 15] {
    use Gate::*;
    [
        H(t),
        Cnot { control: b, target: t },
        Tdg(t),
        Cnot { control: a, target: t },
        T(t),
        Cnot { control: b, target: t },
        Tdg(t),
        Cnot { control: a, target: t },
        T(b),
        T(t),
        H(t),
        Cnot { control: a, target: b },
        T(a),
        Tdg(b),
        Cnot { control: a, target: b },
    ]
}

/// Lowers a k-control X (k ≥ 3) to 2k − 3 Toffolis on `k − 2` clean ancillas.
pub fn mcx_to_toffolis(controls: &[usize], target: usize, ancillas: &[usize]) -> Vec<Gate> {
    let k = controls.len();
    assert!(k >= 3 && ancillas.len() >= k - 2);
    let mut compute = vec![Gate::Toffoli { c1: controls[0], c2: controls[1], target: ancillas[0] }];
    for i in 2..k - 1 {
        compute.push(Gate::Toffoli { c1: ancillas[i - 2], c2: controls[i], target: ancillas[i - 1] });
    }
    let mut out = compute.clone();
    out.push(Gate::Toffoli { c1: ancillas[k - 3], c2: controls[k - 1], target });
    out.extend(compute.into_iter().rev());
    out
}

pub fn decompose_to_clifford_t(c: &ReversibleCircuit) -> CliffordTCircuit {
    let scratch = c
        .gates
        .iter()
        .map(|g| match g {
            Gate::Mcx { controls, .. } => controls.len() - 2,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let ancillas: Vec<usize> = (c.qubit_count..c.qubit_count + scratch).collect();
    let mut gates = Vec::new();
    let lower = |g: &Gate, gates: &mut Vec<Gate>| match g {
        Gate::Toffoli { c1, c2, target } => gates.extend(toffoli_gates(*c1, *c2, *target)),
        other => gates.push(other.clone()),
    };
    for g in &c.gates {
        match g {
            Gate::Mcx { controls, target } => {
                for t in mcx_to_toffolis(controls, *target, &ancillas) {
                    lower(&t, &mut gates);
                }
            }
            g => lower(g, &mut gates),
        }
    }
    CliffordTCircuit { qubit_count: c.qubit_count + scratch, gates }
}
