//! Sparse statevectors, basis encoding, and the good/bad decomposition.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;

use crate::dataset::{bitstring, Dataset};
use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::query::PredicateQuery;

/// Largest register a [`SparseState`] can index.
pub const MAX_QUBITS: usize = 128;

const PRUNE: f64 = 1e-30;

/// Map from basis index to amplitude. Only nonzero amplitudes are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    qubits: usize,
    amps: BTreeMap<u128, Complex64>,
}

impl SparseState {
    pub fn basis(qubits: usize, index: u128) -> Result<Self> {
        check_register(qubits)?;
        check_index(qubits, index)?;
        Ok(SparseState { qubits, amps: BTreeMap::from([(index, Complex64::new(1.0, 0.0))]) })
    }

    /// Builds a state from explicit amplitudes; they must be normalised to 1e-12.
    pub fn from_amplitudes(
        qubits: usize,
        amps: impl IntoIterator<Item = (u128, Complex64)>,
    ) -> Result<Self> {
        check_register(qubits)?;
        let mut map = BTreeMap::new();
        for (i, a) in amps {
            check_index(qubits, i)?;
            *map.entry(i).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        map.retain(|_, a| a.norm_sqr() > PRUNE);
        let s = SparseState { qubits, amps: map };
        if (s.norm_sqr() - 1.0).abs() > 1e-12 {
            return Err(Error::DimensionMismatch(format!("state norm² is {}", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitude(&self, index: u128) -> Complex64 {
        self.amps.get(&index).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u128, Complex64)> + '_ {
        self.amps.iter().map(|(i, a)| (*i, *a))
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &SparseState) -> Complex64 {
        self.amps
            .iter()
            .filter_map(|(i, a)| other.amps.get(i).map(|b| a.conj() * b))
            .sum()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &SparseState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Probability that measuring `qubit` yields 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        self.amps
            .iter()
            .filter(|(i, _)| (*i >> qubit) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Tensors fresh qubits, initialised to `bits`, above the current register.
    pub fn extend(&self, bits: &[bool]) -> Result<SparseState> {
        let qubits = self.qubits + bits.len();
        check_register(qubits)?;
        let high = bits
            .iter()
            .enumerate()
            .fold(0u128, |acc, (k, b)| acc | ((*b as u128) << (self.qubits + k)));
        Ok(SparseState { qubits, amps: self.amps.iter().map(|(i, a)| (i | high, *a)).collect() })
    }

    /// Tensors a single-qubit state `(amp0, amp1)` as the new highest qubit.
    pub fn extend_with(&self, amp0: Complex64, amp1: Complex64) -> Result<SparseState> {
        let q = self.qubits;
        check_register(q + 1)?;
        let mut amps = BTreeMap::new();
        for (i, a) in &self.amps {
            for (bit, c) in [(0u128, amp0), (1u128, amp1)] {
                let v = a * c;
                if v.norm_sqr() > PRUNE {
                    amps.insert(i | (bit << q), v);
                }
            }
        }
        Ok(SparseState { qubits: q + 1, amps })
    }

    /// Measures the highest qubit, samples the outcome by the Born rule, and
    /// returns it together with the renormalised state on the remaining qubits.
    pub fn measure_top<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, SparseState) {
        let q = self.qubits - 1;
        let p1 = self.prob_one(q);
        let outcome = rng.gen::<f64>() < p1;
        let p = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / p.sqrt();
        let mask = !(1u128 << q);
        let amps = self
            .amps
            .iter()
            .filter(|(i, _)| ((*i >> q) & 1 == 1) == outcome)
            .map(|(i, a)| (i & mask, a * scale))
            .collect();
        (outcome, SparseState { qubits: q, amps })
    }

    pub fn apply(&self, gate: &Gate) -> Result<SparseState> {
        for q in gate.qubits() {
            check_qubit(self.qubits, q)?;
        }
        if !gate.is_well_formed() {
            return Err(Error::InvalidConfig(format!("gate `{gate}` reuses a qubit")));
        }
        let mut out = BTreeMap::new();
        match gate {
            g if g.is_permutation() => {
                for (i, a) in &self.amps {
                    out.insert(g.permute(*i), *a);
                }
            }
            Gate::H(q) => {
                let bit = 1u128 << q;
                for (i, a) in &self.amps {
                    let a = a * FRAC_1_SQRT_2;
                    let sign = if i & bit != 0 { -1.0 } else { 1.0 };
                    *out.entry(i & !bit).or_insert(Complex64::new(0.0, 0.0)) += a;
                    *out.entry(i | bit).or_insert(Complex64::new(0.0, 0.0)) += a * sign;
                }
                out.retain(|_, a: &mut Complex64| a.norm_sqr() > PRUNE);
            }
            Gate::Z(q) | Gate::S(q) | Gate::Sdg(q) | Gate::T(q) | Gate::Tdg(q) => {
                let phase = phase_of(gate);
                for (i, a) in &self.amps {
                    let v = if (i >> q) & 1 == 1 { a * phase } else { *a };
                    out.insert(*i, v);
                }
            }
            _ => unreachable!("all gate kinds handled"),
        }
        Ok(SparseState { qubits: self.qubits, amps: out })
    }

    /// Applies `gates` in order.
    pub fn apply_circuit<'a>(&self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<SparseState> {
        let mut s = self.clone();
        for g in gates {
            s = s.apply(g)?;
        }
        Ok(s)
    }

    /// Text dump, one `bitstring re im` line per nonzero amplitude.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in &self.amps {
            let _ = writeln!(out, "{} {:.17e} {:.17e}", bitstring(*i, self.qubits), a.re, a.im);
        }
        out
    }

    /// Dense amplitude vector. Only sensible for small registers.
    pub fn to_dense(&self) -> Vec<Complex64> {
        assert!(self.qubits <= 20, "dense export limited to 20 qubits");
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << self.qubits];
        for (i, a) in &self.amps {
            v[*i as usize] = *a;
        }
        v
    }
}

/// Dense unitary of a gate list, column by column. Small registers only.
pub fn unitary<'a>(qubits: usize, gates: impl IntoIterator<Item = &'a Gate> + Clone) -> Result<DMatrix<Complex64>> {
    assert!(qubits <= 10, "dense unitaries limited to 10 qubits");
    let dim = 1usize << qubits;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let out = SparseState::basis(qubits, col as u128)?.apply_circuit(gates.clone())?;
        for (row, a) in out.iter() {
            u[(row as usize, col)] = a;
        }
    }
    Ok(u)
}

/// Diagonal phase applied to |1⟩ by a single-qubit phase gate.
pub fn phase_of(gate: &Gate) -> Complex64 {
    use std::f64::consts::FRAC_PI_4;
    match gate {
        Gate::Z(_) => Complex64::new(-1.0, 0.0),
        Gate::S(_) => Complex64::new(0.0, 1.0),
        Gate::Sdg(_) => Complex64::new(0.0, -1.0),
        Gate::T(_) => Complex64::from_polar(1.0, FRAC_PI_4),
        Gate::Tdg(_) => Complex64::from_polar(1.0, -FRAC_PI_4),
        other => panic!("{} is not a phase gate", other.name()),
    }
}

fn check_register(qubits: usize) -> Result<()> {
    if qubits > MAX_QUBITS {
        return Err(Error::IndexOutOfRange { index: qubits, qubits: MAX_QUBITS });
    }
    Ok(())
}

fn check_qubit(qubits: usize, q: usize) -> Result<()> {
    if q >= qubits {
        return Err(Error::IndexOutOfRange { index: q, qubits });
    }
    Ok(())
}

fn check_index(qubits: usize, index: u128) -> Result<()> {
    if qubits < 128 && index >> qubits != 0 {
        return Err(Error::IndexOutOfRange { index: (128 - index.leading_zeros()) as usize - 1, qubits });
    }
    Ok(())
}

/// |φ_D⟩ = n^{-1/2} Σ_i |x_i⟩.
pub fn basis_encode(d: &Dataset) -> Result<SparseState> {
    let amp = Complex64::new(1.0 / (d.n() as f64).sqrt(), 0.0);
    let mut amps = BTreeMap::new();
    for row in d.rows() {
        if amps.insert(*row, amp).is_some() {
            return Err(Error::DuplicateRows);
        }
    }
    Ok(SparseState { qubits: d.width(), amps })
}

/// Split of |φ_D⟩ into the span of satisfying rows and its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodBadSplit {
    /// Fraction of rows with q(x) = 1.
    pub alpha: Ratio<u64>,
    /// θ in [0, π/2] with α = sin²θ.
    pub theta: f64,
}

impl GoodBadSplit {
    pub fn from_alpha(alpha: Ratio<u64>) -> Self {
        GoodBadSplit { alpha, theta: theta_of(ratio_f64(alpha)) }
    }

    pub fn alpha_f64(&self) -> f64 {
        ratio_f64(self.alpha)
    }
}

pub fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// arcsin(√α), clamped into the principal range.
pub fn theta_of(alpha: f64) -> f64 {
    alpha.clamp(0.0, 1.0).sqrt().asin()
}

pub fn decompose(d: &Dataset, q: &PredicateQuery) -> GoodBadSplit {
    GoodBadSplit::from_alpha(q.eval_dataset(d))
}

/// κ(D, D') = |⟨φ_D|φ_D'⟩|² = (|rows ∩ rows'| / n)².
pub fn kernel(d1: &Dataset, d2: &Dataset) -> Result<f64> {
    if d1.n() != d2.n() || d1.width() != d2.width() {
        return Err(Error::DimensionMismatch(format!(
            "datasets have (n, m) = ({}, {}) and ({}, {})",
            d1.n(),
            d1.width(),
            d2.n(),
            d2.width()
        )));
    }
    let a: std::collections::HashSet<u128> = d1.rows().iter().copied().collect();
    let overlap = d2.rows().iter().filter(|r| a.contains(r)).count();
    let ratio = overlap as f64 / d1.n() as f64;
    Ok(ratio * ratio)
}

/// Minimum kernel over neighbouring basis encodings, (1 − 1/n)².
pub fn min_adjacent_kernel(n: usize) -> f64 {
    let r = 1.0 - 1.0 / n as f64;
    r * r
}

/// √(1 − κ̂) = √(2n − 1)/n.
pub fn trace_distance_bound(n: usize) -> f64 {
    let n = n as f64;
    (2.0 * n - 1.0).sqrt() / n
}
