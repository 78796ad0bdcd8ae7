//! Quantum one-time pad and homomorphic Clifford+T evaluation.
//!
//! A key (a, b) encrypts |ψ⟩ as X^a Z^b |ψ⟩. Clifford gates act directly on
//! the ciphertext and the key is updated classically; a T gate consumes an
//! encrypted magic state X^c Z^d T|+⟩ and, when a ⊕ c = 1, one interactive
//! S† correction.

use std::f64::consts::FRAC_PI_4;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::state::SparseState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliKey {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

impl PauliKey {
    pub fn new(a: Vec<bool>, b: Vec<bool>) -> Self {
        assert_eq!(a.len(), b.len(), "key halves must have equal length");
        PauliKey { a, b }
    }

    pub fn zero(qubits: usize) -> Self {
        PauliKey { a: vec![false; qubits], b: vec![false; qubits] }
    }

    pub fn random<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Self {
        PauliKey { a: (0..qubits).map(|_| rng.gen()).collect(), b: (0..qubits).map(|_| rng.gen()).collect() }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn pair(&self, q: usize) -> (bool, bool) {
        (self.a[q], self.b[q])
    }

    fn check(&self, s: &SparseState) -> Result<()> {
        if self.len() != s.qubits() || self.b.len() != self.a.len() {
            return Err(Error::KeyLengthMismatch { key: self.len(), qubits: s.qubits() });
        }
        Ok(())
    }
}

impl fmt::Display for PauliKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |v: &[bool]| v.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
        write!(f, "a={} b={}", bits(&self.a), bits(&self.b))
    }
}

/// X^a Z^b |ψ⟩.
pub fn encrypt(s: &SparseState, key: &PauliKey) -> Result<SparseState> {
    key.check(s)?;
    let z = (0..key.len()).filter(|&q| key.b[q]).map(Gate::Z);
    let x = (0..key.len()).filter(|&q| key.a[q]).map(Gate::X);
    let gates: Vec<Gate> = z.chain(x).collect();
    s.apply_circuit(&gates)
}

/// Z^b X^a |ψ⟩, the inverse of [`encrypt`].
pub fn decrypt(s: &SparseState, key: &PauliKey) -> Result<SparseState> {
    key.check(s)?;
    let x = (0..key.len()).filter(|&q| key.a[q]).map(Gate::X);
    let z = (0..key.len()).filter(|&q| key.b[q]).map(Gate::Z);
    let gates: Vec<Gate> = x.chain(z).collect();
    s.apply_circuit(&gates)
}

/// Key after pushing a Clifford gate through X^a Z^b, up to global phase.
pub fn key_update(gate: &Gate, key: &PauliKey) -> Result<PauliKey> {
    let mut k = key.clone();
    for q in gate.qubits() {
        if q >= k.len() {
            return Err(Error::IndexOutOfRange { index: q, qubits: k.len() });
        }
    }
    match *gate {
        Gate::X(_) | Gate::Z(_) => {}
        Gate::S(q) | Gate::Sdg(q) => k.b[q] ^= k.a[q],
        Gate::H(q) => {
            let (a, b) = k.pair(q);
            k.a[q] = b;
            k.b[q] = a;
        }
        Gate::Cnot { control, target } => {
            k.b[control] ^= k.b[target];
            k.a[target] ^= k.a[control];
        }
        ref g => return Err(Error::UnsupportedGate(g.to_string())),
    }
    Ok(k)
}

/// Randomness and outcome of one T gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gadget {
    pub c: bool,
    pub d: bool,
    /// Measurement outcome of the magic qubit.
    pub e: bool,
    /// Whether the client asked the server to apply S†.
    pub correction: bool,
}

/// (qubit, key before, key after).
pub type KeyChange = (usize, (bool, bool), (bool, bool));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub gate: Gate,
    pub qubits: Vec<usize>,
    /// (qubit, key before, key after) for every touched qubit.
    pub key_delta: Vec<KeyChange>,
    pub interaction: bool,
    pub gadget: Option<Gadget>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HomomorphicTranscript {
    pub gate_log: Vec<TranscriptEntry>,
    pub magic_uses: usize,
}

impl HomomorphicTranscript {
    pub fn interactions(&self) -> usize {
        self.gate_log.iter().filter(|e| e.interaction).count()
    }

    pub fn corrections(&self) -> usize {
        self.gate_log.iter().filter_map(|e| e.gadget).filter(|g| g.correction).count()
    }

    /// One line per gate: gate, key delta, interaction flag and gadget data.
    pub fn dump(&self) -> String {
        let bit = |x: bool| if x { '1' } else { '0' };
        let mut out = String::new();
        for e in &self.gate_log {
            let _ = write!(out, "{}", e.gate);
            for (q, (a0, b0), (a1, b1)) in &e.key_delta {
                let _ = write!(out, " | q{q} {}{}->{}{}", bit(*a0), bit(*b0), bit(*a1), bit(*b1));
            }
            let _ = write!(out, " | interaction={}", bit(e.interaction));
            if let Some(g) = e.gadget {
                let _ = write!(out, " c={} d={} e={} correction={}", bit(g.c), bit(g.d), bit(g.e), bit(g.correction));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "magic_uses={}", self.magic_uses);
        out
    }
}

struct Server<'r, R: Rng + ?Sized> {
    cipher: SparseState,
    key: PauliKey,
    rng: &'r mut R,
}

impl<R: Rng + ?Sized> Server<'_, R> {
    fn clifford(&mut self, g: &Gate) -> Result<()> {
        self.key = key_update(g, &self.key)?;
        self.cipher = self.cipher.apply(g)?;
        Ok(())
    }

    fn t_gadget(&mut self, q: usize) -> Result<Gadget> {
        let top = self.cipher.qubits();
        let c: bool = self.rng.gen();
        let d: bool = self.rng.gen();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut one = Complex64::from_polar(h, FRAC_PI_4);
        if d {
            one = -one;
        }
        let zero = Complex64::new(h, 0.0);
        let (amp0, amp1) = if c { (one, zero) } else { (zero, one) };
        let joined = self.cipher.extend_with(amp0, amp1)?.apply(&Gate::Cnot { control: q, target: top })?;
        let (e, rest) = joined.measure_top(self.rng);
        self.cipher = rest;

        let a = self.key.a[q];
        self.key.b[q] ^= d;
        if e {
            self.clifford(&Gate::S(q))?;
        }
        let correction = a ^ c;
        if correction {
            self.clifford(&Gate::Sdg(q))?;
            if !e {
                self.key.b[q] ^= true;
            }
        }
        Ok(Gadget { c, d, e, correction })
    }
}

/// Evaluates a Clifford+T circuit on a ciphertext.
///
/// Returns the new ciphertext, the key that decrypts it, and the transcript.
/// T† is evaluated as the gadget followed by S and Z.
pub fn homomorphic_exec<R: Rng + ?Sized>(
    cipher: &SparseState,
    key: &PauliKey,
    gates: &[Gate],
    rng: &mut R,
) -> Result<(SparseState, PauliKey, HomomorphicTranscript)> {
    key.check(cipher)?;
    let mut server = Server { cipher: cipher.clone(), key: key.clone(), rng };
    let mut transcript = HomomorphicTranscript::default();
    for g in gates {
        let qubits = g.qubits();
        let before: Vec<(bool, bool)> = qubits.iter().map(|&q| server.key.pair(q)).collect();
        let gadget = match *g {
            Gate::X(_) | Gate::Z(_) | Gate::H(_) | Gate::S(_) | Gate::Sdg(_) | Gate::Cnot { .. } => {
                server.clifford(g)?;
                None
            }
            Gate::T(q) | Gate::Tdg(q) => {
                if q >= server.key.len() {
                    return Err(Error::IndexOutOfRange { index: q, qubits: server.key.len() });
                }
                let gadget = server.t_gadget(q)?;
                if matches!(g, Gate::Tdg(_)) {
                    server.clifford(&Gate::S(q))?;
                    server.clifford(&Gate::Z(q))?;
                }
                transcript.magic_uses += 1;
                Some(gadget)
            }
            ref other => return Err(Error::UnsupportedGate(other.to_string())),
        };
        let key_delta =
            qubits.iter().zip(before).map(|(&q, b)| (q, b, server.key.pair(q))).collect();
        transcript.gate_log.push(TranscriptEntry {
            gate: g.clone(),
            qubits,
            key_delta,
            interaction: gadget.is_some(),
            gadget,
        });
    }
    Ok((server.cipher, server.key, transcript))
}
