//! Privacy budget ledger under basic sequential composition.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{compose_depolarizing, depolarizing_epsilon, DepolarizingSpec};
use crate::state::trace_distance_bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Direct,
    QaePost,
    QaePhase,
    Depolarizing,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Direct => "direct",
            Source::QaePost => "qae_post",
            Source::QaePhase => "qae_phase",
            Source::Depolarizing => "depolarizing",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Source::Direct),
            "qae_post" => Ok(Source::QaePost),
            "qae_phase" => Ok(Source::QaePhase),
            "depolarizing" => Ok(Source::Depolarizing),
            _ => Err(Error::InvalidConfig(format!("unknown budget source `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
    pub delta: f64,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub epsilon: f64,
    pub delta: f64,
    /// Set when the summed δ exceeded 1 and was capped.
    pub delta_capped: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn record(&mut self, label: impl Into<String>, epsilon: f64, delta: f64, source: Source) -> Result<()> {
        if epsilon.is_nan() || epsilon < 0.0 || !(0.0..=1.0).contains(&delta) {
            return Err(Error::NegativeBudget { epsilon, delta });
        }
        self.entries.push(LedgerEntry { label: label.into(), epsilon, delta, source });
        Ok(())
    }

    /// (Σε, min(Σδ, 1)), recomputed from the entries.
    pub fn totals(&self) -> Totals {
        let epsilon = self.entries.iter().map(|e| e.epsilon).sum();
        let delta: f64 = self.entries.iter().map(|e| e.delta).sum();
        Totals { epsilon, delta: delta.min(1.0), delta_capped: delta > 1.0 }
    }

    /// `label,epsilon,delta,source` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,epsilon,delta,source\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{:e},{:e},{}", csv_field(&e.label), e.epsilon, e.delta, e.source);
        }
        out
    }

    /// Human-readable summary.
    pub fn report(&self) -> String {
        let mut out = String::from("privacy ledger\n");
        for e in &self.entries {
            let _ = writeln!(out, "  {:<28} {:<13} eps={:.6e} delta={:.6e}", e.label, e.source, e.epsilon, e.delta);
        }
        let t = self.totals();
        let _ = writeln!(out, "  total eps={:.6e} delta={:.6e}", t.epsilon, t.delta);
        if t.delta_capped {
            out.push_str("  warning: summed delta exceeded 1 and was capped; the guarantee is vacuous\n");
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Depolarizing contribution ε₂ = ln(1 + ((1 − p_tot)/p_tot) d τ) with
/// τ = √(2n−1)/n.
pub fn depolarizing_contribution(spec: &DepolarizingSpec, n: u64) -> Result<f64> {
    depolarizing_epsilon(compose_depolarizing(spec), spec.dim, trace_distance_bound(n as usize))
}

/// Totals after adding the depolarizing contribution, if any, as an (ε₂, 0)
/// entry.
pub fn total_with_depolarizing(ledger: &BudgetLedger, spec: Option<&DepolarizingSpec>, n: u64) -> Result<Totals> {
    let Some(spec) = spec else { return Ok(ledger.totals()) };
    let mut with = ledger.clone();
    with.record("depolarizing", depolarizing_contribution(spec, n)?, 0.0, Source::Depolarizing)?;
    Ok(with.totals())
}

/// Data-independent transforms applied to a released value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// Clamping to an interval.
    Clamp { lo: f64, hi: f64 },
    /// sin² of a released angle.
    SinSquared,
    /// Rescaling a normalized count by the public dataset size.
    ScaleByN(u64),
    /// Rounding to a public grid.
    Round,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Clamp { lo, hi } => x.clamp(lo, hi),
            Transform::SinSquared => x.sin().powi(2),
            Transform::ScaleByN(n) => x * n as f64,
            Transform::Round => x.round(),
        }
    }
}

/// Privacy cost of a post-processing transform: always (0, 0), since none of
/// them touch the data.
pub fn assert_post_processing_free(_t: Transform) -> (f64, f64) {
    (0.0, 0.0)
}
