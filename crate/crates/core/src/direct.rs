//! Repeated direct measurement of the query ancilla.
//!
//! Measuring the ancilla of `U_q|φ_D⟩|0⟩` returns 1 with probability α, which
//! is the same as drawing a row uniformly from D and returning q(x). Each of
//! the `t` measurements consumes a fresh encoded copy, so rows are drawn with
//! replacement.
//!
//! Privacy accounting: let I be the number of times the differing row is drawn,
//! I ~ Binomial(t, 1/n). Conditioning on I ≤ k and adding Lap(k/(tε)) gives
//! (ε'_k, δ_k)-DP with
//!
//! ```text
//! ε'_k = ln Σ_{j=0}^{k} e^{jε/k} B(t, j),   δ_k = 1 − Σ_{j=0}^{k} B(t, j)
//! ```
//!
//! and ε'_0 = 0.

use std::fmt;

use rand::Rng;

use crate::dataset::Dataset;
use crate::exec::substream;
use crate::noise::sample_laplace;
use crate::query::PredicateQuery;
use crate::state::trace_distance_bound;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectConfig {
    /// Number of measurements (encoded copies).
    pub t: u64,
    /// Noise tier; 0 disables Laplace noise.
    pub k: u64,
    pub epsilon: f64,
    pub seed: u64,
}

impl DirectConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.t == 0 || !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(crate::Error::InvalidConfig(format!(
                "direct mechanism needs t >= 1 and epsilon > 0 (t = {}, epsilon = {})",
                self.t, self.epsilon
            )));
        }
        Ok(())
    }

    /// Laplace scale k/(tε); zero when k = 0.
    pub fn noise_scale(&self) -> f64 {
        self.k as f64 / (self.t as f64 * self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectReport {
    pub answer: f64,
    pub raw_mean: f64,
    pub eps_prime: f64,
    pub delta: f64,
    pub noise_scale: f64,
    pub t: u64,
    pub k: u64,
    pub seed: u64,
}

impl DirectReport {
    /// Flat `key=value` record.
    pub fn to_record(&self) -> Vec<(&'static str, String)> {
        vec![
            ("answer", format!("{:.17e}", self.answer)),
            ("raw_mean", format!("{:.17e}", self.raw_mean)),
            ("eps_prime", format!("{:.17e}", self.eps_prime)),
            ("delta", format!("{:.17e}", self.delta)),
            ("t", self.t.to_string()),
            ("k", self.k.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

impl fmt::Display for DirectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_record() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Per-row predicate values of a dataset, ready for repeated sampling.
#[derive(Debug, Clone)]
pub struct DirectMechanism {
    hits: Vec<bool>,
}

impl DirectMechanism {
    pub fn new(d: &Dataset, q: &PredicateQuery) -> Self {
        DirectMechanism { hits: d.rows().iter().map(|r| q.eval_row(d.schema(), *r)).collect() }
    }

    /// From explicit per-row query answers.
    pub fn from_hits(hits: Vec<bool>) -> Self {
        assert!(!hits.is_empty(), "dataset must have at least one row");
        DirectMechanism { hits }
    }

    pub fn n(&self) -> usize {
        self.hits.len()
    }

    /// Mean of `t` uniform row draws (with replacement).
    pub fn sample_mean<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> f64 {
        let n = self.hits.len();
        let count = (0..t).filter(|_| self.hits[rng.gen_range(0..n)]).count();
        count as f64 / t as f64
    }

    pub fn run(&self, cfg: &DirectConfig) -> crate::Result<DirectReport> {
        cfg.validate()?;
        let mut measure = substream(cfg.seed, "direct/measure", 0);
        let raw_mean = self.sample_mean(cfg.t, &mut measure);
        let noise_scale = cfg.noise_scale();
        let answer = if cfg.k == 0 {
            raw_mean
        } else {
            let mut noise = substream(cfg.seed, "direct/noise", 0);
            raw_mean + sample_laplace(&mut noise, noise_scale)
        };
        let (eps_prime, delta) = account_direct(self.n() as u64, cfg.t, cfg.k, cfg.epsilon);
        Ok(DirectReport { answer, raw_mean, eps_prime, delta, noise_scale, t: cfg.t, k: cfg.k, seed: cfg.seed })
    }
}

pub fn run_direct(d: &Dataset, q: &PredicateQuery, cfg: &DirectConfig) -> crate::Result<DirectReport> {
    DirectMechanism::new(d, q).run(cfg)
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// ln B(t, j) for B(t, j) = C(t, j) p^j (1 − p)^{t−j}, evaluated for j = 0..
struct LogBinomial {
    t: u64,
    ln_p: f64,
    ln_q: f64,
    ln_choose: f64,
    j: u64,
}

impl LogBinomial {
    fn new(t: u64, p: f64) -> Self {
        LogBinomial { t, ln_p: p.ln(), ln_q: (-p).ln_1p(), ln_choose: 0.0, j: 0 }
    }

    fn ln_pmf(&self) -> f64 {
        let j = self.j as f64;
        let rest = (self.t - self.j) as f64;
        let mut v = self.ln_choose;
        if self.j > 0 {
            v += j * self.ln_p;
        }
        if self.t > self.j {
            v += rest * self.ln_q;
        }
        v
    }

    fn advance(&mut self) {
        self.j += 1;
        self.ln_choose += ((self.t - self.j + 1) as f64).ln() - (self.j as f64).ln();
    }
}

/// B(t, j) for j = 0..=t with success probability 1/n.
pub fn binomial_pmf(n: u64, t: u64, j: u64) -> f64 {
    if j > t {
        return 0.0;
    }
    let mut lb = LogBinomial::new(t, 1.0 / n as f64);
    while lb.j < j {
        lb.advance();
    }
    lb.ln_pmf().exp()
}

/// (ε'_k, δ_k) of the direct mechanism.
///
/// δ_k is the upper binomial tail Σ_{j>k} B(t, j), summed term by term so it
/// keeps full relative precision down to subnormal values; ε'_k is evaluated as
/// ln(1 + Σ_{j=1}^{k} (e^{jε/k} − 1) B(t, j) − δ_k). A negative ε'_k is
/// reported as 0, which is implied by the stronger statement.
pub fn account_direct(n: u64, t: u64, k: u64, epsilon: f64) -> (f64, f64) {
    assert!(n >= 1 && t >= 1, "account_direct needs n >= 1 and t >= 1");
    let p = 1.0 / n as f64;
    if k == 0 {
        return (0.0, -(t as f64 * (-p).ln_1p()).exp_m1());
    }
    let mut lb = LogBinomial::new(t, p);
    let mut excess = KahanSum::default();
    while lb.j <= k.min(t) {
        if lb.j >= 1 {
            let w = (lb.j as f64 * epsilon / k as f64).exp_m1();
            excess.add(w * lb.ln_pmf().exp());
        }
        if lb.j == t {
            break;
        }
        lb.advance();
    }
    let delta = if k >= t { 0.0 } else { upper_tail(t, p, k) };
    let eps_prime = (excess.value() - delta).ln_1p().max(0.0);
    (eps_prime, delta)
}

/// Σ_{j=k+1}^{t} B(t, j).
fn upper_tail(t: u64, p: f64, k: u64) -> f64 {
    let mode = ((t as f64 + 1.0) * p).floor() as u64;
    let mut lb = LogBinomial::new(t, p);
    while lb.j < k + 1 {
        lb.advance();
    }
    let mut sum = KahanSum::default();
    loop {
        let term = lb.ln_pmf().exp();
        sum.add(term);
        if lb.j == t || (lb.j > mode && term <= sum.value() * 1e-18) {
            break;
        }
        lb.advance();
    }
    sum.value().min(1.0)
}

/// Laplace scale of the generic POVM mechanism, (τ + √(2n−1)/n)/ε, or of the
/// counting-query refinement, (τ + 1/n)/ε.
pub fn baseline_povm_scale(n: u64, tau: f64, epsilon: f64, refined: bool) -> f64 {
    let shift = if refined { 1.0 / n as f64 } else { trace_distance_bound(n as usize) };
    (tau + shift) / epsilon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_accounting_values() {
        let (e0, d0) = account_direct(1_000_000, 1000, 0, 1.0);
        assert_eq!(e0, 0.0);
        assert!((d0 - 0.000_999_5).abs() < 1e-7, "{d0}");
        let (e1, d1) = account_direct(1_000_000, 1000, 1, 1.0);
        assert!((e1 - 0.001_714_6).abs() < 2e-6, "{e1}");
        assert!((d1 - 5.0e-7).abs() < 5e-9, "{d1}");
        let (e2, d2) = account_direct(1_000_000, 1000, 2, 1.0);
        assert!((e2 - 0.000_648_7).abs() < 2e-6, "{e2}");
        assert!(((d2 - 1.6604e-10) / 1.6604e-10).abs() < 0.01, "{d2}");
    }

    #[test]
    fn closed_forms_for_k_le_1() {
        // δ_0 = 1 − (1 − 1/n)^t and the two-term closed forms for k = 1
        for &(n, t) in &[(10u64, 5u64), (1000, 100), (1_000_000, 1000), (3, 2)] {
            let nf = n as f64;
            let tf = t as f64;
            let (_, d0) = account_direct(n, t, 0, 1.0);
            assert!((d0 - (1.0 - (1.0 - 1.0 / nf).powf(tf))).abs() < 1e-13);
            let (e1, d1) = account_direct(n, t, 1, 1.0);
            let d1_closed = 1.0 - ((nf - 1.0) / nf).powf(tf - 1.0) * ((nf + tf - 1.0) / nf);
            assert!((d1 - d1_closed).abs() < 1e-12, "n={n} t={t}: {d1} vs {d1_closed}");
            let e1_closed =
                ((tf - 1.0) * ((nf - 1.0) / nf).ln() + (1.0 - 1.0 / nf + tf * 1f64.exp() / nf).ln()).max(0.0);
            assert!((e1 - e1_closed).abs() < 1e-12, "n={n} t={t}: {e1} vs {e1_closed}");
        }
    }

    #[test]
    fn delta_monotone_and_exhausted() {
        let (n, t) = (50u64, 20u64);
        let deltas: Vec<f64> = (0..=t + 2).map(|k| account_direct(n, t, k, 1.0).1).collect();
        for k in 0..t as usize {
            assert!(deltas[k + 1] < deltas[k] || deltas[k] == 0.0, "k = {k}");
        }
        assert_eq!(deltas[t as usize], 0.0);
        assert_eq!(deltas[t as usize + 1], 0.0);
    }

    #[test]
    fn single_row_dataset() {
        // every sample hits the differing row
        let (e, d) = account_direct(1, 4, 2, 1.0);
        assert_eq!(e, 0.0);
        assert!((d - 1.0).abs() < 1e-15);
        let (e, d) = account_direct(1, 4, 4, 1.0);
        assert!((e - 1.0).abs() < 1e-12);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (0..=30).map(|j| binomial_pmf(7, 30, j)).sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!((binomial_pmf(3, 2, 1) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_answers() {
        let all = DirectMechanism::from_hits(vec![true; 5]);
        let none = DirectMechanism::from_hits(vec![false; 5]);
        for t in [1, 7, 100] {
            let cfg = DirectConfig { t, k: 0, epsilon: 1.0, seed: t };
            let r = all.run(&cfg).unwrap();
            assert_eq!((r.answer, r.noise_scale, r.eps_prime), (1.0, 0.0, 0.0));
            assert_eq!(none.run(&cfg).unwrap().answer, 0.0);
        }
    }

    #[test]
    fn seeded_half_dataset() {
        let m = DirectMechanism::from_hits(vec![true, false, true, false]);
        let r = m.run(&DirectConfig { t: 10_000, k: 1, epsilon: 1.0, seed: 2024 }).unwrap();
        assert!((r.raw_mean - 0.5).abs() < 0.02);
        assert!((r.noise_scale - 1e-4).abs() < 1e-18);
        assert_ne!(r.answer, r.raw_mean);
        let again = m.run(&DirectConfig { t: 10_000, k: 1, epsilon: 1.0, seed: 2024 }).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn invalid_configs() {
        let m = DirectMechanism::from_hits(vec![true]);
        assert!(m.run(&DirectConfig { t: 0, k: 0, epsilon: 1.0, seed: 0 }).is_err());
        assert!(m.run(&DirectConfig { t: 1, k: 0, epsilon: 0.0, seed: 0 }).is_err());
    }

    #[test]
    fn baseline_scales() {
        assert!((baseline_povm_scale(2, 0.0, 1.0, false) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let refined = baseline_povm_scale(1_000_000, 0.0, 1.0, true);
        let generic = baseline_povm_scale(1_000_000, 0.0, 1.0, false);
        assert!((refined - 1e-6).abs() < 1e-20);
        assert!((generic - 1.414_213_2e-3).abs() < 1e-9);
        assert!(refined < generic);
        assert!((baseline_povm_scale(1_000_000, 0.1, 1.0, true) - 0.100_001).abs() < 1e-15);
        for n in 2..200 {
            assert!(baseline_povm_scale(n, 0.0, 1.0, true) < baseline_povm_scale(n, 0.0, 1.0, false));
        }
    }
}
