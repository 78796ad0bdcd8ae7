//! Canonical amplitude estimation, simulated on the two-dimensional invariant
//! subspace of the Grover operator.
//!
//! With α = sin²θ, the operator Q has eigenphases ±θ/π on the invariant
//! subspace and the start state splits evenly between the two eigenvectors.
//! Phase estimation on an M-point grid followed by the inverse QFT then yields
//! `y` with
//!
//! ```text
//! Pr[y] = ½ F_M(θ/π − y/M) + ½ F_M(1 − θ/π − y/M),
//! F_M(δ) = sin²(πMδ) / (M² sin²(πδ)),
//! ```
//!
//! the two branches adding incoherently because the eigenvectors are orthogonal.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::substream;
use crate::noise::sample_laplace;
use crate::query::PredicateQuery;
use crate::state::decompose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DpMode {
    None,
    PostLaplace,
    PhaseNoise,
}

impl DpMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DpMode::None => "none",
            DpMode::PostLaplace => "post_laplace",
            DpMode::PhaseNoise => "phase_noise",
        }
    }
}

impl fmt::Display for DpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DpMode::None),
            "post_laplace" | "post-laplace" => Ok(DpMode::PostLaplace),
            "phase_noise" | "phase-noise" => Ok(DpMode::PhaseNoise),
            _ => Err(Error::InvalidConfig(format!(
                "unknown dp mode `{s}` (expected none, post_laplace or phase_noise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QaeConfig {
    /// Grid size, i.e. the number of phase-estimation points.
    pub m: u64,
    /// Repetitions for median amplification.
    pub t: u64,
    pub dp_mode: DpMode,
    pub epsilon: f64,
    pub seed: u64,
}

impl QaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.t < 1 {
            return Err(Error::InvalidConfig(format!("QAE needs M >= 2 and t >= 1 (M = {}, t = {})", self.m, self.t)));
        }
        if self.dp_mode != DpMode::None && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QaeOutcome {
    pub y: u64,
    pub alpha_hat: f64,
    /// Angle the estimate is derived from: πy/M, plus Laplace noise in
    /// `post_laplace` mode.
    pub theta_reported: f64,
    /// Phase noise applied to the eigenphases, in `phase_noise` mode.
    pub eta_drawn: Option<f64>,
}

/// Fejér kernel F_M(δ), periodic in δ with period 1.
pub fn fejer(delta: f64, m: u64) -> f64 {
    let d = delta - delta.round();
    let mf = m as f64;
    if (d * mf).abs() < 1e-7 {
        // Taylor expansion around the peak
        return 1.0 - (mf * mf - 1.0) * (PI * d).powi(2) / 3.0;
    }
    let num = (PI * mf * d).sin();
    let den = mf * (PI * d).sin();
    (num / den).powi(2)
}

/// Distribution of the measured grid index `y` for the angle θ.
///
/// θ may be any real; eigenphases are taken modulo 1 on the grid.
pub fn outcome_distribution(theta: f64, m: u64) -> Vec<f64> {
    assert!(m >= 2, "M must be at least 2");
    let w = theta / PI;
    let mf = m as f64;
    (0..m)
        .map(|y| {
            let g = y as f64 / mf;
            0.5 * fejer(w - g, m) + 0.5 * fejer(1.0 - w - g, m)
        })
        .collect()
}

/// Draws an index from a discrete distribution by inverting its CDF.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// |α − α̃| ≤ 2π√(α(1−α))/M + π²/M², holding with probability at least 8/π².
pub fn error_bound(alpha: f64, m: u64) -> f64 {
    let mf = m as f64;
    2.0 * PI * (alpha * (1.0 - alpha)).max(0.0).sqrt() / mf + PI * PI / (mf * mf)
}

/// Largest change of θ_α = arcsin(√α) between neighbouring datasets of size n.
pub fn angle_sensitivity(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::NTooSmall(n));
    }
    Ok((1.0 / (n as f64).sqrt()).asin())
}

/// Largest grid size admissible for `post_laplace`, i.e. the largest integer
/// M with M < π/arcsin(1/√n).
pub fn post_laplace_max_m(n: u64) -> Result<u64> {
    let limit = PI / angle_sensitivity(n)?;
    let floor = limit.floor();
    Ok(if floor == limit { floor as u64 - 1 } else { floor as u64 })
}

/// Failure probability bound exp(−2t(8/π² − ½)²) of the median of t runs.
pub fn median_failure_bound(t: u64) -> f64 {
    let gap = 8.0 / (PI * PI) - 0.5;
    (-2.0 * t as f64 * gap * gap).exp()
}

/// Privacy spent by one configured invocation: ε per run, composed over the
/// `t` repetitions. `None` for the non-private mode.
pub fn privacy_spend(cfg: &QaeConfig) -> Option<(f64, f64)> {
    match cfg.dp_mode {
        DpMode::None => None,
        DpMode::PostLaplace | DpMode::PhaseNoise => Some((cfg.epsilon * cfg.t as f64, 0.0)),
    }
}

/// QAE on a fixed good/bad split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QaeMechanism {
    theta: f64,
    n: u64,
}

impl QaeMechanism {
    pub fn new(d: &Dataset, q: &PredicateQuery) -> Self {
        QaeMechanism { theta: decompose(d, q).theta, n: d.n() as u64 }
    }

    pub fn from_theta(theta: f64, n: u64) -> Self {
        QaeMechanism { theta, n }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    fn check(&self, cfg: &QaeConfig) -> Result<()> {
        cfg.validate()?;
        if cfg.dp_mode == DpMode::PostLaplace {
            let limit = post_laplace_max_m(self.n)?;
            if cfg.m > limit {
                return Err(Error::MTooLargeForPostLaplace { m: cfg.m, n: self.n, limit });
            }
        }
        if cfg.dp_mode == DpMode::PhaseNoise {
            angle_sensitivity(self.n)?;
        }
        Ok(())
    }

    /// The `rep`-th independent run; repetition `rep` draws from its own
    /// substreams of `cfg.seed`.
    pub fn run_rep(&self, cfg: &QaeConfig, rep: u64) -> Result<QaeOutcome> {
        self.check(cfg)?;
        Ok(self.sample(cfg, rep))
    }

    fn sample(&self, cfg: &QaeConfig, rep: u64) -> QaeOutcome {
        let mut measure = substream(cfg.seed, "qae/measure", rep);
        let mut noise = substream(cfg.seed, "qae/noise", rep);
        let grid = PI / cfg.m as f64;
        match cfg.dp_mode {
            DpMode::None => {
                let y = sample_index(&outcome_distribution(self.theta, cfg.m), &mut measure) as u64;
                let theta_reported = grid * y as f64;
                QaeOutcome { y, alpha_hat: theta_reported.sin().powi(2), theta_reported, eta_drawn: None }
            }
            DpMode::PhaseNoise => {
                let scale = (1.0 / (self.n as f64).sqrt()).asin() / cfg.epsilon;
                let eta = sample_laplace(&mut noise, scale);
                let y = sample_index(&outcome_distribution(self.theta + eta, cfg.m), &mut measure) as u64;
                let theta_reported = grid * y as f64;
                QaeOutcome { y, alpha_hat: theta_reported.sin().powi(2), theta_reported, eta_drawn: Some(eta) }
            }
            DpMode::PostLaplace => {
                let y = sample_index(&outcome_distribution(self.theta, cfg.m), &mut measure) as u64;
                let theta_reported = grid * y as f64 + sample_laplace(&mut noise, grid / cfg.epsilon);
                QaeOutcome { y, alpha_hat: theta_reported.sin().powi(2), theta_reported, eta_drawn: None }
            }
        }
    }

    pub fn run(&self, cfg: &QaeConfig) -> Result<QaeOutcome> {
        self.run_rep(cfg, 0)
    }

    /// Lower median of `cfg.t` independent runs, ordered by `alpha_hat`.
    pub fn median(&self, cfg: &QaeConfig) -> Result<QaeOutcome> {
        self.check(cfg)?;
        let mut runs: Vec<QaeOutcome> = (0..cfg.t).map(|rep| self.sample(cfg, rep)).collect();
        runs.sort_by(|a, b| a.alpha_hat.total_cmp(&b.alpha_hat));
        Ok(runs[(runs.len() - 1) / 2])
    }
}

pub fn run_qae(d: &Dataset, q: &PredicateQuery, cfg: &QaeConfig) -> Result<QaeOutcome> {
    QaeMechanism::new(d, q).run(cfg)
}

pub fn median_amplify(d: &Dataset, q: &PredicateQuery, cfg: &QaeConfig) -> Result<QaeOutcome> {
    QaeMechanism::new(d, q).median(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Schema};
    use crate::query::parse_query;
    use crate::state::theta_of;
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;

    fn dft_oracle(theta: f64, m: u64) -> Vec<f64> {
        let mf = m as f64;
        let w = [theta / PI, 1.0 - theta / PI];
        (0..m)
            .map(|y| {
                w.iter()
                    .map(|om| {
                        let v: Complex64 = (0..m)
                            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 * (om - y as f64 / mf)))
                            .sum::<Complex64>()
                            / mf;
                        0.5 * v.norm_sqr()
                    })
                    .sum()
            })
            .collect()
    }

    fn cfg(m: u64, dp_mode: DpMode) -> QaeConfig {
        QaeConfig { m, t: 1, dp_mode, epsilon: 1.0, seed: 11 }
    }

    #[test]
    fn trivial_angles() {
        let p = outcome_distribution(0.0, 16);
        assert!((p[0] - 1.0).abs() < 1e-12);
        let p = outcome_distribution(PI / 2.0, 16);
        assert!((p[8] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dft_at_pi_over_five() {
        let p = outcome_distribution(PI / 5.0, 8);
        let o = dft_oracle(PI / 5.0, 8);
        for (a, b) in p.iter().zip(&o) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_noise_wraps() {
        // shifting by π leaves every eigenphase unchanged modulo 1
        let a = outcome_distribution(0.3, 32);
        let b = outcome_distribution(0.3 + PI, 32);
        let c = outcome_distribution(-0.3, 32);
        for i in 0..32 {
            assert!((a[i] - b[i]).abs() < 1e-12);
            assert!((a[i] - c[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn on_grid_half() {
        let m = QaeMechanism::from_theta(theta_of(0.5), 4);
        for seed in 0..20 {
            let out = m.run(&QaeConfig { seed, ..cfg(16, DpMode::None) }).unwrap();
            assert!(out.y == 4 || out.y == 12);
            assert!((out.alpha_hat - 0.5).abs() < 1e-15);
        }
        let zero = QaeMechanism::from_theta(0.0, 4);
        let out = zero.run(&cfg(16, DpMode::None)).unwrap();
        assert_eq!((out.y, out.alpha_hat), (0, 0.0));
    }

    /// Phase estimation on the full register: Pr[y] = ‖(1/M)Σ_j e^{−2πijy/M} Q^j|ψ⟩‖².
    fn statevector_qae(d: &Dataset, q: &PredicateQuery, m: u64) -> Vec<f64> {
        let w = d.width();
        let dim = 1usize << (w + 1);
        let mut psi = DVector::<Complex64>::zeros(dim);
        let amp = 1.0 / (d.n() as f64).sqrt();
        for row in d.rows() {
            let good = q.eval_row(d.schema(), *row) as usize;
            psi[*row as usize | (good << w)] = Complex64::new(amp, 0.0);
        }
        let reflect = &psi * psi.adjoint() * Complex64::new(2.0, 0.0) - DMatrix::identity(dim, dim);
        let oracle = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
            Complex64::new(if i >> w & 1 == 1 { -1.0 } else { 1.0 }, 0.0)
        }));
        let grover = reflect * oracle;
        let mut powers = vec![psi.clone()];
        for _ in 1..m {
            let next = &grover * powers.last().unwrap();
            powers.push(next);
        }
        (0..m)
            .map(|y| {
                let mut acc = DVector::<Complex64>::zeros(dim);
                for (j, v) in powers.iter().enumerate() {
                    let ph = Complex64::from_polar(1.0 / m as f64, -2.0 * PI * (j as u64 * y) as f64 / m as f64);
                    acc += v * ph;
                }
                acc.norm_squared()
            })
            .collect()
    }

    #[test]
    fn statevector_cross_check() {
        let schema = Schema::new(vec![Attribute::new("a", 2)]).unwrap();
        let d = Dataset::new(schema, vec![vec![0], vec![1], vec![3]]).unwrap();
        for text in ["a == 01", "a >= 01", "a == 10"] {
            let q = parse_query(text, d.schema()).unwrap();
            let theta = decompose(&d, &q).theta;
            for m in [4u64, 8, 16] {
                let sv = statevector_qae(&d, &q, m);
                let an = outcome_distribution(theta, m);
                for (a, b) in sv.iter().zip(&an) {
                    assert!((a - b).abs() < 1e-10, "{text} M={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn bound_values() {
        assert!((error_bound(0.0, 10) - PI * PI / 100.0).abs() < 1e-15);
        assert!((error_bound(0.5, 100) - 0.032_40).abs() < 1e-5);
    }

    #[test]
    fn sensitivity_and_limits() {
        assert!((angle_sensitivity(2).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((angle_sensitivity(1_000_000).unwrap() - 1.000_000_166_7e-3).abs() < 1e-12);
        assert!(matches!(angle_sensitivity(1), Err(Error::NTooSmall(1))));
        assert_eq!(post_laplace_max_m(1_000_000).unwrap(), 3141);
        let m = QaeMechanism::from_theta(0.2, 1_000_000);
        assert!(m.run(&cfg(3141, DpMode::PostLaplace)).is_ok());
        assert!(matches!(
            m.run(&cfg(3142, DpMode::PostLaplace)),
            Err(Error::MTooLargeForPostLaplace { limit: 3141, .. })
        ));
    }

    #[test]
    fn median_of_one_is_a_run() {
        let m = QaeMechanism::from_theta(0.7, 10);
        for mode in [DpMode::None, DpMode::PhaseNoise, DpMode::PostLaplace] {
            let c = cfg(8, mode);
            assert_eq!(m.median(&c).unwrap(), m.run(&c).unwrap());
        }
        assert!(median_failure_bound(24) <= 0.01);
        assert!((median_failure_bound(24) - 0.0097).abs() < 1e-4);
    }

    #[test]
    fn modes_report_noise() {
        let m = QaeMechanism::from_theta(0.7, 1000);
        let pn = m.run(&cfg(32, DpMode::PhaseNoise)).unwrap();
        assert!(pn.eta_drawn.is_some());
        assert!((pn.alpha_hat - (PI * pn.y as f64 / 32.0).sin().powi(2)).abs() < 1e-15);
        let pl = m.run(&cfg(32, DpMode::PostLaplace)).unwrap();
        assert!(pl.eta_drawn.is_none());
        assert!((pl.alpha_hat - pl.theta_reported.sin().powi(2)).abs() < 1e-15);
        assert_eq!(privacy_spend(&QaeConfig { t: 5, ..cfg(32, DpMode::PhaseNoise) }), Some((5.0, 0.0)));
        assert_eq!(privacy_spend(&cfg(32, DpMode::None)), None);
    }

    #[test]
    fn mode_names() {
        for mode in [DpMode::None, DpMode::PostLaplace, DpMode::PhaseNoise] {
            assert_eq!(mode.as_str().parse::<DpMode>().unwrap(), mode);
        }
        assert!("laplace".parse::<DpMode>().is_err());
    }
}
