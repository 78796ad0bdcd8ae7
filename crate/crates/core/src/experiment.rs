//! Seeded Monte Carlo experiments: accounting tables, error scaling, median
//! confidence and parameter sweeps.

use rand::Rng;
use serde::Serialize;

use crate::direct::{account_direct, DirectConfig, DirectMechanism};
use crate::error::Result;
use crate::exec::{derive_seed, substream, Exec};
use crate::qae::{error_bound, privacy_spend, DpMode, QaeConfig, QaeMechanism};
use crate::state::theta_of;

/// One row of experiment output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub mechanism: &'static str,
    pub n: u64,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    pub t: u64,
    pub dp_mode: String,
    pub epsilon: f64,
    pub alpha_true: f64,
    pub alpha_hat: f64,
    pub abs_error: f64,
    pub eps_spent: f64,
    pub delta_spent: f64,
    pub seed: u64,
}

pub fn write_rows<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountingRow {
    pub k: u64,
    pub eps_prime: f64,
    pub delta: f64,
}

pub fn accounting_table(n: u64, t: u64, epsilon: f64, ks: &[u64]) -> Vec<AccountingRow> {
    ks.iter()
        .map(|&k| {
            let (eps_prime, delta) = account_direct(n, t, k, epsilon);
            AccountingRow { k, eps_prime, delta }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    /// t for the direct mechanism, M for QAE.
    pub x: u64,
    pub mean_error: f64,
    pub trials: u64,
}

/// Least-squares slope of ln(mean_error) against ln(x).
pub fn fit_slope(points: &[ScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.x as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_error.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean |α − α̃| of the noiseless direct mechanism for each t, on a dataset of
/// `n` rows of which `hits` satisfy the query.
pub fn direct_scaling(n: u64, hits: u64, ts: &[u64], trials: u64, seed: u64, exec: Exec) -> Vec<ScalingPoint> {
    let mech = DirectMechanism::from_hits((0..n).map(|i| i < hits).collect());
    let alpha = hits as f64 / n as f64;
    ts.iter()
        .map(|&t| {
            let label = format!("scaling/direct/{t}");
            let errors = exec.map(trials, |i| {
                let mut rng = substream(seed, &label, i);
                (mech.sample_mean(t, &mut rng) - alpha).abs()
            });
            ScalingPoint { x: t, mean_error: mean(&errors), trials }
        })
        .collect()
}

/// Mean |α − α̃| of noiseless single-run QAE for each M, with α drawn
/// uniformly from [0, 1] in every trial.
pub fn qae_scaling(ms: &[u64], trials: u64, seed: u64, exec: Exec) -> Vec<ScalingPoint> {
    ms.iter()
        .map(|&m| {
            let label = format!("scaling/qae/{m}");
            let errors = exec.map(trials, |i| {
                let alpha: f64 = substream(seed, &label, i).gen();
                let cfg = QaeConfig { m, t: 1, dp_mode: DpMode::None, epsilon: 1.0, seed: derive_seed(seed, &label, i) };
                let out = QaeMechanism::from_theta(theta_of(alpha), 2).run(&cfg).expect("valid config");
                (out.alpha_hat - alpha).abs()
            });
            ScalingPoint { x: m, mean_error: mean(&errors), trials }
        })
        .collect()
}

/// Fraction of trials whose (median-of-t) noiseless estimate lies within
/// [`error_bound`] of α.
pub fn qae_confidence(alpha: f64, m: u64, t: u64, trials: u64, seed: u64, exec: Exec) -> f64 {
    let mech = QaeMechanism::from_theta(theta_of(alpha), 2);
    let bound = error_bound(alpha, m);
    let label = format!("confidence/{m}/{t}");
    let hits = exec.map_reduce(
        trials,
        |i| {
            let cfg = QaeConfig { m, t, dp_mode: DpMode::None, epsilon: 1.0, seed: derive_seed(seed, &label, i) };
            let out = mech.median(&cfg).expect("valid config");
            u64::from((out.alpha_hat - alpha).abs() <= bound)
        },
        || 0,
        |a, b| a + b,
    );
    hits as f64 / trials as f64
}

/// Grid of configurations for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: u64,
    pub hits: u64,
    pub epsilons: Vec<f64>,
    /// Direct mechanism: measurement counts and noise tiers.
    pub ts: Vec<u64>,
    pub ks: Vec<u64>,
    /// QAE: grid sizes, modes and median repetitions.
    pub ms: Vec<u64>,
    pub modes: Vec<DpMode>,
    pub qae_t: u64,
    pub trials: u64,
    pub seed: u64,
}

/// Runs every grid cell `trials` times; each (cell, trial) owns a derived seed.
pub fn sweep(cfg: &SweepConfig, exec: Exec) -> Result<Vec<ExperimentRow>> {
    let alpha = cfg.hits as f64 / cfg.n as f64;
    let direct = DirectMechanism::from_hits((0..cfg.n).map(|i| i < cfg.hits).collect());
    let qae = QaeMechanism::from_theta(theta_of(alpha), cfg.n);
    let mut rows = Vec::new();
    for &epsilon in &cfg.epsilons {
        for &t in &cfg.ts {
            for &k in &cfg.ks {
                let label = format!("sweep/direct/{epsilon}/{t}/{k}");
                let reports = exec.map(cfg.trials, |i| {
                    direct.run(&DirectConfig { t, k, epsilon, seed: derive_seed(cfg.seed, &label, i) })
                });
                for r in reports {
                    let r = r?;
                    rows.push(ExperimentRow {
                        mechanism: "direct",
                        n: cfg.n,
                        m: None,
                        t,
                        dp_mode: format!("k={k}"),
                        epsilon,
                        alpha_true: alpha,
                        alpha_hat: r.answer,
                        abs_error: (r.answer - alpha).abs(),
                        eps_spent: r.eps_prime,
                        delta_spent: r.delta,
                        seed: r.seed,
                    });
                }
            }
        }
        for &m in &cfg.ms {
            for &mode in &cfg.modes {
                let label = format!("sweep/qae/{epsilon}/{m}/{mode}");
                let outs = exec.map(cfg.trials, |i| {
                    let qc = QaeConfig { m, t: cfg.qae_t, dp_mode: mode, epsilon, seed: derive_seed(cfg.seed, &label, i) };
                    qae.median(&qc).map(|o| (o, qc))
                });
                for res in outs {
                    let (o, qc) = res?;
                    let (eps_spent, delta_spent) = privacy_spend(&qc).unwrap_or((f64::INFINITY, 1.0));
                    rows.push(ExperimentRow {
                        mechanism: "qae",
                        n: cfg.n,
                        m: Some(m),
                        t: cfg.qae_t,
                        dp_mode: mode.to_string(),
                        epsilon,
                        alpha_true: alpha,
                        alpha_hat: o.alpha_hat,
                        abs_error: (o.alpha_hat - alpha).abs(),
                        eps_spent,
                        delta_spent,
                        seed: qc.seed,
                    });
                }
            }
        }
    }
    Ok(rows)
}
