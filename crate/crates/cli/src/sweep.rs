use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde::Deserialize;

use qdp_core::experiment::{sweep, write_rows, SweepConfig};
use qdp_core::{DpMode, Exec};

/// Flat TOML grid; every list is a sweep axis.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    n: u64,
    hits: u64,
    epsilons: Vec<f64>,
    #[serde(default)]
    ts: Vec<u64>,
    #[serde(default)]
    ks: Vec<u64>,
    #[serde(default)]
    ms: Vec<u64>,
    #[serde(default)]
    modes: Vec<String>,
    #[serde(default = "one")]
    qae_t: u64,
    trials: u64,
    #[serde(default)]
    seed: u64,
}

fn one() -> u64 {
    1
}

impl TryFrom<SweepFile> for SweepConfig {
    type Error = anyhow::Error;

    fn try_from(f: SweepFile) -> Result<Self> {
        ensure!(f.n > 0 && f.hits <= f.n, "need 0 <= hits <= n and n > 0");
        let modes = f.modes.iter().map(|m| m.parse::<DpMode>()).collect::<qdp_core::Result<Vec<_>>>()?;
        Ok(SweepConfig {
            n: f.n,
            hits: f.hits,
            epsilons: f.epsilons,
            ts: f.ts,
            ks: f.ks,
            ms: f.ms,
            modes,
            qae_t: f.qae_t,
            trials: f.trials,
            seed: f.seed,
        })
    }
}

pub fn run(config: &Path, output: Option<&Path>, exec: Exec) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let file: SweepFile = toml::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    let cfg = SweepConfig::try_from(file)?;
    let rows = sweep(&cfg, exec)?;
    match output {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            write_rows(&rows, std::io::BufWriter::new(f))?;
            eprintln!("{} rows written to {}", rows.len(), path.display());
        }
        None => write_rows(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}
