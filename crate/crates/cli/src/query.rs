use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qdp_core::accountant::{depolarizing_contribution, BudgetLedger, Source};
use qdp_core::qae::{privacy_spend, QaeMechanism};
use qdp_core::state::decompose;
use qdp_core::{
    load_dataset, parse_query, run_direct, DepolarizingSpec, DirectConfig, DpMode, QaeConfig, Schema,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Direct,
    Qae,
}

/// Command-line flags; every field can also come from a flat TOML file given
/// with `--config`, and flags win over the file.
#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryArgs {
    /// Flat TOML file with any of the fields below.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// CSV dataset, one column per attribute.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// TOML schema.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Predicate, e.g. "age == Adult AND marital != Single".
    #[arg(long)]
    query: Option<String>,
    #[arg(long, value_enum)]
    mechanism: Option<Mechanism>,
    /// Measurements (direct) or median repetitions (qae).
    #[arg(long)]
    t: Option<u64>,
    /// Noise tier of the direct mechanism.
    #[arg(long)]
    k: Option<u64>,
    /// Amplitude-estimation grid size.
    #[arg(short = 'M', long = "m")]
    m: Option<u64>,
    /// none, post_laplace or phase_noise.
    #[arg(long)]
    dp_mode: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Depolarizing probabilities of the noisy gates, comma separated.
    #[arg(long, value_delimiter = ',')]
    depolarizing: Option<Vec<f64>>,
    /// Dimension the depolarizing channels act on; 2^(data qubits) by default.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV file the result row is appended to.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also print pre-noise values. These are not private.
    #[arg(long)]
    #[serde(skip)]
    debug: bool,
}

impl QueryArgs {
    fn merge(self, file: QueryArgs) -> QueryArgs {
        QueryArgs {
            config: self.config,
            dataset: self.dataset.or(file.dataset),
            schema: self.schema.or(file.schema),
            query: self.query.or(file.query),
            mechanism: self.mechanism.or(file.mechanism),
            t: self.t.or(file.t),
            k: self.k.or(file.k),
            m: self.m.or(file.m),
            dp_mode: self.dp_mode.or(file.dp_mode),
            epsilon: self.epsilon.or(file.epsilon),
            depolarizing: self.depolarizing.or(file.depolarizing),
            dim: self.dim.or(file.dim),
            seed: self.seed.or(file.seed),
            output: self.output.or(file.output),
            debug: self.debug,
        }
    }
}

/// Reads a config file; relative paths inside it resolve against its directory.
fn read_config(path: &Path) -> Result<QueryArgs> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut file: QueryArgs = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut file.dataset, &mut file.schema, &mut file.output].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(file)
}

/// A fully resolved query invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanismParams {
    Direct { t: u64, k: u64 },
    Qae { m: u64, t: u64, dp_mode: DpMode },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub query: String,
    pub params: MechanismParams,
    pub epsilon: f64,
    pub depolarizing: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl TryFrom<QueryArgs> for RunConfig {
    type Error = anyhow::Error;

    fn try_from(a: QueryArgs) -> Result<Self> {
        let mechanism = a.mechanism.unwrap_or(Mechanism::Direct);
        let params = match mechanism {
            Mechanism::Direct => {
                if a.m.is_some() || a.dp_mode.is_some() {
                    bail!("M and dp_mode belong to the qae mechanism");
                }
                MechanismParams::Direct { t: a.t.unwrap_or(1000), k: a.k.unwrap_or(1) }
            }
            Mechanism::Qae => {
                if a.k.is_some() {
                    bail!("k belongs to the direct mechanism");
                }
                let dp_mode = a.dp_mode.as_deref().unwrap_or("phase_noise").parse()?;
                MechanismParams::Qae { m: a.m.unwrap_or(64), t: a.t.unwrap_or(1), dp_mode }
            }
        };
        Ok(RunConfig {
            dataset: a.dataset.context("missing --dataset")?,
            schema: a.schema.context("missing --schema")?,
            query: a.query.context("missing --query")?,
            params,
            epsilon: a.epsilon.unwrap_or(1.0),
            depolarizing: a.depolarizing,
            dim: a.dim,
            seed: a.seed.unwrap_or(0),
            output: a.output,
        })
    }
}

/// One line of query output. `raw` and `alpha_true` stay empty unless the run
/// was made with `--debug`.
#[derive(Debug, Serialize)]
struct QueryRow<'a> {
    mechanism: &'static str,
    query: &'a str,
    n: usize,
    #[serde(rename = "M")]
    m: Option<u64>,
    t: u64,
    k: Option<u64>,
    dp_mode: Option<&'static str>,
    epsilon: f64,
    answer: f64,
    eps_total: f64,
    delta_total: f64,
    seed: u64,
    raw: Option<f64>,
    alpha_true: Option<f64>,
}

pub fn run(args: QueryArgs) -> Result<()> {
    let args = match &args.config {
        Some(path) => {
            let file = read_config(path)?;
            args.merge(file)
        }
        None => args,
    };
    let debug = args.debug;
    let cfg = RunConfig::try_from(args)?;
    execute(&cfg, debug)
}

fn execute(cfg: &RunConfig, debug: bool) -> Result<()> {
    let schema = Schema::from_toml_file(&cfg.schema).with_context(|| format!("schema {}", cfg.schema.display()))?;
    let data = load_dataset(&cfg.dataset, &schema).with_context(|| format!("dataset {}", cfg.dataset.display()))?;
    let q = parse_query(&cfg.query, data.schema())?;
    let n = data.n();
    let alpha_true = decompose(&data, &q).alpha_f64();

    let mut ledger = BudgetLedger::new();
    let mut row = QueryRow {
        mechanism: "direct",
        query: &cfg.query,
        n,
        m: None,
        t: 0,
        k: None,
        dp_mode: None,
        epsilon: cfg.epsilon,
        answer: 0.0,
        eps_total: 0.0,
        delta_total: 0.0,
        seed: cfg.seed,
        raw: None,
        alpha_true: debug.then_some(alpha_true),
    };
    let mut diagnostics = Vec::new();

    println!("query      {}", q.display(data.schema()));
    println!("rows       {n}");
    match cfg.params {
        MechanismParams::Direct { t, k } => {
            let r = run_direct(&data, &q, &DirectConfig { t, k, epsilon: cfg.epsilon, seed: cfg.seed })?;
            println!("mechanism  direct (t={t}, k={k}, epsilon={})", cfg.epsilon);
            println!("answer     {:.6}", r.answer);
            ledger.record(format!("direct t={t} k={k}"), r.eps_prime, r.delta, Source::Direct)?;
            row.t = t;
            row.k = Some(k);
            row.answer = r.answer;
            if debug {
                row.raw = Some(r.raw_mean);
                diagnostics.push(format!("raw_mean={:.6}", r.raw_mean));
                diagnostics.push(format!("noise_scale={:.6e}", r.noise_scale));
            }
        }
        MechanismParams::Qae { m, t, dp_mode } => {
            let qc = QaeConfig { m, t, dp_mode, epsilon: cfg.epsilon, seed: cfg.seed };
            let out = QaeMechanism::new(&data, &q).median(&qc)?;
            println!("mechanism  qae (M={m}, t={t}, dp_mode={dp_mode}, epsilon={})", cfg.epsilon);
            println!("answer     {:.6}", out.alpha_hat);
            match privacy_spend(&qc) {
                Some((eps, delta)) => {
                    let source = if dp_mode == DpMode::PostLaplace { Source::QaePost } else { Source::QaePhase };
                    ledger.record(format!("qae {dp_mode} M={m} t={t}"), eps, delta, source)?;
                }
                None => println!("warning: dp_mode none releases the estimate without a privacy guarantee"),
            }
            row.mechanism = "qae";
            row.m = Some(m);
            row.t = t;
            row.dp_mode = Some(dp_mode.as_str());
            row.answer = out.alpha_hat;
            if debug {
                let grid = (std::f64::consts::PI * out.y as f64 / m as f64).sin().powi(2);
                row.raw = Some(grid);
                diagnostics.push(format!("y={}", out.y));
                diagnostics.push(format!("theta_reported={:.6}", out.theta_reported));
                if let Some(eta) = out.eta_drawn {
                    diagnostics.push(format!("eta={eta:.6}"));
                }
            }
        }
    }

    if let Some(probs) = &cfg.depolarizing {
        let dim = match cfg.dim {
            Some(d) => d,
            None => 1usize
                .checked_shl(data.width() as u32)
                .filter(|&d| d > 0)
                .context("register too wide for the default depolarizing dimension; pass --dim")?,
        };
        let spec = DepolarizingSpec::new(probs.clone(), dim)?;
        let eps2 = depolarizing_contribution(&spec, n as u64)?;
        ledger.record(format!("depolarizing x{} d={dim}", probs.len()), eps2, 0.0, Source::Depolarizing)?;
    }

    if debug {
        println!("[debug, not private] alpha_true={alpha_true:.6}");
        for d in &diagnostics {
            println!("[debug, not private] {d}");
        }
    }
    print!("{}", ledger.report());

    let totals = ledger.totals();
    row.eps_total = totals.epsilon;
    row.delta_total = totals.delta;
    if let Some(path) = &cfg.output {
        append_row(path, &row)?;
    }
    Ok(())
}

fn append_row(path: &Path, row: &QueryRow<'_>) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}
