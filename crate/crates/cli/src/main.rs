use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use h2df_core::codebook::{optimal_segments, DEFAULT_VERIFY_BUDGET};
use h2df_core::harness::{self, FeaturePath, Figure, SimConfig};
use h2df_core::{AttackKind, CodeParams, H2dfCodebook, Strategy};

#[derive(Parser)]
#[command(name = "h2df", version, about = "H2DF code construction, decoding and IEP simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Build a codebook and write it in the text matrix format.
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check cover-freeness, constant weight and decomposition round trips.
    Verify {
        #[command(flatten)]
        code: CodeArgs,
        /// Read the codebook from a file instead of constructing it.
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Maximum number of elementary cover tests.
        #[arg(long, default_value_t = DEFAULT_VERIFY_BUDGET)]
        budget: u128,
    },
    /// Monte Carlo IEP estimate as a one-row CSV.
    Simulate(SimArgs),
    /// Figure data grids as CSV.
    Sweep {
        #[arg(long, value_parser = ["6a", "6b", "6c", "7a", "7b"])]
        figure: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form metrics for a subcarrier budget.
    Metrics {
        #[arg(long = "K")]
        users: usize,
        #[arg(long = "k")]
        dim: usize,
        #[arg(long = "Np")]
        np: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long = "K", default_value_t = 3)]
    users: usize,
    #[arg(long = "k", default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    q: u32,
    /// Segments per submatrix; defaults to the largest with 2KN^2 <= C.
    #[arg(long = "N")]
    segments: Option<usize>,
}

impl CodeArgs {
    fn params(&self) -> Result<CodeParams> {
        let size = (self.q as usize)
            .checked_pow(self.dim as u32)
            .context("q^k overflows")?;
        let n = self
            .segments
            .unwrap_or_else(|| optimal_segments(size, self.users.max(1)));
        Ok(CodeParams::new(self.users, self.dim, self.q, n)?)
    }
}

#[derive(Args)]
struct SimArgs {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "K")]
    users: Option<usize>,
    #[arg(long = "k")]
    dim: Option<usize>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long = "N")]
    segments: Option<usize>,
    /// sc, wb-pj or pb-pj.
    #[arg(long)]
    attack: Option<AttackKind>,
    /// none, random_subset, victim_segment_codeword or spsum_imitation.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    victim: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, env = "H2DF_SEED")]
    seed: Option<u64>,
    #[arg(long, value_parser = ["ideal", "signal"])]
    path: Option<String>,
    #[arg(long = "n-t")]
    n_t: Option<usize>,
    #[arg(long = "snr-db")]
    snr_db: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("parsing {}", p.display()))?;
        }
        if let Some(v) = self.users {
            cfg.users = v;
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if self.segments.is_some() {
            cfg.segments = self.segments;
        }
        if let Some(v) = self.attack {
            cfg.attack = v;
        }
        if let Some(s) = &self.strategy {
            cfg.set("strategy", s)?;
        }
        if let Some(v) = self.rho {
            cfg.set("rho", &v.to_string())?;
        }
        if self.victim.is_some() {
            cfg.victim = self.victim;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(p) = &self.path {
            cfg.path = p.parse::<FeaturePath>()?;
        }
        if let Some(v) = self.n_t {
            cfg.n_t = v;
        }
        if let Some(v) = self.snr_db {
            cfg.snr_db = v;
        }
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
        }
        if self.r.is_some() {
            cfg.r = self.r;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if cfg.attack == AttackKind::PbPj && cfg.strategy == Strategy::None {
            bail!("pb-pj needs --strategy");
        }
        Ok(cfg)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn verify(cb: &H2dfCodebook, budget: u128) -> Result<bool> {
    let p = cb.params();
    println!(
        "codebook K={} k={} q={} N={} B={} C={}",
        p.users(),
        p.dim(),
        p.q(),
        p.segments(),
        cb.len(),
        cb.size()
    );
    let weight = cb.is_constant_weight();
    println!("constant weight {}: {}", p.rs_len(), if weight { "ok" } else { "FAIL" });
    let cover_free = cb.verify_cover_free(budget)?;
    println!("cover-free of order {}: {}", p.users(), if cover_free { "ok" } else { "FAIL" });
    let roundtrip = cb.check_decompose_roundtrip(budget)?;
    match &roundtrip {
        None => println!("decompose round trip: ok"),
        Some(set) => println!("decompose round trip: FAIL at {set:?}"),
    }
    Ok(weight && cover_free && roundtrip.is_none())
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Command::Construct { code, out } => {
            let cb = H2dfCodebook::construct(code.params()?)?;
            cb.write_to(output(&out)?)?;
        }
        Command::Verify {
            code,
            codebook,
            budget,
        } => {
            let cb = match codebook {
                Some(p) => {
                    let f = File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                    H2dfCodebook::read_from(BufReader::new(f))?
                }
                None => H2dfCodebook::construct(code.params()?)?,
            };
            if !verify(&cb, budget)? {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Simulate(args) => {
            let cfg = args.config()?;
            let stats = harness::monte_carlo_iep(&cfg)?;
            harness::write_simulate_csv(&cfg, &stats, output(&args.out)?)?;
        }
        Command::Sweep { figure, out } => {
            let figure: Figure = figure.parse()?;
            harness::sweep(figure)?.write_csv(output(&out)?)?;
        }
        Command::Metrics {
            users,
            dim,
            np,
            out,
        } => {
            harness::metrics(users, dim, np)?.write_csv(output(&out)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
