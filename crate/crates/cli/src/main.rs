use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coopcp::baselines::PolicyKind;
use coopcp::harness::{self, ExperimentConfig, SweepParam};
use coopcp::units::{hz_to_mhz, mhz_to_hz};
use coopcp::{allocate, Error, PairInput, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "coopcp", version, about = "Cooperative perception mode selection and resource allocation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; omitted sections take the reference defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// random | allcp | brute | learned:<checkpoint>
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one allocation for a set of cooperating pairs and print it as JSON
    Allocate {
        /// JSON list of {"W": .., "D_m": ..}; `-` reads stdin, `@file` reads a file
        #[arg(long)]
        pairs: String,
        /// Available bandwidth in MHz
        #[arg(long, default_value_t = 10.5)]
        bandwidth_mhz: f64,
    },
    /// Region thresholds and a labelled rate/frequency grid for one workload
    Regions {
        #[arg(long)]
        workload: f64,
        /// Grid points per axis
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Run evaluation episodes under one policy
    Simulate {
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train the multi-agent actors and write a checkpoint
    Train {
        /// Training episodes (overrides learner.episodes)
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate a checkpoint against the brute-force baseline on paired episodes
    Evaluate {
        /// Defaults to <out>/actors.ckpt
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// One run per parameter value with shared seeds
    Sweep {
        /// omega_tilde or K
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        episodes: Option<usize>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut c = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(p) = &common.policy {
        c.policy = p.parse()?;
    }
    if let Some(o) = &common.out {
        c.output_dir = o.clone();
    }
    c.validate()?;
    Ok(c)
}

fn read_pairs(arg: &str) -> Result<Vec<PairInput>> {
    let text = if arg == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else if let Some(p) = arg.strip_prefix('@') {
        fs::read_to_string(p).map_err(|e| Error::ConfigInvalid(format!("cannot read {p}: {e}")))?
    } else {
        arg.to_string()
    };
    serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid(format!("pairs: {e}")))
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load(&cli.common)?;
    match cli.cmd {
        Command::Allocate { pairs, bandwidth_mhz } => {
            let pairs = read_pairs(&pairs)?;
            if !(bandwidth_mhz.is_finite() && bandwidth_mhz >= 0.0) {
                return Err(Error::ConfigInvalid(format!("bandwidth {bandwidth_mhz} MHz")));
            }
            let r = allocate(&pairs, mhz_to_hz(bandwidth_mhz), &cfg.model()?, &cfg.solver)?;
            print_json(&serde_json::to_value(r)?)
        }
        Command::Regions { workload, grid } => {
            let model = cfg.model()?;
            let (t, cells) = harness::region_grid(&model, workload, grid)?;
            fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("regions.csv");
            let mut w = io::BufWriter::new(fs::File::create(&path)?);
            writeln!(w, "rate_Mbps,freq_GHz,region")?;
            for c in &cells {
                writeln!(w, "{},{},{:?}", hz_to_mhz(c.rate_bps), c.freq_hz / 1e9, c.region)?;
            }
            w.flush()?;
            let v = json!({ "workload": workload, "thresholds": t, "grid_csv": path });
            fs::write(cfg.output_dir.join("thresholds.json"), serde_json::to_string_pretty(&v)? + "\n")?;
            print_json(&v)
        }
        Command::Simulate { episodes } => {
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            let out = harness::run(&cfg)?;
            print_json(&serde_json::to_value(&out.summary)?)
        }
        Command::Train { episodes } => {
            if let Some(n) = episodes {
                cfg.learner.episodes = n;
            }
            let (ckpt, out) = harness::train(&cfg)?;
            let tail = out.log.episodes.len().saturating_sub(100);
            let recent: Vec<f64> = out.log.episodes[tail..].iter().map(|e| e.reward_train).collect();
            let mean = if recent.is_empty() { 0.0 } else { recent.iter().sum::<f64>() / recent.len() as f64 };
            print_json(&json!({
                "checkpoint": ckpt,
                "episodes": out.log.episodes.len(),
                "recent_mean_reward_train": mean,
            }))
        }
        Command::Evaluate { checkpoint, episodes } => {
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            let ckpt = checkpoint.unwrap_or_else(|| cfg.output_dir.join("actors.ckpt"));
            cfg.policy = PolicyKind::Learned(ckpt);
            let learned = harness::run(&cfg)?.summary;
            let brute = harness::simulate(&cfg, &PolicyKind::BruteForce, None)?;
            let brute = harness::aggregate(&brute).unwrap_or_else(|_| harness::MetricsSummary::no_data());
            let v = json!({ "learned": learned, "brute": brute });
            fs::write(cfg.output_dir.join("evaluation.json"), serde_json::to_string_pretty(&v)? + "\n")?;
            print_json(&v)
        }
        Command::Sweep { param, values, episodes } => {
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            let param: SweepParam = param.parse()?;
            let points = harness::sweep(&cfg, param, &values)?;
            print_json(&serde_json::to_value(&points)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
