//! euler-lab CLI entrypoint.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use euler_lab::dump::{dump_frame, dump_symbol};
use euler_lab::{load_config, run_experiment, Kind};

#[derive(Debug, Parser)]
#[command(name = "euler-lab", version)]
#[command(about = "damped compressible Euler experiments on the periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one experiment kind and write its artifacts.
    Run(RunArgs),
    /// Print e^{tA(ξ)} for one Fourier mode.
    DumpSymbol {
        /// Mode, comma separated, e.g. `1,-2`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        xi: Vec<i64>,
        #[arg(long)]
        t: f64,
    },
    /// Frame functionals along a stored trajectory.
    #[command(subcommand)]
    Frame(FrameCommand),
}

#[derive(Debug, Subcommand)]
enum FrameCommand {
    /// Print l1, l2 and c at one time as CSV.
    Dump {
        /// A `trajectory/` directory written by a run.
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    kind: Option<Kind>,
    /// JSON file with flat keys; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long = "T_end")]
    t_end: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "K_frame")]
    k_frame: Option<String>,
    #[arg(long = "output_dir")]
    output_dir: Option<String>,
    /// Any other config key, as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> anyhow::Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        if let Some(k) = self.kind {
            out.push(("kind".to_string(), k.name().to_string()));
        }
        let named = [
            ("dim", &self.dim),
            ("N", &self.n),
            ("s", &self.s),
            ("gamma", &self.gamma),
            ("amplitude", &self.amplitude),
            ("T_end", &self.t_end),
            ("dt", &self.dt),
            ("seed", &self.seed),
            ("K_frame", &self.k_frame),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                out.push((key.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else { bail!("--set expects KEY=VALUE, got `{kv}`") };
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("EULER_LAB_THREADS") {
        let n: usize = raw.trim().parse().with_context(|| format!("EULER_LAB_THREADS={raw}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = load_config(args.config.as_deref(), &args.overrides()?)?;
    let (outcome, paths) = run_experiment(&cfg)?;
    for p in &paths {
        println!("{}", p.display());
    }
    for c in &outcome.checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!("{mark} {} = {:.6e} (threshold {:.6e})", c.name, c.value, c.threshold);
    }
    if outcome.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{}", serde_json::to_string(&outcome.failure_json(&cfg))?);
        Ok(ExitCode::from(1))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Run(args) => run(args),
        Command::DumpSymbol { xi, t } => {
            print!("{}", dump_symbol(&xi, t)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Frame(FrameCommand::Dump { traj, t }) => {
            print!("{}", dump_frame(&traj, t)?);
            Ok(ExitCode::SUCCESS)
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::from(2)
        }
    }
}
