//! `qxpanse` command-line interface.
//!
//! Every flag can also be set through an environment variable with the
//! `QXPANSE_` prefix, e.g. `QXPANSE_THREADS=4` or `QXPANSE_FRAME=both`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qxpanse::scenario::run::{self as runner, SweepKey};
use qxpanse::scenario::{verify, Frame, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "qxpanse", version, about = "Liouville-frame Wigner function dynamics")]
struct Cli {
    /// Worker threads; 1 runs the sequential kernels.
    #[arg(long, global = true, env = "QXPANSE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its outputs.
    Run {
        /// Run configuration (TOML). Defaults to the η = 100 reference run.
        #[arg(long, env = "QXPANSE_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "QXPANSE_OUT")]
        out: PathBuf,
        /// Steps between snapshots.
        #[arg(long, env = "QXPANSE_SNAPSHOT_EVERY")]
        snapshot_every: Option<usize>,
        /// Frame of the snapshots: liouville, lab or both.
        #[arg(long, env = "QXPANSE_FRAME")]
        frame: Option<Frame>,
        /// Drop the quantum terms.
        #[arg(long, env = "QXPANSE_CLASSICAL")]
        classical: bool,
    },
    /// Recompute the marginal analysis from snapshots or run directories.
    Analyze {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Config used to resample bare Liouville-frame snapshots.
        #[arg(long, env = "QXPANSE_CONFIG")]
        config: Option<PathBuf>,
        /// Also write the position marginal of a single input here.
        #[arg(long)]
        marginal: Option<PathBuf>,
    },
    /// Emit one config file per parameter value.
    Sweep {
        #[arg(long, env = "QXPANSE_CONFIG")]
        config: Option<PathBuf>,
        /// eta, decoherence or gamma
        #[arg(long)]
        key: SweepKey,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, env = "QXPANSE_OUT")]
        out: PathBuf,
    },
    /// Run the oracle suite.
    Verify,
    /// Write the operator at a given time in coordinate text format.
    DumpOperator {
        #[arg(long, env = "QXPANSE_CONFIG")]
        config: Option<PathBuf>,
        /// Time `Ωt` at which the flow is evaluated.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Option<PathBuf>) -> Result<RunConfig> {
    Ok(match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn set_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        qxpanse::exec::set_parallel(n > 1);
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    set_threads(cli.threads)?;
    match cli.command {
        Command::Run { config, out, snapshot_every, frame, classical } => {
            let mut cfg = load(&config)?;
            if let Some(n) = snapshot_every {
                cfg.output.snapshot_every = n;
            }
            if let Some(f) = frame {
                cfg.output.frame = f;
            }
            if classical {
                cfg.physics.mode = Mode::Classical;
            }
            let output = runner::run(&cfg, Some(&out)).with_context(|| format!("run into {}", out.display()))?;
            print!("{}", output.report.to_toml());
            log::info!("wrote {} files to {}", output.files.len(), out.display());
        }
        Command::Analyze { paths, config, marginal } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            for p in &paths {
                let (a, m) = runner::analyze(p, cfg.as_ref()).with_context(|| format!("analysing {}", p.display()))?;
                println!("[[analysis]]\n{}", toml_string(&a)?);
                if let (Some(out), Some(m)) = (&marginal, &m) {
                    runner::write_marginal(out, m)?;
                }
            }
        }
        Command::Sweep { config, key, values, out } => {
            let base = load(&config)?;
            for p in runner::sweep(&base, key, &values, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Verify => {
            let mut ok = true;
            for c in verify::verify_suite()? {
                ok &= c.passed;
                println!("{} {:<58} {:.3e} (tolerance {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            return Ok(ok);
        }
        Command::DumpOperator { config, time, out } => {
            let cfg = load(&config)?;
            let nnz = match out {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(&p)?);
                    let n = runner::dump_operator(&cfg, time, &mut w)?;
                    w.flush()?;
                    n
                }
                None => runner::dump_operator(&cfg, time, std::io::stdout().lock())?,
            };
            log::info!("{nnz} nonzero entries");
        }
    }
    Ok(true)
}

fn toml_string<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(toml::to_string(v)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
