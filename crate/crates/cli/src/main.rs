use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppl_cli::{AnalysisConfig, CliError, Pipeline, PredictParts};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Penalised piecewise-linear extreme value models on periodic covariates.
#[derive(Parser)]
#[command(name = "ppl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Analysis configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Run directory, overriding the configured output.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed for cross-validation, bootstrap and simulation.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse every stage whose artifacts match the configuration and input.
    #[arg(long)]
    resume: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Extract storm peaks (or load the configured sample).
    ExtractPeaks(Common),
    /// Covariate kernel density on a grid.
    Density(Common),
    /// Local-quantile threshold.
    Threshold(Common),
    /// Locally-stationary GP moment estimates.
    LocalInit(Common),
    /// Periodic triangulation of the configured nodes.
    Triangulate(Common),
    /// Cross-validated penalty selection.
    Cv(Common),
    /// Penalised fit at the selected penalty.
    Fit(Common),
    /// Bootstrap refits at the selected penalty.
    Bootstrap(Common),
    /// Conditional quantile surfaces.
    Quantiles(Common),
    /// Simulate from the fitted model and write the points.
    Simulate(Common),
    /// Observed and simulated tail curves per stratum.
    Tailplot(Common),
    /// The full pipeline.
    Run(Common),
    /// HTTP service for the node-placement studio.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Write a synthetic storm-peak sample.
    Synth {
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn prepare(c: &Common) -> Result<AnalysisConfig, CliError> {
    let mut cfg = AnalysisConfig::load(&c.config)?;
    if let Some(out) = &c.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.set_seed(seed);
    }
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        ppl_core::par::init_threads(n).map_err(CliError::Config)?;
    }
    Ok(cfg)
}

fn report(p: &Pipeline) {
    let mut out = std::io::stdout().lock();
    for s in &p.manifest().stages {
        let status = match s.status {
            ppl_cli::pipeline::StageStatus::Computed => "computed",
            ppl_cli::pipeline::StageStatus::Cached => "cached",
        };
        let _ = writeln!(out, "{:<16} {:<9} {:>8.2}s", s.name, status, s.seconds);
    }
    let _ = writeln!(out, "artifacts in {}", p.out_dir().display());
}

fn stage(c: &Common, f: impl FnOnce(&mut Pipeline) -> Result<(), CliError>) -> Result<(), CliError> {
    let cfg = prepare(c)?;
    let mut p = Pipeline::new(cfg, c.resume)?;
    f(&mut p)?;
    report(&p);
    Ok(())
}

fn predict(c: &Common, parts: PredictParts) -> Result<(), CliError> {
    let cfg = prepare(c)?;
    let mut p = Pipeline::new(cfg, c.resume)?;
    let s = p.predict(parts, true)?;
    report(&p);
    if parts.simulation {
        println!("simulated {} points, {} exceedances", s.simulated, s.simulated_exceedances);
    }
    Ok(())
}

fn synth(out: &PathBuf, n: usize, seed: u64) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = ppl_core::synth::storm_peak_sample(&mut rng, n);
    let f = std::fs::File::create(out)?;
    s.write_csv(std::io::BufWriter::new(f), "hs").map_err(CliError::stage("extract"))?;
    println!("wrote {n} storm peaks to {}", out.display());
    Ok(())
}

fn execute(cmd: Command) -> Result<(), CliError> {
    let only = |q, s, t| PredictParts { quantiles: q, simulation: s, tails: t };
    match cmd {
        Command::ExtractPeaks(c) => stage(&c, |p| p.sample(true).map(drop)),
        Command::Density(c) => stage(&c, |p| p.density(true).map(drop)),
        Command::Threshold(c) => stage(&c, |p| p.threshold(true).map(drop)),
        Command::LocalInit(c) => stage(&c, |p| p.local_estimates(true).map(drop)),
        Command::Triangulate(c) => stage(&c, |p| p.triangulation(true).map(drop)),
        Command::Cv(c) => stage(&c, |p| p.cross_validation(true).map(drop)),
        Command::Fit(c) => stage(&c, |p| p.fitted(true).map(drop)),
        Command::Bootstrap(c) => stage(&c, |p| p.bootstrap(true).map(drop)),
        Command::Quantiles(c) => predict(&c, only(true, false, false)),
        Command::Simulate(c) => predict(&c, only(false, true, false)),
        Command::Tailplot(c) => predict(&c, only(false, false, true)),
        Command::Run(c) => stage(&c, Pipeline::run_all),
        Command::Serve { common, addr } => {
            let cfg = prepare(&common)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(ppl_cli::serve::serve(cfg, addr))
        }
        Command::Synth { out, n, seed } => synth(&out, n, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PPL_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
