use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dam::experiment::{parse_config, run_experiment, ExperimentKind, ExperimentSpec};
use dam::Error;

/// Monte Carlo sweeps for multi-user delay alignment modulation.
#[derive(Parser)]
#[command(name = "damsim", version)]
struct Cli {
    #[command(subcommand)]
    kind: Kind,
}

#[derive(Subcommand)]
enum Kind {
    /// SE versus power for every base-station/user split of the delay compensation.
    SeVsPowerDoubleside(RunArgs),
    /// SE versus power, base-station-side compensation, integer delays.
    SeVsPowerBsside(RunArgs),
    /// SE versus power, base-station-side compensation, fractional delays.
    SeVsPowerFractional(RunArgs),
    /// PAPR CCDF of DAM, OFDM and the strongest-path baseline.
    PaprCcdf(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; its `kind` must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed [default: file value, else 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per sweep point [default: file value, else 100].
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV; the JSON sidecar is written next to it [default: results/<kind>.csv].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
}

impl Kind {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Kind::SeVsPowerDoubleside(a) => (ExperimentKind::SeVsPowerDoubleside, a),
            Kind::SeVsPowerBsside(a) => (ExperimentKind::SeVsPowerBsside, a),
            Kind::SeVsPowerFractional(a) => (ExperimentKind::SeVsPowerFractional, a),
            Kind::PaprCcdf(a) => (ExperimentKind::PaprCcdf, a),
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), Error> {
    let mut spec = match &args.config {
        Some(path) => parse_config(path)?,
        None => ExperimentSpec::new(kind),
    };
    if spec.kind != kind {
        return Err(Error::Config(format!("config file describes `{}`, not `{kind}`", spec.kind)));
    }
    spec.seed = args.seed.unwrap_or(spec.seed);
    spec.trials = args.trials.unwrap_or(spec.trials);
    let out = args.out.or_else(|| spec.out.clone()).unwrap_or_else(|| PathBuf::from(format!("results/{kind}.csv")));
    spec.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let table = pool.install(|| run_experiment(&spec))?;
    if table.rows.iter().all(|r| !r.feasible) {
        return Err(Error::Infeasible("no scheme is feasible for these dimensions".into()));
    }
    for path in table.write(&out)? {
        eprintln!("wrote {}", path.display());
    }
    print!("{}", table.to_csv());
    Ok(())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().kind.split();
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("damsim: {e}");
            ExitCode::FAILURE
        }
    }
}
