//! Runs an experiment file with a reduced trial count.
//!
//! `cargo run --release --example run_experiment -- examples/configs/bsside.toml 5`

use std::path::PathBuf;

use dam::experiment::{parse_config, run_experiment};

fn main() -> dam::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/fractional.toml"));
    let mut spec = parse_config(&path)?;
    spec.trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let table = run_experiment(&spec)?;
    print!("{}", table.to_csv());
    Ok(())
}
