//! PAPR of the DAM, OFDM and strongest-path waveforms on one channel draw.

use dam::experiment::{evaluate_trial, ExperimentKind, ExperimentSpec};
use dam::waveform::{ccdf, papr_quantile_db};

fn main() -> dam::Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::PaprCcdf);
    spec.config.tx_antennas = 32;
    spec.papr.blocks_per_trial = 20;
    let cfg = spec.point_config(spec.config.p_dbm)?;
    let out = evaluate_trial(&spec, &cfg, 1)?;
    let th = [6.0, 8.0, 10.0, 12.0];
    for (name, samples) in spec.schemes().iter().zip(&out.papr) {
        let c = ccdf(samples, &th);
        println!("{name:>14}: PAPR at 1e-2 {:.2} dB, CCDF at {th:?} dB = {c:.3?}", papr_quantile_db(samples, 1e-2));
    }
    Ok(())
}
