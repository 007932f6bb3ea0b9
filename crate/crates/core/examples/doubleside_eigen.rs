//! Eigen-beamforming SINR for every split of the delay compensation.

use dam::beamforming::{assemble_effective_channels, eigen_beamform_doubleside};
use dam::channel::generate_channel_set;
use dam::experiment::split_plans;
use dam::SimConfig;

fn main() -> dam::Result<()> {
    let cfg = SimConfig { tx_antennas: 8, rx_antennas: 4, fractional_delays: false, ..SimConfig::default() };
    let set = generate_channel_set(&cfg, 3)?;
    for pre in (1..=cfg.paths_per_ue).rev() {
        let plans = split_plans(&set, pre)?;
        let tensor = assemble_effective_channels(&set, &plans)?;
        let (_, sinr) = eigen_beamform_doubleside(&tensor, cfg.tx_power(), cfg.noise_power())?;
        let db: Vec<String> = sinr.iter().map(|g| format!("{:.1} dB", 10.0 * g.log10())).collect();
        println!("I={pre} R={}: {}", cfg.paths_per_ue + 1 - pre, db.join(", "));
    }
    Ok(())
}
