//! OFDM baselines on the same channel and the overhead-corrected rates.

use dam::beamforming::{assemble_bs_side, isi_zf_alternating};
use dam::channel::generate_channel_set;
use dam::ofdm::{effective_rates, ofdm_eigen, ofdm_zf_waterfill};
use dam::SimConfig;

fn main() -> dam::Result<()> {
    let cfg = SimConfig { fractional_delays: false, ..SimConfig::default() };
    let (p, s2, m) = (cfg.tx_power(), cfg.noise_power(), cfg.subcarriers);
    let set = generate_channel_set(&cfg, 11)?;

    let (_, eigen_sinr) = ofdm_eigen(&set, m, p, s2)?;
    let (bf, zf_snr, zf_rate) = ofdm_zf_waterfill(&set, m, p, s2)?;
    let active = bf.beams.iter().flatten().filter(|b| b.power > 0.0).count();
    println!("ZF water-filling: {active} of {} channels active, raw rate {zf_rate:.3} bps/Hz", bf.beams.len() * m);

    let f = assemble_bs_side(&set, cfg.rho_window, cfg.beta)?;
    let dam = isi_zf_alternating(&f, p, s2, 1e-6, 200)?;
    for (name, ofdm) in [("eigen", &eigen_sinr), ("zf-wf", &zf_snr)] {
        let r = effective_rates(&dam.sinr, ofdm, &cfg);
        println!(
            "DAM {:.3} bps/Hz (x{:.6}) vs OFDM {name} {:.3} bps/Hz (x{:.6})",
            r.dam_rate, r.dam_factor, r.ofdm_rate, r.ofdm_factor
        );
    }
    Ok(())
}
