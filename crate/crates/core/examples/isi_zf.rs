//! Base-station-side DAM under fractional delays: eigen-beamforming against
//! the alternating ISI zero-forcing design.

use dam::beamforming::{assemble_bs_side, eigen_beamform_bs_side, isi_zf_alternating, power_terms};
use dam::channel::generate_channel_set;
use dam::SimConfig;

fn main() -> dam::Result<()> {
    let cfg = SimConfig { tx_antennas: 32, ..SimConfig::default() };
    let (p, s2) = (cfg.tx_power(), cfg.noise_power());
    let set = generate_channel_set(&cfg, 5)?;
    let f = assemble_bs_side(&set, cfg.rho_window, cfg.beta)?;

    let (bf, sinr) = eigen_beamform_bs_side(&f, p, s2)?;
    for (k, t) in power_terms(&f, &bf.receive, &bf.transmit).iter().enumerate() {
        println!(
            "eigen  ue {k}: desired {:.3e}, ISI {:.3e} + {:.3e}, IUI {:.3e}, SINR {:.1} dB",
            t.desired,
            t.isi_aligned,
            t.isi_cross,
            t.iui,
            10.0 * sinr[k].log10()
        );
    }

    let out = isi_zf_alternating(&f, p, s2, 1e-6, 200)?;
    for (k, g) in out.sinr.iter().enumerate() {
        println!("isi-zf ue {k}: SINR {:.1} dB", 10.0 * g.log10());
    }
    let trace = &out.state.trace;
    println!(
        "{} iterations, sum rate {:.3} -> {:.3} bps/Hz, converged: {}",
        out.state.iterations,
        trace[0],
        trace[trace.len() - 1],
        out.state.converged
    );
    Ok(())
}
