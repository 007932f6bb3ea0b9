//! Draws a two-user sparse channel and prints its paths.

use dam::channel::generate_channel_set;
use dam::SimConfig;

fn main() -> dam::Result<()> {
    let cfg = SimConfig { tx_antennas: 16, ..SimConfig::default() };
    let set = generate_channel_set(&cfg, 1)?;
    println!("noise {:.2} dBm, T = {} ns", cfg.noise_power_dbm(), cfg.t_ns);
    for ue in &set.ues {
        println!("ue {}", ue.ue_index);
        for p in &ue.paths {
            println!(
                "  tau {:7.3} ns = {:3} T + {:+.3} ns, |H|_F = {:.3e}",
                p.tau_s * 1e9,
                p.n,
                p.tau_f_s * 1e9,
                p.gain.norm()
            );
        }
    }
    Ok(())
}
