mod common;

use dam::beamforming::fractional::bs_side_kappa;
use dam::beamforming::{assemble_bs_side, eigen_beamform_bs_side, isi_zf_alternating, power_terms, PowerTerms};
use dam::channel::generate_channel_set;
use dam::numerics::ComplexVector;
use dam::SimConfig;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: usize = 40;

fn small(m_t: usize, m_r: usize, k: usize, l: usize, beta: f64) -> SimConfig {
    SimConfig {
        tx_antennas: m_t,
        rx_antennas: m_r,
        num_ues: k,
        paths_per_ue: l,
        beta,
        delay_span_samples: 8,
        rho_window: WINDOW,
        fractional_delays: true,
        ..SimConfig::default()
    }
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> ComplexVector {
    ComplexVector::from_fn(len, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn assert_close(got: &[PowerTerms], want: &[PowerTerms], label: &str) {
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        for (name, a, b) in [
            ("desired", g.desired, w.desired),
            ("isi_aligned", g.isi_aligned, w.isi_aligned),
            ("isi_cross", g.isi_cross, w.isi_cross),
            ("iui", g.iui, w.iui),
        ] {
            let scale = b.abs().max(1e-300);
            assert!((a - b).abs() <= 1e-3 * scale, "{label} ue {k} {name}: pipeline {a:e} vs time domain {b:e}");
        }
    }
}

#[test]
fn random_beamformers_match_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (seed, (m_t, k, l, beta)) in
        [(4, 1, 2, 0.25), (6, 2, 2, 0.1), (8, 2, 3, 0.25), (5, 2, 3, 0.5)].into_iter().enumerate()
    {
        let cfg = small(m_t, 2, k, l, beta);
        let channels = generate_channel_set(&cfg, seed as u64).unwrap();
        let f = assemble_bs_side(&channels, WINDOW, beta).unwrap();
        let transmit: Vec<ComplexVector> = (0..k).map(|_| random_vector(&mut rng, m_t * l)).collect();
        let receive: Vec<ComplexVector> = (0..k).map(|_| random_vector(&mut rng, 2)).collect();
        let kappa: Vec<Vec<i64>> = channels.ues.iter().map(bs_side_kappa).collect();
        let want = common::time_domain_power_terms(&channels, &kappa, &receive, &transmit, WINDOW, beta);
        let got = power_terms(&f, &receive, &transmit);
        assert_close(&got, &want, &format!("M_t={m_t} K={k} L={l} β={beta}"));
    }
}

#[test]
fn designed_beamformers_match_convolution() {
    let beta = 0.2;
    let cfg = small(8, 1, 2, 3, beta);
    let (p, s2) = (cfg.tx_power(), cfg.noise_power());
    for seed in 10..12 {
        let channels = generate_channel_set(&cfg, seed).unwrap();
        let f = assemble_bs_side(&channels, WINDOW, beta).unwrap();
        let kappa: Vec<Vec<i64>> = channels.ues.iter().map(bs_side_kappa).collect();
        let (bf, _) = eigen_beamform_bs_side(&f, p, s2).unwrap();
        let want = common::time_domain_power_terms(&channels, &kappa, &bf.receive, &bf.transmit, WINDOW, beta);
        assert_close(&power_terms(&f, &bf.receive, &bf.transmit), &want, "eigen");
        let zf = isi_zf_alternating(&f, p, s2, 1e-6, 50).unwrap();
        let b = &zf.beamformers;
        let want = common::time_domain_power_terms(&channels, &kappa, &b.receive, &b.transmit, WINDOW, beta);
        let got = power_terms(&f, &b.receive, &b.transmit);
        // zero-forced coefficients leave only round-off in the cross terms
        for (g, w) in got.iter().zip(&want) {
            assert!((g.desired - w.desired).abs() <= 1e-3 * w.desired);
            assert!((g.isi_aligned - w.isi_aligned).abs() <= 1e-3 * w.isi_aligned);
            assert!(g.isi_cross <= 1e-12 * g.desired && w.isi_cross <= 1e-12 * w.desired);
            assert!(g.iui <= 1e-12 * g.desired && w.iui <= 1e-12 * w.desired);
        }
    }
}

#[test]
fn reference_pulse_is_nyquist() {
    for beta in [0.1, 0.25, 0.5] {
        assert!((common::matched_response(0.0, beta) - 1.0).abs() < 1e-6);
        for n in 1..5 {
            assert!(common::matched_response(n as f64, beta).abs() < 1e-6);
        }
    }
}
