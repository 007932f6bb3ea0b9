//! Seeded Monte Carlo sweeps and their tabular output.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    assemble_bs_side, assemble_effective_channels, eigen_beamform_bs_side, eigen_beamform_doubleside,
    fractional::bs_side_kappa, isi_zf_alternating,
};
use crate::channel::{generate_channel_set, ChannelSet};
use crate::config::SimConfig;
use crate::delay::{choose_compensation_counts, proposition1_delays, CompensationChoice, DelayPlan};
use crate::error::{Error, Result};
use crate::ofdm::{effective_rates, ofdm_eigen, ofdm_zf_waterfill, overhead_factors};
use crate::waveform::{
    ccdf, ccdf_csv, papr_ccdf, papr_quantile_db, random_qam4, synthesize_dam_waveform, synthesize_ofdm_waveform,
    synthesize_strongest_path_waveform, RRC_SPAN_SYMBOLS,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Every split of the alignments between base station and user, eigen
    /// beamforming, integer delays.
    SeVsPowerDoubleside,
    /// Base-station-side compensation with integer delays.
    SeVsPowerBsside,
    /// Base-station-side compensation with fractional delays.
    SeVsPowerFractional,
    /// Transmit PAPR of DAM, OFDM and the strongest-path baseline.
    PaprCcdf,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] =
        [Self::SeVsPowerDoubleside, Self::SeVsPowerBsside, Self::SeVsPowerFractional, Self::PaprCcdf];

    pub fn name(self) -> &'static str {
        match self {
            Self::SeVsPowerDoubleside => "se_vs_power_doubleside",
            Self::SeVsPowerBsside => "se_vs_power_bsside",
            Self::SeVsPowerFractional => "se_vs_power_fractional",
            Self::PaprCcdf => "papr_ccdf",
        }
    }

    /// Whether the channel draws use fractional delays, or `None` when the
    /// configuration decides.
    pub fn fractional_delays(self) -> Option<bool> {
        match self {
            Self::SeVsPowerDoubleside | Self::SeVsPowerBsside => Some(false),
            Self::SeVsPowerFractional => Some(true),
            Self::PaprCcdf => None,
        }
    }

    /// Quantity reported in the `mean` column.
    pub fn metric(self) -> &'static str {
        match self {
            Self::PaprCcdf => "papr_db_at_ccdf",
            _ => "effective_se_bps_hz",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PDbm,
    TxAntennas,
    RxAntennas,
}

impl SweepVariable {
    /// `base` with the swept field set to `value`.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut cfg = base.clone();
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("antenna count {value} is not a positive integer")))
            }
        };
        match self {
            Self::PDbm => cfg.p_dbm = value,
            Self::TxAntennas => cfg.tx_antennas = count()?,
            Self::RxAntennas => cfg.rx_antennas = count()?,
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { variable: SweepVariable::PDbm, values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaprSettings {
    /// PAPR blocks per trial and scheme.
    pub blocks_per_trial: usize,
    /// Exceedance probability at which the per-trial PAPR is reported.
    pub ccdf_level: f64,
    pub thresholds_db: Vec<f64>,
}

impl Default for PaprSettings {
    fn default() -> Self {
        Self { blocks_per_trial: 10, ccdf_level: 1e-2, thresholds_db: (0..=60).map(|i| i as f64 * 0.25).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsiZfSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IsiZfSettings {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200 }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: SimConfig,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub papr: PaprSettings,
    pub isi_zf: IsiZfSettings,
}

/// On-disk form; only `kind` is required.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    kind: ExperimentKind,
    #[serde(default)]
    config: SimConfig,
    sweep: Option<Sweep>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    papr: PaprSettings,
    #[serde(default)]
    isi_zf: IsiZfSettings,
}

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 1;

impl ExperimentSpec {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut spec = Self {
            kind,
            config: SimConfig::default(),
            sweep: Sweep::default(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            out: None,
            papr: PaprSettings::default(),
            isi_zf: IsiZfSettings::default(),
        };
        if kind == ExperimentKind::PaprCcdf {
            spec.sweep.values = vec![spec.config.p_dbm];
        }
        spec
    }

    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::Parse { path: String::new(), message: e.to_string() })?;
        let file: SpecFile = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Parse { path: e.path().to_string(), message: e.inner().message().to_string() })?;
        let mut spec = Self::new(file.kind);
        spec.config = file.config;
        if let Some(s) = file.sweep {
            spec.sweep = s;
        } else if file.kind == ExperimentKind::PaprCcdf {
            spec.sweep.values = vec![spec.config.p_dbm];
        }
        spec.trials = file.trials.unwrap_or(DEFAULT_TRIALS);
        spec.seed = file.seed.unwrap_or(DEFAULT_SEED);
        spec.out = file.out;
        spec.papr = file.papr;
        spec.isi_zf = file.isi_zf;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let parse = |path: &str, message: String| Error::Parse { path: path.into(), message };
        self.config.check().map_err(|(f, m)| parse(&format!("config.{f}"), m))?;
        if self.sweep.values.is_empty() {
            return Err(parse("sweep.values", "the sweep grid is empty".into()));
        }
        for &v in &self.sweep.values {
            if !v.is_finite() {
                return Err(parse("sweep.values", format!("non-finite sweep value {v}")));
            }
            self.sweep.variable.apply(&self.config, v).map_err(|e| parse("sweep.values", e.to_string()))?;
        }
        if self.trials < 1 {
            return Err(parse("trials", "must be at least 1".into()));
        }
        if self.papr.blocks_per_trial < 1 {
            return Err(parse("papr.blocks_per_trial", "must be at least 1".into()));
        }
        if !(self.papr.ccdf_level > 0.0 && self.papr.ccdf_level < 1.0) {
            return Err(parse("papr.ccdf_level", format!("must lie in (0, 1), got {}", self.papr.ccdf_level)));
        }
        if self.kind == ExperimentKind::PaprCcdf && self.config.oversample < 4 {
            return Err(parse("config.oversample", "PAPR needs an oversampling factor of at least 4".into()));
        }
        if !(self.isi_zf.tol >= 0.0) {
            return Err(parse("isi_zf.tol", "must be non-negative".into()));
        }
        Ok(())
    }

    /// Delay-split choice for the base configuration.
    pub fn compensation_choice(&self) -> Result<CompensationChoice> {
        let c = &self.config;
        choose_compensation_counts(c.tx_antennas, c.rx_antennas, c.paths_per_ue, c.prefer_ue_side)
    }

    /// Configuration at one sweep point, with the kind's delay model.
    pub fn point_config(&self, value: f64) -> Result<SimConfig> {
        let mut cfg = self.sweep.variable.apply(&self.config, value)?;
        if let Some(f) = self.kind.fractional_delays() {
            cfg.fractional_delays = f;
        }
        Ok(cfg)
    }

    /// Scheme labels in table order.
    pub fn schemes(&self) -> Vec<String> {
        match self.kind {
            ExperimentKind::SeVsPowerDoubleside => {
                let l = self.config.paths_per_ue;
                let mut v: Vec<String> = (1..=l).rev().map(|i| format!("dam_eigen_i{i}_r{}", l + 1 - i)).collect();
                v.push("ofdm_eigen".into());
                v
            }
            ExperimentKind::SeVsPowerBsside => {
                ["dam_isi_zf", "dam_eigen", "ofdm_zf_wf", "ofdm_eigen"].map(String::from).to_vec()
            }
            ExperimentKind::SeVsPowerFractional => ["dam_isi_zf", "dam_eigen", "ofdm_zf_wf"].map(String::from).to_vec(),
            ExperimentKind::PaprCcdf => ["dam", "ofdm", "strongest_path"].map(String::from).to_vec(),
        }
    }
}

/// Reads and validates a TOML experiment file.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    ExperimentSpec::from_toml(&text)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at sweep index `sweep_index`, independent of the
/// execution order.
pub fn trial_seed(base_seed: u64, trial: usize, sweep_index: usize) -> u64 {
    let key = splitmix64(((sweep_index as u64) << 32) ^ trial as u64);
    splitmix64(base_seed ^ key)
}

/// Outcome of one scheme on one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeValue {
    Value(f64),
    Infeasible,
}

/// All schemes of one trial, in [`ExperimentSpec::schemes`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub values: Vec<SchemeValue>,
    /// Linear PAPR samples per scheme (PAPR experiments only).
    pub papr: Vec<Vec<f64>>,
}

fn infeasible_ok(r: Result<f64>) -> Result<SchemeValue> {
    match r {
        Ok(v) => Ok(SchemeValue::Value(v)),
        Err(Error::Infeasible(_)) => Ok(SchemeValue::Infeasible),
        Err(e) => Err(e),
    }
}

fn dam_rate(cfg: &SimConfig, sinr: &[f64]) -> f64 {
    let (dam, _) = overhead_factors(cfg);
    dam * sinr.iter().map(|g| (1.0 + g).log2()).sum::<f64>()
}

fn ofdm_rate(cfg: &SimConfig, sinr: &[Vec<f64>]) -> f64 {
    effective_rates(&[], sinr, cfg).ofdm_rate
}

/// Plans placing `pre_count` alignments at the base station for every user.
pub fn split_plans(channels: &ChannelSet, pre_count: usize) -> Result<Vec<DelayPlan>> {
    channels
        .ues
        .iter()
        .map(|u| {
            let l = u.num_paths();
            proposition1_delays(&u.integer_delays(), pre_count, l + 1 - pre_count)
        })
        .collect()
}

/// Evaluates every scheme of `spec.kind` on one channel draw.
pub fn evaluate_trial(spec: &ExperimentSpec, cfg: &SimConfig, seed: u64) -> Result<TrialOutcome> {
    let channels = generate_channel_set(cfg, seed)?;
    let (p, s2) = (cfg.tx_power(), cfg.noise_power());
    let m = cfg.subcarriers;
    let mut values = Vec::new();
    let mut papr = Vec::new();
    match spec.kind {
        ExperimentKind::SeVsPowerDoubleside => {
            for pre in (1..=cfg.paths_per_ue).rev() {
                let plans = split_plans(&channels, pre)?;
                let tensor = assemble_effective_channels(&channels, &plans)?;
                let (_, sinr) = eigen_beamform_doubleside(&tensor, p, s2)?;
                values.push(SchemeValue::Value(dam_rate(cfg, &sinr)));
            }
            let (_, sinr) = ofdm_eigen(&channels, m, p, s2)?;
            values.push(SchemeValue::Value(ofdm_rate(cfg, &sinr)));
        }
        ExperimentKind::SeVsPowerBsside | ExperimentKind::SeVsPowerFractional => {
            let f = assemble_bs_side(&channels, cfg.rho_window, cfg.beta)?;
            values.push(infeasible_ok(
                isi_zf_alternating(&f, p, s2, spec.isi_zf.tol, spec.isi_zf.max_iter).map(|o| dam_rate(cfg, &o.sinr)),
            )?);
            let (_, sinr) = eigen_beamform_bs_side(&f, p, s2)?;
            values.push(SchemeValue::Value(dam_rate(cfg, &sinr)));
            let grid = channels.on_grid();
            values.push(infeasible_ok(ofdm_zf_waterfill(&grid, m, p, s2).map(|(_, snr, _)| ofdm_rate(cfg, &snr)))?);
            if spec.kind == ExperimentKind::SeVsPowerBsside {
                let (_, sinr) = ofdm_eigen(&grid, m, p, s2)?;
                values.push(SchemeValue::Value(ofdm_rate(cfg, &sinr)));
            }
        }
        ExperimentKind::PaprCcdf => {
            papr = papr_trial(spec, cfg, &channels, seed)?;
            values = papr.iter().map(|s| SchemeValue::Value(papr_quantile_db(s, spec.papr.ccdf_level))).collect();
        }
    }
    Ok(TrialOutcome { values, papr })
}

fn papr_trial(spec: &ExperimentSpec, cfg: &SimConfig, channels: &ChannelSet, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x005e_ed0f_5ea5));
    let (p, s2) = (cfg.tx_power(), cfg.noise_power());
    let (os, beta) = (cfg.oversample, cfg.beta);
    let blocks = spec.papr.blocks_per_trial;
    let sym_len = cfg.subcarriers + cfg.g_cp;
    let span = RRC_SPAN_SYMBOLS;
    let k_count = channels.num_ues();

    let f = assemble_bs_side(channels, cfg.rho_window, beta)?;
    let (bf, _) = eigen_beamform_bs_side(&f, p, s2)?;
    let kappa: Vec<Vec<i64>> = channels.ues.iter().map(bs_side_kappa).collect();
    let k_max = kappa.iter().flatten().copied().max().unwrap_or(0) as usize;
    let n = blocks * sym_len + k_max + 2 * span + 1;
    let symbols: Vec<Vec<Complex64>> = (0..k_count).map(|_| random_qam4(&mut rng, n)).collect();
    let dam = synthesize_dam_waveform(&symbols, &bf, &kappa, os, beta, sym_len)?;
    let dam = take_blocks(papr_ccdf(&dam, sym_len, &[])?.papr, blocks, channels.tx_antennas);

    let strongest = synthesize_strongest_path_waveform(&symbols, channels, p, os, beta, sym_len)?;
    let strongest = take_blocks(papr_ccdf(&strongest, sym_len, &[])?.papr, blocks, channels.tx_antennas);

    let (obf, _) = ofdm_eigen(&channels.on_grid(), cfg.subcarriers, p, s2)?;
    let d_count = blocks + 2 + (span * os).div_ceil(sym_len * os);
    let ofdm_symbols: Vec<Vec<Vec<Complex64>>> =
        (0..k_count).map(|_| (0..d_count).map(|_| random_qam4(&mut rng, cfg.subcarriers)).collect()).collect();
    let ofdm = synthesize_ofdm_waveform(&ofdm_symbols, &obf, cfg.g_cp, os, beta)?;
    let ofdm = take_blocks(papr_ccdf(&ofdm, sym_len, &[])?.papr, blocks, channels.tx_antennas);
    Ok(vec![dam, ofdm, strongest])
}

fn take_blocks(mut papr: Vec<f64>, blocks: usize, antennas: usize) -> Vec<f64> {
    papr.truncate(blocks * antennas);
    papr
}

/// One line of the result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub scheme: String,
    /// `NaN` (`null` in JSON) when the scheme is infeasible.
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub feasible: bool,
    /// Per-trial metric values in trial order.
    pub samples: Vec<f64>,
}

/// Aggregated results plus the resolved inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema_version: u32,
    pub code_version: String,
    pub kind: ExperimentKind,
    pub metric: String,
    pub config: SimConfig,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub papr: Option<PaprSettings>,
    pub isi_zf: IsiZfSettings,
    pub rows: Vec<ResultRow>,
    /// Pooled CCDF per scheme over all trials, PAPR experiments only.
    #[serde(skip)]
    pub ccdf: Option<Vec<Vec<f64>>>,
}

impl ResultTable {
    pub fn row(&self, sweep_value: f64, scheme: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.scheme == scheme)
    }

    /// `sweep_value,scheme,mean,stderr,trials`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep_value,scheme,mean,stderr,trials\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.sweep_value, r.scheme, r.mean, r.stderr, r.trials));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CCDF CSV of a PAPR experiment.
    pub fn ccdf_csv(&self) -> Option<String> {
        let c = self.ccdf.as_ref()?;
        let th = &self.papr.as_ref()?.thresholds_db;
        Some(ccdf_csv(th, &c[0], &c[1], &c[2]))
    }

    /// Writes `<out>`, the JSON sidecar next to it and, for PAPR
    /// experiments, `<stem>_ccdf.csv`. Returns the written paths.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut written = vec![out.to_path_buf()];
        std::fs::write(out, self.to_csv())?;
        let json = out.with_extension("json");
        std::fs::write(&json, self.to_json()?)?;
        written.push(json);
        if let Some(csv) = self.ccdf_csv() {
            let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let path = out.with_file_name(format!("{stem}_ccdf.csv"));
            std::fs::write(&path, csv)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every `(sweep point, trial)` pair on the current rayon pool and
/// aggregates in index order, so the table does not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let schemes = spec.schemes();
    let jobs: Vec<(usize, usize)> =
        (0..spec.sweep.values.len()).flat_map(|s| (0..spec.trials).map(move |t| (s, t))).collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(s, t)| {
            let cfg = spec.point_config(spec.sweep.values[s])?;
            evaluate_trial(spec, &cfg, trial_seed(spec.seed, t, s))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(spec.sweep.values.len() * schemes.len());
    for (s, &value) in spec.sweep.values.iter().enumerate() {
        let point = &outcomes[s * spec.trials..(s + 1) * spec.trials];
        for (j, name) in schemes.iter().enumerate() {
            let samples: Vec<f64> = point
                .iter()
                .filter_map(|o| match o.values[j] {
                    SchemeValue::Value(v) => Some(v),
                    SchemeValue::Infeasible => None,
                })
                .collect();
            let feasible = samples.len() == spec.trials;
            let (mean, stderr) = if feasible { mean_stderr(&samples) } else { (f64::NAN, f64::NAN) };
            rows.push(ResultRow {
                sweep_value: value,
                scheme: name.clone(),
                mean,
                stderr,
                trials: if feasible { samples.len() } else { 0 },
                feasible,
                samples: if feasible { samples } else { Vec::new() },
            });
        }
    }

    let is_papr = spec.kind == ExperimentKind::PaprCcdf;
    let ccdf = is_papr.then(|| {
        (0..schemes.len())
            .map(|j| {
                let pooled: Vec<f64> = outcomes.iter().flat_map(|o| o.papr[j].iter().copied()).collect();
                ccdf(&pooled, &spec.papr.thresholds_db)
            })
            .collect()
    });
    Ok(ResultTable {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: spec.kind,
        metric: spec.kind.metric().to_string(),
        config: spec.config.clone(),
        sweep: spec.sweep.clone(),
        trials: spec.trials,
        seed: spec.seed,
        papr: is_papr.then(|| spec.papr.clone()),
        isi_zf: spec.isi_zf.clone(),
        rows,
        ccdf,
    })
}
