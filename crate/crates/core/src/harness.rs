//! Monte-Carlo evaluation: error-probability sweeps over SNR, experiment
//! presets and CSV / manifest / gnuplot emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{add_awgn, draw_cir, NoiseSpec};
use crate::datagen::{
    bandwidth_seconds, collect_training_set_datcol, gen_training_set, preamble_for, received_window,
    storage_bytes, ChannelParams, CollectionStats, Extractor, TrainingSet,
};
use crate::elm::{estimate_sto, init_model, train, ElmModel, InputKind, TrainReport, HIDDEN_FACTOR};
use crate::error::{invalid, Error, Result};
use crate::labels::{LabelKind, LabelStrategy};
use crate::rng::{derive_seed, label_tag, stream_rng};
use crate::signal::{OfdmConfig, DEFAULT_ZC_ROOT};
use crate::sync_metrics::{argmax_timing, is_correct, isi_free_region};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SYNCFORGE_THREADS";

/// Link rate used for the bandwidth column of the resource table.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Elm,
    ClassicArgmax,
}

/// Test-time carrier frequency offset, in subcarrier spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CfoSpec {
    Constant { value: f64 },
    /// Uniform on `[-max, max]`.
    Uniform { max: f64 },
}

impl Default for CfoSpec {
    fn default() -> Self {
        CfoSpec::Constant { value: 0.0 }
    }
}

impl CfoSpec {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CfoSpec::Constant { value } => value,
            CfoSpec::Uniform { max } => {
                if max == 0.0 {
                    0.0
                } else {
                    rng.random_range(-max..=max)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CfoSpec::Constant { value } => value.is_finite(),
            CfoSpec::Uniform { max } => max.is_finite() && max >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid CFO specification {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cfg: OfdmConfig,
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    pub tau_p_test: usize,
    pub eta: f64,
    pub strategy: LabelStrategy,
    pub extractor: Extractor,
    pub method: Method,
    pub seed: u64,
    pub test_cfo: CfoSpec,
    /// Training-set size for the ELM.
    pub n_t: usize,
    /// Maximum delay seen by the fixed-delay label designs and by collection.
    pub tau_p_train: usize,
    /// SNR of simulated over-the-air collection.
    pub collect_snr_db: f64,
    pub ridge: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let cfg = OfdmConfig::default();
        Self {
            cfg,
            snr_grid_db: default_snr_grid(),
            trials_per_point: 10_000,
            tau_p_test: 20,
            eta: 0.2,
            strategy: LabelStrategy::flexible(26, &cfg).expect("default bound is valid"),
            extractor: Extractor::Sc,
            method: Method::Elm,
            seed: 0,
            test_cfo: CfoSpec::default(),
            n_t: 20_000,
            tau_p_train: 20,
            collect_snr_db: 20.0,
            ridge: 0.0,
        }
    }
}

pub fn default_snr_grid() -> Vec<f64> {
    (0..=10).map(|i| 2.0 * i as f64).collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.trials_per_point == 0 {
            return Err(invalid("trials_per_point must be at least 1"));
        }
        if self.tau_p_test >= self.cfg.cp_len {
            return Err(invalid(format!(
                "tau_p_test={} must be shorter than L_c={}",
                self.tau_p_test, self.cfg.cp_len
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(invalid("SNR grid contains NaN"));
        }
        if self.extractor == Extractor::Minn && self.cfg.n % 4 != 0 {
            return Err(invalid(format!("Minn preamble needs N divisible by 4, got {}", self.cfg.n)));
        }
        self.test_cfo.validate()?;
        if self.method == Method::ClassicArgmax && self.extractor == Extractor::RawSamples {
            return Err(invalid("raw samples have no classic argmax estimator"));
        }
        if self.method == Method::Elm {
            if self.n_t == 0 {
                return Err(invalid("n_t must be positive for ELM curves"));
            }
            match self.strategy.kind {
                LabelKind::LooseConstraint => {
                    LabelStrategy::loose(self.strategy.loose.unwrap_or(0), &self.cfg)?;
                }
                LabelKind::FlexibleConstraint => {
                    LabelStrategy::flexible(self.strategy.loose.unwrap_or(0), &self.cfg)?;
                }
                _ => {
                    if self.tau_p_train >= self.cfg.cp_len {
                        return Err(invalid(format!(
                            "tau_p_train={} must be shorter than L_c={}",
                            self.tau_p_train, self.cfg.cp_len
                        )));
                    }
                }
            }
            if self.strategy.kind == LabelKind::Estimated && self.extractor != Extractor::Sc {
                return Err(invalid("collected labels are only defined for S&C features"));
            }
            if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
                return Err(invalid(format!("ridge must be finite and >= 0, got {}", self.ridge)));
            }
        }
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams { tau_p_train: self.tau_p_train, eta: self.eta }
    }

    /// Identifies the trained model; curves with equal keys share one model.
    pub fn training_key(&self) -> String {
        let loose = self.strategy.loose.map(|l| l.to_string()).unwrap_or_else(|| "-".into());
        let mut key = format!(
            "{}:{}:N{}:Lc{}:eta{}:nt{}:ridge{}",
            self.strategy.kind.name(),
            loose,
            self.cfg.n,
            self.cfg.cp_len,
            self.eta,
            self.n_t,
            self.ridge
        );
        key.push_str(&format!(":{}", self.extractor.name()));
        if !matches!(self.strategy.kind, LabelKind::LooseConstraint | LabelKind::FlexibleConstraint) {
            key.push_str(&format!(":tp{}", self.tau_p_train));
        }
        if self.strategy.kind == LabelKind::Estimated {
            key.push_str(&format!(":snr{}", self.collect_snr_db));
        }
        key
    }
}

/// Model plus how it was obtained.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: ElmModel,
    pub report: TrainReport,
    /// Present for collected sets.
    pub collection: Option<CollectionStats>,
    pub key: String,
}

/// Produces the training set an ELM curve calls for.
pub fn training_set_for(exp: &ExperimentConfig) -> Result<(TrainingSet, Option<CollectionStats>)> {
    exp.validate()?;
    let key = exp.training_key();
    let data_seed = derive_seed(exp.seed, &[label_tag("data"), label_tag(&key)]);
    let channel = exp.channel_params();
    if exp.strategy.kind == LabelKind::Estimated {
        let (set, stats) = collect_training_set_datcol(&exp.cfg, &channel, exp.n_t, exp.collect_snr_db, data_seed)?;
        Ok((set, Some(stats)))
    } else {
        let set = gen_training_set(&exp.strategy, &exp.cfg, &channel, exp.n_t, exp.extractor, data_seed)?;
        Ok((set, None))
    }
}

pub fn input_kind(extractor: Extractor) -> InputKind {
    match extractor {
        Extractor::RawSamples => InputKind::Raw,
        Extractor::Sc | Extractor::Minn => InputKind::Metric,
    }
}

/// Generates (or collects) the training set and fits an ELM with
/// `N_h = 8K`.
pub fn train_model(exp: &ExperimentConfig) -> Result<TrainedModel> {
    let (set, collection) = training_set_for(exp)?;
    let key = exp.training_key();
    let k = exp.cfg.metric_len();
    let mut init_rng = stream_rng(exp.seed, &[label_tag("init"), label_tag(&key)]);
    let mut model = init_model(k, HIDDEN_FACTOR * k, input_kind(exp.extractor), &mut init_rng)?;
    let report = train(&mut model, &set.features, &set.labels, set.len(), exp.ridge)?;
    Ok(TrainedModel { model, report, collection, key })
}

/// What produces the estimate in a trial.
#[derive(Debug, Clone, Copy)]
pub enum Estimator<'a> {
    Classic,
    Elm(&'a ElmModel),
}

fn noise_window<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let sd = 0.5f64.sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect()
}

/// One synchronization attempt; `true` if the estimate lands in the
/// ISI-free region. `snr_db = -inf` observes unit-power noise only.
pub fn run_trial<R: Rng + ?Sized>(
    estimator: Estimator<'_>,
    exp: &ExperimentConfig,
    snr_db: f64,
    rng: &mut R,
) -> Result<bool> {
    let preamble = preamble_for(&exp.cfg, exp.extractor, DEFAULT_ZC_ROOT)?;
    trial_with(estimator, exp, &preamble, snr_db, rng)
}

fn trial_with<R: Rng + ?Sized>(
    estimator: Estimator<'_>,
    exp: &ExperimentConfig,
    preamble: &crate::signal::FreqSymbol,
    snr_db: f64,
    rng: &mut R,
) -> Result<bool> {
    let cfg = &exp.cfg;
    let tau = rng.random_range(0..cfg.n);
    let cfo = exp.test_cfo.draw(rng);
    let cir = draw_cir(exp.tau_p_test, exp.eta, cfg.cp_len, rng)?.with_offsets(tau, cfo);
    let clean = received_window(cfg, preamble, &cir, rng)?;
    let window = if snr_db == f64::NEG_INFINITY {
        noise_window(clean.len(), rng)
    } else {
        add_awgn(&clean, &NoiseSpec::from_snr_db(snr_db, cfg.sigma2_d), rng)
    };
    let tau_hat = match estimator {
        Estimator::Classic => argmax_timing(&exp.extractor.raw_features(&window, cfg)?),
        Estimator::Elm(model) => {
            let feat = exp.extractor.features(&window, cfg)?;
            estimate_sto(model, &feat.values)?
        }
    };
    Ok(is_correct(tau_hat, &isi_free_region(tau, exp.tau_p_test, cfg.cp_len)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub errors: u64,
    pub trials: u64,
    pub p_e: f64,
}

impl SweepRow {
    /// Binomial standard deviation of `p_e`.
    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.p_e, self.trials)
    }
}

pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row_at(&self, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,errors,trials,p_e\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.snr_db, r.errors, r.trials, r.p_e);
        }
        out
    }
}

/// Trials at each grid SNR. Trial `i` at grid index `s` always draws from
/// the stream keyed by `(seed, s, i)`, so curves sharing a seed see the same
/// channels and noise and the result does not depend on the worker count.
pub fn sweep_snr(name: &str, exp: &ExperimentConfig, estimator: Estimator<'_>) -> Result<SweepResult> {
    exp.validate()?;
    if let Estimator::Elm(model) = estimator {
        if !model.is_trained() {
            return Err(Error::State("ELM curve needs a trained model".into()));
        }
        if model.k != exp.cfg.metric_len() || model.input_kind != input_kind(exp.extractor) {
            return Err(invalid(format!(
                "model (K={}, {:?}) does not match the experiment (K={}, {})",
                model.k,
                model.input_kind,
                exp.cfg.metric_len(),
                exp.extractor.name()
            )));
        }
    }
    let preamble = preamble_for(&exp.cfg, exp.extractor, DEFAULT_ZC_ROOT)?;
    let trial_tag = label_tag("trial");
    let mut rows = Vec::with_capacity(exp.snr_grid_db.len());
    for (s, &snr) in exp.snr_grid_db.iter().enumerate() {
        let errors = (0..exp.trials_per_point)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(exp.seed, &[trial_tag, s as u64, i as u64]);
                trial_with(estimator, exp, &preamble, snr, &mut rng).map(|ok| u64::from(!ok))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        let trials = exp.trials_per_point as u64;
        rows.push(SweepRow { snr_db: snr, errors, trials, p_e: errors as f64 / trials as f64 });
    }
    Ok(SweepResult { name: name.to_string(), config: exp.clone(), rows })
}

/// Worker pool sized from `SYNCFORGE_THREADS` (rayon's default otherwise).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::State(format!("cannot start worker pool: {e}")))
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Table3,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Table3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Table3 => "table3",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Preset::Fig2a => "Label accuracy (tau_P,test = tau_P,train = 20)",
            Preset::Fig2b => "Training-data completeness (tau_P,test = 24)",
            Preset::Fig3 => "Generalization over tau_P,test",
            Preset::Fig4 => "Feature extraction",
            Preset::Fig5 => "CP length",
            Preset::Fig6 => "Symbol size",
            Preset::Fig7 => "Decay factor",
            Preset::Table3 => "Storage and bandwidth",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                invalid(format!("unknown preset {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

/// Knobs shared by every curve of a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetOptions {
    pub seed: u64,
    pub trials_per_point: usize,
    pub n_t: usize,
    pub snr_grid_db: Vec<f64>,
    pub ridge: f64,
    pub test_cfo: CfoSpec,
    pub bandwidth_hz: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        let base = ExperimentConfig::default();
        Self {
            seed: base.seed,
            trials_per_point: base.trials_per_point,
            n_t: base.n_t,
            snr_grid_db: base.snr_grid_db,
            ridge: base.ridge,
            test_cfo: base.test_cfo,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
        }
    }
}

impl PresetOptions {
    /// Large training-set size for full-scale runs.
    pub const FULL_SCALE_N_T: usize = 100_000;
}

/// A named curve inside a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub exp: ExperimentConfig,
}

fn curve(name: impl Into<String>, exp: ExperimentConfig) -> Curve {
    Curve { name: name.into(), exp }
}

/// Default loose bound for a CP length: 26 at L_c = 32, 13 at L_c = 16.
pub fn default_loose_bound(cp_len: usize) -> usize {
    (cp_len * 13).div_ceil(16)
}

/// Default test and fixed-label training delay: 20 at L_c = 32, 10 at L_c = 16.
pub fn default_tau_p(cp_len: usize) -> usize {
    (cp_len * 5) / 8
}

fn proposed(base: &ExperimentConfig, tag: &str) -> Result<Vec<Curve>> {
    let l = default_loose_bound(base.cfg.cp_len);
    let lc = ExperimentConfig { strategy: LabelStrategy::loose(l, &base.cfg)?, ..base.clone() };
    let fc = ExperimentConfig { strategy: LabelStrategy::flexible(l, &base.cfg)?, ..base.clone() };
    let sep = if tag.is_empty() { "" } else { "_" };
    Ok(vec![curve(format!("lc{sep}{tag}"), lc), curve(format!("fc{sep}{tag}"), fc)])
}

fn corr(base: &ExperimentConfig, tag: &str) -> Curve {
    let sep = if tag.is_empty() { "" } else { "_" };
    curve(format!("corr{sep}{tag}"), ExperimentConfig { method: Method::ClassicArgmax, ..base.clone() })
}

fn with_kind(base: &ExperimentConfig, kind: LabelKind) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig { strategy: LabelStrategy::fixed(kind)?, ..base.clone() })
}

fn base_config(opts: &PresetOptions, cfg: OfdmConfig) -> ExperimentConfig {
    ExperimentConfig {
        cfg,
        snr_grid_db: opts.snr_grid_db.clone(),
        trials_per_point: opts.trials_per_point,
        tau_p_test: default_tau_p(cfg.cp_len),
        tau_p_train: default_tau_p(cfg.cp_len),
        seed: opts.seed,
        test_cfo: opts.test_cfo,
        n_t: opts.n_t,
        ridge: opts.ridge,
        ..ExperimentConfig::default()
    }
}

/// Curves making up a figure preset (empty for `table3`).
pub fn preset_curves(preset: Preset, opts: &PresetOptions) -> Result<Vec<Curve>> {
    let default_cfg = OfdmConfig::default();
    let base = base_config(opts, default_cfg);
    let mut curves = Vec::new();
    match preset {
        Preset::Fig2a | Preset::Fig2b => {
            let test = ExperimentConfig {
                tau_p_test: if preset == Preset::Fig2a { 20 } else { 24 },
                ..base.clone()
            };
            curves.push(corr(&test, ""));
            curves.push(curve("datcol", with_kind(&test, LabelKind::Estimated)?));
            curves.push(curve("ref_region", with_kind(&test, LabelKind::Region)?));
            curves.extend(proposed(&test, "")?);
        }
        Preset::Fig3 => {
            for tp in [22, 24] {
                let test = ExperimentConfig { tau_p_test: tp, ..base.clone() };
                let tag = format!("tp{tp}");
                curves.push(corr(&test, &tag));
                curves.push(curve(format!("ref_region_{tag}"), with_kind(&test, LabelKind::Region)?));
                curves.extend(proposed(&test, &tag)?);
            }
        }
        Preset::Fig4 => {
            curves.push(corr(&base, ""));
            curves.extend(proposed(&base, "sc")?);
            let minn = ExperimentConfig { extractor: Extractor::Minn, ..base.clone() };
            curves.extend(proposed(&minn, "minn")?);
            let raw = ExperimentConfig { extractor: Extractor::RawSamples, ..base.clone() };
            let l = default_loose_bound(raw.cfg.cp_len);
            curves.push(curve(
                "ds_learn",
                ExperimentConfig { strategy: LabelStrategy::flexible(l, &raw.cfg)?, ..raw },
            ));
        }
        Preset::Fig5 => {
            for lc in [16, 32] {
                let b = base_config(opts, OfdmConfig::new(default_cfg.n, lc)?);
                let tag = format!("lc{lc}");
                curves.push(corr(&b, &tag));
                curves.extend(proposed(&b, &tag)?);
            }
        }
        Preset::Fig6 => {
            for n in [128, 256] {
                let b = base_config(opts, OfdmConfig::new(n, default_cfg.cp_len)?);
                let tag = format!("n{n}");
                curves.push(corr(&b, &tag));
                curves.extend(proposed(&b, &tag)?);
            }
        }
        Preset::Fig7 => {
            for eta in [0.05, 0.20, 0.35] {
                let b = ExperimentConfig { eta, ..base.clone() };
                let tag = format!("eta{:03}", (eta * 100.0f64).round() as u32);
                curves.push(corr(&b, &tag));
                curves.extend(proposed(&b, &tag)?);
            }
        }
        Preset::Table3 => {}
    }
    Ok(curves)
}

/// One row of the resource table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub strategy: String,
    pub stats: CollectionStats,
    pub storage_mb: f64,
    pub bandwidth_s: f64,
}

/// Storage and transmission cost of collected versus generated data.
pub fn resource_table(opts: &PresetOptions) -> Result<Vec<ResourceRow>> {
    let exp = ExperimentConfig {
        strategy: LabelStrategy::fixed(LabelKind::Estimated)?,
        ..base_config(opts, OfdmConfig::default())
    };
    exp.validate()?;
    let (_, stats) = training_set_for(&exp)?;
    let stats = stats.expect("collected set carries statistics");
    let generated = CollectionStats::generated(exp.n_t as u64, &exp.cfg);
    let datcol_bytes = storage_bytes(&stats);
    Ok(vec![
        ResourceRow {
            strategy: "datcol".into(),
            stats,
            storage_mb: datcol_bytes as f64 / 1e6,
            bandwidth_s: bandwidth_seconds(datcol_bytes as f64, opts.bandwidth_hz)?,
        },
        ResourceRow {
            strategy: "lc_fc".into(),
            stats: generated,
            storage_mb: storage_bytes(&generated) as f64 / 1e6,
            // Generated locally: nothing crosses the link.
            bandwidth_s: 0.0,
        },
    ])
}

pub fn resource_csv(rows: &[ResourceRow]) -> String {
    let mut out = String::from("strategy,n_effective,p_label,n_raw,bytes_per_record,storage_mb,bandwidth_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.strategy,
            r.stats.n_effective,
            r.stats.p_label,
            r.stats.n_raw,
            r.stats.bytes_per_record,
            r.storage_mb,
            r.bandwidth_s
        );
    }
    out
}

/// gnuplot script drawing every sweep on a log-scale P_e axis.
pub fn emit_plot_script(sweeps: &[(String, PathBuf)], title: &str) -> Result<String> {
    if sweeps.is_empty() {
        return Err(invalid("plot script needs at least one sweep"));
    }
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key top right\n");
    s.push_str("set logscale y\n");
    s.push_str("set format y '10^{%L}'\n");
    s.push_str("set xlabel 'SNR (dB)'\n");
    s.push_str("set ylabel 'Error probability of TS'\n");
    let _ = writeln!(s, "set title '{}'", title.replace('\'', "''"));
    s.push_str("set grid\n");
    s.push_str("plot \\\n");
    for (i, (name, path)) in sweeps.iter().enumerate() {
        let sep = if i + 1 == sweeps.len() { "\n" } else { ", \\\n" };
        let _ = write!(
            s,
            "  '{}' using 1:4 every ::1 with linespoints title '{}'{sep}",
            path.display().to_string().replace('\'', "''"),
            name.replace('\'', "''")
        );
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
struct ManifestCurve {
    name: String,
    csv: String,
    config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ManifestModel>,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestModel {
    key: String,
    report: TrainReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    collection: Option<CollectionStats>,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    preset: Preset,
    title: &'static str,
    options: PresetOptions,
    curves: Vec<ManifestCurve>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    resources: Vec<ResourceRow>,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub sweeps: Vec<SweepResult>,
    pub resources: Vec<ResourceRow>,
    pub files: Vec<PathBuf>,
}

/// Trains every model the preset needs, runs its sweeps and writes
/// `<name>.csv` per curve, `manifest.json` and `plot.gp` into `out_dir`.
pub fn run_experiment(preset: Preset, opts: &PresetOptions, out_dir: &Path) -> Result<ExperimentOutput> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut manifest = Manifest {
        tool: "syncforge",
        version: env!("CARGO_PKG_VERSION"),
        preset,
        title: preset.title(),
        options: opts.clone(),
        curves: Vec::new(),
        resources: Vec::new(),
    };

    if preset == Preset::Table3 {
        let rows = resource_table(opts)?;
        let path = out_dir.join("table3.csv");
        fs::write(&path, resource_csv(&rows))?;
        files.push(path);
        manifest.resources = rows.clone();
        files.push(write_manifest(&manifest, out_dir)?);
        return Ok(ExperimentOutput { sweeps: Vec::new(), resources: rows, files });
    }

    let curves = preset_curves(preset, opts)?;
    for c in &curves {
        c.exp.validate()?;
    }
    // Models keyed by training spec so shared configurations train once.
    let mut models: BTreeMap<String, TrainedModel> = BTreeMap::new();
    for c in curves.iter().filter(|c| c.exp.method == Method::Elm) {
        let key = c.exp.training_key();
        if !models.contains_key(&key) {
            models.insert(key.clone(), train_model(&c.exp)?);
        }
    }

    let mut sweeps = Vec::new();
    let mut plot_entries = Vec::new();
    for c in &curves {
        let (estimator, model_info) = match c.exp.method {
            Method::ClassicArgmax => (Estimator::Classic, None),
            Method::Elm => {
                let tm = &models[&c.exp.training_key()];
                let info = ManifestModel { key: tm.key.clone(), report: tm.report, collection: tm.collection };
                (Estimator::Elm(&tm.model), Some(info))
            }
        };
        let sweep = sweep_snr(&c.name, &c.exp, estimator)?;
        let file = format!("{}.csv", c.name);
        let path = out_dir.join(&file);
        fs::write(&path, sweep.to_csv())?;
        files.push(path);
        plot_entries.push((c.name.clone(), PathBuf::from(&file)));
        manifest.curves.push(ManifestCurve { name: c.name.clone(), csv: file, config: c.exp.clone(), model: model_info });
        sweeps.push(sweep);
    }

    let plot = out_dir.join("plot.gp");
    fs::write(&plot, emit_plot_script(&plot_entries, preset.title())?)?;
    files.push(plot);
    files.push(write_manifest(&manifest, out_dir)?);
    Ok(ExperimentOutput { sweeps, resources: Vec::new(), files })
}

fn write_manifest(manifest: &Manifest, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}
