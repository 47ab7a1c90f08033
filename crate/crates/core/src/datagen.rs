//! Training-set production: computer-aided generation from known channels,
//! simulated over-the-air collection labelled by a classic estimator, and
//! the storage/bandwidth bookkeeping that separates the two.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binfmt::{put_f64s, put_u32, put_u64, read_all, Cursor};
use crate::channel::{add_awgn, apply_channel, draw_cir, ChannelRealization, NoiseSpec};
use crate::error::{invalid, Error, Result};
use crate::labels::{
    label_flexible, label_from_estimate, label_loose, label_midpoint, label_one_hot, label_region,
    LabelKind, LabelStrategy, LabelVector,
};
use crate::rng::{stream_rng, SimRng};
use crate::signal::{build_frame, FreqSymbol, OfdmConfig, PreambleKind, DEFAULT_ZC_ROOT};
use crate::sync_metrics::{
    argmax_timing, isi_free_region, minn_metric, normalize_l2, sc_metric_iterative, IsiFreeRegion,
    MetricVector,
};

const DATAGEN_STREAM: u64 = 0xda7a;

/// Bytes per float in a collected record (float32 samples).
pub const FLOAT_BYTES: u64 = 4;

/// What the network sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    /// Schmidl & Cox metric over K lags.
    Sc,
    /// Minn metric over K lags.
    Minn,
    /// Interleaved-by-block real and imaginary parts of the N_w window.
    RawSamples,
}

impl Extractor {
    pub fn name(self) -> &'static str {
        match self {
            Extractor::Sc => "sc",
            Extractor::Minn => "minn",
            Extractor::RawSamples => "raw",
        }
    }

    pub fn preamble_kind(self) -> PreambleKind {
        match self {
            Extractor::Minn => PreambleKind::Minn,
            Extractor::Sc | Extractor::RawSamples => PreambleKind::SchmidlCox,
        }
    }

    pub fn input_dim(self, cfg: &OfdmConfig) -> usize {
        match self {
            Extractor::Sc | Extractor::Minn => cfg.metric_len(),
            Extractor::RawSamples => 2 * cfg.window_len(),
        }
    }

    /// Unnormalized feature vector.
    pub fn raw_features(self, window: &[Complex64], cfg: &OfdmConfig) -> Result<MetricVector> {
        match self {
            Extractor::Sc => sc_metric_iterative(window, cfg),
            Extractor::Minn => minn_metric(window, cfg),
            Extractor::RawSamples => {
                if window.len() != cfg.window_len() {
                    return Err(invalid(format!(
                        "raw-sample input needs exactly N_w={} samples, got {}",
                        cfg.window_len(),
                        window.len()
                    )));
                }
                let mut v: Vec<f64> = window.iter().map(|c| c.re).collect();
                v.extend(window.iter().map(|c| c.im));
                Ok(MetricVector::new(v))
            }
        }
    }

    /// l2-normalized feature vector fed to the network.
    pub fn features(self, window: &[Complex64], cfg: &OfdmConfig) -> Result<MetricVector> {
        Ok(normalize_l2(&self.raw_features(window, cfg)?))
    }

    /// Classic argmax estimate from this extractor's metric.
    pub fn classic_estimate(self, window: &[Complex64], cfg: &OfdmConfig) -> Result<usize> {
        match self {
            Extractor::Sc | Extractor::Minn => Ok(argmax_timing(&self.raw_features(window, cfg)?)),
            Extractor::RawSamples => Err(invalid("raw samples have no classic argmax estimator")),
        }
    }
}

/// Channel used while producing training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Maximum delay for the fixed-delay label designs and for collection.
    pub tau_p_train: usize,
    pub eta: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { tau_p_train: 20, eta: 0.2 }
    }
}

/// Everything needed to regenerate one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub tau: usize,
    /// Maximum delay of the channel that produced the sample.
    pub tau_max: usize,
    /// Loose bound, or the drawn flexible bound.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub constraint: Option<usize>,
    /// Estimate used as the label (collection only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau_hat: Option<usize>,
    /// Whether the label band lies inside the true ISI-free region.
    pub label_correct: bool,
    /// Feature vector was all zeros and could not be normalized.
    pub degenerate: bool,
}

/// Provenance shared by all samples of a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetHeader {
    pub cfg: OfdmConfig,
    pub extractor: Extractor,
    pub strategy: LabelStrategy,
    pub channel: ChannelParams,
    pub seed: u64,
    /// Collection SNR; absent for noiseless generation.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snr_db: Option<f64>,
    pub zc_root: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub header: SetHeader,
    pub input_dim: usize,
    pub label_dim: usize,
    /// Row-major `n_t x input_dim`.
    pub features: Vec<f64>,
    /// Row-major `n_t x label_dim`.
    pub labels: Vec<f64>,
    pub meta: Vec<SampleMeta>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn feature(&self, m: usize) -> &[f64] {
        &self.features[m * self.input_dim..(m + 1) * self.input_dim]
    }

    pub fn label(&self, m: usize) -> &[f64] {
        &self.labels[m * self.label_dim..(m + 1) * self.label_dim]
    }

    /// Ground-truth ISI-free region of sample `m`.
    pub fn true_region(&self, m: usize) -> Result<IsiFreeRegion> {
        let meta = &self.meta[m];
        isi_free_region(meta.tau, meta.tau_max, self.header.cfg.cp_len)
    }

    fn from_samples(header: SetHeader, samples: Vec<(Vec<f64>, LabelVector, SampleMeta)>) -> Self {
        let input_dim = header.extractor.input_dim(&header.cfg);
        let label_dim = header.cfg.metric_len();
        let mut features = Vec::with_capacity(samples.len() * input_dim);
        let mut labels = Vec::with_capacity(samples.len() * label_dim);
        let mut meta = Vec::with_capacity(samples.len());
        for (f, l, m) in samples {
            features.extend_from_slice(&f);
            labels.extend_from_slice(l.as_slice());
            meta.push(m);
        }
        Self { header, input_dim, label_dim, features, labels, meta }
    }
}

/// Collected-versus-effective accounting for one strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub n_effective: u64,
    pub p_label: f64,
    pub n_raw: u64,
    pub bytes_per_record: u64,
    pub total_bytes: u64,
}

impl CollectionStats {
    pub fn new(n_effective: u64, p_label: f64, bytes_per_record: u64) -> Result<Self> {
        if !(p_label > 0.0 && p_label <= 1.0) {
            return Err(Error::CollectionFailure(format!(
                "label accuracy {p_label} leaves no usable samples"
            )));
        }
        // Guard against 1e5 / 0.743 style quotients landing a hair above an integer.
        let exact = n_effective as f64 / p_label;
        let n_raw = if (exact - exact.round()).abs() < 1e-9 * exact { exact.round() } else { exact.ceil() } as u64;
        Ok(Self {
            n_effective,
            p_label,
            n_raw,
            bytes_per_record,
            total_bytes: n_raw * bytes_per_record,
        })
    }

    /// Computer-aided sets: every label is correct.
    pub fn generated(n_effective: u64, cfg: &OfdmConfig) -> Self {
        Self::new(n_effective, 1.0, bytes_per_record(cfg)).expect("p_label = 1 is valid")
    }
}

/// N_w complex float32 samples plus K float32 label entries.
pub fn bytes_per_record(cfg: &OfdmConfig) -> u64 {
    cfg.window_len() as u64 * 2 * FLOAT_BYTES + cfg.metric_len() as u64 * FLOAT_BYTES
}

pub fn storage_bytes(stats: &CollectionStats) -> u64 {
    stats.total_bytes
}

/// Seconds to ship `bytes` over a link of `bandwidth_hz` bits per second.
pub fn bandwidth_seconds(bytes: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    Ok(bytes * 8.0 / bandwidth_hz)
}

pub fn preamble_for(cfg: &OfdmConfig, extractor: Extractor, root: u64) -> Result<FreqSymbol> {
    extractor.preamble_kind().build(cfg, root)
}

/// Transmits the preamble frame through `cir` and returns the noiseless
/// receive window.
pub fn received_window<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    preamble: &FreqSymbol,
    cir: &ChannelRealization,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let tx = build_frame(cfg, preamble, rng)?;
    apply_channel(cfg, &tx, cir)
}

fn sample_rng(seed: u64, m: usize) -> SimRng {
    stream_rng(seed, &[DATAGEN_STREAM, m as u64])
}

fn validate_generation(strategy: &LabelStrategy, cfg: &OfdmConfig, channel: &ChannelParams, n_t: usize) -> Result<()> {
    cfg.validate()?;
    if n_t == 0 {
        return Err(invalid("training set size must be positive"));
    }
    match strategy.kind {
        LabelKind::Estimated => {
            return Err(invalid("estimated labels come from collect_training_set_datcol"))
        }
        LabelKind::LooseConstraint => {
            LabelStrategy::loose(strategy.loose.unwrap_or(0), cfg)?;
        }
        LabelKind::FlexibleConstraint => {
            LabelStrategy::flexible(strategy.loose.unwrap_or(0), cfg)?;
        }
        LabelKind::OneHot | LabelKind::Midpoint | LabelKind::Region => {
            if channel.tau_p_train >= cfg.cp_len {
                return Err(invalid(format!(
                    "training delay {} must be shorter than L_c={}",
                    channel.tau_p_train, cfg.cp_len
                )));
            }
        }
    }
    Ok(())
}

/// Computer-aided training set: noiseless, CFO-free windows from channels
/// whose maximum delay the label design knows exactly.
pub fn gen_training_set(
    strategy: &LabelStrategy,
    cfg: &OfdmConfig,
    channel: &ChannelParams,
    n_t: usize,
    extractor: Extractor,
    seed: u64,
) -> Result<TrainingSet> {
    validate_generation(strategy, cfg, channel, n_t)?;
    let preamble = preamble_for(cfg, extractor, DEFAULT_ZC_ROOT)?;
    let samples = (0..n_t)
        .into_par_iter()
        .map(|m| {
            let mut rng = sample_rng(seed, m);
            let tau = rng.random_range(0..cfg.n);
            let (tau_max, constraint, label) = match strategy.kind {
                LabelKind::LooseConstraint => {
                    let l = strategy.loose.expect("validated");
                    (l, Some(l), label_loose(tau, strategy, cfg)?)
                }
                LabelKind::FlexibleConstraint => {
                    let l = strategy.draw_flexible(cfg, &mut rng)?;
                    (l, Some(l), label_flexible(tau, l, strategy, cfg)?)
                }
                LabelKind::OneHot => (channel.tau_p_train, None, label_one_hot(tau, cfg)?),
                LabelKind::Midpoint => {
                    (channel.tau_p_train, None, label_midpoint(tau, channel.tau_p_train, cfg)?)
                }
                LabelKind::Region => {
                    (channel.tau_p_train, None, label_region(tau, channel.tau_p_train, cfg)?)
                }
                LabelKind::Estimated => unreachable!("rejected by validation"),
            };
            let cir = draw_cir(tau_max, channel.eta, cfg.cp_len, &mut rng)?.with_offsets(tau, 0.0);
            let window = received_window(cfg, &preamble, &cir, &mut rng)?;
            let feat = extractor.features(&window, cfg)?;
            let region = isi_free_region(tau, tau_max, cfg.cp_len)?;
            let label_correct = label.support().iter().all(|&j| region.contains(j));
            let meta = SampleMeta {
                tau,
                tau_max,
                constraint,
                tau_hat: None,
                label_correct,
                degenerate: !feat.normalized,
            };
            Ok((feat.values, label, meta))
        })
        .collect::<Result<Vec<_>>>()?;
    let header = SetHeader {
        cfg: *cfg,
        extractor,
        strategy: *strategy,
        channel: *channel,
        seed,
        snr_db: None,
        zc_root: DEFAULT_ZC_ROOT,
    };
    Ok(TrainingSet::from_samples(header, samples))
}

/// Simulated over-the-air collection: noisy windows from channels with
/// `tau_p_train`, labelled by the S&C argmax estimate.
pub fn collect_training_set_datcol(
    cfg: &OfdmConfig,
    channel: &ChannelParams,
    n_t: usize,
    snr_db: f64,
    seed: u64,
) -> Result<(TrainingSet, CollectionStats)> {
    cfg.validate()?;
    if n_t == 0 {
        return Err(invalid("training set size must be positive"));
    }
    if channel.tau_p_train >= cfg.cp_len {
        return Err(invalid(format!(
            "collection delay {} must be shorter than L_c={}",
            channel.tau_p_train, cfg.cp_len
        )));
    }
    let extractor = Extractor::Sc;
    let preamble = preamble_for(cfg, extractor, DEFAULT_ZC_ROOT)?;
    let noise = NoiseSpec::from_snr_db(snr_db, cfg.sigma2_d);
    let samples = (0..n_t)
        .into_par_iter()
        .map(|m| {
            let mut rng = sample_rng(seed, m);
            let tau = rng.random_range(0..cfg.n);
            let cir = draw_cir(channel.tau_p_train, channel.eta, cfg.cp_len, &mut rng)?
                .with_offsets(tau, 0.0);
            let clean = received_window(cfg, &preamble, &cir, &mut rng)?;
            let window = add_awgn(&clean, &noise, &mut rng);
            let metric = extractor.raw_features(&window, cfg)?;
            let tau_hat = argmax_timing(&metric);
            let feat = normalize_l2(&metric);
            let region = isi_free_region(tau, channel.tau_p_train, cfg.cp_len)?;
            let meta = SampleMeta {
                tau,
                tau_max: channel.tau_p_train,
                constraint: None,
                tau_hat: Some(tau_hat),
                label_correct: region.contains(tau_hat),
                degenerate: !feat.normalized,
            };
            Ok((feat.values, label_from_estimate(tau_hat, cfg)?, meta))
        })
        .collect::<Result<Vec<_>>>()?;
    let hits = samples.iter().filter(|s| s.2.label_correct).count();
    if hits == 0 {
        return Err(Error::CollectionFailure(format!(
            "none of {n_t} collected labels fell inside the ISI-free region"
        )));
    }
    let p_label = hits as f64 / n_t as f64;
    let stats = CollectionStats::new(n_t as u64, p_label, bytes_per_record(cfg))?;
    let header = SetHeader {
        cfg: *cfg,
        extractor,
        strategy: LabelStrategy::fixed(LabelKind::Estimated)?,
        channel: *channel,
        seed,
        snr_db: Some(snr_db),
        zc_root: DEFAULT_ZC_ROOT,
    };
    Ok((TrainingSet::from_samples(header, samples), stats))
}

const DATASET_MAGIC: &[u8; 8] = b"SYNCFDS\0";
const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    n_t: usize,
    input_dim: usize,
    label_dim: usize,
    #[serde(flatten)]
    header: SetHeader,
    meta: Vec<SampleMeta>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Binary container plus `<path>.json` metadata sidecar.
pub fn save_training_set(set: &TrainingSet, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    use std::io::Write;
    out.write_all(DATASET_MAGIC)?;
    put_u32(&mut out, DATASET_VERSION)?;
    put_u64(&mut out, set.len() as u64)?;
    put_u64(&mut out, set.input_dim as u64)?;
    put_u64(&mut out, set.label_dim as u64)?;
    put_f64s(&mut out, &set.features)?;
    put_f64s(&mut out, &set.labels)?;
    out.flush()?;

    let sidecar = Sidecar {
        format: "syncforge-dataset".into(),
        version: DATASET_VERSION,
        n_t: set.len(),
        input_dim: set.input_dim,
        label_dim: set.label_dim,
        header: set.header.clone(),
        meta: set.meta.clone(),
    };
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), text + "\n")?;
    Ok(())
}

pub fn load_training_set(path: &Path) -> Result<TrainingSet> {
    let bytes = read_all(path)?;
    let mut cur = Cursor::new(&bytes, "dataset");
    if cur.take(8, "magic")? != DATASET_MAGIC {
        return Err(Error::Format("dataset: bad magic".into()));
    }
    let version = cur.u32("version")?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("dataset: unsupported version {version}")));
    }
    let n_t = cur.u64("n_t")? as usize;
    let input_dim = cur.u64("input_dim")? as usize;
    let label_dim = cur.u64("label_dim")? as usize;
    let expected = n_t
        .checked_mul(input_dim + label_dim)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Format("dataset: dimensions overflow".into()))?;
    if cur.remaining() != expected {
        return Err(Error::Format(format!(
            "dataset: header dimensions n_t={n_t}, input_dim={input_dim}, label_dim={label_dim} \
             need {expected} payload bytes, found {}",
            cur.remaining()
        )));
    }
    let features = cur.f64s(n_t * input_dim, "features")?;
    let labels = cur.f64s(n_t * label_dim, "labels")?;

    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(side_path.clone()),
        _ => Error::Io(e),
    })?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Format(format!("dataset sidecar: {e}")))?;
    for (field, a, b) in [
        ("n_t", side.n_t, n_t),
        ("input_dim", side.input_dim, input_dim),
        ("label_dim", side.label_dim, label_dim),
        ("meta length", side.meta.len(), n_t),
    ] {
        if a != b {
            return Err(Error::Format(format!("dataset sidecar {field}={a} disagrees with container {b}")));
        }
    }
    Ok(TrainingSet { header: side.header, input_dim, label_dim, features, labels, meta: side.meta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> OfdmConfig {
        OfdmConfig::default()
    }

    #[test]
    fn loose_labels_sit_on_band() {
        let cfg = small_cfg();
        let s = LabelStrategy::loose(26, &cfg).unwrap();
        let set = gen_training_set(&s, &cfg, &ChannelParams::default(), 200, Extractor::Sc, 4).unwrap();
        assert_eq!(set.len(), 200);
        for m in 0..set.len() {
            let tau = set.meta[m].tau;
            assert!(tau < 128);
            assert_eq!(set.meta[m].tau_max, 26);
            let sup: Vec<usize> =
                set.label(m).iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i).collect();
            assert_eq!(sup, (tau + 26..=tau + 32).collect::<Vec<_>>());
            let norm: f64 = set.feature(m).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            assert!(set.meta[m].label_correct);
        }
    }

    #[test]
    fn flexible_bound_is_uniform() {
        let cfg = small_cfg();
        let s = LabelStrategy::flexible(26, &cfg).unwrap();
        let n = 10_000;
        let set = gen_training_set(&s, &cfg, &ChannelParams::default(), n, Extractor::Sc, 9).unwrap();
        let mut counts = [0usize; 11];
        for m in &set.meta {
            let l = m.constraint.unwrap();
            assert_eq!(l, m.tau_max);
            counts[l - 16] += 1;
            assert!(m.label_correct);
        }
        let expect = n as f64 / 11.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        // chi-square(10) upper 1% point.
        assert!(chi2 < 23.209, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_cfg();
        let s = LabelStrategy::flexible(26, &cfg).unwrap();
        let a = gen_training_set(&s, &cfg, &ChannelParams::default(), 64, Extractor::Sc, 1).unwrap();
        let b = gen_training_set(&s, &cfg, &ChannelParams::default(), 64, Extractor::Sc, 1).unwrap();
        assert_eq!(a, b);
        let c = gen_training_set(&s, &cfg, &ChannelParams::default(), 64, Extractor::Sc, 2).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn generation_rejects_bad_parameters() {
        let cfg = small_cfg();
        let bad = LabelStrategy { kind: LabelKind::LooseConstraint, loose: Some(40) };
        assert!(gen_training_set(&bad, &cfg, &ChannelParams::default(), 4, Extractor::Sc, 0).is_err());
        let est = LabelStrategy::fixed(LabelKind::Estimated).unwrap();
        assert!(gen_training_set(&est, &cfg, &ChannelParams::default(), 4, Extractor::Sc, 0).is_err());
        let reg = LabelStrategy::fixed(LabelKind::Region).unwrap();
        let ch = ChannelParams { tau_p_train: 32, eta: 0.2 };
        assert!(gen_training_set(&reg, &cfg, &ch, 4, Extractor::Sc, 0).is_err());
        assert!(gen_training_set(&reg, &cfg, &ChannelParams::default(), 0, Extractor::Sc, 0).is_err());
    }

    #[test]
    fn raw_and_minn_extractors() {
        let cfg = small_cfg();
        let s = LabelStrategy::fixed(LabelKind::Region).unwrap();
        let raw = gen_training_set(&s, &cfg, &ChannelParams::default(), 8, Extractor::RawSamples, 3).unwrap();
        assert_eq!(raw.input_dim, 640);
        assert_eq!(raw.label_dim, 160);
        let minn = gen_training_set(&s, &cfg, &ChannelParams::default(), 8, Extractor::Minn, 3).unwrap();
        assert_eq!(minn.input_dim, 160);
    }

    #[test]
    fn noiseless_single_path_collection_is_perfect() {
        let cfg = small_cfg();
        let ch = ChannelParams { tau_p_train: 0, eta: 0.2 };
        let (set, stats) = collect_training_set_datcol(&cfg, &ch, 300, f64::INFINITY, 5).unwrap();
        assert_eq!(stats.p_label, 1.0);
        assert_eq!(stats.n_raw, 300);
        assert!(set.meta.iter().all(|m| m.label_correct));
        for m in 0..set.len() {
            assert_eq!(set.label(m).iter().filter(|&&v| v == 1.0).count(), 1);
        }
    }

    #[test]
    fn collection_failure_on_no_hits() {
        assert!(matches!(CollectionStats::new(10, 0.0, 3200), Err(Error::CollectionFailure(_))));
    }

    #[test]
    fn raw_count_accounting() {
        let s = CollectionStats::new(100_000, 0.743, 3200).unwrap();
        assert_eq!(s.n_raw, 134_590);
        assert_eq!(s.total_bytes, 134_590 * 3200);
        assert_eq!(storage_bytes(&s), s.total_bytes);
        let g = CollectionStats::generated(100_000, &small_cfg());
        assert_eq!(g.n_raw, 100_000);
        assert_eq!(bytes_per_record(&small_cfg()), 3200);
    }

    #[test]
    fn bandwidth_identity() {
        let t = bandwidth_seconds(633.5277e6, 1e8).unwrap();
        assert!((t - 50.6822).abs() < 1e-3);
        assert_eq!(bandwidth_seconds(0.0, 1e8).unwrap(), 0.0);
        assert!(bandwidth_seconds(1.0, 0.0).is_err());
        // Table entries divide to the reciprocal label accuracy.
        assert!(((633.5277f64 / 469.7252) / (1.0 / 0.743) - 1.0).abs() < 3e-3);
    }

    #[test]
    fn dataset_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.bin");
        let cfg = small_cfg();
        let s = LabelStrategy::flexible(26, &cfg).unwrap();
        let set = gen_training_set(&s, &cfg, &ChannelParams::default(), 16, Extractor::Sc, 2).unwrap();
        save_training_set(&set, &path).unwrap();
        let back = load_training_set(&path).unwrap();
        assert_eq!(back, set);

        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_training_set(&path), Err(Error::Format(_))));
        assert!(matches!(load_training_set(&dir.path().join("nope.bin")), Err(Error::NotFound(_))));
    }
}
