//! Correlation timing metrics used both as ELM features and as classic
//! argmax baselines.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::signal::OfdmConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl MetricVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, normalized: false }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_window(window: &[Complex64], cfg: &OfdmConfig) -> Result<usize> {
    let k = cfg.metric_len();
    let need = k + cfg.n - 1;
    if window.len() < need {
        return Err(invalid(format!(
            "window of {} samples is too short: {} lags over N={} need {need}",
            window.len(),
            k,
            cfg.n
        )));
    }
    Ok(k)
}

#[inline]
fn sc_ratio(p: Complex64, r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        p.norm_sqr() / (0.25 * r * r)
    }
}

/// Schmidl & Cox metric `M_j = |P_j|^2 / (|R_j|^2 / 4)` at lags `0..K`,
/// evaluated by direct summation at every lag.
pub fn sc_metric(window: &[Complex64], cfg: &OfdmConfig) -> Result<MetricVector> {
    let k = check_window(window, cfg)?;
    let half = cfg.n / 2;
    let values = (0..k)
        .map(|j| {
            let p: Complex64 = (0..half).map(|d| window[j + d].conj() * window[j + d + half]).sum();
            let r: f64 = window[j..j + cfg.n].iter().map(|v| v.norm_sqr()).sum();
            sc_ratio(p, r)
        })
        .collect();
    Ok(MetricVector::new(values))
}

/// Same metric as [`sc_metric`] with the O(1) sliding update of P and R.
pub fn sc_metric_iterative(window: &[Complex64], cfg: &OfdmConfig) -> Result<MetricVector> {
    let k = check_window(window, cfg)?;
    let n = cfg.n;
    let half = n / 2;
    let mut p: Complex64 = (0..half).map(|d| window[d].conj() * window[d + half]).sum();
    let mut r: f64 = window[..n].iter().map(|v| v.norm_sqr()).sum();
    let mut values = Vec::with_capacity(k);
    values.push(sc_ratio(p, r));
    for j in 0..k - 1 {
        p += window[j + half].conj() * window[j + n] - window[j].conj() * window[j + half];
        r += window[j + n].norm_sqr() - window[j].norm_sqr();
        values.push(sc_ratio(p, r));
    }
    Ok(MetricVector::new(values))
}

/// Minn metric `M_j = (|P_j| / R_j)^2` matched to the [A, A, -A, -A] preamble:
/// P_j correlates quarter-symbol pairs inside each half, R_j is half the
/// window energy over N samples.
pub fn minn_metric(window: &[Complex64], cfg: &OfdmConfig) -> Result<MetricVector> {
    if cfg.n % 4 != 0 {
        return Err(invalid(format!("Minn metric needs N divisible by 4, got {}", cfg.n)));
    }
    let k = check_window(window, cfg)?;
    let q = cfg.n / 4;
    let half = cfg.n / 2;
    let values = (0..k)
        .map(|j| {
            let p: Complex64 = (0..2)
                .flat_map(|blk| (0..q).map(move |m| j + blk * half + m))
                .map(|i| window[i].conj() * window[i + q])
                .sum();
            let r = 0.5 * window[j..j + cfg.n].iter().map(|v| v.norm_sqr()).sum::<f64>();
            if r == 0.0 {
                0.0
            } else {
                p.norm_sqr() / (r * r)
            }
        })
        .collect();
    Ok(MetricVector::new(values))
}

/// Divides by the l2-norm. A zero vector is returned unchanged and flagged
/// unnormalized.
pub fn normalize_l2(m: &MetricVector) -> MetricVector {
    let norm = m.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return MetricVector { values: m.values.clone(), normalized: false };
    }
    MetricVector { values: m.values.iter().map(|v| v / norm).collect(), normalized: true }
}

/// Index of the first maximum. Empty input yields 0.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_timing(m: &MetricVector) -> usize {
    argmax_first(&m.values)
}

/// Timing instants `tau + tau_max ..= tau + L_c` whose FFT window avoids ISI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsiFreeRegion {
    pub start: usize,
    pub end: usize,
}

impl IsiFreeRegion {
    pub fn contains(&self, idx: usize) -> bool {
        (self.start..=self.end).contains(&idx)
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

pub fn isi_free_region(tau: usize, tau_max: usize, cp_len: usize) -> Result<IsiFreeRegion> {
    if tau_max > cp_len {
        return Err(invalid(format!("maximum delay {tau_max} exceeds L_c={cp_len}")));
    }
    Ok(IsiFreeRegion { start: tau + tau_max, end: tau + cp_len })
}

pub fn is_correct(tau_hat: usize, region: &IsiFreeRegion) -> bool {
    region.contains(tau_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, ChannelRealization};
    use crate::rng::stream_rng;
    use crate::signal::{build_frame, build_preamble_minn, build_preamble_sc};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_window(seed: u64, len: usize) -> Vec<Complex64> {
        let mut rng = stream_rng(seed, &[]);
        (0..len).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    /// Literal re-evaluation of the metric definitions with explicit indices.
    fn brute_sc(r: &[Complex64], n: usize, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k];
        for (j, o) in out.iter_mut().enumerate() {
            let mut p = Complex64::new(0.0, 0.0);
            for d in 0..n / 2 {
                p += r[j + d].conj() * r[j + d + n / 2];
            }
            let mut rr = Complex64::new(0.0, 0.0);
            for d in 0..n {
                rr += r[j + d].conj() * r[j + d];
            }
            let den = 0.25 * rr.norm_sqr();
            *o = if den == 0.0 { 0.0 } else { p.norm_sqr() / den };
        }
        out
    }

    fn brute_minn(r: &[Complex64], n: usize, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k];
        for (j, o) in out.iter_mut().enumerate() {
            let mut p = Complex64::new(0.0, 0.0);
            for blk in 0..2 {
                for m in 0..n / 4 {
                    let i = j + blk * n / 2 + m;
                    p += r[i].conj() * r[i + n / 4];
                }
            }
            let mut e = 0.0;
            for d in 0..n {
                e += r[j + d].norm_sqr();
            }
            let den = (0.5 * e) * (0.5 * e);
            *o = if den == 0.0 { 0.0 } else { p.norm_sqr() / den };
        }
        out
    }

    fn noiseless_window(cfg: &OfdmConfig, minn: bool, tau: usize, seed: u64) -> Vec<Complex64> {
        let pre = if minn { build_preamble_minn(cfg, 25) } else { build_preamble_sc(cfg, 25) }.unwrap();
        let tx = build_frame(cfg, &pre, &mut stream_rng(seed, &[])).unwrap();
        apply_channel(cfg, &tx, &ChannelRealization::identity().with_offsets(tau, 0.0)).unwrap()
    }

    #[test]
    fn sc_direct_matches_brute_force() {
        let cfg = OfdmConfig::default();
        for seed in 0..20 {
            let w = random_window(seed, 320);
            let m = sc_metric(&w, &cfg).unwrap();
            let b = brute_sc(&w, 128, 160);
            for (a, b) in m.values.iter().zip(&b) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn iterative_matches_direct() {
        let cfg = OfdmConfig::default();
        for seed in 0..50 {
            let w = random_window(100 + seed, 320);
            let a = sc_metric(&w, &cfg).unwrap();
            let b = sc_metric_iterative(&w, &cfg).unwrap();
            let worst = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-9, "{worst}");
        }
    }

    #[test]
    fn constant_and_impulse_windows() {
        let cfg = OfdmConfig::default();
        let w = vec![Complex64::new(0.7, -0.2); 320];
        let a = sc_metric(&w, &cfg).unwrap();
        let b = sc_metric_iterative(&w, &cfg).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
            assert!((x - a.values[0]).abs() < 1e-9);
        }
        let mut w = vec![Complex64::new(0.0, 0.0); 320];
        w[100] = Complex64::new(2.0, 1.0);
        let a = sc_metric(&w, &cfg).unwrap();
        let b = sc_metric_iterative(&w, &cfg).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn zero_window_gives_zero_metric() {
        let cfg = OfdmConfig::default();
        let w = vec![Complex64::new(0.0, 0.0); 320];
        for m in [sc_metric(&w, &cfg), sc_metric_iterative(&w, &cfg), minn_metric(&w, &cfg)] {
            assert!(m.unwrap().values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn short_window_rejected() {
        let cfg = OfdmConfig::default();
        let w = vec![Complex64::new(1.0, 0.0); 286];
        assert!(sc_metric(&w, &cfg).is_err());
        assert!(sc_metric_iterative(&w, &cfg).is_err());
        assert!(minn_metric(&w, &cfg).is_err());
        assert!(sc_metric(&[Complex64::new(1.0, 0.0); 287], &cfg).is_ok());
    }

    #[test]
    fn sc_ideal_lag_is_one() {
        let cfg = OfdmConfig::default();
        let w = noiseless_window(&cfg, false, 5, 1);
        let m = sc_metric(&w, &cfg).unwrap();
        // Lag tau + L_c starts exactly on the preamble body.
        assert!((m.values[5 + 32] - 1.0).abs() < 1e-9);
        // The whole CP plateau is a cyclic shift of a half-periodic symbol.
        for j in 5..=37 {
            assert!((m.values[j] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn minn_matches_brute_force_and_peaks_at_one() {
        let cfg = OfdmConfig::default();
        for seed in 0..10 {
            let w = random_window(300 + seed, 320);
            let m = minn_metric(&w, &cfg).unwrap();
            for (a, b) in m.values.iter().zip(brute_minn(&w, 128, 160)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let w = noiseless_window(&cfg, true, 20, 2);
        let m = minn_metric(&w, &cfg).unwrap();
        assert!((m.values[52] - 1.0).abs() < 1e-9);
        // With L_c = N/4 the CP is exactly -A, so the CP start is a second
        // full-correlation lag; the first-index tie-break picks it.
        assert!((m.values[20] - 1.0).abs() < 1e-9);
        assert_eq!(argmax_timing(&m), 20);
        for j in 21..52 {
            assert!(m.values[j] < 1.0 - 1e-6, "lag {j}: {}", m.values[j]);
        }
    }

    #[test]
    fn normalization() {
        let m = normalize_l2(&MetricVector::new(vec![3.0, 4.0]));
        assert!(m.normalized);
        assert!((m.values[0] - 0.6).abs() < 1e-15 && (m.values[1] - 0.8).abs() < 1e-15);
        let z = normalize_l2(&MetricVector::new(vec![0.0; 5]));
        assert!(!z.normalized);
        assert_eq!(z.values, vec![0.0; 5]);
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax_timing(&MetricVector::new(vec![0.1, 0.9, 0.3])), 1);
        assert_eq!(argmax_timing(&MetricVector::new(vec![0.5, 0.5])), 0);
        let cfg = OfdmConfig::default();
        let w = noiseless_window(&cfg, false, 37, 3);
        let tau_hat = argmax_timing(&sc_metric(&w, &cfg).unwrap());
        assert!(is_correct(tau_hat, &isi_free_region(37, 0, 32).unwrap()));
    }

    #[test]
    fn regions() {
        let r = isi_free_region(0, 0, 2).unwrap();
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        let r = isi_free_region(5, 20, 32).unwrap();
        assert_eq!((r.start, r.end, r.len()), (25, 37, 13));
        let r = isi_free_region(5, 32, 32).unwrap();
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![37]);
        assert!(isi_free_region(5, 33, 32).is_err());

        let r = isi_free_region(5, 20, 32).unwrap();
        assert!(is_correct(25, &r));
        assert!(!is_correct(24, &r));
        assert!(is_correct(37, &r));
        assert!(!is_correct(38, &r));
    }

    proptest! {
        #[test]
        fn argmax_scale_invariant(v in prop::collection::vec(0.0f64..10.0, 1..50), c in 0.001f64..1000.0) {
            let m = MetricVector::new(v.clone());
            let scaled = MetricVector::new(v.iter().map(|x| x * c).collect());
            prop_assert_eq!(argmax_timing(&m), argmax_timing(&scaled));
        }

        #[test]
        fn normalize_is_idempotent(v in prop::collection::vec(0.0f64..10.0, 1..50)) {
            prop_assume!(v.iter().any(|&x| x > 1e-6));
            let once = normalize_l2(&MetricVector::new(v));
            let norm = once.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            let twice = normalize_l2(&once);
            for (a, b) in once.values.iter().zip(&twice.values) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
