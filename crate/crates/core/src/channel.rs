//! Multipath Rayleigh channel with exponential power-delay profile, symbol
//! timing offset, carrier frequency offset and AWGN.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{OfdmConfig, TxStream};

/// One draw of the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    /// Tap delays in samples, strictly increasing.
    pub delays: Vec<usize>,
    /// Symbol timing offset: window index where the first path's preamble CP begins.
    pub sto: usize,
    /// Carrier frequency offset normalized by the subcarrier spacing.
    pub cfo: f64,
}

impl ChannelRealization {
    /// Single unit tap at delay zero.
    pub fn identity() -> Self {
        Self { gains: vec![Complex64::new(1.0, 0.0)], delays: vec![0], sto: 0, cfo: 0.0 }
    }

    pub fn tau_max(&self) -> usize {
        self.delays.last().copied().unwrap_or(0)
    }

    pub fn with_offsets(mut self, sto: usize, cfo: f64) -> Self {
        self.sto = sto;
        self.cfo = cfo;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// SNR_p in dB; `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    pub sigma2_n: f64,
}

impl NoiseSpec {
    /// `sigma2_n = sigma2_d * 10^(-snr_db / 10)`.
    pub fn from_snr_db(snr_db: f64, sigma2_d: f64) -> Self {
        let sigma2_n = if snr_db == f64::INFINITY { 0.0 } else { sigma2_d * 10f64.powf(-snr_db / 10.0) };
        Self { snr_db, sigma2_n }
    }

    pub fn noiseless() -> Self {
        Self { snr_db: f64::INFINITY, sigma2_n: 0.0 }
    }
}

/// Per-tap powers of the exponential profile over taps `0..=tau_max`,
/// normalized to sum to one.
pub fn pdp_weights(tau_max: usize, eta: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..=tau_max).map(|p| (-eta * p as f64).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Draws `tau_max + 1` CSCG taps at consecutive delays with the exponential
/// profile. STO and CFO are zero; set them with [`ChannelRealization::with_offsets`].
pub fn draw_cir<R: Rng + ?Sized>(
    tau_max: usize,
    eta: f64,
    cp_len: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if tau_max >= cp_len {
        return Err(invalid(format!(
            "maximum delay {tau_max} must be shorter than the cyclic prefix L_c={cp_len}"
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid(format!("decay factor must be finite and >= 0, got {eta}")));
    }
    let gains = pdp_weights(tau_max, eta)
        .into_iter()
        .map(|w| {
            let sd = (w / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect();
    Ok(ChannelRealization { gains, delays: (0..=tau_max).collect(), sto: 0, cfo: 0.0 })
}

/// Noise-free receiver window of N_w samples:
/// `r_n = sum_l h_l x[n - sto - tau_l] exp(j 2 pi cfo n / N)`, with `x`
/// indexed so that `x[0]` is the preamble's first CP sample.
pub fn apply_channel(
    cfg: &OfdmConfig,
    stream: &TxStream,
    cir: &ChannelRealization,
) -> Result<Vec<Complex64>> {
    if cir.gains.len() != cir.delays.len() || cir.gains.is_empty() {
        return Err(invalid("channel needs one gain per delay and at least one tap"));
    }
    if cir.delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tap delays must be strictly increasing"));
    }
    let nw = cfg.window_len();
    let lead = cir.sto + cir.tau_max();
    if lead > stream.preamble_start {
        return Err(invalid(format!(
            "window needs {lead} samples before the preamble, stream has {}",
            stream.preamble_start
        )));
    }
    let last = stream.preamble_start + nw - 1 - cir.sto;
    if last >= stream.samples.len() {
        return Err(invalid(format!(
            "window reaches stream index {last}, stream has {} samples",
            stream.samples.len()
        )));
    }
    let base = stream.preamble_start - cir.sto;
    let x = &stream.samples;
    let step = 2.0 * std::f64::consts::PI * cir.cfo / cfg.n as f64;
    Ok((0..nw)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (h, &d) in cir.gains.iter().zip(&cir.delays) {
                if let Some(idx) = (base + n).checked_sub(d) {
                    acc += h * x[idx];
                }
            }
            if cir.cfo != 0.0 {
                acc *= Complex64::from_polar(1.0, step * n as f64);
            }
            acc
        })
        .collect())
}

/// Adds i.i.d. CSCG(0, sigma2_n) noise.
pub fn add_awgn<R: Rng + ?Sized>(
    window: &[Complex64],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Vec<Complex64> {
    if noise.sigma2_n == 0.0 {
        return window.to_vec();
    }
    let sd = (noise.sigma2_n / 2.0).sqrt();
    window
        .iter()
        .map(|v| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            v + Complex64::new(sd * re, sd * im)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::signal::{build_frame, build_preamble_sc};

    fn frame(cfg: &OfdmConfig, seed: u64) -> TxStream {
        let pre = build_preamble_sc(cfg, 25).unwrap();
        build_frame(cfg, &pre, &mut stream_rng(seed, &[])).unwrap()
    }

    #[test]
    fn pdp_formula() {
        assert_eq!(pdp_weights(0, 0.7), vec![1.0]);
        let w = pdp_weights(1, 0.2);
        let e = (-0.2f64).exp();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((w[1] - e / (1.0 + e)).abs() < 1e-15);
        assert!((w[0] - 0.54983).abs() < 1e-5 && (w[1] - 0.45017).abs() < 1e-5);
        let w = pdp_weights(20, 0.2);
        assert_eq!(w.len(), 21);
        assert!(w.windows(2).all(|p| p[1] < p[0]));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn draw_cir_validates() {
        let mut rng = stream_rng(0, &[]);
        assert!(draw_cir(32, 0.2, 32, &mut rng).is_err());
        assert!(draw_cir(3, -1.0, 32, &mut rng).is_err());
        let cir = draw_cir(0, 0.2, 32, &mut rng).unwrap();
        assert_eq!(cir.delays, vec![0]);
        let cir = draw_cir(20, 0.2, 32, &mut rng).unwrap();
        assert_eq!(cir.tau_max(), 20);
        assert_eq!(cir.gains.len(), 21);
    }

    #[test]
    fn average_channel_energy_is_unity() {
        let mut rng = stream_rng(11, &[]);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| draw_cir(20, 0.2, 32, &mut rng).unwrap().gains.iter().map(|h| h.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / n as f64;
        assert!((0.98..=1.02).contains(&mean), "{mean}");
    }

    #[test]
    fn tap_magnitudes_are_rayleigh() {
        // One-sample Kolmogorov-Smirnov against |h| ~ Rayleigh with E|h|^2 = w.
        let mut rng = stream_rng(5, &[]);
        let n = 10_000;
        let w = pdp_weights(4, 0.2);
        for tap in [0usize, 4] {
            let mut mags: Vec<f64> =
                (0..n).map(|_| draw_cir(4, 0.2, 32, &mut rng).unwrap().gains[tap].norm()).collect();
            mags.sort_by(f64::total_cmp);
            let d = mags
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let cdf = 1.0 - (-x * x / w[tap]).exp();
                    (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
                })
                .fold(0.0, f64::max);
            // Asymptotic critical value at alpha = 0.01.
            assert!(d < 1.628 / (n as f64).sqrt(), "tap {tap}: D = {d}");
        }
    }

    #[test]
    fn identity_channel_returns_stream_slice() {
        let cfg = OfdmConfig::default();
        let tx = frame(&cfg, 1);
        let win = apply_channel(&cfg, &tx, &ChannelRealization::identity()).unwrap();
        assert_eq!(&win[..], &tx.samples[160..480]);
        let win = apply_channel(&cfg, &tx, &ChannelRealization::identity().with_offsets(37, 0.0)).unwrap();
        assert_eq!(&win[37..], &tx.samples[160..480 - 37]);
        assert_eq!(&win[..37], &tx.samples[160 - 37..160]);
    }

    #[test]
    fn cfo_rotation() {
        let cfg = OfdmConfig { n: 4, cp_len: 2, ..OfdmConfig::default() };
        let tx = frame(&cfg, 2);
        let clean = apply_channel(&cfg, &tx, &ChannelRealization::identity()).unwrap();
        // One subcarrier spacing of offset advances a quarter turn per sample at N=4.
        let rot = apply_channel(&cfg, &tx, &ChannelRealization::identity().with_offsets(0, 1.0)).unwrap();
        assert!((rot[1] / clean[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        for (n, (a, b)) in rot.iter().zip(&clean).enumerate() {
            let want = b * Complex64::from_polar(1.0, std::f64::consts::PI * n as f64 / 2.0);
            assert!((a - want).norm() < 1e-12);
        }
        let half = apply_channel(&cfg, &tx, &ChannelRealization::identity().with_offsets(0, 0.5)).unwrap();
        let eighth = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((half[1] / clean[1] - eighth).norm() < 1e-12);
    }

    #[test]
    fn two_tap_matches_direct_convolution() {
        let cfg = OfdmConfig::default();
        let tx = frame(&cfg, 3);
        let cir = ChannelRealization {
            gains: vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
            delays: vec![0, 2],
            sto: 10,
            cfo: 0.0,
        };
        let win = apply_channel(&cfg, &tx, &cir).unwrap();
        // Full FIR convolution of the whole stream, then slice.
        let x = &tx.samples;
        let conv: Vec<Complex64> = (0..x.len())
            .map(|i| x[i] + if i >= 2 { x[i - 2] * 0.5 } else { Complex64::new(0.0, 0.0) })
            .collect();
        let start = tx.preamble_start - 10;
        for n in 0..cfg.window_len() {
            assert!((win[n] - conv[start + n]).norm() < 1e-14);
        }
    }

    #[test]
    fn window_bounds_checked() {
        let cfg = OfdmConfig::default();
        let tx = frame(&cfg, 4);
        let cir = ChannelRealization::identity().with_offsets(161, 0.0);
        assert!(apply_channel(&cfg, &tx, &cir).is_err());
        let short = TxStream { samples: tx.samples[..400].to_vec(), preamble_start: 160 };
        assert!(apply_channel(&cfg, &short, &ChannelRealization::identity()).is_err());
        let bad = ChannelRealization { delays: vec![3, 3], gains: vec![Complex64::new(1.0, 0.0); 2], sto: 0, cfo: 0.0 };
        assert!(apply_channel(&cfg, &tx, &bad).is_err());
    }

    #[test]
    fn awgn_variance() {
        let zeros = vec![Complex64::new(0.0, 0.0); 1_000_000];
        let x = vec![Complex64::new(0.25, -1.0); 16];
        assert_eq!(add_awgn(&x, &NoiseSpec::from_snr_db(f64::INFINITY, 1.0), &mut stream_rng(0, &[])), x);
        for (snr, want) in [(0.0, 1.0), (10.0, 0.1)] {
            let noise = NoiseSpec::from_snr_db(snr, 1.0);
            assert!((noise.sigma2_n - want).abs() < 1e-15);
            let out = add_awgn(&zeros, &noise, &mut stream_rng(9, &[snr as u64]));
            assert_eq!(out.len(), zeros.len());
            let var = out.iter().map(|v| v.norm_sqr()).sum::<f64>() / out.len() as f64;
            assert!((var / want - 1.0).abs() < 0.01, "snr {snr}: {var}");
        }
    }
}
