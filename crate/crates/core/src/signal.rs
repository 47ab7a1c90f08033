//! Transmit side: Zadoff-Chu preambles, unitary IDFT modulation, cyclic
//! prefix insertion and the three-symbol frame that surrounds the preamble.

use std::cell::RefCell;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_ZC_ROOT: u64 = 25;

/// OFDM numerology. Derived lengths are exposed as methods so they can never
/// drift out of sync with `n` and `cp_len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Subcarrier count N.
    pub n: usize,
    /// Cyclic prefix length L_c.
    pub cp_len: usize,
    pub sigma2_d: f64,
    pub sigma2_p: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self { n: 128, cp_len: 32, sigma2_d: 1.0, sigma2_p: 1.0 }
    }
}

impl OfdmConfig {
    pub fn new(n: usize, cp_len: usize) -> Result<Self> {
        let cfg = Self { n, cp_len, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(invalid(format!("N must be even and >= 2, got {}", self.n)));
        }
        if self.cp_len >= self.n {
            return Err(invalid(format!(
                "cyclic prefix L_c={} must be shorter than N={}",
                self.cp_len, self.n
            )));
        }
        if !(self.sigma2_d > 0.0 && self.sigma2_d.is_finite()) {
            return Err(invalid(format!("data power must be positive, got {}", self.sigma2_d)));
        }
        if !(self.sigma2_p > 0.0 && self.sigma2_p.is_finite()) {
            return Err(invalid(format!("preamble power must be positive, got {}", self.sigma2_p)));
        }
        Ok(())
    }

    /// N_u = N + L_c.
    pub fn symbol_len(&self) -> usize {
        self.n + self.cp_len
    }

    /// K = N_u, the number of timing-metric lags.
    pub fn metric_len(&self) -> usize {
        self.symbol_len()
    }

    /// N_w = 2 N_u, the receiver observation window.
    pub fn window_len(&self) -> usize {
        2 * self.symbol_len()
    }
}

/// Frequency-domain OFDM symbol of exactly N subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqSymbol(Vec<Complex64>);

impl FreqSymbol {
    pub fn new(cfg: &OfdmConfig, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != cfg.n {
            return Err(invalid(format!(
                "frequency symbol has {} subcarriers, expected N={}",
                values.len(),
                cfg.n
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Continuous transmit stream with the preamble embedded at `preamble_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxStream {
    pub samples: Vec<Complex64>,
    /// Index of the first CP sample of the preamble.
    pub preamble_start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreambleKind {
    /// Two identical halves.
    SchmidlCox,
    /// Four quarters with signs [+A, +A, -A, -A].
    Minn,
}

impl PreambleKind {
    pub fn build(self, cfg: &OfdmConfig, root: u64) -> Result<FreqSymbol> {
        match self {
            PreambleKind::SchmidlCox => build_preamble_sc(cfg, root),
            PreambleKind::Minn => build_preamble_minn(cfg, root),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zadoff-Chu sequence of the given root and length.
///
/// The quadratic phase is reduced modulo `2 * length` in integer arithmetic
/// before conversion, so long sequences keep full precision.
pub fn zadoff_chu(root: u64, length: usize) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(invalid("Zadoff-Chu length must be positive"));
    }
    if root == 0 || gcd(root, length as u64) != 1 {
        return Err(invalid(format!(
            "Zadoff-Chu root {root} is not coprime with length {length}"
        )));
    }
    let len = length as u128;
    let modulus = 2 * len;
    let odd = length % 2 == 1;
    Ok((0..len)
        .map(|n| {
            let quad = if odd { n * (n + 1) } else { n * n };
            let k = (u128::from(root) % modulus) * (quad % modulus) % modulus;
            let phase = -std::f64::consts::PI * k as f64 / length as f64;
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

fn scale_to_power(values: &mut [Complex64], power: f64) {
    let mean = values.iter().map(|v| v.norm_sqr()).sum::<f64>() / values.len() as f64;
    let gain = (power / mean).sqrt();
    values.iter_mut().for_each(|v| *v *= gain);
}

/// Schmidl & Cox preamble: a ZC sequence of length N/2 on the even
/// subcarriers, which makes the time-domain symbol repeat after N/2 samples.
pub fn build_preamble_sc(cfg: &OfdmConfig, root: u64) -> Result<FreqSymbol> {
    if cfg.n % 2 != 0 {
        return Err(invalid(format!("S&C preamble needs even N, got {}", cfg.n)));
    }
    let zc = zadoff_chu(root, cfg.n / 2)?;
    let mut d = vec![Complex64::new(0.0, 0.0); cfg.n];
    for (k, z) in zc.into_iter().enumerate() {
        d[2 * k] = z;
    }
    // Parseval: mean time-domain power equals mean subcarrier power.
    scale_to_power(&mut d, cfg.sigma2_p);
    FreqSymbol::new(cfg, d)
}

/// Minn preamble with time structure [A, A, -A, -A], A a ZC sequence of
/// length N/4. Built in time and mapped to subcarriers with the unitary DFT.
pub fn build_preamble_minn(cfg: &OfdmConfig, root: u64) -> Result<FreqSymbol> {
    if cfg.n % 4 != 0 {
        return Err(invalid(format!("Minn preamble needs N divisible by 4, got {}", cfg.n)));
    }
    let q = cfg.n / 4;
    let a = zadoff_chu(root, q)?;
    let mut s = Vec::with_capacity(cfg.n);
    s.extend_from_slice(&a);
    s.extend_from_slice(&a);
    s.extend(a.iter().map(|v| -v));
    s.extend(a.iter().map(|v| -v));
    scale_to_power(&mut s, cfg.sigma2_p);
    FreqSymbol::new(cfg, dft_unitary(&s))
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_scaled(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let mut buf = input.to_vec();
    if n == 0 {
        return buf;
    }
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        plan.process(&mut buf);
    });
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// s = F_N d with `[F_N]_{k,l} = exp(j 2 pi k l / N) / sqrt(N)`.
pub fn idft_modulate(d: &FreqSymbol) -> Vec<Complex64> {
    fft_scaled(d.as_slice(), true)
}

/// Conjugate-transpose of [`idft_modulate`], i.e. the unitary forward DFT.
pub fn dft_unitary(s: &[Complex64]) -> Vec<Complex64> {
    fft_scaled(s, false)
}

/// Prepends the last `cp_len` samples of `s`.
pub fn add_cp(s: &[Complex64], cp_len: usize) -> Result<Vec<Complex64>> {
    let n = s.len();
    if cp_len >= n {
        return Err(invalid(format!("L_c={cp_len} must be shorter than the symbol length {n}")));
    }
    let mut x = Vec::with_capacity(n + cp_len);
    x.extend_from_slice(&s[n - cp_len..]);
    x.extend_from_slice(s);
    Ok(x)
}

/// Random QPSK data symbol with per-subcarrier power `sigma2_d`.
pub fn qpsk_symbol<R: Rng + ?Sized>(cfg: &OfdmConfig, rng: &mut R) -> FreqSymbol {
    let amp = (cfg.sigma2_d / 2.0).sqrt();
    let d = (0..cfg.n)
        .map(|_| {
            let re = if rng.random::<bool>() { amp } else { -amp };
            let im = if rng.random::<bool>() { amp } else { -amp };
            Complex64::new(re, im)
        })
        .collect();
    FreqSymbol(d)
}

/// `[data | preamble | data]`, each a CP-OFDM symbol of N_u samples.
pub fn build_frame<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    preamble: &FreqSymbol,
    rng: &mut R,
) -> Result<TxStream> {
    if preamble.len() != cfg.n {
        return Err(invalid(format!(
            "preamble has {} subcarriers, expected N={}",
            preamble.len(),
            cfg.n
        )));
    }
    let nu = cfg.symbol_len();
    let mut samples = Vec::with_capacity(3 * nu);
    let before = qpsk_symbol(cfg, rng);
    let after = qpsk_symbol(cfg, rng);
    for sym in [&before, preamble, &after] {
        samples.extend(add_cp(&idft_modulate(sym), cfg.cp_len)?);
    }
    Ok(TxStream { samples, preamble_start: nu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Textbook O(N^2) IDFT.
    fn idft_naive(d: &[Complex64]) -> Vec<Complex64> {
        let n = d.len();
        (0..n)
            .map(|k| {
                d.iter().enumerate().fold(c(0.0, 0.0), |acc, (l, v)| {
                    let ph = 2.0 * std::f64::consts::PI * (k * l) as f64 / n as f64;
                    acc + v * Complex64::from_polar(1.0, ph)
                }) / (n as f64).sqrt()
            })
            .collect()
    }

    fn power(s: &[Complex64]) -> f64 {
        s.iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64
    }

    #[test]
    fn zc_trivial_cases() {
        assert_eq!(zadoff_chu(1, 1).unwrap(), vec![c(1.0, 0.0)]);
        let z = zadoff_chu(1, 4).unwrap();
        assert_eq!(z[0], c(1.0, 0.0));
        let z2 = zadoff_chu(1, 2).unwrap();
        assert!((z2[1] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn zc_rejects_non_coprime_root() {
        assert!(zadoff_chu(4, 8).is_err());
        assert!(zadoff_chu(0, 8).is_err());
        assert!(zadoff_chu(3, 0).is_err());
    }

    #[test]
    fn zc_unit_magnitude_and_zero_autocorrelation() {
        let z = zadoff_chu(25, 63).unwrap();
        assert!(z.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        for shift in 1..63 {
            let acc: Complex64 = (0..63).map(|n| z[n] * z[(n + shift) % 63].conj()).sum();
            assert!(acc.norm() < 1e-9, "shift {shift}: {}", acc.norm());
        }
    }

    #[test]
    fn idft_small_cases() {
        let cfg1 = OfdmConfig { n: 1, ..OfdmConfig::default() };
        let s = idft_modulate(&FreqSymbol::new(&cfg1, vec![c(0.3, -2.0)]).unwrap());
        assert!((s[0] - c(0.3, -2.0)).norm() < 1e-15);

        let cfg2 = OfdmConfig { n: 2, cp_len: 0, ..OfdmConfig::default() };
        let s = idft_modulate(&FreqSymbol::new(&cfg2, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - c(h, 0.0)).norm() < 1e-15 && (s[1] - c(h, 0.0)).norm() < 1e-15);

        let cfg4 = OfdmConfig { n: 4, cp_len: 0, ..OfdmConfig::default() };
        let d = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let s = idft_modulate(&FreqSymbol::new(&cfg4, d).unwrap());
        let want = [c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn idft_matches_naive_transform() {
        let cfg = OfdmConfig::default();
        let mut rng = stream_rng(3, &[]);
        let d = qpsk_symbol(&cfg, &mut rng);
        let fast = idft_modulate(&d);
        let slow = idft_naive(d.as_slice());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn freq_symbol_length_checked() {
        let cfg = OfdmConfig::default();
        assert!(FreqSymbol::new(&cfg, vec![c(0.0, 0.0); 5]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OfdmConfig::new(128, 32).is_ok());
        assert!(OfdmConfig::new(127, 32).is_err());
        assert!(OfdmConfig::new(32, 32).is_err());
        let cfg = OfdmConfig::default();
        assert_eq!((cfg.symbol_len(), cfg.metric_len(), cfg.window_len()), (160, 160, 320));
    }

    #[test]
    fn cp_insertion() {
        let s = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let x = add_cp(&s, 2).unwrap();
        assert_eq!(x, vec![s[2], s[3], s[0], s[1], s[2], s[3]]);
        assert_eq!(add_cp(&s, 0).unwrap(), s.to_vec());
        assert!(add_cp(&s, 4).is_err());

        let long: Vec<Complex64> = (0..128).map(|i| c(i as f64, 0.0)).collect();
        let x = add_cp(&long, 32).unwrap();
        assert_eq!(x.len(), 160);
        assert_eq!(&x[..32], &long[96..]);
    }

    #[test]
    fn sc_preamble_toy() {
        let cfg = OfdmConfig { n: 4, cp_len: 2, ..OfdmConfig::default() };
        let d = build_preamble_sc(&cfg, 1).unwrap();
        // ZC(root 1, length 2) = [1, -j] on subcarriers 0 and 2.
        let v = d.as_slice();
        assert!(v[1].norm() == 0.0 && v[3].norm() == 0.0);
        assert!((v[2] / v[0] - c(0.0, -1.0)).norm() < 1e-15);
        let s = idft_modulate(&d);
        assert!((s[0] - s[2]).norm() < 1e-15 && (s[1] - s[3]).norm() < 1e-15);
    }

    #[test]
    fn sc_preamble_halves_and_power() {
        let cfg = OfdmConfig::default();
        let s = idft_modulate(&build_preamble_sc(&cfg, 25).unwrap());
        let worst = (0..64).map(|n| (s[n] - s[n + 64]).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        assert!((power(&s) - cfg.sigma2_p).abs() < 1e-12);

        let cfg = OfdmConfig { sigma2_p: 2.5, ..cfg };
        let s = idft_modulate(&build_preamble_sc(&cfg, 25).unwrap());
        assert!((power(&s) - 2.5).abs() < 1e-9 * 2.5);
    }

    #[test]
    fn minn_preamble_structure() {
        let cfg = OfdmConfig { n: 8, cp_len: 2, ..OfdmConfig::default() };
        let s = idft_modulate(&build_preamble_minn(&cfg, 1).unwrap());
        for i in 0..2 {
            assert!((s[i] - s[i + 2]).norm() < 1e-12);
            assert!((s[i + 4] + s[i]).norm() < 1e-12);
            assert!((s[i + 6] + s[i]).norm() < 1e-12);
        }
        let cfg = OfdmConfig::default();
        let s = idft_modulate(&build_preamble_minn(&cfg, 25).unwrap());
        let worst = (0..64).map(|n| (s[n + 64] + s[n]).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        assert!((power(&s) - cfg.sigma2_p).abs() < 1e-12);
        let bad = OfdmConfig { n: 6, cp_len: 2, ..OfdmConfig::default() };
        assert!(build_preamble_minn(&bad, 1).is_err());
    }

    #[test]
    fn frame_layout() {
        let mut rng = stream_rng(1, &[]);
        let cfg = OfdmConfig { n: 4, cp_len: 2, ..OfdmConfig::default() };
        let pre = build_preamble_sc(&cfg, 1).unwrap();
        let tx = build_frame(&cfg, &pre, &mut rng).unwrap();
        assert_eq!((tx.samples.len(), tx.preamble_start), (18, 6));

        let cfg = OfdmConfig::default();
        let pre = build_preamble_sc(&cfg, 25).unwrap();
        let tx = build_frame(&cfg, &pre, &mut rng).unwrap();
        assert_eq!((tx.samples.len(), tx.preamble_start), (480, 160));
        let want = add_cp(&idft_modulate(&pre), 32).unwrap();
        assert_eq!(&tx.samples[160..320], &want[..]);
        // Data symbols carry sigma2_d on average.
        let data_power = power(&tx.samples[32..160]);
        assert!((data_power - cfg.sigma2_d).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn idft_is_unitary(seed in any::<u64>(), log_n in 1u32..9) {
            let n = 1usize << log_n;
            let cfg = OfdmConfig { n, cp_len: 0, ..OfdmConfig::default() };
            let mut rng = stream_rng(seed, &[]);
            let d: Vec<Complex64> = (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let back = dft_unitary(&idft_modulate(&FreqSymbol::new(&cfg, d.clone()).unwrap()));
            for (a, b) in back.iter().zip(&d) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn cp_repeats_tail(len in 2usize..64, cp_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let cp = ((len - 1) as f64 * cp_frac) as usize;
            let mut rng = stream_rng(seed, &[]);
            let s: Vec<Complex64> = (0..len).map(|_| c(rng.random(), rng.random())).collect();
            let x = add_cp(&s, cp).unwrap();
            for i in 0..cp {
                prop_assert_eq!(x[i], x[i + len]);
            }
        }
    }
}
