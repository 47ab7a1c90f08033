//! Learning-label designs and label accuracy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::OfdmConfig;
use crate::sync_metrics::{is_correct, IsiFreeRegion};

/// Binary target vector of length K, stored as reals for the least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector(Vec<f64>);

impl LabelVector {
    /// Ones on `lo..=hi`, zeros elsewhere.
    fn band(k: usize, lo: usize, hi: usize) -> Result<Self> {
        if hi >= k || lo > hi {
            return Err(invalid(format!("label band {lo}..={hi} does not fit K={k}")));
        }
        let mut t = vec![0.0; k];
        t[lo..=hi].iter_mut().for_each(|v| *v = 1.0);
        Ok(Self(t))
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(invalid("label entries must be 0 or 1"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    OneHot,
    Midpoint,
    Region,
    Estimated,
    LooseConstraint,
    FlexibleConstraint,
}

impl LabelKind {
    pub fn name(self) -> &'static str {
        match self {
            LabelKind::OneHot => "onehot",
            LabelKind::Midpoint => "midpoint",
            LabelKind::Region => "region",
            LabelKind::Estimated => "datcol",
            LabelKind::LooseConstraint => "lc",
            LabelKind::FlexibleConstraint => "fc",
        }
    }
}

/// How training labels (and the training channel's maximum delay) are chosen.
///
/// The loose bound `L` satisfies `0 < L < L_c`; the flexible strategy draws
/// its per-sample bound from the integers in `[ceil(L_c / 2), L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStrategy {
    pub kind: LabelKind,
    pub loose: Option<usize>,
}

impl LabelStrategy {
    pub fn fixed(kind: LabelKind) -> Result<Self> {
        match kind {
            LabelKind::LooseConstraint | LabelKind::FlexibleConstraint => {
                Err(invalid(format!("strategy {} needs a loose bound", kind.name())))
            }
            _ => Ok(Self { kind, loose: None }),
        }
    }

    pub fn loose(bound: usize, cfg: &OfdmConfig) -> Result<Self> {
        check_loose(bound, cfg.cp_len)?;
        Ok(Self { kind: LabelKind::LooseConstraint, loose: Some(bound) })
    }

    pub fn flexible(bound: usize, cfg: &OfdmConfig) -> Result<Self> {
        check_loose(bound, cfg.cp_len)?;
        let lo = flexible_floor(cfg.cp_len);
        if bound < lo {
            return Err(invalid(format!(
                "flexible bound L={bound} is below the lower edge L_c/2={lo}"
            )));
        }
        Ok(Self { kind: LabelKind::FlexibleConstraint, loose: Some(bound) })
    }

    /// Inclusive range the flexible bound is drawn from.
    pub fn flexible_range(&self, cfg: &OfdmConfig) -> Option<(usize, usize)> {
        match (self.kind, self.loose) {
            (LabelKind::FlexibleConstraint, Some(l)) => Some((flexible_floor(cfg.cp_len), l)),
            _ => None,
        }
    }

    /// Discrete uniform draw on the flexible range.
    pub fn draw_flexible<R: Rng + ?Sized>(&self, cfg: &OfdmConfig, rng: &mut R) -> Result<usize> {
        let (lo, hi) = self
            .flexible_range(cfg)
            .ok_or_else(|| invalid("draw_flexible needs a flexible-constraint strategy"))?;
        Ok(rng.random_range(lo..=hi))
    }
}

fn flexible_floor(cp_len: usize) -> usize {
    cp_len.div_ceil(2)
}

fn check_loose(bound: usize, cp_len: usize) -> Result<()> {
    if bound == 0 || bound >= cp_len {
        return Err(invalid(format!(
            "loose constraint requires 0 < L < L_c, got L={bound}, L_c={cp_len}"
        )));
    }
    Ok(())
}

fn check_delay(tau_max: usize, cfg: &OfdmConfig) -> Result<()> {
    if tau_max > cfg.cp_len {
        return Err(invalid(format!("maximum delay {tau_max} exceeds L_c={}", cfg.cp_len)));
    }
    Ok(())
}

/// Single one at the preamble body start, `tau + L_c`.
pub fn label_one_hot(tau: usize, cfg: &OfdmConfig) -> Result<LabelVector> {
    let j = tau + cfg.cp_len;
    LabelVector::band(cfg.metric_len(), j, j)
}

/// Single one at `tau + ceil((tau_max + L_c) / 2)`.
pub fn label_midpoint(tau: usize, tau_max: usize, cfg: &OfdmConfig) -> Result<LabelVector> {
    check_delay(tau_max, cfg)?;
    let j = tau + (tau_max + cfg.cp_len).div_ceil(2);
    LabelVector::band(cfg.metric_len(), j, j)
}

/// Ones on the whole ISI-free region `tau + tau_max ..= tau + L_c`.
pub fn label_region(tau: usize, tau_max: usize, cfg: &OfdmConfig) -> Result<LabelVector> {
    check_delay(tau_max, cfg)?;
    LabelVector::band(cfg.metric_len(), tau + tau_max, tau + cfg.cp_len)
}

/// Ones on `tau + L ..= tau + L_c`.
pub fn label_loose(tau: usize, strategy: &LabelStrategy, cfg: &OfdmConfig) -> Result<LabelVector> {
    let bound = match (strategy.kind, strategy.loose) {
        (LabelKind::LooseConstraint, Some(l)) => l,
        _ => return Err(invalid("label_loose needs a loose-constraint strategy")),
    };
    check_loose(bound, cfg.cp_len)?;
    LabelVector::band(cfg.metric_len(), tau + bound, tau + cfg.cp_len)
}

/// Ones on `tau + drawn ..= tau + L_c` for a per-sample bound `drawn`.
pub fn label_flexible(
    tau: usize,
    drawn: usize,
    strategy: &LabelStrategy,
    cfg: &OfdmConfig,
) -> Result<LabelVector> {
    let (lo, hi) = strategy
        .flexible_range(cfg)
        .ok_or_else(|| invalid("label_flexible needs a flexible-constraint strategy"))?;
    if !(lo..=hi).contains(&drawn) {
        return Err(invalid(format!("flexible bound {drawn} outside [{lo}, {hi}]")));
    }
    LabelVector::band(cfg.metric_len(), tau + drawn, tau + cfg.cp_len)
}

/// One-hot at an estimated STO, right or wrong.
pub fn label_from_estimate(tau_hat: usize, cfg: &OfdmConfig) -> Result<LabelVector> {
    LabelVector::band(cfg.metric_len(), tau_hat, tau_hat)
}

/// Fraction of estimates that land inside their ISI-free region.
pub fn label_accuracy(estimates: &[usize], regions: &[IsiFreeRegion]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(invalid("label accuracy of an empty collection"));
    }
    if estimates.len() != regions.len() {
        return Err(invalid(format!(
            "{} estimates but {} regions",
            estimates.len(),
            regions.len()
        )));
    }
    let hits = estimates.iter().zip(regions).filter(|(t, r)| is_correct(**t, r)).count();
    Ok(hits as f64 / estimates.len() as f64)
}
