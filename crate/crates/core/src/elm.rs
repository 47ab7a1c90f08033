//! Single-hidden-layer extreme learning machine with a closed-form output
//! layer. Hidden weights are random and frozen; only `beta` is solved for.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::binfmt::{put_f64s, put_u32, put_u64, read_all, Cursor};
use crate::error::{invalid, Error, Result};
use crate::sync_metrics::argmax_first;

/// Hidden width multiplier: `N_h = HIDDEN_FACTOR * K`.
pub const HIDDEN_FACTOR: usize = 8;

/// Rows of `H` processed per Gram-matrix chunk.
const CHUNK: usize = 2048;

/// Gram systems better conditioned than this go through Cholesky.
const CHOLESKY_COND_LIMIT: f64 = 1e12;

/// Below this many entries in `H` the SVD of `H` itself is affordable.
const DIRECT_SVD_ENTRIES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Timing-metric vector of length K.
    Metric,
    /// Real and imaginary window samples, length `4K`.
    Raw,
}

impl InputKind {
    pub fn input_dim(self, k: usize) -> usize {
        match self {
            InputKind::Metric => k,
            InputKind::Raw => 4 * k,
        }
    }

    fn tag(self) -> u8 {
        match self {
            InputKind::Metric => 0,
            InputKind::Raw => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(InputKind::Metric),
            1 => Ok(InputKind::Raw),
            t => Err(Error::Format(format!("model: unknown input kind tag {t}"))),
        }
    }
}

/// How `beta` was obtained, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub method: SolveMethod,
    /// Condition estimate of the Gram matrix, `lambda_max / lambda_min`.
    pub gram_condition: f64,
    /// Singular directions kept.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    GramEigen,
    DirectSvd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    pub input_kind: InputKind,
    pub k: usize,
    pub n_h: usize,
    pub input_dim: usize,
    /// Row-major `n_h x input_dim`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    /// Row-major `k x n_h`, present once trained.
    pub beta: Option<Vec<f64>>,
}

/// Draws `W` and `b` from the standard normal.
pub fn init_model<R: Rng + ?Sized>(
    k: usize,
    n_h: usize,
    input_kind: InputKind,
    rng: &mut R,
) -> Result<ElmModel> {
    if k == 0 || n_h == 0 {
        return Err(invalid(format!("ELM dimensions must be positive, got K={k}, N_h={n_h}")));
    }
    let input_dim = input_kind.input_dim(k);
    let w: Vec<f64> = (0..n_h * input_dim).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = (0..n_h).map(|_| rng.sample(StandardNormal)).collect();
    Ok(ElmModel { input_kind, k, n_h, input_dim, w, b, beta: None })
}

impl ElmModel {
    pub fn is_trained(&self) -> bool {
        self.beta.is_some()
    }

    fn w_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.n_h, self.input_dim, |i, j| self.w[i * self.input_dim + j])
    }

    /// `tanh(W x + b)` for a single input.
    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(invalid(format!(
                "input has {} entries, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(self
            .w
            .chunks_exact(self.input_dim)
            .zip(&self.b)
            .map(|(row, b)| (row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b).tanh())
            .collect())
    }
}

/// Hidden activations `H` (`n_h x rows`) for row-major inputs.
pub fn hidden_activations(model: &ElmModel, x: &[f64], rows: usize) -> Result<Mat<f64>> {
    if x.len() != rows * model.input_dim {
        return Err(invalid(format!(
            "input buffer holds {} values, expected {rows} x {}",
            x.len(),
            model.input_dim
        )));
    }
    let w = model.w_mat();
    hidden_with(&w, &model.b, x, rows)
}

fn hidden_with(w: &Mat<f64>, b: &[f64], x: &[f64], rows: usize) -> Result<Mat<f64>> {
    let d = w.ncols();
    let xt = Mat::from_fn(d, rows, |i, j| x[j * d + i]);
    let mut h = Mat::<f64>::zeros(w.nrows(), rows);
    matmul(h.as_mut(), Accum::Replace, w.as_ref(), xt.as_ref(), 1.0, Par::Seq);
    for j in 0..rows {
        for i in 0..w.nrows() {
            let v = h[(i, j)] + b[i];
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite pre-activation at unit {i}, sample {j}")));
            }
            h[(i, j)] = v.tanh();
        }
    }
    Ok(h)
}

/// Fits `beta = T H^+` (or the ridge solution when `ridge > 0`).
///
/// `x` is row-major `n_t x input_dim`, `t` row-major `n_t x k`.
pub fn train(model: &mut ElmModel, x: &[f64], t: &[f64], n_t: usize, ridge: f64) -> Result<TrainReport> {
    if n_t == 0 {
        return Err(invalid("cannot train on an empty set"));
    }
    if t.len() != n_t * model.k {
        return Err(invalid(format!(
            "label buffer holds {} values, expected {n_t} x {}",
            t.len(),
            model.k
        )));
    }
    if x.len() != n_t * model.input_dim {
        return Err(invalid(format!(
            "feature buffer holds {} values, expected {n_t} x {}",
            x.len(),
            model.input_dim
        )));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(invalid(format!("ridge must be a finite non-negative number, got {ridge}")));
    }
    let w = model.w_mat();
    let (beta, report) = if ridge == 0.0 && n_t * model.n_h <= DIRECT_SVD_ENTRIES {
        let h = hidden_with(&w, &model.b, x, n_t)?;
        let tm = Mat::from_fn(model.k, n_t, |i, j| t[j * model.k + i]);
        direct_svd_solve(h.as_ref(), tm.as_ref())?
    } else {
        gram_solve(model, &w, x, t, n_t, ridge)?
    };
    check_finite(&beta)?;
    model.beta = Some(row_major(&beta));
    Ok(report)
}

fn gram_solve(
    model: &ElmModel,
    w: &Mat<f64>,
    x: &[f64],
    t: &[f64],
    n_t: usize,
    ridge: f64,
) -> Result<(Mat<f64>, TrainReport)> {
    let (n_h, k, d) = (model.n_h, model.k, model.input_dim);
    let mut g = Mat::<f64>::zeros(n_h, n_h);
    let mut c = Mat::<f64>::zeros(k, n_h);
    // Fixed chunk order keeps the accumulation bitwise reproducible.
    for start in (0..n_t).step_by(CHUNK) {
        let rows = CHUNK.min(n_t - start);
        let h = hidden_with(w, &model.b, &x[start * d..(start + rows) * d], rows)?;
        let tc = Mat::from_fn(k, rows, |i, j| t[(start + j) * k + i]);
        matmul(g.as_mut(), Accum::Add, h.as_ref(), h.transpose(), 1.0, Par::Seq);
        matmul(c.as_mut(), Accum::Add, tc.as_ref(), h.transpose(), 1.0, Par::Seq);
    }
    for i in 0..n_h {
        g[(i, i)] += ridge;
    }
    let eig = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("Gram eigendecomposition failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let lmax = s[n_h - 1].max(0.0);
    let lmin = s[0];
    if !(lmax > 0.0) {
        return Err(Error::Numeric("hidden activations are identically zero".into()));
    }
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };

    if cond < CHOLESKY_COND_LIMIT {
        if let Ok(llt) = g.llt(Side::Lower) {
            use faer::linalg::solvers::Solve;
            // G beta^T = C^T
            let bt = llt.solve(c.transpose().to_owned());
            return Ok((bt.transpose().to_owned(), TrainReport { method: SolveMethod::Cholesky, gram_condition: cond, rank: n_h }));
        }
    }

    let rtol = 1e-10 * n_h.max(n_t) as f64;
    let cut = rtol * rtol * lmax;
    let u = eig.U();
    // beta = C U diag(1/lambda) U^T over the retained eigenpairs.
    let mut cu = Mat::<f64>::zeros(k, n_h);
    matmul(cu.as_mut(), Accum::Replace, c.as_ref(), u, 1.0, Par::Seq);
    let mut rank = 0;
    for j in 0..n_h {
        let inv = if s[j] > cut {
            rank += 1;
            1.0 / s[j]
        } else {
            0.0
        };
        for i in 0..k {
            cu[(i, j)] *= inv;
        }
    }
    let mut beta = Mat::<f64>::zeros(k, n_h);
    matmul(beta.as_mut(), Accum::Replace, cu.as_ref(), u.transpose(), 1.0, Par::Seq);
    Ok((beta, TrainReport { method: SolveMethod::GramEigen, gram_condition: cond, rank }))
}

fn direct_svd_solve(h: MatRef<'_, f64>, t: MatRef<'_, f64>) -> Result<(Mat<f64>, TrainReport)> {
    let (n_h, n_t) = (h.nrows(), h.ncols());
    let svd = h
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD of hidden activations failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let r = s.nrows();
    let smax = if r > 0 { s[0] } else { 0.0 };
    if !(smax > 0.0) {
        return Err(Error::Numeric("hidden activations are identically zero".into()));
    }
    let smin = s[r - 1];
    let rtol = 1e-10 * n_h.max(n_t) as f64;
    let cut = rtol * smax;
    // H = U S V^T, H^+ = V S^+ U^T, beta = T V S^+ U^T.
    let mut tv = Mat::<f64>::zeros(t.nrows(), r);
    matmul(tv.as_mut(), Accum::Replace, t, svd.V(), 1.0, Par::Seq);
    let mut rank = 0;
    for j in 0..r {
        let inv = if s[j] > cut {
            rank += 1;
            1.0 / s[j]
        } else {
            0.0
        };
        for i in 0..t.nrows() {
            tv[(i, j)] *= inv;
        }
    }
    let mut beta = Mat::<f64>::zeros(t.nrows(), n_h);
    matmul(beta.as_mut(), Accum::Replace, tv.as_ref(), svd.U().transpose(), 1.0, Par::Seq);
    let cond = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    Ok((beta, TrainReport { method: SolveMethod::DirectSvd, gram_condition: cond, rank }))
}

/// `T H^+` for explicit matrices (`H` is `n_h x n_t`, `T` is `k x n_t`).
pub fn pseudoinverse_apply(h: MatRef<'_, f64>, t: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if h.ncols() != t.ncols() {
        return Err(invalid(format!(
            "H has {} columns but T has {}",
            h.ncols(),
            t.ncols()
        )));
    }
    if h.ncols() == 0 || h.nrows() == 0 {
        return Err(invalid("pseudoinverse of an empty matrix"));
    }
    let (beta, _) = direct_svd_solve(h, t)?;
    check_finite(&beta)?;
    Ok(beta)
}

fn check_finite(m: &Mat<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::Numeric(format!("non-finite output weight at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn row_major(m: &Mat<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Network output `beta tanh(W x + b)`.
pub fn infer(model: &ElmModel, x: &[f64]) -> Result<Vec<f64>> {
    let beta = model
        .beta
        .as_ref()
        .ok_or_else(|| Error::State("model has no output weights; train it first".into()))?;
    let h = model.hidden(x)?;
    Ok(beta
        .chunks_exact(model.n_h)
        .map(|row| row.iter().zip(&h).map(|(b, h)| b * h).sum())
        .collect())
}

/// First index of the largest network output.
pub fn estimate_sto(model: &ElmModel, x: &[f64]) -> Result<usize> {
    Ok(argmax_first(&infer(model, x)?))
}

const MODEL_MAGIC: &[u8; 8] = b"SYNCFELM";
const MODEL_VERSION: u32 = 1;

pub fn save_model(model: &ElmModel, path: &Path) -> Result<()> {
    let beta = model
        .beta
        .as_ref()
        .ok_or_else(|| Error::State("refusing to save an untrained model".into()))?;
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(MODEL_MAGIC)?;
    put_u32(&mut out, MODEL_VERSION)?;
    put_u64(&mut out, model.k as u64)?;
    put_u64(&mut out, model.n_h as u64)?;
    out.write_all(&[model.input_kind.tag()])?;
    put_f64s(&mut out, &model.w)?;
    put_f64s(&mut out, &model.b)?;
    put_f64s(&mut out, beta)?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ElmModel> {
    let bytes = read_all(path)?;
    let mut cur = Cursor::new(&bytes, "model");
    if cur.take(8, "magic")? != MODEL_MAGIC {
        return Err(Error::Format("model: bad magic".into()));
    }
    let version = cur.u32("version")?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("model: unsupported version {version}")));
    }
    let k = cur.u64("K")? as usize;
    let n_h = cur.u64("N_h")? as usize;
    let input_kind = InputKind::from_tag(cur.u8("input kind")?)?;
    let input_dim = input_kind.input_dim(k);
    let expected = n_h
        .checked_mul(input_dim)
        .and_then(|v| v.checked_add(n_h))
        .and_then(|v| v.checked_add(k.checked_mul(n_h)?))
        .and_then(|v| v.checked_mul(8));
    if expected != Some(cur.remaining()) {
        return Err(Error::Format(format!(
            "model: header says K={k}, N_h={n_h} but payload is {} bytes",
            cur.remaining()
        )));
    }
    let w = cur.f64s(n_h * input_dim, "W")?;
    let b = cur.f64s(n_h, "b")?;
    let beta = cur.f64s(k * n_h, "beta")?;
    Ok(ElmModel { input_kind, k, n_h, input_dim, w, b, beta: Some(beta) })
}
