//! Discrete projected-gradient solvers for `min g(β)` subject to `‖β‖₀ ≤ k`.
//!
//! The iteration map is `β ← H_k(β − ∇g(β)/L)` with `H_k` the hard-threshold
//! operator; the line-search variant moves along the segment between the
//! current iterate and the thresholded point. Multi-start runs the line-search
//! variant from randomized initial points and keeps the best solution.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{restricted_least_squares, spectral_bound, Dataset};

/// A smooth convex loss with a known gradient Lipschitz constant.
pub trait LossPlugin: Sync {
    /// Loss value `g(β) ≥ 0`.
    fn value(&self, beta: &DVector<f64>) -> f64;
    /// Gradient `∇g(β)`.
    fn gradient(&self, beta: &DVector<f64>) -> DVector<f64>;
    /// An upper bound `ℓ` on the gradient Lipschitz constant.
    fn lipschitz(&self) -> f64;
    /// Problem dimension `p`.
    fn dim(&self) -> usize;

    /// Exact minimizer of `t ↦ g(β + t(η − β))` when available in closed form
    /// (quadratic losses); `None` falls back to golden-section search.
    fn exact_line_min(&self, _beta: &DVector<f64>, _eta: &DVector<f64>) -> Option<f64> {
        None
    }

    /// Minimizes the loss over `{β : β_i = 0, i ∉ support}` (polishing).
    ///
    /// Default: gradient descent restricted to the support with step `1/ℓ`.
    fn restricted_minimize(&self, support: &[usize]) -> DVector<f64> {
        let mut beta = DVector::zeros(self.dim());
        if support.is_empty() {
            return beta;
        }
        let step = 1.0 / self.lipschitz();
        let scale = 1.0 + self.value(&beta).abs();
        for _ in 0..20_000 {
            let grad = self.gradient(&beta);
            let gnorm: f64 = support.iter().map(|&j| grad[j] * grad[j]).sum::<f64>().sqrt();
            if gnorm <= 1e-11 * scale {
                break;
            }
            for &j in support {
                beta[j] -= step * grad[j];
            }
        }
        beta
    }
}

/// Half squared-error loss `½‖y − Xβ‖²` over a standardized dataset.
pub struct LeastSquaresLoss<'a> {
    data: &'a Dataset,
    lip: f64,
}

impl<'a> LeastSquaresLoss<'a> {
    /// `ℓ = λ_max(X'X)`, inflated by the spectral tolerance so it is a safe
    /// upper bound.
    pub fn new(data: &'a Dataset) -> Result<Self> {
        let lip = spectral_bound(data.x(), 1e-6)?;
        Ok(LeastSquaresLoss { data, lip })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }
}

impl LossPlugin for LeastSquaresLoss<'_> {
    fn value(&self, beta: &DVector<f64>) -> f64 {
        let r = self.data.y() - self.data.x() * beta;
        0.5 * r.norm_squared()
    }

    fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let r = self.data.y() - self.data.x() * beta;
        -self.data.x().tr_mul(&r)
    }

    fn lipschitz(&self) -> f64 {
        self.lip
    }

    fn dim(&self) -> usize {
        self.data.p()
    }

    fn exact_line_min(&self, beta: &DVector<f64>, eta: &DVector<f64>) -> Option<f64> {
        let dir = eta - beta;
        let xd = self.data.x() * &dir;
        let denom = xd.norm_squared();
        if denom <= 0.0 {
            // Direction in the null space: the loss is constant along it.
            return Some(1.0);
        }
        let grad = self.gradient(beta);
        Some(grad.dot(&(beta - eta)) / denom)
    }

    fn restricted_minimize(&self, support: &[usize]) -> DVector<f64> {
        restricted_least_squares(self.data, support)
    }
}

/// Parameters for Algorithms 1 and 2.
#[derive(Debug, Clone)]
pub struct FirstOrderConfig {
    /// Step constant `L`; must strictly exceed the plugin Lipschitz bound.
    pub l_step: f64,
    /// Convergence tolerance on `‖β_{m+1} − β_m‖₂`.
    pub eps: f64,
    pub max_iter: usize,
    /// Re-fit coefficients on the final support.
    pub polish: bool,
    /// Seed for multi-start randomization.
    pub seed: u64,
    /// When set, a JSON-lines trace is written here.
    pub trace: Option<PathBuf>,
}

impl FirstOrderConfig {
    /// Defaults: `L = 1.001 ℓ`, `eps = 1e-4`, polishing on.
    pub fn for_plugin(plugin: &impl LossPlugin) -> Self {
        FirstOrderConfig {
            l_step: 1.001 * plugin.lipschitz(),
            eps: 1e-4,
            max_iter: 2000,
            polish: true,
            seed: 0,
            trace: None,
        }
    }

    fn validate(&self, plugin: &impl LossPlugin) -> Result<()> {
        if !(self.l_step > plugin.lipschitz()) {
            return Err(Error::SpecConflict(format!(
                "step constant L = {} must strictly exceed the Lipschitz bound {}",
                self.l_step,
                plugin.lipschitz()
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::SpecConflict("eps must be positive".into()));
        }
        Ok(())
    }
}

/// A k-sparse point returned by the discrete first-order solvers.
#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub beta: DVector<f64>,
    pub support: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖β − H_k(β − ∇g(β)/L)‖₂` at the returned point.
    pub stationarity_residual: f64,
}

/// One recorded iteration of a solver run.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    /// `‖β_{m+1} − β_m‖₂²` for this step (0 for the initial record).
    pub step_sq: f64,
    pub support: Vec<usize>,
    /// Smallest |β_i| over the recorded support (0 when empty).
    pub min_support_mag: f64,
}

/// Indices of the `k` largest-magnitude entries; ties keep the smaller index.
pub fn top_k_indices(c: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| {
        c[b].abs()
            .partial_cmp(&c[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(k.min(c.len()));
    idx
}

/// Hard-threshold operator `H_k`: keeps the `k` largest-magnitude entries of
/// `c` and zeroes the rest. The set-valued operator is canonicalized by
/// breaking magnitude ties toward the smaller index.
pub fn hard_threshold(c: &DVector<f64>, k: usize) -> DVector<f64> {
    let mut out = DVector::zeros(c.len());
    for j in top_k_indices(c, k) {
        out[j] = c[j];
    }
    out
}

fn support_of(beta: &DVector<f64>) -> Vec<usize> {
    (0..beta.len()).filter(|&i| beta[i] != 0.0).collect()
}

fn record_of(iter: usize, objective: f64, step_sq: f64, beta: &DVector<f64>) -> IterRecord {
    let support = support_of(beta);
    let min_support_mag = support
        .iter()
        .map(|&i| beta[i].abs())
        .fold(f64::INFINITY, f64::min);
    IterRecord {
        iter,
        objective,
        step_sq,
        support,
        min_support_mag: if min_support_mag.is_finite() {
            min_support_mag
        } else {
            0.0
        },
    }
}

fn support_fingerprint(support: &[usize]) -> u64 {
    // FNV-1a over the index bytes; stable across platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in support {
        for b in (i as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

struct TraceWriter {
    out: Option<BufWriter<File>>,
}

impl TraceWriter {
    fn open(cfg: &FirstOrderConfig) -> Result<Self> {
        let out = match &cfg.trace {
            Some(path) => Some(BufWriter::new(File::create(path)?)),
            None => None,
        };
        Ok(TraceWriter { out })
    }

    fn record(&mut self, rec: &IterRecord) -> Result<()> {
        if let Some(w) = self.out.as_mut() {
            writeln!(
                w,
                "{}",
                serde_json::json!({
                    "iter": rec.iter,
                    "objective": rec.objective,
                    "step_norm": rec.step_sq.sqrt(),
                    "support_fp": format!("{:016x}", support_fingerprint(&rec.support)),
                })
            )?;
        }
        Ok(())
    }
}

fn finish(
    plugin: &impl LossPlugin,
    k: usize,
    beta: DVector<f64>,
    iterations: usize,
    converged: bool,
    cfg: &FirstOrderConfig,
) -> StationaryPoint {
    let support = support_of(&beta);
    let beta = if cfg.polish && !support.is_empty() {
        plugin.restricted_minimize(&support)
    } else {
        beta
    };
    let support = support_of(&beta);
    let residual = {
        let step = &beta - plugin.gradient(&beta) / cfg.l_step;
        (&beta - hard_threshold(&step, k)).norm()
    };
    StationaryPoint {
        objective: plugin.value(&beta),
        support,
        iterations,
        converged,
        stationarity_residual: residual,
        beta,
    }
}

/// Algorithm 1 with the full iterate history.
pub fn algorithm1_traced(
    plugin: &impl LossPlugin,
    k: usize,
    beta1: &DVector<f64>,
    cfg: &FirstOrderConfig,
) -> Result<(StationaryPoint, Vec<IterRecord>)> {
    cfg.validate(plugin)?;
    let nnz = beta1.iter().filter(|v| **v != 0.0).count();
    if nnz > k {
        return Err(Error::NotKSparse { nnz, k });
    }
    let mut trace = TraceWriter::open(cfg)?;
    let mut history = Vec::new();
    let mut beta = beta1.clone();
    let rec = record_of(0, plugin.value(&beta), 0.0, &beta);
    trace.record(&rec)?;
    history.push(rec);

    let mut converged = false;
    let mut iterations = 0;
    for m in 1..=cfg.max_iter {
        let step = &beta - plugin.gradient(&beta) / cfg.l_step;
        let next = hard_threshold(&step, k);
        let step_sq = (&next - &beta).norm_squared();
        beta = next;
        iterations = m;
        let rec = record_of(m, plugin.value(&beta), step_sq, &beta);
        trace.record(&rec)?;
        history.push(rec);
        if step_sq.sqrt() <= cfg.eps {
            converged = true;
            break;
        }
    }
    Ok((finish(plugin, k, beta, iterations, converged, cfg), history))
}

/// Iterative hard thresholding: `β_{m+1} = H_k(β_m − ∇g(β_m)/L)` until the
/// step norm falls below `eps`, then an optional restricted re-fit on the
/// final support. Returns best-so-far with `converged = false` when the
/// iteration cap is reached.
pub fn algorithm1(
    plugin: &impl LossPlugin,
    k: usize,
    beta1: &DVector<f64>,
    cfg: &FirstOrderConfig,
) -> Result<StationaryPoint> {
    algorithm1_traced(plugin, k, beta1, cfg).map(|(sp, _)| sp)
}

fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn line_search(plugin: &impl LossPlugin, beta: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    if let Some(t) = plugin.exact_line_min(beta, eta) {
        return t;
    }
    let dir = eta - beta;
    let phi = |t: f64| plugin.value(&(beta + &dir * t));
    // Expand until the objective stops decreasing, then refine.
    let mut hi = 1.0;
    let mut best = phi(hi);
    for _ in 0..24 {
        let cand = phi(hi * 2.0);
        if cand >= best {
            break;
        }
        best = cand;
        hi *= 2.0;
    }
    golden_section(phi, 0.0, hi * 2.0, 48)
}

/// Algorithm 2 with the full history of `η` iterates.
pub fn algorithm2_traced(
    plugin: &impl LossPlugin,
    k: usize,
    beta1: &DVector<f64>,
    cfg: &FirstOrderConfig,
) -> Result<(StationaryPoint, Vec<IterRecord>)> {
    cfg.validate(plugin)?;
    let mut trace = TraceWriter::open(cfg)?;
    let mut history = Vec::new();
    let mut beta = beta1.clone();
    let rec = record_of(0, plugin.value(&beta), 0.0, &beta);
    trace.record(&rec)?;
    history.push(rec);

    let mut best_eta: Option<(f64, DVector<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;
    for m in 1..=cfg.max_iter {
        let step = &beta - plugin.gradient(&beta) / cfg.l_step;
        let eta = hard_threshold(&step, k);
        let eta_val = plugin.value(&eta);
        // The β iterate may violate the cardinality constraint; the solution
        // candidates are the k-sparse η iterates.
        if best_eta.as_ref().map_or(true, |(v, _)| eta_val < *v) {
            best_eta = Some((eta_val, eta.clone()));
        }
        let lambda = line_search(plugin, &beta, &eta);
        let next = &beta + (&eta - &beta) * lambda;
        let step_sq = (&next - &beta).norm_squared();
        beta = next;
        iterations = m;
        let rec = record_of(m, eta_val, step_sq, &eta);
        trace.record(&rec)?;
        history.push(rec);
        if step_sq.sqrt() <= cfg.eps {
            converged = true;
            break;
        }
    }
    let (_, eta_best) = best_eta.expect("max_iter >= 1");
    Ok((finish(plugin, k, eta_best, iterations, converged, cfg), history))
}

/// Algorithm 1 with a line search: each step moves to
/// `λ_m η_m + (1 − λ_m) β_m` where `η_m = H_k(β_m − ∇g(β_m)/L)` and `λ_m`
/// exactly minimizes the loss along the segment. The reported solution is the
/// best k-sparse `η_m` seen, optionally polished on its support. The starting
/// point need not be k-sparse.
pub fn algorithm2(
    plugin: &impl LossPlugin,
    k: usize,
    beta1: &DVector<f64>,
    cfg: &FirstOrderConfig,
) -> Result<StationaryPoint> {
    algorithm2_traced(plugin, k, beta1, cfg).map(|(sp, _)| sp)
}

/// The i-th multi-start initial point: zero for `i = 1`, otherwise a draw
/// from `N(0, 4I)` keyed by `(seed, i)`.
pub fn multi_start_point(seed: u64, i: usize, p: usize) -> DVector<f64> {
    let scale = (i.saturating_sub(1)).min(1) as f64;
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(i as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    DVector::from_fn(p, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * 2.0 * z
    })
}

/// Runs Algorithm 2 from `n_starts` randomized initial points and returns the
/// solution with the smallest objective. Starts run in parallel, each with an
/// independent stream keyed by `(cfg.seed, start index)`, so the result does
/// not depend on scheduling.
pub fn multi_start(
    plugin: &impl LossPlugin,
    k: usize,
    n_starts: usize,
    cfg: &FirstOrderConfig,
) -> Result<StationaryPoint> {
    assert!(n_starts >= 1);
    let p = plugin.dim();
    // Tracing individual starts would interleave; disabled under multi-start.
    let mut inner = cfg.clone();
    inner.trace = None;
    let results: Result<Vec<(usize, StationaryPoint)>> = (1..=n_starts)
        .into_par_iter()
        .map(|i| {
            let beta1 = multi_start_point(cfg.seed, i, p);
            algorithm2(plugin, k, &beta1, &inner).map(|sp| (i, sp))
        })
        .collect();
    let mut results = results?;
    results.sort_by(|(ia, a), (ib, b)| {
        a.objective
            .partial_cmp(&b.objective)
            .unwrap()
            .then(ia.cmp(ib))
    });
    Ok(results.into_iter().next().unwrap().1)
}

/// `ε`-approximate first-order stationarity: the residual
/// `‖β − H_k(β − ∇g(β)/L)‖₂` and whether it is within `eps`.
pub fn check_stationarity(
    beta: &DVector<f64>,
    plugin: &impl LossPlugin,
    k: usize,
    l_step: f64,
    eps: f64,
) -> Result<(bool, f64)> {
    let nnz = beta.iter().filter(|v| **v != 0.0).count();
    if nnz > k {
        return Err(Error::NotKSparse { nnz, k });
    }
    let step = beta - plugin.gradient(beta) / l_step;
    let residual = (beta - hard_threshold(&step, k)).norm();
    Ok((residual <= eps, residual))
}
