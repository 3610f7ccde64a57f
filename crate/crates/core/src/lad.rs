//! Least-absolute-deviation subset selection.
//!
//! The non-smooth loss `g₁(β) = ‖y − Xβ‖₁` is smoothed through its dual
//! representation `g₁(β; τ) = sup_{‖w‖∞ ≤ 1} (⟨y − Xβ, w⟩ − τ/2 ‖w‖²)`,
//! which is a Huber-type function with gradient Lipschitz constant
//! `λ_max(X'X)/τ`. Continuation drives τ down geometrically. The smoothed
//! loss under-approximates pointwise, `g₁ − nτ/2 ≤ g_τ ≤ g₁`, so smoothed
//! node relaxations give valid lower bounds for the exact-LAD problem while
//! incumbents are evaluated exactly.

use nalgebra::DVector;

use crate::bounds::{qp_param_bounds, ParamBounds};
use crate::error::Result;
use crate::firstorder::{algorithm2, FirstOrderConfig, LossPlugin};
use crate::linalg::{restricted_least_squares, spectral_bound, Dataset};
use crate::miqp::{
    bnb_solve_with, BnbConfig, IncumbentEvaluator, SolveReport, SolutionProvenance,
    SparseSolution, SubsetProblem,
};

/// Exact LAD loss `‖y − Xβ‖₁`.
pub fn lad_value(data: &Dataset, beta: &DVector<f64>) -> f64 {
    (data.y() - data.x() * beta).iter().map(|v| v.abs()).sum()
}

/// Value and gradient of the smoothed LAD loss at `beta`.
///
/// Per residual the dual maximizer is `w* = clip(r/τ)`, giving `r²/(2τ)`
/// inside the band and `|r| − τ/2` outside; the gradient is `−X'w*`.
pub fn smoothed_lad_value_grad(
    beta: &DVector<f64>,
    data: &Dataset,
    tau: f64,
) -> (f64, DVector<f64>) {
    assert!(tau > 0.0);
    let r = data.y() - data.x() * beta;
    let mut value = 0.0;
    let mut w = DVector::zeros(data.n());
    for i in 0..data.n() {
        let ri = r[i];
        if ri.abs() <= tau {
            value += ri * ri / (2.0 * tau);
            w[i] = ri / tau;
        } else {
            value += ri.abs() - tau / 2.0;
            w[i] = ri.signum();
        }
    }
    (value, -data.x().tr_mul(&w))
}

/// Smoothed LAD loss with parameter τ; implements [`LossPlugin`] with
/// `ℓ = λ_max(X'X)/τ`.
pub struct SmoothedLadLoss<'a> {
    data: &'a Dataset,
    tau: f64,
    gram_lmax: f64,
}

impl<'a> SmoothedLadLoss<'a> {
    pub fn new(data: &'a Dataset, tau: f64) -> Result<Self> {
        assert!(tau > 0.0);
        let gram_lmax = spectral_bound(data.x(), 1e-6)?;
        Ok(SmoothedLadLoss {
            data,
            tau,
            gram_lmax,
        })
    }

    /// Same data and cached spectral constant, different τ.
    pub fn with_tau(&self, tau: f64) -> Self {
        assert!(tau > 0.0);
        SmoothedLadLoss {
            data: self.data,
            tau,
            gram_lmax: self.gram_lmax,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }
}

impl LossPlugin for SmoothedLadLoss<'_> {
    fn value(&self, beta: &DVector<f64>) -> f64 {
        smoothed_lad_value_grad(beta, self.data, self.tau).0
    }

    fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        smoothed_lad_value_grad(beta, self.data, self.tau).1
    }

    fn lipschitz(&self) -> f64 {
        self.gram_lmax / self.tau
    }

    fn dim(&self) -> usize {
        self.data.p()
    }
}

/// Number of outer continuation stages run by [`lad_continuation`]:
/// stages execute at `τ0, γτ0, …` while `τ ≥ tol_tau`.
pub fn continuation_stages(tau0: f64, gamma: f64, tol_tau: f64) -> usize {
    assert!(tau0 > tol_tau && tol_tau > 0.0 && gamma > 0.0 && gamma < 1.0);
    let mut tau = tau0;
    let mut stages = 0;
    while tau >= tol_tau {
        stages += 1;
        tau *= gamma;
    }
    stages
}

/// Controls for the LAD smoothing continuation.
#[derive(Debug, Clone)]
pub struct LadContinuationConfig {
    /// Initial smoothing; default `max_i |y_i|` (scale-aware).
    pub tau0: Option<f64>,
    /// Geometric decrease factor, default 0.8.
    pub gamma: f64,
    /// Exit once τ falls below this; default `1e-6 τ0`.
    pub tol_tau: Option<f64>,
    /// Inner solver settings; the step constant is re-derived per stage from
    /// the stage Lipschitz bound.
    pub inner: InnerSolverConfig,
}

/// Stage-level solver settings (the step constant tracks τ).
#[derive(Debug, Clone)]
pub struct InnerSolverConfig {
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LadContinuationConfig {
    fn default() -> Self {
        LadContinuationConfig {
            tau0: None,
            gamma: 0.8,
            tol_tau: None,
            inner: InnerSolverConfig {
                eps: 1e-4,
                max_iter: 500,
                seed: 0,
            },
        }
    }
}

/// k-sparse LAD fit by smoothing continuation: run the line-search solver on
/// `g₁(·; τ)` from the previous stage solution, shrink `τ ← γτ`, exit when
/// `τ < tol_tau`; the final support is polished against the exact LAD loss.
pub fn lad_continuation(
    data: &Dataset,
    k: usize,
    cfg: &LadContinuationConfig,
) -> Result<SparseSolution> {
    let scale = data.y().amax().max(f64::MIN_POSITIVE);
    let tau0 = cfg.tau0.unwrap_or(scale);
    let tol_tau = cfg.tol_tau.unwrap_or(1e-6 * tau0);
    assert!(tau0 > tol_tau && tol_tau > 0.0);
    let base = SmoothedLadLoss::new(data, tau0)?;
    let mut beta = DVector::zeros(data.p());
    let mut tau = tau0;
    while tau >= tol_tau {
        let plugin = base.with_tau(tau);
        let fo = FirstOrderConfig {
            l_step: 1.001 * plugin.lipschitz(),
            eps: cfg.inner.eps,
            max_iter: cfg.inner.max_iter,
            polish: false,
            seed: cfg.inner.seed,
            trace: None,
        };
        let sp = algorithm2(&plugin, k, &beta, &fo)?;
        beta = sp.beta;
        tau *= cfg.gamma;
    }
    let support: Vec<usize> = (0..data.p()).filter(|&i| beta[i] != 0.0).collect();
    let polished = lad_polish(data, &support);
    let support = (0..data.p()).filter(|&i| polished[i] != 0.0).collect();
    Ok(SparseSolution {
        objective: lad_value(data, &polished),
        beta: polished.iter().copied().collect(),
        support,
        provenance: SolutionProvenance::FirstOrder,
    })
}

/// Exact minimizer of `t ↦ Σ_i |r_i − t·x_i|`: a weighted median over the
/// breakpoints `r_i/x_i` with weights `|x_i|`.
fn weighted_median_step(r: &DVector<f64>, col: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(col.len());
    let mut total = 0.0;
    for (i, &x) in col.iter().enumerate() {
        if x != 0.0 {
            pts.push((r[i] / x, x.abs()));
            total += x.abs();
        }
    }
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    for (t, w) in &pts {
        acc += w;
        if acc >= total / 2.0 {
            return *t;
        }
    }
    pts.last().unwrap().0
}

/// Minimizes the exact LAD loss over a fixed support: smoothing continuation
/// down to `τ = 1e-8 · scale`, then exact coordinate descent (each 1-D LAD
/// problem is a weighted median) until no coordinate move helps, so no
/// coordinate-wise descent direction improves the objective by more than
/// the stated tolerance.
pub fn lad_polish(data: &Dataset, support: &[usize]) -> DVector<f64> {
    let p = data.p();
    if support.is_empty() {
        return DVector::zeros(p);
    }
    let scale = data.y().amax().max(f64::MIN_POSITIVE);
    // Continuation on the restricted coordinates from the LS fit.
    let mut beta = restricted_least_squares(data, support);
    if let Ok(base) = SmoothedLadLoss::new(data, 1.0) {
        let mut tau = 0.25 * scale;
        let floor = 1e-8 * scale;
        while tau >= floor {
            let plugin = base.with_tau(tau);
            let step = 1.0 / plugin.lipschitz();
            for _ in 0..200 {
                let grad = plugin.gradient(&beta);
                let gnorm: f64 = support
                    .iter()
                    .map(|&j| grad[j] * grad[j])
                    .sum::<f64>()
                    .sqrt();
                if gnorm <= 1e-9 * (1.0 + scale) {
                    break;
                }
                for &j in support {
                    beta[j] -= step * grad[j];
                }
            }
            tau *= 0.5;
        }
    }
    // Exact finisher: cyclic weighted-median coordinate descent.
    let cols: Vec<Vec<f64>> = support
        .iter()
        .map(|&j| data.x().column(j).iter().copied().collect())
        .collect();
    let mut r = data.y() - data.x() * &beta;
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for (s, &j) in support.iter().enumerate() {
            let t = weighted_median_step(&r, &cols[s]);
            if t != 0.0 {
                beta[j] += t;
                for (i, &x) in cols[s].iter().enumerate() {
                    r[i] -= t * x;
                }
                moved = moved.max(t.abs());
            }
        }
        if moved <= 1e-12 * (1.0 + scale) {
            break;
        }
    }
    debug_assert!(lad_coordinate_optimal(data, &beta, support, 1e-6));
    beta
}

/// Checks the subgradient optimality condition coordinate-wise: both
/// one-sided directional derivatives of the exact LAD loss are ≥ −tol on
/// the support.
pub fn lad_coordinate_optimal(
    data: &Dataset,
    beta: &DVector<f64>,
    support: &[usize],
    tol: f64,
) -> bool {
    let r = data.y() - data.x() * beta;
    let zero_band = 1e-10 * (1.0 + data.y().amax());
    for &j in support {
        let mut plus = 0.0;
        let mut minus = 0.0;
        for i in 0..data.n() {
            let x = data.x()[(i, j)];
            if r[i].abs() <= zero_band {
                plus += x.abs();
                minus += x.abs();
            } else {
                plus -= r[i].signum() * x;
                minus += r[i].signum() * x;
            }
        }
        if plus < -tol || minus < -tol {
            return false;
        }
    }
    true
}

/// LAD-Lasso: minimizes `‖y − Xβ‖₁ + λ‖β‖₁` by proximal gradient on the
/// smoothed loss (soft-threshold step `λ/L`) with the same τ-continuation.
pub fn lad_lasso(data: &Dataset, lambda: f64) -> Result<DVector<f64>> {
    assert!(lambda >= 0.0);
    let p = data.p();
    let scale = data.y().amax().max(f64::MIN_POSITIVE);
    let base = SmoothedLadLoss::new(data, 1.0)?;
    let mut beta = DVector::zeros(p);
    let mut tau = scale;
    let floor = 1e-6 * scale;
    while tau >= floor {
        let plugin = base.with_tau(tau);
        let l = plugin.lipschitz();
        let step = 1.0 / l;
        let shrink = lambda / l;
        for _ in 0..400 {
            let grad = plugin.gradient(&beta);
            let mut next = DVector::zeros(p);
            for j in 0..p {
                let v = beta[j] - step * grad[j];
                next[j] = v.signum() * (v.abs() - shrink).max(0.0);
            }
            let delta = (&next - &beta).norm();
            beta = next;
            if delta <= 1e-8 * (1.0 + scale) {
                break;
            }
        }
        tau *= 0.8;
    }
    Ok(beta)
}

/// Incumbent evaluation against the exact LAD loss: supports are re-fit by
/// [`lad_polish`] and objectives are exact, so the branch-and-bound gap is
/// conservative (exact-LAD upper bound vs smoothed lower bound).
pub struct LadIncumbent<'a> {
    pub data: &'a Dataset,
}

impl IncumbentEvaluator for LadIncumbent<'_> {
    fn polish(&self, support: &[usize]) -> DVector<f64> {
        lad_polish(self.data, support)
    }

    fn value(&self, beta: &DVector<f64>) -> f64 {
        lad_value(self.data, beta)
    }
}

/// Default relaxation smoothing for [`lad_bnb`]: `gap_tol · UB₀ / n` keeps
/// the smoothing-induced slack `nτ/2` below the requested gap (with a small
/// floor so τ stays positive at `gap_tol = 0`).
pub fn default_relax_tau(ub0: f64, n: usize, gap_tol: f64) -> f64 {
    let budget = gap_tol.max(1e-9) * ub0.abs().max(f64::MIN_POSITIVE);
    (budget / n as f64).max(1e-12)
}

/// Certified coefficient bounds for the LAD problem: any β with
/// `‖y − Xβ‖₁ ≤ UB` also satisfies `½‖y − Xβ‖² ≤ UB²/2`, so the
/// least-squares level-set machinery bounds the LAD optimum.
pub fn lad_certified_bounds(data: &Dataset, k: usize, lad_ub: f64) -> Result<ParamBounds> {
    qp_param_bounds(data, k, 0.5 * lad_ub * lad_ub)
}

/// Branch-and-bound for LAD subset selection. Node relaxations use the
/// smoothed loss at the problem's τ (valid lower bounds for exact LAD since
/// the smoothed loss under-approximates pointwise); incumbents are evaluated
/// with exact LAD.
pub fn lad_bnb(
    prob: &SubsetProblem<SmoothedLadLoss>,
    warm: Option<&SparseSolution>,
    cfg: &BnbConfig,
) -> Result<SolveReport> {
    let evaluator = LadIncumbent { data: prob.data };
    bnb_solve_with(prob, warm, cfg, &evaluator)
}
