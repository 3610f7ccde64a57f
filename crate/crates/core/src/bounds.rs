//! Parameter bounds for the mixed-integer formulation: coherence-based
//! analysis, data-driven convex-QP level-set bounds, and warm-start
//! heuristics. The symbols are the coefficient box `M_U`, the coefficient
//! ℓ1 budget `M_ℓ`, and their fitted-value counterparts `M_U^ζ`, `M_ℓ^ζ`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dataset;

/// Pairwise coherence of a standardized design and the closures it implies
/// for the cumulative coherence and restricted eigenvalue surrogates.
#[derive(Debug, Clone, Copy)]
pub struct CoherenceProfile {
    /// `μ = max_{i≠j} |⟨X_i, X_j⟩|`.
    pub mu: f64,
}

impl CoherenceProfile {
    /// Upper bound `μ[k] ≤ μ·k` on the cumulative coherence.
    pub fn mu_cumulative_upper(&self, k: usize) -> f64 {
        self.mu * k as f64
    }

    /// Lower bound `η_k ≥ 1 − μ·(k−1)` on the restricted eigenvalue.
    pub fn eta_lower(&self, k: usize) -> f64 {
        1.0 - self.mu * (k.saturating_sub(1)) as f64
    }
}

/// Pairwise coherence from the full Gram matrix.
pub fn coherence(data: &Dataset) -> CoherenceProfile {
    let gram = data.x().tr_mul(data.x());
    let p = data.p();
    let mut mu: f64 = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            mu = mu.max(gram[(i, j)].abs());
        }
    }
    CoherenceProfile { mu }
}

/// Exact cumulative coherence `μ[k]`: for each column j the sum of the k
/// largest off-diagonal |Gram| entries in its row, maximized over j.
pub fn cumulative_coherence_exact(data: &Dataset, k: usize) -> f64 {
    let gram = data.x().tr_mul(data.x());
    let p = data.p();
    let mut best = 0.0f64;
    for j in 0..p {
        let mut row: Vec<f64> = (0..p)
            .filter(|&i| i != j)
            .map(|i| gram[(i, j)].abs())
            .collect();
        row.sort_by(|a, b| b.partial_cmp(a).unwrap());
        best = best.max(row.iter().take(k).sum());
    }
    best
}

/// Exact restricted eigenvalue `η_k = min_{|I|=k} λ_min(X_I'X_I)` by subset
/// enumeration. Test oracle; guarded to `p ≤ 20`.
pub fn restricted_eigenvalue_exact(data: &Dataset, k: usize) -> f64 {
    let p = data.p();
    assert!(p <= 20, "exact η_k enumeration is exponential; p ≤ 20 only");
    assert!(k >= 1 && k <= p);
    let gram = data.x().tr_mul(data.x());
    let mut eta = f64::INFINITY;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut sub = DMatrix::zeros(k, k);
        for (a, &i) in subset.iter().enumerate() {
            for (b, &j) in subset.iter().enumerate() {
                sub[(a, b)] = gram[(i, j)];
            }
        }
        let eig = sub.symmetric_eigen();
        eta = eta.min(eig.eigenvalues.min());
        // next k-combination of {0..p}
        let mut i = k;
        loop {
            if i == 0 {
                return eta;
            }
            i -= 1;
            if subset[i] != i + p - k {
                subset[i] += 1;
                for j in (i + 1)..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// How a set of parameter bounds was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsProvenance {
    Analytic,
    Qp,
    Warmstart,
}

/// The parameters of the bounded best-subset formulation.
///
/// Provable routes (analytic, QP) set `valid_certificate`; warm-start bounds
/// are heuristic and solutions outside the box are excluded without proof.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamBounds {
    /// `M_U`: bound on `‖β̂‖∞`.
    #[serde(with = "serde_inf")]
    pub beta_inf: f64,
    /// `M_ℓ`: bound on `‖β̂‖₁`.
    #[serde(with = "serde_inf")]
    pub beta_l1: f64,
    /// `M_U^ζ`: bound on `‖Xβ̂‖∞`.
    #[serde(with = "serde_inf")]
    pub fit_inf: f64,
    /// `M_ℓ^ζ`: bound on `‖Xβ̂‖₁`.
    #[serde(with = "serde_inf")]
    pub fit_l1: f64,
    /// Per-coordinate (possibly asymmetric) intervals `u_i⁻ ≤ β̂_i ≤ u_i⁺`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_coord_beta: Option<Vec<(f64, f64)>>,
    /// Per-sample intervals `v_i⁻ ≤ ⟨x_i, β̂⟩ ≤ v_i⁺`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_coord_fit: Option<Vec<(f64, f64)>>,
    pub provenance: BoundsProvenance,
    pub valid_certificate: bool,
}

impl ParamBounds {
    /// Effective box interval for coordinate `i`.
    pub fn beta_interval(&self, i: usize) -> (f64, f64) {
        match &self.per_coord_beta {
            Some(v) => v[i],
            None => (-self.beta_inf, self.beta_inf),
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let radii = [self.beta_inf, self.beta_l1, self.fit_inf, self.fit_l1];
        if radii.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::SpecConflict("bound radii must be >= 0".into()));
        }
        if let Some(v) = &self.per_coord_beta {
            if v.len() != p {
                return Err(Error::SpecConflict(format!(
                    "per-coordinate beta bounds have length {}, expected {p}",
                    v.len()
                )));
            }
            if v.iter().any(|(lo, hi)| lo > hi) {
                return Err(Error::SpecConflict("u_i^- > u_i^+".into()));
            }
        }
        if self.beta_inf.is_finite()
            && self.beta_l1.is_finite()
            && self.beta_l1 > p as f64 * self.beta_inf * (1.0 + 1e-12)
        {
            return Err(Error::SpecConflict("beta_l1 exceeds p * beta_inf".into()));
        }
        Ok(())
    }
}

/// JSON encoding for radii that may be infinite: numbers for finite values,
/// the strings "inf"/"-inf" otherwise (plain JSON has no infinities).
pub(crate) mod serde_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumOrStr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "expected number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

fn sorted_abs_correlations(data: &Dataset) -> Vec<f64> {
    let mut c: Vec<f64> = data.xty().iter().map(|v| v.abs()).collect();
    c.sort_by(|a, b| b.partial_cmp(a).unwrap());
    c
}

/// Sum of the k largest |x_ij| in each row, maximized over rows.
fn max_row_top_k(data: &Dataset, k: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..data.n() {
        let mut row: Vec<f64> = data.x().row(i).iter().map(|v| v.abs()).collect();
        row.sort_by(|a, b| b.partial_cmp(a).unwrap());
        best = best.max(row.iter().take(k).sum());
    }
    best
}

/// `‖Xβ̂‖₁ ≤ √n‖Xβ̂‖₂ ≤ √n‖y‖₂`: the optimal fit is a Euclidean projection
/// of `y`, and the ℓ1/ℓ2 conversion uses the ambient dimension n (the fit
/// vector has n coordinates regardless of the support size).
fn fit_l1_projection_bound(data: &Dataset) -> f64 {
    (data.n() as f64).sqrt() * data.y().norm()
}

fn sum_row_inf_norms(data: &Dataset) -> f64 {
    (0..data.n())
        .map(|i| data.x().row(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .sum()
}

/// Coherence-based bounds on the optimal solution of the k-subset problem,
/// using the surrogates `μ[k−1] ≤ μ(k−1)` and `η_k ≥ 1 − μ(k−1)`.
///
/// The ℓ1 and ℓ∞ coefficient bounds become infinite as soon as
/// `μ(k−1) ≥ 1`; the fitted-value ℓ1 bound then falls back to `√n‖y‖₂`.
pub fn analytic_bounds(data: &Dataset, k: usize) -> ParamBounds {
    assert!(k >= 1);
    let profile = coherence(data);
    let mu_hat = profile.mu_cumulative_upper(k - 1);
    let eta_hat = 1.0 - mu_hat;
    let corr = sorted_abs_correlations(data);
    let top_l1: f64 = corr.iter().take(k).sum();
    let top_l2: f64 = corr.iter().take(k).map(|v| v * v).sum::<f64>().sqrt();
    let y_norm = data.y().norm();

    let beta_l1 = if mu_hat < 1.0 {
        top_l1 / (1.0 - mu_hat)
    } else {
        f64::INFINITY
    };
    let beta_inf = if eta_hat > 0.0 {
        (top_l2 / eta_hat).min(y_norm / eta_hat.sqrt())
    } else {
        f64::INFINITY
    };
    // p·beta_inf also bounds the ℓ1 norm; keep the tighter of the two.
    let beta_l1 = beta_l1.min(data.p() as f64 * beta_inf);
    let fit_l1 = (sum_row_inf_norms(data) * beta_l1).min(fit_l1_projection_bound(data));
    let fit_inf = max_row_top_k(data, k) * beta_inf;

    ParamBounds {
        beta_inf,
        beta_l1,
        fit_inf,
        fit_l1,
        per_coord_beta: None,
        per_coord_fit: None,
        provenance: BoundsProvenance::Analytic,
        valid_certificate: true,
    }
}

/// Level-set machinery shared by the per-coordinate QP bounds: one spectral
/// factorization of `X` serves every index.
pub struct LevelSetBounds<'a> {
    data: &'a Dataset,
    /// Right singular vectors, thin, stored transposed (`min(n,p) × p`).
    v_t: DMatrix<f64>,
    sigma: DVector<f64>,
    rank: usize,
    full_column_rank: bool,
    beta_ls: DVector<f64>,
    /// `‖y − Xβ_ls‖²` (squared norm, not halved).
    resid_sq: f64,
}

impl<'a> LevelSetBounds<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let svd = data.x().clone().svd(true, true);
        let sigma = svd.singular_values.clone();
        let smax = sigma.max();
        let eps = smax * 1e-12;
        let rank = sigma.iter().filter(|s| **s > eps).count();
        let beta_ls = svd
            .solve(data.y(), eps)
            .expect("svd computed with singular vectors");
        let resid = data.y() - data.x() * &beta_ls;
        LevelSetBounds {
            data,
            v_t: svd.v_t.expect("v requested"),
            sigma,
            rank,
            full_column_rank: rank == data.p(),
            beta_ls,
            resid_sq: resid.norm_squared(),
        }
    }

    /// Unconstrained minimum of `½‖y − Xβ‖²`.
    pub fn loss_min(&self) -> f64 {
        0.5 * self.resid_sq
    }

    pub fn ols(&self) -> &DVector<f64> {
        &self.beta_ls
    }

    fn discriminant(&self, ub: f64) -> Result<f64> {
        let d = 2.0 * ub - self.resid_sq;
        let tol = 1e-9 * (1.0 + self.resid_sq);
        if d < -tol {
            return Err(Error::InfeasibleUB {
                ub,
                min: self.loss_min(),
            });
        }
        Ok(d.max(0.0))
    }

    /// `u_i⁻ ≤ β̂_i ≤ u_i⁺` over the level set `½‖y − Xβ‖² ≤ UB`.
    ///
    /// Closed form: the extremal β satisfies `X'Xβ = X'y − τ e_i`, and
    /// `‖(I−P_X)y + τ q_i‖² = 2·UB` pins τ through a scalar quadratic whose
    /// coefficient is `[(X'X)⁻¹]_{ii}`.
    pub fn beta_interval(&self, i: usize, ub: f64) -> Result<(f64, f64)> {
        if !self.full_column_rank {
            return Err(Error::SingularGram);
        }
        let disc = self.discriminant(ub)?;
        let gii: f64 = (0..self.rank)
            .map(|j| {
                let v = self.v_t[(j, i)];
                (v / self.sigma[j]).powi(2)
            })
            .sum();
        let delta = (disc * gii).sqrt();
        Ok((self.beta_ls[i] - delta, self.beta_ls[i] + delta))
    }

    /// `v_i⁻ ≤ ⟨x_i, β̂⟩ ≤ v_i⁺` over the level set; valid for any `n, p`
    /// because rows of `X` lie in the row space (pseudo-inverse route).
    pub fn fit_interval(&self, i: usize, ub: f64) -> Result<(f64, f64)> {
        let disc = self.discriminant(ub)?;
        let xi = self.data.x().row(i).transpose();
        let w = &self.v_t * &xi;
        let quad: f64 = (0..self.rank)
            .map(|j| (w[j] / self.sigma[j]).powi(2))
            .sum();
        let fitted = xi.dot(&self.beta_ls);
        let delta = (disc * quad).sqrt();
        Ok((fitted - delta, fitted + delta))
    }
}

/// Level-set interval for a single coefficient (n > p route).
pub fn qp_bound_beta(data: &Dataset, i: usize, ub: f64) -> Result<(f64, f64)> {
    LevelSetBounds::new(data).beta_interval(i, ub)
}

/// Level-set interval for a single fitted value (any n, p).
pub fn qp_bound_fit(data: &Dataset, i: usize, ub: f64) -> Result<(f64, f64)> {
    LevelSetBounds::new(data).fit_interval(i, ub)
}

/// All coefficient intervals, sharing one factorization; parallel over i.
pub fn qp_beta_intervals(data: &Dataset, ub: f64) -> Result<Vec<(f64, f64)>> {
    let engine = LevelSetBounds::new(data);
    (0..data.p())
        .into_par_iter()
        .map(|i| engine.beta_interval(i, ub))
        .collect()
}

/// All fitted-value intervals, sharing one factorization; parallel over i.
pub fn qp_fit_intervals(data: &Dataset, ub: f64) -> Result<Vec<(f64, f64)>> {
    let engine = LevelSetBounds::new(data);
    (0..data.n())
        .into_par_iter()
        .map(|i| engine.fit_interval(i, ub))
        .collect()
}

/// Folds per-coordinate level-set intervals into the global formulation
/// parameters: `M_U = max_i M_U^i`, `M_ℓ = Σ` of the k largest `M_U^i`,
/// and the fitted-value analogues. The per-coordinate intervals are retained
/// for the solver (they may be asymmetric).
pub fn assemble_qp_bounds(
    per_coord_beta: Option<Vec<(f64, f64)>>,
    per_coord_fit: Option<Vec<(f64, f64)>>,
    k: usize,
) -> Result<ParamBounds> {
    if per_coord_beta.is_none() && per_coord_fit.is_none() {
        return Err(Error::SpecConflict(
            "assemble_qp_bounds needs at least one per-coordinate family".into(),
        ));
    }
    let (beta_inf, beta_l1) = match &per_coord_beta {
        Some(v) => {
            let mut mags: Vec<f64> = v.iter().map(|(lo, hi)| lo.abs().max(hi.abs())).collect();
            mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
            (
                mags.first().copied().unwrap_or(0.0),
                mags.iter().take(k).sum(),
            )
        }
        None => (f64::INFINITY, f64::INFINITY),
    };
    let (fit_inf, fit_l1) = match &per_coord_fit {
        Some(v) => {
            let mags: Vec<f64> = v.iter().map(|(lo, hi)| lo.abs().max(hi.abs())).collect();
            (mags.iter().fold(0.0f64, |m, v| m.max(*v)), mags.iter().sum())
        }
        None => (f64::INFINITY, f64::INFINITY),
    };
    Ok(ParamBounds {
        beta_inf,
        beta_l1,
        fit_inf,
        fit_l1,
        per_coord_beta,
        per_coord_fit,
        provenance: BoundsProvenance::Qp,
        valid_certificate: true,
    })
}

/// Convenience: compute and assemble every QP bound the shape of the data
/// allows (coefficient intervals need full column rank; fitted-value
/// intervals always exist).
pub fn qp_param_bounds(data: &Dataset, k: usize, ub: f64) -> Result<ParamBounds> {
    let beta = match qp_beta_intervals(data, ub) {
        Ok(v) => Some(v),
        Err(Error::SingularGram) => None,
        Err(e) => return Err(e),
    };
    let fit = Some(qp_fit_intervals(data, ub)?);
    assemble_qp_bounds(beta, fit, k)
}

/// Heuristic bounds from an incumbent: `M_U = τ‖β_hyb‖∞`, `M_ℓ = k·M_U`,
/// fitted-value bounds through the coherence-theorem formulas. Solutions
/// outside this box are excluded without proof (`valid_certificate = false`).
pub fn warmstart_bounds(
    beta_hyb: &DVector<f64>,
    tau: f64,
    k: usize,
    data: &Dataset,
) -> ParamBounds {
    assert!(tau > 1.0, "warm-start multiplier must exceed one");
    let beta_inf = tau * beta_hyb.amax();
    let beta_l1 = k as f64 * beta_inf;
    let fit_l1 = (sum_row_inf_norms(data) * beta_l1).min(fit_l1_projection_bound(data));
    let fit_inf = max_row_top_k(data, k) * beta_inf;
    ParamBounds {
        beta_inf,
        beta_l1,
        fit_inf,
        fit_l1,
        per_coord_beta: None,
        per_coord_fit: None,
        provenance: BoundsProvenance::Warmstart,
        valid_certificate: false,
    }
}
