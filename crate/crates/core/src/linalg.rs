//! Dense linear-algebra substrate: standardization, spectral constants,
//! restricted least squares, and the projection / linear-minimization oracles
//! consumed by the solvers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A standardized regression dataset.
///
/// Columns of `x` have zero mean and unit ℓ2 norm (within 1e-10). Build one
/// with [`standardize`] or [`Dataset::new`] if the data is already in that
/// form.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Wraps an already-standardized design matrix and response, checking the
    /// column invariants.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData("empty design matrix".into()));
        }
        if y.len() != n {
            return Err(Error::InvalidData(format!(
                "response length {} does not match {} rows",
                y.len(),
                n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        for j in 0..p {
            let col = x.column(j);
            let mean = col.sum() / n as f64;
            if mean.abs() > 1e-10 {
                return Err(Error::InvalidData(format!(
                    "column {j} has mean {mean:e}, expected 0"
                )));
            }
            let norm = col.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidData(format!(
                    "column {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Dataset { x, y })
    }

    /// Wraps raw parts without checking the standardization invariants.
    ///
    /// For constructed designs (orthonormal blocks, duplicated columns) used
    /// by tests and oracles; solver behavior on such data is well defined but
    /// the coherence/bound theory assumes standardized columns.
    #[doc(hidden)]
    pub fn new_unchecked(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        Dataset { x, y }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Correlations `X'y`.
    pub fn xty(&self) -> DVector<f64> {
        self.x.tr_mul(&self.y)
    }

    /// Restriction of `X` to the given columns.
    pub fn columns(&self, support: &[usize]) -> DMatrix<f64> {
        let n = self.n();
        let mut sub = DMatrix::zeros(n, support.len());
        for (c, &j) in support.iter().enumerate() {
            sub.set_column(c, &self.x.column(j));
        }
        sub
    }
}

/// Per-column centering/scaling recorded by [`standardize`], so fitted
/// coefficients can be mapped back to raw units.
#[derive(Debug, Clone)]
pub struct StandardizeMap {
    pub col_means: Vec<f64>,
    pub col_scales: Vec<f64>,
    pub y_mean: Option<f64>,
}

impl StandardizeMap {
    /// Maps standardized-unit coefficients back to raw units, returning the
    /// raw coefficient vector and the intercept.
    pub fn coeffs_to_raw(&self, beta_std: &DVector<f64>) -> (DVector<f64>, f64) {
        let mut raw = DVector::zeros(beta_std.len());
        let mut intercept = self.y_mean.unwrap_or(0.0);
        for j in 0..beta_std.len() {
            raw[j] = beta_std[j] / self.col_scales[j];
            intercept -= raw[j] * self.col_means[j];
        }
        (raw, intercept)
    }
}

/// Centers every column of `x_raw` and scales it to unit ℓ2 norm; centers the
/// response iff `center_y` is set.
pub fn standardize(
    x_raw: &DMatrix<f64>,
    y_raw: &DVector<f64>,
    center_y: bool,
) -> Result<(Dataset, StandardizeMap)> {
    let (n, p) = x_raw.shape();
    if n == 0 || p == 0 || y_raw.len() != n {
        return Err(Error::InvalidData(format!(
            "incompatible shapes: X is {n}x{p}, y has length {}",
            y_raw.len()
        )));
    }
    let mut x = x_raw.clone();
    let mut means = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for j in 0..p {
        let mean = x.column(j).sum() / n as f64;
        let mut col = x.column_mut(j);
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm < 1e-12 {
            return Err(Error::ZeroVarianceColumn(j));
        }
        col /= norm;
        means.push(mean);
        scales.push(norm);
    }
    let y_mean = if center_y {
        Some(y_raw.sum() / n as f64)
    } else {
        None
    };
    let y = match y_mean {
        Some(m) => y_raw.add_scalar(-m),
        None => y_raw.clone(),
    };
    let map = StandardizeMap {
        col_means: means,
        col_scales: scales,
        y_mean,
    };
    Ok((Dataset::new(x, y)?, map))
}

/// Upper bound on `λ_max(X'X)` via power iteration on the Gram operator.
///
/// The converged Rayleigh quotient is inflated by `(1 + tol)` so the returned
/// value is safe to use as a gradient Lipschitz constant.
pub fn spectral_bound(x: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let p = x.ncols();
    let cap = 10 * p + 1000;
    // Fixed start vector; a random direction has nonzero overlap with the
    // top eigenspace almost surely.
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
    let mut v = DVector::from_fn(p, |_, _| rng.random::<f64>() - 0.5);
    let nv = v.norm();
    if nv == 0.0 {
        v[0] = 1.0;
    } else {
        v /= nv;
    }
    let mut lambda = 0.0f64;
    for _ in 0..cap {
        let w = x.tr_mul(&(x * &v));
        let new_lambda = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            // X'X v = 0 with v unit: the matrix is zero on this subspace.
            return Ok(0.0);
        }
        v = w / wn;
        if (new_lambda - lambda).abs() <= 0.25 * tol * new_lambda.max(f64::MIN_POSITIVE) {
            return Ok(new_lambda * (1.0 + tol));
        }
        lambda = new_lambda;
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iters: cap,
        tol,
    })
}

/// Intersection of a coordinate box with an ℓ1 ball.
///
/// The region is `{β : l ≤ β ≤ u} ∩ {‖β − l1_center‖₁ ≤ l1_radius}`, where
/// the ℓ1 sum optionally ranges over a subset of the coordinates
/// (`l1_scope`) — node relaxations budget only the undecided coordinates.
#[derive(Debug, Clone)]
pub struct FeasibleRegion {
    pub l: DVector<f64>,
    pub u: DVector<f64>,
    pub l1_radius: f64,
    pub l1_center: DVector<f64>,
    /// Coordinates counted by the ℓ1 constraint; `None` means all.
    pub l1_scope: Option<Vec<bool>>,
}

impl FeasibleRegion {
    /// Box-only region (infinite ℓ1 radius).
    pub fn box_only(l: DVector<f64>, u: DVector<f64>) -> Result<Self> {
        let center = DVector::zeros(l.len());
        Self::new(l, u, f64::INFINITY, center)
    }

    /// Box ∩ zero-centered ℓ1 ball.
    pub fn with_l1(l: DVector<f64>, u: DVector<f64>, radius: f64) -> Result<Self> {
        let center = DVector::zeros(l.len());
        Self::new(l, u, radius, center)
    }

    /// Checked constructor; fails with `EmptyRegion` when the box and ball do
    /// not intersect.
    pub fn new(
        l: DVector<f64>,
        u: DVector<f64>,
        l1_radius: f64,
        l1_center: DVector<f64>,
    ) -> Result<Self> {
        let region = FeasibleRegion {
            l,
            u,
            l1_radius,
            l1_center,
            l1_scope: None,
        };
        region.check_nonempty()?;
        Ok(region)
    }

    /// Restricts the ℓ1 constraint to the masked coordinates.
    pub fn with_scope(mut self, scope: Vec<bool>) -> Result<Self> {
        assert_eq!(scope.len(), self.l.len());
        self.l1_scope = Some(scope);
        self.check_nonempty()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    #[inline]
    fn in_scope(&self, i: usize) -> bool {
        self.l1_scope.as_ref().map_or(true, |s| s[i])
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.l1_radius < 0.0 || self.l1_radius.is_nan() {
            return Err(Error::EmptyRegion);
        }
        let mut need = 0.0;
        for i in 0..self.dim() {
            if self.l[i] > self.u[i] {
                return Err(Error::EmptyRegion);
            }
            if self.in_scope(i) {
                let clipped = self.l1_center[i].clamp(self.l[i], self.u[i]);
                need += (clipped - self.l1_center[i]).abs();
            }
        }
        // The box point closest (in scoped ℓ1) to the ball center must lie
        // inside the ball.
        if need > self.l1_radius * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::EmptyRegion);
        }
        Ok(())
    }

    /// Feasibility test with absolute slack `tol` on every constraint.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let mut l1 = 0.0;
        for i in 0..self.dim() {
            if x[i] < self.l[i] - tol || x[i] > self.u[i] + tol {
                return false;
            }
            if self.in_scope(i) {
                l1 += (x[i] - self.l1_center[i]).abs();
            }
        }
        l1 <= self.l1_radius + tol
    }
}

#[inline]
fn shrink(v: f64, theta: f64) -> f64 {
    v.signum() * (v.abs() - theta).max(0.0)
}

/// Euclidean projection of `c` onto a box ∩ ℓ1-ball region.
///
/// Shift by the ball center; if the box clip already satisfies the ℓ1
/// constraint it is the projection. Otherwise the projection is
/// `clip(shrink(c, θ))` where `θ > 0` is the root of the monotone map
/// `θ ↦ ‖clip(shrink(c, θ))‖₁ − r`, located by bisection.
pub fn project(c: &DVector<f64>, region: &FeasibleRegion) -> Result<DVector<f64>> {
    region.check_nonempty()?;
    let p = region.dim();
    assert_eq!(c.len(), p);
    // Shifted coordinates: d = c − center, box [lo, hi].
    let mut d = DVector::zeros(p);
    let mut lo = DVector::zeros(p);
    let mut hi = DVector::zeros(p);
    for i in 0..p {
        d[i] = c[i] - region.l1_center[i];
        lo[i] = region.l[i] - region.l1_center[i];
        hi[i] = region.u[i] - region.l1_center[i];
    }
    let scoped_l1 = |x: &DVector<f64>| -> f64 {
        (0..p)
            .filter(|&i| region.in_scope(i))
            .map(|i| x[i].abs())
            .sum()
    };
    let clip_at = |theta: f64| -> DVector<f64> {
        DVector::from_fn(p, |i, _| {
            let v = if region.in_scope(i) { shrink(d[i], theta) } else { d[i] };
            v.clamp(lo[i], hi[i])
        })
    };

    let clipped = clip_at(0.0);
    if scoped_l1(&clipped) <= region.l1_radius {
        return Ok(clipped + &region.l1_center);
    }
    // Bisection bracket: at θ = max scoped |d_i| every scoped coordinate has
    // shrunk to 0, and ‖clip(0)‖₁ ≤ r by region non-emptiness.
    let mut t_lo = 0.0f64;
    let mut t_hi = (0..p)
        .filter(|&i| region.in_scope(i))
        .map(|i| d[i].abs())
        .fold(0.0f64, f64::max);
    let tol = 1e-12 * (1.0 + t_hi);
    for _ in 0..200 {
        if t_hi - t_lo <= tol {
            break;
        }
        let mid = 0.5 * (t_lo + t_hi);
        if scoped_l1(&clip_at(mid)) > region.l1_radius {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    Ok(clip_at(t_hi) + &region.l1_center)
}

/// Minimizer of `⟨g, s⟩` over a box ∩ ℓ1-ball region.
///
/// After shifting by the ball center this is a continuous knapsack: every
/// scoped coordinate starts at the box point nearest the shifted origin and
/// budget `r` is spent greedily in decreasing `|g_i|` order. Coordinates with
/// `g_i = 0` stay at the shifted origin (canonical choice).
pub fn linear_min_oracle(g: &DVector<f64>, region: &FeasibleRegion) -> Result<DVector<f64>> {
    region.check_nonempty()?;
    let p = region.dim();
    assert_eq!(g.len(), p);
    let mut x = DVector::zeros(p);
    let mut lo = DVector::zeros(p);
    let mut hi = DVector::zeros(p);
    for i in 0..p {
        lo[i] = region.l[i] - region.l1_center[i];
        hi[i] = region.u[i] - region.l1_center[i];
        x[i] = 0.0f64.clamp(lo[i], hi[i]);
    }
    let mut budget = region.l1_radius;
    if budget.is_finite() {
        for i in 0..p {
            if region.in_scope(i) {
                budget -= x[i].abs();
            }
        }
        budget = budget.max(0.0);
    }

    // Coordinates outside the ℓ1 scope cost no budget: straight to the
    // objective-minimizing box endpoint.
    for i in 0..p {
        if g[i] == 0.0 || region.in_scope(i) {
            continue;
        }
        let target = if g[i] > 0.0 { lo[i] } else { hi[i] };
        if target.is_infinite() {
            return Err(Error::UnboundedDirection(i));
        }
        x[i] = target;
    }

    // Scoped coordinates: greedy knapsack in decreasing |g_i|.
    let mut order: Vec<usize> = (0..p)
        .filter(|&i| g[i] != 0.0 && region.in_scope(i))
        .collect();
    order.sort_by(|&a, &b| {
        g[b].abs()
            .partial_cmp(&g[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    for i in order {
        let target = if g[i] > 0.0 { lo[i] } else { hi[i] };
        let avail = (target - x[i]).abs();
        if avail == 0.0 {
            continue;
        }
        if avail.is_infinite() && budget.is_infinite() {
            return Err(Error::UnboundedDirection(i));
        }
        let step = avail.min(budget);
        x[i] += (target - x[i]).signum() * step;
        if budget.is_finite() {
            budget -= step;
            if budget <= 0.0 {
                break;
            }
        }
    }
    Ok(x + &region.l1_center)
}

/// Least-squares fit restricted to a support: minimizes `½‖y − Xβ‖²` over
/// `{β : β_i = 0, i ∉ support}`, returning the minimum-norm minimizer when
/// the restricted design is rank deficient.
pub fn restricted_least_squares(data: &Dataset, support: &[usize]) -> DVector<f64> {
    let p = data.p();
    let mut beta = DVector::zeros(p);
    if support.is_empty() {
        return beta;
    }
    let xs = data.columns(support);
    let svd = xs.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12;
    match svd.solve(data.y(), eps) {
        Ok(sol) => {
            for (c, &j) in support.iter().enumerate() {
                beta[j] = sol[c];
            }
        }
        Err(_) => {
            // solve only fails when U/V were not requested; unreachable here.
            unreachable!("svd computed with singular vectors");
        }
    }
    beta
}

/// Loss value `½‖y − Xβ‖²`.
pub fn least_squares_value(data: &Dataset, beta: &DVector<f64>) -> f64 {
    let r = data.y() - data.x() * beta;
    0.5 * r.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn random_standardized(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, n, p);
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        standardize(&x, &y, true).unwrap().0
    }

    #[test]
    fn standardize_column_arithmetic() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_column_slice(&[0.0, 0.0, 0.0]);
        let (ds, map) = standardize(&x, &y, false).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(ds.x()[(0, 0)], -s, epsilon = 1e-14);
        assert_abs_diff_eq!(ds.x()[(1, 0)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ds.x()[(2, 0)], s, epsilon = 1e-14);
        assert_abs_diff_eq!(map.col_means[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(map.col_scales[0], 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn standardize_is_idempotent() {
        let ds = random_standardized(7, 20, 5);
        let (again, map) = standardize(ds.x(), ds.y(), false).unwrap();
        assert!((again.x() - ds.x()).abs().max() < 1e-10);
        for j in 0..5 {
            assert_abs_diff_eq!(map.col_means[j], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(map.col_scales[j], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 1.0, 2.0]);
        let y = DVector::zeros(3);
        match standardize(&x, &y, false) {
            Err(Error::ZeroVarianceColumn(0)) => {}
            other => panic!("expected ZeroVarianceColumn(0), got {other:?}"),
        }
    }

    #[test]
    fn coeffs_map_back_to_raw_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 15, 4);
        let y = DVector::from_fn(15, |i, _| x[(i, 1)] * 3.0 + 0.5);
        let (ds, map) = standardize(&x, &y, true).unwrap();
        let beta_std = restricted_least_squares(&ds, &[0, 1, 2, 3]);
        let (beta_raw, intercept) = map.coeffs_to_raw(&beta_std);
        for i in 0..15 {
            let pred: f64 = intercept + x.row(i).transpose().dot(&beta_raw);
            assert_abs_diff_eq!(pred, y[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn spectral_bound_orthonormal_columns() {
        // Identity-design Gram: λ_max = 1.
        let x = DMatrix::<f64>::identity(4, 4);
        let tol = 1e-9;
        let l = spectral_bound(&x, tol).unwrap();
        assert_abs_diff_eq!(l, 1.0 * (1.0 + tol), epsilon = 1e-9);
    }

    #[test]
    fn spectral_bound_duplicated_column() {
        let mut x = DMatrix::zeros(3, 2);
        x[(0, 0)] = 1.0;
        x[(0, 1)] = 1.0;
        let tol = 1e-9;
        let l = spectral_bound(&x, tol).unwrap();
        assert_abs_diff_eq!(l, 2.0 * (1.0 + tol), epsilon = 1e-8);
    }

    #[test]
    fn spectral_bound_matches_rayleigh_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 10, 6);
        let l = spectral_bound(&x, 1e-8).unwrap();
        for _ in 0..100 {
            let v = DVector::from_fn(6, |_, _| rng.random::<f64>() - 0.5);
            let q = (&x * &v).norm_squared() / v.norm_squared();
            assert!(l >= q - 1e-9, "spectral bound {l} below Rayleigh {q}");
        }
    }

    #[test]
    fn project_identity_when_feasible() {
        let region = FeasibleRegion::with_l1(
            DVector::from_element(2, -1.5),
            DVector::from_element(2, 1.5),
            2.0,
        )
        .unwrap();
        let c = DVector::from_column_slice(&[0.5, -0.5]);
        let out = project(&c, &region).unwrap();
        assert!((out - c).norm() < 1e-14);
    }

    #[test]
    fn project_hits_l1_boundary() {
        let region = FeasibleRegion::with_l1(
            DVector::from_element(2, -1.5),
            DVector::from_element(2, 1.5),
            1.0,
        )
        .unwrap();
        let c = DVector::from_column_slice(&[2.0, 0.0]);
        let out = project(&c, &region).unwrap();
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn project_output_no_further_than_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..25 {
            let p = 1 + (case % 6);
            let l = DVector::from_fn(p, |_, _| -(rng.random::<f64>() * 2.0));
            let u = DVector::from_fn(p, |_, _| rng.random::<f64>() * 2.0);
            let center = DVector::from_fn(p, |i, _| (l[i] + u[i]) * 0.5 * rng.random::<f64>());
            let r = rng.random::<f64>() * 2.0 + 0.1;
            let region = match FeasibleRegion::new(l.clone(), u.clone(), r, center.clone()) {
                Ok(reg) => reg,
                Err(_) => continue,
            };
            let c = DVector::from_fn(p, |_, _| rng.random::<f64>() * 8.0 - 4.0);
            let out = project(&c, &region).unwrap();
            assert!(region.contains(&out, 1e-9), "projection infeasible");
            let d_out = (&out - &c).norm_squared();
            for _ in 0..1000 {
                // Random feasible point: clip a sample, then pull toward the
                // center until inside the ball.
                let mut s = DVector::from_fn(p, |i, _| {
                    (center[i] + rng.random::<f64>() * 2.0 - 1.0).clamp(l[i], u[i])
                });
                let mut t = 1.0;
                while !region.contains(&s, 1e-12) && t > 1e-6 {
                    t *= 0.7;
                    s = DVector::from_fn(p, |i, _| {
                        (center[i] + (s[i] - center[i]) * t).clamp(l[i], u[i])
                    });
                }
                if !region.contains(&s, 1e-12) {
                    continue;
                }
                assert!(
                    d_out <= (&s - &c).norm_squared() + 1e-9,
                    "random feasible point closer than projection"
                );
            }
        }
    }

    #[test]
    fn lmo_free_coordinate_stays_at_origin() {
        let region = FeasibleRegion::box_only(
            DVector::from_element(2, -1.0),
            DVector::from_element(2, 1.0),
        )
        .unwrap();
        let g = DVector::from_column_slice(&[-1.0, 0.0]);
        let s = linear_min_oracle(&g, &region).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lmo_spends_budget_on_largest_gradient() {
        let region = FeasibleRegion::with_l1(
            DVector::from_element(2, -1.0),
            DVector::from_element(2, 1.0),
            1.0,
        )
        .unwrap();
        let g = DVector::from_column_slice(&[-3.0, -1.0]);
        let s = linear_min_oracle(&g, &region).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lmo_unbounded_direction_detected() {
        let region = FeasibleRegion::box_only(
            DVector::from_element(2, f64::NEG_INFINITY),
            DVector::from_element(2, f64::INFINITY),
        )
        .unwrap();
        let g = DVector::from_column_slice(&[0.0, 2.0]);
        match linear_min_oracle(&g, &region) {
            Err(Error::UnboundedDirection(1)) => {}
            other => panic!("expected UnboundedDirection(1), got {other:?}"),
        }
    }

    #[test]
    fn lmo_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for case in 0..20 {
            let p = 2 + (case % 5);
            let l = DVector::from_fn(p, |_, _| -(rng.random::<f64>() + 0.2));
            let u = DVector::from_fn(p, |_, _| rng.random::<f64>() + 0.2);
            let r = rng.random::<f64>() * 1.5 + 0.05;
            let region =
                FeasibleRegion::with_l1(l.clone(), u.clone(), r).unwrap();
            let g = DVector::from_fn(p, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let s = linear_min_oracle(&g, &region).unwrap();
            assert!(region.contains(&s, 1e-9));
            let best = g.dot(&s);
            for _ in 0..1000 {
                let mut pt = DVector::from_fn(p, |i, _| {
                    (rng.random::<f64>() * 2.0 - 1.0).clamp(l[i], u[i])
                });
                let l1: f64 = pt.iter().map(|v| v.abs()).sum();
                if l1 > r {
                    pt *= r / l1;
                }
                assert!(best <= g.dot(&pt) + 1e-10);
            }
        }
    }

    #[test]
    fn restricted_ls_empty_support_is_zero() {
        let ds = random_standardized(5, 10, 4);
        let beta = restricted_least_squares(&ds, &[]);
        assert_eq!(beta, DVector::zeros(4));
    }

    #[test]
    fn restricted_ls_orthonormal_single_column() {
        let x = DMatrix::<f64>::identity(5, 3);
        let y = DVector::from_column_slice(&[2.0, -1.0, 0.5, 0.0, 0.0]);
        let ds = Dataset { x, y };
        let beta = restricted_least_squares(&ds, &[1]);
        assert_abs_diff_eq!(beta[1], -1.0, epsilon = 1e-12);
        assert_eq!(beta[0], 0.0);
        assert_eq!(beta[2], 0.0);
    }

    #[test]
    fn restricted_ls_normal_equations_hold() {
        let ds = random_standardized(9, 25, 8);
        let support = [1usize, 3, 6];
        let beta = restricted_least_squares(&ds, &support);
        let resid = ds.y() - ds.x() * &beta;
        for &j in &support {
            let v = ds.x().column(j).dot(&resid);
            assert!(v.abs() < 1e-8, "normal equation violated: {v}");
        }
    }

    #[test]
    fn restricted_ls_rank_deficient_min_norm() {
        // Two identical columns: minimum-norm solution splits the weight.
        let base = DVector::from_column_slice(&[0.6, -0.8, 0.0]);
        let mut x = DMatrix::zeros(3, 2);
        x.set_column(0, &base);
        x.set_column(1, &base);
        let y = base.clone();
        let ds = Dataset { x, y };
        let beta = restricted_least_squares(&ds, &[0, 1]);
        assert_abs_diff_eq!(beta[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(beta[1], 0.5, epsilon = 1e-10);
    }
}
