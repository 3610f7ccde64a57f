//! Comparator methods: coordinate-descent Lasso with KKT certificates,
//! debiased-Lasso refits, and forward stepwise regression.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{least_squares_value, restricted_least_squares, Dataset};

/// An ℓ1 regularization path: per-λ coefficient vectors along a strictly
/// descending grid.
#[derive(Debug, Clone)]
pub struct RegularizationPath {
    pub lambdas: Vec<f64>,
    pub solutions: Vec<DVector<f64>>,
    pub supports: Vec<Vec<usize>>,
    /// Per-λ KKT convergence flag (false entries are reported, not fatal).
    pub converged: Vec<bool>,
}

impl RegularizationPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Path summary as CSV rows `lambda,nnz,objective` where the objective
    /// is the penalized Lasso objective.
    pub fn to_csv(&self, data: &Dataset) -> String {
        let mut out = String::from("lambda,nnz,objective\n");
        for (i, lambda) in self.lambdas.iter().enumerate() {
            let beta = &self.solutions[i];
            let l1: f64 = beta.iter().map(|v| v.abs()).sum();
            let obj = least_squares_value(data, beta) + lambda * l1;
            out.push_str(&format!("{},{},{}\n", lambda, self.supports[i].len(), obj));
        }
        out
    }
}

/// Default path grid: `count` log-spaced values from `‖X'y‖∞` down to
/// `1e-4 ‖X'y‖∞`.
pub fn default_lambda_grid(data: &Dataset, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let lmax = data.xty().amax();
    let lmin = 1e-4 * lmax;
    let ratio = (lmin / lmax).ln();
    (0..count)
        .map(|i| lmax * (ratio * i as f64 / (count - 1) as f64).exp())
        .collect()
}

const KKT_TOL: f64 = 1e-6;

/// Lasso along a descending λ grid by cyclic coordinate descent with warm
/// starts. Unit-norm columns make each coordinate update a closed-form
/// soft-threshold. Every path point satisfies the KKT conditions within
/// 1e-6: `|X_j'r| = λ` on the active set (sign-aligned) and `|X_j'r| ≤ λ`
/// off it.
pub fn lasso_cd(data: &Dataset, lambdas: &[f64]) -> Result<RegularizationPath> {
    if lambdas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::SpecConflict(
            "lambda grid must be strictly descending".into(),
        ));
    }
    let p = data.p();
    let mut beta = DVector::zeros(p);
    let mut resid = data.y().clone();
    let mut path = RegularizationPath {
        lambdas: lambdas.to_vec(),
        solutions: Vec::with_capacity(lambdas.len()),
        supports: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
    };
    for &lambda in lambdas {
        let mut ok = false;
        for _sweep in 0..10_000 {
            let mut max_move = 0.0f64;
            for j in 0..p {
                let xj = data.x().column(j);
                let z: f64 = beta[j] + xj.dot(&resid);
                let new = z.signum() * (z.abs() - lambda).max(0.0);
                let delta = new - beta[j];
                if delta != 0.0 {
                    resid -= xj * delta;
                    beta[j] = new;
                    max_move = max_move.max(delta.abs());
                }
            }
            if max_move < 0.1 * KKT_TOL && kkt_violation(data, &beta, &resid, lambda) < 0.5 * KKT_TOL
            {
                ok = true;
                break;
            }
        }
        path.solutions.push(beta.clone());
        path.supports
            .push((0..p).filter(|&j| beta[j] != 0.0).collect());
        path.converged.push(ok);
    }
    Ok(path)
}

fn kkt_violation(data: &Dataset, beta: &DVector<f64>, resid: &DVector<f64>, lambda: f64) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..data.p() {
        let g = data.x().column(j).dot(resid);
        if beta[j] != 0.0 {
            worst = worst.max((g - lambda * beta[j].signum()).abs());
        } else {
            worst = worst.max((g.abs() - lambda).max(0.0));
        }
    }
    worst
}

/// Which debiased models to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DebiasVariant {
    /// One model: the unrestricted LS refit on the support at the given path
    /// index (the caller picks the validation-optimal λ).
    AtLambda(usize),
    /// An LS refit per path point; each is a feasible k-sparse point for the
    /// subset problem at `k = |support(λ)|`.
    PerLambdaPath,
}

/// A debiased model: LS re-fit on a Lasso support.
#[derive(Debug, Clone)]
pub struct DebiasedModel {
    pub lambda: f64,
    pub beta: DVector<f64>,
    pub support: Vec<usize>,
}

/// Unrestricted least squares on Lasso supports, removing the ℓ1 shrinkage.
pub fn debiased_lasso(
    data: &Dataset,
    path: &RegularizationPath,
    variant: DebiasVariant,
) -> Vec<DebiasedModel> {
    let refit = |idx: usize| {
        let support = path.supports[idx].clone();
        let beta = restricted_least_squares(data, &support);
        DebiasedModel {
            lambda: path.lambdas[idx],
            beta,
            support,
        }
    };
    match variant {
        DebiasVariant::AtLambda(idx) => vec![refit(idx)],
        DebiasVariant::PerLambdaPath => (0..path.len()).map(refit).collect(),
    }
}

/// One step of the forward-stepwise sequence.
#[derive(Debug, Clone)]
pub struct StepModel {
    pub support: Vec<usize>,
    pub beta: DVector<f64>,
    pub objective: f64,
}

/// Greedy forward stepwise: at each step add the feature whose inclusion
/// most reduces the residual sum of squares, re-fitting by restricted least
/// squares. Returns the nested models for `k = 1..=k_max`.
pub fn forward_stepwise(data: &Dataset, k_max: usize) -> Vec<StepModel> {
    assert!(k_max <= data.n().min(data.p()));
    let p = data.p();
    let mut support: Vec<usize> = Vec::new();
    let mut models = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for j in 0..p {
            if support.contains(&j) {
                continue;
            }
            let mut trial = support.clone();
            trial.push(j);
            trial.sort_unstable();
            let beta = restricted_least_squares(data, &trial);
            let val = least_squares_value(data, &beta);
            match &best {
                Some((v, _, _)) if val >= *v => {}
                _ => best = Some((val, j, beta)),
            }
        }
        let (objective, j, beta) = best.expect("k_max <= p leaves a candidate");
        support.push(j);
        support.sort_unstable();
        models.push(StepModel {
            support: support.clone(),
            beta,
            objective,
        });
    }
    models
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standardize;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        standardize(&x, &y, true).unwrap().0
    }

    #[test]
    fn lasso_zero_above_lambda_max() {
        let ds = random_dataset(1, 25, 6);
        let lmax = ds.xty().amax();
        let path = lasso_cd(&ds, &[1.5 * lmax, 1.0001 * lmax]).unwrap();
        for beta in &path.solutions {
            assert_eq!(beta, &DVector::zeros(6));
        }
    }

    #[test]
    fn lasso_orthonormal_is_soft_threshold() {
        let x = DMatrix::<f64>::identity(6, 4);
        let y = DVector::from_column_slice(&[1.2, -0.4, 0.05, 2.0, 0.0, 0.0]);
        let ds = Dataset::new_unchecked(x, y.clone());
        let lambda = 0.3;
        let path = lasso_cd(&ds, &[lambda]).unwrap();
        let beta = &path.solutions[0];
        for j in 0..4 {
            let expect = y[j].signum() * (y[j].abs() - lambda).max(0.0);
            assert_abs_diff_eq!(beta[j], expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn lasso_kkt_certificate_along_path() {
        let ds = random_dataset(2, 30, 10);
        let grid = default_lambda_grid(&ds, 40);
        let path = lasso_cd(&ds, &grid).unwrap();
        for (i, beta) in path.solutions.iter().enumerate() {
            assert!(path.converged[i]);
            let resid = ds.y() - ds.x() * beta;
            let lambda = path.lambdas[i];
            for j in 0..10 {
                let g = ds.x().column(j).dot(&resid);
                if beta[j] != 0.0 {
                    assert!((g.abs() - lambda).abs() <= 1e-6, "active KKT at λ={lambda}");
                    assert!(g.signum() == beta[j].signum());
                } else {
                    assert!(g.abs() <= lambda + 1e-6, "inactive KKT at λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn lasso_matches_proximal_gradient_oracle() {
        let ds = random_dataset(3, 25, 8);
        let lambda = 0.2 * ds.xty().amax();
        let path = lasso_cd(&ds, &[lambda]).unwrap();
        let cd_obj = {
            let b = &path.solutions[0];
            least_squares_value(&ds, b) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
        };
        // independent ISTA solver
        let l = crate::linalg::spectral_bound(ds.x(), 1e-9).unwrap();
        let step = 1.0 / l;
        let mut beta = DVector::zeros(8);
        for _ in 0..200_000 {
            let grad = -ds.x().tr_mul(&(ds.y() - ds.x() * &beta));
            let mut next = DVector::zeros(8);
            for j in 0..8 {
                let v = beta[j] - step * grad[j];
                next[j] = v.signum() * (v.abs() - step * lambda).max(0.0);
            }
            let moved = (&next - &beta).norm();
            beta = next;
            if moved < 1e-13 {
                break;
            }
        }
        let ista_obj =
            least_squares_value(&ds, &beta) + lambda * beta.iter().map(|v| v.abs()).sum::<f64>();
        assert!((cd_obj - ista_obj).abs() < 1e-8, "{cd_obj} vs {ista_obj}");
    }

    #[test]
    fn lambda_grid_shape() {
        let ds = random_dataset(4, 20, 5);
        let grid = default_lambda_grid(&ds, 100);
        assert_eq!(grid.len(), 100);
        assert_abs_diff_eq!(grid[0], ds.xty().amax(), epsilon = 1e-12);
        assert_abs_diff_eq!(grid[99], 1e-4 * grid[0], epsilon = 1e-12 * grid[0]);
        assert!(grid.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn debiased_refit_improves_ls_objective() {
        let ds = random_dataset(5, 30, 8);
        let grid = default_lambda_grid(&ds, 20);
        let path = lasso_cd(&ds, &grid).unwrap();
        let models = debiased_lasso(&ds, &path, DebiasVariant::PerLambdaPath);
        assert_eq!(models.len(), 20);
        for (m, lasso_beta) in models.iter().zip(&path.solutions) {
            assert!(
                least_squares_value(&ds, &m.beta)
                    <= least_squares_value(&ds, lasso_beta) + 1e-10
            );
        }
        // empty support refits to the zero model
        assert!(models[0].support.is_empty());
        assert_eq!(models[0].beta, DVector::zeros(8));
    }

    #[test]
    fn debiased_at_lambda_single_model() {
        let ds = random_dataset(6, 25, 6);
        let grid = default_lambda_grid(&ds, 10);
        let path = lasso_cd(&ds, &grid).unwrap();
        let models = debiased_lasso(&ds, &path, DebiasVariant::AtLambda(7));
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].lambda, grid[7]);
    }

    #[test]
    fn stepwise_orthonormal_orders_by_correlation() {
        let x = DMatrix::<f64>::identity(6, 4);
        let y = DVector::from_column_slice(&[0.5, -2.0, 1.0, 0.25, 0.0, 0.0]);
        let ds = Dataset::new_unchecked(x, y);
        let models = forward_stepwise(&ds, 3);
        assert_eq!(models[0].support, vec![1]);
        assert_eq!(models[1].support, vec![1, 2]);
        assert_eq!(models[2].support, vec![0, 1, 2]);
    }

    #[test]
    fn stepwise_nested_and_monotone() {
        let ds = random_dataset(7, 30, 9);
        let models = forward_stepwise(&ds, 6);
        for w in models.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
            for j in &w[0].support {
                assert!(w[1].support.contains(j), "supports must nest");
            }
        }
    }

    #[test]
    fn stepwise_first_pick_is_exact_at_k1() {
        let ds = random_dataset(8, 25, 8);
        let models = forward_stepwise(&ds, 1);
        let mut best = f64::INFINITY;
        for j in 0..8 {
            let beta = restricted_least_squares(&ds, &[j]);
            best = best.min(least_squares_value(&ds, &beta));
        }
        assert_abs_diff_eq!(models[0].objective, best, epsilon = 1e-12);
    }
}
