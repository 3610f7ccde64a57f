//! Shared test oracles: exhaustive enumeration, independent projection and
//! linear-minimization solvers, and level-set bisection. These deliberately
//! avoid the library's own solution paths.

#![allow(dead_code)]

use bestsubset::linalg::{least_squares_value, restricted_least_squares, Dataset, FeasibleRegion};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    bestsubset::linalg::standardize(&x, &y, true).unwrap().0
}

/// Gaussian dataset with a planted sparse signal, standardized.
pub fn planted_dataset(seed: u64, n: usize, p: usize, support: &[usize], snr: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| {
        let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
        z
    });
    let mut beta = DVector::zeros(p);
    for &j in support {
        beta[j] = 1.0;
    }
    let signal = &x * &beta;
    let sigma = (signal.norm_squared() / n as f64 / snr).sqrt();
    let y = DVector::from_fn(n, |i, _| {
        let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
        signal[i] + sigma * z
    });
    bestsubset::linalg::standardize(&x, &y, true).unwrap().0
}

use rand_distr::Distribution;

/// Iterates k-subsets of {0..p}.
pub fn for_each_subset(p: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        f(&subset);
        let mut i = k;
        loop {
            if i == 0 {
                return;
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

/// Exhaustive best-subset oracle: least-squares value minimized over all
/// supports of size ≤ k.
pub fn enumeration_optimum(data: &Dataset, k: usize) -> (f64, Vec<usize>, DVector<f64>) {
    let p = data.p();
    let mut best = (f64::INFINITY, Vec::new(), DVector::zeros(p));
    for kk in 0..=k {
        for_each_subset(p, kk, |support| {
            let beta = restricted_least_squares(data, support);
            let val = least_squares_value(data, &beta);
            if val < best.0 {
                best = (val, support.to_vec(), beta);
            }
        });
    }
    best
}

/// Exhaustive LAD best-subset oracle using the exact per-support polish.
pub fn lad_enumeration_optimum(data: &Dataset, k: usize) -> (f64, Vec<usize>) {
    let p = data.p();
    let mut best = (f64::INFINITY, Vec::new());
    for kk in 0..=k {
        for_each_subset(p, kk, |support| {
            let beta = bestsubset::lad::lad_polish(data, support);
            let val = bestsubset::lad::lad_value(data, &beta);
            if val < best.0 {
                best = (val, support.to_vec());
            }
        });
    }
    best
}

/// Euclidean projection onto an ℓ1 ball centered at the origin (sort-based).
fn project_l1_ball(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.clone();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, m) in mags.iter().enumerate() {
        acc += m;
        let t = (acc - radius) / (i + 1) as f64;
        if i + 1 == mags.len() || t >= mags[i + 1] {
            theta = t;
            break;
        }
    }
    DVector::from_fn(v.len(), |i, _| {
        v[i].signum() * (v[i].abs() - theta).max(0.0)
    })
}

/// Independent projection oracle for box ∩ ℓ1 regions: Dykstra's alternating
/// projection between the box and the (shifted) ℓ1 ball.
pub fn dykstra_projection(c: &DVector<f64>, region: &FeasibleRegion) -> DVector<f64> {
    assert!(region.l1_scope.is_none(), "oracle covers full-scope regions");
    let p = region.dim();
    let shift = &region.l1_center;
    let d = c - shift;
    let lo = DVector::from_fn(p, |i, _| region.l[i] - shift[i]);
    let hi = DVector::from_fn(p, |i, _| region.u[i] - shift[i]);
    let clip = |v: &DVector<f64>| DVector::from_fn(p, |i, _| v[i].clamp(lo[i], hi[i]));

    let mut x = d.clone();
    let mut p_inc = DVector::zeros(p);
    let mut q_inc = DVector::zeros(p);
    for _ in 0..200_000 {
        let y = clip(&(&x + &p_inc));
        let p_new = &x + &p_inc - &y;
        let z = if region.l1_radius.is_finite() {
            project_l1_ball(&(&y + &q_inc), region.l1_radius)
        } else {
            &y + &q_inc
        };
        let q_new = &y + &q_inc - &z;
        let moved = (&z - &x).norm();
        x = z;
        p_inc = p_new;
        q_inc = q_new;
        if moved < 1e-13 {
            break;
        }
    }
    x + shift
}

/// Brute-force linear minimization over a box ∩ ℓ1 region by enumerating
/// knapsack breakpoint patterns: a subset of coordinates saturated at a box
/// endpoint plus at most one partially filled coordinate.
pub fn lmo_brute_force(g: &DVector<f64>, region: &FeasibleRegion) -> f64 {
    assert!(region.l1_scope.is_none());
    let p = region.dim();
    assert!(p <= 8, "exponential enumeration");
    let shift = &region.l1_center;
    let lo = DVector::from_fn(p, |i, _| region.l[i] - shift[i]);
    let hi = DVector::from_fn(p, |i, _| region.u[i] - shift[i]);
    let target = |i: usize| if g[i] > 0.0 { lo[i] } else { hi[i] };
    let r = region.l1_radius;
    let mut best = f64::INFINITY;
    // enumerate saturated sets
    for mask in 0u32..(1 << p) {
        let sat: Vec<usize> = (0..p).filter(|i| mask & (1 << i) != 0).collect();
        let used: f64 = sat.iter().map(|&i| target(i).abs()).sum();
        if used > r * (1.0 + 1e-12) + 1e-12 {
            continue;
        }
        let base: f64 = sat.iter().map(|&i| g[i] * target(i)).sum();
        // no partial coordinate
        best = best.min(base);
        // one partial coordinate absorbing the leftover budget
        if r.is_finite() {
            let leftover = r - used;
            for j in 0..p {
                if sat.contains(&j) || g[j] == 0.0 {
                    continue;
                }
                let cap = target(j).abs();
                let fill = leftover.min(cap);
                let val = base + g[j] * target(j).signum() * fill;
                best = best.min(val);
            }
        }
    }
    // account for the constant from the shift
    best + g.dot(shift)
}

/// Level-set extreme of a coefficient by feasibility bisection: the largest
/// (or smallest) t with min_β {½‖y − Xβ‖² : β_i = t} ≤ UB, each evaluation a
/// least-squares solve on the remaining columns.
pub fn levelset_beta_extreme_oracle(data: &Dataset, i: usize, ub: f64, upper: bool) -> f64 {
    let n = data.n();
    let p = data.p();
    let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
    let xi = data.x().column(i).clone_owned();
    let x_rest = data.columns(&others);
    let rss_at = |t: f64| -> f64 {
        let target = data.y() - &xi * t;
        let svd = x_rest.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let gamma = svd.solve(&target, smax * 1e-12).unwrap();
        let resid = &target - &x_rest * &gamma;
        0.5 * resid.norm_squared()
    };
    // bracket: expand from the OLS coordinate until infeasible
    let full = restricted_least_squares(data, &(0..p).collect::<Vec<_>>());
    let center = full[i];
    let dir = if upper { 1.0 } else { -1.0 };
    let mut step = 1.0 + data.y().norm();
    let mut hi = center;
    for _ in 0..200 {
        let cand = center + dir * step;
        if rss_at(cand) > ub {
            hi = cand;
            break;
        }
        step *= 2.0;
    }
    let mut inside = center;
    let mut outside = hi;
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if rss_at(mid) <= ub {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    let _ = n;
    inside
}

/// Same bisection oracle for a fitted value ⟨x_i, β⟩ via an augmented
/// penalty solve: minimize ½‖y − Xβ‖² subject to ⟨x_i, β⟩ = v using the
/// bordered normal equations.
pub fn levelset_fit_extreme_oracle(data: &Dataset, i: usize, ub: f64, upper: bool) -> f64 {
    let p = data.p();
    let gram = data.x().tr_mul(data.x());
    let xty = data.xty();
    let c = data.x().row(i).transpose();
    // KKT system: [G c; c' 0][β; ν] = [X'y; v]
    let mut kkt = DMatrix::zeros(p + 1, p + 1);
    for a in 0..p {
        for b in 0..p {
            kkt[(a, b)] = gram[(a, b)];
        }
        kkt[(a, p)] = c[a];
        kkt[(p, a)] = c[a];
    }
    let svd = kkt.svd(true, true);
    let smax = svd.singular_values.max();
    let rss_at = |v: f64| -> f64 {
        let mut rhs = DVector::zeros(p + 1);
        for a in 0..p {
            rhs[a] = xty[a];
        }
        rhs[p] = v;
        let sol = svd.solve(&rhs, smax * 1e-12).unwrap();
        let beta = DVector::from_fn(p, |a, _| sol[a]);
        least_squares_value(data, &beta)
    };
    let full = restricted_least_squares(data, &(0..p).collect::<Vec<_>>());
    let center = c.dot(&full);
    let dir = if upper { 1.0 } else { -1.0 };
    let mut step = 1.0 + data.y().norm();
    let mut outside = center;
    for _ in 0..200 {
        let cand = center + dir * step;
        if rss_at(cand) > ub {
            outside = cand;
            break;
        }
        step *= 2.0;
    }
    let mut inside = center;
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if rss_at(mid) <= ub {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}
