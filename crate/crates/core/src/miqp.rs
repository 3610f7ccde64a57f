//! Branch-and-bound solver for the cardinality-constrained problem.
//!
//! Binary branching on support indicators with SOS-1 semantics: fixing an
//! indicator to zero pins the coefficient exactly, no big-M involved. Node
//! relaxations are convex box ∩ ℓ1 problems solved by projected gradient;
//! every node carries a conditional-gradient certificate, so the reported
//! lower bound is valid at any finite tolerance. Collapsing the relaxed
//! indicators at their optimum `z_i = |β_i|/M_U` turns the cardinality
//! budget into the scoped ℓ1 constraint `Σ_free |β_i| ≤ M_U (k − |ones|)`.
//!
//! With a bounding box configured, the β-ball enters the node relaxations
//! exactly (the region stays a shifted box ∩ ℓ1); the ζ-ball is enforced
//! only on incumbent candidates, which keeps lower bounds valid and the
//! certificate scoped to the box.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{serde_inf, ParamBounds};
use crate::error::{Error, Result};
use crate::firstorder::{hard_threshold, LossPlugin, StationaryPoint};
use crate::linalg::{linear_min_oracle, project, Dataset, FeasibleRegion};

/// An ℓ1 ball `‖v − center‖₁ ≤ radius` used as a bounding box around a
/// reference solution, in coefficient space or fitted-value space.
#[derive(Debug, Clone)]
pub struct L1Box {
    pub center: DVector<f64>,
    pub radius: f64,
}

/// The solver-facing problem: data, loss, sparsity level, parameter bounds,
/// and optional bounding boxes.
pub struct SubsetProblem<'a, L: LossPlugin> {
    pub data: &'a Dataset,
    pub loss: &'a L,
    pub k: usize,
    pub bounds: ParamBounds,
    pub beta_box: Option<L1Box>,
    pub fit_box: Option<L1Box>,
}

impl<'a, L: LossPlugin> SubsetProblem<'a, L> {
    pub fn new(data: &'a Dataset, loss: &'a L, k: usize, bounds: ParamBounds) -> Self {
        SubsetProblem {
            data,
            loss,
            k,
            bounds,
            beta_box: None,
            fit_box: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let p = self.data.p();
        if self.k < 1 || self.k > p {
            return Err(Error::SpecConflict(format!(
                "k = {} out of range 1..={p}",
                self.k
            )));
        }
        self.bounds.validate(p)?;
        if self.bounds.beta_inf == 0.0 || !self.bounds.beta_inf.is_finite() {
            return Err(Error::DegenerateBounds(self.bounds.beta_inf));
        }
        for (b, len, what) in [
            (&self.beta_box, p, "beta"),
            (&self.fit_box, self.data.n(), "fit"),
        ] {
            if let Some(bx) = b {
                if bx.center.len() != len {
                    return Err(Error::SpecConflict(format!(
                        "{what} box center has length {}, expected {len}",
                        bx.center.len()
                    )));
                }
                if !(bx.radius > 0.0) {
                    return Err(Error::SpecConflict(format!(
                        "{what} box radius must be positive"
                    )));
                }
            }
        }
        Ok(())
    }

    /// β-box with a finite radius (infinite radii are inert).
    fn active_beta_box(&self) -> Option<&L1Box> {
        self.beta_box.as_ref().filter(|b| b.radius.is_finite())
    }

    fn active_fit_box(&self) -> Option<&L1Box> {
        self.fit_box.as_ref().filter(|b| b.radius.is_finite())
    }
}

/// Re-fits and evaluates incumbent candidates. The default wraps the node
/// loss; the LAD solver substitutes exact-loss polishing so incumbents are
/// measured in the true objective while relaxations stay smooth.
pub trait IncumbentEvaluator: Sync {
    fn polish(&self, support: &[usize]) -> DVector<f64>;
    fn value(&self, beta: &DVector<f64>) -> f64;

    /// Certified lower bound on the objective minimized over the
    /// support-restricted subspace, or `-inf` when no certificate is
    /// available. Leaf nodes fold this into their bound; it must never
    /// exceed the true restricted minimum.
    fn restricted_lower_bound(&self, _support: &[usize]) -> f64 {
        f64::NEG_INFINITY
    }
}

/// Incumbent evaluation straight from the loss plugin.
pub struct PluginIncumbent<'a, L: LossPlugin>(pub &'a L);

impl<L: LossPlugin> IncumbentEvaluator for PluginIncumbent<'_, L> {
    fn polish(&self, support: &[usize]) -> DVector<f64> {
        self.0.restricted_minimize(support)
    }

    fn value(&self, beta: &DVector<f64>) -> f64 {
        self.0.value(beta)
    }

    fn restricted_lower_bound(&self, support: &[usize]) -> f64 {
        self.0.certified_restricted_min(support)
    }
}

/// Where a sparse solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionProvenance {
    FirstOrder,
    Polished,
    BnbIncumbent,
}

/// A k-sparse candidate or incumbent with its exact objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseSolution {
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    pub objective: f64,
    pub provenance: SolutionProvenance,
}

impl SparseSolution {
    pub fn from_stationary(sp: &StationaryPoint) -> Self {
        SparseSolution {
            beta: sp.beta.iter().copied().collect(),
            support: sp.support.clone(),
            objective: sp.objective,
            provenance: SolutionProvenance::FirstOrder,
        }
    }

    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }
}

/// A branch-and-bound tree node: indicator fixings plus the valid lower
/// bound inherited down the tree and the cached relaxation solution used to
/// warm-start the children.
#[derive(Debug, Clone)]
pub struct Node {
    pub fixed_one: Vec<usize>,
    pub fixed_zero: Vec<usize>,
    pub lb: f64,
    pub depth: usize,
    pub relax_solution: Option<DVector<f64>>,
}

impl Node {
    pub fn root() -> Self {
        Node {
            fixed_one: Vec::new(),
            fixed_zero: Vec::new(),
            lb: f64::NEG_INFINITY,
            depth: 0,
            relax_solution: None,
        }
    }

    fn free_count(&self, p: usize) -> usize {
        p - self.fixed_one.len() - self.fixed_zero.len()
    }
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    GapReached,
    TimeLimit,
    NodeLimit,
}

/// One `(time, UB, LB)` sample of the bound evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub elapsed_s: f64,
    #[serde(with = "serde_inf")]
    pub ub: f64,
    #[serde(with = "serde_inf")]
    pub lb: f64,
    pub nodes: u64,
}

/// Solve outcome: incumbent, certified global lower bound, gap, node count,
/// and the bound-evolution timeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub incumbent: Option<SparseSolution>,
    #[serde(with = "serde_inf")]
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
    pub timeline: Vec<TimelinePoint>,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|s| s.objective)
    }

    /// Timeline as CSV with columns `elapsed_s,ub,lb,gap,nodes`.
    pub fn timeline_csv(&self) -> String {
        let mut out = String::from("elapsed_s,ub,lb,gap,nodes\n");
        for tp in &self.timeline {
            let gap = relative_gap(tp.ub, tp.lb);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                tp.elapsed_s, tp.ub, tp.lb, gap, tp.nodes
            ));
        }
        out
    }
}

/// `(UB − LB) / max(|UB|, 1e-10)`.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if ub.is_infinite() || lb.is_infinite() {
        return f64::INFINITY;
    }
    (ub - lb) / ub.abs().max(1e-10)
}

/// Branch-and-bound controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnbConfig {
    pub time_limit_s: Option<f64>,
    /// Terminate once `(UB − LB)/max(|UB|, 1e-10) ≤ gap_tol`.
    pub gap_tol: f64,
    /// Conditional-gradient tolerance for branchable nodes;
    /// `None` uses the adaptive default `1e-6 (1 + |UB|)`.
    pub node_tol: Option<f64>,
    pub node_limit: Option<u64>,
    /// Evaluate node relaxations in deterministic batches across threads.
    pub parallel: bool,
    pub seed: u64,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            time_limit_s: None,
            gap_tol: 0.0,
            node_tol: None,
            node_limit: None,
            parallel: false,
            seed: 0,
        }
    }
}

/// Absolute slack used when pruning against the incumbent.
const PRUNE_SLACK: f64 = 1e-9;

fn build_region<L: LossPlugin>(prob: &SubsetProblem<L>, node: &Node) -> Result<FeasibleRegion> {
    let p = prob.data.p();
    let remaining = prob.k - node.fixed_one.len();
    let mut lo = DVector::zeros(p);
    let mut hi = DVector::zeros(p);
    let beta_box = prob.active_beta_box();
    for i in 0..p {
        let (mut l, mut u) = prob.bounds.beta_interval(i);
        if prob.bounds.beta_l1.is_finite() {
            l = l.max(-prob.bounds.beta_l1);
            u = u.min(prob.bounds.beta_l1);
        }
        if let Some(bx) = beta_box {
            l = l.max(bx.center[i] - bx.radius);
            u = u.min(bx.center[i] + bx.radius);
        }
        lo[i] = l;
        hi[i] = u;
    }
    let mut free = vec![true; p];
    for &i in &node.fixed_one {
        free[i] = false;
    }
    for &i in &node.fixed_zero {
        free[i] = false;
        lo[i] = lo[i].max(0.0);
        hi[i] = hi[i].min(0.0);
    }
    if remaining == 0 {
        // Cardinality budget exhausted: every free coordinate is forced to 0.
        for i in 0..p {
            if free[i] {
                lo[i] = lo[i].max(0.0);
                hi[i] = hi[i].min(0.0);
            }
        }
    }
    match beta_box {
        Some(bx) => FeasibleRegion::new(lo, hi, bx.radius, bx.center.clone()),
        None => {
            let budget = (remaining as f64 * prob.bounds.beta_inf).min(prob.bounds.beta_l1);
            FeasibleRegion::with_l1(lo, hi, budget)?.with_scope(free)
        }
    }
}

struct RelaxOutcome {
    beta: DVector<f64>,
    lb: f64,
}

fn solve_relaxation<L: LossPlugin>(
    loss: &L,
    region: &FeasibleRegion,
    warm: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
    prune_at: Option<f64>,
) -> Result<RelaxOutcome> {
    let step = 1.0 / loss.lipschitz().max(f64::MIN_POSITIVE);
    let zero = DVector::zeros(region.dim());
    let mut beta = project(warm.unwrap_or(&zero), region)?;
    let mut best_lb = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        let grad = loss.gradient(&beta);
        let s = linear_min_oracle(&grad, region)?;
        let gap = grad.dot(&(&beta - &s)).max(0.0);
        best_lb = best_lb.max(loss.value(&beta) - gap);
        if gap <= tol {
            break;
        }
        if let Some(t) = prune_at {
            if best_lb >= t {
                break;
            }
        }
        beta = project(&(&beta - grad * step), region)?;
    }
    Ok(RelaxOutcome { beta, lb: best_lb })
}

/// Solves the convex relaxation at a node and returns the relaxed solution
/// together with a conditional-gradient-certified lower bound valid for
/// every integer completion of the node.
pub fn solve_node_relaxation<L: LossPlugin>(
    node: &Node,
    prob: &SubsetProblem<L>,
    node_tol: f64,
) -> Result<(DVector<f64>, f64)> {
    let region = build_region(prob, node)?;
    let out = solve_relaxation(
        prob.loss,
        &region,
        node.relax_solution.as_ref(),
        node_tol,
        600 + 20 * prob.data.p(),
        None,
    )?;
    Ok((out.beta, out.lb.max(node.lb)))
}

/// Free coordinate with the largest relaxed magnitude (ties toward the
/// smaller index); `None` when the relaxation is integral for the node.
fn branch_candidate(node: &Node, beta_rel: &DVector<f64>) -> Option<usize> {
    let p = beta_rel.len();
    let mut fixed = vec![false; p];
    for &i in node.fixed_one.iter().chain(node.fixed_zero.iter()) {
        fixed[i] = true;
    }
    let thresh = 1e-12 * (1.0 + beta_rel.amax());
    let mut best: Option<usize> = None;
    for i in 0..p {
        if fixed[i] || beta_rel[i].abs() <= thresh {
            continue;
        }
        match best {
            Some(b) if beta_rel[i].abs() <= beta_rel[b].abs() => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Splits a node on the free coordinate with the largest relaxed magnitude
/// (ties toward the smaller index).
pub fn branch(node: &Node, beta_rel: &DVector<f64>) -> Result<(Node, Node)> {
    let i_star = branch_candidate(node, beta_rel).ok_or(Error::NoBranchCandidate)?;
    let mut child_zero = Node {
        fixed_one: node.fixed_one.clone(),
        fixed_zero: node.fixed_zero.clone(),
        lb: node.lb,
        depth: node.depth + 1,
        relax_solution: Some({
            let mut b = beta_rel.clone();
            b[i_star] = 0.0;
            b
        }),
    };
    child_zero.fixed_zero.push(i_star);
    let mut child_one = Node {
        fixed_one: node.fixed_one.clone(),
        fixed_zero: node.fixed_zero.clone(),
        lb: node.lb,
        depth: node.depth + 1,
        relax_solution: Some(beta_rel.clone()),
    };
    child_one.fixed_one.push(i_star);
    Ok((child_zero, child_one))
}

fn candidate_feasible<L: LossPlugin>(prob: &SubsetProblem<L>, beta: &DVector<f64>) -> bool {
    let b = &prob.bounds;
    let rel = |bound: f64| bound * (1.0 + 1e-7) + 1e-10;
    let linf = beta.amax();
    if linf > rel(b.beta_inf) {
        return false;
    }
    let l1: f64 = beta.iter().map(|v| v.abs()).sum();
    if b.beta_l1.is_finite() && l1 > rel(b.beta_l1) {
        return false;
    }
    if let Some(pc) = &b.per_coord_beta {
        for (i, (lo, hi)) in pc.iter().enumerate() {
            let slack = 1e-7 * (1.0 + lo.abs().max(hi.abs()));
            if beta[i] < lo - slack || beta[i] > hi + slack {
                return false;
            }
        }
    }
    if let Some(bx) = prob.active_beta_box() {
        let d: f64 = (beta - &bx.center).iter().map(|v| v.abs()).sum();
        if d > rel(bx.radius) {
            return false;
        }
    }
    let needs_fit = prob.active_fit_box().is_some()
        || b.fit_inf.is_finite()
        || b.fit_l1.is_finite();
    if needs_fit {
        let fit = prob.data.x() * beta;
        if b.fit_inf.is_finite() && fit.amax() > rel(b.fit_inf) {
            return false;
        }
        let fit_l1: f64 = fit.iter().map(|v| v.abs()).sum();
        if b.fit_l1.is_finite() && fit_l1 > rel(b.fit_l1) {
            return false;
        }
        if let Some(bx) = prob.active_fit_box() {
            let d: f64 = (&fit - &bx.center).iter().map(|v| v.abs()).sum();
            if d > rel(bx.radius) {
                return false;
            }
        }
    }
    true
}

/// Rounds a relaxed solution to its top-k support, re-fits on that support,
/// and applies the feasibility filter (norm bounds and bounding boxes, the
/// ζ-box in particular). Returns `None` when the candidate is rejected.
pub fn round_and_polish_with<L: LossPlugin, E: IncumbentEvaluator>(
    beta_rel: &DVector<f64>,
    prob: &SubsetProblem<L>,
    evaluator: &E,
) -> Option<SparseSolution> {
    let thresholded = hard_threshold(beta_rel, prob.k);
    let support: Vec<usize> = (0..thresholded.len())
        .filter(|&i| thresholded[i] != 0.0)
        .collect();
    let beta = evaluator.polish(&support);
    if !candidate_feasible(prob, &beta) {
        return None;
    }
    let support = (0..beta.len()).filter(|&i| beta[i] != 0.0).collect();
    Some(SparseSolution {
        objective: evaluator.value(&beta),
        beta: beta.iter().copied().collect(),
        support,
        provenance: SolutionProvenance::Polished,
    })
}

/// `round_and_polish_with` using the loss plugin for re-fitting.
pub fn round_and_polish<L: LossPlugin>(
    beta_rel: &DVector<f64>,
    prob: &SubsetProblem<L>,
) -> Option<SparseSolution> {
    round_and_polish_with(beta_rel, prob, &PluginIncumbent(prob.loss))
}

struct HeapEntry {
    lb: f64,
    depth: usize,
    seq: u64,
    node: Node,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap: "greatest" entry = smallest bound, then deepest
// (dives toward incumbents on ties), then earliest insertion.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct SearchState {
    incumbent: Option<SparseSolution>,
    lb_report: f64,
    closed_floor: f64,
    nodes: u64,
    timeline: Vec<TimelinePoint>,
    started: Instant,
}

impl SearchState {
    fn ub(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::INFINITY, |s| s.objective)
    }

    fn offer(&mut self, cand: SparseSolution) -> bool {
        if cand.objective < self.ub() {
            self.incumbent = Some(cand);
            true
        } else {
            false
        }
    }

    fn record(&mut self, open_min: f64) {
        let dual = self.closed_floor.min(open_min);
        let lb = self.lb_report.max(dual.min(self.ub()));
        self.lb_report = lb;
        let point = TimelinePoint {
            elapsed_s: self.started.elapsed().as_secs_f64(),
            ub: self.ub(),
            lb: self.lb_report,
            nodes: self.nodes,
        };
        match self.timeline.last() {
            Some(last) if last.ub == point.ub && last.lb == point.lb => {}
            _ => self.timeline.push(point),
        }
    }
}

enum NodeOutcome {
    Pruned,
    Infeasible,
    Closed {
        lb: f64,
        candidates: Vec<SparseSolution>,
    },
    Branchable {
        lb: f64,
        beta: DVector<f64>,
        candidate: Option<SparseSolution>,
    },
}

fn process_node<L: LossPlugin, E: IncumbentEvaluator>(
    prob: &SubsetProblem<L>,
    evaluator: &E,
    node: &Node,
    ub: f64,
    node_tol: f64,
) -> Result<NodeOutcome> {
    let p = prob.data.p();
    let remaining = prob.k - node.fixed_one.len();
    let closing = node.free_count(p) <= remaining;
    let region = match build_region(prob, node) {
        Ok(r) => r,
        Err(Error::EmptyRegion) => return Ok(NodeOutcome::Infeasible),
        Err(e) => return Err(e),
    };

    if closing {
        // No integrality left: the node is its own convex problem over the
        // active subspace. The evaluator's certified restricted bound is
        // valid here because the region lies inside that subspace; when the
        // polished fit is in the region and meets its certificate, the leaf
        // is resolved exactly without touching the relaxation solver.
        let mut active: Vec<usize> = node.fixed_one.clone();
        let mut fixed = vec![false; p];
        for &i in node.fixed_zero.iter() {
            fixed[i] = true;
        }
        for &i in node.fixed_one.iter() {
            fixed[i] = true;
        }
        if remaining > 0 {
            active.extend((0..p).filter(|&i| !fixed[i]));
        }
        active.sort_unstable();
        let cert_lb = evaluator.restricted_lower_bound(&active);
        let polish_beta = evaluator.polish(&active);
        let polish_val = evaluator.value(&polish_beta);
        let exact_leaf = cert_lb.is_finite()
            && region.contains(&polish_beta, 1e-9)
            && polish_val - cert_lb <= 1e-6 * (1.0 + polish_val.abs());
        let mut candidates = Vec::new();
        if candidate_feasible(prob, &polish_beta) {
            let support = (0..p).filter(|&i| polish_beta[i] != 0.0).collect();
            candidates.push(SparseSolution {
                objective: polish_val,
                beta: polish_beta.iter().copied().collect(),
                support,
                provenance: SolutionProvenance::Polished,
            });
        }
        let lb = if exact_leaf {
            cert_lb
        } else {
            let out = solve_relaxation(
                prob.loss,
                &region,
                node.relax_solution.as_ref(),
                1e-10 * (1.0 + polish_val.abs()),
                20_000,
                None,
            )?;
            // The relaxed point is region-feasible and k-sparse here;
            // harvest it too in case polishing left the region.
            if candidate_feasible(prob, &out.beta) {
                let support = (0..p).filter(|&i| out.beta[i] != 0.0).collect();
                candidates.push(SparseSolution {
                    objective: evaluator.value(&out.beta),
                    beta: out.beta.iter().copied().collect(),
                    support,
                    provenance: SolutionProvenance::BnbIncumbent,
                });
            }
            out.lb.max(cert_lb)
        };
        let lb = lb.max(node.lb);
        return Ok(NodeOutcome::Closed { lb, candidates });
    }

    let out = solve_relaxation(
        prob.loss,
        &region,
        node.relax_solution.as_ref(),
        node_tol,
        600 + 20 * p,
        Some(ub - PRUNE_SLACK),
    )?;
    let mut lb = out.lb.max(node.lb);
    if lb >= ub - PRUNE_SLACK {
        return Ok(NodeOutcome::Pruned);
    }
    let candidate = round_and_polish_with(&out.beta, prob, evaluator);
    if branch_candidate(node, &out.beta).is_some() {
        return Ok(NodeOutcome::Branchable {
            lb,
            beta: out.beta,
            candidate,
        });
    }
    // Integral relaxation at the node tolerance: confirm with a fine solve
    // before closing, since the coarse bound may be far from the node value.
    let fine = solve_relaxation(
        prob.loss,
        &region,
        Some(&out.beta),
        1e-10 * (1.0 + lb.abs()),
        20_000,
        None,
    )?;
    lb = lb.max(fine.lb);
    if branch_candidate(node, &fine.beta).is_some() {
        return Ok(NodeOutcome::Branchable {
            lb,
            beta: fine.beta,
            candidate,
        });
    }
    let mut candidates: Vec<SparseSolution> = candidate.into_iter().collect();
    if let Some(c) = round_and_polish_with(&fine.beta, prob, evaluator) {
        candidates.push(c);
    }
    if candidate_feasible(prob, &fine.beta) {
        let support = (0..p).filter(|&i| fine.beta[i] != 0.0).collect();
        candidates.push(SparseSolution {
            objective: evaluator.value(&fine.beta),
            beta: fine.beta.iter().copied().collect(),
            support,
            provenance: SolutionProvenance::BnbIncumbent,
        });
    }
    Ok(NodeOutcome::Closed { lb, candidates })
}

/// Best-first branch-and-bound. The incumbent is initialized from `warm`
/// when given (it must be k-sparse and pass the feasibility filter), else
/// from rounding-and-polishing the root relaxation. With `gap_tol = 0` and
/// no limits the incumbent is the optimum of the bounded formulation, which
/// coincides with the unbounded k-subset optimum whenever the bounds carry a
/// validity certificate.
pub fn bnb_solve_with<L: LossPlugin, E: IncumbentEvaluator>(
    prob: &SubsetProblem<L>,
    warm: Option<&SparseSolution>,
    cfg: &BnbConfig,
    evaluator: &E,
) -> Result<SolveReport> {
    prob.validate()?;
    if cfg.gap_tol < 0.0 {
        return Err(Error::SpecConflict("gap_tol must be >= 0".into()));
    }
    let p = prob.data.p();
    let mut state = SearchState {
        incumbent: None,
        lb_report: f64::NEG_INFINITY,
        closed_floor: f64::INFINITY,
        nodes: 0,
        timeline: Vec::new(),
        started: Instant::now(),
    };
    if let Some(w) = warm {
        if w.beta.len() != p {
            return Err(Error::SpecConflict(format!(
                "warm start has length {}, expected {p}",
                w.beta.len()
            )));
        }
        if w.support.len() > prob.k {
            return Err(Error::NotKSparse {
                nnz: w.support.len(),
                k: prob.k,
            });
        }
        let wb = w.beta_vector();
        if !candidate_feasible(prob, &wb) {
            return Err(Error::SpecConflict(
                "warm start violates the problem bounds".into(),
            ));
        }
        state.incumbent = Some(SparseSolution {
            provenance: SolutionProvenance::BnbIncumbent,
            ..w.clone()
        });
    }

    // Loss at the origin anchors the adaptive node tolerance until an
    // incumbent exists.
    let loss_scale = prob.loss.value(&DVector::zeros(p)).abs();

    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;
    heap.push(HeapEntry {
        lb: f64::NEG_INFINITY,
        depth: 0,
        seq,
        node: Node::root(),
    });

    let batch_size = if cfg.parallel {
        rayon::current_num_threads().max(1)
    } else {
        1
    };
    let status = 'search: loop {
        // Termination by gap before popping more work.
        let open_min = heap.peek().map_or(f64::INFINITY, |e| e.lb);
        state.record(open_min);
        let ub = state.ub();
        let scale = ub.abs().max(1e-10);
        if state.lb_report >= ub - 1e-9 * ub.abs().max(1.0) && state.incumbent.is_some() {
            break SolveStatus::Optimal;
        }
        if cfg.gap_tol > 0.0 && state.incumbent.is_some() && state.lb_report >= ub - cfg.gap_tol * scale
        {
            break SolveStatus::GapReached;
        }
        if heap.is_empty() {
            break SolveStatus::Optimal;
        }
        if let Some(tl) = cfg.time_limit_s {
            if state.started.elapsed().as_secs_f64() >= tl {
                break SolveStatus::TimeLimit;
            }
        }
        if let Some(nl) = cfg.node_limit {
            if state.nodes >= nl {
                break SolveStatus::NodeLimit;
            }
        }

        // Pop a deterministic batch of open nodes, dropping dominated ones.
        let mut batch = Vec::with_capacity(batch_size);
        while batch.len() < batch_size {
            match heap.pop() {
                None => break,
                Some(e) => {
                    if e.lb >= ub - PRUNE_SLACK && state.incumbent.is_some() {
                        continue;
                    }
                    batch.push(e.node);
                }
            }
        }
        if batch.is_empty() {
            continue; // loop re-checks termination with the emptied heap
        }
        let node_tol = cfg
            .node_tol
            .unwrap_or_else(|| 1e-6 * (1.0 + ub.abs().min(loss_scale)));
        let outcomes: Result<Vec<NodeOutcome>> = if batch.len() == 1 {
            process_node(prob, evaluator, &batch[0], ub, node_tol).map(|o| vec![o])
        } else {
            batch
                .par_iter()
                .map(|n| process_node(prob, evaluator, n, ub, node_tol))
                .collect()
        };
        let outcomes = outcomes?;

        for (node, outcome) in batch.into_iter().zip(outcomes) {
            state.nodes += 1;
            match outcome {
                NodeOutcome::Infeasible => {
                    if node.depth == 0 {
                        return Err(Error::EmptyRegion);
                    }
                }
                NodeOutcome::Pruned => {}
                NodeOutcome::Closed { lb, candidates } => {
                    for c in candidates {
                        state.offer(c);
                    }
                    // A resolved leaf keeps holding the dual bound down by
                    // its certified value unless it is dominated.
                    if lb < state.ub() - PRUNE_SLACK {
                        state.closed_floor = state.closed_floor.min(lb);
                    }
                }
                NodeOutcome::Branchable { lb, beta, candidate } => {
                    if let Some(c) = candidate {
                        state.offer(c);
                    }
                    if lb >= state.ub() - PRUNE_SLACK {
                        continue;
                    }
                    let node_for_branch = Node { lb, ..node };
                    let (zero, one) = branch(&node_for_branch, &beta)?;
                    seq += 1;
                    heap.push(HeapEntry {
                        lb,
                        depth: one.depth,
                        seq,
                        node: one,
                    });
                    seq += 1;
                    heap.push(HeapEntry {
                        lb,
                        depth: zero.depth,
                        seq,
                        node: zero,
                    });
                }
            }
            if state.started.elapsed().as_secs_f64() >= cfg.time_limit_s.unwrap_or(f64::INFINITY)
            {
                let open_min = heap.peek().map_or(f64::INFINITY, |e| e.lb);
                state.record(open_min);
                break 'search SolveStatus::TimeLimit;
            }
        }
    };

    let open_min = heap.peek().map_or(f64::INFINITY, |e| e.lb);
    state.record(open_min);
    let incumbent = state.incumbent.take().map(|mut s| {
        s.provenance = SolutionProvenance::BnbIncumbent;
        s
    });
    let ub = incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective);
    Ok(SolveReport {
        incumbent,
        lower_bound: state.lb_report,
        gap: relative_gap(ub, state.lb_report),
        nodes_explored: state.nodes,
        timeline: state.timeline,
        status,
    })
}

/// Branch-and-bound with loss-plugin incumbent evaluation.
pub fn bnb_solve<L: LossPlugin>(
    prob: &SubsetProblem<L>,
    warm: Option<&SparseSolution>,
    cfg: &BnbConfig,
) -> Result<SolveReport> {
    bnb_solve_with(prob, warm, cfg, &PluginIncumbent(prob.loss))
}

/// Solve restricted to the configured bounding boxes; the report certifies
/// optimality within the boxes, not globally. Infinite radii are inert and
/// reproduce the unboxed trajectory.
pub fn bnb_solve_boxed<L: LossPlugin>(
    prob: &SubsetProblem<L>,
    warm: Option<&SparseSolution>,
    cfg: &BnbConfig,
) -> Result<SolveReport> {
    if prob.beta_box.is_none() && prob.fit_box.is_none() {
        return Err(Error::SpecConflict(
            "bnb_solve_boxed requires a bounding box".into(),
        ));
    }
    bnb_solve(prob, warm, cfg)
}

/// Per-k stopping defaults for k-sweeps: 1% gap or a 15-minute cap.
pub fn sweep_default_config() -> BnbConfig {
    BnbConfig {
        gap_tol: 0.01,
        time_limit_s: Some(900.0),
        ..BnbConfig::default()
    }
}

/// Solves a descending sequence of sparsity levels, warm-starting each solve
/// with the previous incumbent truncated (hard threshold, then re-fit) to
/// the new k.
pub fn k_sweep<L: LossPlugin>(
    data: &Dataset,
    loss: &L,
    make_bounds: impl Fn(usize) -> ParamBounds,
    k_values: &[usize],
    cfg: &BnbConfig,
) -> Result<BTreeMap<usize, SolveReport>> {
    if k_values.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::SpecConflict(
            "k_sweep expects strictly descending k values".into(),
        ));
    }
    let mut reports = BTreeMap::new();
    let mut prev: Option<SparseSolution> = None;
    for &k in k_values {
        let prob = SubsetProblem::new(data, loss, k, make_bounds(k));
        let warm = prev.as_ref().and_then(|sol| {
            let truncated = hard_threshold(&sol.beta_vector(), k);
            round_and_polish(&truncated, &prob)
        });
        let report = bnb_solve(&prob, warm.as_ref(), cfg)?;
        prev = report.incumbent.clone().or(prev);
        reports.insert(k, report);
    }
    Ok(reports)
}
