//! Offline optimal cost oracles.
//!
//! Two independent routes to C_Opt = min Σ f_t(x_t) + ‖x_t − x_{t−1}‖:
//! an exact dynamic program over a discretized grid (dimension ≤ 2), and a
//! multi-started subgradient method on the joint convex program (any
//! dimension). The grid oracle reports a discretization gap; robustness
//! assertions downstream always use cost − gap as the optimum lower bound.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algorithm::{run, GreedyMinimizer, StayPut, Trajectory};
use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::instance::Instance;
use crate::norm::NormTag;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMethod {
    GridDp,
    FirstOrder,
}

/// An offline solution with a soundness gap: the continuous optimum lies in
/// [cost − gap_estimate, cost].
#[derive(Clone, Debug)]
pub struct OptResult {
    pub trajectory: Vec<Vector>,
    pub cost: f64,
    pub method: OptMethod,
    pub gap_estimate: f64,
}

impl OptResult {
    pub fn lower_bound(&self) -> f64 {
        (self.cost - self.gap_estimate).max(0.0)
    }

    /// Recomputes the trajectory cost on the instance; must match `cost`.
    pub fn recompute_cost(&self, instance: &Instance) -> Result<f64> {
        Ok(Trajectory::from_decisions(self.trajectory.clone(), instance)?.total())
    }
}

/// Axis-aligned grid for the DP oracle.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points_per_dim: usize,
}

impl GridSpec {
    /// A grid covering x₀, all cost centers/bodies, and a margin.
    pub fn covering(instance: &Instance, points_per_dim: usize) -> GridSpec {
        let dim = instance.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut absorb = |v: &Vector| {
            for i in 0..dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        };
        absorb(&instance.x0);
        for c in &instance.costs {
            match c {
                CostFunction::Quadratic { center, .. }
                | CostFunction::NormPolyhedral { center, .. }
                | CostFunction::NormPower { center, .. } => absorb(center),
                CostFunction::BodyDistance { body, .. } => match body {
                    crate::body::ConvexBody::Ball { center, radius } => {
                        absorb(&center.axpy(*radius, &Vector::new(vec![1.0; dim])));
                        absorb(&center.axpy(-*radius, &Vector::new(vec![1.0; dim])));
                    }
                    crate::body::ConvexBody::Box { lower, upper } => {
                        absorb(lower);
                        absorb(upper);
                    }
                    crate::body::ConvexBody::Singleton { point } => absorb(point),
                    _ => {}
                },
            }
        }
        let mut lower = Vec::with_capacity(dim);
        let mut upper = Vec::with_capacity(dim);
        for i in 0..dim {
            let margin = 0.25 * (hi[i] - lo[i]).max(1.0);
            lower.push(lo[i] - margin);
            upper.push(hi[i] + margin);
        }
        GridSpec { lower, upper, points_per_dim }
    }
}

/// Exact DP over the grid: V_t(g) = f_t(g) + min_{g'} [V_{t−1}(g') + ‖g−g'‖].
///
/// Supported in dimension 1 (any norm: all ℓᵖ norms coincide on ℝ, and the
/// movement minimization is an exact two-pass distance transform) and
/// dimension 2 (ℓ¹ via separable per-axis transforms, other norms by the
/// quadratic-time minimization). The gap estimate is T·(L_f + 1)·h with h
/// the grid cell diagonal and L_f a sampled Lipschitz bound of the costs.
pub fn opt_grid_dp(instance: &Instance, grid: &GridSpec) -> Result<OptResult> {
    instance.validate()?;
    let dim = instance.dim();
    if dim > 2 {
        return Err(CoreError::param("grid DP supports dimension <= 2"));
    }
    if grid.points_per_dim < 3 {
        return Err(CoreError::param("grid DP needs at least 3 points per dimension"));
    }
    if grid.lower.len() != dim || grid.upper.len() != dim {
        return Err(CoreError::DimensionMismatch { expected: dim, got: grid.lower.len() });
    }
    let n = grid.points_per_dim;
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..n)
                .map(|k| grid.lower[i] + (grid.upper[i] - grid.lower[i]) * k as f64 / (n - 1) as f64)
                .collect()
        })
        .collect();
    let steps: Vec<f64> = (0..dim)
        .map(|i| (grid.upper[i] - grid.lower[i]) / (n - 1) as f64)
        .collect();

    let nodes: usize = if dim == 1 { n } else { n * n };
    let node_point = |idx: usize| -> Vector {
        if dim == 1 {
            Vector::new(vec![axes[0][idx]])
        } else {
            Vector::new(vec![axes[0][idx / n], axes[1][idx % n]])
        }
    };

    // movement from x0 to each node
    let mut value: Vec<f64> = (0..nodes)
        .map(|idx| instance.norm.dist(&node_point(idx), &instance.x0))
        .collect();
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(instance.horizon());

    for t in 1..=instance.horizon() {
        let (moved, parent) = min_plus_movement(&value, dim, n, &steps, instance.norm)?;
        let cost = &instance.costs[t - 1];
        let mut next = vec![0.0; nodes];
        for idx in 0..nodes {
            next[idx] = moved[idx] + cost.eval(&node_point(idx))?;
        }
        parents.push(parent);
        value = next;
    }

    let (mut best_idx, mut best) = (0usize, f64::INFINITY);
    for (idx, v) in value.iter().enumerate() {
        if *v < best {
            best = *v;
            best_idx = idx;
        }
    }
    let mut path_idx = vec![best_idx; instance.horizon()];
    for t in (1..instance.horizon()).rev() {
        path_idx[t - 1] = parents[t][path_idx[t]] as usize;
    }
    let trajectory: Vec<Vector> = path_idx.iter().map(|i| node_point(*i)).collect();

    let h: f64 = steps.iter().map(|s| s * s).sum::<f64>().sqrt();
    let lf = sampled_cost_lipschitz(instance, grid, 64);
    let gap = instance.horizon() as f64 * (lf + 1.0) * h;

    let recomputed = Trajectory::from_decisions(trajectory.clone(), instance)?.total();
    if (recomputed - best).abs() > 1e-10 * (1.0 + best.abs()) {
        return Err(CoreError::InvariantViolation {
            what: "grid DP cost disagrees with recomputed trajectory cost".into(),
        });
    }
    Ok(OptResult { trajectory, cost: best, method: OptMethod::GridDp, gap_estimate: gap })
}

/// min_{g'} [V(g') + ‖g − g'‖] for every grid node g, with argmins.
fn min_plus_movement(
    value: &[f64],
    dim: usize,
    n: usize,
    steps: &[f64],
    norm: NormTag,
) -> Result<(Vec<f64>, Vec<u32>)> {
    let nodes = value.len();
    let mut out = value.to_vec();
    let mut parent: Vec<u32> = (0..nodes as u32).collect();
    if dim == 1 {
        pass_1d(&mut out, &mut parent, 1, n, 0, steps[0]);
        return Ok((out, parent));
    }
    if norm == NormTag::L1 {
        // the l1 kernel separates into one transform per axis
        for row in 0..n {
            pass_1d(&mut out, &mut parent, 1, n, row * n, steps[1]);
        }
        for col in 0..n {
            pass_1d(&mut out, &mut parent, n, n, col, steps[0]);
        }
        return Ok((out, parent));
    }
    // general norm: quadratic scan with a distance lookup per offset pair
    let mut dist = vec![0.0; n * n];
    for di in 0..n {
        for dj in 0..n {
            dist[di * n + dj] =
                norm.eval(&Vector::new(vec![di as f64 * steps[0], dj as f64 * steps[1]]));
        }
    }
    let mut best = vec![f64::INFINITY; nodes];
    for idx in 0..nodes {
        let (i, j) = (idx / n, idx % n);
        for src in 0..nodes {
            let (si, sj) = (src / n, src % n);
            let d = dist[i.abs_diff(si) * n + j.abs_diff(sj)];
            let cand = value[src] + d;
            if cand < best[idx] {
                best[idx] = cand;
                parent[idx] = src as u32;
            }
        }
    }
    Ok((best, parent))
}

/// In-place 1D distance transform along a strided slice: two sweeps suffice
/// because |x − x'| decomposes over adjacent cells.
fn pass_1d(out: &mut [f64], parent: &mut [u32], stride: usize, len: usize, base: usize, step: f64) {
    for k in 1..len {
        let idx = base + k * stride;
        let from = base + (k - 1) * stride;
        if out[from] + step < out[idx] {
            out[idx] = out[from] + step;
            parent[idx] = parent[from];
        }
    }
    for k in (0..len - 1).rev() {
        let idx = base + k * stride;
        let from = base + (k + 1) * stride;
        if out[from] + step < out[idx] {
            out[idx] = out[from] + step;
            parent[idx] = parent[from];
        }
    }
}

/// Dual-norm of cost subgradients sampled over the grid box: a Lipschitz
/// bound of the hitting costs with respect to the instance norm.
fn sampled_cost_lipschitz(instance: &Instance, grid: &GridSpec, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c69_7073);
    let dual = instance.norm.dual();
    let mut best: f64 = 0.0;
    for cost in &instance.costs {
        for _ in 0..samples {
            let x = Vector::new(
                (0..instance.dim())
                    .map(|i| rng.random_range(grid.lower[i]..=grid.upper[i]))
                    .collect(),
            );
            if let Ok(g) = cost.subgradient(&x) {
                best = best.max(dual.eval(&g));
            }
        }
    }
    best
}

/// Subgradient method on the joint convex program with diminishing steps,
/// iterate averaging, and multi-starts (stay-put path, greedy path when the
/// costs have minimizers, plus any supplied warm starts). Returns the best
/// trajectory evaluated anywhere along the way.
pub fn opt_first_order(
    instance: &Instance,
    iters: usize,
    seed: u64,
    warm_starts: &[Vec<Vector>],
) -> Result<OptResult> {
    instance.validate()?;
    if iters == 0 {
        return Err(CoreError::param("first-order solver needs iters >= 1"));
    }
    let horizon = instance.horizon();

    let mut starts: Vec<Vec<Vector>> = Vec::new();
    starts.push(run(&mut StayPut::default(), instance)?.decisions);
    if let Ok(greedy) = run(&mut GreedyMinimizer, instance) {
        starts.push(greedy.decisions);
    } else {
        // body chasing: project the previous point forward instead
        let mut proj = crate::algorithm::ProjectGreedy::new(instance.norm);
        if let Ok(traj) = run(&mut proj, instance) {
            starts.push(traj.decisions);
        }
    }
    for w in warm_starts {
        if w.len() == horizon {
            starts.push(w.clone());
        }
    }

    let objective = |path: &[Vector]| -> Result<f64> {
        Ok(Trajectory::from_decisions(path.to_vec(), instance)?.total())
    };

    // step scale from the spread of the problem data around x0
    let mut scale: f64 = 0.5;
    for cost in &instance.costs {
        if let Ok(center) = cost.minimizer_or_project(&instance.x0) {
            scale = scale.max(instance.norm.dist(&center, &instance.x0));
        }
    }
    // one seeded random start to escape ties between the deterministic ones
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jittered: Vec<Vector> = starts[0]
        .iter()
        .map(|x| x.axpy(0.1 * scale, &crate::geometry::gaussian(&mut rng, x.dim())))
        .collect();
    starts.push(jittered);

    let mut best_path = starts[0].clone();
    let mut best = objective(&best_path)?;
    let mut tail_spread: f64 = 0.0;

    for start in &starts {
        let mut path = start.clone();
        let mut value = objective(&path)?;
        if value < best {
            best = value;
            best_path = path.clone();
        }
        let mut avg: Vec<Vector> = path.clone();
        let mut avg_count = 1.0;
        let tail_start = iters.saturating_sub(1000);
        let mut tail_min = f64::INFINITY;
        let mut tail_max = f64::NEG_INFINITY;
        for k in 0..iters {
            let grad = joint_subgradient(instance, &path)?;
            let gnorm: f64 = grad.iter().map(|g| g.dot(g)).sum::<f64>().sqrt();
            if gnorm <= 1e-14 {
                break;
            }
            // normalized step annealed from `scale` down four decades,
            // tightened further by the Polyak gap to the incumbent
            let anneal = scale * 10f64.powf(-4.0 * k as f64 / iters.max(1) as f64);
            let polyak = (value - best + anneal * gnorm * 0.1) / (gnorm * gnorm);
            let eta = polyak.min(anneal / gnorm);
            for (x, g) in path.iter_mut().zip(grad.iter()) {
                *x = x.axpy(-eta, g);
            }
            value = objective(&path)?;
            if !value.is_finite() {
                return Err(CoreError::InvariantViolation {
                    what: "first-order objective diverged".into(),
                });
            }
            if value < best {
                best = value;
                best_path = path.clone();
            }
            avg_count += 1.0;
            for (a, x) in avg.iter_mut().zip(path.iter()) {
                *a = a.axpy(1.0, x);
            }
            if k + 1 == iters || (k % 200 == 0 && k > 0) {
                let avg_path: Vec<Vector> =
                    avg.iter().map(|a| a.scale(1.0 / avg_count)).collect();
                let avg_val = objective(&avg_path)?;
                if avg_val < best {
                    best = avg_val;
                    best_path = avg_path;
                }
            }
            if k >= tail_start {
                tail_min = tail_min.min(value);
                tail_max = tail_max.max(value);
            }
        }
        if tail_max > tail_min {
            tail_spread = tail_spread.max(tail_max - tail_min);
        }
    }

    Ok(OptResult {
        cost: best,
        trajectory: best_path,
        method: OptMethod::FirstOrder,
        gap_estimate: tail_spread,
    })
}

fn joint_subgradient(instance: &Instance, path: &[Vector]) -> Result<Vec<Vector>> {
    let horizon = path.len();
    let mut grad: Vec<Vector> = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut g = instance.costs[t].subgradient(&path[t])?;
        let prev = if t == 0 { &instance.x0 } else { &path[t - 1] };
        g = &g + &instance.norm.subgradient(&(&path[t] - prev));
        if t + 1 < horizon {
            g = &g - &instance.norm.subgradient(&(&path[t + 1] - &path[t]));
        }
        grad.push(g);
    }
    Ok(grad)
}

/// First-order solve of a body-chasing instance followed by per-round
/// projection repair, which never increases the cost and restores
/// feasibility.
pub fn opt_for_ncbc(instance: &Instance, iters: usize, seed: u64) -> Result<OptResult> {
    let bodies = instance
        .bodies
        .as_ref()
        .ok_or_else(|| CoreError::param("body-chasing oracle needs bodies"))?;
    let raw = opt_first_order(instance, iters, seed, &[])?;
    let mut repaired: Vec<Vector> = Vec::with_capacity(raw.trajectory.len());
    for (t, x) in raw.trajectory.iter().enumerate() {
        repaired.push(bodies[t].project(x, instance.norm)?);
    }
    let cost = Trajectory::from_decisions(repaired.clone(), instance)?.total();
    if cost > raw.cost + 1e-9 * (1.0 + raw.cost.abs()) {
        return Err(CoreError::InvariantViolation {
            what: "projection repair increased the cost".into(),
        });
    }
    Ok(OptResult {
        trajectory: repaired,
        cost,
        method: OptMethod::FirstOrder,
        gap_estimate: raw.gap_estimate,
    })
}
