//! The online-algorithm interface, cost accounting, and baseline algorithms.

use alloc::boxed::Box;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::RefCell;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::ConvexBody;
use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::geometry::gaussian;
use crate::instance::{AdviceSpec, Instance};
use crate::norm::NormTag;
use crate::vector::Vector;

/// A stateful online decision-maker. `step` is called with strictly
/// increasing rounds starting at 1 and may use only data revealed so far.
pub trait OnlineAlgorithm {
    /// Clears all state; subsequent behavior depends only on `x0`.
    fn reset(&mut self, x0: &Vector);

    /// Chooses the decision for round `t`, after observing the cost and
    /// (for body-chasing instances) the body of that round.
    fn step(&mut self, t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector>;
}

impl<T: OnlineAlgorithm + ?Sized> OnlineAlgorithm for Box<T> {
    fn reset(&mut self, x0: &Vector) {
        (**self).reset(x0)
    }
    fn step(&mut self, t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        (**self).step(t, cost, body)
    }
}

/// Per-round decisions together with the exact cost accounting
/// C(1,t) = Σ_{i≤t} f_i(x_i) + ‖x_i − x_{i−1}‖.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub decisions: Vec<Vector>,
    pub hitting: Vec<f64>,
    pub movement: Vec<f64>,
    /// Distance of each decision to the round body, when bodies are present.
    pub infeasibility: Option<Vec<f64>>,
    /// cumulative[t] = C(1, t); cumulative[0] = 0.
    cumulative: Vec<f64>,
}

impl Trajectory {
    pub fn from_decisions(decisions: Vec<Vector>, instance: &Instance) -> Result<Trajectory> {
        let mut hitting = Vec::with_capacity(decisions.len());
        let mut movement = Vec::with_capacity(decisions.len());
        let mut infeasibility = instance.bodies.as_ref().map(|_| Vec::with_capacity(decisions.len()));
        let mut cumulative = Vec::with_capacity(decisions.len() + 1);
        cumulative.push(0.0);
        let mut prev = instance.x0.clone();
        for (idx, x) in decisions.iter().enumerate() {
            let t = idx + 1;
            let h = instance.costs[idx].eval(x)?;
            let m = instance.norm.dist(x, &prev);
            hitting.push(h);
            movement.push(m);
            cumulative.push(cumulative[idx] + h + m);
            if let (Some(inf), Some(body)) = (infeasibility.as_mut(), instance.body(t)) {
                inf.push(body.distance(x, instance.norm)?);
            }
            prev = x.clone();
        }
        Ok(Trajectory { decisions, hitting, movement, infeasibility, cumulative })
    }

    pub fn horizon(&self) -> usize {
        self.decisions.len()
    }

    /// C(1, T).
    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("cumulative always has the 0 entry")
    }

    /// C(1, t); C(1, 0) = 0.
    pub fn prefix(&self, t: usize) -> f64 {
        self.cumulative[t]
    }

    /// Partial cost C(t, t') = Σ_{i=t}^{t'} f_i(x_i) + ‖x_i − x_{i−1}‖.
    pub fn partial(&self, t: usize, t_end: usize) -> f64 {
        debug_assert!(1 <= t && t <= t_end && t_end <= self.horizon());
        self.cumulative[t_end] - self.cumulative[t - 1]
    }

    pub fn max_infeasibility(&self) -> f64 {
        self.infeasibility
            .as_ref()
            .map(|v| v.iter().fold(0.0_f64, |a, b| a.max(*b)))
            .unwrap_or(0.0)
    }
}

/// Runs an algorithm over a full instance with exact per-round accounting.
/// A non-finite decision aborts the run.
pub fn run(alg: &mut dyn OnlineAlgorithm, instance: &Instance) -> Result<Trajectory> {
    instance.validate()?;
    alg.reset(&instance.x0);
    let mut decisions = Vec::with_capacity(instance.horizon());
    for t in 1..=instance.horizon() {
        let x = alg.step(t, &instance.costs[t - 1], instance.body(t))?;
        if !x.is_finite() {
            return Err(CoreError::NonFiniteDecision { round: t });
        }
        if x.dim() != instance.dim() {
            return Err(CoreError::DimensionMismatch { expected: instance.dim(), got: x.dim() });
        }
        decisions.push(x);
    }
    Trajectory::from_decisions(decisions, instance)
}

/// Never moves: x_t = x₀.
#[derive(Clone, Debug, Default)]
pub struct StayPut {
    x0: Option<Vector>,
}

impl OnlineAlgorithm for StayPut {
    fn reset(&mut self, x0: &Vector) {
        self.x0 = Some(x0.clone());
    }
    fn step(&mut self, _t: usize, _cost: &CostFunction, _body: Option<&ConvexBody>) -> Result<Vector> {
        self.x0.clone().ok_or_else(|| CoreError::param("step before reset"))
    }
}

/// Moves to the minimizer of each hitting cost. Defined for cost kinds with
/// a unique minimizer; body-distance costs are rejected (use
/// [`ProjectGreedy`] there).
#[derive(Clone, Debug, Default)]
pub struct GreedyMinimizer;

impl OnlineAlgorithm for GreedyMinimizer {
    fn reset(&mut self, _x0: &Vector) {}
    fn step(&mut self, _t: usize, cost: &CostFunction, _body: Option<&ConvexBody>) -> Result<Vector> {
        cost.minimizer()
    }
}

/// Projects the previous decision onto the current body; always feasible.
#[derive(Clone, Debug, Default)]
pub struct ProjectGreedy {
    prev: Option<Vector>,
    norm: Option<NormTag>,
}

impl ProjectGreedy {
    pub fn new(norm: NormTag) -> Self {
        ProjectGreedy { prev: None, norm: Some(norm) }
    }
}

impl OnlineAlgorithm for ProjectGreedy {
    fn reset(&mut self, x0: &Vector) {
        self.prev = Some(x0.clone());
    }
    fn step(&mut self, _t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        let norm = match (self.norm, cost) {
            (Some(n), _) => n,
            (None, CostFunction::BodyDistance { norm, .. }) => *norm,
            _ => NormTag::L2,
        };
        let body = match (body, cost) {
            (Some(b), _) => b,
            (None, CostFunction::BodyDistance { body, .. }) => body,
            _ => {
                return Err(CoreError::UnsupportedCost {
                    what: "projection baseline needs bodies".into(),
                })
            }
        };
        let prev = self.prev.clone().ok_or_else(|| CoreError::param("step before reset"))?;
        let x = body.project(&prev, norm)?;
        self.prev = Some(x.clone());
        Ok(x)
    }
}

/// Monte-Carlo Steiner point chaser for nested-body instances on ℓ².
///
/// The Steiner point is the sphere average of the support-point map. It is
/// estimated with `samples` directions drawn once per run and reused at
/// every round (common random numbers), so that per-round movement of the
/// estimate telescopes like the true Steiner path. The estimate is a convex
/// combination of body points, hence feasible; a final projection guards
/// against rounding.
#[derive(Clone, Debug)]
pub struct SteinerPointMc {
    samples: usize,
    seed: u64,
    directions: Vec<Vector>,
}

impl SteinerPointMc {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(CoreError::param("steiner sampling needs samples >= 1"));
        }
        Ok(SteinerPointMc { samples, seed, directions: Vec::new() })
    }

    fn ensure_directions(&mut self, dim: usize) {
        if self.directions.len() == self.samples
            && self.directions.first().map(|d| d.dim()) == Some(dim)
        {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.directions = (0..self.samples)
            .map(|_| loop {
                let g = gaussian(&mut rng, dim);
                let n = NormTag::L2.eval(&g);
                if n > 1e-12 {
                    break g.scale(1.0 / n);
                }
            })
            .collect();
    }
}

impl OnlineAlgorithm for SteinerPointMc {
    fn reset(&mut self, x0: &Vector) {
        self.ensure_directions(x0.dim());
    }
    fn step(&mut self, _t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        let body = match (body, cost) {
            (Some(b), _) => b,
            (None, CostFunction::BodyDistance { body, .. }) => body,
            _ => {
                return Err(CoreError::UnsupportedCost {
                    what: "steiner baseline needs bodies".into(),
                })
            }
        };
        let dim = body.dim();
        self.ensure_directions(dim);
        let mut acc = Vector::zeros(dim);
        for u in &self.directions {
            acc = &acc + &body.support_point(u)?;
        }
        let est = acc.scale(1.0 / self.samples as f64);
        body.project(&est, NormTag::L2)
    }
}

/// Replays a fixed trajectory.
#[derive(Clone, Debug)]
pub struct Replay {
    path: Vec<Vector>,
}

impl Replay {
    pub fn new(path: Vec<Vector>) -> Self {
        Replay { path }
    }
}

impl OnlineAlgorithm for Replay {
    fn reset(&mut self, _x0: &Vector) {}
    fn step(&mut self, t: usize, _cost: &CostFunction, _body: Option<&ConvexBody>) -> Result<Vector> {
        self.path
            .get(t - 1)
            .cloned()
            .ok_or_else(|| CoreError::param("replay trajectory shorter than instance"))
    }
}

/// Stays at a fixed point.
#[derive(Clone, Debug)]
pub struct ConstantAdvice {
    point: Vector,
    project: bool,
    norm: NormTag,
}

impl ConstantAdvice {
    pub fn new(point: Vector, norm: NormTag) -> Self {
        ConstantAdvice { point, project: true, norm }
    }
}

impl OnlineAlgorithm for ConstantAdvice {
    fn reset(&mut self, _x0: &Vector) {}
    fn step(&mut self, _t: usize, _cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        match (body, self.project) {
            (Some(b), true) => b.project(&self.point, self.norm),
            _ => Ok(self.point.clone()),
        }
    }
}

/// Replays a base trajectory with seeded per-round noise, projected into the
/// round body when present so the advice stays feasible.
#[derive(Clone, Debug)]
pub struct NoisyReplay {
    base: Vec<Vector>,
    sigma: f64,
    seed: u64,
    norm: NormTag,
    rng: Option<ChaCha8Rng>,
}

impl NoisyReplay {
    pub fn new(base: Vec<Vector>, sigma: f64, seed: u64, norm: NormTag) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(CoreError::param("noise magnitude must be >= 0"));
        }
        Ok(NoisyReplay { base, sigma, seed, norm, rng: None })
    }
}

impl OnlineAlgorithm for NoisyReplay {
    fn reset(&mut self, _x0: &Vector) {
        self.rng = Some(ChaCha8Rng::seed_from_u64(self.seed));
    }
    fn step(&mut self, t: usize, _cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        let rng = self.rng.as_mut().ok_or_else(|| CoreError::param("step before reset"))?;
        let base = self
            .base
            .get(t - 1)
            .ok_or_else(|| CoreError::param("replay trajectory shorter than instance"))?;
        let x = if self.sigma > 0.0 {
            let noise = gaussian(rng, base.dim());
            base.axpy(self.sigma, &noise)
        } else {
            base.clone()
        };
        match body {
            Some(b) => b.project(&x, self.norm),
            None => Ok(x),
        }
    }
}

/// An advice stream fed round-by-round by an external driver (the
/// adversarial builder). The driver pushes decision t before the wrapped
/// policy steps.
#[derive(Clone, Debug)]
pub struct ScriptedAdvice {
    script: Rc<RefCell<Vec<Vector>>>,
}

impl ScriptedAdvice {
    pub fn new() -> (Self, Rc<RefCell<Vec<Vector>>>) {
        let script = Rc::new(RefCell::new(Vec::new()));
        (ScriptedAdvice { script: script.clone() }, script)
    }
}

impl OnlineAlgorithm for ScriptedAdvice {
    fn reset(&mut self, _x0: &Vector) {}
    fn step(&mut self, t: usize, _cost: &CostFunction, _body: Option<&ConvexBody>) -> Result<Vector> {
        self.script
            .borrow()
            .get(t - 1)
            .cloned()
            .ok_or_else(|| CoreError::param("scripted advice not yet provided"))
    }
}

/// Builds the advice algorithm described by a spec. `Perfect` and `Noisy`
/// require the offline-optimal trajectory.
pub fn make_advice(
    spec: &AdviceSpec,
    instance: &Instance,
    opt_trajectory: Option<&[Vector]>,
) -> Result<Box<dyn OnlineAlgorithm>> {
    Ok(match spec {
        AdviceSpec::Perfect => {
            let path = opt_trajectory
                .ok_or_else(|| CoreError::param("perfect advice requires the optimal trajectory"))?;
            Box::new(NoisyReplay::new(path.to_vec(), 0.0, 0, instance.norm)?)
        }
        AdviceSpec::Noisy { sigma, seed } => {
            let path = opt_trajectory
                .ok_or_else(|| CoreError::param("noisy advice requires the optimal trajectory"))?;
            Box::new(NoisyReplay::new(path.to_vec(), *sigma, *seed, instance.norm)?)
        }
        AdviceSpec::Constant(point) => Box::new(ConstantAdvice::new(point.clone(), instance.norm)),
        AdviceSpec::Adversarial(path) | AdviceSpec::Replay(path) => {
            if path.len() != instance.horizon() {
                return Err(CoreError::DimensionMismatch {
                    expected: instance.horizon(),
                    got: path.len(),
                });
            }
            Box::new(Replay::new(path.clone()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_alpha_polyhedral, gen_nested_bodies, gen_random_quadratic_cfc, QuadraticGenConfig, Subclass};
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    fn one_d_instance() -> Instance {
        // x0 = 0, f1 = f2 = (x-1)^2, absolute-value movement
        let cost = CostFunction::Quadratic {
            q: crate::vector::SquareMatrix::identity(1),
            center: v(&[1.0]),
            offset: 0.0,
        };
        Instance {
            x0: v(&[0.0]),
            costs: vec![cost.clone(), cost],
            bodies: None,
            norm: NormTag::L1,
            subclass: Subclass::Cfc,
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn stay_put_accounting() {
        let inst = gen_random_quadratic_cfc(2, 10, 3, &QuadraticGenConfig::default()).unwrap();
        let traj = run(&mut StayPut::default(), &inst).unwrap();
        assert!(traj.movement.iter().all(|m| *m == 0.0));
        let expected: f64 = inst.costs.iter().map(|c| c.eval(&inst.x0).unwrap()).sum();
        assert_relative_eq!(traj.total(), expected, max_relative = 1e-12);
    }

    #[test]
    fn greedy_on_one_d_quadratics() {
        let inst = one_d_instance();
        let traj = run(&mut GreedyMinimizer, &inst).unwrap();
        // moves to 1, pays movement 1, zero hitting afterwards
        assert_relative_eq!(traj.total(), 1.0, max_relative = 1e-12);
        assert_eq!(traj.decisions, vec![v(&[1.0]), v(&[1.0])]);
    }

    #[test]
    fn greedy_rejects_body_distance() {
        let inst = gen_nested_bodies(2, 4, 1.0, 0).unwrap();
        assert!(run(&mut GreedyMinimizer, &inst).is_err());
    }

    #[test]
    fn partial_cost_additivity() {
        let inst = gen_alpha_polyhedral(2, 12, 1.0, NormTag::L2, 8).unwrap();
        let traj = run(&mut GreedyMinimizer, &inst).unwrap();
        for t in 1..=12 {
            for t2 in t..=12 {
                let total = traj.partial(1, t2);
                let split = if t > 1 { traj.partial(1, t - 1) } else { 0.0 };
                assert_relative_eq!(total, split + traj.partial(t, t2), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn project_greedy_feasible_and_lazy() {
        let inst = gen_nested_bodies(2, 8, 1.0, 1).unwrap();
        let traj = run(&mut ProjectGreedy::new(NormTag::L2), &inst).unwrap();
        assert!(traj.max_infeasibility() <= 1e-9);
        // once inside a body, staying inside the next body costs nothing
        for t in 1..8 {
            let x = &traj.decisions[t - 1];
            if inst.body(t + 1).unwrap().contains(x, NormTag::L2, 1e-12) {
                assert_relative_eq!(traj.movement[t], 0.0);
            }
        }
    }

    #[test]
    fn project_greedy_walks_inward_radially() {
        // nested shrinking balls centered at origin, x0 outside
        let bodies: Vec<ConvexBody> = (0..4)
            .map(|t| ConvexBody::Ball { center: Vector::zeros(2), radius: 1.0 / (t as f64 + 1.0) })
            .collect();
        let costs = bodies
            .iter()
            .map(|b| CostFunction::BodyDistance { body: b.clone(), scale: 3.0, norm: NormTag::L2 })
            .collect();
        let inst = Instance {
            x0: v(&[2.0, 0.0]),
            costs,
            bodies: Some(bodies),
            norm: NormTag::L2,
            subclass: Subclass::Ncbc,
            metadata: BTreeMap::new(),
        };
        let traj = run(&mut ProjectGreedy::new(NormTag::L2), &inst).unwrap();
        for (t, x) in traj.decisions.iter().enumerate() {
            assert_relative_eq!(x[0], 1.0 / (t as f64 + 1.0), max_relative = 1e-12);
            assert_relative_eq!(x[1], 0.0);
        }
    }

    #[test]
    fn steiner_mc_ball_and_singleton() {
        let ball = ConvexBody::Ball { center: v(&[0.5, -0.25]), radius: 2.0 };
        let costs = vec![CostFunction::BodyDistance { body: ball.clone(), scale: 3.0, norm: NormTag::L2 }];
        let inst = Instance {
            x0: Vector::zeros(2),
            costs,
            bodies: Some(vec![ball]),
            norm: NormTag::L2,
            subclass: Subclass::Ncbc,
            metadata: BTreeMap::new(),
        };
        let mut alg = SteinerPointMc::new(100_000, 17).unwrap();
        let traj = run(&mut alg, &inst).unwrap();
        // the Steiner point of a ball is its center
        let err = NormTag::L2.dist(&traj.decisions[0], &v(&[0.5, -0.25]));
        assert!(err <= 0.02 * 2.0, "err = {err}");

        let singleton = ConvexBody::Singleton { point: v(&[1.0, 1.0]) };
        let inst2 = Instance {
            x0: Vector::zeros(2),
            costs: vec![CostFunction::BodyDistance {
                body: singleton.clone(),
                scale: 3.0,
                norm: NormTag::L2,
            }],
            bodies: Some(vec![singleton]),
            norm: NormTag::L2,
            subclass: Subclass::Ncbc,
            metadata: BTreeMap::new(),
        };
        let traj2 = run(&mut SteinerPointMc::new(64, 17).unwrap(), &inst2).unwrap();
        assert_eq!(traj2.decisions[0], v(&[1.0, 1.0]));
    }

    #[test]
    fn steiner_mc_symmetric_box_center() {
        let body = ConvexBody::Box { lower: v(&[-1.0, 0.0]), upper: v(&[1.0, 3.0]) };
        let inst = Instance {
            x0: Vector::zeros(2),
            costs: vec![CostFunction::BodyDistance { body: body.clone(), scale: 3.0, norm: NormTag::L2 }],
            bodies: Some(vec![body]),
            norm: NormTag::L2,
            subclass: Subclass::Ncbc,
            metadata: BTreeMap::new(),
        };
        let traj = run(&mut SteinerPointMc::new(100_000, 23).unwrap(), &inst).unwrap();
        let center = v(&[0.0, 1.5]);
        let diam = NormTag::L2.eval(&v(&[2.0, 3.0]));
        assert!(NormTag::L2.dist(&traj.decisions[0], &center) <= 0.02 * diam);
    }

    #[test]
    fn online_causality_prefix_reproduction() {
        let inst = gen_random_quadratic_cfc(3, 20, 9, &QuadraticGenConfig::default()).unwrap();
        let full = run(&mut GreedyMinimizer, &inst).unwrap();
        let mut prefix_inst = inst.clone();
        prefix_inst.costs.truncate(11);
        let prefix = run(&mut GreedyMinimizer, &prefix_inst).unwrap();
        assert_eq!(&full.decisions[..11], &prefix.decisions[..]);

        // also for a stateful algorithm
        let nested = gen_nested_bodies(2, 10, 1.0, 4).unwrap();
        let full = run(&mut SteinerPointMc::new(500, 3).unwrap(), &nested).unwrap();
        let mut prefix_inst = nested.clone();
        prefix_inst.costs.truncate(6);
        prefix_inst.bodies.as_mut().unwrap().truncate(6);
        let prefix = run(&mut SteinerPointMc::new(500, 3).unwrap(), &prefix_inst).unwrap();
        assert_eq!(&full.decisions[..6], &prefix.decisions[..]);
    }

    #[test]
    fn advice_constructors() {
        let inst = one_d_instance();
        let opt_path = vec![v(&[0.75]), v(&[0.75])];

        let mut perfect = make_advice(&AdviceSpec::Perfect, &inst, Some(&opt_path)).unwrap();
        let traj = run(&mut perfect, &inst).unwrap();
        assert_eq!(traj.decisions, opt_path);

        let mut noisy0 =
            make_advice(&AdviceSpec::Noisy { sigma: 0.0, seed: 5 }, &inst, Some(&opt_path)).unwrap();
        assert_eq!(run(&mut noisy0, &inst).unwrap().decisions, opt_path);

        let mut constant =
            make_advice(&AdviceSpec::Constant(v(&[0.0])), &inst, None).unwrap();
        let traj = run(&mut constant, &inst).unwrap();
        let expected: f64 = inst.costs.iter().map(|c| c.eval(&v(&[0.0])).unwrap()).sum();
        assert_relative_eq!(traj.total(), expected);

        assert!(make_advice(&AdviceSpec::Perfect, &inst, None).is_err());
    }

    #[test]
    fn run_aborts_on_non_finite_decision() {
        struct Bad;
        impl OnlineAlgorithm for Bad {
            fn reset(&mut self, _x0: &Vector) {}
            fn step(&mut self, _t: usize, _c: &CostFunction, _b: Option<&ConvexBody>) -> Result<Vector> {
                Ok(v(&[f64::NAN]))
            }
        }
        let inst = one_d_instance();
        assert!(matches!(run(&mut Bad, &inst), Err(CoreError::NonFiniteDecision { round: 1 })));
    }
}
