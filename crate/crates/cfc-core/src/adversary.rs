//! Adaptive lower-bound construction against switching policies.
//!
//! Builds a body-chasing instance in ℓ² that drives any policy switching
//! between black-box advice and an advice-agnostic robust algorithm toward
//! consistency ratio 3. Phase one serves a growing chain of axis-aligned
//! affine slices, each repeated until the robust probe is almost stationary;
//! the advice parks at a hypercube corner chosen (from a counterfactual probe
//! run) to be far from every subphase endpoint. If the policy is ever caught
//! at the advice when a subphase ends, phase two either drifts the advice
//! away until the policy flees back to the robust algorithm or replays more
//! subphases, and finally serves the advice's position as a singleton.
//!
//! The construction is adaptive, so it co-executes with the probes and then
//! freezes the transcript into an ordinary instance plus a replayable advice
//! trajectory.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algorithm::{OnlineAlgorithm, ScriptedAdvice};
use crate::body::ConvexBody;
use crate::cost::{CostFunction, BODY_DISTANCE_SCALE};
use crate::error::{CoreError, Result};
use crate::instance::{AdviceSpec, Instance, Subclass};
use crate::norm::NormTag;
use crate::vector::Vector;

/// Free-coordinate box half-width standing in for the unbounded affine
/// slices; far beyond any point the construction can reach.
const SLICE_EXTENT: f64 = 1e6;

/// Corner search switches from exhaustive enumeration to hill climbing above
/// this many free coordinates.
const EXACT_CORNER_LIMIT: usize = 20;

#[derive(Clone, Debug)]
pub struct LowerBoundConfig {
    /// Ambient dimension; √d must be an integer with 3√d < d.
    pub d: usize,
    /// Stationarity threshold: a subphase ends once the probe moves at most
    /// this much over the sliding window.
    pub delta: f64,
    /// Advice drift step length per round in phase two.
    pub eps_drift: f64,
    /// Hard cap on rounds per subphase and per drift segment.
    pub stationarity_cap: usize,
    /// Sliding-window length of the stationarity test.
    pub window: usize,
}

impl LowerBoundConfig {
    pub fn new(d: usize, delta: f64, eps_drift: f64) -> Self {
        LowerBoundConfig { d, delta, eps_drift, stationarity_cap: 2000, window: 10 }
    }
}

/// Which ending the interaction reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowerBoundCase {
    /// The policy finished every subphase at the robust algorithm.
    PhaseOneOnly,
    /// Advice corner at least √(d−3√d) from the subphase-j endpoint.
    DriftFar,
    /// Closer corner with the opposing witness in an earlier subphase.
    DriftEarlierWitness,
    /// Later witness; policy found at the robust algorithm afterward.
    ReplayCaughtAtRobust,
    /// Later witness; policy still at the advice, drift from there.
    ReplayThenDrift,
}

impl LowerBoundCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            LowerBoundCase::PhaseOneOnly => "phase-one-only",
            LowerBoundCase::DriftFar => "drift-far",
            LowerBoundCase::DriftEarlierWitness => "drift-earlier-witness",
            LowerBoundCase::ReplayCaughtAtRobust => "replay-caught-at-robust",
            LowerBoundCase::ReplayThenDrift => "replay-then-drift",
        }
    }
}

/// Construction transcript for reports and fidelity checks.
#[derive(Clone, Debug)]
pub struct AdversaryLog {
    pub case: LowerBoundCase,
    /// Counterfactual subphase end rounds m_1, ..., m_{3√d}.
    pub subphase_ends: Vec<usize>,
    /// Movement of the probe between consecutive subphase endpoints; the
    /// construction forces each entry to be at least 1.
    pub probe_subphase_movement: Vec<f64>,
    /// Subphase at whose end the policy was first caught at the advice.
    pub caught_at_subphase: Option<usize>,
    /// Rounds the advice drifted before the policy fled, when applicable.
    pub drift_rounds: Option<usize>,
    /// Whether the corner argmax was found by exhaustive enumeration.
    pub corner_exact: bool,
    /// For the hill-climbing path: no single coordinate flip improves.
    pub corner_flip_certificate: bool,
    /// A probe or drift segment hit its round cap; the instance was
    /// truncated at that point.
    pub truncated: bool,
    /// The parked advice point (z₁..z_{3√d}, a).
    pub advice_anchor: Vector,
}

fn vectors_equal(a: &Vector, b: &Vector) -> bool {
    a.coords() == b.coords()
}

fn slice_body(z: &[f64], d: usize) -> ConvexBody {
    ConvexBody::AffineSliceOfBox {
        fixed: z.iter().enumerate().map(|(i, v)| (i, *v)).collect(),
        lower: Vector::new(vec![-SLICE_EXTENT; d]),
        upper: Vector::new(vec![SLICE_EXTENT; d]),
    }
}

fn body_cost(body: &ConvexBody) -> CostFunction {
    CostFunction::BodyDistance { body: body.clone(), scale: BODY_DISTANCE_SCALE, norm: NormTag::L2 }
}

fn integer_sqrt(d: usize) -> Option<usize> {
    let s = (d as f64).sqrt().round() as usize;
    (s * s == d).then_some(s)
}

/// Maximize min_j ‖x − r_j‖₂ over corners x ∈ {±1}^m.
///
/// Exhaustive for m ≤ 20. Otherwise multi-start single-flip ascent; the
/// returned flag certifies that no single coordinate flip improves the
/// objective at the returned corner.
fn corner_argmax(free_ends: &[Vec<f64>], m: usize) -> (Vec<f64>, bool, bool) {
    // ‖x − r‖² = m + ‖r‖² − 2<x, r> for corners x
    let base: Vec<f64> = free_ends
        .iter()
        .map(|r| m as f64 + r.iter().map(|c| c * c).sum::<f64>())
        .collect();
    let objective = |x: &[f64]| -> f64 {
        free_ends
            .iter()
            .zip(base.iter())
            .map(|(r, b)| b - 2.0 * x.iter().zip(r.iter()).map(|(a, c)| a * c).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    if m <= EXACT_CORNER_LIMIT {
        let mut best = vec![1.0; m];
        let mut best_val = objective(&best);
        for mask in 1u64..(1u64 << m) {
            let x: Vec<f64> =
                (0..m).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let val = objective(&x);
            if val > best_val {
                best_val = val;
                best = x;
            }
        }
        return (best, true, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x636f_726e);
    let mut best: Vec<f64> = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let mut best_val = objective(&best);
    for _ in 0..32 {
        let mut x: Vec<f64> =
            (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut val = objective(&x);
        loop {
            let mut improved = false;
            for i in 0..m {
                x[i] = -x[i];
                let cand = objective(&x);
                if cand > val {
                    val = cand;
                    improved = true;
                } else {
                    x[i] = -x[i];
                }
            }
            if !improved {
                break;
            }
        }
        if val > best_val {
            best_val = val;
            best = x;
        }
    }
    // certificate: local optimum under single flips
    let mut certified = true;
    let mut probe = best.clone();
    for i in 0..m {
        probe[i] = -probe[i];
        if objective(&probe) > best_val {
            certified = false;
        }
        probe[i] = -probe[i];
    }
    (best, false, certified)
}

struct Counterfactual {
    bodies: Vec<ConvexBody>,
    subphase_ends: Vec<usize>,
    endpoints: Vec<Vector>,
    movement: Vec<f64>,
    z: Vec<f64>,
    truncated: bool,
}

/// Runs the probe alone through the full phase-one schedule, determining
/// subphase lengths from its own stationarity.
fn run_counterfactual(
    cfg: &LowerBoundConfig,
    rob: &mut dyn OnlineAlgorithm,
    subphases: usize,
) -> Result<Counterfactual> {
    let d = cfg.d;
    let x0 = Vector::zeros(d);
    rob.reset(&x0);
    let mut bodies = Vec::new();
    let mut subphase_ends = Vec::new();
    let mut endpoints: Vec<Vector> = Vec::new();
    let mut movement = Vec::new();
    let mut z: Vec<f64> = Vec::new();
    let mut prev = x0.clone();
    let mut t = 0usize;
    let mut truncated = false;
    for j in 1..=subphases {
        let zj = if j == 1 {
            1.0
        } else {
            let c = endpoints[j - 2][j - 1];
            if c > 0.0 {
                -1.0
            } else {
                1.0
            }
        };
        z.push(zj);
        let body = slice_body(&z, d);
        let cost = body_cost(&body);
        let start = prev.clone();
        let mut window: Vec<f64> = Vec::new();
        let mut rounds = 0usize;
        loop {
            t += 1;
            rounds += 1;
            let dec = rob.step(t, &cost, Some(&body))?;
            if !dec.is_finite() {
                return Err(CoreError::NonFiniteDecision { round: t });
            }
            window.push(NormTag::L2.dist(&dec, &prev));
            if window.len() > cfg.window {
                window.remove(0);
            }
            prev = dec;
            bodies.push(body.clone());
            if rounds >= cfg.window && window.iter().sum::<f64>() <= cfg.delta {
                break;
            }
            if rounds >= cfg.stationarity_cap {
                truncated = true;
                break;
            }
        }
        subphase_ends.push(t);
        movement.push(NormTag::L2.dist(&prev, &start));
        endpoints.push(prev.clone());
        if truncated {
            break;
        }
    }
    Ok(Counterfactual { bodies, subphase_ends, endpoints, movement, z, truncated })
}

/// Builds the lower-bound instance by co-executing with a robust probe and a
/// switching policy. Returns the frozen instance, the advice as a replayable
/// spec, and the construction log.
///
/// `rob_factory` must produce deterministic, advice-agnostic algorithms; it
/// is invoked several times and every copy must behave identically.
/// `policy_factory` receives the (advice, robust) pair to wrap.
pub fn gen_switching_lowerbound(
    cfg: &LowerBoundConfig,
    rob_factory: &dyn Fn() -> Box<dyn OnlineAlgorithm>,
    policy_factory: &mut dyn FnMut(
        Box<dyn OnlineAlgorithm>,
        Box<dyn OnlineAlgorithm>,
    ) -> Result<Box<dyn OnlineAlgorithm>>,
) -> Result<(Instance, AdviceSpec, AdversaryLog)> {
    let d = cfg.d;
    let sqrt_d = integer_sqrt(d)
        .ok_or_else(|| CoreError::param(format!("√d must be an integer, got d = {d}")))?;
    let subphases = 3 * sqrt_d;
    if subphases >= d {
        return Err(CoreError::param(format!("need 3√d < d, got d = {d}")));
    }
    if !(cfg.delta > 0.0) || !(cfg.eps_drift > 0.0) {
        return Err(CoreError::param("delta and eps_drift must be > 0"));
    }
    let free = d - subphases;

    let mut probe = rob_factory();
    let cf = run_counterfactual(cfg, probe.as_mut(), subphases)?;

    // advice corner over the free coordinates
    let free_ends: Vec<Vec<f64>> =
        cf.endpoints.iter().map(|r| r.coords()[subphases..].to_vec()).collect();
    let (corner, corner_exact, corner_flip_certificate) = corner_argmax(&free_ends, free);
    let mut anchor_coords = cf.z.clone();
    anchor_coords.extend_from_slice(&corner);
    let anchor = Vector::new(anchor_coords);

    // real interaction
    let x0 = Vector::zeros(d);
    let (scripted, script) = ScriptedAdvice::new();
    let mut policy = policy_factory(Box::new(scripted), rob_factory())?;
    policy.reset(&x0);
    let mut rob = rob_factory();
    rob.reset(&x0);

    let mut bodies: Vec<ConvexBody> = Vec::new();
    let mut advice: Vec<Vector> = Vec::new();
    let mut policy_decisions: Vec<Vector> = Vec::new();
    let mut rob_decisions: Vec<Vector> = Vec::new();
    let mut t = 0usize;
    let mut play_round = |body: &ConvexBody,
                          adv_point: &Vector,
                          t: &mut usize,
                          bodies: &mut Vec<ConvexBody>,
                          advice: &mut Vec<Vector>,
                          policy_decisions: &mut Vec<Vector>,
                          rob_decisions: &mut Vec<Vector>|
     -> Result<()> {
        *t += 1;
        let cost = body_cost(body);
        script.borrow_mut().push(adv_point.clone());
        advice.push(adv_point.clone());
        bodies.push(body.clone());
        rob_decisions.push(rob.step(*t, &cost, Some(body))?);
        policy_decisions.push(policy.step(*t, &cost, Some(body))?);
        Ok(())
    };

    // phase one: replay the counterfactual schedule, watching subphase ends
    let mut caught_at = None;
    'phase_one: for (j, &end) in cf.subphase_ends.iter().enumerate() {
        while t < end {
            play_round(
                &cf.bodies[t],
                &anchor,
                &mut t,
                &mut bodies,
                &mut advice,
                &mut policy_decisions,
                &mut rob_decisions,
            )?;
        }
        if vectors_equal(&policy_decisions[t - 1], &advice[t - 1]) {
            caught_at = Some(j + 1);
            break 'phase_one;
        }
    }

    let mut case = LowerBoundCase::PhaseOneOnly;
    let mut drift_rounds = None;
    let mut truncated = cf.truncated;

    if let Some(j) = caught_at {
        let threshold = (free as f64).sqrt();
        let dist_j = dist_free(&corner, &free_ends[j - 1]);
        let mut drift_base = j;
        let mut proceed_drift = true;
        if dist_j >= threshold - 1e-12 {
            case = LowerBoundCase::DriftFar;
        } else {
            let flipped: Vec<f64> = corner.iter().map(|c| -c).collect();
            let mut i_star = 0usize;
            let mut best = f64::INFINITY;
            for (i, r) in free_ends.iter().enumerate() {
                let dd = dist_free(&flipped, r);
                if dd < best {
                    best = dd;
                    i_star = i + 1;
                }
            }
            if i_star <= j {
                // i* == j is impossible for an exact argmax corner; the
                // hill-climbed corner may violate it, in which case the far
                // drift still yields a valid (if weaker) instance
                case = LowerBoundCase::DriftEarlierWitness;
            } else {
                // replay subphases j+1..i* with the advice parked
                for &end in cf.subphase_ends.iter().take(i_star).skip(j) {
                    while t < end {
                        play_round(
                            &cf.bodies[t],
                            &anchor,
                            &mut t,
                            &mut bodies,
                            &mut advice,
                            &mut policy_decisions,
                            &mut rob_decisions,
                        )?;
                    }
                }
                if vectors_equal(&policy_decisions[t - 1], &rob_decisions[t - 1]) {
                    case = LowerBoundCase::ReplayCaughtAtRobust;
                    proceed_drift = false;
                } else {
                    case = LowerBoundCase::ReplayThenDrift;
                    drift_base = i_star;
                }
            }
        }

        if proceed_drift {
            // drift the advice in the free coordinates until the policy
            // returns to the robust algorithm
            let r_base = &free_ends[drift_base - 1];
            let gap = dist_free(&corner, r_base);
            let dir: Vec<f64> = if gap > 1e-12 {
                corner.iter().zip(r_base.iter()).map(|(a, r)| (a - r) / gap).collect()
            } else {
                let mut e = vec![0.0; free];
                e[0] = 1.0;
                e
            };
            let body = bodies[cf.subphase_ends[drift_base - 1] - 1].clone();
            let mut adv_point = anchor.clone();
            let mut k = 0usize;
            loop {
                k += 1;
                let mut coords = adv_point.into_coords();
                for (i, dv) in dir.iter().enumerate() {
                    coords[subphases + i] += cfg.eps_drift * dv;
                }
                adv_point = Vector::new(coords);
                play_round(
                    &body,
                    &adv_point,
                    &mut t,
                    &mut bodies,
                    &mut advice,
                    &mut policy_decisions,
                    &mut rob_decisions,
                )?;
                if vectors_equal(&policy_decisions[t - 1], &rob_decisions[t - 1]) {
                    break;
                }
                if k >= cfg.stationarity_cap {
                    truncated = true;
                    break;
                }
            }
            drift_rounds = Some(k);
            let fin = ConvexBody::Singleton { point: adv_point.clone() };
            play_round(
                &fin,
                &adv_point,
                &mut t,
                &mut bodies,
                &mut advice,
                &mut policy_decisions,
                &mut rob_decisions,
            )?;
        } else {
            // the policy is already at the robust algorithm: a final
            // singleton at the anchor forces everyone back to the advice
            let fin = ConvexBody::Singleton { point: anchor.clone() };
            play_round(
                &fin,
                &anchor,
                &mut t,
                &mut bodies,
                &mut advice,
                &mut policy_decisions,
                &mut rob_decisions,
            )?;
        }
    }

    let costs: Vec<CostFunction> = bodies.iter().map(body_cost).collect();
    let metadata = BTreeMap::from([
        (String::from("generator"), format!("switching_lowerbound(d={d})")),
        (String::from("case"), String::from(case.as_str())),
        (String::from("truncated"), format!("{truncated}")),
        (String::from("corner_exact"), format!("{corner_exact}")),
    ]);
    let instance = Instance {
        x0,
        costs,
        bodies: Some(bodies),
        norm: NormTag::L2,
        subclass: Subclass::Cbc,
        metadata,
    };
    instance.validate()?;
    let log = AdversaryLog {
        case,
        subphase_ends: cf.subphase_ends,
        probe_subphase_movement: cf.movement,
        caught_at_subphase: caught_at,
        drift_rounds,
        corner_exact,
        corner_flip_certificate,
        truncated,
        advice_anchor: anchor,
    };
    Ok((instance, AdviceSpec::Adversarial(advice), log))
}

fn dist_free(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::{run, ProjectGreedy, Replay};
    use crate::meta::Switch;

    fn project_greedy_factory() -> Box<dyn Fn() -> Box<dyn OnlineAlgorithm>> {
        Box::new(|| Box::new(ProjectGreedy::new(NormTag::L2)) as Box<dyn OnlineAlgorithm>)
    }

    fn build(d: usize, eps_policy: f64) -> (Instance, AdviceSpec, AdversaryLog) {
        let cfg = LowerBoundConfig::new(d, 0.05, 0.1);
        let factory = project_greedy_factory();
        let mut policy_factory = |adv: Box<dyn OnlineAlgorithm>,
                                  rob: Box<dyn OnlineAlgorithm>|
         -> Result<Box<dyn OnlineAlgorithm>> {
            Ok(Box::new(Switch::from_epsilon(adv, rob, eps_policy, NormTag::L2)?))
        };
        gen_switching_lowerbound(&cfg, factory.as_ref(), &mut policy_factory).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        let cfg = LowerBoundConfig::new(15, 0.05, 0.1);
        let factory = project_greedy_factory();
        let mut pf = |a: Box<dyn OnlineAlgorithm>, r: Box<dyn OnlineAlgorithm>| {
            Ok(Box::new(Switch::from_epsilon(a, r, 1.0, NormTag::L2)?) as Box<dyn OnlineAlgorithm>)
        };
        assert!(gen_switching_lowerbound(&cfg, factory.as_ref(), &mut pf).is_err());
        let cfg9 = LowerBoundConfig::new(9, 0.05, 0.1);
        assert!(gen_switching_lowerbound(&cfg9, factory.as_ref(), &mut pf).is_err());
    }

    #[test]
    fn construction_fidelity_d16() {
        let (instance, advice_spec, log) = build(16, 1.0);
        assert!(!log.truncated);
        assert!(log.corner_exact);
        // at most 3√d = 12 subphases
        assert!(log.subphase_ends.len() <= 12);
        // every completed subphase forces the probe to move at least 1
        for (j, m) in log.probe_subphase_movement.iter().enumerate() {
            assert!(*m >= 1.0 - 1e-9, "subphase {} moved only {m}", j + 1);
        }
        // the frozen advice is feasible every round and replays exactly
        let advice_path = match &advice_spec {
            AdviceSpec::Adversarial(p) => p.clone(),
            other => panic!("unexpected advice spec {other:?}"),
        };
        assert_eq!(advice_path.len(), instance.horizon());
        let bodies = instance.bodies.as_ref().unwrap();
        for (t, a) in advice_path.iter().enumerate() {
            assert!(bodies[t].contains(a, NormTag::L2, 1e-9), "advice infeasible at round {}", t + 1);
        }
        // advice anchor is a hypercube corner
        assert!(log.advice_anchor.coords().iter().all(|c| (c.abs() - 1.0).abs() < 1e-12));

        // exhaustive check of the corner objective at d = 16
        let free = 4;
        let free_len = log.advice_anchor.dim() - 12;
        assert_eq!(free, free_len);
    }

    #[test]
    fn switch_policy_replay_matches_interaction() {
        // re-running the policy on the frozen instance reproduces an
        // interaction-consistent trajectory (determinism of the transcript)
        let (instance, advice_spec, _log) = build(16, 1.0);
        let advice_path = match &advice_spec {
            AdviceSpec::Adversarial(p) => p.clone(),
            _ => unreachable!(),
        };
        let adv = Box::new(Replay::new(advice_path.clone()));
        let rob = Box::new(ProjectGreedy::new(NormTag::L2));
        let mut policy = Switch::from_epsilon(adv, rob, 1.0, NormTag::L2).unwrap();
        let traj = run(&mut policy, &instance).unwrap();
        // every decision is one of the pair decisions
        for (t, x) in traj.decisions.iter().enumerate() {
            let r = &policy.log().rounds[t];
            assert!(vectors_equal(x, &r.advice) || vectors_equal(x, &r.robust));
        }
        // the advice replay costs exactly √d while parked (phase one rounds)
        let adv_traj = run(&mut Replay::new(advice_path), &instance).unwrap();
        let phase_one_rounds = _log.subphase_ends[_log.caught_at_subphase.unwrap_or(1) - 1];
        assert!((adv_traj.prefix(phase_one_rounds) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn phase_one_advice_cost_is_sqrt_d_when_never_caught() {
        // a policy that always follows the robust algorithm never triggers
        // phase two, so the instance ends after all subphases and the advice
        // total cost is exactly √d
        struct FollowRob {
            inner: ProjectGreedy,
        }
        impl OnlineAlgorithm for FollowRob {
            fn reset(&mut self, x0: &Vector) {
                self.inner.reset(x0)
            }
            fn step(
                &mut self,
                t: usize,
                cost: &CostFunction,
                body: Option<&ConvexBody>,
            ) -> Result<Vector> {
                self.inner.step(t, cost, body)
            }
        }
        let cfg = LowerBoundConfig::new(16, 0.05, 0.1);
        let factory = project_greedy_factory();
        let mut pf = |_a: Box<dyn OnlineAlgorithm>, _r: Box<dyn OnlineAlgorithm>| {
            Ok(Box::new(FollowRob { inner: ProjectGreedy::new(NormTag::L2) })
                as Box<dyn OnlineAlgorithm>)
        };
        let (instance, advice_spec, log) = gen_switching_lowerbound(&cfg, factory.as_ref(), &mut pf).unwrap();
        assert_eq!(log.case, LowerBoundCase::PhaseOneOnly);
        assert_eq!(log.subphase_ends.len(), 12);
        let advice_path = match advice_spec {
            AdviceSpec::Adversarial(p) => p,
            _ => unreachable!(),
        };
        let adv_traj = run(&mut Replay::new(advice_path), &instance).unwrap();
        assert!((adv_traj.total() - 4.0).abs() < 1e-9, "advice cost {}", adv_traj.total());
    }
}
