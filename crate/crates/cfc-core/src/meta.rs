//! Advice-augmented meta-algorithms and their bicompetitive bounds.
//!
//! Each meta-algorithm wraps two online algorithms — the untrusted advice and
//! a robust competitive algorithm — advances both in the background every
//! round, and combines their decisions. Branch thresholds compare the wrapped
//! algorithms' own running costs C(1, t), computed as if each were followed
//! from the start.
//!
//! Threshold comparisons use the written non-strict inequalities with a
//! 1e-12 absolute guard that resolves floating-point ties toward the advice
//! branch, making tie behavior deterministic.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::algorithm::OnlineAlgorithm;
use crate::body::ConvexBody;
use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::norm::{radial_retraction, NormTag};
use crate::vector::Vector;

const TIE_GUARD: f64 = 1e-12;

/// Which wrapped algorithm determined the round's decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Adv,
    Rob,
}

/// Everything recorded about one meta-algorithm round: the branch taken, the
/// threshold it compared against, the potential-function value, and the
/// surrounding state needed to replay the proofs' per-round inequalities.
#[derive(Clone, Debug)]
pub struct MetaRound {
    pub t: usize,
    pub phase: Phase,
    /// Switch's phase counter i; unused by the interpolating algorithms.
    pub phase_index: Option<u32>,
    /// The branch threshold value at this round.
    pub threshold: f64,
    /// Potential-function value (‖x̃_t − x_t‖ for Interp,
    /// ‖x_t − s_t‖ / ‖x̃_t − s_t‖ for BdInterp, 0 for the switchers).
    pub potential: f64,
    pub decision: Vector,
    pub advice: Vector,
    pub robust: Vector,
    pub prev_decision: Vector,
    pub prev_advice: Vector,
    pub prev_robust: Vector,
    /// C_Adv(1, t) and C_Rob(1, t).
    pub adv_cum: f64,
    pub rob_cum: f64,
    /// C_Adv(t, t) and C_Rob(t, t).
    pub adv_round: f64,
    pub rob_round: f64,
    /// Interp's intermediate points y_t, z_t (else-branch rounds only).
    pub aux_y: Option<Vector>,
    pub aux_z: Option<Vector>,
}

#[derive(Clone, Debug, Default)]
pub struct PhaseLog {
    pub rounds: Vec<MetaRound>,
}

impl PhaseLog {
    /// max_t ‖Adv_t − Rob_t‖, the measured D-boundedness of the wrapped pair.
    pub fn measured_d(&self, norm: NormTag) -> f64 {
        self.rounds
            .iter()
            .map(|r| norm.dist(&r.advice, &r.robust))
            .fold(0.0, f64::max)
    }

    /// Number of Adv→Rob or Rob→Adv transitions in the phase labels.
    pub fn transition_count(&self) -> usize {
        self.rounds.windows(2).filter(|w| w[0].phase != w[1].phase).count()
    }
}

/// Runs a wrapped algorithm in the background and accounts its own cost
/// C(1, t) = Σ f_i(decision_i) + ‖decision_i − decision_{i−1}‖.
struct Tracked {
    alg: Box<dyn OnlineAlgorithm>,
    decision: Vector,
    prev: Vector,
    cum: f64,
    round: f64,
}

impl Tracked {
    fn new(alg: Box<dyn OnlineAlgorithm>) -> Self {
        Tracked { alg, decision: Vector::zeros(0), prev: Vector::zeros(0), cum: 0.0, round: 0.0 }
    }

    fn reset(&mut self, x0: &Vector) {
        self.alg.reset(x0);
        self.decision = x0.clone();
        self.prev = x0.clone();
        self.cum = 0.0;
        self.round = 0.0;
    }

    fn advance(
        &mut self,
        t: usize,
        cost: &CostFunction,
        body: Option<&ConvexBody>,
        norm: NormTag,
    ) -> Result<()> {
        let d = self.alg.step(t, cost, body)?;
        if !d.is_finite() {
            return Err(CoreError::NonFiniteDecision { round: t });
        }
        self.round = cost.eval(&d)? + norm.dist(&d, &self.decision);
        self.cum += self.round;
        self.prev = core::mem::replace(&mut self.decision, d);
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(CoreError::param(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

fn check_interp_params(epsilon: f64, gamma: f64, delta: f64) -> Result<()> {
    check_positive("epsilon", epsilon)?;
    check_positive("gamma", gamma)?;
    check_positive("delta", delta)?;
    if (2.0 * gamma + 2.0 * delta - epsilon).abs() > 1e-12 {
        return Err(CoreError::param(format!(
            "hyperparameters must satisfy 2*gamma + 2*delta = epsilon; got 2*{gamma} + 2*{delta} != {epsilon}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Switch
// ---------------------------------------------------------------------------

/// Budgeted switching: follow the advice while its running cost stays within
/// the budget bⁱ of the current even phase, the robust algorithm while its
/// running cost stays within δbⁱ of the current odd phase, advancing the
/// phase whenever a budget is exhausted.
///
/// The phase advances on the first round the running cost (including the
/// current round) exceeds the budget, and that round is already played by
/// the next phase's algorithm; consecutive budgets that are already exhausted
/// are skipped as vacuous phases. Decisions are always exactly one of
/// {Adv_t, Rob_t}.
pub struct Switch {
    adv: Tracked,
    rob: Tracked,
    b: f64,
    delta: f64,
    norm: NormTag,
    phase_index: u32,
    log: PhaseLog,
}

impl Switch {
    pub fn new(
        adv: Box<dyn OnlineAlgorithm>,
        rob: Box<dyn OnlineAlgorithm>,
        b: f64,
        delta: f64,
        norm: NormTag,
    ) -> Result<Self> {
        if !(b > 1.0) {
            return Err(CoreError::param(format!("switch requires b > 1, got {b}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(CoreError::param(format!("switch requires delta in (0, 1], got {delta}")));
        }
        Ok(Switch {
            adv: Tracked::new(adv),
            rob: Tracked::new(rob),
            b,
            delta,
            norm,
            phase_index: 0,
            log: PhaseLog::default(),
        })
    }

    /// Single-hyperparameter form: γ = √(ε/4), b = √(γ⁻² + 1),
    /// δ = bγ² − b⁻¹. Valid while the substituted δ stays in (0, 1], which
    /// covers the small-ε regime the trade-off targets.
    pub fn from_epsilon(
        adv: Box<dyn OnlineAlgorithm>,
        rob: Box<dyn OnlineAlgorithm>,
        epsilon: f64,
        norm: NormTag,
    ) -> Result<Self> {
        let (b, delta) = switch_params_from_epsilon(epsilon)?;
        Switch::new(adv, rob, b, delta, norm)
    }

    pub fn log(&self) -> &PhaseLog {
        &self.log
    }

    fn budget(&self) -> f64 {
        let raw = self.b.powi(self.phase_index as i32);
        if self.phase_index % 2 == 0 {
            raw
        } else {
            self.delta * raw
        }
    }
}

/// The three substitutions reducing (b, δ) to one hyperparameter ε.
pub fn switch_params_from_epsilon(epsilon: f64) -> Result<(f64, f64)> {
    check_positive("epsilon", epsilon)?;
    let gamma = (epsilon / 4.0).sqrt();
    let b = (gamma.powi(-2) + 1.0).sqrt();
    let delta = b * gamma * gamma - 1.0 / b;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CoreError::param(format!(
            "epsilon {epsilon} substitutes to delta {delta} outside (0, 1]"
        )));
    }
    Ok((b, delta))
}

impl OnlineAlgorithm for Switch {
    fn reset(&mut self, x0: &Vector) {
        self.adv.reset(x0);
        self.rob.reset(x0);
        self.phase_index = 0;
        self.log = PhaseLog::default();
    }

    fn step(&mut self, t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        self.adv.advance(t, cost, body, self.norm)?;
        self.rob.advance(t, cost, body, self.norm)?;
        let prev_decision = self
            .log
            .rounds
            .last()
            .map(|r| r.decision.clone())
            .unwrap_or_else(|| self.adv.prev.clone());
        // Skip exhausted budgets (vacuous phases) until one accommodates the
        // current running cost. Terminates because budgets grow to infinity.
        let phase = loop {
            if self.phase_index % 2 == 0 {
                if self.adv.cum <= self.budget() + TIE_GUARD {
                    break Phase::Adv;
                }
            } else if self.rob.cum <= self.budget() + TIE_GUARD {
                break Phase::Rob;
            }
            self.phase_index += 1;
            if self.phase_index > 4000 {
                return Err(CoreError::InvariantViolation {
                    what: "switch phase index diverged".into(),
                });
            }
        };
        let decision = match phase {
            Phase::Adv => self.adv.decision.clone(),
            Phase::Rob => self.rob.decision.clone(),
        };
        self.log.rounds.push(MetaRound {
            t,
            phase,
            phase_index: Some(self.phase_index),
            threshold: self.budget(),
            potential: 0.0,
            decision: decision.clone(),
            advice: self.adv.decision.clone(),
            robust: self.rob.decision.clone(),
            prev_decision,
            prev_advice: self.adv.prev.clone(),
            prev_robust: self.rob.prev.clone(),
            adv_cum: self.adv.cum,
            rob_cum: self.rob.cum,
            adv_round: self.adv.round,
            rob_round: self.rob.round,
            aux_y: None,
            aux_z: None,
        });
        Ok(decision)
    }
}

/// Closed-form bicompetitive bound (c, r) of `Switch` with parameters (b, δ).
pub fn bound_switch(b: f64, delta_sw: f64) -> (f64, f64) {
    let base = b * b / (b * b - 1.0);
    let cube = b * b * b / (b * b - 1.0);
    let c = 1.0 + 2.0 * (base + delta_sw * cube);
    let r = 1.0 + 2.0 * (base + cube / delta_sw);
    (c, r)
}

// ---------------------------------------------------------------------------
// NestedSwitch
// ---------------------------------------------------------------------------

/// Threshold switching for nested body chasing: follow the advice until its
/// running cost reaches r(d + 2)/ε, then follow the robust algorithm forever
/// (the advice cost is nondecreasing, so the threshold can fire at most
/// once).
pub struct NestedSwitch {
    adv: Tracked,
    rob: Tracked,
    epsilon: f64,
    radius: f64,
    dim: usize,
    norm: NormTag,
    switched: bool,
    log: PhaseLog,
}

impl NestedSwitch {
    pub fn new(
        adv: Box<dyn OnlineAlgorithm>,
        rob: Box<dyn OnlineAlgorithm>,
        epsilon: f64,
        radius: f64,
        dim: usize,
        norm: NormTag,
    ) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("r", radius)?;
        if dim == 0 {
            return Err(CoreError::param("dimension must be >= 1"));
        }
        Ok(NestedSwitch {
            adv: Tracked::new(adv),
            rob: Tracked::new(rob),
            epsilon,
            radius,
            dim,
            norm,
            switched: false,
            log: PhaseLog::default(),
        })
    }

    pub fn log(&self) -> &PhaseLog {
        &self.log
    }
}

impl OnlineAlgorithm for NestedSwitch {
    fn reset(&mut self, x0: &Vector) {
        self.adv.reset(x0);
        self.rob.reset(x0);
        self.switched = false;
        self.log = PhaseLog::default();
    }

    fn step(&mut self, t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        self.adv.advance(t, cost, body, self.norm)?;
        self.rob.advance(t, cost, body, self.norm)?;
        let threshold = self.radius * (self.dim as f64 + 2.0);
        let follow_rob = self.epsilon * self.adv.cum >= threshold + TIE_GUARD;
        if self.switched && !follow_rob {
            return Err(CoreError::InvariantViolation {
                what: "nested switch threshold un-fired; advice cost should be nondecreasing".into(),
            });
        }
        self.switched = follow_rob;
        let prev_decision = self
            .log
            .rounds
            .last()
            .map(|r| r.decision.clone())
            .unwrap_or_else(|| self.adv.prev.clone());
        let (phase, decision) = if follow_rob {
            (Phase::Rob, self.rob.decision.clone())
        } else {
            (Phase::Adv, self.adv.decision.clone())
        };
        self.log.rounds.push(MetaRound {
            t,
            phase,
            phase_index: None,
            threshold,
            potential: 0.0,
            decision: decision.clone(),
            advice: self.adv.decision.clone(),
            robust: self.rob.decision.clone(),
            prev_decision,
            prev_advice: self.adv.prev.clone(),
            prev_robust: self.rob.prev.clone(),
            adv_cum: self.adv.cum,
            rob_cum: self.rob.cum,
            adv_round: self.adv.round,
            rob_round: self.rob.round,
            aux_y: None,
            aux_z: None,
        });
        Ok(decision)
    }
}

/// (consistency, robustness) of `NestedSwitch`: (1 + ε, (1 + 1/ε) r (d + 2)).
pub fn bound_nested_switch(epsilon: f64, radius: f64, dim: usize) -> (f64, f64) {
    (1.0 + epsilon, (1.0 + 1.0 / epsilon) * radius * (dim as f64 + 2.0))
}

// ---------------------------------------------------------------------------
// Interp
// ---------------------------------------------------------------------------

/// Radial-retraction hedging. While the robust cost is a δ-fraction of the
/// advice cost the advice is followed outright; otherwise the decision takes
/// a budgeted greedy step toward the robust algorithm while staying inside a
/// shrinking ball around it:
///
/// y_t = s_{t−1} + ρ(x̃_t − s_{t−1}; ‖x_{t−1} − s_{t−1}‖)
/// z_t = s_{t−1} + ρ(y_t − s_{t−1}; max{‖y_t − s_{t−1}‖ − γ·C_Adv(t,t), 0})
/// x_t = s_t + ρ(x̃_t − s_t; ‖z_t − s_{t−1}‖)
pub struct Interp {
    adv: Tracked,
    rob: Tracked,
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
    norm: NormTag,
    prev: Vector,
    log: PhaseLog,
}

impl Interp {
    pub fn new(
        adv: Box<dyn OnlineAlgorithm>,
        rob: Box<dyn OnlineAlgorithm>,
        epsilon: f64,
        gamma: f64,
        delta: f64,
        norm: NormTag,
    ) -> Result<Self> {
        check_interp_params(epsilon, gamma, delta)?;
        Ok(Interp {
            adv: Tracked::new(adv),
            rob: Tracked::new(rob),
            epsilon,
            gamma,
            delta,
            norm,
            prev: Vector::zeros(0),
            log: PhaseLog::default(),
        })
    }

    pub fn log(&self) -> &PhaseLog {
        &self.log
    }
}

impl OnlineAlgorithm for Interp {
    fn reset(&mut self, x0: &Vector) {
        self.adv.reset(x0);
        self.rob.reset(x0);
        self.prev = x0.clone();
        self.log = PhaseLog::default();
    }

    fn step(&mut self, t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        self.adv.advance(t, cost, body, self.norm)?;
        self.rob.advance(t, cost, body, self.norm)?;
        let advice = self.adv.decision.clone();
        let s_now = self.rob.decision.clone();
        let s_prev = self.rob.prev.clone();
        let threshold = self.delta * self.adv.cum;
        let mut aux_y = None;
        let mut aux_z = None;
        let (phase, decision) = if self.rob.cum >= threshold - TIE_GUARD {
            (Phase::Adv, advice.clone())
        } else {
            let reach = self.norm.dist(&self.prev, &s_prev);
            let y = &s_prev + &radial_retraction(&(&advice - &s_prev), reach, self.norm)?;
            let shrunk =
                (self.norm.dist(&y, &s_prev) - self.gamma * self.adv.round).max(0.0);
            let z = &s_prev + &radial_retraction(&(&y - &s_prev), shrunk, self.norm)?;
            let x = &s_now
                + &radial_retraction(&(&advice - &s_now), self.norm.dist(&z, &s_prev), self.norm)?;
            aux_y = Some(y);
            aux_z = Some(z);
            (Phase::Rob, x)
        };
        let prev_decision = core::mem::replace(&mut self.prev, decision.clone());
        self.log.rounds.push(MetaRound {
            t,
            phase,
            phase_index: None,
            threshold,
            potential: self.norm.dist(&advice, &decision),
            decision: decision.clone(),
            advice,
            robust: s_now,
            prev_decision,
            prev_advice: self.adv.prev.clone(),
            prev_robust: s_prev,
            adv_cum: self.adv.cum,
            rob_cum: self.rob.cum,
            adv_round: self.adv.round,
            rob_round: self.rob.round,
            aux_y,
            aux_z,
        });
        Ok(decision)
    }
}

/// Bicompetitive bound (c, r) of `Interp`:
/// c = μ + ε, r = 1 + k/γ + (μ + ε + 1 + k/γ)/δ.
pub fn bound_interp(epsilon: f64, gamma: f64, delta: f64, mu: f64, k: f64) -> (f64, f64) {
    let c = mu + epsilon;
    let r = 1.0 + k / gamma + (mu + epsilon + 1.0 + k / gamma) / delta;
    (c, r)
}

/// The (γ, δ) minimizing `Interp`'s robustness bound subject to
/// 2γ + 2δ = ε. Falls back to γ = δ = ε/4 when the closed form leaves the
/// feasible range.
pub fn optimal_params_interp(epsilon: f64, mu: f64, k: f64) -> (f64, f64) {
    let fallback = (epsilon / 4.0, epsilon / 4.0);
    if !(epsilon > 0.0) || !(mu > 0.0) || !(k > 0.0) {
        return fallback;
    }
    let root = (k * (2.0 + epsilon) * (2.0 * k + epsilon * (1.0 + epsilon + mu))).sqrt();
    let denom = 2.0 * (1.0 - k + epsilon + mu);
    if denom <= 0.0 {
        return fallback;
    }
    let gamma = (root - k * (2.0 + epsilon)) / denom;
    let delta = epsilon / 2.0 - gamma;
    if !(gamma > 0.0) || !(delta > 0.0) || !gamma.is_finite() {
        return fallback;
    }
    (gamma, delta)
}

// ---------------------------------------------------------------------------
// BdInterp
// ---------------------------------------------------------------------------

/// Segment interpolation for D-bounded pairs. The else-branch keeps the
/// decision at the same relative position ν on the segment [s_t, x̃_t] as the
/// previous decision had on [s_{t−1}, x̃_{t−1}], then takes a budgeted greedy
/// step toward s_t:
///
/// y_t = ν·x̃_t + (1 − ν)·s_t
/// x_t = s_t + ρ(y_t − s_t; max{‖y_t − s_t‖ − γ·C_Adv(t,t), 0})
pub struct BdInterp {
    adv: Tracked,
    rob: Tracked,
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
    norm: NormTag,
    prev: Vector,
    log: PhaseLog,
}

impl BdInterp {
    pub fn new(
        adv: Box<dyn OnlineAlgorithm>,
        rob: Box<dyn OnlineAlgorithm>,
        epsilon: f64,
        gamma: f64,
        delta: f64,
        norm: NormTag,
    ) -> Result<Self> {
        check_interp_params(epsilon, gamma, delta)?;
        Ok(BdInterp {
            adv: Tracked::new(adv),
            rob: Tracked::new(rob),
            epsilon,
            gamma,
            delta,
            norm,
            prev: Vector::zeros(0),
            log: PhaseLog::default(),
        })
    }

    pub fn log(&self) -> &PhaseLog {
        &self.log
    }
}

impl OnlineAlgorithm for BdInterp {
    fn reset(&mut self, x0: &Vector) {
        self.adv.reset(x0);
        self.rob.reset(x0);
        self.prev = x0.clone();
        self.log = PhaseLog::default();
    }

    fn step(&mut self, t: usize, cost: &CostFunction, body: Option<&ConvexBody>) -> Result<Vector> {
        self.adv.advance(t, cost, body, self.norm)?;
        self.rob.advance(t, cost, body, self.norm)?;
        let advice = self.adv.decision.clone();
        let s_now = self.rob.decision.clone();
        let threshold = self.delta * self.adv.cum;
        let (phase, decision) = if self.rob.cum >= threshold - TIE_GUARD {
            (Phase::Adv, advice.clone())
        } else {
            let denom = self.norm.dist(&self.adv.prev, &self.rob.prev);
            let nu = if denom > 0.0 {
                let ratio = self.norm.dist(&self.prev, &self.rob.prev) / denom;
                // by induction the previous decision lies on the previous
                // segment; a violation indicates an implementation bug
                if ratio > 1.0 + 1e-9 {
                    return Err(CoreError::InvariantViolation {
                        what: format!("relative position nu = {ratio} exceeds 1 at round {t}"),
                    });
                }
                ratio.min(1.0)
            } else {
                0.0
            };
            let y = advice.scale(nu).axpy(1.0 - nu, &s_now);
            let shrunk = (self.norm.dist(&y, &s_now) - self.gamma * self.adv.round).max(0.0);
            let x = &s_now + &radial_retraction(&(&y - &s_now), shrunk, self.norm)?;
            (Phase::Rob, x)
        };
        let gap = self.norm.dist(&advice, &s_now);
        let potential = if gap > 0.0 { self.norm.dist(&decision, &s_now) / gap } else { 0.0 };
        let prev_decision = core::mem::replace(&mut self.prev, decision.clone());
        self.log.rounds.push(MetaRound {
            t,
            phase,
            phase_index: None,
            threshold,
            potential,
            decision: decision.clone(),
            advice,
            robust: s_now,
            prev_decision,
            prev_advice: self.adv.prev.clone(),
            prev_robust: self.rob.prev.clone(),
            adv_cum: self.adv.cum,
            rob_cum: self.rob.cum,
            adv_round: self.adv.round,
            rob_round: self.rob.round,
            aux_y: None,
            aux_z: None,
        });
        Ok(decision)
    }
}

/// Bicompetitive bound (c, r) of `BdInterp` on D-bounded pairs with
/// C_Rob ≥ 1: c = 1 + ε, r = D + D/γ + (1 + ε)/δ.
pub fn bound_bdinterp(epsilon: f64, gamma: f64, delta: f64, d_bound: f64) -> (f64, f64) {
    (1.0 + epsilon, d_bound + d_bound / gamma + (1.0 + epsilon) / delta)
}

/// The (γ, δ) minimizing `BdInterp`'s robustness bound subject to
/// 2γ + 2δ = ε; pass `None` when D is unknown to get the γ = δ = ε/4
/// fallback.
pub fn optimal_params_bdinterp(epsilon: f64, d_bound: Option<f64>) -> Result<(f64, f64)> {
    check_positive("epsilon", epsilon)?;
    match d_bound {
        None => Ok((epsilon / 4.0, epsilon / 4.0)),
        Some(d) => {
            if !(d > 0.0) {
                return Err(CoreError::param(format!(
                    "D must be > 0 (got {d}); pass None to use the fallback parameters"
                )));
            }
            let gamma = d * epsilon / (2.0 * (d + (d * (1.0 + epsilon)).sqrt()));
            Ok((gamma, epsilon / 2.0 - gamma))
        }
    }
}
