//! Sampled verification of the geometric inequalities behind the bounds.
//!
//! Each check draws random configurations and records the worst relative
//! violation margin max(0, lhs − rhs) / scale. The inequalities are theorems,
//! so margins beyond floating-point noise indicate an implementation bug;
//! the margins involving μ(X) use the upper bound from
//! [`crate::geometry::rectangular_constant_upper`], which only weakens the
//! tested statement.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algorithm::{run, ConstantAdvice, GreedyMinimizer};
use crate::error::Result;
use crate::geometry::{estimate_lipschitz_empirical, gaussian, SpaceConstants};
use crate::instance::{gen_random_quadratic_cfc, QuadraticGenConfig};
use crate::meta::{Interp, Phase};
use crate::norm::{radial_retraction, NormTag};
use crate::vector::Vector;

/// Default pass tolerance on relative violation margins.
pub const LEMMA_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub name: String,
    pub p: f64,
    pub dim: usize,
    pub samples: usize,
    pub max_margin: f64,
    pub tolerance: f64,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.max_margin <= self.tolerance
    }
}

fn margin(lhs: f64, rhs: f64) -> f64 {
    let scale = 1.0_f64.max(lhs.abs()).max(rhs.abs());
    ((lhs - rhs) / scale).max(0.0)
}

fn sphere_point(rng: &mut ChaCha8Rng, dim: usize, tag: NormTag, radius: f64) -> Vector {
    loop {
        let g = gaussian(rng, dim);
        let n = tag.eval(&g);
        if n > 1e-12 {
            return g.scale(radius / n);
        }
    }
}

fn loose_point(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    let scale = 10f64.powf(rng.random_range(-1.0..0.7));
    gaussian(rng, dim).scale(scale)
}

/// Retraction range bound and inside-ball identity.
pub fn check_retraction_bound(tag: NormTag, dim: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = loose_point(&mut rng, dim);
        let r = rng.random_range(0.0..2.0);
        let rx = radial_retraction(&x, r, tag)?;
        worst = worst.max(margin(tag.eval(&rx), r + 1e-12));
        if tag.eval(&x) <= r && rx != x {
            worst = worst.max(1.0);
        }
    }
    Ok(worst)
}

/// Sphere-projection optimality: ŷ = x + r(y−x)/‖y−x‖ is a nearest point of
/// ∂B(x, r) to y.
pub fn check_sphere_projection(tag: NormTag, dim: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = loose_point(&mut rng, dim);
        let y = loose_point(&mut rng, dim);
        if tag.dist(&x, &y) <= 1e-12 {
            continue;
        }
        let r = rng.random_range(0.0..3.0);
        let gap = &y - &x;
        let y_hat = x.axpy(r / tag.eval(&gap), &gap);
        let w = &x + &sphere_point(&mut rng, dim, tag, r);
        worst = worst.max(margin(tag.dist(&y, &y_hat), tag.dist(&y, &w) + 1e-9));
    }
    Ok(worst)
}

/// Retractions of one point onto same-radius balls with different centers
/// move apart at most as far as the centers: ‖x − y‖ ≤ ‖b − c‖ for
/// x = b + ρ(a−b; r), y = c + ρ(a−c; r).
pub fn check_shared_apex_retractions(
    tag: NormTag,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let a = loose_point(&mut rng, dim);
        let b = loose_point(&mut rng, dim);
        let c = loose_point(&mut rng, dim);
        let r = rng.random_range(0.0..2.5);
        let x = &b + &radial_retraction(&(&a - &b), r, tag)?;
        let y = &c + &radial_retraction(&(&a - &c), r, tag)?;
        worst = worst.max(margin(tag.dist(&x, &y), tag.dist(&b, &c) + 1e-9));
    }
    Ok(worst)
}

/// Rectangular-constant bound on sphere paths:
/// ‖y − x‖ + (t − 1)‖y‖ ≤ μ‖ty − x‖ for x, y on ∂B(0, r), t > 1.
pub fn check_sphere_rectangular(tag: NormTag, dim: usize, samples: usize, seed: u64) -> Result<f64> {
    let mu = SpaceConstants::for_norm(tag).mu_upper;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let r = rng.random_range(0.05..2.0);
        let x = sphere_point(&mut rng, dim, tag, r);
        let y = sphere_point(&mut rng, dim, tag, r);
        let t = 1.0 + 10f64.powf(rng.random_range(-3.0..1.5));
        let lhs = tag.dist(&y, &x) + (t - 1.0) * tag.eval(&y);
        let rhs = mu * tag.eval(&(&y.scale(t) - &x)) + 1e-9;
        worst = worst.max(margin(lhs, rhs));
    }
    Ok(worst)
}

/// Ball-projection chain: with x̂, ŷ the retractions of x, y onto B(w, r) and
/// x outside the open ball, ‖ŷ − x̂‖ + ‖y − ŷ‖ ≤ μ‖y − x‖ + ‖x − x̂‖.
pub fn check_ball_projection_chain(
    tag: NormTag,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mu = SpaceConstants::for_norm(tag).mu_upper;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let w = loose_point(&mut rng, dim);
        let y = &w + &loose_point(&mut rng, dim);
        let r = rng.random_range(0.0..1.5);
        // x at norm >= r from w
        let reach = r * (1.0 + rng.random_range(0.0..2.0)) + 1e-9;
        let x = &w + &sphere_point(&mut rng, dim, tag, reach);
        let x_hat = &w + &radial_retraction(&(&x - &w), r, tag)?;
        let y_hat = &w + &radial_retraction(&(&y - &w), r, tag)?;
        let lhs = tag.dist(&y_hat, &x_hat) + tag.dist(&y, &y_hat);
        let rhs = mu * tag.dist(&y, &x) + tag.dist(&x, &x_hat) + 1e-9;
        worst = worst.max(margin(lhs, rhs));
    }
    Ok(worst)
}

/// Empirical retraction Lipschitz estimate against min(2, μ-upper).
pub fn check_lipschitz_vs_mu(tag: NormTag, dim: usize, samples: usize, seed: u64) -> f64 {
    let consts = SpaceConstants::for_norm(tag);
    let est = estimate_lipschitz_empirical(tag, dim, samples, seed);
    margin(est, consts.mu_upper.min(2.0) + 1e-9)
}

/// Per-round inequalities of the interpolation algorithm on a recorded run:
/// ‖x_t − z_t‖ ≤ ‖s_t − s_{t−1}‖ and ‖y_t − x_{t−1}‖ ≤ k‖x̃_t − x̃_{t−1}‖
/// over the else-branch rounds.
pub fn check_interp_round_inequalities(tag: NormTag, dim: usize, seed: u64) -> Result<(f64, f64)> {
    let consts = SpaceConstants::for_norm(tag);
    let cfg = QuadraticGenConfig { norm: tag, ..QuadraticGenConfig::default() };
    let instance = gen_random_quadratic_cfc(dim, 30, seed, &cfg)?;
    // a parked far-away advice keeps the branch in its else arm
    let far = Vector::new(vec![3.0; dim]);
    let advice = Box::new(ConstantAdvice::new(far, tag));
    let rob = Box::new(GreedyMinimizer);
    let mut meta = Interp::new(advice, rob, 1.0, 0.25, 0.25, tag)?;
    run(&mut meta, &instance)?;
    let mut worst_xz: f64 = 0.0;
    let mut worst_lip: f64 = 0.0;
    let mut else_rounds = 0;
    for r in &meta.log().rounds {
        if r.phase != Phase::Rob {
            continue;
        }
        else_rounds += 1;
        let z = r.aux_z.as_ref().expect("else branch records z");
        let y = r.aux_y.as_ref().expect("else branch records y");
        worst_xz = worst_xz.max(margin(
            tag.dist(&r.decision, z),
            tag.dist(&r.robust, &r.prev_robust) + 1e-9,
        ));
        worst_lip = worst_lip.max(margin(
            tag.dist(y, &r.prev_decision),
            consts.k_upper * tag.dist(&r.advice, &r.prev_advice) + 1e-9,
        ));
    }
    debug_assert!(else_rounds > 0, "fixture never exercised the else branch");
    Ok((worst_xz, worst_lip))
}

/// Runs every check for one norm and dimension.
pub fn verify_lemmas(tag: NormTag, dim: usize, samples: usize, seed: u64) -> Result<Vec<LemmaReport>> {
    let mk = |name: &str, max_margin: f64, samples: usize| LemmaReport {
        name: String::from(name),
        p: tag.p(),
        dim,
        samples,
        max_margin,
        tolerance: LEMMA_TOLERANCE,
    };
    let mut reports = vec![
        mk("retraction-bound", check_retraction_bound(tag, dim, samples, seed)?, samples),
        mk("sphere-projection", check_sphere_projection(tag, dim, samples, seed ^ 1)?, samples),
        mk(
            "shared-apex-retractions",
            check_shared_apex_retractions(tag, dim, samples, seed ^ 2)?,
            samples,
        ),
        mk("sphere-rectangular", check_sphere_rectangular(tag, dim, samples, seed ^ 3)?, samples),
        mk(
            "ball-projection-chain",
            check_ball_projection_chain(tag, dim, samples, seed ^ 4)?,
            samples,
        ),
        mk("lipschitz-vs-mu", check_lipschitz_vs_mu(tag, dim, samples, seed ^ 5), samples),
    ];
    let (xz, lip) = check_interp_round_inequalities(tag, dim, seed ^ 6)?;
    reports.push(mk("interp-step-vs-robust-move", xz, 30));
    reports.push(mk("interp-step-lipschitz", lip, 30));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_lemmas_pass_small_suite() {
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let tag = NormTag::new(p).unwrap();
            for dim in [2usize, 4] {
                let reports = verify_lemmas(tag, dim, 4_000, 99).unwrap();
                for r in &reports {
                    assert!(
                        r.pass(),
                        "lemma {} violated at p={p} dim={dim}: margin {}",
                        r.name,
                        r.max_margin
                    );
                }
            }
        }
    }

    #[test]
    fn lemma_suite_deterministic() {
        let a = verify_lemmas(NormTag::L2, 3, 2_000, 5).unwrap();
        let b = verify_lemmas(NormTag::L2, 3, 2_000, 5).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.max_margin, y.max_margin);
        }
    }
}
