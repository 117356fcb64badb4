//! Problem instances and seeded generators.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::ConvexBody;
use crate::cost::{random_psd, CostFunction, BODY_DISTANCE_SCALE};
use crate::error::{CoreError, Result};
use crate::geometry::gaussian;
use crate::norm::NormTag;
use crate::vector::{SquareMatrix, Vector};

/// Which problem subclass an instance belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subclass {
    /// General convex function chasing.
    Cfc,
    /// Body chasing via the scaled-distance reformulation.
    Cbc,
    /// Body chasing with nested bodies.
    Ncbc,
    /// Every hitting cost is globally α-polyhedral.
    AlphaCfc,
}

impl Subclass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subclass::Cfc => "CFC",
            Subclass::Cbc => "CBC",
            Subclass::Ncbc => "NCBC",
            Subclass::AlphaCfc => "alphaCFC",
        }
    }
}

/// One chasing instance: a start point and a revealed cost per round. Body
/// instances additionally carry the bodies aligned with the costs.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub x0: Vector,
    pub costs: Vec<CostFunction>,
    pub bodies: Option<Vec<ConvexBody>>,
    pub norm: NormTag,
    pub subclass: Subclass,
    pub metadata: BTreeMap<String, String>,
}

impl Instance {
    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn body(&self, t: usize) -> Option<&ConvexBody> {
        self.bodies.as_ref().map(|b| &b[t - 1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.costs.is_empty() {
            return Err(CoreError::param("instance needs at least one round"));
        }
        if !self.x0.is_finite() {
            return Err(CoreError::param("x0 must be finite"));
        }
        for (t, c) in self.costs.iter().enumerate() {
            c.validate()?;
            if c.dim() != self.dim() {
                return Err(CoreError::DimensionMismatch { expected: self.dim(), got: c.dim() });
            }
            if self.subclass == Subclass::AlphaCfc
                && !matches!(c, CostFunction::NormPolyhedral { .. })
            {
                return Err(CoreError::param(format!(
                    "alphaCFC requires NormPolyhedral costs, round {} differs",
                    t + 1
                )));
            }
        }
        if let Some(bodies) = &self.bodies {
            if bodies.len() != self.costs.len() {
                return Err(CoreError::DimensionMismatch {
                    expected: self.costs.len(),
                    got: bodies.len(),
                });
            }
            for b in bodies {
                b.validate()?;
                if b.dim() != self.dim() {
                    return Err(CoreError::DimensionMismatch { expected: self.dim(), got: b.dim() });
                }
            }
        } else if matches!(self.subclass, Subclass::Cbc | Subclass::Ncbc) {
            return Err(CoreError::param("body-chasing instance without bodies"));
        }
        Ok(())
    }

    /// Checks K_{t+1} ⊆ K_t on `samples` random points per adjacent pair.
    /// Points are drawn from the later body by projecting perturbations of
    /// its own points; each must lie in the earlier body.
    pub fn check_nested(&self, samples: usize, seed: u64, tol: f64) -> Result<()> {
        let bodies = self
            .bodies
            .as_ref()
            .ok_or_else(|| CoreError::param("nestedness check needs bodies"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in bodies.windows(2) {
            let (outer, inner) = (&w[0], &w[1]);
            for _ in 0..samples {
                let raw = gaussian(&mut rng, self.dim()).scale(rng.random_range(0.0..3.0));
                let pt = inner.project(&raw, self.norm)?;
                if !outer.contains(&pt, self.norm, tol) {
                    return Err(CoreError::InvariantViolation {
                        what: format!("bodies not nested: point {:?} escapes", pt.coords()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Jointly rescales coordinates and cost offsets by λ > 0. Every
    /// algorithm's cost on the rescaled instance is exactly λ times its cost
    /// on the original, so competitive ratios are invariant.
    pub fn rescale(&self, lambda: f64) -> Instance {
        let scale_vec = |v: &Vector| v.scale(lambda);
        let costs = self
            .costs
            .iter()
            .map(|c| match c {
                CostFunction::Quadratic { q, center, offset } => {
                    let data: Vec<f64> = q.data().iter().map(|a| a / lambda).collect();
                    CostFunction::Quadratic {
                        q: SquareMatrix::from_rows(q.dim(), data).expect("same shape"),
                        center: scale_vec(center),
                        offset: offset * lambda,
                    }
                }
                CostFunction::NormPolyhedral { center, slope, offset, norm } => {
                    CostFunction::NormPolyhedral {
                        center: scale_vec(center),
                        slope: *slope,
                        offset: offset * lambda,
                        norm: *norm,
                    }
                }
                CostFunction::NormPower { center, coeff, exponent, norm } => CostFunction::NormPower {
                    center: scale_vec(center),
                    coeff: coeff * lambda.powf(1.0 - exponent),
                    exponent: *exponent,
                    norm: *norm,
                },
                CostFunction::BodyDistance { body, scale, norm } => CostFunction::BodyDistance {
                    body: rescale_body(body, lambda),
                    scale: *scale,
                    norm: *norm,
                },
            })
            .collect();
        Instance {
            x0: scale_vec(&self.x0),
            costs,
            bodies: self
                .bodies
                .as_ref()
                .map(|bs| bs.iter().map(|b| rescale_body(b, lambda)).collect()),
            norm: self.norm,
            subclass: self.subclass,
            metadata: self.metadata.clone(),
        }
    }
}

fn rescale_body(body: &ConvexBody, lambda: f64) -> ConvexBody {
    match body {
        ConvexBody::Ball { center, radius } => ConvexBody::Ball {
            center: center.scale(lambda),
            radius: radius * lambda,
        },
        ConvexBody::Box { lower, upper } => ConvexBody::Box {
            lower: lower.scale(lambda),
            upper: upper.scale(lambda),
        },
        ConvexBody::AffineSliceOfBox { fixed, lower, upper } => ConvexBody::AffineSliceOfBox {
            fixed: fixed.iter().map(|(i, v)| (*i, v * lambda)).collect(),
            lower: lower.scale(lambda),
            upper: upper.scale(lambda),
        },
        ConvexBody::Hyperplane { normal, offset } => ConvexBody::Hyperplane {
            normal: normal.clone(),
            offset: offset * lambda,
        },
        ConvexBody::Singleton { point } => ConvexBody::Singleton { point: point.scale(lambda) },
    }
}

/// Knobs for the random quadratic generator.
#[derive(Clone, Copy, Debug)]
pub struct QuadraticGenConfig {
    /// Eigenvalue range of the PSD matrices.
    pub eig_range: (f64, f64),
    /// Centers drawn uniformly from [-center_box, center_box]^d.
    pub center_box: f64,
    /// Constant offsets drawn uniformly from this range.
    pub offset_range: (f64, f64),
    pub norm: NormTag,
}

impl Default for QuadraticGenConfig {
    fn default() -> Self {
        QuadraticGenConfig {
            eig_range: (0.3, 2.0),
            center_box: 1.0,
            offset_range: (0.0, 0.2),
            norm: NormTag::L2,
        }
    }
}

/// T random PSD quadratics with centers in a box; deterministic per seed.
pub fn gen_random_quadratic_cfc(
    dim: usize,
    horizon: usize,
    seed: u64,
    cfg: &QuadraticGenConfig,
) -> Result<Instance> {
    if dim == 0 || horizon == 0 {
        return Err(CoreError::param("dim and horizon must be >= 1"));
    }
    let (lo, hi) = cfg.eig_range;
    if !(0.0 < lo && lo <= hi) || !(cfg.center_box > 0.0) || cfg.offset_range.0 > cfg.offset_range.1
    {
        return Err(CoreError::param("invalid quadratic generator ranges"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut costs = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let q = random_psd(dim, cfg.eig_range, &mut rng)?;
        let center = Vector::new(
            (0..dim)
                .map(|_| rng.random_range(-cfg.center_box..cfg.center_box))
                .collect(),
        );
        let offset = if cfg.offset_range.1 > cfg.offset_range.0 {
            rng.random_range(cfg.offset_range.0..cfg.offset_range.1)
        } else {
            cfg.offset_range.0
        };
        costs.push(CostFunction::Quadratic { q, center, offset });
    }
    let instance = Instance {
        x0: Vector::zeros(dim),
        costs,
        bodies: None,
        norm: cfg.norm,
        subclass: Subclass::Cfc,
        metadata: BTreeMap::from([(String::from("generator"), format!("quadratic(seed={seed})"))]),
    };
    instance.validate()?;
    Ok(instance)
}

/// T costs of slope exactly `alpha` with random centers and offsets.
pub fn gen_alpha_polyhedral(
    dim: usize,
    horizon: usize,
    alpha: f64,
    norm: NormTag,
    seed: u64,
) -> Result<Instance> {
    if !(alpha > 0.0) {
        return Err(CoreError::param("alpha must be > 0"));
    }
    if dim == 0 || horizon == 0 {
        return Err(CoreError::param("dim and horizon must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs = (0..horizon)
        .map(|_| {
            let center =
                Vector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
            CostFunction::NormPolyhedral {
                center,
                slope: alpha,
                offset: rng.random_range(0.0..0.2),
                norm,
            }
        })
        .collect();
    let instance = Instance {
        x0: Vector::zeros(dim),
        costs,
        bodies: None,
        norm,
        subclass: Subclass::AlphaCfc,
        metadata: BTreeMap::from([(
            String::from("generator"),
            format!("alpha_polyhedral(alpha={alpha},seed={seed})"),
        )]),
    };
    instance.validate()?;
    Ok(instance)
}

/// Nested shrinking bodies (balls or boxes, one family per seed) with
/// K₁ ⊆ B(y, r) and x₀ = y, paired with scale-3 distance costs.
pub fn gen_nested_bodies(dim: usize, horizon: usize, r: f64, seed: u64) -> Result<Instance> {
    if dim == 0 || horizon == 0 {
        return Err(CoreError::param("dim and horizon must be >= 1"));
    }
    if !(r > 0.0) {
        return Err(CoreError::param("radius must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let use_balls = rng.random::<bool>();
    let y = Vector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    let mut bodies = Vec::with_capacity(horizon);
    if use_balls {
        // shrink radii geometrically; drift centers by at most the radius
        // decrement so that nesting holds in every l^p norm
        let mut center = y.clone();
        let mut radius = r * 0.95;
        for t in 0..horizon {
            bodies.push(ConvexBody::Ball { center: center.clone(), radius });
            let next_radius = radius * rng.random_range(0.55..0.9);
            let slack = radius - next_radius;
            let dir = gaussian(&mut rng, dim);
            let n2 = NormTag::L2.eval(&dir).max(1e-12);
            center = center.axpy(slack * rng.random_range(0.0..0.9) / n2, &dir);
            radius = next_radius;
            if t + 2 == horizon {
                radius = radius.max(1e-3);
            }
        }
    } else {
        // box inscribed in B(y, r): half-width r/sqrt(d) in l2
        let mut half = r * 0.95 / (dim as f64).sqrt();
        let mut lower: Vec<f64> = y.coords().iter().map(|c| c - half).collect();
        let mut upper: Vec<f64> = y.coords().iter().map(|c| c + half).collect();
        for _ in 0..horizon {
            bodies.push(ConvexBody::Box {
                lower: Vector::new(lower.clone()),
                upper: Vector::new(upper.clone()),
            });
            half *= rng.random_range(0.55..0.9);
            for i in 0..dim {
                let lo = lower[i];
                let hi = upper[i];
                let width = hi - lo;
                let new_width = (2.0 * half).min(width);
                let off = rng.random_range(0.0..=(width - new_width));
                lower[i] = lo + off;
                upper[i] = lo + off + new_width;
            }
        }
    }
    let costs = bodies
        .iter()
        .map(|b| CostFunction::BodyDistance {
            body: b.clone(),
            scale: BODY_DISTANCE_SCALE,
            norm: NormTag::L2,
        })
        .collect();
    let instance = Instance {
        x0: y,
        costs,
        bodies: Some(bodies),
        norm: NormTag::L2,
        subclass: Subclass::Ncbc,
        metadata: BTreeMap::from([(
            String::from("generator"),
            format!("nested(r={r},seed={seed},balls={use_balls})"),
        )]),
    };
    instance.validate()?;
    Ok(instance)
}

/// How advice decisions are produced for a run.
#[derive(Clone, Debug, PartialEq)]
pub enum AdviceSpec {
    /// Replays the offline-optimal trajectory.
    Perfect,
    /// Optimal trajectory plus per-round noise of magnitude sigma, projected
    /// into the round body when bodies are present.
    Noisy { sigma: f64, seed: u64 },
    /// Stays at one point forever.
    Constant(Vector),
    /// Replays a trajectory produced by the adversarial builder.
    Adversarial(Vec<Vector>),
    /// Replays an explicit trajectory.
    Replay(Vec<Vector>),
}

impl AdviceSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AdviceSpec::Perfect => "perfect",
            AdviceSpec::Noisy { .. } => "noisy",
            AdviceSpec::Constant(_) => "constant",
            AdviceSpec::Adversarial(_) => "adversarial",
            AdviceSpec::Replay(_) => "replay",
        }
    }

    /// Rescales the advice jointly with its instance.
    pub fn rescale(&self, lambda: f64) -> AdviceSpec {
        match self {
            AdviceSpec::Perfect => AdviceSpec::Perfect,
            AdviceSpec::Noisy { sigma, seed } => {
                AdviceSpec::Noisy { sigma: sigma * lambda, seed: *seed }
            }
            AdviceSpec::Constant(p) => AdviceSpec::Constant(p.scale(lambda)),
            AdviceSpec::Adversarial(path) => {
                AdviceSpec::Adversarial(path.iter().map(|p| p.scale(lambda)).collect())
            }
            AdviceSpec::Replay(path) => {
                AdviceSpec::Replay(path.iter().map(|p| p.scale(lambda)).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_generator_deterministic_and_shaped() {
        let cfg = QuadraticGenConfig::default();
        let a = gen_random_quadratic_cfc(8, 50, 1, &cfg).unwrap();
        let b = gen_random_quadratic_cfc(8, 50, 1, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.horizon(), 50);
        assert_eq!(a.dim(), 8);
        let c = gen_random_quadratic_cfc(8, 50, 2, &cfg).unwrap();
        assert_ne!(a, c);
        // nonnegative costs at random points
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cost in &a.costs {
            for _ in 0..20 {
                let x = gaussian(&mut rng, 8).scale(2.0);
                assert!(cost.eval(&x).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn alpha_generator_slope_witness() {
        let inst = gen_alpha_polyhedral(1, 5, 0.5, NormTag::L2, 42).unwrap();
        assert_eq!(inst.subclass, Subclass::AlphaCfc);
        for c in &inst.costs {
            let w = crate::cost::alpha_polyhedral_witness(c, NormTag::L2, 500, 9).unwrap();
            assert!(w >= 0.5 - 1e-9);
        }
        assert_eq!(inst, gen_alpha_polyhedral(1, 5, 0.5, NormTag::L2, 42).unwrap());
        assert!(gen_alpha_polyhedral(1, 5, 0.0, NormTag::L2, 42).is_err());
    }

    #[test]
    fn nested_generator_nested_and_contains_x0() {
        for seed in [0u64, 1, 2, 3] {
            let inst = gen_nested_bodies(2, 10, 1.0, seed).unwrap();
            inst.check_nested(200, 7, 1e-9).unwrap();
            // x0 sits at the covering ball center, hence inside B(y, r)
            let ball = ConvexBody::Ball { center: inst.x0.clone(), radius: 1.0 };
            match inst.body(1).unwrap() {
                ConvexBody::Ball { center, radius } => {
                    assert!(NormTag::L2.dist(center, &inst.x0) + radius <= 1.0 + 1e-9);
                }
                ConvexBody::Box { lower, upper } => {
                    for corner in 0..(1 << 2) {
                        let pt = Vector::new(
                            (0..2)
                                .map(|i| if corner >> i & 1 == 1 { upper[i] } else { lower[i] })
                                .collect(),
                        );
                        assert!(ball.contains(&pt, NormTag::L2, 1e-9));
                    }
                }
                other => panic!("unexpected body {other:?}"),
            }
            assert_eq!(inst, gen_nested_bodies(2, 10, 1.0, seed).unwrap());
        }
    }

    #[test]
    fn rescaling_scales_costs_linearly() {
        let cfg = QuadraticGenConfig::default();
        let inst = gen_random_quadratic_cfc(3, 10, 5, &cfg).unwrap();
        let lambda = 2.5;
        let scaled = inst.rescale(lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 0..inst.horizon() {
            for _ in 0..10 {
                let x = gaussian(&mut rng, 3);
                let orig = inst.costs[t].eval(&x).unwrap();
                let new = scaled.costs[t].eval(&x.scale(lambda)).unwrap();
                assert!((new - lambda * orig).abs() <= 1e-9 * (1.0 + orig.abs()));
            }
        }
        let nested = gen_nested_bodies(2, 6, 1.0, 3).unwrap();
        let nested_scaled = nested.rescale(lambda);
        let x = Vector::new(vec![3.0, -2.0]);
        for t in 0..nested.horizon() {
            let orig = nested.costs[t].eval(&x).unwrap();
            let new = nested_scaled.costs[t].eval(&x.scale(lambda)).unwrap();
            assert!((new - lambda * orig).abs() <= 1e-9 * (1.0 + orig.abs()));
        }
    }
}
