//! Convex hitting-cost families.
//!
//! Four families cover the problem subclasses exercised here: positive
//! semidefinite quadratics, α-polyhedral scaled norms, norm powers (the
//! well-centered family at κ = 1), and scaled distances to a convex body
//! (the real-valued reformulation of body chasing, default scale 3).

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::ConvexBody;
use crate::error::{CoreError, Result};
use crate::geometry::gaussian;
use crate::norm::NormTag;
use crate::vector::{SquareMatrix, Vector};

#[derive(Clone, Debug, PartialEq)]
pub enum CostFunction {
    /// f(x) = (x − c)ᵀ Q (x − c) + m with Q symmetric PSD, m ≥ 0.
    Quadratic { q: SquareMatrix, center: Vector, offset: f64 },
    /// f(x) = m + α‖x − x*‖; globally α-polyhedral by construction.
    NormPolyhedral { center: Vector, slope: f64, offset: f64, norm: NormTag },
    /// f(x) = (a/2)‖x − x*‖^γ with a > 0, γ ≥ 1.
    NormPower { center: Vector, coeff: f64, exponent: f64, norm: NormTag },
    /// f(x) = s · d(x, K); the body-chasing reformulation uses s = 3.
    BodyDistance { body: ConvexBody, scale: f64, norm: NormTag },
}

/// Default scale of the distance reformulation of body chasing.
pub const BODY_DISTANCE_SCALE: f64 = 3.0;

impl CostFunction {
    pub fn dim(&self) -> usize {
        match self {
            CostFunction::Quadratic { center, .. } => center.dim(),
            CostFunction::NormPolyhedral { center, .. } => center.dim(),
            CostFunction::NormPower { center, .. } => center.dim(),
            CostFunction::BodyDistance { body, .. } => body.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::Quadratic { q, center, offset } => {
                if q.dim() != center.dim() {
                    return Err(CoreError::DimensionMismatch { expected: center.dim(), got: q.dim() });
                }
                if !q.is_symmetric(1e-9) {
                    return Err(CoreError::param("quadratic matrix must be symmetric"));
                }
                if !(*offset >= 0.0) {
                    return Err(CoreError::param("quadratic offset must be >= 0"));
                }
            }
            CostFunction::NormPolyhedral { slope, offset, .. } => {
                if !(*slope > 0.0) {
                    return Err(CoreError::param("polyhedral slope must be > 0"));
                }
                if !(*offset >= 0.0) {
                    return Err(CoreError::param("polyhedral offset must be >= 0"));
                }
            }
            CostFunction::NormPower { coeff, exponent, .. } => {
                if !(*coeff > 0.0) {
                    return Err(CoreError::param("norm power coefficient must be > 0"));
                }
                if !(*exponent >= 1.0) {
                    return Err(CoreError::param("norm power exponent must be >= 1"));
                }
            }
            CostFunction::BodyDistance { body, scale, .. } => {
                body.validate()?;
                if !(*scale > 0.0) {
                    return Err(CoreError::param("body distance scale must be > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(match self {
            CostFunction::Quadratic { q, center, offset } => q.quad_form(&(x - center)) + offset,
            CostFunction::NormPolyhedral { center, slope, offset, norm } => {
                offset + slope * norm.dist(x, center)
            }
            CostFunction::NormPower { center, coeff, exponent, norm } => {
                coeff / 2.0 * norm.dist(x, center).powf(*exponent)
            }
            CostFunction::BodyDistance { body, scale, norm } => scale * body.distance(x, *norm)?,
        })
    }

    /// The minimizer, where one point represents it. `BodyDistance` has a
    /// set-valued argmin; use [`CostFunction::minimizer_or_project`].
    pub fn minimizer(&self) -> Result<Vector> {
        match self {
            CostFunction::Quadratic { center, .. } => Ok(center.clone()),
            CostFunction::NormPolyhedral { center, .. } => Ok(center.clone()),
            CostFunction::NormPower { center, .. } => Ok(center.clone()),
            CostFunction::BodyDistance { .. } => Err(CoreError::UnsupportedCost {
                what: "body distance has a set-valued minimizer; supply a reference point".into(),
            }),
        }
    }

    /// Like [`CostFunction::minimizer`], but resolves the `BodyDistance`
    /// case by projecting the supplied reference point onto the body.
    pub fn minimizer_or_project(&self, reference: &Vector) -> Result<Vector> {
        match self {
            CostFunction::BodyDistance { body, norm, .. } => body.project(reference, *norm),
            _ => self.minimizer(),
        }
    }

    /// A member of ∂f(x). At kinks (norm centers, body interiors) the zero
    /// vector is returned, which is valid there.
    pub fn subgradient(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(match self {
            CostFunction::Quadratic { q, center, .. } => q.matvec(&(x - center)).scale(2.0),
            CostFunction::NormPolyhedral { center, slope, norm, .. } => {
                norm.subgradient(&(x - center)).scale(*slope)
            }
            CostFunction::NormPower { center, coeff, exponent, norm } => {
                let v = x - center;
                let n = norm.eval(&v);
                if n == 0.0 {
                    Vector::zeros(x.dim())
                } else {
                    norm.subgradient(&v).scale(coeff / 2.0 * exponent * n.powf(exponent - 1.0))
                }
            }
            CostFunction::BodyDistance { body, scale, norm } => {
                distance_subgradient(body, x, *norm)?.scale(*scale)
            }
        })
    }
}

/// A subgradient of d(·, K) at `x`: zero inside the body; outside, the norm
/// subgradient at x − Π(x) for separable bodies, and the dual-normalized
/// normal for hyperplanes (the exact gradient of |<n, x> − b| / ‖n‖_q).
fn distance_subgradient(body: &ConvexBody, x: &Vector, tag: NormTag) -> Result<Vector> {
    if let ConvexBody::Hyperplane { normal, offset } = body {
        let residual = normal.dot(x) - offset;
        if residual == 0.0 {
            return Ok(Vector::zeros(x.dim()));
        }
        let nq = tag.dual().eval(normal);
        return Ok(normal.scale(residual.signum() / nq));
    }
    let proj = body.project(x, tag)?;
    let gap = x - &proj;
    if tag.eval(&gap) == 0.0 {
        return Ok(Vector::zeros(x.dim()));
    }
    Ok(tag.subgradient(&gap))
}

/// Empirical upper estimate of the largest valid α for `f`: the minimum of
/// (f(x) − f(x*)) / ‖x − x*‖ over sampled x ≠ x*, with radii spread over
/// several orders of magnitude around the minimizer.
pub fn alpha_polyhedral_witness(
    f: &CostFunction,
    tag: NormTag,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let x_star = f.minimizer()?;
    let f_star = f.eval(&x_star)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples.max(1) {
        let dir = gaussian(&mut rng, x_star.dim());
        let n = tag.eval(&dir);
        if n == 0.0 {
            continue;
        }
        let radius = 10f64.powf(rng.random_range(-3.0..0.0));
        let x = x_star.axpy(radius / n, &dir);
        let gap = tag.dist(&x, &x_star);
        if gap == 0.0 {
            continue;
        }
        let ratio = (f.eval(&x)? - f_star) / gap;
        if ratio < best {
            best = ratio;
        }
    }
    Ok(best)
}

/// Generates a random symmetric PSD matrix with eigenvalues in the given
/// range, via a Gram-Schmidt orthonormal basis of Gaussian vectors.
pub fn random_psd(dim: usize, eig_range: (f64, f64), rng: &mut impl Rng) -> Result<SquareMatrix> {
    let (lo, hi) = eig_range;
    if !(0.0 <= lo && lo <= hi) {
        return Err(CoreError::param(format!("eigenvalue range [{lo}, {hi}] invalid")));
    }
    // orthonormal basis; re-orthogonalize once for numerical hygiene
    let mut basis: alloc::vec::Vec<Vector> = alloc::vec::Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = gaussian(rng, dim);
        for _ in 0..2 {
            for b in &basis {
                let c = v.dot(b);
                v = v.axpy(-c, b);
            }
        }
        let n = NormTag::L2.eval(&v);
        if n < 1e-8 {
            continue;
        }
        basis.push(v.scale(1.0 / n));
    }
    let mut data = alloc::vec![0.0; dim * dim];
    for b in basis.iter() {
        let eig = if hi > lo { rng.random_range(lo..hi) } else { lo };
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] += eig * b[i] * b[j];
            }
        }
    }
    // symmetrize away rounding noise
    for i in 0..dim {
        for j in (i + 1)..dim {
            let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
            data[i * dim + j] = avg;
            data[j * dim + i] = avg;
        }
    }
    Ok(SquareMatrix::from_rows(dim, data).expect("square by construction"))
}
