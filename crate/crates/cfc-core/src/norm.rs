//! ℓᵖ norms, the radial retraction, and Birkhoff-James orthogonality.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::vector::Vector;

/// Designates the ℓᵖ norm measuring movement and distances, p ∈ [1, ∞].
///
/// ∞ is encoded as `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormTag {
    p: f64,
}

impl NormTag {
    pub const L1: NormTag = NormTag { p: 1.0 };
    pub const L2: NormTag = NormTag { p: 2.0 };
    pub const LINF: NormTag = NormTag { p: f64::INFINITY };

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(CoreError::param("norm exponent p must satisfy p >= 1"));
        }
        Ok(NormTag { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_inf(&self) -> bool {
        self.p.is_infinite()
    }

    pub fn is_l2(&self) -> bool {
        self.p == 2.0
    }

    /// Hölder conjugate exponent q with 1/p + 1/q = 1.
    pub fn dual(&self) -> NormTag {
        if self.p == 1.0 {
            NormTag::LINF
        } else if self.is_inf() {
            NormTag::L1
        } else {
            NormTag { p: self.p / (self.p - 1.0) }
        }
    }

    /// ‖x‖ₚ. Scales by the largest magnitude first so that large exponents
    /// do not overflow.
    pub fn eval(&self, x: &Vector) -> f64 {
        let c = x.coords();
        if c.is_empty() {
            return 0.0;
        }
        if self.is_inf() {
            return c.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        if self.p == 1.0 {
            return c.iter().map(|v| v.abs()).sum();
        }
        if self.p == 2.0 {
            return c.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let m = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        let s: f64 = c.iter().map(|v| (v.abs() / m).powf(self.p)).sum();
        m * s.powf(1.0 / self.p)
    }

    pub fn dist(&self, a: &Vector, b: &Vector) -> f64 {
        self.eval(&(a - b))
    }

    /// A subgradient of ‖·‖ₚ at `v`; the zero vector at v = 0.
    ///
    /// For p ∈ (1, ∞) this is the gradient; for p = 1 the sign vector; for
    /// p = ∞ a single signed unit coordinate at the largest magnitude.
    pub fn subgradient(&self, v: &Vector) -> Vector {
        let n = self.eval(v);
        if n == 0.0 {
            return Vector::zeros(v.dim());
        }
        if self.p == 1.0 {
            return Vector::new(
                v.coords()
                    .iter()
                    .map(|c| if *c > 0.0 { 1.0 } else if *c < 0.0 { -1.0 } else { 0.0 })
                    .collect(),
            );
        }
        if self.is_inf() {
            let mut arg = 0;
            let mut best = 0.0;
            for (i, c) in v.coords().iter().enumerate() {
                if c.abs() > best {
                    best = c.abs();
                    arg = i;
                }
            }
            let mut g = vec![0.0; v.dim()];
            g[arg] = v[arg].signum();
            return Vector::new(g);
        }
        // d/dv_i ‖v‖_p = sign(v_i) (|v_i|/‖v‖)^(p-1)
        Vector::new(
            v.coords()
                .iter()
                .map(|c| c.signum() * (c.abs() / n).powf(self.p - 1.0))
                .collect(),
        )
    }
}

/// Metric projection onto the closed ball B(0, r): identity inside the ball,
/// rescaling onto the boundary outside. ρ(0; r) = 0 for every r, including
/// r = 0.
pub fn radial_retraction(x: &Vector, r: f64, tag: NormTag) -> Result<Vector> {
    if r.is_nan() || r < 0.0 {
        return Err(CoreError::param("retraction radius must be >= 0"));
    }
    let n = tag.eval(x);
    if n <= r {
        Ok(x.clone())
    } else {
        Ok(x.scale(r / n))
    }
}

/// Decides ‖x‖ ≤ ‖x + λy‖ over a finite symmetric logarithmic grid of λ
/// values plus λ = 0, with absolute tolerance 1e-12.
///
/// The grid spans ±10³·‖x‖/‖y‖ down to nine orders of magnitude below, so it
/// probes both the large-λ asymptote and the local behaviour near zero. This
/// is a sampled check of the quantified definition, adequate for randomized
/// sanity tests; no algorithm depends on it.
pub fn bj_orthogonal(x: &Vector, y: &Vector, tag: NormTag, lambda_grid: usize) -> bool {
    let lambda_grid = lambda_grid.max(3);
    let nx = tag.eval(x);
    let ny = tag.eval(y);
    let span = 1e3 * nx / ny.max(1e-300);
    let mut lambdas: Vec<f64> = vec![0.0];
    let half = lambda_grid.div_ceil(2);
    for k in 0..half {
        let frac = if half == 1 { 0.0 } else { k as f64 / (half - 1) as f64 };
        // magnitudes from span down to span * 1e-9
        let mag = span * 10f64.powf(-9.0 * frac);
        lambdas.push(mag);
        lambdas.push(-mag);
    }
    lambdas
        .iter()
        .all(|&l| nx <= tag.eval(&x.axpy(l, y)) + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    #[test]
    fn norm_eval_basics() {
        assert_eq!(NormTag::L2.eval(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(NormTag::L1.eval(&v(&[3.0, 4.0])), 7.0);
        assert_eq!(NormTag::LINF.eval(&v(&[3.0, -4.0])), 4.0);
        let p3 = NormTag::new(3.0).unwrap();
        assert_relative_eq!(p3.eval(&v(&[1.0, 1.0])), 2f64.powf(1.0 / 3.0), max_relative = 1e-14);
    }

    #[test]
    fn norm_rejects_bad_p() {
        assert!(NormTag::new(0.5).is_err());
        assert!(NormTag::new(f64::NAN).is_err());
        assert!(NormTag::new(f64::INFINITY).unwrap().is_inf());
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(NormTag::L1.dual(), NormTag::LINF);
        assert_eq!(NormTag::LINF.dual(), NormTag::L1);
        assert_eq!(NormTag::L2.dual(), NormTag::L2);
        let p = NormTag::new(3.0).unwrap();
        assert_relative_eq!(p.dual().p(), 1.5);
    }

    #[test]
    fn retraction_cases() {
        let x = v(&[3.0, 4.0]);
        assert_eq!(radial_retraction(&x, 5.0, NormTag::L2).unwrap(), x);
        let r = radial_retraction(&x, 1.0, NormTag::L2).unwrap();
        assert_relative_eq!(r[0], 0.6, max_relative = 1e-15);
        assert_relative_eq!(r[1], 0.8, max_relative = 1e-15);
        let zero = v(&[0.0, 0.0]);
        assert_eq!(radial_retraction(&zero, 2.0, NormTag::L1).unwrap(), zero);
        assert_eq!(radial_retraction(&zero, 0.0, NormTag::L1).unwrap(), zero);
        assert!(radial_retraction(&x, -1.0, NormTag::L2).is_err());
    }

    #[test]
    fn bj_orthogonality_examples() {
        assert!(bj_orthogonal(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), NormTag::L2, 65));
        assert!(!bj_orthogonal(&v(&[1.0, 0.0]), &v(&[1.0, 0.0]), NormTag::L2, 65));
        assert!(bj_orthogonal(&v(&[1.0, 1.0]), &v(&[1.0, -1.0]), NormTag::L1, 65));
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in proptest::collection::vec(-1e3f64..1e3, 1..6),
                               b in proptest::collection::vec(-1e3f64..1e3, 1..6),
                               p in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]) {
            let n = a.len().min(b.len());
            let (a, b) = (v(&a[..n]), v(&b[..n]));
            let tag = NormTag::new(p).unwrap();
            let lhs = tag.eval(&(&a + &b));
            let rhs = tag.eval(&a) + tag.eval(&b);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn retraction_never_exceeds_radius(c in proptest::collection::vec(-50f64..50.0, 1..5),
                                           r in 0f64..10.0,
                                           p in prop_oneof![Just(1.0), Just(2.0), Just(4.0), Just(f64::INFINITY)]) {
            let tag = NormTag::new(p).unwrap();
            let x = v(&c);
            let y = radial_retraction(&x, r, tag).unwrap();
            prop_assert!(tag.eval(&y) <= r + 1e-12);
            if tag.eval(&x) <= r {
                prop_assert_eq!(y, x);
            }
        }

        #[test]
        fn norm_subgradient_supports_norm(c in proptest::collection::vec(-10f64..10.0, 1..5),
                                          p in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]) {
            let tag = NormTag::new(p).unwrap();
            let x = v(&c);
            let g = tag.subgradient(&x);
            // Euler identity <g, x> = ‖x‖ and dual-norm feasibility ‖g‖_q <= 1.
            prop_assert!((g.dot(&x) - tag.eval(&x)).abs() <= 1e-9 * (1.0 + tag.eval(&x)));
            prop_assert!(tag.dual().eval(&g) <= 1.0 + 1e-9);
        }
    }
}
