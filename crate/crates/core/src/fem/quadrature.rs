//! Symmetric quadrature rules on the reference triangle.
//!
//! Points are barycentric; weights sum to one, so an integral over a triangle
//! of area `A` is `A · Σ wᵢ f(xᵢ)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f(λ)` over the reference triangle (area 1/2).
    pub fn integrate_reference(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        0.5 * self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum::<f64>()
    }
}

struct RuleBuilder {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl RuleBuilder {
    fn new() -> Self {
        RuleBuilder {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    fn centroid(mut self, w: f64) -> Self {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(w);
        self
    }

    /// The three permutations of (a, b, b) with `a = 1 - 2b`.
    fn orbit3(mut self, b: f64, w: f64) -> Self {
        let a = 1.0 - 2.0 * b;
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
        self
    }

    /// The six permutations of (a, b, c) with `c = 1 - a - b`.
    fn orbit6(mut self, a: f64, b: f64, w: f64) -> Self {
        let c = 1.0 - a - b;
        for p in [
            [a, b, c],
            [a, c, b],
            [b, a, c],
            [b, c, a],
            [c, a, b],
            [c, b, a],
        ] {
            self.points.push(p);
            self.weights.push(w);
        }
        self
    }

    fn finish(self, degree: usize) -> QuadratureRule {
        QuadratureRule {
            points: self.points,
            weights: self.weights,
            degree,
        }
    }
}

/// Returns a rule exact for polynomials up to `degree` (1..=6).
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let rule = match degree {
        1 => RuleBuilder::new().centroid(1.0).finish(1),
        2 => RuleBuilder::new().orbit3(1.0 / 6.0, 1.0 / 3.0).finish(2),
        // Dunavant 6-point rule (degree 4) also serves degree 3 with positive weights.
        3 | 4 => RuleBuilder::new()
            .orbit3(0.445_948_490_915_965, 0.223_381_589_678_011)
            .orbit3(0.091_576_213_509_771, 0.109_951_743_655_322)
            .finish(4),
        5 => {
            let s = 15f64.sqrt();
            RuleBuilder::new()
                .centroid(9.0 / 40.0)
                .orbit3((6.0 + s) / 21.0, (155.0 + s) / 1200.0)
                .orbit3((6.0 - s) / 21.0, (155.0 - s) / 1200.0)
                .finish(5)
        }
        6 => RuleBuilder::new()
            .orbit3(0.249_286_745_170_910, 0.116_786_275_726_379)
            .orbit3(0.063_089_014_491_502, 0.050_844_906_370_207)
            .orbit6(
                0.053_145_049_844_817,
                0.310_352_451_033_784,
                0.082_851_075_618_374,
            )
            .finish(6),
        d => return Err(Error::QuadratureDegree(d)),
    };
    Ok(rule)
}
