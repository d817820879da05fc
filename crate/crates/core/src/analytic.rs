//! Closed-form quadratic fields over an explicit span grid.
//!
//! Useful wherever an exact reference is needed: the extraction drivers are
//! generic over [`JetField`], so these fields run through the same code paths
//! as fitted models.

use crate::field::{HessianField, JetField, Partials, ScalarField, SpanGrid};
use crate::geom::{Mat2, Rect, Vec2};

/// `c0 + c1 x1 + c2 x2 + c3 x1² + c4 x1 x2 + c5 x2²`
#[derive(Clone, Debug)]
pub struct Quadratic {
    coeffs: [f64; 6],
    grid: SpanGrid,
}

impl Quadratic {
    pub fn new(coeffs: [f64; 6], domain: Rect, spans_u: usize, spans_v: usize) -> Self {
        Quadratic { coeffs, grid: SpanGrid::uniform(domain, spans_u, spans_v) }
    }

    pub fn with_grid(coeffs: [f64; 6], grid: SpanGrid) -> Self {
        Quadratic { coeffs, grid }
    }

    /// `x1² + x2²`
    pub fn paraboloid(domain: Rect, spans_u: usize, spans_v: usize) -> Self {
        Quadratic::new([0.0, 0.0, 0.0, 1.0, 0.0, 1.0], domain, spans_u, spans_v)
    }

    pub fn coeffs(&self) -> [f64; 6] {
        self.coeffs
    }

    /// The same polynomial multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut c = self.coeffs;
        c.iter_mut().for_each(|v| *v *= k);
        Quadratic { coeffs: c, grid: self.grid.clone() }
    }
}

impl ScalarField for Quadratic {
    fn span_grid(&self) -> &SpanGrid {
        &self.grid
    }

    fn degree(&self) -> usize {
        2
    }

    fn value_gradient(&self, x: Vec2) -> (f64, Vec2) {
        let p = self.partials(x);
        (p.f, p.gradient())
    }
}

impl HessianField for Quadratic {
    fn value_gradient_hessian(&self, x: Vec2) -> (f64, Vec2, Mat2) {
        let p = self.partials(x);
        (p.f, p.gradient(), p.hessian())
    }
}

impl JetField for Quadratic {
    fn partials(&self, x: Vec2) -> Partials {
        let [c0, c1, c2, c3, c4, c5] = self.coeffs;
        Partials {
            f: c0 + c1 * x.x + c2 * x.y + c3 * x.x * x.x + c4 * x.x * x.y + c5 * x.y * x.y,
            fx: c1 + 2.0 * c3 * x.x + c4 * x.y,
            fy: c2 + c4 * x.x + 2.0 * c5 * x.y,
            fxx: 2.0 * c3,
            fxy: c4,
            fyy: 2.0 * c5,
            ..Partials::default()
        }
    }

    fn max_derivative_order(&self) -> usize {
        usize::MAX
    }
}
