//! Scalar-field abstractions consumed by the extraction algorithms.
//!
//! Fields are piecewise defined over a rectangular grid of spans. Queries
//! are infallible: points slightly outside the domain are answered by
//! extending the boundary pieces, which lets integrators probe past the
//! boundary without special cases. Callers that need strict domain checks
//! use the model's own checked API.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{Mat2, Rect, Vec2};

/// Span coordinates: `i` along x1, `j` along x2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanIndex {
    pub i: usize,
    pub j: usize,
}

impl SpanIndex {
    pub const fn new(i: usize, j: usize) -> Self {
        SpanIndex { i, j }
    }
}

/// Physical breakpoints of the span grid (strictly increasing per axis).
#[derive(Clone, Debug, PartialEq)]
pub struct SpanGrid {
    u_breaks: Vec<f64>,
    v_breaks: Vec<f64>,
}

impl SpanGrid {
    pub fn new(u_breaks: Vec<f64>, v_breaks: Vec<f64>) -> Result<Self> {
        for b in [&u_breaks, &v_breaks] {
            if b.len() < 2 {
                return Err(Error::Dimension("span grid needs at least one span per axis".into()));
            }
            if b.windows(2).any(|w| !(w[1] > w[0])) || b.iter().any(|x| !x.is_finite()) {
                return Err(Error::Knots("span breakpoints must be finite and strictly increasing".into()));
            }
        }
        Ok(SpanGrid { u_breaks, v_breaks })
    }

    /// `nu x nv` equal spans over `domain`.
    pub fn uniform(domain: Rect, nu: usize, nv: usize) -> Self {
        let nu = nu.max(1);
        let nv = nv.max(1);
        let u = (0..=nu)
            .map(|i| crate::geom::lattice_coord(domain.min.x, domain.max.x, nu + 1, i))
            .collect();
        let v = (0..=nv)
            .map(|j| crate::geom::lattice_coord(domain.min.y, domain.max.y, nv + 1, j))
            .collect();
        SpanGrid { u_breaks: u, v_breaks: v }
    }

    #[inline]
    pub fn n_u(&self) -> usize {
        self.u_breaks.len() - 1
    }

    #[inline]
    pub fn n_v(&self) -> usize {
        self.v_breaks.len() - 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_u() * self.n_v()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn u_breaks(&self) -> &[f64] {
        &self.u_breaks
    }

    pub fn v_breaks(&self) -> &[f64] {
        &self.v_breaks
    }

    pub fn domain(&self) -> Rect {
        Rect::from_bounds(
            self.u_breaks[0],
            *self.u_breaks.last().unwrap(),
            self.v_breaks[0],
            *self.v_breaks.last().unwrap(),
        )
    }

    pub fn rect(&self, s: SpanIndex) -> Rect {
        Rect::from_bounds(
            self.u_breaks[s.i],
            self.u_breaks[s.i + 1],
            self.v_breaks[s.j],
            self.v_breaks[s.j + 1],
        )
    }

    /// Linear index, x1-major.
    #[inline]
    pub fn linear(&self, s: SpanIndex) -> usize {
        s.i * self.n_v() + s.j
    }

    #[inline]
    pub fn from_linear(&self, k: usize) -> SpanIndex {
        SpanIndex::new(k / self.n_v(), k % self.n_v())
    }

    pub fn iter(&self) -> impl Iterator<Item = SpanIndex> + '_ {
        (0..self.len()).map(move |k| self.from_linear(k))
    }

    /// Span containing `x`. A point on an interior breakpoint belongs to the
    /// lower-index span; `None` outside the domain.
    pub fn locate(&self, x: Vec2) -> Option<SpanIndex> {
        if !self.domain().contains(x) {
            return None;
        }
        Some(self.locate_clamped(x))
    }

    /// Like [`locate`](Self::locate) but clamps points outside the domain to
    /// the nearest boundary span.
    pub fn locate_clamped(&self, x: Vec2) -> SpanIndex {
        SpanIndex::new(locate_axis(&self.u_breaks, x.x), locate_axis(&self.v_breaks, x.y))
    }

    /// Smallest span side length over both axes.
    pub fn min_span_length(&self) -> f64 {
        self.u_breaks
            .windows(2)
            .chain(self.v_breaks.windows(2))
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn locate_axis(breaks: &[f64], x: f64) -> usize {
    let n = breaks.len() - 1;
    breaks[1..n].partition_point(|b| *b < x)
}

/// Partial derivatives up to third order at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
    pub fxxx: f64,
    pub fxxy: f64,
    pub fxyy: f64,
    pub fyyy: f64,
}

impl Partials {
    #[inline]
    pub fn gradient(&self) -> Vec2 {
        Vec2::new(self.fx, self.fy)
    }

    #[inline]
    pub fn hessian(&self) -> Mat2 {
        Mat2::new(self.fxx, self.fxy, self.fyy)
    }
}

/// A scalar field with value and gradient queries.
pub trait ScalarField: Sync {
    fn span_grid(&self) -> &SpanGrid;

    /// Effective per-dimension polynomial degree within a span; drives the
    /// default number of seeds.
    fn degree(&self) -> usize;

    fn value_gradient(&self, x: Vec2) -> (f64, Vec2);

    fn value(&self, x: Vec2) -> f64 {
        self.value_gradient(x).0
    }

    fn domain(&self) -> Rect {
        self.span_grid().domain()
    }

    /// `false` only if the field provably never equals `level` inside
    /// `span`.
    fn may_cross_level(&self, _span: SpanIndex, _level: f64) -> bool {
        true
    }

    /// Spans that may hold critical points, when the field can tell.
    /// `None` means every span must be searched.
    fn critical_span_candidates(&self) -> Option<Vec<SpanIndex>> {
        None
    }
}

/// A field that also provides its Hessian.
pub trait HessianField: ScalarField {
    fn value_gradient_hessian(&self, x: Vec2) -> (f64, Vec2, Mat2);
}

/// A field with partial derivatives up to third order.
pub trait JetField: HessianField {
    fn partials(&self, x: Vec2) -> Partials;

    /// Highest total derivative order that is meaningful for the field.
    fn max_derivative_order(&self) -> usize;
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn span_grid(&self) -> &SpanGrid {
        (**self).span_grid()
    }
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn value_gradient(&self, x: Vec2) -> (f64, Vec2) {
        (**self).value_gradient(x)
    }
    fn value(&self, x: Vec2) -> f64 {
        (**self).value(x)
    }
    fn may_cross_level(&self, span: SpanIndex, level: f64) -> bool {
        (**self).may_cross_level(span, level)
    }
    fn critical_span_candidates(&self) -> Option<Vec<SpanIndex>> {
        (**self).critical_span_candidates()
    }
}

impl<T: HessianField + ?Sized> HessianField for &T {
    fn value_gradient_hessian(&self, x: Vec2) -> (f64, Vec2, Mat2) {
        (**self).value_gradient_hessian(x)
    }
}

impl<T: JetField + ?Sized> JetField for &T {
    fn partials(&self, x: Vec2) -> Partials {
        (**self).partials(x)
    }
    fn max_derivative_order(&self) -> usize {
        (**self).max_derivative_order()
    }
}
