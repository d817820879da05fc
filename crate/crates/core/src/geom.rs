//! Small 2D geometry types shared by every module.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::math;

/// A point or vector in the physical domain. `x` is the first coordinate
/// (x1), `y` the second (x2).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    #[inline]
    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic comparison, used wherever output order must not depend
    /// on scheduling.
    pub fn lex_cmp(&self, other: &Vec2) -> core::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Symmetric 2x2 matrix (Hessians).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Mat2 {
    #[inline]
    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Mat2 { xx, xy, yy }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// `vᵀ M v`
    #[inline]
    pub fn quad_form(&self, v: Vec2) -> f64 {
        v.dot(self.mul_vec(v))
    }

    /// Solves `M z = b`; `None` when the determinant vanishes relative to the
    /// matrix scale.
    pub fn solve(&self, b: Vec2) -> Option<Vec2> {
        let det = self.det();
        let scale = math::abs(self.xx) + 2.0 * math::abs(self.xy) + math::abs(self.yy);
        if !det.is_finite() || scale == 0.0 || math::abs(det) <= 1e-14 * scale * scale {
            return None;
        }
        Some(Vec2::new(
            (self.yy * b.x - self.xy * b.y) / det,
            (self.xx * b.y - self.xy * b.x) / det,
        ))
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub const fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn from_bounds(x1_min: f64, x1_max: f64, x2_min: f64, x2_max: f64) -> Self {
        Rect::new(Vec2::new(x1_min, x2_min), Vec2::new(x1_max, x2_max))
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Containment with the rectangle grown by `margin` on every side.
    #[inline]
    pub fn contains_with_margin(&self, p: Vec2, margin: f64) -> bool {
        p.x >= self.min.x - margin
            && p.x <= self.max.x + margin
            && p.y >= self.min.y - margin
            && p.y <= self.max.y + margin
    }

    #[inline]
    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.max.x > self.min.x && self.max.y > self.min.y
    }
}

/// `n` evenly spaced coordinates covering `[lo, hi]`, endpoints included.
///
/// Coordinates are computed from the interval midpoint so that a domain
/// symmetric about zero yields lattices with `c[i] == -c[n-1-i]` exactly.
pub fn lattice_coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        return lo;
    }
    if i == 0 {
        return lo;
    }
    if i == n - 1 {
        return hi;
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let num = (2 * i) as f64 - (n - 1) as f64;
    mid + half * (num / (n - 1) as f64)
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}
