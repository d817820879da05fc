//! Closed-form benchmark fields and lattice samplers for fitting them.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::math;
use crate::model::GridData;

/// Default number of samples per span and axis when building fitting grids.
pub const SAMPLES_PER_SPAN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnalyticField {
    Schwefel,
    Sinc,
    GaussianPairF,
    GaussianPairG,
    GaussianMixture,
}

impl AnalyticField {
    pub const ALL: [AnalyticField; 5] = [
        AnalyticField::Schwefel,
        AnalyticField::Sinc,
        AnalyticField::GaussianPairF,
        AnalyticField::GaussianPairG,
        AnalyticField::GaussianMixture,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticField::Schwefel => "schwefel",
            AnalyticField::Sinc => "sinc",
            AnalyticField::GaussianPairF => "gaussian_pair_f",
            AnalyticField::GaussianPairG => "gaussian_pair_g",
            AnalyticField::GaussianMixture => "gaussian_mixture",
        }
    }

    /// Accepts the canonical names, with `-` in place of `_` as well.
    pub fn parse(s: &str) -> Result<Self> {
        AnalyticField::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s || f.name().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown field `{s}`")))
    }

    pub fn domain(&self) -> Rect {
        match self {
            AnalyticField::Schwefel => {
                let r = (10.5 * PI) * (10.5 * PI);
                Rect::from_bounds(-r, r, -r, r)
            }
            AnalyticField::Sinc => Rect::from_bounds(-2.0 * PI, 2.0 * PI, -2.0 * PI, 2.0 * PI),
            AnalyticField::GaussianPairF | AnalyticField::GaussianPairG => Rect::from_bounds(0.1, 0.9, 0.0, 0.6),
            AnalyticField::GaussianMixture => Rect::from_bounds(-1.0, 1.0, -0.8, 2.3),
        }
    }

    /// Span counts of the reference models.
    pub fn spans(&self) -> (usize, usize) {
        match self {
            AnalyticField::Schwefel => (71, 71),
            AnalyticField::Sinc => (27, 27),
            AnalyticField::GaussianPairF | AnalyticField::GaussianPairG => (17, 11),
            AnalyticField::GaussianMixture => (46, 71),
        }
    }

    /// Fitting grid size with `per_span` samples per span and axis.
    pub fn grid_size(&self, per_span: usize) -> (usize, usize) {
        let (a, b) = self.spans();
        (a * per_span + 1, b * per_span + 1)
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            AnalyticField::Schwefel => {
                let t = |v: f64| v * math::sin(math::sqrt(math::abs(v)));
                0.5 * (418.9829 * 2.0 - t(x.x) - t(x.y))
            }
            AnalyticField::Sinc => sinc5(x.x) + sinc5(x.y),
            AnalyticField::GaussianPairF => 0.25 * math::exp(-sq(x.x - 0.5) / 0.02 - sq(x.y - 0.4) / 0.02),
            AnalyticField::GaussianPairG => {
                0.25 * math::exp(-sq(x.x - 0.3) / 0.02 - sq(x.y - 0.2) / 0.02)
                    + 0.25 * math::exp(-sq(x.x - 0.75) / 0.02 - sq(x.y - 0.25) / 0.0288)
            }
            AnalyticField::GaussianMixture => {
                math::exp(-8.0 * sq(x.x + 0.4) - 4.0 * sq(x.y))
                    + math::exp(-8.0 * sq(x.x - 0.5) - 4.0 * sq(x.y))
                    + math::exp(-8.0 * sq(x.x) - 4.0 * sq(x.y - 0.77))
                    + math::exp(-8.0 * sq(x.x) - 4.0 * sq(x.y - 1.5))
                    + 0.2 * math::exp(-0.3 * sq(x.x) - 0.3 * sq(x.y - 0.5))
            }
        }
    }

    /// Samples the field on an `nx x ny` lattice over its domain.
    pub fn make_grid(&self, nx: usize, ny: usize) -> Result<GridData> {
        GridData::sample(nx, ny, self.domain(), |p| self.eval(p))
    }
}

#[inline]
fn sq(v: f64) -> f64 {
    v * v
}

/// `sin(5x) / x`, continuously extended by 5 at the origin.
fn sinc5(x: f64) -> f64 {
    if x == 0.0 {
        5.0
    } else {
        math::sin(5.0 * x) / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let v = AnalyticField::Sinc.eval(Vec2::new(PI / 10.0, PI / 10.0));
        assert!((v - 20.0 / PI).abs() < 1e-12);
        let m = AnalyticField::GaussianMixture.eval(Vec2::new(0.0, 0.5));
        let rest = (-8.0f64 * 0.16 - 1.0).exp()
            + (-8.0f64 * 0.25 - 1.0).exp()
            + (-4.0f64 * 0.27 * 0.27).exp()
            + (-4.0f64).exp();
        assert!((m - rest - 0.2).abs() < 1e-15);
        assert!((AnalyticField::Schwefel.eval(Vec2::ZERO) - 418.9829).abs() < 1e-12);
        assert_eq!(AnalyticField::Sinc.eval(Vec2::ZERO), 10.0);
    }

    #[test]
    fn names_round_trip() {
        for f in AnalyticField::ALL {
            assert_eq!(AnalyticField::parse(f.name()).unwrap(), f);
        }
        assert_eq!(AnalyticField::parse("gaussian-mixture").unwrap(), AnalyticField::GaussianMixture);
        assert!(AnalyticField::parse("nope").is_err());
    }

    #[test]
    fn sinc_grid_is_symmetric() {
        let g = AnalyticField::Sinc.make_grid(41, 41).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                assert_eq!(g.at(i, j), g.at(j, i));
                assert_eq!(g.at(i, j), g.at(40 - i, 40 - j));
            }
        }
        let d = AnalyticField::Sinc.domain();
        assert_eq!(g.at(0, 0), AnalyticField::Sinc.eval(d.min));
        assert_eq!(g.at(40, 40), AnalyticField::Sinc.eval(d.max));
    }
}
