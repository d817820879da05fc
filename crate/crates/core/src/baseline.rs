//! Discrete reference: sample a field on a lattice and extract piecewise
//! linear level sets with marching squares.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::SpanExecutor;
use crate::features::{DerivedFieldH, DerivedFieldHTilde};
use crate::field::{JetField, ScalarField, SpanGrid};
use crate::geom::{lattice_coord, Rect, Vec2};
use crate::graph::{TopoGraph, Vertex, VertexKind};

/// Field values on a lattice with `ratio` cells per span and axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    ratio: usize,
}

impl SampledGrid {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ys.len() + iy]
    }

    pub fn position(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.xs[ix], self.ys[iy])
    }

    pub fn domain(&self) -> Rect {
        Rect::from_bounds(self.xs[0], self.xs[self.xs.len() - 1], self.ys[0], self.ys[self.ys.len() - 1])
    }
}

fn axis(breaks: &[f64], ratio: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((breaks.len() - 1) * ratio + 1);
    for w in breaks.windows(2) {
        for k in 0..ratio {
            out.push(lattice_coord(w[0], w[1], ratio + 1, k));
        }
    }
    out.push(breaks[breaks.len() - 1]);
    out
}

/// Samples `field` at the corners of a lattice refining every span into
/// `ratio x ratio` cells. Rows are evaluated through `exec`.
pub fn sample<F, E>(field: &F, ratio: usize, exec: &E) -> Result<SampledGrid>
where
    F: ScalarField + ?Sized,
    E: SpanExecutor,
{
    if ratio == 0 {
        return Err(Error::Config("sampling ratio must be at least 1".into()));
    }
    let grid: &SpanGrid = field.span_grid();
    let xs = axis(grid.u_breaks(), ratio);
    let ys = axis(grid.v_breaks(), ratio);
    let rows = exec.map_indexed(xs.len(), |ix| ys.iter().map(|&y| field.value(Vec2::new(xs[ix], y))).collect::<Vec<_>>());
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Dimension(alloc::format!("sample {k} is not finite")));
    }
    Ok(SampledGrid { xs, ys, values, ratio })
}

/// Piecewise linear level set `a` of the bilinear cells of `grid`.
///
/// Crossings are shared between neighbouring cells, so the result is a
/// graph rather than a segment soup. Cells with four crossings are resolved
/// by comparing the cell-centre average against `a`. Samples equal to `a`
/// are nudged upwards by `1e-12` times the value range.
pub fn marching_squares(grid: &SampledGrid, a: f64) -> TopoGraph {
    marching_squares_with(grid, a, false)
}

/// [`marching_squares`], optionally dropping segments that run along the
/// domain boundary.
pub fn marching_squares_with(grid: &SampledGrid, a: f64, exclude_boundary: bool) -> TopoGraph {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (lo, hi) = grid.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    let nudge = |v: f64| {
        if v != a {
            return v;
        }
        let w = v + 1e-12 * range;
        if w != a { w } else { a.next_up() }
    };
    let vals: Vec<f64> = grid.values.iter().map(|&v| nudge(v)).collect();
    let val = |ix: usize, iy: usize| vals[ix * ny + iy];

    let mut g = TopoGraph::new();
    // crossing vertex ids on x-directed edges (ix, iy)-(ix+1, iy) and
    // y-directed edges (ix, iy)-(ix, iy+1)
    let mut on_x: Vec<usize> = vec![usize::MAX; nx * ny];
    let mut on_y: Vec<usize> = vec![usize::MAX; nx * ny];
    let mut crossing = |g: &mut TopoGraph, p: (usize, usize), q: (usize, usize)| -> usize {
        let slot = if p.1 == q.1 { &mut on_x[p.0 * ny + p.1] } else { &mut on_y[p.0 * ny + p.1] };
        if *slot == usize::MAX {
            let (vp, vq) = (val(p.0, p.1), val(q.0, q.1));
            let t = (a - vp) / (vq - vp);
            let (pp, pq) = (grid.position(p.0, p.1), grid.position(q.0, q.1));
            let pos = pp + (pq - pp) * t;
            *slot = g.add_vertex(Vertex { position: pos, value: a, kind: VertexKind::Regular });
        }
        *slot
    };
    let dom = grid.domain();
    let on_boundary = |p: Vec2| {
        let tol = 1e-12 * (dom.width() + dom.height());
        (p.x - dom.min.x).abs() <= tol
            || (dom.max.x - p.x).abs() <= tol
            || (p.y - dom.min.y).abs() <= tol
            || (dom.max.y - p.y).abs() <= tol
    };
    let segment = |g: &mut TopoGraph, a_id: usize, b_id: usize| {
        if exclude_boundary {
            let (pa, pb) = (g.vertices()[a_id].position, g.vertices()[b_id].position);
            let mid = (pa + pb) * 0.5;
            if on_boundary(pa) && on_boundary(pb) && on_boundary(mid) {
                return;
            }
        }
        g.add_edge(a_id, b_id);
    };

    for ix in 0..nx.saturating_sub(1) {
        for iy in 0..ny.saturating_sub(1) {
            let c00 = val(ix, iy) > a;
            let c10 = val(ix + 1, iy) > a;
            let c11 = val(ix + 1, iy + 1) > a;
            let c01 = val(ix, iy + 1) > a;
            let bottom = (c00 != c10).then_some(((ix, iy), (ix + 1, iy)));
            let right = (c10 != c11).then_some(((ix + 1, iy), (ix + 1, iy + 1)));
            let top = (c01 != c11).then_some(((ix, iy + 1), (ix + 1, iy + 1)));
            let left = (c00 != c01).then_some(((ix, iy), (ix, iy + 1)));
            let edges: Vec<((usize, usize), (usize, usize))> = [bottom, right, top, left].into_iter().flatten().collect();
            match edges.len() {
                2 => {
                    let u = crossing(&mut g, edges[0].0, edges[0].1);
                    let v = crossing(&mut g, edges[1].0, edges[1].1);
                    segment(&mut g, u, v);
                }
                4 => {
                    let centre = 0.25 * (val(ix, iy) + val(ix + 1, iy) + val(ix + 1, iy + 1) + val(ix, iy + 1));
                    let (b, r, t, l) = (edges[0], edges[1], edges[2], edges[3]);
                    let pairs = if (centre > a) == c00 { [(b, r), (l, t)] } else { [(b, l), (r, t)] };
                    for (e1, e2) in pairs {
                        let u = crossing(&mut g, e1.0, e1.1);
                        let v = crossing(&mut g, e2.0, e2.1);
                        segment(&mut g, u, v);
                    }
                }
                _ => {}
            }
        }
    }
    g
}

/// Marching squares on the sampled Jacobi field `h` at level zero.
pub fn pl_jacobi<F, G, E>(f: F, g: G, ratio: usize, exec: &E) -> Result<(TopoGraph, SampledGrid)>
where
    F: JetField,
    G: JetField,
    E: SpanExecutor,
{
    let h = DerivedFieldH::new(f, g)?;
    let grid = sample(&h, ratio, exec)?;
    Ok((marching_squares_with(&grid, 0.0, true), grid))
}

/// Marching squares on the sampled ridge-valley field `h~` at level zero.
pub fn pl_ridge_valley<F, E>(f: F, ratio: usize, exec: &E) -> Result<(TopoGraph, SampledGrid)>
where
    F: JetField,
    E: SpanExecutor,
{
    let ht = DerivedFieldHTilde::new(f);
    let grid = sample(&ht, ratio, exec)?;
    Ok((marching_squares_with(&grid, 0.0, true), grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Quadratic;
    use crate::exec::Sequential;
    use crate::graph::{components, loops};

    fn square(n: usize) -> SpanGrid {
        SpanGrid::uniform(Rect::from_bounds(-1.0, 1.0, -1.0, 1.0), n, n)
    }

    #[test]
    fn sample_sizes_and_values() {
        let c = Quadratic::with_grid([3.0, 0.0, 0.0, 0.0, 0.0, 0.0], square(27));
        let s = sample(&c, 4, &Sequential).unwrap();
        assert_eq!((s.nx(), s.ny()), (109, 109));
        assert!(s.values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn single_cell_one_segment() {
        let grid = SampledGrid { xs: vec![0.0, 1.0], ys: vec![0.0, 1.0], values: vec![-1.0, 1.0, 1.0, 1.0], ratio: 1 };
        let g = marching_squares(&grid, 0.0);
        assert_eq!((g.n_vertices(), g.n_edges()), (2, 1));
    }

    #[test]
    fn saddle_cell_uses_centre() {
        // corners (0,0) and (1,1) high, centre average high: the high corners
        // join through the middle
        let grid = SampledGrid { xs: vec![0.0, 1.0], ys: vec![0.0, 1.0], values: vec![2.0, -1.0, -1.0, 2.0], ratio: 1 };
        let g = marching_squares(&grid, 0.0);
        assert_eq!((g.n_vertices(), g.n_edges(), components(&g)), (4, 2, 2));
    }

    #[test]
    fn circle_at_fine_sampling() {
        let f = Quadratic::with_grid([0.0, 0.0, 0.0, 1.0, 0.0, 1.0], square(1));
        let s = sample(&f, 64, &Sequential).unwrap();
        let g = marching_squares(&s, 0.25);
        assert_eq!((loops(&g), components(&g)), (1, 1));
    }

    #[test]
    fn corner_on_level_is_nudged() {
        let f = Quadratic::with_grid([0.0, 1.0, 0.0, 0.0, 0.0, 0.0], square(2));
        let s = sample(&f, 2, &Sequential).unwrap();
        let g = marching_squares(&s, 0.0);
        assert_eq!(components(&g), 1);
        assert!(g.n_edges() > 0);
    }

    #[test]
    fn pl_jacobi_of_coordinates_is_empty() {
        let x = Quadratic::with_grid([0.0, 1.0, 0.0, 0.0, 0.0, 0.0], square(2));
        let y = Quadratic::with_grid([0.0, 0.0, 1.0, 0.0, 0.0, 0.0], square(2));
        let (g, _) = pl_jacobi(&x, &y, 4, &Sequential).unwrap();
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn pl_ridge_valley_of_paraboloid_follows_axes() {
        let f = Quadratic::with_grid([0.0, 0.0, 0.0, 1.0, 0.0, 2.0], square(3));
        let (g, _) = pl_ridge_valley(&f, 16, &Sequential).unwrap();
        assert!(g.n_edges() > 0);
        for v in g.vertices() {
            assert!(v.position.x.abs() < 0.1 || v.position.y.abs() < 0.1);
        }
    }
}
