//! Level-set tracing over any differentiable scalar field.
//!
//! Each span is handled independently: starting points are found by
//! normalized gradient descent, trajectories are traced with RK4 along the
//! level-set tangent and corrected back onto the level set, and duplicated
//! pieces are removed. A final single-threaded pass inserts critical points
//! and joins everything into a [`TopoGraph`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::critical::CriticalPoint;
use crate::error::{Error, Result, Warning};
use crate::exec::SpanExecutor;
use crate::field::{ScalarField, SpanGrid, SpanIndex};
use crate::geom::{lattice_coord, point_segment_dist, Rect, Vec2};
use crate::graph::{TopoGraph, Vertex, VertexKind};
use crate::math;

/// Minimum `|cos|` between tangents for two points to count as tracing the
/// same curve.
const ALIGNMENT: f64 = 0.7;

/// Largest accepted distance to the level set, as a fraction of the step.
pub(crate) const GEOMETRIC_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceConfig {
    /// RK4 step size `s` in physical units.
    pub step: f64,
    /// Accuracy threshold on `|f - a|`.
    pub epsilon: f64,
    /// Connection threshold.
    pub gamma: f64,
    /// Seeds per span and axis; `None` uses `degree + 3`.
    pub seeds_per_dim: Option<usize>,
    /// Iteration cap for gradient descent.
    pub c_max: usize,
    pub min_grad: f64,
}

impl TraceConfig {
    pub fn new(step: f64) -> Self {
        TraceConfig {
            step,
            epsilon: 1e-10,
            gamma: 2.0 * step,
            seeds_per_dim: None,
            c_max: 50,
            min_grad: 1e-12,
        }
    }

    /// Step `l / divisor`, where `l` is the smallest span length of `field`.
    pub fn for_field<F: ScalarField + ?Sized>(field: &F, divisor: f64) -> Self {
        TraceConfig::new(field.span_grid().min_span_length() / divisor)
    }

    pub fn with_gamma_factor(mut self, factor: f64) -> Self {
        self.gamma = factor * self.step;
        self
    }

    pub fn validate(&self, span_length: f64) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.5 * span_length * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "step {} must lie in (0, l/2] with l = {span_length}",
                self.step
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(self.gamma >= self.step) {
            return Err(Error::Config("gamma must be at least the step size".into()));
        }
        if self.c_max == 0 {
            return Err(Error::Config("c_max must be at least 1".into()));
        }
        if self.seeds_per_dim == Some(0) {
            return Err(Error::Config("seeds_per_dim must be at least 1".into()));
        }
        if !(self.min_grad > 0.0) {
            return Err(Error::Config("min_grad must be positive".into()));
        }
        Ok(())
    }

    /// Whether a point with residual `r` and gradient `g` lies on the level
    /// set: `|r| <= epsilon`, and the first-order distance `|r| / |g|` is
    /// small against the step size.
    pub fn accepts(&self, r: f64, g: Vec2) -> bool {
        math::abs(r) <= self.epsilon && math::abs(r) <= GEOMETRIC_TOLERANCE * self.step * g.norm()
    }

    /// Acceptance once the correction can no longer move the point: the
    /// residual is at the floating-point floor, so only the geometric part of
    /// [`accepts`](Self::accepts) is required.
    fn accepts_at_floor(&self, r: f64, g: Vec2) -> bool {
        math::abs(r) <= GEOMETRIC_TOLERANCE * self.step * g.norm()
    }

    fn step_cap(&self, rect: Rect) -> usize {
        let cap = 10.0 * rect.perimeter() / self.step;
        if cap.is_finite() { (cap as usize).max(8) } else { 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Left the span towards the given neighbour; the last point comes from
    /// the halved step.
    Boundary(SpanIndex),
    /// Left the domain; the halved step was dropped.
    Domain,
    /// Displacement collapsed or the gradient vanished.
    NearCritical,
    StepCap,
    /// End created by duplicate removal.
    Trimmed,
    /// The trajectory is a closed loop.
    Closed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
    pub closed: bool,
    pub span: SpanIndex,
    pub start: StopReason,
    pub end: StopReason,
}

impl Trajectory {
    fn hits_step_cap(&self) -> bool {
        self.start == StopReason::StepCap || self.end == StopReason::StepCap
    }

    /// Polyline length, including the closing segment of loops.
    pub fn length(&self) -> f64 {
        let mut len: f64 = self.points.windows(2).map(|w| w[0].dist(w[1])).sum();
        if self.closed && self.points.len() > 1 {
            len += self.points[0].dist(self.points[self.points.len() - 1]);
        }
        len
    }

    fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        let closing = if self.closed && n > 2 { Some((self.points[n - 1], self.points[0])) } else { None };
        self.points.windows(2).map(|w| (w[0], w[1])).chain(closing)
    }

    /// Direction of the curve at point `i`, from its neighbours.
    fn direction(&self, i: usize) -> Vec2 {
        let n = self.points.len();
        if n < 2 {
            return Vec2::ZERO;
        }
        let (prev, next) = if self.closed {
            ((i + n - 1) % n, (i + 1) % n)
        } else {
            (i.saturating_sub(1), (i + 1).min(n - 1))
        };
        self.points[next] - self.points[prev]
    }

    /// Whether `p`, moving along `dir`, lies on this trajectory: within
    /// `tol` of the polyline and roughly parallel to it.
    fn covers(&self, p: Vec2, dir: Vec2, tol: f64) -> bool {
        if self.points.len() == 1 {
            return self.points[0].dist(p) < tol;
        }
        let dn = dir.norm();
        self.segments().any(|(a, b)| {
            if point_segment_dist(p, a, b) >= tol {
                return false;
            }
            let seg = b - a;
            let sn = seg.norm();
            dn == 0.0 || sn == 0.0 || math::abs(seg.dot(dir)) >= ALIGNMENT * sn * dn
        })
    }
}

/// Unit tangent `(-f_y, f_x) / |grad f|`, or `None` when the gradient is
/// below `min_grad`.
pub fn tangent(grad: Vec2, min_grad: f64) -> Option<Vec2> {
    let n = grad.norm();
    if !(n > min_grad) {
        return None;
    }
    Some(grad.perp() * (1.0 / n))
}

/// One classic RK4 step of length `s` along `direction * m`.
pub fn rk4_step<F: ScalarField + ?Sized>(field: &F, x: Vec2, s: f64, direction: f64, min_grad: f64) -> Option<Vec2> {
    let m = |p: Vec2| tangent(field.value_gradient(p).1, min_grad).map(|t| t * direction);
    let k1 = m(x)?;
    let k2 = m(x + k1 * (0.5 * s))?;
    let k3 = m(x + k2 * (0.5 * s))?;
    let k4 = m(x + k3 * s)?;
    Some(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (s / 6.0))
}

/// Normalized gradient descent onto `f = a`. Returns `None` if it does not
/// reach `|f - a| <= epsilon` within `c_max` iterations. Points where the
/// update falls below the floating-point resolution are accepted as they
/// are.
pub fn correct<F: ScalarField + ?Sized>(field: &F, a: f64, x: Vec2, cfg: &TraceConfig) -> Option<Vec2> {
    let mut x = x;
    for _ in 0..=cfg.c_max {
        let (f, g) = field.value_gradient(x);
        let r = f - a;
        if cfg.accepts(r, g) {
            return Some(x);
        }
        let gn = g.norm_sq();
        if !(gn > cfg.min_grad * cfg.min_grad) || !r.is_finite() {
            return None;
        }
        let next = x - g * (r / gn);
        if stalled(x, next) && cfg.accepts_at_floor(r, g) {
            return Some(x);
        }
        x = next;
    }
    None
}

/// Whether the update `x -> next` is at the floating-point resolution of `x`.
fn stalled(x: Vec2, next: Vec2) -> bool {
    let scale = math::abs(x.x).max(math::abs(x.y)).max(f64::MIN_POSITIVE);
    (next - x).norm() <= 4.0 * f64::EPSILON * scale
}

/// Points on `f = a` inside `span`, found by normalized gradient descent
/// from a uniform lattice of seeds (boundaries included). Points closer than
/// the step size to an earlier one are dropped.
pub fn find_starting_points<F: ScalarField + ?Sized>(field: &F, a: f64, span: SpanIndex, cfg: &TraceConfig) -> Vec<Vec2> {
    let rect = field.span_grid().rect(span);
    let k = cfg.seeds_per_dim.unwrap_or(field.degree() + 3).max(1);
    let mut out: Vec<Vec2> = Vec::new();
    for ia in 0..k {
        for ib in 0..k {
            let seed = Vec2::new(
                lattice_coord(rect.min.x, rect.max.x, k, ia),
                lattice_coord(rect.min.y, rect.max.y, k, ib),
            );
            if let Some(p) = descend(field, a, seed, rect, cfg) {
                if out.iter().all(|q| q.dist(p) >= cfg.step) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn descend<F: ScalarField + ?Sized>(field: &F, a: f64, seed: Vec2, rect: Rect, cfg: &TraceConfig) -> Option<Vec2> {
    let mut x = seed;
    let mut exits = 0;
    for _ in 0..=cfg.c_max {
        let (f, g) = field.value_gradient(x);
        let r = f - a;
        if cfg.accepts(r, g) {
            return Some(x);
        }
        let gn = g.norm_sq();
        if !(gn > cfg.min_grad * cfg.min_grad) || !r.is_finite() {
            return None;
        }
        let next = x - g * (r / gn);
        if stalled(x, next) && cfg.accepts_at_floor(r, g) {
            return Some(x);
        }
        if rect.contains(next) {
            exits = 0;
            x = next;
        } else {
            exits += 1;
            if exits >= 2 {
                return None;
            }
            x = rect.clamp(next);
        }
    }
    None
}

enum Leg {
    Stopped(StopReason),
    Closed,
}

fn trace_leg<F: ScalarField + ?Sized>(
    field: &F,
    a: f64,
    start: Vec2,
    span: SpanIndex,
    direction: f64,
    cfg: &TraceConfig,
) -> (Vec<Vec2>, Leg) {
    let s = cfg.step;
    let grid = field.span_grid();
    let rect = grid.rect(span);
    let domain = field.domain();
    let advance = |x: Vec2, h: f64| rk4_step(field, x, h, direction, cfg.min_grad).and_then(|p| correct(field, a, p, cfg));
    let mut pts = Vec::new();
    let mut x = start;
    for _ in 0..cfg.step_cap(rect) {
        let next = match advance(x, s) {
            Some(p) => p,
            None => return (pts, Leg::Stopped(StopReason::NearCritical)),
        };
        if next.dist(x) < 0.5 * s {
            return (pts, Leg::Stopped(StopReason::NearCritical));
        }
        if !rect.contains(next) {
            return match advance(x, 0.5 * s) {
                Some(h) if domain.contains(h) => {
                    pts.push(h);
                    (pts, Leg::Stopped(StopReason::Boundary(exit_span(grid, span, x, next))))
                }
                Some(_) => (pts, Leg::Stopped(StopReason::Domain)),
                None => (pts, Leg::Stopped(StopReason::NearCritical)),
            };
        }
        if pts.len() >= 2 && next.dist(start) < s {
            return (pts, Leg::Closed);
        }
        pts.push(next);
        x = next;
    }
    (pts, Leg::Stopped(StopReason::StepCap))
}

/// Traces the piece of `f = a` through `start` inside `span`: forward along
/// the tangent until the curve closes, leaves the span, nears a critical
/// point or hits the step cap, then backward if it did not close.
pub fn trace_trajectory<F: ScalarField + ?Sized>(
    field: &F,
    a: f64,
    start: Vec2,
    span: SpanIndex,
    cfg: &TraceConfig,
) -> Trajectory {
    let (fwd, leg) = trace_leg(field, a, start, span, 1.0, cfg);
    let end = match leg {
        Leg::Closed => {
            let mut points = vec![start];
            points.extend(fwd);
            return Trajectory { points, closed: true, span, start: StopReason::Closed, end: StopReason::Closed };
        }
        Leg::Stopped(r) => r,
    };
    let (bwd, leg) = trace_leg(field, a, start, span, -1.0, cfg);
    match leg {
        Leg::Closed => {
            let mut points = vec![start];
            points.extend(bwd);
            Trajectory { points, closed: true, span, start: StopReason::Closed, end: StopReason::Closed }
        }
        Leg::Stopped(r) => {
            let mut points: Vec<Vec2> = bwd.into_iter().rev().collect();
            points.push(start);
            points.extend(fwd);
            Trajectory { points, closed: false, span, start: r, end }
        }
    }
}

/// All trajectories of `f = a` inside one span, with duplicates removed.
/// Starting points already lying on an earlier trajectory are skipped.
pub fn trace_span<F: ScalarField + ?Sized>(field: &F, a: f64, span: SpanIndex, cfg: &TraceConfig) -> Vec<Trajectory> {
    if !field.may_cross_level(span, a) {
        return Vec::new();
    }
    let tol = 0.5 * cfg.step;
    let mut trajs: Vec<Trajectory> = Vec::new();
    for p in find_starting_points(field, a, span, cfg) {
        let dir = tangent(field.value_gradient(p).1, cfg.min_grad).unwrap_or(Vec2::ZERO);
        if trajs.iter().any(|t| t.covers(p, dir, tol)) {
            continue;
        }
        trajs.push(trace_trajectory(field, a, p, span, cfg));
    }
    remove_duplicates(trajs, cfg)
}

/// Removes duplicated pieces among trajectories of one span.
///
/// Trajectories are visited longest first. A point corresponds to an
/// already kept trajectory when it lies within `s/2` of it and runs parallel
/// to it. A trajectory made only of corresponding points is dropped; runs of
/// two or more corresponding points are cut out, keeping the point next to
/// each surviving piece so that the piece still reaches the kept copy.
pub fn remove_duplicates(trajectories: Vec<Trajectory>, cfg: &TraceConfig) -> Vec<Trajectory> {
    let tol = 0.5 * cfg.step;
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by(|&i, &j| {
        let (ti, tj) = (&trajectories[i], &trajectories[j]);
        tj.points
            .len()
            .cmp(&ti.points.len())
            .then_with(|| ti.points[0].lex_cmp(&tj.points[0]))
            .then(i.cmp(&j))
    });
    let mut kept: Vec<Trajectory> = Vec::new();
    for idx in order {
        let t = &trajectories[idx];
        let flags: Vec<bool> = (0..t.points.len())
            .map(|i| kept.iter().any(|k| k.covers(t.points[i], t.direction(i), tol)))
            .collect();
        let pieces = split_duplicated(t, &flags);
        kept.extend(pieces);
    }
    kept
}

/// Drops trajectories lying entirely on one trajectory of a neighbouring
/// span, unless they lead from one neighbouring span into another.
///
/// These arise where the curve barely enters a span and the neighbouring
/// trace steps across the excursion, or where a trace overshoots into the
/// next span. Trajectories are visited longest first and compared against
/// those already kept.
pub fn remove_cross_span_duplicates(trajectories: Vec<Trajectory>, grid: &SpanGrid, cfg: &TraceConfig) -> Vec<Trajectory> {
    let tol = 0.5 * cfg.step;
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by(|&i, &j| trajectories[j].points.len().cmp(&trajectories[i].points.len()).then(i.cmp(&j)));
    let mut kept_by_span: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut keep = vec![false; trajectories.len()];
    for idx in order {
        let t = &trajectories[idx];
        let span = t.span;
        let mut others: Vec<usize> = Vec::new();
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                let (i, j) = (span.i as isize + di, span.j as isize + dj);
                if (di, dj) == (0, 0) || i < 0 || j < 0 || i as usize >= grid.n_u() || j as usize >= grid.n_v() {
                    continue;
                }
                if let Some(l) = kept_by_span.get(&grid.linear(SpanIndex::new(i as usize, j as usize))) {
                    others.extend_from_slice(l);
                }
            }
        }
        let bridge = match (t.start, t.end) {
            (StopReason::Boundary(u), StopReason::Boundary(v)) => u != v,
            _ => false,
        };
        let covered = !bridge
            && others
                .iter()
                .any(|&o| (0..t.points.len()).all(|k| trajectories[o].covers(t.points[k], t.direction(k), tol)));
        if !covered {
            keep[idx] = true;
            kept_by_span.entry(grid.linear(span)).or_default().push(idx);
        }
    }
    trajectories.into_iter().zip(keep).filter_map(|(t, k)| k.then_some(t)).collect()
}

fn split_duplicated(t: &Trajectory, flags: &[bool]) -> Vec<Trajectory> {
    let n = t.points.len();
    if flags.iter().all(|&f| f) {
        return Vec::new();
    }
    if !flags.iter().any(|&f| f) {
        return vec![t.clone()];
    }
    let (points, flags, start, end) = if t.closed {
        // rotate so that a corresponding run starts at index 0 and close the
        // sequence by repeating that point at the end
        let r = (0..n).find(|&i| flags[i] && !flags[(i + n - 1) % n]).unwrap_or(0);
        let pts: Vec<Vec2> = (0..=n).map(|i| t.points[(r + i) % n]).collect();
        let rotated: Vec<bool> = (0..n).map(|i| flags[(r + i) % n]).collect();
        let mut dup = runs_of_two(&rotated);
        if !dup.iter().any(|&d| d) {
            return vec![t.clone()];
        }
        dup.push(dup[0]);
        (pts, dup, StopReason::Trimmed, StopReason::Trimmed)
    } else {
        let dup = runs_of_two(flags);
        if !dup.iter().any(|&d| d) {
            return vec![t.clone()];
        }
        (t.points.clone(), dup, t.start, t.end)
    };
    let m = points.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < m {
        if flags[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < m && !flags[j + 1] {
            j += 1;
        }
        let lo = i.saturating_sub(1);
        let hi = (j + 1).min(m - 1);
        out.push(Trajectory {
            points: points[lo..=hi].to_vec(),
            closed: false,
            span: t.span,
            start: if i == 0 { start } else { StopReason::Trimmed },
            end: if j == m - 1 { end } else { StopReason::Trimmed },
        });
        i = j + 1;
    }
    out
}

/// Marks points belonging to runs of at least two consecutive flagged
/// points.
fn runs_of_two(flags: &[bool]) -> Vec<bool> {
    let n = flags.len();
    let mut out = vec![false; n];
    let mut i = 0;
    while i < n {
        if !flags[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && flags[j + 1] {
            j += 1;
        }
        if j > i {
            for o in &mut out[i..=j] {
                *o = true;
            }
        }
        i = j + 1;
    }
    out
}

struct Endpoint {
    vertex: usize,
    traj: usize,
    span: usize,
    /// Span the trajectory leaves into at this end; `span` itself if it
    /// does not leave.
    lands: usize,
    /// Whether the trace stopped at the span or domain boundary here.
    exits: bool,
}

/// Whether point `k` of `t` is either interior or an end reached while
/// moving along `dir`, as opposed to an end reached from the opposite side.
fn approaches_alike(t: &Trajectory, k: usize, dir: Vec2) -> bool {
    let n = t.points.len();
    if t.closed || n < 2 {
        return true;
    }
    let along = if k == 0 {
        t.points[0] - t.points[1]
    } else if k == n - 1 {
        t.points[n - 1] - t.points[n - 2]
    } else {
        return true;
    };
    along.dot(dir) > 0.0
}

/// The span the ray from `inner` through `p` enters when it leaves `span`,
/// or `span` itself if that is outside the grid.
fn exit_span(grid: &SpanGrid, span: SpanIndex, inner: Vec2, p: Vec2) -> SpanIndex {
    let r = grid.rect(span);
    let d = p - inner;
    let hit = |from: f64, d: f64, lo: f64, hi: f64| -> (f64, isize) {
        if d > 0.0 {
            ((hi - from) / d, 1)
        } else if d < 0.0 {
            ((lo - from) / d, -1)
        } else {
            (f64::INFINITY, 0)
        }
    };
    let (tx, dx) = hit(inner.x, d.x, r.min.x, r.max.x);
    let (ty, dy) = hit(inner.y, d.y, r.min.y, r.max.y);
    let (di, dj) = if tx.is_infinite() && ty.is_infinite() {
        return span;
    } else if tx <= ty {
        (dx, 0)
    } else {
        (0, dy)
    };
    let (i, j) = (span.i as isize + di, span.j as isize + dj);
    if i < 0 || j < 0 || i as usize >= grid.n_u() || j as usize >= grid.n_v() {
        return span;
    }
    SpanIndex::new(i as usize, j as usize)
}

/// Joins trajectories and critical points into a graph.
///
/// Critical points come first in the vertex list, followed by the points of
/// every trajectory in order. Trajectory ends are joined, in order, to
/// critical points within `gamma`, to ends in forward-neighbouring spans
/// within `gamma`, and to other ends of the same span closer than `gamma`.
/// Every pass takes candidate pairs nearest first; across spans, pairs whose
/// ends have stepped into each other's span go first. A regular end takes
/// one connection in total (two for single-point trajectories).
pub fn connect<F: ScalarField + ?Sized>(
    trajectories: &[Trajectory],
    criticals: &[CriticalPoint],
    field: &F,
    cfg: &TraceConfig,
) -> TopoGraph {
    let grid = field.span_grid();
    let mut g = TopoGraph::new();
    for c in criticals {
        g.add_vertex(Vertex { position: c.position, value: c.value, kind: VertexKind::Critical(c.kind) });
    }
    let mut free: Vec<usize> = vec![usize::MAX; criticals.len()];
    let mut ends: Vec<Endpoint> = Vec::new();
    let mut ranges = Vec::with_capacity(trajectories.len());
    for (ti, t) in trajectories.iter().enumerate() {
        let first = g.n_vertices();
        for &p in &t.points {
            g.add_vertex(Vertex { position: p, value: field.value(p), kind: VertexKind::Regular });
        }
        let n = t.points.len();
        ranges.push((first, n));
        let span = grid.linear(t.span);
        if t.closed {
            free.extend(core::iter::repeat_n(0, n));
            continue;
        }
        let end = |vertex: usize, reason: StopReason| Endpoint {
            vertex,
            traj: ti,
            span,
            lands: grid.linear(if let StopReason::Boundary(next) = reason { next } else { t.span }),
            exits: matches!(reason, StopReason::Boundary(_) | StopReason::Domain),
        };
        if n == 1 {
            free.push(2);
            ends.push(end(first, t.start));
        } else {
            free.push(1);
            free.extend(core::iter::repeat_n(0, n - 2));
            free.push(1);
            ends.push(end(first, t.start));
            ends.push(end(first + n - 1, t.end));
        }
    }
    let pos = |v: usize, g: &TopoGraph| g.vertices()[v].position;

    // candidates are (tier, distance, a, b), taken in that order
    let apply = |cands: &mut Vec<(u8, f64, usize, usize)>, g: &mut TopoGraph, free: &mut Vec<usize>| {
        cands.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2)).then(x.3.cmp(&y.3)));
        for &(_, _, a, b) in cands.iter() {
            if free[a] > 0 && free[b] > 0 && g.add_edge(a, b) {
                free[a] = free[a].saturating_sub(1);
                free[b] = free[b].saturating_sub(1);
            }
        }
    };

    let mut traj_by_span: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ti, t) in trajectories.iter().enumerate() {
        traj_by_span.entry(grid.linear(t.span)).or_default().push(ti);
    }
    let nearby = |span: usize| {
        let si = grid.from_linear(span);
        let mut out = Vec::new();
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                let (ni, nj) = (si.i as isize + di, si.j as isize + dj);
                if ni >= 0 && nj >= 0 && (ni as usize) < grid.n_u() && (nj as usize) < grid.n_v() {
                    if let Some(l) = traj_by_span.get(&grid.linear(SpanIndex::new(ni as usize, nj as usize))) {
                        out.extend_from_slice(l);
                    }
                }
            }
        }
        out
    };

    // critical points. An end reaches for a critical point only if it is
    // closer to it than its inner neighbour, and only if no other
    // trajectory running through the end gets closer to it from the same
    // side.
    let mut cands = Vec::new();
    for e in &ends {
        let p = pos(e.vertex, &g);
        let t = &trajectories[e.traj];
        let (first, n) = ranges[e.traj];
        let (inner, dir) = if n < 2 {
            (None, Vec2::ZERO)
        } else if e.vertex == first {
            (Some(t.points[1]), t.points[0] - t.points[1])
        } else {
            (Some(t.points[n - 2]), t.points[n - 1] - t.points[n - 2])
        };
        for (ci, c) in criticals.iter().enumerate() {
            let d = p.dist(c.position);
            if d > cfg.gamma || inner.is_some_and(|q| d > q.dist(c.position)) {
                continue;
            }
            let shadowed = nearby(e.span).into_iter().any(|u| {
                let other = &trajectories[u];
                u != e.traj
                    && other.covers(p, dir, 0.5 * cfg.step)
                    && other.points.iter().enumerate().any(|(k, &q)| {
                        q.dist(c.position) < d
                            && (q - c.position).dot(p - c.position) > 0.0
                            && approaches_alike(other, k, dir)
                    })
            });
            if !shadowed {
                cands.push((0, d, e.vertex, ci));
            }
        }
    }
    apply(&mut cands, &mut g, &mut free);

    // forward-neighbouring spans
    let mut by_span: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, e) in ends.iter().enumerate() {
        by_span.entry(e.span).or_default().push(k);
    }
    let mut cands = Vec::new();
    for (&s, list) in &by_span {
        let si = grid.from_linear(s);
        for (di, dj) in [(1isize, -1isize), (1, 0), (1, 1), (0, 1)] {
            let (ni, nj) = (si.i as isize + di, si.j as isize + dj);
            if ni < 0 || nj < 0 || ni as usize >= grid.n_u() || nj as usize >= grid.n_v() {
                continue;
            }
            let other = grid.linear(SpanIndex::new(ni as usize, nj as usize));
            let Some(olist) = by_span.get(&other) else { continue };
            for &ka in list {
                for &kb in olist {
                    let (ea, eb) = (&ends[ka], &ends[kb]);
                    let (va, vb) = (ea.vertex, eb.vertex);
                    let d = pos(va, &g).dist(pos(vb, &g));
                    if d <= cfg.gamma {
                        let tier = 2 - u8::from(ea.lands == eb.span) - u8::from(eb.lands == ea.span);
                        cands.push((tier, d, va.min(vb), va.max(vb)));
                    }
                }
            }
        }
    }
    apply(&mut cands, &mut g, &mut free);

    // same span
    let mut cands = Vec::new();
    for list in by_span.values() {
        for (x, &ka) in list.iter().enumerate() {
            for &kb in &list[x + 1..] {
                let (ea, eb) = (&ends[ka], &ends[kb]);
                if ea.traj == eb.traj && (ranges[ea.traj].1 < 3 || ea.exits || eb.exits) {
                    continue;
                }
                let d = pos(ea.vertex, &g).dist(pos(eb.vertex, &g));
                if d < cfg.gamma {
                    cands.push((0, d, ea.vertex.min(eb.vertex), ea.vertex.max(eb.vertex)));
                }
            }
        }
    }
    apply(&mut cands, &mut g, &mut free);

    // consecutive points
    for (t, &(first, n)) in trajectories.iter().zip(&ranges) {
        for k in 1..n {
            g.add_edge(first + k - 1, first + k);
        }
        if t.closed && n > 2 {
            g.add_edge(first + n - 1, first);
        }
    }
    g
}

/// Cuts trajectories that run through a critical point: the segment
/// passing nearest to it, if closer than `s/2`, is removed so that the
/// critical point can take its place between the two new ends.
pub fn split_at_criticals(trajectories: Vec<Trajectory>, criticals: &[CriticalPoint], cfg: &TraceConfig) -> Vec<Trajectory> {
    let mut pending = trajectories;
    for c in criticals {
        let mut next = Vec::with_capacity(pending.len());
        for t in pending {
            let n = t.points.len();
            let segments = if t.closed && n > 2 { n } else { n.saturating_sub(1) };
            let nearest = (0..segments)
                .map(|k| (point_segment_dist(c.position, t.points[k], t.points[(k + 1) % n]), k))
                .filter(|&(d, _)| d < 0.5 * cfg.step)
                .min_by(|x, y| x.0.total_cmp(&y.0));
            let Some((_, k)) = nearest else {
                next.push(t);
                continue;
            };
            if t.closed && n > 2 {
                let points: Vec<Vec2> = (1..=n).map(|i| t.points[(k + i) % n]).collect();
                next.push(Trajectory { points, closed: false, span: t.span, start: StopReason::Trimmed, end: StopReason::Trimmed });
            } else {
                let (head, tail) = (t.points[..=k].to_vec(), t.points[k + 1..].to_vec());
                next.push(Trajectory { points: head, closed: false, span: t.span, start: t.start, end: StopReason::Trimmed });
                next.push(Trajectory { points: tail, closed: false, span: t.span, start: StopReason::Trimmed, end: t.end });
            }
        }
        pending = next;
    }
    pending
}

/// Result of a level-set extraction.
#[derive(Clone, Debug, Default)]
pub struct LevelSet {
    pub graph: TopoGraph,
    pub trajectories: Vec<Trajectory>,
    pub warnings: Vec<Warning>,
}

/// Traces `f = a` in every span and connects the pieces. `criticals` are
/// inserted as given; callers filter them to the level set. Trajectories
/// lying entirely within `s` of an inserted critical point are dropped since
/// the critical point already represents them.
pub fn extract_level_set<F, E>(field: &F, a: f64, criticals: &[CriticalPoint], cfg: &TraceConfig, exec: &E) -> Result<LevelSet>
where
    F: ScalarField + ?Sized,
    E: SpanExecutor,
{
    let grid = field.span_grid();
    cfg.validate(grid.min_span_length())?;
    let per_span = exec.map_indexed(grid.len(), |k| trace_span(field, a, grid.from_linear(k), cfg));
    let split = split_at_criticals(per_span.into_iter().flatten().collect(), criticals, cfg);
    let mut trajectories = remove_cross_span_duplicates(split, grid, cfg);
    trajectories.retain(|t| {
        !criticals
            .iter()
            .any(|c| t.points.iter().all(|p| p.dist(c.position) < cfg.step))
    });
    let capped = trajectories.iter().filter(|t| t.hits_step_cap()).count();
    let graph = connect(&trajectories, criticals, field, cfg);
    let mut warnings = Vec::new();
    if capped > 0 {
        warnings.push(Warning::StepCap(capped));
    }
    Ok(LevelSet { graph, trajectories, warnings })
}
