//! Critical points by span filtration, per-span Newton iteration and
//! spatial-hash deduplication.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::Warning;
use crate::exec::SpanExecutor;
use crate::field::{HessianField, SpanIndex};
use crate::geom::{lattice_coord, Mat2, Rect, Vec2};
use crate::math;
use crate::model::MfaModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

impl CriticalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriticalKind::Minimum => "minimum",
            CriticalKind::Maximum => "maximum",
            CriticalKind::Saddle => "saddle",
            CriticalKind::Degenerate => "degenerate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "minimum" => CriticalKind::Minimum,
            "maximum" => CriticalKind::Maximum,
            "saddle" => CriticalKind::Saddle,
            "degenerate" => CriticalKind::Degenerate,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub position: Vec2,
    pub value: f64,
    pub kind: CriticalKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    pub i_max: usize,
    /// Convergence threshold on the gradient norm.
    pub grad_tol: f64,
    /// Points closer than this are merged.
    pub dedup_cell: f64,
    /// `|det H|` below this marks a point degenerate.
    pub degeneracy_tol: f64,
    /// Seeds per span and axis; `None` uses `degree + 3`.
    pub seeds_per_dim: Option<usize>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            i_max: 100,
            grad_tol: 1e-10,
            dedup_cell: 1e-6,
            degeneracy_tol: 1e-12,
            seeds_per_dim: None,
        }
    }
}

impl NewtonConfig {
    pub fn with_dedup_cell(mut self, cell: f64) -> Self {
        self.dedup_cell = cell;
        self
    }
}

/// Critical points plus diagnostics.
#[derive(Clone, Debug, Default)]
pub struct CriticalPoints {
    pub points: Vec<CriticalPoint>,
    pub warnings: Vec<Warning>,
}

/// Spans whose first-derivative control points do not rule out a critical
/// point. A span is dropped when, along either axis, all of its local
/// derivative control points are strictly positive or strictly negative.
pub fn filter_spans(model: &MfaModel) -> Vec<SpanIndex> {
    let p = model.degree();
    let du = model.derivative_control_points(1).expect("dimension 1 is valid");
    let dv = model.derivative_control_points(2).expect("dimension 2 is valid");
    let strict_sign = |vals: &mut dyn Iterator<Item = f64>| {
        let (mut pos, mut neg, mut any) = (true, true, false);
        for v in vals {
            any = true;
            pos &= v > 0.0;
            neg &= v < 0.0;
        }
        any && (pos || neg)
    };
    model
        .spans()
        .iter()
        .filter(|&span| {
            let (fu, fv) = model.span_first_ctrl(span);
            // du has one row fewer: active rows fu..fu+p-1, columns fv..=fv+p.
            let mut it_u = (fu..fu + p).flat_map(|a| (fv..=fv + p).map(move |b| (a, b))).map(|(a, b)| du.at(a, b));
            let mut it_v = (fu..=fu + p).flat_map(|a| (fv..fv + p).map(move |b| (a, b))).map(|(a, b)| dv.at(a, b));
            !(strict_sign(&mut it_u) || strict_sign(&mut it_v))
        })
        .collect()
}

/// Classifies by the signs of the Hessian eigenvalues.
pub fn classify_hessian(h: Mat2, degeneracy_tol: f64) -> CriticalKind {
    let det = h.det();
    if math::abs(det) < degeneracy_tol {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if h.xx + h.yy > 0.0 {
        CriticalKind::Minimum
    } else {
        CriticalKind::Maximum
    }
}

/// Classifies the point `x` of `field` with the default degeneracy
/// tolerance.
pub fn classify<F: HessianField + ?Sized>(field: &F, x: Vec2) -> CriticalKind {
    let (_, _, h) = field.value_gradient_hessian(x);
    classify_hessian(h, NewtonConfig::default().degeneracy_tol)
}

enum NewtonResult {
    Converged(CriticalPoint),
    Singular,
    Failed,
}

fn newton_iterate<F: HessianField + ?Sized>(field: &F, x0: Vec2, rect: Rect, cfg: &NewtonConfig) -> NewtonResult {
    let margin = 1e-9 * (rect.width() + rect.height());
    let domain = field.domain();
    let mut x = x0;
    for it in 0..=cfg.i_max {
        let (f, g, h) = field.value_gradient_hessian(x);
        if !g.is_finite() {
            return NewtonResult::Failed;
        }
        if g.norm() < cfg.grad_tol {
            // a seed that is already stationary with a singular Hessian sits
            // in a flat region rather than at an isolated critical point
            if it == 0 && classify_hessian(h, cfg.degeneracy_tol) == CriticalKind::Degenerate {
                return NewtonResult::Singular;
            }
            if !domain.contains(x) {
                return NewtonResult::Failed;
            }
            return NewtonResult::Converged(CriticalPoint {
                position: x,
                value: f,
                kind: classify_hessian(h, cfg.degeneracy_tol),
            });
        }
        let Some(step) = h.solve(g) else {
            return NewtonResult::Singular;
        };
        x = x - step;
        if !rect.contains_with_margin(x, margin) {
            return NewtonResult::Failed;
        }
    }
    NewtonResult::Failed
}

/// Newton iteration from `x0`, confined to the span `rect`. Returns `None`
/// on divergence, on leaving the span or at a singular Hessian.
pub fn newton_refine<F: HessianField + ?Sized>(
    field: &F,
    x0: Vec2,
    rect: Rect,
    cfg: &NewtonConfig,
) -> Option<CriticalPoint> {
    match newton_iterate(field, x0, rect, cfg) {
        NewtonResult::Converged(c) => Some(c),
        _ => None,
    }
}

/// All critical points, searching the spans the field nominates (every span
/// if it cannot filter). Sorted lexicographically by position.
pub fn extract_critical_points<F, E>(field: &F, cfg: &NewtonConfig, exec: &E) -> CriticalPoints
where
    F: HessianField + ?Sized,
    E: SpanExecutor,
{
    let spans = field
        .critical_span_candidates()
        .unwrap_or_else(|| field.span_grid().iter().collect());
    extract_critical_points_in(field, &spans, cfg, exec)
}

/// [`extract_critical_points`] restricted to `spans`.
pub fn extract_critical_points_in<F, E>(field: &F, spans: &[SpanIndex], cfg: &NewtonConfig, exec: &E) -> CriticalPoints
where
    F: HessianField + ?Sized,
    E: SpanExecutor,
{
    let k = cfg.seeds_per_dim.unwrap_or(field.degree() + 3).max(1);
    let grid = field.span_grid();
    let per_span = exec.map_indexed(spans.len(), |n| {
        let rect = grid.rect(spans[n]);
        let mut found = Vec::new();
        let mut singular = 0usize;
        for a in 0..k {
            for b in 0..k {
                let x0 = Vec2::new(
                    lattice_coord(rect.min.x, rect.max.x, k, a),
                    lattice_coord(rect.min.y, rect.max.y, k, b),
                );
                match newton_iterate(field, x0, rect, cfg) {
                    NewtonResult::Converged(c) => found.push(c),
                    NewtonResult::Singular => singular += 1,
                    NewtonResult::Failed => {}
                }
            }
        }
        (found, singular)
    });

    let mut all = Vec::new();
    let mut singular_seeds = 0;
    for (found, singular) in per_span {
        all.extend(found);
        singular_seeds += singular;
    }
    let mut out = CriticalPoints { points: dedup_points(all, cfg.dedup_cell), warnings: Vec::new() };
    if out.points.is_empty() && !spans.is_empty() && singular_seeds == spans.len() * k * k {
        out.warnings.push(Warning::DegenerateField);
    }
    for c in &out.points {
        if c.kind == CriticalKind::Degenerate {
            out.warnings.push(Warning::DegenerateCritical { x: c.position.x, y: c.position.y });
        }
    }
    out
}

/// Sorts lexicographically and drops points within `cell` of an earlier
/// kept point.
pub fn dedup_points(mut points: Vec<CriticalPoint>, cell: f64) -> Vec<CriticalPoint> {
    points.sort_by(|a, b| a.position.lex_cmp(&b.position));
    let cell = if cell > 0.0 { cell } else { f64::MIN_POSITIVE };
    let key = |p: Vec2| (math::floor(p.x / cell) as i64, math::floor(p.y / cell) as i64);
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    let mut kept: Vec<CriticalPoint> = Vec::new();
    for c in points {
        let (kx, ky) = key(c.position);
        let mut dup = false;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = buckets.get(&(kx + dx, ky + dy)) {
                    if ids.iter().any(|&i| kept[i].position.dist(c.position) < cell) {
                        dup = true;
                        break 'scan;
                    }
                }
            }
        }
        if !dup {
            buckets.entry((kx, ky)).or_default().push(kept.len());
            kept.push(c);
        }
    }
    kept
}
