//! Contours, Jacobi sets and ridge-valley graphs as level sets of (derived)
//! fields.

use alloc::vec::Vec;

use crate::critical::{extract_critical_points, CriticalPoint, NewtonConfig};
use crate::error::{Error, Result, Warning};
use crate::exec::SpanExecutor;
use crate::field::{HessianField, JetField, ScalarField, SpanGrid};
use crate::geom::{lattice_coord, Mat2, Vec2};
use crate::graph::{TopoGraph, VertexKind};
use crate::math;
use crate::tracer::{extract_level_set, TraceConfig, GEOMETRIC_TOLERANCE};

/// `|f_mm|` or `|g_mm|` below this leaves a point unclassified.
pub const CLASS_TOLERANCE: f64 = 1e-9;

/// Ridge-valley classification of a point or arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcClass {
    Ridge = 0,
    Valley = 1,
    PseudoRidge = 2,
    PseudoValley = 3,
    Unclassified = 4,
}

impl ArcClass {
    pub const ALL: [ArcClass; 5] = [
        ArcClass::Ridge,
        ArcClass::Valley,
        ArcClass::PseudoRidge,
        ArcClass::PseudoValley,
        ArcClass::Unclassified,
    ];

    pub fn from_index(i: usize) -> Self {
        ArcClass::ALL.get(i).copied().unwrap_or(ArcClass::Unclassified)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ArcClass::Ridge => "ridge",
            ArcClass::Valley => "valley",
            ArcClass::PseudoRidge => "pseudo-ridge",
            ArcClass::PseudoValley => "pseudo-valley",
            ArcClass::Unclassified => "unclassified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ArcClass::ALL.iter().copied().find(|c| c.as_str() == s)
    }

    /// Maps the signs of `f_mm` and `g_mm`.
    pub fn from_signs(f_mm: f64, g_mm: f64) -> Self {
        if !(math::abs(f_mm) >= CLASS_TOLERANCE && math::abs(g_mm) >= CLASS_TOLERANCE) {
            return ArcClass::Unclassified;
        }
        match (f_mm > 0.0, g_mm > 0.0) {
            (false, true) => ArcClass::Ridge,
            (true, true) => ArcClass::Valley,
            (false, false) => ArcClass::PseudoRidge,
            (true, false) => ArcClass::PseudoValley,
        }
    }
}

/// `h = f_x g_y - f_y g_x`, whose zero set is the Jacobi set of `f` and `g`.
#[derive(Clone, Copy, Debug)]
pub struct DerivedFieldH<F, G> {
    f: F,
    g: G,
}

impl<F: JetField, G: JetField> DerivedFieldH<F, G> {
    pub fn new(f: F, g: G) -> Result<Self> {
        if f.span_grid() != g.span_grid() {
            return Err(Error::MismatchedModels);
        }
        Ok(DerivedFieldH { f, g })
    }

    pub fn f(&self) -> &F {
        &self.f
    }

    pub fn g(&self) -> &G {
        &self.g
    }

    pub fn hessian(&self, x: Vec2) -> Mat2 {
        self.value_gradient_hessian(x).2
    }
}

impl<F: JetField, G: JetField> ScalarField for DerivedFieldH<F, G> {
    fn span_grid(&self) -> &SpanGrid {
        self.f.span_grid()
    }

    fn degree(&self) -> usize {
        (self.f.degree() + self.g.degree()).saturating_sub(1)
    }

    fn value_gradient(&self, x: Vec2) -> (f64, Vec2) {
        let (v, g, _) = self.value_gradient_hessian(x);
        (v, g)
    }

    fn value(&self, x: Vec2) -> f64 {
        let (_, df) = self.f.value_gradient(x);
        let (_, dg) = self.g.value_gradient(x);
        df.x * dg.y - df.y * dg.x
    }
}

impl<F: JetField, G: JetField> HessianField for DerivedFieldH<F, G> {
    fn value_gradient_hessian(&self, x: Vec2) -> (f64, Vec2, Mat2) {
        let f = self.f.partials(x);
        let g = self.g.partials(x);
        let h = f.fx * g.fy - f.fy * g.fx;
        let hx = f.fxx * g.fy + f.fx * g.fxy - f.fxy * g.fx - f.fy * g.fxx;
        let hy = f.fxy * g.fy + f.fx * g.fyy - f.fyy * g.fx - f.fy * g.fxy;
        let hxx = f.fxxx * g.fy + 2.0 * f.fxx * g.fxy + f.fx * g.fxxy
            - f.fxxy * g.fx
            - 2.0 * f.fxy * g.fxx
            - f.fy * g.fxxx;
        let hxy = f.fxxy * g.fy + f.fxx * g.fyy + f.fx * g.fxyy
            - f.fxyy * g.fx
            - f.fyy * g.fxx
            - f.fy * g.fxxy;
        let hyy = f.fxyy * g.fy + 2.0 * f.fxy * g.fyy + f.fx * g.fyyy
            - f.fyyy * g.fx
            - 2.0 * f.fyy * g.fxy
            - f.fy * g.fxyy;
        (h, Vec2::new(hx, hy), Mat2::new(hxx, hxy, hyy))
    }
}

/// `h~ = 2((f_x^2 - f_y^2) f_xy + f_x f_y (f_yy - f_xx))`, whose zero set is
/// the Jacobi set of `f` and `|grad f|^2`.
#[derive(Clone, Copy, Debug)]
pub struct DerivedFieldHTilde<F> {
    f: F,
}

impl<F: JetField> DerivedFieldHTilde<F> {
    pub fn new(f: F) -> Self {
        DerivedFieldHTilde { f }
    }

    pub fn f(&self) -> &F {
        &self.f
    }
}

impl<F: JetField> ScalarField for DerivedFieldHTilde<F> {
    fn span_grid(&self) -> &SpanGrid {
        self.f.span_grid()
    }

    fn degree(&self) -> usize {
        (3 * self.f.degree()).saturating_sub(1)
    }

    fn value_gradient(&self, x: Vec2) -> (f64, Vec2) {
        let p = self.f.partials(x);
        let a = p.fx * p.fx - p.fy * p.fy;
        let b = p.fyy - p.fxx;
        let v = 2.0 * (a * p.fxy + p.fx * p.fy * b);
        let ax = 2.0 * (p.fx * p.fxx - p.fy * p.fxy);
        let ay = 2.0 * (p.fx * p.fxy - p.fy * p.fyy);
        let gx = ax * p.fxy + a * p.fxxy + (p.fxx * p.fy + p.fx * p.fxy) * b + p.fx * p.fy * (p.fxyy - p.fxxx);
        let gy = ay * p.fxy + a * p.fxyy + (p.fxy * p.fy + p.fx * p.fyy) * b + p.fx * p.fy * (p.fyyy - p.fxxy);
        (v, Vec2::new(2.0 * gx, 2.0 * gy))
    }

    fn value(&self, x: Vec2) -> f64 {
        let (_, g, h) = self.f.value_gradient_hessian(x);
        2.0 * ((g.x * g.x - g.y * g.y) * h.xy + g.x * g.y * (h.yy - h.xx))
    }
}

/// Hessian of `g = |grad f|^2`.
pub fn gradient_norm_hessian<F: JetField + ?Sized>(f: &F, x: Vec2) -> Mat2 {
    let p = f.partials(x);
    Mat2::new(
        2.0 * (p.fxx * p.fxx + p.fxxx * p.fx + p.fxy * p.fxy + p.fxxy * p.fy),
        2.0 * (p.fxx * p.fxy + p.fxxy * p.fx + p.fxy * p.fyy + p.fxyy * p.fy),
        2.0 * (p.fxy * p.fxy + p.fxyy * p.fx + p.fyy * p.fyy + p.fyyy * p.fy),
    )
}

/// Classifies a point by the second directional derivatives of `f` and
/// `|grad f|^2` along the level-set tangent of `f`.
pub fn classify_rv<F: JetField + ?Sized>(f: &F, x: Vec2, min_grad: f64) -> ArcClass {
    let p = f.partials(x);
    let grad = p.gradient();
    let n = grad.norm();
    if !(n > min_grad) {
        return ArcClass::Unclassified;
    }
    let m = grad.perp() * (1.0 / n);
    let f_mm = p.hessian().quad_form(m);
    let g_mm = gradient_norm_hessian(f, x).quad_form(m);
    ArcClass::from_signs(f_mm, g_mm)
}

/// An extracted graph together with the critical points inserted into it.
#[derive(Clone, Debug, Default)]
pub struct Extraction {
    pub graph: TopoGraph,
    pub criticals: Vec<CriticalPoint>,
    pub n_trajectories: usize,
    pub warnings: Vec<Warning>,
}

/// Whether the critical point `c` lies on `f = a`: `|f(c) - a| < epsilon`,
/// and the level set is reachable from `c` within a small fraction of the
/// step according to the second-order model at `c`.
fn on_level<F: HessianField + ?Sized>(f: &F, c: &CriticalPoint, a: f64, cfg: &TraceConfig) -> bool {
    let r = math::abs(c.value - a);
    if !(r < cfg.epsilon) {
        return false;
    }
    let (_, _, hess) = f.value_gradient_hessian(c.position);
    let curvature = math::sqrt(hess.xx * hess.xx + 2.0 * hess.xy * hess.xy + hess.yy * hess.yy);
    let reach = GEOMETRIC_TOLERANCE * cfg.step;
    r <= 0.5 * curvature * reach * reach
}

fn newton_config(cfg: &TraceConfig) -> NewtonConfig {
    NewtonConfig::default().with_dedup_cell(cfg.step)
}

fn require_order<F: JetField + ?Sized>(f: &F, order: usize) -> Result<()> {
    if f.max_derivative_order() < order {
        return Err(Error::Order { requested: order, supported: f.max_derivative_order() });
    }
    Ok(())
}

/// Fails with [`Error::DegenerateField`] when `|field| < epsilon` at every
/// seed of every span.
fn check_not_degenerate<F: ScalarField + ?Sized>(field: &F, cfg: &TraceConfig) -> Result<()> {
    let grid = field.span_grid();
    let k = cfg.seeds_per_dim.unwrap_or(field.degree() + 3).max(1);
    for span in grid.iter() {
        let r = grid.rect(span);
        for a in 0..k {
            for b in 0..k {
                let x = Vec2::new(lattice_coord(r.min.x, r.max.x, k, a), lattice_coord(r.min.y, r.max.y, k, b));
                if !(math::abs(field.value(x)) < cfg.epsilon) {
                    return Ok(());
                }
            }
        }
    }
    Err(Error::DegenerateField)
}

fn run<F, E>(field: &F, a: f64, criticals: Vec<CriticalPoint>, mut warnings: Vec<Warning>, cfg: &TraceConfig, exec: &E) -> Result<Extraction>
where
    F: ScalarField + ?Sized,
    E: SpanExecutor,
{
    let out = extract_level_set(field, a, &criticals, cfg, exec)?;
    warnings.extend(out.warnings);
    Ok(Extraction { graph: out.graph, criticals, n_trajectories: out.trajectories.len(), warnings })
}

/// The isocontour `f = a` with the critical points of `f` lying on it.
pub fn extract_contour<F, E>(f: &F, a: f64, cfg: &TraceConfig, exec: &E) -> Result<Extraction>
where
    F: HessianField + ?Sized,
    E: SpanExecutor,
{
    cfg.validate(f.span_grid().min_span_length())?;
    let cps = extract_critical_points(f, &newton_config(cfg), exec);
    let criticals: Vec<CriticalPoint> = cps.points.into_iter().filter(|c| on_level(f, c, a, cfg)).collect();
    run(f, a, criticals, Vec::new(), cfg, exec)
}

/// The Jacobi set of `f` and `g`, traced as the zero set of `h`.
pub fn extract_jacobi<F, G, E>(f: F, g: G, cfg: &TraceConfig, exec: &E) -> Result<Extraction>
where
    F: JetField,
    G: JetField,
    E: SpanExecutor,
{
    require_order(&f, 3)?;
    require_order(&g, 3)?;
    let h = DerivedFieldH::new(f, g)?;
    cfg.validate(h.span_grid().min_span_length())?;
    check_not_degenerate(&h, cfg)?;
    let cps = extract_critical_points(&h, &newton_config(cfg), exec);
    let criticals: Vec<CriticalPoint> = cps.points.into_iter().filter(|c| on_level(&h, c, 0.0, cfg)).collect();
    run(&h, 0.0, criticals, Vec::new(), cfg, exec)
}

/// The ridge-valley graph of `f`: the zero set of `h~` plus every critical
/// point of `f`, with per-vertex labels.
pub fn extract_ridge_valley<F, E>(f: F, cfg: &TraceConfig, exec: &E) -> Result<Extraction>
where
    F: JetField,
    E: SpanExecutor,
{
    require_order(&f, 3)?;
    let ht = DerivedFieldHTilde::new(f);
    cfg.validate(ht.span_grid().min_span_length())?;
    check_not_degenerate(&ht, cfg)?;
    let cps = extract_critical_points(ht.f(), &newton_config(cfg), exec);
    let mut criticals = cps.points;
    for c in &mut criticals {
        // stored value is the traced field, i.e. h~ at the point
        c.value = ht.value(c.position);
    }
    let mut out = run(&ht, 0.0, criticals, cps.warnings, cfg, exec)?;
    let labels = out
        .graph
        .vertices()
        .iter()
        .map(|v| match v.kind {
            VertexKind::Regular => classify_rv(ht.f(), v.position, cfg.min_grad),
            VertexKind::Critical(_) => ArcClass::Unclassified,
        })
        .collect();
    out.graph.set_labels(labels);
    Ok(out)
}
