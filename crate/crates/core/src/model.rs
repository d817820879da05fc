//! Tensor-product B-spline models: knot vectors, basis functions, exact
//! derivative queries and least-squares fitting to gridded samples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{HessianField, JetField, Partials, ScalarField, SpanGrid, SpanIndex};
use crate::geom::{lattice_coord, Mat2, Rect, Vec2};
use crate::linalg::{Cholesky, SquareMatrix};

/// Highest supported polynomial degree. Basis evaluation works on stack
/// buffers of this size.
pub const MAX_DEGREE: usize = 10;
const BUF: usize = MAX_DEGREE + 1;

/// Clamped knot vector over `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
    /// Knot index `k` (with `t_k < t_{k+1}`) of every nonzero-width span.
    span_knots: Vec<usize>,
}

impl KnotVector {
    /// Validates and wraps a clamped knot vector.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::Knots(format!("degree {degree} outside 1..={MAX_DEGREE}")));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Knots(format!(
                "{} knots cannot hold a clamped degree-{degree} vector",
                knots.len()
            )));
        }
        if let Some(k) = knots.iter().position(|k| !k.is_finite() || *k < 0.0 || *k > 1.0) {
            return Err(Error::Knots(format!("knot {k} is not a finite value in [0, 1]")));
        }
        if let Some(k) = knots.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Knots(format!("knots decrease at index {}", k + 1)));
        }
        let n = knots.len();
        if knots[..=degree].iter().any(|k| *k != 0.0) || knots[n - degree - 1..].iter().any(|k| *k != 1.0) {
            return Err(Error::Knots(format!(
                "first and last {} knots must be 0 and 1",
                degree + 1
            )));
        }
        if let Some(k) = knots[degree + 1..n - degree - 1]
            .windows(degree + 1)
            .position(|w| w[0] == w[degree])
        {
            return Err(Error::Knots(format!(
                "interior knot at index {} repeats more than {degree} times",
                k + degree + 1
            )));
        }
        let span_knots = (degree..n - degree - 1).filter(|&k| knots[k] < knots[k + 1]).collect();
        Ok(KnotVector { degree, knots, span_knots })
    }

    /// Clamped knots with `n_spans` equal spans.
    pub fn clamped_uniform(degree: usize, n_spans: usize) -> Result<Self> {
        if n_spans == 0 {
            return Err(Error::Knots("at least one span is required".into()));
        }
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..n_spans).map(|i| i as f64 / n_spans as f64));
        knots.extend(core::iter::repeat_n(1.0, degree + 1));
        KnotVector::new(degree, knots)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of control points (basis functions).
    #[inline]
    pub fn n_ctrl(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    #[inline]
    pub fn n_spans(&self) -> usize {
        self.span_knots.len()
    }

    /// Parameter interval of span `i`.
    pub fn span_bounds(&self, i: usize) -> (f64, f64) {
        let k = self.span_knots[i];
        (self.knots[k], self.knots[k + 1])
    }

    /// Distinct breakpoints `0 = b_0 < b_1 < ... < b_n = 1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.span_knots.iter().map(|&k| self.knots[k]).collect();
        b.push(1.0);
        b
    }

    /// Span index containing `u`; interior knots belong to the lower span.
    /// Values outside `[0, 1]` are clamped to the boundary spans.
    pub fn span_index(&self, u: f64) -> usize {
        let n = self.span_knots.len();
        self.span_knots[1..n].partition_point(|&k| self.knots[k] < u)
    }

    /// Values of the `p + 1` active basis functions at `u` and their
    /// derivatives up to `order`.
    pub fn basis_values(&self, u: f64, order: usize) -> Result<BasisValues> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Parameter(u));
        }
        if order > self.degree {
            return Err(Error::Order { requested: order, supported: self.degree });
        }
        let k = self.span_knots[self.span_index(u)];
        let mut ders = [[0.0; BUF]; BUF];
        self.ders_basis(k, u, order, &mut ders);
        let ders = ders[..=order].iter().map(|row| row[..=self.degree].to_vec()).collect();
        Ok(BasisValues { first: k - self.degree, ders })
    }

    /// Basis functions and derivatives of the polynomial piece of knot span
    /// `k` (Piegl & Tiller, algorithm A2.3). `u` may lie outside the span; the
    /// piece is then extrapolated. Rows above `degree` are zeroed.
    fn ders_basis(&self, k: usize, u: f64, order: usize, ders: &mut [[f64; BUF]]) {
        let p = self.degree;
        let t = &self.knots;
        let mut ndu = [[0.0f64; BUF]; BUF];
        let mut left = [0.0f64; BUF];
        let mut right = [0.0f64; BUF];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - t[k + 1 - j];
            right[j] = t[k + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let n = order.min(p);
        let mut a = [[0.0f64; BUF]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for kk in 1..=n {
                let mut d = 0.0;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                core::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for kk in 1..=n {
            for j in 0..=p {
                ders[kk][j] *= fac;
            }
            fac *= (p - kk) as f64;
        }
        for row in ders.iter_mut().take(order + 1).skip(n + 1) {
            row[..=p].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Knot vector of the derivative spline (first and last knot dropped).
    pub fn derivative(&self) -> Result<KnotVector> {
        KnotVector::new(self.degree - 1, self.knots[1..self.knots.len() - 1].to_vec())
    }
}

/// Active basis functions at one parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisValues {
    /// Index of the first nonzero basis function.
    pub first: usize,
    /// `ders[k][j]`: k-th derivative of basis function `first + j`.
    pub ders: Vec<Vec<f64>>,
}

impl BasisValues {
    /// `(index, value)` pairs of the `order`-th derivatives.
    pub fn entries(&self, order: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.ders[order].iter().enumerate().map(move |(j, v)| (self.first + j, *v))
    }
}

/// Gridded scalar samples over a rectangular domain. `values[ix * ny + iy]`
/// is the sample at the `ix`-th x1 coordinate and `iy`-th x2 coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    domain: Rect,
}

impl GridData {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>, domain: Rect) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Dimension(format!("grid {nx}x{ny} needs at least 2 samples per axis")));
        }
        if values.len() != nx * ny {
            return Err(Error::Dimension(format!(
                "grid {nx}x{ny} expects {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dimension(format!("sample {k} is not finite")));
        }
        if !domain.is_valid() {
            return Err(Error::Dimension("grid domain must have positive extent".into()));
        }
        Ok(GridData { nx, ny, values, domain })
    }

    /// Samples `f` on an `nx x ny` lattice covering `domain`.
    pub fn sample(nx: usize, ny: usize, domain: Rect, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            let x = lattice_coord(domain.min.x, domain.max.x, nx, ix);
            for iy in 0..ny {
                let y = lattice_coord(domain.min.y, domain.max.y, ny, iy);
                values.push(f(Vec2::new(x, y)));
            }
        }
        GridData::new(nx, ny, values, domain)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }

    pub fn position(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            lattice_coord(self.domain.min.x, self.domain.max.x, self.nx, ix),
            lattice_coord(self.domain.min.y, self.domain.max.y, self.ny, iy),
        )
    }
}

/// Row-major grid of control values (`rows` along x1).
#[derive(Clone, Debug, PartialEq)]
pub struct ControlGrid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ControlGrid {
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }
}

/// Result of [`MfaModel::fit`].
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub model: MfaModel,
    /// Root-mean-square residual over the input samples.
    pub rms: f64,
    /// Worst condition estimate of the two normal systems.
    pub condition: f64,
    /// A ridge term had to be added to a singular normal system.
    pub regularized: bool,
}

/// A 2D tensor-product B-spline over a physical rectangle.
///
/// The rectangle maps affinely onto the parameter square; all derivatives
/// are returned with respect to physical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MfaModel {
    knots_u: KnotVector,
    knots_v: KnotVector,
    ctrl: ControlGrid,
    domain: Rect,
    spans: SpanGrid,
}

impl MfaModel {
    pub fn new(knots_u: KnotVector, knots_v: KnotVector, ctrl: ControlGrid, domain: Rect) -> Result<Self> {
        if knots_u.degree() != knots_v.degree() {
            return Err(Error::Knots("both knot vectors must share one degree".into()));
        }
        if ctrl.rows != knots_u.n_ctrl() || ctrl.cols != knots_v.n_ctrl() {
            return Err(Error::Dimension(format!(
                "control grid {}x{} does not match knot vectors ({}x{})",
                ctrl.rows,
                ctrl.cols,
                knots_u.n_ctrl(),
                knots_v.n_ctrl()
            )));
        }
        if ctrl.values.len() != ctrl.rows * ctrl.cols {
            return Err(Error::Dimension(format!(
                "control grid {}x{} holds {} values",
                ctrl.rows,
                ctrl.cols,
                ctrl.values.len()
            )));
        }
        if let Some(k) = ctrl.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dimension(format!("control point {k} is not finite")));
        }
        if !domain.is_valid() {
            return Err(Error::Dimension("model domain must have positive extent".into()));
        }
        let map = |lo: f64, w: f64, b: Vec<f64>| -> Vec<f64> {
            let n = b.len();
            b.into_iter()
                .enumerate()
                .map(|(i, t)| if i + 1 == n { lo + w } else { lo + w * t })
                .collect()
        };
        let spans = SpanGrid::new(
            map(domain.min.x, domain.width(), knots_u.breakpoints()),
            map(domain.min.y, domain.height(), knots_v.breakpoints()),
        )?;
        Ok(MfaModel { knots_u, knots_v, ctrl, domain, spans })
    }

    /// Least-squares fit of a degree-`degree` model with `n1 x n2` control
    /// points and clamped uniform knots. Samples are parameterized uniformly
    /// over the unit square.
    pub fn fit(data: &GridData, degree: usize, n1: usize, n2: usize) -> Result<FitOutcome> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::Config(format!("degree {degree} outside 1..={MAX_DEGREE}")));
        }
        if n1 < degree + 1 || n2 < degree + 1 {
            return Err(Error::Dimension(format!(
                "{n1}x{n2} control points cannot carry degree {degree}"
            )));
        }
        if n1 > data.nx || n2 > data.ny {
            return Err(Error::Dimension(format!(
                "{n1}x{n2} control points exceed the {}x{} samples",
                data.nx, data.ny
            )));
        }
        let ku = KnotVector::clamped_uniform(degree, n1 - degree)?;
        let kv = KnotVector::clamped_uniform(degree, n2 - degree)?;
        let bu = collocation(&ku, data.nx);
        let bv = collocation(&kv, data.ny);
        let (chol_u, cond_u, reg_u) = factor_normal(&ku, &bu)?;
        let (chol_v, cond_v, reg_v) = factor_normal(&kv, &bv)?;
        let (nx, ny) = (data.nx, data.ny);
        let p = degree;

        // X = N_u^-1 B_uᵀ F   (n1 x ny)
        let mut x = vec![0.0; n1 * ny];
        for (ix, (first, row)) in bu.iter().enumerate() {
            for a in 0..=p {
                let w = row[a];
                if w == 0.0 {
                    continue;
                }
                let dst = &mut x[(first + a) * ny..(first + a + 1) * ny];
                let src = &data.values[ix * ny..(ix + 1) * ny];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        let mut col = vec![0.0; n1];
        for iy in 0..ny {
            for r in 0..n1 {
                col[r] = x[r * ny + iy];
            }
            chol_u.solve_in_place(&mut col);
            for r in 0..n1 {
                x[r * ny + iy] = col[r];
            }
        }
        // P = X B_v N_v^-1   (n1 x n2)
        let mut ctrl = vec![0.0; n1 * n2];
        for r in 0..n1 {
            let row_p = &mut ctrl[r * n2..(r + 1) * n2];
            for (iy, (first, basis)) in bv.iter().enumerate() {
                let xv = x[r * ny + iy];
                for b in 0..=p {
                    row_p[first + b] += xv * basis[b];
                }
            }
            chol_v.solve_in_place(row_p);
        }
        let ctrl = ControlGrid { rows: n1, cols: n2, values: ctrl };

        let mut sq = 0.0;
        for (ix, (fu, ru)) in bu.iter().enumerate() {
            for (iy, (fv, rv)) in bv.iter().enumerate() {
                let mut s = 0.0;
                for a in 0..=p {
                    for b in 0..=p {
                        s += ru[a] * rv[b] * ctrl.at(fu + a, fv + b);
                    }
                }
                let d = s - data.at(ix, iy);
                sq += d * d;
            }
        }
        let rms = crate::math::sqrt(sq / (nx * ny) as f64);
        let model = MfaModel::new(ku, kv, ctrl, data.domain)?;
        Ok(FitOutcome {
            model,
            rms,
            condition: cond_u.max(cond_v),
            regularized: reg_u || reg_v,
        })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.knots_u.degree()
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn ctrl(&self) -> &ControlGrid {
        &self.ctrl
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn spans(&self) -> &SpanGrid {
        &self.spans
    }

    /// Number of spans along x1 and x2.
    pub fn n_spans(&self) -> (usize, usize) {
        (self.knots_u.n_spans(), self.knots_v.n_spans())
    }

    /// Same knot vectors and domain.
    pub fn shares_layout(&self, other: &MfaModel) -> bool {
        self.knots_u == other.knots_u && self.knots_v == other.knots_v && self.domain == other.domain
    }

    #[inline]
    fn to_param(&self, x: Vec2) -> (f64, f64) {
        (
            (x.x - self.domain.min.x) / self.domain.width(),
            (x.y - self.domain.min.y) / self.domain.height(),
        )
    }

    /// `∂^(d1+d2) f / ∂x1^d1 ∂x2^d2` at physical point `x`.
    pub fn evaluate(&self, x: Vec2, d1: usize, d2: usize) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::Domain { x: x.x, y: x.y });
        }
        let order = d1 + d2;
        if order > 3 || order > self.degree() {
            return Err(Error::Order { requested: order, supported: self.degree().min(3) });
        }
        let mut out = [[0.0; 4]; 4];
        self.derivatives_into(x, order, &mut out);
        Ok(out[d1][d2])
    }

    /// Span containing `x`; see [`SpanGrid::locate`] for tie-breaking.
    pub fn span_of(&self, x: Vec2) -> Result<SpanIndex> {
        self.spans.locate(x).ok_or(Error::Domain { x: x.x, y: x.y })
    }

    /// Fills `out[k][l] = ∂^(k+l) f / ∂x1^k ∂x2^l` for `k + l <= order`
    /// (`order <= 3`) using the polynomial piece of the nearest span.
    fn derivatives_into(&self, x: Vec2, order: usize, out: &mut [[f64; 4]; 4]) {
        let p = self.degree();
        let (u, v) = self.to_param(x);
        let ku = self.knots_u.span_knots[self.knots_u.span_index(u)];
        let kv = self.knots_v.span_knots[self.knots_v.span_index(v)];
        let mut du = [[0.0; BUF]; 4];
        let mut dv = [[0.0; BUF]; 4];
        self.knots_u.ders_basis(ku, u, order, &mut du);
        self.knots_v.ders_basis(kv, v, order, &mut dv);
        let (fu, fv) = (ku - p, kv - p);
        // t[l][a] = Σ_b dv[l][b] P[fu + a][fv + b]
        let mut t = [[0.0; BUF]; 4];
        for a in 0..=p {
            let row = &self.ctrl.values[(fu + a) * self.ctrl.cols + fv..][..=p];
            for l in 0..=order {
                let mut s = 0.0;
                for b in 0..=p {
                    s += dv[l][b] * row[b];
                }
                t[l][a] = s;
            }
        }
        let su = 1.0 / self.domain.width();
        let sv = 1.0 / self.domain.height();
        let mut scale_u = 1.0;
        for k in 0..=order {
            let mut scale_v = 1.0;
            for l in 0..=(order - k) {
                let mut s = 0.0;
                for a in 0..=p {
                    s += du[k][a] * t[l][a];
                }
                out[k][l] = s * scale_u * scale_v;
                scale_v *= sv;
            }
            scale_u *= su;
        }
    }

    /// Control points of the first-derivative spline along `dim` (1 = x1,
    /// 2 = x2), scaled to physical units.
    pub fn derivative_control_points(&self, dim: usize) -> Result<ControlGrid> {
        let p = self.degree() as f64;
        let (rows, cols) = (self.ctrl.rows, self.ctrl.cols);
        match dim {
            1 => {
                let t = self.knots_u.knots();
                let w = self.domain.width();
                let mut values = Vec::with_capacity((rows - 1) * cols);
                for i in 0..rows - 1 {
                    let den = (t[i + self.degree() + 1] - t[i + 1]) * w;
                    for j in 0..cols {
                        values.push(p * (self.ctrl.at(i + 1, j) - self.ctrl.at(i, j)) / den);
                    }
                }
                Ok(ControlGrid { rows: rows - 1, cols, values })
            }
            2 => {
                let t = self.knots_v.knots();
                let w = self.domain.height();
                let mut values = Vec::with_capacity(rows * (cols - 1));
                for i in 0..rows {
                    for j in 0..cols - 1 {
                        let den = (t[j + self.degree() + 1] - t[j + 1]) * w;
                        values.push(p * (self.ctrl.at(i, j + 1) - self.ctrl.at(i, j)) / den);
                    }
                }
                Ok(ControlGrid { rows, cols: cols - 1, values })
            }
            _ => Err(Error::Config(format!("dimension {dim} is not 1 or 2"))),
        }
    }

    /// Range of the control points that influence `span`. The model stays
    /// inside this range over the span (convex hull property).
    pub fn local_range(&self, span: SpanIndex) -> (f64, f64) {
        let p = self.degree();
        let fu = self.knots_u.span_knots[span.i] - p;
        let fv = self.knots_v.span_knots[span.j] - p;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in 0..=p {
            for b in 0..=p {
                let c = self.ctrl.at(fu + a, fv + b);
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        (lo, hi)
    }

    /// First control-point index (per axis) active on `span`.
    pub(crate) fn span_first_ctrl(&self, span: SpanIndex) -> (usize, usize) {
        let p = self.degree();
        (self.knots_u.span_knots[span.i] - p, self.knots_v.span_knots[span.j] - p)
    }
}

/// Sparse collocation rows `(first, values)` at uniform parameters.
fn collocation(kv: &KnotVector, m: usize) -> Vec<(usize, [f64; BUF])> {
    let p = kv.degree();
    (0..m)
        .map(|i| {
            let u = if i + 1 == m { 1.0 } else { i as f64 / (m - 1) as f64 };
            let k = kv.span_knots[kv.span_index(u)];
            let mut d = [[0.0; BUF]; 1];
            kv.ders_basis(k, u, 0, &mut d);
            (k - p, d[0])
        })
        .collect()
}

fn factor_normal(kv: &KnotVector, rows: &[(usize, [f64; BUF])]) -> Result<(Cholesky, f64, bool)> {
    let n = kv.n_ctrl();
    let p = kv.degree();
    let mut a = SquareMatrix::zeros(n);
    for (first, r) in rows {
        for i in 0..=p {
            for j in 0..=p {
                *a.at_mut(first + i, first + j) += r[i] * r[j];
            }
        }
    }
    if let Some(c) = Cholesky::factor(&a) {
        let cond = c.condition_estimate();
        return Ok((c, cond, false));
    }
    let ridge = 1e-12 * a.trace() / n as f64;
    for i in 0..n {
        *a.at_mut(i, i) += ridge;
    }
    match Cholesky::factor(&a) {
        Some(c) => {
            let cond = c.condition_estimate();
            Ok((c, cond, true))
        }
        None => Err(Error::SingularFit { condition: f64::INFINITY }),
    }
}

impl ScalarField for MfaModel {
    fn span_grid(&self) -> &SpanGrid {
        &self.spans
    }

    fn degree(&self) -> usize {
        self.knots_u.degree()
    }

    fn value_gradient(&self, x: Vec2) -> (f64, Vec2) {
        let mut out = [[0.0; 4]; 4];
        self.derivatives_into(x, 1, &mut out);
        (out[0][0], Vec2::new(out[1][0], out[0][1]))
    }

    fn value(&self, x: Vec2) -> f64 {
        let mut out = [[0.0; 4]; 4];
        self.derivatives_into(x, 0, &mut out);
        out[0][0]
    }

    fn may_cross_level(&self, span: SpanIndex, level: f64) -> bool {
        let (lo, hi) = self.local_range(span);
        lo <= level && level <= hi
    }

    fn critical_span_candidates(&self) -> Option<Vec<SpanIndex>> {
        Some(crate::critical::filter_spans(self))
    }
}

impl HessianField for MfaModel {
    fn value_gradient_hessian(&self, x: Vec2) -> (f64, Vec2, Mat2) {
        let mut out = [[0.0; 4]; 4];
        self.derivatives_into(x, 2.min(self.degree()), &mut out);
        (
            out[0][0],
            Vec2::new(out[1][0], out[0][1]),
            Mat2::new(out[2][0], out[1][1], out[0][2]),
        )
    }
}

impl JetField for MfaModel {
    fn partials(&self, x: Vec2) -> Partials {
        let mut o = [[0.0; 4]; 4];
        self.derivatives_into(x, 3.min(self.degree()), &mut o);
        Partials {
            f: o[0][0],
            fx: o[1][0],
            fy: o[0][1],
            fxx: o[2][0],
            fxy: o[1][1],
            fyy: o[0][2],
            fxxx: o[3][0],
            fxxy: o[2][1],
            fxyy: o[1][2],
            fyyy: o[0][3],
        }
    }

    fn max_derivative_order(&self) -> usize {
        self.degree()
    }
}
