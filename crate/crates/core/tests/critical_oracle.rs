mod common;

use mfa_topo_core::critical::{extract_critical_points, filter_spans, CriticalKind, NewtonConfig};
use mfa_topo_core::exec::Sequential;
use mfa_topo_core::field::ScalarField;
use mfa_topo_core::synthetic::AnalyticField;
use mfa_topo_core::{MfaModel, Vec2};

/// Critical coordinates of the one-dimensional least-squares quartic spline
/// fit of `sin(5x)/x` (27 spans on `[-2 pi, 2 pi]`, 217 samples), found by
/// bracketed root finding on its derivative with an independent spline
/// library; `true` marks maxima. The fitted Sinc model is the sum of this
/// spline in each coordinate.
const SINC_FIT_AXIS: [(f64, bool); 19] = [
    (-5.962472442961287, false),
    (-5.328541766220825, true),
    (-4.699868802878184, false),
    (-4.096463896497997, true),
    (-3.424060803999008, false),
    (-2.816518566568592, true),
    (-2.194634653648335, false),
    (-1.5300871553378617, true),
    (-0.9106109059879071, false),
    (0.0, true),
    (0.9106109059879072, false),
    (1.5300871553378619, true),
    (2.194634653648335, false),
    (2.816518566568592, true),
    (3.4240608039990077, false),
    (4.096463896497997, true),
    (4.699868802878184, false),
    (5.328541766220824, true),
    (5.962472442961288, false),
];

/// Nonzero roots of `tan(5x) = 5x` on `(0, 2 pi]`: critical coordinates of
/// the closed-form `sin(5x)/x`.
const SINC_ROOTS: [f64; 9] = [
    0.8986818915818127,
    1.5450503673875415,
    2.1808243318857796,
    2.8132387825662946,
    3.4441510543861535,
    4.074260591857513,
    4.703890499737801,
    5.3332108517625345,
    5.962319758178592,
];

fn grad_norm(m: &MfaModel, x: Vec2) -> f64 {
    m.value_gradient(x).1.norm()
}

/// Critical points of `m` from a dense `n x n` scan of `|grad f|`, each
/// local minimum refined by repeated grid zooming.
fn dense_scan(m: &MfaModel, n: usize) -> Vec<Vec2> {
    let d = m.domain();
    let (hx, hy) = ((d.max.x - d.min.x) / (n - 1) as f64, (d.max.y - d.min.y) / (n - 1) as f64);
    let at = |i: usize, j: usize| Vec2::new(d.min.x + hx * i as f64, d.min.y + hy * j as f64);
    let g: Vec<f64> = (0..n * n).map(|k| grad_norm(m, at(k / n, k % n))).collect();
    let mut out: Vec<Vec2> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = g[i * n + j];
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                        continue;
                    }
                    if g[a as usize * n + b as usize] < v {
                        is_min = false;
                    }
                }
            }
            if !is_min {
                continue;
            }
            let mut c = at(i, j);
            let (mut wx, mut wy) = (hx, hy);
            for _ in 0..45 {
                let mut best = (grad_norm(m, c), c);
                for a in -5..=5 {
                    for b in -5..=5 {
                        let p = Vec2::new(
                            (c.x + wx * a as f64 / 5.0).clamp(d.min.x, d.max.x),
                            (c.y + wy * b as f64 / 5.0).clamp(d.min.y, d.max.y),
                        );
                        let v = grad_norm(m, p);
                        if v < best.0 {
                            best = (v, p);
                        }
                    }
                }
                c = best.1;
                wx *= 0.5;
                wy *= 0.5;
            }
            if grad_norm(m, c) < 1e-7 && out.iter().all(|q| q.dist(c) > 1e-4) {
                out.push(c);
            }
        }
    }
    out
}

#[test]
fn sinc_critical_points_match_one_dimensional_oracle() {
    let m = common::fit_reference(AnalyticField::Sinc);
    let cps = extract_critical_points(&m, &NewtonConfig::default(), &Sequential);
    assert_eq!(cps.points.len(), SINC_FIT_AXIS.len() * SINC_FIT_AXIS.len());
    for &(x, mx) in &SINC_FIT_AXIS {
        for &(y, my) in &SINC_FIT_AXIS {
            let p = Vec2::new(x, y);
            let c = cps.points.iter().min_by(|a, b| a.position.dist(p).total_cmp(&b.position.dist(p))).unwrap();
            assert!(c.position.dist(p) < 1e-9, "({x}, {y}) nearest {:?}", c.position);
            let kind = match (mx, my) {
                (true, true) => CriticalKind::Maximum,
                (false, false) => CriticalKind::Minimum,
                _ => CriticalKind::Saddle,
            };
            assert_eq!(c.kind, kind, "at ({x}, {y})");
        }
    }
}

#[test]
fn sinc_critical_points_track_the_closed_form() {
    // one model critical point of the same kind per closed-form one; roots
    // are about 0.63 apart, so a quarter of that identifies them uniquely
    let m = common::fit_reference(AnalyticField::Sinc);
    let cps = extract_critical_points(&m, &NewtonConfig::default(), &Sequential);
    let mut axis = vec![(0.0, true)];
    for r in SINC_ROOTS {
        let is_max = (5.0 * r).sin() / r > 0.0;
        axis.extend([(r, is_max), (-r, is_max)]);
    }
    for &(x, mx) in &axis {
        for &(y, my) in &axis {
            let p = Vec2::new(x, y);
            let near: Vec<_> = cps.points.iter().filter(|c| c.position.dist(p) < 0.16).collect();
            assert_eq!(near.len(), 1, "({x}, {y})");
            let kind = match (mx, my) {
                (true, true) => CriticalKind::Maximum,
                (false, false) => CriticalKind::Minimum,
                _ => CriticalKind::Saddle,
            };
            assert_eq!(near[0].kind, kind, "at ({x}, {y})");
        }
    }
}

#[test]
fn sinc_matches_dense_scan_and_filtration_keeps_them() {
    let m = common::fit_reference(AnalyticField::Sinc);
    let oracle = dense_scan(&m, 1000);
    let cps = extract_critical_points(&m, &NewtonConfig::default(), &Sequential);
    assert_eq!(oracle.len(), cps.points.len());
    for q in &oracle {
        let near = cps.points.iter().map(|c| c.position.dist(*q)).fold(f64::INFINITY, f64::min);
        assert!(near < 1e-6, "oracle point {q:?} off by {near}");
    }
    let kept = filter_spans(&m);
    for q in &oracle {
        let s = m.span_of(*q).unwrap();
        // a point on a span edge may be claimed by either neighbour
        let r = m.span_grid().rect(s);
        let edge = (q.x - r.min.x).min(r.max.x - q.x).min(q.y - r.min.y).min(r.max.y - q.y);
        let near_edge = edge < 1e-9;
        assert!(kept.contains(&s) || near_edge, "span {s:?} holding {q:?} was filtered out");
    }
}

#[test]
fn gaussian_mixture_count_matches_dense_scan() {
    let m = common::fit_reference(AnalyticField::GaussianMixture);
    let oracle = dense_scan(&m, 1000);
    let cps = extract_critical_points(&m, &NewtonConfig::default(), &Sequential);
    assert_eq!(cps.points.len(), oracle.len(), "{:?}", cps.points);
}
