use mfa_topo_core::features::{classify_rv, ArcClass, DerivedFieldH, DerivedFieldHTilde};
use mfa_topo_core::field::{HessianField, ScalarField};
use mfa_topo_core::model::ControlGrid;
use mfa_topo_core::{KnotVector, MfaModel, Rect, Vec2};
use proptest::prelude::*;

fn model(ctrl: &[f64], scale: f64) -> MfaModel {
    let ku = KnotVector::clamped_uniform(4, 3).unwrap();
    let kv = KnotVector::clamped_uniform(4, 4).unwrap();
    let (rows, cols) = (ku.n_ctrl(), kv.n_ctrl());
    let values = ctrl.iter().copied().cycle().take(rows * cols).map(|v| scale * v).collect();
    MfaModel::new(ku, kv, ControlGrid { rows, cols, values }, Rect::from_bounds(0.0, 1.5, -1.0, 1.0)).unwrap()
}

fn ctrl() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 56)
}

fn point(u: f64, v: f64) -> Vec2 {
    Vec2::new(0.05 + 1.4 * u, -0.95 + 1.9 * v)
}

fn fd_gradient(f: impl Fn(Vec2) -> f64, x: Vec2, h: f64) -> Vec2 {
    Vec2::new(
        (f(x + Vec2::new(h, 0.0)) - f(x - Vec2::new(h, 0.0))) / (2.0 * h),
        (f(x + Vec2::new(0.0, h)) - f(x - Vec2::new(0.0, h))) / (2.0 * h),
    )
}

fn close(a: Vec2, b: Vec2, rel: f64) -> bool {
    let scale = a.norm().max(b.norm()).max(1.0);
    (a - b).norm() <= rel * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn h_gradient_matches_finite_differences(cf in ctrl(), cg in ctrl(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (f, g) = (model(&cf, 1.0), model(&cg[5..].iter().chain(&cg[..5]).copied().collect::<Vec<_>>(), 1.0));
        let h = DerivedFieldH::new(&f, &g).unwrap();
        let x = point(u, v);
        let fd = fd_gradient(|p| h.value(p), x, 1e-6);
        prop_assert!(close(h.value_gradient(x).1, fd, 1e-6), "{:?} vs {fd:?}", h.value_gradient(x).1);
        let hess = h.hessian(x);
        let gx = fd_gradient(|p| h.value_gradient(p).1.x, x, 1e-6);
        let gy = fd_gradient(|p| h.value_gradient(p).1.y, x, 1e-6);
        prop_assert!(close(Vec2::new(hess.xx, hess.xy), gx, 1e-6));
        prop_assert!(close(Vec2::new(hess.xy, hess.yy), gy, 1e-6));
        let (_, _, via_trait) = h.value_gradient_hessian(x);
        prop_assert_eq!(via_trait, hess);
    }

    #[test]
    fn h_tilde_gradient_matches_finite_differences(cf in ctrl(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let f = model(&cf, 1.0);
        let ht = DerivedFieldHTilde::new(&f);
        let x = point(u, v);
        let fd = fd_gradient(|p| ht.value(p), x, 1e-6);
        prop_assert!(close(ht.value_gradient(x).1, fd, 1e-6), "{:?} vs {fd:?}", ht.value_gradient(x).1);
    }

    #[test]
    fn h_is_antisymmetric(cf in ctrl(), cg in ctrl(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (f, g) = (model(&cf, 1.0), model(&cg, 0.7));
        let x = point(u, v);
        let a = DerivedFieldH::new(&f, &g).unwrap().value(x);
        let b = DerivedFieldH::new(&g, &f).unwrap().value(x);
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn h_tilde_is_cubic_in_scale(cf in ctrl(), c in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (f, cf_model) = (model(&cf, 1.0), model(&cf, c));
        let x = point(u, v);
        let a = DerivedFieldHTilde::new(&f).value(x);
        let b = DerivedFieldHTilde::new(&cf_model).value(x);
        prop_assert!((b - c * c * c * a).abs() <= 1e-10 * (c * c * c * a).abs().max(1.0));
    }

    #[test]
    fn classification_under_scaling(cf in ctrl(), c in 0.2f64..3.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let f = model(&cf, 1.0);
        let x = point(u, v);
        let base = classify_rv(&f, x, 1e-12);
        prop_assume!(base != ArcClass::Unclassified);
        prop_assert_eq!(classify_rv(&model(&cf, c), x, 1e-12), base);
        let flipped = match base {
            ArcClass::Ridge => ArcClass::Valley,
            ArcClass::Valley => ArcClass::Ridge,
            ArcClass::PseudoRidge => ArcClass::PseudoValley,
            ArcClass::PseudoValley => ArcClass::PseudoRidge,
            ArcClass::Unclassified => ArcClass::Unclassified,
        };
        prop_assert_eq!(classify_rv(&model(&cf, -c), x, 1e-12), flipped);
    }
}

#[test]
fn sign_table() {
    assert_eq!(ArcClass::from_signs(-1.0, 1.0), ArcClass::Ridge);
    assert_eq!(ArcClass::from_signs(1.0, 1.0), ArcClass::Valley);
    assert_eq!(ArcClass::from_signs(-1.0, -1.0), ArcClass::PseudoRidge);
    assert_eq!(ArcClass::from_signs(1.0, -1.0), ArcClass::PseudoValley);
    assert_eq!(ArcClass::from_signs(0.0, 1.0), ArcClass::Unclassified);
}
