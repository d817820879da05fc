mod common;

use mfa_topo_core::exec::Sequential;
use mfa_topo_core::features::{extract_contour, extract_jacobi, extract_ridge_valley, Extraction};
use mfa_topo_core::field::ScalarField;
use mfa_topo_core::features::{DerivedFieldH, DerivedFieldHTilde};
use mfa_topo_core::graph::{components, loops};
use mfa_topo_core::synthetic::AnalyticField;
use mfa_topo_core::tracer::TraceConfig;

fn counts(e: &Extraction) -> (usize, usize) {
    (loops(&e.graph), components(&e.graph))
}

fn with_extra_seeds<F: ScalarField + ?Sized>(traced: &F, cfg: TraceConfig) -> TraceConfig {
    TraceConfig { seeds_per_dim: Some(traced.degree() + 5), ..cfg }
}

#[test]
fn contours_do_not_depend_on_seed_count() {
    for (field, levels) in [(AnalyticField::Sinc, [0.33, 0.79]), (AnalyticField::Schwefel, [100.0, 500.0])] {
        let m = common::fit_reference(field);
        let cfg = TraceConfig::for_field(&m, 4.0);
        let more = with_extra_seeds(&m, cfg);
        for a in levels {
            let base = extract_contour(&m, a, &cfg, &Sequential).unwrap();
            let dense = extract_contour(&m, a, &more, &Sequential).unwrap();
            assert_eq!(counts(&base), counts(&dense), "{} at {a}", field.name());
        }
    }
}

#[test]
fn jacobi_set_does_not_depend_on_seed_count() {
    let f = common::fit_reference(AnalyticField::GaussianPairF);
    let g = common::fit_reference(AnalyticField::GaussianPairG);
    let cfg = TraceConfig::for_field(&f, 4.0);
    let more = with_extra_seeds(&DerivedFieldH::new(&f, &g).unwrap(), cfg);
    let base = extract_jacobi(&f, &g, &cfg, &Sequential).unwrap();
    let dense = extract_jacobi(&f, &g, &more, &Sequential).unwrap();
    assert_eq!(counts(&base), counts(&dense));
}

#[test]
fn ridge_valley_graph_does_not_depend_on_seed_count() {
    let f = common::fit_reference(AnalyticField::GaussianMixture);
    let cfg = TraceConfig::for_field(&f, 4.0);
    let more = with_extra_seeds(&DerivedFieldHTilde::new(&f), cfg);
    let base = extract_ridge_valley(&f, &cfg, &Sequential).unwrap();
    let dense = extract_ridge_valley(&f, &more, &Sequential).unwrap();
    assert_eq!(counts(&base), counts(&dense));
}
