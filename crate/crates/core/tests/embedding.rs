use proptest::prelude::*;
use toric_core::embedding::{counterexample_search, cycle_certificate, verify_embedding, VerifyConfig};
use toric_core::inclusion::{Semantics, ToricInclusion};
use toric_core::model::EGraph;
use toric_core::scalar::{Rational, Scalar};

fn q(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::from_i64(x)).collect()
}

fn cycle_graph(pts: &[Vec<i64>], dim: usize) -> EGraph<Rational> {
    let n = pts.len();
    EGraph::new(dim, pts.iter().map(|p| q(p)).collect(), (0..n).map(|i| (i, (i + 1) % n)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any weakly reversible graph embeds into the inclusion built from it.
    #[test]
    fn random_cycles_embed(
        pts in prop::collection::btree_set(prop::collection::vec(-2i64..=2, 2), 3..=4),
        eps in 0.05f64..0.6,
        seed in any::<u64>(),
    ) {
        let pts: Vec<Vec<i64>> = pts.into_iter().collect();
        let g = cycle_graph(&pts, 2);
        let cfg = VerifyConfig { samples: 400, seed, ..Default::default() };
        let r = verify_embedding(&g, eps, &cfg).unwrap();
        prop_assert_eq!(r.violations, 0, "{:?}", r.witnesses.first());
        prop_assert_eq!(r.samples, 400);
    }

    /// Along a cycle, every Φ_l is positive once the monomials are strictly
    /// ordered and the rates stay in [ε, 1/ε] away from the slabs.
    #[test]
    fn phi_terms_are_positive_off_the_slabs(x in prop::collection::vec(-12.0f64..12.0, 2), k in prop::collection::vec(-1.0f64..1.0, 3)) {
        let g = cycle_graph(&[vec![0, 0], vec![1, 0], vec![0, 1]], 2);
        let e = (-1f64).exp();
        let ti = ToricInclusion::build_weakly_reversible(&g, e).unwrap();
        prop_assume!(ti.signature(&x).unwrap().zero_count() == 0);
        let rates: Vec<f64> = k.iter().map(|v| v.exp()).collect();
        let c = cycle_certificate(&ti, g.vertices(), &x, &rates, false).unwrap();
        prop_assert!(c.decomposition.telescopes);
        prop_assert!(c.phi_signs.iter().all(|&s| s == 1), "{:?}", c.phi_signs);
    }
}

#[test]
fn three_dimensional_cycle_embeds() {
    let g = cycle_graph(&[vec![0, 0, 0], vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]], 3);
    for eps in [(-1f64).exp(), 0.1] {
        let r = verify_embedding(&g, eps, &VerifyConfig { samples: 2000, seed: 11, ..Default::default() }).unwrap();
        assert_eq!(r.violations, 0);
    }
}

#[test]
fn strict_semantics_also_embeds() {
    let g = cycle_graph(&[vec![0, 0], vec![1, 0], vec![0, 1]], 2);
    let cfg = VerifyConfig { samples: 500, seed: 3, semantics: Semantics::Strict, ..Default::default() };
    let r = verify_embedding(&g, 0.2, &cfg).unwrap();
    assert_eq!(r.violations, 0);
    assert_eq!(r.form_mismatches, 0);
}

#[test]
fn irreversible_edge_witnesses_replay() {
    let g = EGraph::new(2, vec![q(&[1, 0]), q(&[0, 1])], vec![(0, 1)]).unwrap();
    let cfg = VerifyConfig { samples: 1000, seed: 5, ..Default::default() };
    let r = counterexample_search(&g, 0.1, &cfg).unwrap();
    assert!(r.violations > 0);
    let ti = ToricInclusion::build_from_edges(&g, 0.1).unwrap();
    assert!(r.replay(&g, &ti, cfg.tolerance).unwrap());
    // a tampered witness no longer replays
    let mut bad = r.clone();
    bad.witnesses[0].index += 1;
    assert!(!bad.replay(&g, &ti, cfg.tolerance).unwrap());
    assert_eq!(r, counterexample_search(&g, 0.1, &cfg).unwrap());
}

#[test]
fn ratio_mode_embeds() {
    let g = cycle_graph(&[vec![0, 0], vec![2, 0], vec![0, 1]], 2);
    let cfg = VerifyConfig { samples: 1000, seed: 9, ratio_mode: true, ..Default::default() };
    let r = verify_embedding(&g, 0.1, &cfg).unwrap();
    assert_eq!(r.violations, 0);
}
