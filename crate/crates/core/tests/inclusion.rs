use proptest::prelude::*;
use toric_core::inclusion::{Semantics, ToricInclusion};
use toric_core::model::EGraph;
use toric_core::scalar::{Rational, Scalar};

fn q(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::from_i64(x)).collect()
}

fn normals_2d() -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, 2).prop_filter("nonzero", |v| v != &[0, 0]), 1..=3)
}

fn inclusion(normals: &[Vec<i64>], delta: f64) -> Option<ToricInclusion<Rational>> {
    let ns: Vec<Vec<Rational>> = normals.iter().map(|n| q(n)).collect();
    ToricInclusion::from_hyperplanes(2, &ns, delta).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cone_rule_is_inside_hyperplane_rule(
        normals in normals_2d(),
        delta in 0.1f64..2.0,
        xs in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), 10),
    ) {
        let Some(ti) = inclusion(&normals, delta) else { return Ok(()) };
        for x in &xs {
            let g = ti.evaluate_general(x).unwrap();
            prop_assert!(g.agree, "sum of polars and polar of intersection differ at {:?}", x);
            prop_assert!(g.cone.set_eq(&g.via_intersection));
            prop_assert!(g.cone.is_subset_of(&ti.evaluate_hyperplane(x).unwrap()));
        }
    }

    #[test]
    fn larger_delta_gives_larger_sets(
        normals in normals_2d(),
        d1 in 0.05f64..1.5,
        extra in 0.0f64..1.5,
        xs in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), 10),
    ) {
        let (Some(a), Some(b)) = (inclusion(&normals, d1), inclusion(&normals, d1 + extra)) else { return Ok(()) };
        for x in &xs {
            for sem in [Semantics::Hyperplane, Semantics::Strict] {
                prop_assert!(a.evaluate(x, sem).unwrap().is_subset_of(&b.evaluate(x, sem).unwrap()));
            }
        }
    }

    #[test]
    fn far_from_every_hyperplane_the_cone_is_pointed(normals in normals_2d(), x in prop::collection::vec(-30.0f64..30.0, 2)) {
        let Some(ti) = inclusion(&normals, 0.5) else { return Ok(()) };
        let sigma = ti.signature(&x).unwrap();
        let cone = ti.evaluate_hyperplane(&x).unwrap();
        if sigma.zero_count() == 0 {
            prop_assert!(cone.lines().is_empty());
            // the flow points back toward every hyperplane it is away from
            for g in cone.generators() {
                let g: Vec<f64> = g.iter().map(|v| v.to_f64()).collect();
                prop_assert!(g[0] * x[0] + g[1] * x[1] < 0.0);
            }
        }
    }
}

#[test]
fn dimer_delta() {
    let g = EGraph::new(2, vec![q(&[2, 0]), q(&[0, 1])], vec![(0, 1), (1, 0)]).unwrap();
    let ti = ToricInclusion::build_reversible(&g, 0.1).unwrap();
    let want = 2.0 * 10f64.ln() / 5f64.sqrt();
    assert!((ti.delta() - want).abs() < 1e-12);
    assert!((ti.delta() - 2.0595).abs() < 1e-4);
    assert_eq!(ti.normals().unwrap().len(), 1);
}

#[test]
fn triangle_delta() {
    let g = EGraph::new(2, vec![q(&[0, 0]), q(&[1, 0]), q(&[0, 1])], vec![(0, 1), (1, 2), (2, 0)]).unwrap();
    let ti = ToricInclusion::build_weakly_reversible(&g, (-1f64).exp()).unwrap();
    assert_eq!(ti.normals().unwrap().len(), 3);
    assert!((ti.delta() - 2.0).abs() < 1e-12);
}

#[test]
fn records_round_trip() {
    let ti = inclusion(&[vec![1, -1], vec![2, 1]], 0.7).unwrap();
    let rec = ti.to_record().unwrap();
    let back = ToricInclusion::<Rational>::from_record(&rec).unwrap();
    assert_eq!(back.to_record().unwrap(), rec);
    for x in [[0.3, -2.0], [5.0, 5.0], [0.0, 0.0]] {
        assert!(back.evaluate_hyperplane(&x).unwrap().set_eq(&ti.evaluate_hyperplane(&x).unwrap()));
    }
}

#[test]
fn bad_epsilon_is_rejected() {
    let g = EGraph::new(2, vec![q(&[2, 0]), q(&[0, 1])], vec![(0, 1), (1, 0)]).unwrap();
    assert!(ToricInclusion::build_reversible(&g, 1.5).is_err());
    assert!(ToricInclusion::build_reversible(&g, 0.0).is_err());
}
