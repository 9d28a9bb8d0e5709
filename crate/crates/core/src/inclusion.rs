//! Toric differential inclusions `dX/dt ∈ F(X)` over complete polyhedral fans.
//!
//! Two evaluation rules are provided. The hyperplane rule looks only at the
//! distance from `X` to each hyperplane of the arrangement; the cone rule sums
//! the polars of every fan cone within distance `δ` of `X`. The first always
//! contains the second, and the embedding verifier targets it by default.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_epsilon, Error, Result};
use crate::model::EGraph;
use crate::polyhedral::{Cone, HyperplaneFan, SignVector};
use crate::scalar::{dot_f64, neg, norm_f64, normalized, parallel, sub, to_f64_vec, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    /// `F(X)` from hyperplane distances `|X·ĥ| ≤ δ`.
    Hyperplane,
    /// `F(X)` as the sum of polars of fan cones within distance `δ`.
    Strict,
}

#[derive(Clone, Debug)]
pub enum Fan<T> {
    Hyperplanes(HyperplaneFan<T>),
    /// An explicit list of cones; completeness is the caller's claim and is
    /// only spot-checked on probe directions.
    Explicit(Vec<Cone<T>>),
}

/// Where an inclusion came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub builder: String,
    pub epsilon: f64,
    /// `ε` after the cycle-cover weight adjustment.
    pub effective_epsilon: f64,
    /// For each normal, the vertex pairs `(i, j)` whose difference it spans.
    pub pairs: Vec<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug)]
pub struct ToricInclusion<T> {
    fan: Fan<T>,
    delta: f64,
    provenance: Option<Provenance>,
    cones: OnceLock<Vec<(SignVector, Cone<T>)>>,
}

/// Result of the cone-distance rule, computed both as a sum of polars and as
/// the polar of the intersection.
#[derive(Clone, Debug)]
pub struct GeneralEvaluation<T> {
    pub cone: Cone<T>,
    pub via_intersection: Cone<T>,
    /// Indices into [`ToricInclusion::fan_cones`] of the cones within `δ`.
    pub near: Vec<usize>,
    pub agree: bool,
}

/// Serializable form of an inclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionRecord {
    pub dimension: usize,
    pub normals: Vec<Vec<String>>,
    pub unit_normals: Vec<Vec<f64>>,
    pub delta: f64,
    pub provenance: Option<Provenance>,
}

fn pair_delta<T: Scalar>(a: &[T], b: &[T], eps: f64) -> f64 {
    2.0 * eps.ln().abs() / norm_f64(&to_f64_vec(&sub(a, b)))
}

/// Collects difference normals, merging parallel ones, and records which
/// vertex pairs produced each.
fn collect_normals<T: Scalar>(
    graph: &EGraph<T>,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> (Vec<Vec<T>>, Vec<Vec<(usize, usize)>>) {
    let mut normals: Vec<Vec<T>> = Vec::new();
    let mut attribution: Vec<Vec<(usize, usize)>> = Vec::new();
    for (i, j) in pairs {
        let v = sub(&graph.vertices()[j], &graph.vertices()[i]);
        match normals.iter().position(|n| parallel(n, &v)) {
            Some(k) => {
                if !attribution[k].contains(&(i, j)) {
                    attribution[k].push((i, j));
                }
            }
            None => {
                normals.push(normalized(&v));
                attribution.push(vec![(i, j)]);
            }
        }
    }
    (normals, attribution)
}

impl<T: Scalar> ToricInclusion<T> {
    pub fn new(fan: Fan<T>, delta: f64, provenance: Option<Provenance>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        if let Fan::Explicit(cones) = &fan {
            check_explicit_fan(cones)?;
        }
        Ok(Self {
            fan,
            delta,
            provenance,
            cones: OnceLock::new(),
        })
    }

    pub fn from_hyperplanes(dim: usize, normals: &[Vec<T>], delta: f64) -> Result<Self> {
        Self::new(Fan::Hyperplanes(HyperplaneFan::from_hyperplanes(dim, normals)?), delta, None)
    }

    /// One hyperplane per reversible pair, orthogonal to its edge vector;
    /// `δ = max 2|ln ε| / ‖s − s'‖` over the pairs.
    pub fn build_reversible(graph: &EGraph<T>, eps: f64) -> Result<Self> {
        check_epsilon(eps)?;
        graph.require_reversible()?;
        let pairs: Vec<(usize, usize)> = graph
            .edges()
            .iter()
            .filter(|(s, t)| s < t)
            .copied()
            .collect();
        let delta = pairs
            .iter()
            .map(|&(i, j)| pair_delta(&graph.vertices()[i], &graph.vertices()[j], eps))
            .fold(0.0, f64::max);
        let (normals, attribution) = collect_normals(graph, pairs);
        Self::assemble(graph.dim(), normals, delta, "reversible", eps, eps, attribution)
    }

    /// Hyperplanes orthogonal to every pairwise vertex difference within each
    /// cycle of the cycle cover. Rates split across cycles shrink `ε` to
    /// `ε' = ε · (smallest weight fraction)`, and `δ` uses `ε'`.
    pub fn build_weakly_reversible(graph: &EGraph<T>, eps: f64) -> Result<Self> {
        check_epsilon(eps)?;
        let cover = graph.cycle_cover()?;
        let eff = eps * cover.min_fraction().to_f64();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for cycle in &cover.cycles {
            for (a, &i) in cycle.iter().enumerate() {
                for &j in &cycle[a + 1..] {
                    pairs.push((i.min(j), i.max(j)));
                }
            }
        }
        let delta = pairs
            .iter()
            .map(|&(i, j)| pair_delta(&graph.vertices()[i], &graph.vertices()[j], eff))
            .fold(0.0, f64::max);
        let (normals, attribution) = collect_normals(graph, pairs);
        Self::assemble(graph.dim(), normals, delta, "weakly-reversible", eps, eff, attribution)
    }

    /// Hyperplanes orthogonal to each edge vector, with the single-edge `δ`.
    /// Used as the target for negative controls on graphs that are not
    /// weakly reversible.
    pub fn build_from_edges(graph: &EGraph<T>, eps: f64) -> Result<Self> {
        check_epsilon(eps)?;
        let pairs: Vec<(usize, usize)> = graph.edges().to_vec();
        let delta = pairs
            .iter()
            .map(|&(i, j)| pair_delta(&graph.vertices()[i], &graph.vertices()[j], eps))
            .fold(0.0, f64::max);
        let (normals, attribution) = collect_normals(graph, pairs);
        Self::assemble(graph.dim(), normals, delta, "edges", eps, eps, attribution)
    }

    fn assemble(
        dim: usize,
        normals: Vec<Vec<T>>,
        delta: f64,
        builder: &str,
        eps: f64,
        eff: f64,
        pairs: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        // Without any pairs F is {0} everywhere and any width will do.
        let delta = if delta > 0.0 { delta } else { 1.0 };
        let fan = HyperplaneFan::from_hyperplanes(dim, &normals)?;
        Self::new(
            Fan::Hyperplanes(fan),
            delta,
            Some(Provenance {
                builder: builder.to_string(),
                epsilon: eps,
                effective_epsilon: eff,
                pairs,
            }),
        )
    }

    pub fn dim(&self) -> usize {
        match &self.fan {
            Fan::Hyperplanes(f) => f.dim(),
            Fan::Explicit(cs) => cs[0].dim(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn fan(&self) -> &Fan<T> {
        &self.fan
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn hyperplane_fan(&self) -> Result<&HyperplaneFan<T>> {
        match &self.fan {
            Fan::Hyperplanes(f) => Ok(f),
            Fan::Explicit(_) => Err(Error::NotHyperplaneFan),
        }
    }

    pub fn normals(&self) -> Result<&[Vec<T>]> {
        Ok(self.hyperplane_fan()?.normals())
    }

    /// A copy with a different width.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.fan.clone(), delta, self.provenance.clone())
    }

    /// Hyperplane indices with `|X·ĥ_i| ≤ δ`.
    pub fn uncertainty_set(&self, x: &[f64]) -> Result<Vec<usize>> {
        let fan = self.hyperplane_fan()?;
        self.check_point(x)?;
        Ok(fan
            .unit_normals()
            .iter()
            .enumerate()
            .filter(|(_, h)| dot_f64(h, x).abs() <= self.delta)
            .map(|(i, _)| i)
            .collect())
    }

    /// Sign pattern that determines the hyperplane-rule cone: `0` on the
    /// uncertainty set, `sign(X·h_i)` elsewhere.
    pub fn signature(&self, x: &[f64]) -> Result<SignVector> {
        let fan = self.hyperplane_fan()?;
        self.check_point(x)?;
        Ok(SignVector(
            fan.unit_normals()
                .iter()
                .map(|h| {
                    let d = dot_f64(h, x);
                    if d.abs() <= self.delta {
                        0
                    } else if d > 0.0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        ))
    }

    /// Cone generated by `-σ_i h_i` for `σ_i ≠ 0` and `±h_i` for `σ_i = 0`.
    pub fn cone_for_signature(&self, sigma: &SignVector) -> Result<Cone<T>> {
        let fan = self.hyperplane_fan()?;
        let mut rays = Vec::new();
        let mut lines = Vec::new();
        for (h, &s) in fan.normals().iter().zip(&sigma.0) {
            match s {
                0 => lines.push(h.clone()),
                1 => rays.push(neg(h)),
                _ => rays.push(h.clone()),
            }
        }
        Cone::from_rays_and_lines(fan.dim(), &rays, &lines)
    }

    pub fn evaluate_hyperplane(&self, x: &[f64]) -> Result<Cone<T>> {
        let sigma = self.signature(x)?;
        self.cone_for_signature(&sigma)
    }

    /// All cones of the fan; hyperplane fans are expanded on first use.
    pub fn fan_cones(&self) -> &[(SignVector, Cone<T>)] {
        self.cones.get_or_init(|| match &self.fan {
            Fan::Hyperplanes(f) => f.cones(),
            Fan::Explicit(cs) => cs
                .iter()
                .map(|c| (SignVector(Vec::new()), c.clone()))
                .collect(),
        })
    }

    pub fn evaluate_general(&self, x: &[f64]) -> Result<GeneralEvaluation<T>> {
        self.check_point(x)?;
        let dim = self.dim();
        let cones = self.fan_cones();
        let near: Vec<usize> = cones
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| c.distance(x) <= self.delta)
            .map(|(i, _)| i)
            .collect();
        let mut sum = Cone::origin(dim);
        let mut inter = Cone::whole_space(dim);
        for &i in &near {
            let c = &cones[i].1;
            sum = sum.sum(&c.polar())?;
            inter = inter.intersect(c)?;
        }
        let via_intersection = inter.polar();
        let agree = sum.set_eq(&via_intersection);
        Ok(GeneralEvaluation {
            cone: sum,
            via_intersection,
            near,
            agree,
        })
    }

    pub fn evaluate(&self, x: &[f64], semantics: Semantics) -> Result<Cone<T>> {
        match semantics {
            Semantics::Hyperplane => self.evaluate_hyperplane(x),
            Semantics::Strict => Ok(self.evaluate_general(x)?.cone),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn to_record(&self) -> Result<InclusionRecord> {
        let fan = self.hyperplane_fan()?;
        Ok(InclusionRecord {
            dimension: fan.dim(),
            normals: fan
                .normals()
                .iter()
                .map(|h| h.iter().map(Scalar::to_literal).collect())
                .collect(),
            unit_normals: fan.unit_normals().to_vec(),
            delta: self.delta,
            provenance: self.provenance.clone(),
        })
    }

    pub fn from_record(record: &InclusionRecord) -> Result<Self> {
        let normals = record
            .normals
            .iter()
            .map(|h| {
                h.iter()
                    .map(|s| T::parse_literal(s).ok_or_else(|| Error::InvalidArgument(format!("bad number {s:?}"))))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let fan = HyperplaneFan::from_hyperplanes(record.dimension, &normals)?;
        Self::new(Fan::Hyperplanes(fan), record.delta, record.provenance.clone())
    }
}

/// Probe directions: signed coordinate axes, their pairwise sums, and a
/// fixed scatter of irrational-slope directions.
fn probes(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = s;
            out.push(v);
        }
    }
    for k in 1..=256usize {
        let v: Vec<f64> = (0..dim)
            .map(|i| ((k * (i + 1)) as f64 * std::f64::consts::SQRT_2 * 7.31).sin())
            .collect();
        out.push(v);
    }
    out
}

fn check_explicit_fan<T: Scalar>(cones: &[Cone<T>]) -> Result<()> {
    let Some(first) = cones.first() else {
        return Err(Error::InvalidArgument("explicit fan has no cones".into()));
    };
    let dim = first.dim();
    if let Some(c) = cones.iter().find(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: c.dim(),
        });
    }
    let f64_cones: Vec<Cone<f64>> = cones.iter().map(Cone::to_f64).collect();
    for p in probes(dim) {
        if !f64_cones.iter().any(|c| c.contains_f64(&p, 1e-9)) {
            return Err(Error::InvalidArgument(format!("explicit fan misses direction {p:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn qv(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_i64(x)).collect()
    }

    fn dimer() -> EGraph<Rational> {
        EGraph::new(2, vec![qv(&[2, 0]), qv(&[0, 1])], vec![(0, 1), (1, 0)]).unwrap()
    }

    fn triangle() -> EGraph<Rational> {
        EGraph::new(2, vec![qv(&[0, 0]), qv(&[1, 0]), qv(&[0, 1])], vec![(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn one_plane(delta: f64) -> ToricInclusion<Rational> {
        ToricInclusion::from_hyperplanes(2, &[qv(&[0, 1])], delta).unwrap()
    }

    #[test]
    fn reversible_delta() {
        let e = std::f64::consts::E;
        let ti = ToricInclusion::build_reversible(&dimer(), 1.0 / e).unwrap();
        assert!((ti.delta() - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        let u = &ti.hyperplane_fan().unwrap().unit_normals()[0];
        let expected = [-2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()];
        let d = dot_f64(u, &expected).abs();
        assert!((d - 1.0).abs() < 1e-12);
        let ti = ToricInclusion::build_reversible(&dimer(), 0.1).unwrap();
        assert!((ti.delta() - 2.0 * 10f64.ln() / 5f64.sqrt()).abs() < 1e-12);
        assert!((ti.delta() - 2.0595).abs() < 1e-4);
    }

    #[test]
    fn orthogonal_pairs_share_delta() {
        let g = EGraph::new(
            2,
            vec![qv(&[0, 0]), qv(&[1, 0]), qv(&[5, 5]), qv(&[5, 6])],
            vec![(0, 1), (1, 0), (2, 3), (3, 2)],
        )
        .unwrap();
        let ti = ToricInclusion::build_reversible(&g, 0.5).unwrap();
        assert_eq!(ti.normals().unwrap().len(), 2);
        assert!((ti.delta() - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn builders_reject_bad_input() {
        assert_eq!(
            ToricInclusion::build_reversible(&dimer(), 1.5).unwrap_err().to_string(),
            "epsilon must lie in (0,1), got 1.5"
        );
        assert!(matches!(
            ToricInclusion::build_reversible(&triangle(), 0.5),
            Err(Error::NotReversible { .. })
        ));
        let chain = EGraph::new(1, vec![qv(&[0]), qv(&[1])], vec![(0, 1)]).unwrap();
        assert!(matches!(
            ToricInclusion::build_weakly_reversible(&chain, 0.5),
            Err(Error::NotWeaklyReversible { .. })
        ));
    }

    #[test]
    fn triangle_inclusion() {
        let ti = ToricInclusion::build_weakly_reversible(&triangle(), (-1f64).exp()).unwrap();
        assert_eq!(ti.normals().unwrap().len(), 3);
        for h in [qv(&[1, 0]), qv(&[0, 1]), qv(&[1, -1])] {
            assert!(ti.normals().unwrap().iter().any(|n| parallel(n, &h)));
        }
        assert!((ti.delta() - 2.0).abs() < 1e-12);
        let p = ti.provenance().unwrap();
        assert_eq!(p.effective_epsilon, p.epsilon);
    }

    #[test]
    fn weakly_reversible_builder_reduces_to_reversible() {
        let a = ToricInclusion::build_reversible(&dimer(), 0.1).unwrap();
        let b = ToricInclusion::build_weakly_reversible(&dimer(), 0.1).unwrap();
        assert_eq!(a.normals().unwrap(), b.normals().unwrap());
        assert!((a.delta() - b.delta()).abs() < 1e-15);
    }

    #[test]
    fn shared_triangles_take_union_of_normals() {
        // o=(0,0); triangle o,(1,0),(1,1) and triangle o,(0,2),(-1,1)
        let g = EGraph::new(
            2,
            vec![qv(&[0, 0]), qv(&[1, 0]), qv(&[1, 1]), qv(&[0, 2]), qv(&[-1, 1])],
            vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)],
        )
        .unwrap();
        let ti = ToricInclusion::build_weakly_reversible(&g, 0.5).unwrap();
        let expected = [
            qv(&[1, 0]), qv(&[1, 1]), qv(&[0, 1]),
            qv(&[0, 2]), qv(&[-1, 1]), qv(&[-1, -1]),
        ];
        let normals = ti.normals().unwrap();
        for h in &expected {
            assert!(normals.iter().any(|n| parallel(n, h)), "{h:?}");
        }
        for n in normals {
            assert!(expected.iter().any(|h| parallel(n, h)));
        }
        // every normal is attributed to a vertex difference
        let p = ti.provenance().unwrap();
        for (n, pairs) in normals.iter().zip(&p.pairs) {
            for &(i, j) in pairs {
                assert!(parallel(n, &sub(&g.vertices()[j], &g.vertices()[i])));
            }
        }
    }

    #[test]
    fn hyperplane_rule_cases() {
        let ti = one_plane(1.0);
        let c = ti.evaluate_hyperplane(&[0.0, 2.0]).unwrap();
        assert!(c.set_eq(&Cone::from_generators(2, &[qv(&[0, -1])]).unwrap()));
        let c = ti.evaluate_hyperplane(&[0.0, 0.5]).unwrap();
        assert!(c.set_eq(&Cone::from_rays_and_lines(2, &[], &[qv(&[0, 1])]).unwrap()));
        let c = ti.evaluate_hyperplane(&[0.0, 1.0]).unwrap();
        assert_eq!(c.lines().len(), 1, "distance exactly δ is uncertain");

        let two = ToricInclusion::from_hyperplanes(2, &[qv(&[1, 0]), qv(&[0, 1])], 1.0).unwrap();
        let c = two.evaluate_hyperplane(&[5.0, 5.0]).unwrap();
        assert!(c.set_eq(&Cone::from_generators(2, &[qv(&[-1, 0]), qv(&[0, -1])]).unwrap()));
    }

    #[test]
    fn cone_rule_cases() {
        let ti = one_plane(1.0);
        let g = ti.evaluate_general(&[0.0, 2.0]).unwrap();
        assert!(g.agree);
        assert!(g.cone.set_eq(&Cone::from_generators(2, &[qv(&[0, -1])]).unwrap()));
        let g = ti.evaluate_general(&[0.0, 0.5]).unwrap();
        assert!(g.agree);
        assert_eq!(g.near.len(), 3);
        assert!(g.cone.set_eq(&Cone::from_rays_and_lines(2, &[], &[qv(&[0, 1])]).unwrap()));

        let two = ToricInclusion::from_hyperplanes(2, &[qv(&[1, 0]), qv(&[0, 1])], 1.0).unwrap();
        let g = two.evaluate_general(&[50.0, 40.0]).unwrap();
        assert_eq!(g.near.len(), 1);
        assert!(g.cone.set_eq(&Cone::from_generators(2, &[qv(&[-1, 0]), qv(&[0, -1])]).unwrap()));
    }

    #[test]
    fn uncertainty_sets() {
        let ti = one_plane(1.0);
        assert_eq!(ti.uncertainty_set(&[7.0, 3.0]).unwrap(), Vec::<usize>::new());
        assert_eq!(ti.uncertainty_set(&[7.0, 0.0]).unwrap(), vec![0]);
        let two = ToricInclusion::from_hyperplanes(2, &[qv(&[1, 0]), qv(&[0, 1])], 1.0).unwrap();
        assert_eq!(two.uncertainty_set(&[0.0, 0.0]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn explicit_fans() {
        let up = Cone::from_constraints(2, &[qv(&[0, 1])], &[]).unwrap();
        let down = Cone::from_constraints(2, &[qv(&[0, -1])], &[]).unwrap();
        let line = Cone::from_constraints(2, &[], &[qv(&[0, 1])]).unwrap();
        let ti = ToricInclusion::new(Fan::Explicit(vec![up.clone(), down, line]), 1.0, None).unwrap();
        assert!(matches!(ti.evaluate_hyperplane(&[0.0, 0.0]), Err(Error::NotHyperplaneFan)));
        let g = ti.evaluate_general(&[3.0, 5.0]).unwrap();
        assert!(g.cone.set_eq(&up.polar()));
        assert!(ToricInclusion::new(Fan::Explicit(vec![up]), 1.0, None).is_err());
    }

    #[test]
    fn record_round_trip() {
        let ti = ToricInclusion::build_weakly_reversible(&triangle(), 0.1).unwrap();
        let rec = ti.to_record().unwrap();
        let back = ToricInclusion::<Rational>::from_record(&rec).unwrap();
        assert_eq!(back.to_record().unwrap(), rec);
    }

    #[test]
    fn zero_width_is_rejected() {
        assert!(ToricInclusion::from_hyperplanes(2, &[qv(&[0, 1])], 0.0).is_err());
    }
}
