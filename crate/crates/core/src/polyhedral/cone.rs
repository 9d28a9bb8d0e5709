use crate::error::{Error, Result};
use crate::scalar::{dot, dot_f64, is_zero_vec, neg, norm_f64, unit_f64, Scalar};

use super::dd::double_description;
use super::project::{project_onto, Projection};

/// Polyhedral cone kept in both generator and half-space form.
///
/// Generator form: `cone(rays) + span(lines)`. Half-space form:
/// `{x : a·x ≥ 0 for a in facets, b·x = 0 for b in equations}`. Both are
/// minimal: rays are extreme modulo the lineality space, facets are
/// irredundant.
#[derive(Clone, Debug)]
pub struct Cone<T> {
    dim: usize,
    rays: Vec<Vec<T>>,
    lines: Vec<Vec<T>>,
    facets: Vec<Vec<T>>,
    equations: Vec<Vec<T>>,
}

fn check_dims<T>(dim: usize, vs: &[Vec<T>]) -> Result<()> {
    match vs.iter().find(|v| v.len() != dim) {
        Some(v) => Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        }),
        None => Ok(()),
    }
}

impl<T: Scalar> Cone<T> {
    /// Cone generated by nonnegative combinations of `generators`.
    pub fn from_generators(dim: usize, generators: &[Vec<T>]) -> Result<Self> {
        Self::from_rays_and_lines(dim, generators, &[])
    }

    pub fn from_rays_and_lines(dim: usize, rays: &[Vec<T>], lines: &[Vec<T>]) -> Result<Self> {
        check_dims(dim, rays)?;
        check_dims(dim, lines)?;
        let rays: Vec<Vec<T>> = rays.iter().filter(|r| !is_zero_vec(r)).cloned().collect();
        // C° = {y : -g·y ≥ 0, l·y = 0}; its generators give the facets of C.
        let polar_ineqs: Vec<Vec<T>> = rays.iter().map(|r| neg(r)).collect();
        let lines: Vec<Vec<T>> = lines.iter().filter(|l| !is_zero_vec(l)).cloned().collect();
        let polar = double_description(dim, &polar_ineqs, &lines);
        let facets: Vec<Vec<T>> = polar.rays.iter().map(|r| neg(r)).collect();
        let equations = polar.lines;
        let gens = double_description(dim, &facets, &equations);
        Ok(Self {
            dim,
            rays: gens.rays,
            lines: gens.lines,
            facets,
            equations,
        })
    }

    /// Cone `{x : a·x ≥ 0 for a in ineqs, b·x = 0 for b in eqs}`.
    pub fn from_constraints(dim: usize, ineqs: &[Vec<T>], eqs: &[Vec<T>]) -> Result<Self> {
        check_dims(dim, ineqs)?;
        check_dims(dim, eqs)?;
        let gens = double_description(dim, ineqs, eqs);
        let polar_ineqs: Vec<Vec<T>> = gens.rays.iter().map(|r| neg(r)).collect();
        let polar = double_description(dim, &polar_ineqs, &gens.lines);
        Ok(Self {
            dim,
            facets: polar.rays.iter().map(|r| neg(r)).collect(),
            equations: polar.lines,
            rays: gens.rays,
            lines: gens.lines,
        })
    }

    pub fn whole_space(dim: usize) -> Self {
        Self::from_constraints(dim, &[], &[]).expect("no constraints")
    }

    pub fn origin(dim: usize) -> Self {
        Self::from_generators(dim, &[]).expect("no generators")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[Vec<T>] {
        &self.rays
    }

    pub fn lines(&self) -> &[Vec<T>] {
        &self.lines
    }

    pub fn facets(&self) -> &[Vec<T>] {
        &self.facets
    }

    pub fn equations(&self) -> &[Vec<T>] {
        &self.equations
    }

    /// Full generator list: the rays plus both orientations of each line.
    pub fn generators(&self) -> Vec<Vec<T>> {
        let mut g = self.rays.clone();
        for l in &self.lines {
            g.push(l.clone());
            g.push(neg(l));
        }
        g
    }

    /// Dimension of the linear hull.
    pub fn cone_dimension(&self) -> usize {
        self.dim - self.equations.len()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn is_origin(&self) -> bool {
        self.rays.is_empty() && self.lines.is_empty()
    }

    /// The polar cone `{y : x·y ≤ 0 for all x in C}`; swaps the two
    /// representations with a sign change.
    pub fn polar(&self) -> Self {
        Self {
            dim: self.dim,
            rays: self.facets.iter().map(|f| neg(f)).collect(),
            lines: self.equations.clone(),
            facets: self.rays.iter().map(|r| neg(r)).collect(),
            equations: self.lines.clone(),
        }
    }

    /// Minkowski sum; generators are pooled and reduced.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let rays: Vec<Vec<T>> = self.rays.iter().chain(&other.rays).cloned().collect();
        let lines: Vec<Vec<T>> = self.lines.iter().chain(&other.lines).cloned().collect();
        Self::from_rays_and_lines(self.dim, &rays, &lines)
    }

    /// Intersection; constraints are pooled and reduced.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let f: Vec<Vec<T>> = self.facets.iter().chain(&other.facets).cloned().collect();
        let e: Vec<Vec<T>> = self.equations.iter().chain(&other.equations).cloned().collect();
        Self::from_constraints(self.dim, &f, &e)
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    /// Membership decided against the half-space form: exact for rationals,
    /// tolerance [`crate::scalar::FLOAT_EPS`] for floats.
    pub fn contains(&self, v: &[T]) -> bool {
        v.len() == self.dim
            && self.facets.iter().all(|a| dot(a, v).sign() >= 0)
            && self.equations.iter().all(|b| dot(b, v).is_zero())
    }

    /// Largest normalized constraint violation of a floating vector:
    /// `max(-â·v, |b̂·v|) / ‖v‖` over unit facet and equation normals.
    pub fn violation(&self, v: &[f64]) -> f64 {
        let n = norm_f64(v);
        if n == 0.0 {
            return 0.0;
        }
        let f = self
            .facets
            .iter()
            .map(|a| -dot_f64(&unit_f64(a), v))
            .fold(0.0f64, f64::max);
        let e = self
            .equations
            .iter()
            .map(|b| dot_f64(&unit_f64(b), v).abs())
            .fold(0.0f64, f64::max);
        f.max(e) / n
    }

    pub fn contains_f64(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim && self.violation(v) <= tol
    }

    /// Mutual containment of generators.
    pub fn set_eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.is_subset_of(other) && other.is_subset_of(self)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.generators().iter().all(|g| other.contains(g))
    }

    /// Nearest point of the cone to `x` and its Euclidean distance.
    pub fn project(&self, x: &[f64]) -> Projection {
        let facets: Vec<Vec<f64>> = self.facets.iter().map(|a| unit_f64(a)).collect();
        let equations: Vec<Vec<f64>> = self.equations.iter().map(|b| unit_f64(b)).collect();
        project_onto(&facets, &equations, x)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.project(x).distance
    }

    pub fn to_f64(&self) -> Cone<f64> {
        let conv = |vs: &[Vec<T>]| -> Vec<Vec<f64>> {
            vs.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect()
        };
        Cone {
            dim: self.dim,
            rays: conv(&self.rays),
            lines: conv(&self.lines),
            facets: conv(&self.facets),
            equations: conv(&self.equations),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn qv(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_i64(x)).collect()
    }

    fn orthant() -> Cone<Rational> {
        Cone::from_generators(2, &[qv(&[1, 0]), qv(&[0, 1])]).unwrap()
    }

    #[test]
    fn polar_of_orthant_is_negative_orthant() {
        let p = orthant().polar();
        let expected = Cone::from_generators(2, &[qv(&[-1, 0]), qv(&[0, -1])]).unwrap();
        assert!(p.set_eq(&expected));
        assert!(p.polar().set_eq(&orthant()));
    }

    #[test]
    fn polar_of_half_plane_is_ray() {
        let h = Cone::from_constraints(2, &[qv(&[0, 1])], &[]).unwrap();
        let p = h.polar();
        assert!(p.set_eq(&Cone::from_generators(2, &[qv(&[0, -1])]).unwrap()));
        for g in p.generators() {
            for x in h.generators() {
                assert!(dot(&g, &x) <= Rational::from_i64(0));
            }
        }
    }

    #[test]
    fn polar_of_origin_is_whole_space() {
        let o = Cone::<Rational>::origin(3);
        assert!(o.polar().set_eq(&Cone::whole_space(3)));
        assert_eq!(o.polar().lines().len(), 3);
    }

    #[test]
    fn sums() {
        let up = Cone::from_generators(2, &[qv(&[0, 1])]).unwrap();
        let down = Cone::from_generators(2, &[qv(&[0, -1])]).unwrap();
        let line = up.sum(&down).unwrap();
        assert_eq!(line.lines().len(), 1);
        assert!(line.rays().is_empty());
        assert!(orthant().sum(&Cone::origin(2)).unwrap().set_eq(&orthant()));

        let h = qv(&[0, 1]);
        let hp = Cone::from_constraints(2, std::slice::from_ref(&h), &[]).unwrap();
        let hm = Cone::from_constraints(2, &[neg(&h)], &[]).unwrap();
        let hz = Cone::from_constraints(2, &[], std::slice::from_ref(&h)).unwrap();
        let s = hp.polar().sum(&hm.polar()).unwrap().sum(&hz.polar()).unwrap();
        assert!(s.set_eq(&Cone::from_rays_and_lines(2, &[], &[h]).unwrap()));
    }

    #[test]
    fn intersections() {
        let h = qv(&[1, 2]);
        let hp = Cone::from_constraints(2, std::slice::from_ref(&h), &[]).unwrap();
        let hm = Cone::from_constraints(2, &[neg(&h)], &[]).unwrap();
        let hz = Cone::from_constraints(2, &[], &[h]).unwrap();
        assert!(hp.intersect(&hm).unwrap().set_eq(&hz));
        assert!(orthant().intersect(&Cone::whole_space(2)).unwrap().set_eq(&orthant()));
        let below = Cone::from_constraints(2, &[qv(&[1, -1])], &[]).unwrap();
        let wedge = orthant().intersect(&below).unwrap();
        assert!(wedge.set_eq(&Cone::from_generators(2, &[qv(&[1, 0]), qv(&[1, 1])]).unwrap()));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(orthant().sum(&Cone::origin(3)).is_err());
        assert!(orthant().intersect(&Cone::origin(3)).is_err());
    }

    #[test]
    fn membership() {
        let wedge = Cone::from_generators(2, &[qv(&[0, 1]), qv(&[1, 1])]).unwrap();
        assert!(wedge.polar().contains(&qv(&[1, -1])));
        assert!(wedge.contains(&qv(&[0, 0])));
        let ray = Cone::from_generators(2, &[qv(&[0, -1])]).unwrap();
        assert!(!ray.contains(&qv(&[0, 1])));
    }

    #[test]
    fn projections() {
        let ray = Cone::from_generators(2, &[qv(&[1, 0])]).unwrap();
        let p = ray.project(&[3.0, 4.0]);
        assert!((p.point[0] - 3.0).abs() < 1e-12 && p.point[1].abs() < 1e-12);
        assert!((p.distance - 4.0).abs() < 1e-12);
        let p = ray.project(&[-3.0, 4.0]);
        assert!(p.point.iter().all(|c| c.abs() < 1e-12));
        assert!((p.distance - 5.0).abs() < 1e-12);
        let axis = Cone::from_constraints(2, &[], &[qv(&[0, 1])]).unwrap();
        let p = axis.project(&[1.0, 1.0]);
        assert!((p.point[0] - 1.0).abs() < 1e-12 && p.point[1].abs() < 1e-12);
        assert!((p.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_generators_are_dropped() {
        let c = Cone::from_generators(2, &[qv(&[0, 0]), qv(&[1, 0])]).unwrap();
        assert_eq!(c.rays(), &[qv(&[1, 0])]);
    }
}
