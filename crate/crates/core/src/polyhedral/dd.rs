//! Double-description conversion from half-space form to generator form.
//!
//! The cone `{x : a·x ≥ 0 for a in ineqs, b·x = 0 for b in eqs}` is built by
//! starting from the linear subspace cut out by the equations and adding one
//! inequality at a time. Extreme rays are tracked together with the set of
//! processed inequalities they make tight; new rays are formed only from
//! pairs that pass the combinatorial adjacency test, so the ray list stays
//! minimal throughout.

use crate::linalg::null_space;
use crate::scalar::{dot, neg, normalized, vec_eq, Scalar};

/// Generator form: `cone(rays) + span(lines)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generators<T> {
    pub rays: Vec<Vec<T>>,
    pub lines: Vec<Vec<T>>,
}

struct Ray<T> {
    v: Vec<T>,
    tight: Vec<bool>,
}

fn combine<T: Scalar>(a: &T, x: &[T], b: &T, y: &[T]) -> Vec<T> {
    x.iter()
        .zip(y)
        .map(|(p, q)| a.clone() * p.clone() + b.clone() * q.clone())
        .collect()
}

fn subset(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| !x || y)
}

pub fn double_description<T: Scalar>(dim: usize, ineqs: &[Vec<T>], eqs: &[Vec<T>]) -> Generators<T> {
    let mut lines: Vec<Vec<T>> = null_space(eqs, dim);
    let mut rays: Vec<Ray<T>> = Vec::new();

    for (k, a) in ineqs.iter().enumerate() {
        let a = normalized(a);
        let line_vals: Vec<T> = lines.iter().map(|l| dot(&a, l)).collect();
        let pivot = line_vals
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .max_by(|(_, x), (_, y)| {
                x.abs()
                    .to_f64()
                    .partial_cmp(&y.abs().to_f64())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i);

        if let Some(p) = pivot {
            // The new half-space cuts the lineality space: one line becomes a ray.
            let mut l0 = lines.remove(p);
            let mut a0 = line_vals[p].clone();
            if a0.sign() < 0 {
                l0 = neg(&l0);
                a0 = -a0;
            }
            let rest: Vec<T> = line_vals
                .into_iter()
                .enumerate()
                .filter(|&(i, _)| i != p)
                .map(|(_, v)| v)
                .collect();
            for (l, v) in lines.iter_mut().zip(rest) {
                let f = -(v / a0.clone());
                *l = normalized(&combine(&T::one(), l, &f, &l0));
            }
            for r in rays.iter_mut() {
                let v = dot(&a, &r.v);
                let f = -(v / a0.clone());
                r.v = normalized(&combine(&T::one(), &r.v, &f, &l0));
                r.tight.push(true);
            }
            let mut tight = vec![true; k];
            tight.push(false);
            rays.push(Ray {
                v: normalized(&l0),
                tight,
            });
            continue;
        }

        let vals: Vec<T> = rays.iter().map(|r| dot(&a, &r.v)).collect();
        let signs: Vec<i8> = vals.iter().map(Scalar::sign).collect();
        let mut new_rays: Vec<Ray<T>> = Vec::new();
        for (i, p) in rays.iter().enumerate() {
            if signs[i] <= 0 {
                continue;
            }
            for (j, n) in rays.iter().enumerate() {
                if signs[j] >= 0 {
                    continue;
                }
                let common: Vec<bool> = p.tight.iter().zip(&n.tight).map(|(&x, &y)| x && y).collect();
                let blocked = rays
                    .iter()
                    .enumerate()
                    .any(|(m, r)| m != i && m != j && subset(&common, &r.tight));
                if blocked {
                    continue;
                }
                let v = combine(&vals[i], &n.v, &(-vals[j].clone()), &p.v);
                let mut tight = common;
                tight.push(true);
                new_rays.push(Ray {
                    v: normalized(&v),
                    tight,
                });
            }
        }
        let mut kept: Vec<Ray<T>> = rays
            .into_iter()
            .zip(&signs)
            .filter(|(_, &s)| s >= 0)
            .map(|(mut r, &s)| {
                r.tight.push(s == 0);
                r
            })
            .collect();
        kept.extend(new_rays);
        rays = kept;
    }

    let mut out: Vec<Vec<T>> = Vec::with_capacity(rays.len());
    for r in rays {
        if r.v.iter().all(Scalar::is_zero) {
            continue;
        }
        if !out.iter().any(|o| vec_eq(o, &r.v)) {
            out.push(r.v);
        }
    }
    Generators {
        rays: out,
        lines: lines.into_iter().map(|l| normalized(&l)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn qv(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_i64(x)).collect()
    }

    #[test]
    fn whole_space_has_only_lines() {
        let g = double_description::<Rational>(3, &[], &[]);
        assert!(g.rays.is_empty());
        assert_eq!(g.lines.len(), 3);
    }

    #[test]
    fn orthant_has_unit_rays() {
        let g = double_description(2, &[qv(&[1, 0]), qv(&[0, 1])], &[]);
        assert!(g.lines.is_empty());
        assert_eq!(g.rays.len(), 2);
        assert!(g.rays.contains(&qv(&[1, 0])));
        assert!(g.rays.contains(&qv(&[0, 1])));
    }

    #[test]
    fn wedge_below_diagonal() {
        // {x ≥ 0, y ≥ 0, x - y ≥ 0}
        let g = double_description(2, &[qv(&[1, 0]), qv(&[0, 1]), qv(&[1, -1])], &[]);
        assert_eq!(g.rays.len(), 2);
        assert!(g.rays.contains(&qv(&[1, 0])));
        assert!(g.rays.contains(&qv(&[1, 1])));
    }

    #[test]
    fn square_pyramid_in_3d() {
        // cone over a square: four facets, four extreme rays
        let ineqs = vec![qv(&[1, 0, 1]), qv(&[-1, 0, 1]), qv(&[0, 1, 1]), qv(&[0, -1, 1])];
        let g = double_description(3, &ineqs, &[]);
        assert!(g.lines.is_empty());
        assert_eq!(g.rays.len(), 4);
        for r in [[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, 1]] {
            assert!(g.rays.contains(&qv(&r)), "missing {r:?}");
        }
    }

    #[test]
    fn equations_restrict_to_subspace() {
        let g = double_description(3, &[qv(&[1, 0, 0])], &[qv(&[0, 0, 1])]);
        assert_eq!(g.rays, vec![qv(&[1, 0, 0])]);
        assert_eq!(g.lines, vec![qv(&[0, 1, 0])]);
    }

    #[test]
    fn contradictory_half_spaces_give_zero_cone() {
        let g = double_description(1, &[qv(&[1]), qv(&[-1])], &[]);
        assert!(g.rays.is_empty() && g.lines.is_empty());
    }
}
