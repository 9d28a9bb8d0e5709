//! Euclidean projection onto `{x : a·x ≥ 0, b·x = 0}` with unit normals.
//!
//! Small instances enumerate candidate active sets: the projection onto the
//! subspace cut out by each set is computed in closed form and the nearest
//! feasible candidate wins. Larger instances fall back to Dykstra's
//! alternating projections.

use crate::scalar::{dot_f64, norm_f64};

/// Result of a cone projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Facet indices tight at `point` (within the feasibility tolerance).
    pub active: Vec<usize>,
}

const FEAS_TOL: f64 = 1e-10;
const ENUMERATION_LIMIT: usize = 50_000;
const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_MAX_ITER: usize = 10_000;

/// Orthonormal basis of the span of `rows` by modified Gram-Schmidt.
fn orthonormal(rows: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = dot_f64(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm_f64(&v);
        if n > 1e-12 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn project_subspace(basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    for q in basis {
        let c = dot_f64(&p, q);
        p.iter_mut().zip(q).for_each(|(v, w)| *v -= c * w);
    }
    p
}

fn binomial_sum(n: usize, k: usize) -> usize {
    let mut total = 0usize;
    let mut c = 1usize;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul(n - i) / (i + 1);
    }
    total
}

fn finish(facets: &[Vec<f64>], x: &[f64], point: Vec<f64>) -> Projection {
    let distance = norm_f64(&x.iter().zip(&point).map(|(a, b)| a - b).collect::<Vec<_>>());
    let active = facets
        .iter()
        .enumerate()
        .filter(|(_, a)| dot_f64(a, &point).abs() <= FEAS_TOL * (1.0 + norm_f64(x)))
        .map(|(i, _)| i)
        .collect();
    Projection {
        point,
        distance,
        active,
    }
}

pub fn project_onto(facets: &[Vec<f64>], equations: &[Vec<f64>], x: &[f64]) -> Projection {
    let eq_refs: Vec<&[f64]> = equations.iter().map(Vec::as_slice).collect();
    let eq_basis = orthonormal(&eq_refs);
    let free = x.len() - eq_basis.len();
    if binomial_sum(facets.len(), free) > ENUMERATION_LIMIT {
        return finish(facets, x, dykstra(facets, &eq_basis, x));
    }

    let scale = 1.0 + norm_f64(x);
    let feasible = |p: &[f64]| facets.iter().all(|a| dot_f64(a, p) >= -FEAS_TOL * scale);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = Vec::new();
    let mut consider = |subset: &[usize], best: &mut Option<(f64, Vec<f64>)>| {
        let mut rows: Vec<&[f64]> = eq_refs.clone();
        rows.extend(subset.iter().map(|&i| facets[i].as_slice()));
        let p = project_subspace(&orthonormal(&rows), x);
        if feasible(&p) {
            let d: f64 = x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                *best = Some((d, p));
            }
        }
    };
    // Depth-first enumeration of subsets of size ≤ free, in lexicographic order.
    fn walk(
        start: usize,
        n: usize,
        left: usize,
        subset: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<f64>)>,
        consider: &mut dyn FnMut(&[usize], &mut Option<(f64, Vec<f64>)>),
    ) {
        consider(subset, best);
        if left == 0 {
            return;
        }
        for i in start..n {
            subset.push(i);
            walk(i + 1, n, left - 1, subset, best, consider);
            subset.pop();
        }
    }
    walk(0, facets.len(), free, &mut subset, &mut best, &mut consider);
    // The apex is always feasible, so some candidate exists.
    let point = best.map(|(_, p)| p).unwrap_or_else(|| vec![0.0; x.len()]);
    finish(facets, x, point)
}

/// Dykstra's algorithm over the half-spaces and the equation subspace.
fn dykstra(facets: &[Vec<f64>], eq_basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut p = project_subspace(eq_basis, x);
    let mut corrections = vec![vec![0.0; n]; facets.len() + 1];
    for _ in 0..DYKSTRA_MAX_ITER {
        let prev = p.clone();
        for (i, a) in facets.iter().enumerate() {
            let y: Vec<f64> = p.iter().zip(&corrections[i]).map(|(u, c)| u + c).collect();
            let t = dot_f64(a, &y);
            let proj: Vec<f64> = if t < 0.0 {
                y.iter().zip(a).map(|(u, w)| u - t * w).collect()
            } else {
                y.clone()
            };
            corrections[i] = y.iter().zip(&proj).map(|(u, v)| u - v).collect();
            p = proj;
        }
        let k = facets.len();
        let y: Vec<f64> = p.iter().zip(&corrections[k]).map(|(u, c)| u + c).collect();
        let proj = project_subspace(eq_basis, &y);
        corrections[k] = y.iter().zip(&proj).map(|(u, v)| u - v).collect();
        p = proj;
        let change = norm_f64(&p.iter().zip(&prev).map(|(a, b)| a - b).collect::<Vec<_>>());
        if change <= DYKSTRA_TOL * (1.0 + norm_f64(x)) {
            break;
        }
    }
    p
}
