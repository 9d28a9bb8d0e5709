//! Orderings of cycle vertices and the regrouping of a cycle's right-hand
//! side into consecutive differences `Φ_l (v_{l+1} − v_l)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, sub, vec_eq, Scalar};

/// Cycle vertices renamed `v_1, …, v_r` by decreasing `s·w`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleOrdering {
    /// `order[l]` is the cycle position of `v_{l+1}`.
    pub order: Vec<usize>,
    /// `rank[i]` is the index `l` with `v_{l+1} = s_{i+1}`; the inverse of `order`.
    pub rank: Vec<usize>,
    /// Steps `l` with `v_l·w = v_{l+1}·w` (tie-tolerant mode only).
    pub tied_steps: Vec<usize>,
}

impl CycleOrdering {
    /// Wraps an explicit permutation.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let r = order.len();
        let mut rank = vec![usize::MAX; r];
        for (l, &i) in order.iter().enumerate() {
            if i >= r || rank[i] != usize::MAX {
                return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
            }
            rank[i] = l;
        }
        Ok(Self {
            order,
            rank,
            tied_steps: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Sorts the cycle vertices by `s·w` from largest to smallest. Equal
/// projections are an error unless `tie_tolerant`, in which case the cycle
/// order breaks the tie and the step is recorded.
pub fn cycle_order<T: Scalar>(vertices: &[Vec<T>], w: &[T], tie_tolerant: bool) -> Result<CycleOrdering> {
    if w.iter().all(Scalar::is_zero) {
        return Err(Error::InvalidArgument("ordering direction must be nonzero".into()));
    }
    let proj: Vec<T> = vertices.iter().map(|s| dot(s, w)).collect();
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| {
        proj[b]
            .partial_cmp(&proj[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut tied_steps = Vec::new();
    for l in 0..order.len().saturating_sub(1) {
        let (a, b) = (order[l], order[l + 1]);
        if (proj[a].clone() - proj[b].clone()).is_zero() {
            if !tie_tolerant {
                return Err(Error::OrderingTie {
                    a: a.min(b),
                    b: a.max(b),
                });
            }
            tied_steps.push(l);
        }
    }
    let mut ord = CycleOrdering::from_order(order)?;
    ord.tied_steps = tied_steps;
    Ok(ord)
}

/// One monomial of some `Φ_l`: `sign · k_i x^{s_i}` for cycle edge `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiTerm {
    pub edge: usize,
    pub sign: i8,
}

/// Regrouped right-hand side of one cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiDecomposition {
    pub ordering: CycleOrdering,
    /// `phi[l]` lists the terms of `Φ_{l+1}`, multiplying `v_{l+2} − v_{l+1}`.
    pub phi: Vec<Vec<PhiTerm>>,
    /// Per `l`, whether positive and negative term counts agree.
    pub balanced: Vec<bool>,
    /// Whether expanding `Σ Φ_l (v_{l+1} − v_l)` returns each edge vector.
    pub telescopes: bool,
}

/// Writes each cycle edge `s_i → s_{i+1}` as a signed run of consecutive
/// differences of the ordering and collects the coefficients per step.
pub fn phi_decomposition<T: Scalar>(vertices: &[Vec<T>], ordering: &CycleOrdering) -> Result<PhiDecomposition> {
    let r = vertices.len();
    if ordering.len() != r {
        return Err(Error::OrderingLength {
            expected: r,
            found: ordering.len(),
        });
    }
    let mut phi: Vec<Vec<PhiTerm>> = vec![Vec::new(); r.saturating_sub(1)];
    for i in 0..r {
        let a = ordering.rank[i];
        let b = ordering.rank[(i + 1) % r];
        if b > a {
            for slot in &mut phi[a..b] {
                slot.push(PhiTerm { edge: i, sign: 1 });
            }
        } else {
            for slot in &mut phi[b..a] {
                slot.push(PhiTerm { edge: i, sign: -1 });
            }
        }
    }
    let balanced = phi
        .iter()
        .map(|terms| {
            let pos = terms.iter().filter(|t| t.sign > 0).count();
            pos * 2 == terms.len()
        })
        .collect();
    let dec = PhiDecomposition {
        ordering: ordering.clone(),
        phi,
        balanced,
        telescopes: false,
    };
    let telescopes = dec.reconstruct(vertices)
        .iter()
        .enumerate()
        .all(|(i, v)| vec_eq(v, &sub(&vertices[(i + 1) % r], &vertices[i])));
    Ok(PhiDecomposition { telescopes, ..dec })
}

impl PhiDecomposition {
    /// Expands the formal sum and returns, for each cycle edge `i`, the total
    /// vector multiplying `k_i x^{s_i}`.
    pub fn reconstruct<T: Scalar>(&self, vertices: &[Vec<T>]) -> Vec<Vec<T>> {
        let n = vertices.first().map_or(0, Vec::len);
        let mut out = vec![vec![T::zero(); n]; vertices.len()];
        for (l, terms) in self.phi.iter().enumerate() {
            let step = sub(
                &vertices[self.ordering.order[l + 1]],
                &vertices[self.ordering.order[l]],
            );
            for t in terms {
                for (o, d) in out[t.edge].iter_mut().zip(&step) {
                    let d = d.clone();
                    *o = o.clone() + if t.sign > 0 { d } else { -d };
                }
            }
        }
        out
    }

    /// `log k_i + X·s_i` for each cycle edge.
    pub fn log_terms(vertices: &[Vec<f64>], x: &[f64], rates: &[f64]) -> Vec<f64> {
        vertices
            .iter()
            .zip(rates)
            .map(|(s, k)| k.ln() + s.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Sign of each `Φ_l`, decided by comparing the log-sum-exp of its
    /// positive and negative parts.
    pub fn signs(&self, log_terms: &[f64]) -> Vec<i8> {
        self.phi
            .iter()
            .map(|terms| {
                let pos = log_sum_exp(terms.iter().filter(|t| t.sign > 0).map(|t| log_terms[t.edge]));
                let neg = log_sum_exp(terms.iter().filter(|t| t.sign < 0).map(|t| log_terms[t.edge]));
                match pos.partial_cmp(&neg) {
                    Some(Ordering::Greater) => 1,
                    Some(Ordering::Less) => -1,
                    _ => 0,
                }
            })
            .collect()
    }
}

/// `ln Σ e^{a_i}`, or `-∞` for an empty sum.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}
