use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, is_zero_vec, neg, normalized, parallel, unit_f64, Scalar};

use super::cone::Cone;
use super::dd::double_description;

/// Position of a point relative to each hyperplane: `+1`, `0` or `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignVector(pub Vec<i8>);

impl SignVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn zero_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == 0).count()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for s in &self.0 {
            f.write_str(match s {
                1 => "+",
                -1 => "-",
                _ => "0",
            })?;
        }
        f.write_str(")")
    }
}

/// Complete fan cut out by a central hyperplane arrangement.
///
/// Normals are kept as given (up to the scalar's normalization), pairwise
/// non-parallel. Every cone is indexed by the sign vector of its relative
/// interior.
#[derive(Clone, Debug)]
pub struct HyperplaneFan<T> {
    dim: usize,
    normals: Vec<Vec<T>>,
    units: Vec<Vec<f64>>,
    signs: Vec<SignVector>,
}

/// Half-space form of the closure of the sign-vector region.
fn constraints<T: Scalar>(normals: &[Vec<T>], sigma: &[i8]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    for (h, &s) in normals.iter().zip(sigma) {
        match s {
            0 => eqs.push(h.clone()),
            1 => ineqs.push(h.clone()),
            _ => ineqs.push(neg(h)),
        }
    }
    (ineqs, eqs)
}

/// A sign vector is realizable iff each strict constraint is strictly
/// positive on some extreme ray of the closed region; the sum of the rays is
/// then a relative-interior witness.
fn realizable<T: Scalar>(dim: usize, normals: &[Vec<T>], sigma: &[i8]) -> bool {
    let (ineqs, eqs) = constraints(normals, sigma);
    let g = double_description(dim, &ineqs, &eqs);
    ineqs
        .iter()
        .all(|a| g.rays.iter().any(|r| dot(a, r).sign() > 0))
}

impl<T: Scalar> HyperplaneFan<T> {
    /// Builds the fan of `normals`; parallel duplicates are dropped, keeping
    /// the first occurrence.
    pub fn from_hyperplanes(dim: usize, normals: &[Vec<T>]) -> Result<Self> {
        let mut kept: Vec<Vec<T>> = Vec::new();
        for (index, h) in normals.iter().enumerate() {
            if h.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: h.len(),
                });
            }
            if is_zero_vec(h) {
                return Err(Error::ZeroNormal { index });
            }
            if !kept.iter().any(|k| parallel(k, h)) {
                kept.push(normalized(h));
            }
        }

        let mut prefixes: Vec<Vec<i8>> = vec![Vec::new()];
        for i in 0..kept.len() {
            let head = &kept[..=i];
            let mut next = Vec::with_capacity(prefixes.len() * 3);
            for p in &prefixes {
                for s in [-1i8, 0, 1] {
                    let mut q = p.clone();
                    q.push(s);
                    if realizable(dim, head, &q) {
                        next.push(q);
                    }
                }
            }
            prefixes = next;
        }
        let mut signs: Vec<SignVector> = prefixes.into_iter().map(SignVector).collect();
        signs.sort();

        Ok(Self {
            dim,
            units: kept.iter().map(|h| unit_f64(h)).collect(),
            normals: kept,
            signs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Vec<T>] {
        &self.normals
    }

    pub fn unit_normals(&self) -> &[Vec<f64>] {
        &self.units
    }

    /// Realizable sign vectors in lexicographic order.
    pub fn sign_vectors(&self) -> &[SignVector] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn is_realizable(&self, sigma: &SignVector) -> bool {
        self.signs.binary_search(sigma).is_ok()
    }

    pub fn cone_of(&self, sigma: &SignVector) -> Result<Cone<T>> {
        if sigma.len() != self.normals.len() {
            return Err(Error::DimensionMismatch {
                expected: self.normals.len(),
                found: sigma.len(),
            });
        }
        if !self.is_realizable(sigma) {
            return Err(Error::Unrealizable(sigma.to_string()));
        }
        let (ineqs, eqs) = constraints(&self.normals, &sigma.0);
        Cone::from_constraints(self.dim, &ineqs, &eqs)
    }

    /// Polar of `cone_of(sigma)`, generated by `-σ_i h_i` and `±h_i` for
    /// zero entries.
    pub fn polar_of(&self, sigma: &SignVector) -> Result<Cone<T>> {
        Ok(self.cone_of(sigma)?.polar())
    }

    /// Every cone of the fan, in sign-vector order.
    pub fn cones(&self) -> Vec<(SignVector, Cone<T>)> {
        self.signs
            .iter()
            .map(|s| (s.clone(), self.cone_of(s).expect("enumerated sign vectors are realizable")))
            .collect()
    }

    /// Sign vector of the unique cone whose relative interior holds `x`.
    pub fn locate(&self, x: &[T]) -> SignVector {
        SignVector(self.normals.iter().map(|h| dot(h, x).sign()).collect())
    }

    /// Sign vectors of cones that are faces of the cone `sigma` (entries zeroed).
    pub fn faces_of(&self, sigma: &SignVector) -> Vec<SignVector> {
        self.signs
            .iter()
            .filter(|t| t.0.iter().zip(&sigma.0).all(|(&a, &b)| a == 0 || a == b))
            .cloned()
            .collect()
    }

    /// Sign vectors without zero entries: the open chambers of the arrangement.
    pub fn full_dimensional(&self) -> BTreeSet<SignVector> {
        self.signs.iter().filter(|s| s.zero_count() == 0).cloned().collect()
    }
}
