//! Small dense linear algebra over [`Scalar`]: echelon forms, null spaces,
//! determinants.

use crate::scalar::Scalar;

/// Reduced row echelon basis of a row space, built incrementally.
#[derive(Clone, Debug)]
pub struct Echelon<T> {
    ncols: usize,
    rows: Vec<Vec<T>>,
    pivots: Vec<usize>,
}

impl<T: Scalar> Echelon<T> {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn reduce(&self, v: &[T]) -> Vec<T> {
        let mut r = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for (x, y) in r.iter_mut().zip(row) {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        r
    }

    /// Adds `v` to the basis; returns false when `v` already lies in the span.
    pub fn insert(&mut self, v: &[T]) -> bool {
        debug_assert_eq!(v.len(), self.ncols);
        let mut scaled = v.to_vec();
        if !T::EXACT {
            T::normalize(&mut scaled);
        }
        let mut r = self.reduce(&scaled);
        let Some(p) = pivot_index(&r) else {
            return false;
        };
        let inv = T::one() / r[p].clone();
        for x in r.iter_mut() {
            *x = x.clone() * inv.clone();
        }
        r[p] = T::one();
        for row in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let f = row[p].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }

    pub fn contains(&self, v: &[T]) -> bool {
        let mut scaled = v.to_vec();
        if !T::EXACT {
            T::normalize(&mut scaled);
        }
        pivot_index(&self.reduce(&scaled)).is_none()
    }

    /// Basis of the orthogonal complement of the row space.
    pub fn null_space(&self) -> Vec<Vec<T>> {
        let free: Vec<usize> = (0..self.ncols).filter(|c| !self.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.ncols];
                v[f] = T::one();
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    v[p] = -row[f].clone();
                }
                T::normalize(&mut v);
                v
            })
            .collect()
    }
}

/// Column of the entry of largest magnitude, or None if the vector is zero.
fn pivot_index<T: Scalar>(v: &[T]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let m = x.abs().to_f64();
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

pub fn rank<T: Scalar>(rows: &[Vec<T>], ncols: usize) -> usize {
    let mut e = Echelon::new(ncols);
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Indices of a maximal linearly independent subset, chosen greedily in order.
pub fn independent_rows<T: Scalar>(rows: &[Vec<T>], ncols: usize) -> Vec<usize> {
    let mut e = Echelon::new(ncols);
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| e.insert(r).then_some(i))
        .collect()
}

/// Basis of {x : r·x = 0 for every row r}.
pub fn null_space<T: Scalar>(rows: &[Vec<T>], ncols: usize) -> Vec<Vec<T>> {
    let mut e = Echelon::new(ncols);
    for r in rows {
        e.insert(r);
    }
    e.null_space()
}

pub fn determinant<T: Scalar>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .to_f64()
                    .partial_cmp(&m[b][col].abs().to_f64())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(p) = pivot else {
            return T::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pv = m[col][col].clone();
        det = det * pv.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone() / pv.clone();
            for c in col..n {
                let v = m[col][c].clone();
                m[r][c] = m[r][c].clone() - f.clone() * v;
            }
        }
    }
    det
}
