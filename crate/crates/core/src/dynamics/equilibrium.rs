//! Vertex-balanced equilibria: at `x̄`, the total flux leaving each vertex
//! equals the total flux entering it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, null_space};
use crate::model::EGraph;
use crate::scalar::{to_f64_vec, Scalar};

/// Default balance tolerance.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub candidate: Option<Vec<f64>>,
    /// Outflow minus inflow at each vertex.
    pub residuals: Vec<f64>,
    pub balanced: bool,
    /// Whether the log-linear system for `x̄` has a solution.
    pub consistent: bool,
    /// Least-squares residual of the log-linear system.
    pub consistency_residual: f64,
    /// Decided without tolerance when the rates are exact.
    pub exact_consistency: Option<bool>,
    /// Matrix-tree kernel of the vertex Laplacian, one entry per vertex.
    pub kernel: Vec<f64>,
    /// Ratio of extreme nonzero singular values of the vertex matrix.
    pub condition: f64,
}

/// `Π x_i^{s_i}`; integer exponents use repeated multiplication.
pub fn monomial(x: &[f64], s: &[f64]) -> f64 {
    x.iter()
        .zip(s)
        .map(|(xi, si)| {
            if si.fract() == 0.0 && si.abs() < 1024.0 {
                xi.powi(*si as i32)
            } else {
                xi.powf(*si)
            }
        })
        .product()
}

fn check_rates<T: Scalar>(graph: &EGraph<T>, rates: &[T]) -> Result<()> {
    if rates.len() != graph.edges().len() {
        return Err(Error::DimensionMismatch {
            expected: graph.edges().len(),
            found: rates.len(),
        });
    }
    if let Some(e) = rates.iter().position(|k| k.sign() <= 0) {
        return Err(Error::InvalidRate {
            edge: e,
            reason: "rate must be positive".into(),
        });
    }
    Ok(())
}

/// Per-vertex residuals `Σ_{out} k_e x̄^{s} − Σ_{in} k_e x̄^{s(e)}`.
/// Balanced when each is within `tol · max(1, outflow)`.
pub fn check_vertex_balanced<T: Scalar>(graph: &EGraph<T>, rates: &[T], xbar: &[f64], tol: f64) -> Result<EquilibriumResult> {
    check_rates(graph, rates)?;
    if let Some(i) = xbar.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveState { index: i });
    }
    let monos: Vec<f64> = graph.vertices().iter().map(|s| monomial(xbar, &to_f64_vec(s))).collect();
    let nv = graph.vertices().len();
    let mut out = vec![0.0; nv];
    let mut inflow = vec![0.0; nv];
    for ((s, t), k) in graph.edges().iter().zip(rates) {
        let f = k.to_f64() * monos[*s];
        out[*s] += f;
        inflow[*t] += f;
    }
    let residuals: Vec<f64> = out.iter().zip(&inflow).map(|(a, b)| a - b).collect();
    let balanced = residuals
        .iter()
        .zip(&out)
        .all(|(r, o)| r.abs() <= tol * o.max(1.0));
    Ok(EquilibriumResult {
        candidate: Some(xbar.to_vec()),
        residuals,
        balanced,
        consistent: balanced,
        consistency_residual: 0.0,
        exact_consistency: None,
        kernel: Vec::new(),
        condition: f64::NAN,
    })
}

/// Matrix-tree kernel: `K_s` is the determinant of the class Laplacian with
/// row and column `s` removed. Strictly positive on strongly connected classes.
pub fn laplacian_kernel<T: Scalar>(graph: &EGraph<T>, rates: &[T]) -> Vec<T> {
    let mut kernel = vec![T::zero(); graph.vertices().len()];
    for class in graph.linkage_classes() {
        let m = class.len();
        let pos = |v: usize| class.iter().position(|&c| c == v);
        let mut lap = vec![vec![T::zero(); m]; m];
        for ((s, t), k) in graph.edges().iter().zip(rates) {
            if let (Some(a), Some(b)) = (pos(*s), pos(*t)) {
                lap[a][a] = lap[a][a].clone() + k.clone();
                lap[b][a] = lap[b][a].clone() - k.clone();
            }
        }
        for (a, &v) in class.iter().enumerate() {
            let minor: Vec<Vec<T>> = (0..m)
                .filter(|&r| r != a)
                .map(|r| (0..m).filter(|&c| c != a).map(|c| lap[r][c].clone()).collect())
                .collect();
            kernel[v] = if m == 1 { T::one() } else { determinant(minor) };
        }
    }
    kernel
}

/// `Π K_s^{y_s}` for an integer vector `y`.
fn power_product<T: Scalar>(base: &[T], exps: &[T]) -> T {
    let mut acc = T::one();
    for (b, e) in base.iter().zip(exps) {
        let n = e.to_f64().round() as i64;
        for _ in 0..n.unsigned_abs() {
            acc = if n > 0 { acc * b.clone() } else { acc / b.clone() };
        }
    }
    acc
}

/// Solves `s·ln x̄ = ln K_s + α_class(s)` for every vertex `s`. The class
/// constants `α` take the smallest values that make the system solvable,
/// then `ln x̄` is the minimum-norm solution.
pub fn find_vertex_balanced<T: Scalar>(graph: &EGraph<T>, rates: &[T], tol: f64) -> Result<EquilibriumResult> {
    check_rates(graph, rates)?;
    graph.require_weakly_reversible()?;
    let kernel = laplacian_kernel(graph, rates);
    let classes = graph.linkage_classes();
    let nv = graph.vertices().len();
    let n = graph.dim();
    let mut class_of = vec![0; nv];
    for (c, members) in classes.iter().enumerate() {
        for &v in members {
            class_of[v] = c;
        }
    }

    // Consistency without tolerance: every integer y with yᵀS = 0 and
    // yᵀE = 0 must satisfy Π K^y = 1.
    let exact_consistency = T::EXACT.then(|| {
        let cols: Vec<Vec<T>> = (0..n)
            .map(|j| graph.vertices().iter().map(|s| s[j].clone()).collect())
            .chain((0..classes.len()).map(|c| {
                (0..nv)
                    .map(|v| if class_of[v] == c { T::one() } else { T::zero() })
                    .collect()
            }))
            .collect();
        null_space(&cols, nv)
            .iter()
            .all(|y| (power_product(&kernel, y) - T::one()).is_zero())
    });

    let a = DMatrix::from_fn(nv, n, |v, j| graph.vertices()[v][j].to_f64());
    let e = DMatrix::from_fn(nv, classes.len(), |v, c| if class_of[v] == c { 1.0 } else { 0.0 });
    let b = DVector::from_iterator(nv, kernel.iter().map(|k| k.to_f64().ln()));
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0f64, f64::max);
    let cut = 1e-12 * smax.max(1.0);
    let smin = sv.iter().copied().filter(|&s| s > cut).fold(f64::INFINITY, f64::min);
    let condition = if smin.is_finite() { smax / smin } else { f64::NAN };
    let a_pinv = svd.pseudo_inverse(cut).map_err(|m| Error::InvalidArgument(m.to_string()))?;
    let proj = DMatrix::identity(nv, nv) - &a * &a_pinv;
    let pe = &proj * &e;
    let pe_pinv = pe.clone().pseudo_inverse(1e-12).map_err(|m| Error::InvalidArgument(m.to_string()))?;
    let alpha = -(&pe_pinv * (&proj * &b));
    let rhs = &b + &e * &alpha;
    let consistency_residual = (&proj * &rhs).amax();
    let consistent = match exact_consistency {
        Some(c) => c,
        None => consistency_residual <= tol,
    };
    let logx = &a_pinv * &rhs;
    let xbar: Vec<f64> = logx.iter().map(|v| v.exp()).collect();
    let check = check_vertex_balanced(graph, rates, &xbar, tol)?;
    let balanced = consistent && check.balanced;
    Ok(EquilibriumResult {
        candidate: consistent.then_some(xbar),
        residuals: check.residuals,
        balanced,
        consistent,
        consistency_residual,
        exact_consistency,
        kernel: kernel.iter().map(Scalar::to_f64).collect(),
        condition,
    })
}

/// `h(x) = Σ x_i (ln(x_i/x̄_i) − 1) + x̄_i`; nonnegative, zero only at `x̄`.
pub fn lyapunov(x: &[f64], xbar: &[f64]) -> f64 {
    x.iter()
        .zip(xbar)
        .map(|(xi, bi)| xi * ((xi / bi).ln() - 1.0) + bi)
        .sum()
}

/// `h` along a list of states.
pub fn lyapunov_series(states: &[Vec<f64>], xbar: &[f64]) -> Vec<f64> {
    states.iter().map(|x| lyapunov(x, xbar)).collect()
}
