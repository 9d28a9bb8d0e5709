//! Sampled checks that a variable-k system generated by an E-graph stays
//! inside its toric differential inclusion, plus the certificates used in the
//! argument: the single-edge domination inequality and the cycle ordering
//! with its `Φ` regrouping.

mod cycle;
mod sampler;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cycle::{cycle_order, log_sum_exp, phi_decomposition, CycleOrdering, PhiDecomposition, PhiTerm};
pub use sampler::{RateBound, Sampler, MAX_CORNER_EDGES};

use crate::error::{check_epsilon, Error, Result};
use crate::inclusion::{Semantics, ToricInclusion};
use crate::model::EGraph;
use crate::polyhedral::{Cone, SignVector};
use crate::scalar::{dot, dot_f64, norm_f64, sub, to_f64_vec, Scalar};

/// Default membership tolerance, relative to `Σ k_e x^{s_e} ‖v_e‖`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const CHUNK: usize = 512;

/// A sample at which the right-hand side left the inclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    /// Right-hand side divided by `e^{log_scale}`.
    pub rhs: Vec<f64>,
    pub log_scale: f64,
    pub cone_rays: Vec<Vec<f64>>,
    pub cone_lines: Vec<Vec<f64>>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub samples: usize,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
    pub max_residual: f64,
    pub seed: u64,
    pub semantics: Semantics,
    pub rate_bound: RateBound,
    pub delta: f64,
    pub box_half_width: f64,
    /// Distinct corner assignments visited.
    pub corners_covered: usize,
    /// Strict mode: samples where the cone rule is strictly smaller than the
    /// hyperplane rule.
    pub semantic_gaps: usize,
    /// Strict mode: samples where the sum-of-polars and polar-of-intersection
    /// forms disagree.
    pub form_mismatches: usize,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Half width of the sampling box in log space; `3δ + 5` when unset.
    pub box_half_width: Option<f64>,
    pub semantics: Semantics,
    /// Ratio mode replaces the absolute bound `ε` by a ratio bound `ε₀ = ε`.
    pub ratio_mode: bool,
    pub max_witnesses: usize,
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            box_half_width: None,
            semantics: Semantics::Hyperplane,
            ratio_mode: false,
            max_witnesses: 16,
            tolerance: MEMBERSHIP_TOL,
        }
    }
}

/// Cone constraints pre-multiplied against the edge vectors: entry `[j][e]`
/// is `â_j · v_e` with exact sign.
#[derive(Clone, Debug)]
struct Prepared {
    facets: Vec<Vec<f64>>,
    equations: Vec<Vec<f64>>,
    rays: Vec<Vec<f64>>,
    lines: Vec<Vec<f64>>,
}

impl Prepared {
    fn new<T: Scalar>(cone: &Cone<T>, dirs: &[Vec<T>]) -> Self {
        let rows = |vs: &[Vec<T>]| -> Vec<Vec<f64>> {
            vs.iter()
                .map(|a| {
                    let n = norm_f64(&to_f64_vec(a));
                    dirs.iter().map(|v| dot(a, v).to_f64() / n).collect()
                })
                .collect()
        };
        Self {
            facets: rows(cone.facets()),
            equations: rows(cone.equations()),
            rays: cone.rays().iter().map(|r| to_f64_vec(r)).collect(),
            lines: cone.lines().iter().map(|l| to_f64_vec(l)).collect(),
        }
    }

    /// Largest constraint violation of `Σ w_e v_e`, relative to `scale`.
    fn residual(&self, w: &[f64], scale: f64) -> f64 {
        if scale == 0.0 {
            return 0.0;
        }
        let f = self.facets.iter().map(|c| -dot_f64(c, w)).fold(0.0f64, f64::max);
        let e = self.equations.iter().map(|c| dot_f64(c, w).abs()).fold(0.0f64, f64::max);
        f.max(e) / scale
    }
}

/// The graph's edges in floating form with exact direction vectors kept for
/// the constraint products.
struct EdgeData<T> {
    sources: Vec<Vec<f64>>,
    dirs: Vec<Vec<T>>,
    dirs_f64: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl<T: Scalar> EdgeData<T> {
    fn new(graph: &EGraph<T>) -> Self {
        let dirs: Vec<Vec<T>> = (0..graph.edges().len()).map(|e| graph.edge_vector(e)).collect();
        let dirs_f64: Vec<Vec<f64>> = dirs.iter().map(|v| to_f64_vec(v)).collect();
        Self {
            sources: graph.edges().iter().map(|&(s, _)| to_f64_vec(&graph.vertices()[s])).collect(),
            norms: dirs_f64.iter().map(|v| norm_f64(v)).collect(),
            dirs,
            dirs_f64,
        }
    }

    /// Weights `k_e x^{s_e} / e^M` with `M` the largest log-term, and `M`.
    fn weights(&self, x: &[f64], k: &[f64]) -> (Vec<f64>, f64) {
        let logs: Vec<f64> = self.sources.iter().zip(k).map(|(s, k)| k.ln() + dot_f64(s, x)).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return (Vec::new(), 0.0);
        }
        (logs.iter().map(|l| (l - m).exp()).collect(), m)
    }

    fn scaled_rhs(&self, w: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (wi, v) in w.iter().zip(&self.dirs_f64) {
            out.iter_mut().zip(v).for_each(|(o, c)| *o += wi * c);
        }
        out
    }
}

#[derive(Default)]
struct ChunkResult {
    violations: usize,
    witnesses: Vec<Witness>,
    max_residual: f64,
    gaps: usize,
    mismatches: usize,
}

struct Job<'a, T> {
    inclusion: &'a ToricInclusion<T>,
    edges: EdgeData<T>,
    sampler: Sampler,
    config: &'a VerifyConfig,
}

impl<T: Scalar> Job<'_, T> {
    fn run(&self) -> Result<ChunkResult> {
        if self.config.semantics == Semantics::Strict {
            self.inclusion.fan_cones();
        }
        let n = self.config.samples;
        let chunks: Vec<Result<ChunkResult>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| self.chunk(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect();
        let mut totals = ChunkResult::default();
        for r in chunks {
            let r = r?;
            totals.violations += r.violations;
            totals.gaps += r.gaps;
            totals.mismatches += r.mismatches;
            totals.max_residual = totals.max_residual.max(r.max_residual);
            for w in r.witnesses {
                if totals.witnesses.len() < self.config.max_witnesses {
                    totals.witnesses.push(w);
                }
            }
        }
        Ok(totals)
    }

    fn chunk(&self, range: std::ops::Range<usize>) -> Result<ChunkResult> {
        let mut hyper: HashMap<SignVector, Prepared> = HashMap::new();
        let mut strict: HashMap<Vec<usize>, (Prepared, bool, bool)> = HashMap::new();
        let mut out = ChunkResult::default();
        let dim = self.sampler.dim;
        for i in range {
            let (x, k) = self.sampler.draw(i);
            let prepared = match self.config.semantics {
                Semantics::Hyperplane => {
                    let sig = self.inclusion.signature(&x)?;
                    if !hyper.contains_key(&sig) {
                        let cone = self.inclusion.cone_for_signature(&sig)?;
                        hyper.insert(sig.clone(), Prepared::new(&cone, &self.edges.dirs));
                    }
                    &hyper[&sig]
                }
                Semantics::Strict => {
                    let near: Vec<usize> = self
                        .inclusion
                        .fan_cones()
                        .iter()
                        .enumerate()
                        .filter(|(_, (_, c))| c.distance(&x) <= self.inclusion.delta())
                        .map(|(j, _)| j)
                        .collect();
                    if !strict.contains_key(&near) {
                        let g = self.inclusion.evaluate_general(&x)?;
                        let gap = match self.inclusion.evaluate_hyperplane(&x) {
                            Ok(h) => !h.set_eq(&g.cone),
                            Err(_) => false,
                        };
                        strict.insert(near.clone(), (Prepared::new(&g.cone, &self.edges.dirs), gap, !g.agree));
                    }
                    let (p, gap, mismatch) = &strict[&near];
                    out.gaps += usize::from(*gap);
                    out.mismatches += usize::from(*mismatch);
                    p
                }
            };
            let (w, m) = self.edges.weights(&x, &k);
            let scale: f64 = w.iter().zip(&self.edges.norms).map(|(a, b)| a * b).sum();
            let r = prepared.residual(&w, scale);
            out.max_residual = out.max_residual.max(r);
            if r > self.config.tolerance {
                out.violations += 1;
                if out.witnesses.len() < self.config.max_witnesses {
                    out.witnesses.push(Witness {
                        index: i,
                        rhs: self.edges.scaled_rhs(&w, dim),
                        log_scale: m,
                        cone_rays: prepared.rays.clone(),
                        cone_lines: prepared.lines.clone(),
                        residual: r,
                        x,
                        k,
                    });
                }
            }
        }
        Ok(out)
    }
}

fn sampler_for<T: Scalar>(graph: &EGraph<T>, bound: RateBound, half_width: f64, seed: u64) -> Sampler {
    let mut classes = vec![0; graph.edges().len()];
    for (c, members) in graph.linkage_classes().iter().enumerate() {
        for (e, &(s, _)) in graph.edges().iter().enumerate() {
            if members.contains(&s) {
                classes[e] = c;
            }
        }
    }
    Sampler {
        seed,
        dim: graph.dim(),
        half_width,
        bound,
        classes,
    }
}

fn run_sampling<T: Scalar>(
    graph: &EGraph<T>,
    inclusion: &ToricInclusion<T>,
    bound: RateBound,
    config: &VerifyConfig,
) -> Result<EmbeddingReport> {
    let half_width = config.box_half_width.unwrap_or(3.0 * inclusion.delta() + 5.0);
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidArgument(format!("box half width must be positive, got {half_width}")));
    }
    let sampler = sampler_for(graph, bound, half_width, config.seed);
    let corners_covered = match sampler.corner_count() {
        0 => 0,
        c => c.min(config.samples.div_ceil(2)),
    };
    let job = Job {
        inclusion,
        edges: EdgeData::new(graph),
        sampler,
        config,
    };
    let totals = job.run()?;
    Ok(EmbeddingReport {
        samples: config.samples,
        violations: totals.violations,
        witnesses: totals.witnesses,
        max_residual: totals.max_residual,
        seed: config.seed,
        semantics: config.semantics,
        rate_bound: bound,
        delta: inclusion.delta(),
        box_half_width: half_width,
        corners_covered,
        semantic_gaps: totals.gaps,
        form_mismatches: totals.mismatches,
    })
}

/// The inclusion targeted by [`verify_embedding`] for this configuration.
/// In ratio mode the inclusion is built with `√ε₀`, since a ratio bound `ε₀`
/// gives the same domination margin as absolute bounds `√ε₀`.
pub fn target_inclusion<T: Scalar>(graph: &EGraph<T>, eps: f64, ratio_mode: bool) -> Result<ToricInclusion<T>> {
    check_epsilon(eps)?;
    let e = if ratio_mode { eps.sqrt() } else { eps };
    ToricInclusion::build_weakly_reversible(graph, e)
}

fn bound_for(eps: f64, ratio_mode: bool) -> RateBound {
    if ratio_mode {
        RateBound::Ratio { epsilon0: eps }
    } else {
        RateBound::Absolute { epsilon: eps }
    }
}

/// Samples `(X, k)` and checks that the right-hand side at `x = e^X` lies in
/// `F(X)` of the inclusion built from the graph.
pub fn verify_embedding<T: Scalar>(graph: &EGraph<T>, eps: f64, config: &VerifyConfig) -> Result<EmbeddingReport> {
    let inclusion = target_inclusion(graph, eps, config.ratio_mode)?;
    run_sampling(graph, &inclusion, bound_for(eps, config.ratio_mode), config)
}

/// Same sampling against an explicitly supplied inclusion.
pub fn verify_against<T: Scalar>(
    graph: &EGraph<T>,
    inclusion: &ToricInclusion<T>,
    bound: RateBound,
    config: &VerifyConfig,
) -> Result<EmbeddingReport> {
    if inclusion.dim() != graph.dim() {
        return Err(Error::DimensionMismatch {
            expected: graph.dim(),
            found: inclusion.dim(),
        });
    }
    run_sampling(graph, inclusion, bound, config)
}

/// Negative control: samples a graph that is not weakly reversible against the
/// inclusion of its edge-vector hyperplanes and reports what leaves it.
/// Edgeless graphs are accepted and vacuous.
pub fn counterexample_search<T: Scalar>(graph: &EGraph<T>, eps: f64, config: &VerifyConfig) -> Result<EmbeddingReport> {
    check_epsilon(eps)?;
    if !graph.edges().is_empty() && graph.is_weakly_reversible() {
        return Err(Error::WeaklyReversible);
    }
    let inclusion = ToricInclusion::build_from_edges(graph, eps)?;
    run_sampling(graph, &inclusion, RateBound::Absolute { epsilon: eps }, config)
}

impl Witness {
    /// Recomputes the residual of this witness; true when it still fails.
    pub fn replays<T: Scalar>(
        &self,
        graph: &EGraph<T>,
        inclusion: &ToricInclusion<T>,
        semantics: Semantics,
        tolerance: f64,
    ) -> Result<bool> {
        let cone = inclusion.evaluate(&self.x, semantics)?;
        let edges = EdgeData::new(graph);
        let (w, _) = edges.weights(&self.x, &self.k);
        let scale: f64 = w.iter().zip(&edges.norms).map(|(a, b)| a * b).sum();
        Ok(Prepared::new(&cone, &edges.dirs).residual(&w, scale) > tolerance)
    }
}

impl EmbeddingReport {
    /// Regenerates each witness from the seed and checks that it is the
    /// recorded sample and still fails.
    pub fn replay<T: Scalar>(&self, graph: &EGraph<T>, inclusion: &ToricInclusion<T>, tolerance: f64) -> Result<bool> {
        let sampler = sampler_for(graph, self.rate_bound, self.box_half_width, self.seed);
        for w in &self.witnesses {
            if sampler.draw(w.index) != (w.x.clone(), w.k.clone()) {
                return Ok(false);
            }
            if !w.replays(graph, inclusion, self.semantics, tolerance)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Outcome of the single-edge domination check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleEdgeReport {
    pub samples: usize,
    pub violations: usize,
    pub delta: f64,
    /// Samples outside the uncertainty slab, where domination was checked.
    pub decided: usize,
    /// Samples inside the slab, where only collinearity was checked.
    pub undecided: usize,
    /// Largest relative component of the right-hand side orthogonal to `s' − s`.
    pub max_collinearity_residual: f64,
    pub first_violation: Option<(Vec<f64>, Vec<f64>)>,
    pub seed: u64,
}

/// For the reversible pair `s ⇌ s'` and `δ = 2|ln ε| / ‖s' − s‖`: whenever
/// `|X·(s'−s)| / ‖s'−s‖ > δ`, the monomial on the far side dominates for
/// every admissible pair of rates, so the right-hand side points along
/// `-sign(X·(s'−s)) (s'−s)`. The comparison is made between the logarithms
/// `ln k + X·s`, never between the monomials themselves.
pub fn single_edge_certificate<T: Scalar>(s: &[T], s2: &[T], eps: f64, samples: usize, seed: u64) -> Result<SingleEdgeReport> {
    check_epsilon(eps)?;
    if s.len() != s2.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            found: s2.len(),
        });
    }
    let h = to_f64_vec(&sub(s2, s));
    let hn = norm_f64(&h);
    if hn == 0.0 {
        return Err(Error::InvalidArgument("s and s' must differ".into()));
    }
    let (sf, s2f) = (to_f64_vec(s), to_f64_vec(s2));
    let delta = 2.0 * eps.ln().abs() / hn;
    let sampler = Sampler {
        seed,
        dim: s.len(),
        half_width: 3.0 * delta + 5.0,
        bound: RateBound::Absolute { epsilon: eps },
        classes: vec![0, 0],
    };
    let bound = 2.0 * eps.ln().abs();
    let mut report = SingleEdgeReport {
        samples,
        violations: 0,
        delta,
        decided: 0,
        undecided: 0,
        max_collinearity_residual: 0.0,
        first_violation: None,
        seed,
    };
    for i in 0..samples {
        let (x, k) = sampler.draw(i);
        let d = dot_f64(&x, &h);
        let lf = k[0].ln() + dot_f64(&x, &sf);
        let lb = k[1].ln() + dot_f64(&x, &s2f);
        let ok = if d.abs() / hn > delta {
            report.decided += 1;
            // key inequality, then the domination it implies
            d.abs() > bound && if d > 0.0 { lb > lf } else { lf > lb }
        } else {
            report.undecided += 1;
            let m = lf.max(lb);
            let c = (lf - m).exp() - (lb - m).exp();
            let rhs: Vec<f64> = h.iter().map(|v| c * v).collect();
            let along = dot_f64(&rhs, &h) / (hn * hn);
            let perp: Vec<f64> = rhs.iter().zip(&h).map(|(r, v)| r - along * v).collect();
            let r = norm_f64(&perp) / (hn * ((lf - m).exp() + (lb - m).exp()));
            report.max_collinearity_residual = report.max_collinearity_residual.max(r);
            r <= MEMBERSHIP_TOL
        };
        if !ok {
            report.violations += 1;
            report.first_violation.get_or_insert((x, k));
        }
    }
    Ok(report)
}

/// Per-cycle certificate at a point: the ordering by `w = X`, the `Φ`
/// regrouping, and the sign of each `Φ_l` at the given rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleCertificate {
    pub sign_vector: SignVector,
    pub witness: Vec<f64>,
    pub decomposition: PhiDecomposition,
    pub phi_signs: Vec<i8>,
}

/// Builds the certificate for one cycle (vertices in cycle order) at `x` with
/// per-edge rates `k`. `sign_vector` locates `x` in the inclusion's fan.
pub fn cycle_certificate<T: Scalar>(
    inclusion: &ToricInclusion<T>,
    vertices: &[Vec<T>],
    x: &[f64],
    k: &[f64],
    tie_tolerant: bool,
) -> Result<CycleCertificate> {
    let xs: Vec<Vec<f64>> = vertices.iter().map(|v| to_f64_vec(v)).collect();
    let ordering = cycle_order(&xs, x, tie_tolerant)?;
    let decomposition = phi_decomposition(vertices, &ordering)?;
    let logs = PhiDecomposition::log_terms(&xs, x, k);
    Ok(CycleCertificate {
        sign_vector: inclusion.signature(x)?,
        witness: x.to_vec(),
        phi_signs: decomposition.signs(&logs),
        decomposition,
    })
}
