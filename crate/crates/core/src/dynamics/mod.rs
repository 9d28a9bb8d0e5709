//! Right-hand sides, positivity-preserving simulation under time-varying
//! rates, vertex-balanced equilibria and persistence experiments.

mod equilibrium;
mod integrate;
mod schedule;

use num::traits::Pow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::null_space;
use crate::model::{EGraph, PolySystem};
use crate::scalar::{dot_f64, to_f64_vec, Rational, Scalar};

pub use equilibrium::{
    check_vertex_balanced, find_vertex_balanced, laplacian_kernel, lyapunov, lyapunov_series, monomial,
    EquilibriumResult, BALANCE_TOL,
};
pub use integrate::{integrate, project_onto_invariants, LogField, SimOptions, SolverStats, Trajectory};
pub use schedule::{sample_schedule, RateSchedule, RatioMode, ScheduleKind, MEAN_DWELL, SCHEDULE_PERIOD};

fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::NonPositiveState { index }),
        None => Ok(()),
    }
}

/// `Σ k_i x^{s_i} v_i`, each monomial formed as `exp(ln k_i + s_i·ln x)`.
pub fn rhs<T: Scalar>(system: &PolySystem<T>, x: &[f64], rates: Option<&[f64]>) -> Result<Vec<f64>> {
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: x.len(),
        });
    }
    check_positive(x)?;
    if let Some(k) = rates {
        if k.len() != system.terms().len() {
            return Err(Error::DimensionMismatch {
                expected: system.terms().len(),
                found: k.len(),
            });
        }
        if let Some(e) = k.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidRate {
                edge: e,
                reason: "rate must be positive".into(),
            });
        }
    }
    let logx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut out = vec![0.0; system.dim()];
    for (i, t) in system.terms().iter().enumerate() {
        let k = rates.map_or_else(|| t.rate.to_f64(), |k| k[i]);
        let m = (k.ln() + dot_f64(&to_f64_vec(&t.exponent), &logx)).exp();
        for (o, v) in out.iter_mut().zip(&t.direction) {
            *o += m * v.to_f64();
        }
    }
    Ok(out)
}

/// Exact right-hand side for integer exponents and rational state.
pub fn rhs_exact(system: &PolySystem<Rational>, x: &[Rational]) -> Result<Vec<Rational>> {
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|v| v.sign() <= 0) {
        return Err(Error::NonPositiveState { index });
    }
    let mut out = vec![Rational::zero(); system.dim()];
    for t in system.terms() {
        let mut m = t.rate.clone();
        for (xi, si) in x.iter().zip(&t.exponent) {
            if !si.is_integer() {
                return Err(Error::InvalidArgument(format!("exponent {si} is not an integer")));
            }
            let e: i32 = si
                .to_integer()
                .try_into()
                .map_err(|_| Error::InvalidArgument(format!("exponent {si} is too large")))?;
            m *= Pow::pow(xi, e);
        }
        for (o, v) in out.iter_mut().zip(&t.direction) {
            *o += m.clone() * v;
        }
    }
    Ok(out)
}

impl LogField {
    pub fn from_graph<T: Scalar>(graph: &EGraph<T>) -> Self {
        Self {
            exponents: graph.edges().iter().map(|(s, _)| to_f64_vec(&graph.vertices()[*s])).collect(),
            directions: (0..graph.edges().len()).map(|e| to_f64_vec(&graph.edge_vector(e))).collect(),
        }
    }

    pub fn from_system<T: Scalar>(system: &PolySystem<T>) -> Self {
        Self {
            exponents: system.terms().iter().map(|t| to_f64_vec(&t.exponent)).collect(),
            directions: system.terms().iter().map(|t| to_f64_vec(&t.direction)).collect(),
        }
    }
}

/// Integrates the mass-action system of `graph` with rates from `schedule`,
/// tracking every conservation law of the edge space.
pub fn simulate<T: Scalar>(
    graph: &EGraph<T>,
    schedule: &RateSchedule,
    x0: &[f64],
    horizon: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if x0.len() != graph.dim() {
        return Err(Error::DimensionMismatch {
            expected: graph.dim(),
            found: x0.len(),
        });
    }
    let cons: Vec<Vec<f64>> = graph.edge_space().complement.iter().map(|c| to_f64_vec(c)).collect();
    integrate(&LogField::from_graph(graph), schedule, &cons, x0, horizon, opts)
}

/// As [`simulate`] for a term list; rates of the schedule replace the terms' own.
pub fn simulate_system<T: Scalar>(
    system: &PolySystem<T>,
    schedule: &RateSchedule,
    x0: &[f64],
    horizon: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if x0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: x0.len(),
        });
    }
    let dirs: Vec<Vec<T>> = system.terms().iter().map(|t| t.direction.clone()).collect();
    let cons: Vec<Vec<f64>> = null_space(&dirs, system.dim()).iter().map(|c| to_f64_vec(c)).collect();
    integrate(&LogField::from_system(system), schedule, &cons, x0, horizon, opts)
}

/// `h(x(t))` along a trajectory.
pub fn lyapunov_monitor(trajectory: &Trajectory, xbar: &[f64]) -> Result<Vec<f64>> {
    check_positive(xbar)?;
    Ok(lyapunov_series(&trajectory.states(), xbar))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRun {
    pub index: usize,
    pub schedule_seed: u64,
    pub x0: Vec<f64>,
    pub initial_min: f64,
    /// `min_i inf_t x_i(t)` over the accepted steps; `None` when the run failed.
    pub min_coordinate: Option<f64>,
    pub final_state: Option<Vec<f64>>,
    pub steps: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub epsilon: f64,
    pub horizon: f64,
    pub seed: u64,
    pub kind: ScheduleKind,
    pub runs: Vec<PersistenceRun>,
    /// Smallest, median and largest recorded minima over successful runs.
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub failures: usize,
}

/// Spread of random initial states, in log units around `(1, …, 1)`.
const X0_SPREAD: f64 = 2.0;

/// Runs `runs` seeded simulations of a weakly reversible graph with random
/// schedules, all started on the invariant set through `(1, …, 1)`, and
/// records how close each comes to the boundary.
pub fn persistence_stats<T: Scalar>(
    graph: &EGraph<T>,
    epsilon: f64,
    runs: usize,
    horizon: f64,
    seed: u64,
    kind: ScheduleKind,
    opts: &SimOptions,
) -> Result<PersistenceReport> {
    graph.require_weakly_reversible()?;
    crate::error::check_epsilon(epsilon)?;
    let n = graph.dim();
    let cons: Vec<Vec<f64>> = graph.edge_space().complement.iter().map(|c| to_f64_vec(c)).collect();
    let base: Vec<f64> = cons.iter().map(|c| c.iter().sum()).collect();
    let records: Vec<PersistenceRun> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let schedule_seed: u64 = rng.gen();
            let mut logx: Vec<f64> = (0..n).map(|_| rng.gen_range(-X0_SPREAD..=X0_SPREAD)).collect();
            project_onto_invariants(&cons, &base, &mut logx);
            let x0: Vec<f64> = logx.iter().map(|v| v.exp()).collect();
            let initial_min = x0.iter().copied().fold(f64::INFINITY, f64::min);
            let outcome = sample_schedule(graph.edges().len(), epsilon, kind, schedule_seed, None)
                .and_then(|s| simulate(graph, &s, &x0, horizon, opts));
            match outcome {
                Ok(t) => PersistenceRun {
                    index: i,
                    schedule_seed,
                    x0,
                    initial_min,
                    min_coordinate: Some(t.min_coordinate()),
                    final_state: Some(t.final_state()),
                    steps: t.stats.accepted,
                    error: None,
                },
                Err(e) => PersistenceRun {
                    index: i,
                    schedule_seed,
                    x0,
                    initial_min,
                    min_coordinate: None,
                    final_state: None,
                    steps: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut minima: Vec<f64> = records.iter().filter_map(|r| r.min_coordinate).collect();
    minima.sort_by(f64::total_cmp);
    Ok(PersistenceReport {
        epsilon,
        horizon,
        seed,
        kind,
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        min: minima.first().copied(),
        median: (!minima.is_empty()).then(|| minima[minima.len() / 2]),
        max: minima.last().copied(),
        runs: records,
    })
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2 = dot_f64(&ab, &ab);
    let t = if len2 > 0.0 { (dot_f64(&ap, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ap.iter()
        .zip(&ab)
        .map(|(u, v)| (u - t * v).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn directed_distance(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.par_iter()
        .map(|p| match to {
            [] => f64::INFINITY,
            [q] => point_segment_distance(p, q, q),
            _ => to
                .windows(2)
                .map(|w| point_segment_distance(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min),
        })
        .reduce(|| 0.0, f64::max)
}

/// Hausdorff distance between two polylines, measured from the vertices of
/// each to the segments of the other.
pub fn orbit_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    directed_distance(a, b).max(directed_distance(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qv(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_i64(x)).collect()
    }

    fn dimer() -> EGraph<Rational> {
        EGraph::new(2, vec![qv(&[2, 0]), qv(&[0, 1])], vec![(0, 1), (1, 0)]).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let sys = dimer().system(&qv(&[1, 1])).unwrap();
        assert_eq!(rhs(&sys, &[1.0, 1.0], None).unwrap(), vec![0.0, 0.0]);
        assert_eq!(rhs(&sys, &[1.0, 2.0], None).unwrap(), vec![2.0, -1.0]);
        assert_eq!(rhs_exact(&sys, &qv(&[1, 2])).unwrap(), qv(&[2, -1]));
        let scaled = rhs(&sys, &[1.0, 2.0], Some(&[3.0, 3.0])).unwrap();
        assert!((scaled[0] - 6.0).abs() < 1e-14 && (scaled[1] + 3.0).abs() < 1e-14);
        assert_eq!(rhs(&sys, &[0.0, 1.0], None).unwrap_err(), Error::NonPositiveState { index: 0 });
        assert!(rhs_exact(&sys, &qv(&[1, -1])).is_err());
    }

    #[test]
    fn log_domain_matches_direct_evaluation() {
        let sys = dimer().system(&qv(&[3, 2])).unwrap();
        for &(a, b) in &[(0.3, 7.0), (12.0, 0.01), (1e3, 1e-4)] {
            let direct = [4.0 * b - 6.0 * a * a, 3.0 * a * a - 2.0 * b];
            let got = rhs(&sys, &[a, b], None).unwrap();
            for (g, d) in got.iter().zip(direct) {
                assert!((g - d).abs() <= 1e-12 * (6.0 * a * a + 2.0 * b), "{g} vs {d}");
            }
        }
    }

    #[test]
    fn stationary_at_equilibrium() {
        let s = RateSchedule::constant(vec![1.0, 1.0]).unwrap();
        let t = simulate(&dimer(), &s, &[1.0, 1.0], 10.0, &SimOptions::default()).unwrap();
        assert!(t.states().iter().flatten().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn conservation_over_long_horizon() {
        let g = dimer();
        // without projection the drift is bounded by the step tolerance, not by 1e-8
        for (project, bound) in [(false, 1e-6), (true, 1e-8)] {
            let opts = SimOptions { project, ..Default::default() };
            for seed in 0..3 {
                let s = sample_schedule(2, 0.1, ScheduleKind::PiecewiseConstant, seed, None).unwrap();
                let t = simulate(&g, &s, &[0.3, 2.5], 100.0, &opts).unwrap();
                assert!(t.max_residual <= bound, "project={project} residual {}", t.max_residual);
                assert!(t.times.windows(2).all(|w| w[1] > w[0]));
                let x = t.final_state();
                assert!(((x[0] + 2.0 * x[1]) - 5.3).abs() / 5.3 <= bound);
            }
        }
    }

    #[test]
    fn edgeless_system_does_not_move() {
        let g = EGraph::<Rational>::new(2, vec![qv(&[0, 0])], vec![]).unwrap();
        let s = RateSchedule::constant(vec![]).unwrap();
        let t = simulate(&g, &s, &[0.5, 3.0], 5.0, &SimOptions::default()).unwrap();
        let x = t.final_state();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn blow_up_is_reported() {
        // x' = x^2 explodes at t = 1 from x0 = 1
        let g = EGraph::<Rational>::new(1, vec![qv(&[2]), qv(&[3])], vec![(0, 1)]).unwrap();
        let s = RateSchedule::constant(vec![1.0]).unwrap();
        let err = simulate(&g, &s, &[1.0], 5.0, &SimOptions::default()).unwrap_err();
        let Error::BlowUp { t } = err else { panic!("{err:?}") };
        assert!((t - 1.0).abs() < 1e-2, "{t}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = RateSchedule::constant(vec![1.0, 1.0]).unwrap();
        let o = SimOptions::default();
        assert!(simulate(&dimer(), &s, &[-1.0, 1.0], 1.0, &o).is_err());
        assert!(simulate(&dimer(), &s, &[1.0, 1.0], 0.0, &o).is_err());
        let short = RateSchedule::constant(vec![1.0]).unwrap();
        assert!(simulate(&dimer(), &short, &[1.0, 1.0], 1.0, &o).is_err());
    }

    #[test]
    fn lyapunov_decreases_at_fixed_rates() {
        let g = dimer();
        let xbar = find_vertex_balanced(&g, &qv(&[2, 1]), BALANCE_TOL).unwrap().candidate.unwrap();
        let s = RateSchedule::constant(vec![2.0, 1.0]).unwrap();
        let t = simulate(&g, &s, &[3.0, 0.2], 30.0, &SimOptions::default()).unwrap();
        let h = lyapunov_monitor(&t, &xbar).unwrap();
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(*h.last().unwrap() < 0.5 * h[0]);
    }

    #[test]
    fn shifted_graph_traces_same_orbit() {
        let g = dimer();
        let shifted = g.shift_vertices(&qv(&[1, 1])).unwrap();
        let s = RateSchedule::constant(vec![1.0, 1.0]).unwrap();
        let opts = SimOptions { max_step: Some(0.01), ..Default::default() };
        let a = simulate(&g, &s, &[2.0, 0.5], 40.0, &opts).unwrap().states();
        let b = simulate(&shifted, &s, &[2.0, 0.5], 40.0, &opts).unwrap().states();
        assert!(orbit_hausdorff(&a, &b) <= 1e-3);
        // a genuinely different orbit is far away
        let c = simulate(&g, &s, &[0.5, 2.0], 40.0, &opts).unwrap().states();
        assert!(orbit_hausdorff(&a, &c) > 0.1);
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(orbit_hausdorff(&a, &a), 0.0);
        assert_eq!(orbit_hausdorff(&a, &b), 1.0);
    }

    #[test]
    fn persistence_report() {
        let g = dimer();
        let r = persistence_stats(&g, 0.5, 20, 100.0, 7, ScheduleKind::PiecewiseConstant, &SimOptions::default()).unwrap();
        assert_eq!(r.runs.len(), 20);
        assert_eq!(r.failures, 0);
        assert!(r.min.unwrap() > 0.0);
        for run in &r.runs {
            assert!(((run.x0[0] + 2.0 * run.x0[1]) - 3.0).abs() < 1e-12);
        }
        let again = persistence_stats(&g, 0.5, 20, 100.0, 7, ScheduleKind::PiecewiseConstant, &SimOptions::default()).unwrap();
        assert_eq!(r, again);
        let empty = persistence_stats(&g, 0.5, 0, 100.0, 7, ScheduleKind::PiecewiseConstant, &SimOptions::default()).unwrap();
        assert!(empty.runs.is_empty() && empty.min.is_none());
    }

    #[test]
    fn persistence_without_edges_keeps_initial_minima() {
        let g = EGraph::<Rational>::new(2, vec![qv(&[0, 0])], vec![]).unwrap();
        let r = persistence_stats(&g, 0.5, 5, 10.0, 1, ScheduleKind::PiecewiseConstant, &SimOptions::default()).unwrap();
        for run in &r.runs {
            assert!((run.min_coordinate.unwrap() - run.initial_min).abs() <= 1e-15 * run.initial_min.max(1.0));
        }
    }
}
