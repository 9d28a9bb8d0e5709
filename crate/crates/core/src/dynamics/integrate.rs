//! Dormand–Prince 5(4) in log coordinates `X = ln x`.
//!
//! `dX_i/dt = Σ_e k_e(t) exp(s_e·X − X_i) v_{e,i}`, so positivity of `x` is
//! automatic. Steps never straddle a discontinuity of the rate schedule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot_f64, norm_f64};

use super::schedule::RateSchedule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Largest step; unbounded when `None`.
    pub max_step: Option<f64>,
    /// Pull each accepted state back onto `{c·x = c·x₀}` for every
    /// conservation vector `c` (a few Newton steps in log coordinates).
    /// Without it the drift over long horizons is of the order of `rtol`.
    pub project: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 10_000_000,
            initial_step: None,
            max_step: None,
            project: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub projections: usize,
}

/// Accepted states of an integration, in log coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub log_states: Vec<Vec<f64>>,
    pub stats: SolverStats,
    pub conservation: Vec<Vec<f64>>,
    /// `|c·(x(t) − x₀)| / |c·x₀|` per recorded time and conservation vector.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
}

impl Trajectory {
    pub fn states(&self) -> Vec<Vec<f64>> {
        self.log_states
            .iter()
            .map(|x| x.iter().map(|v| v.exp()).collect())
            .collect()
    }

    pub fn final_state(&self) -> Vec<f64> {
        self.log_states
            .last()
            .map(|x| x.iter().map(|v| v.exp()).collect())
            .unwrap_or_default()
    }

    /// Smallest coordinate over all recorded states.
    pub fn min_coordinate(&self) -> f64 {
        self.log_states
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, v| m.min(v.exp()))
    }
}

/// Log-coordinate vector field of a monomial system.
#[derive(Clone, Debug)]
pub struct LogField {
    pub exponents: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
}

impl LogField {
    pub fn dim(&self) -> usize {
        self.exponents.first().map_or(0, Vec::len)
    }

    pub fn eval(&self, x: &[f64], k: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for ((s, v), k) in self.exponents.iter().zip(&self.directions).zip(k) {
            let l = k.ln() + dot_f64(s, x);
            for (i, o) in out.iter_mut().enumerate() {
                if v[i] != 0.0 {
                    *o += (l - x[i]).exp() * v[i];
                }
            }
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// States beyond this log magnitude overflow `f64` and signal blow-up.
const LOG_LIMIT: f64 = 700.0;

fn residuals(cons: &[Vec<f64>], base: &[f64], x: &[f64]) -> Vec<f64> {
    let xs: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    cons.iter()
        .zip(base)
        .map(|(c, b)| {
            let d = (dot_f64(c, &xs) - b).abs();
            if b.abs() > 0.0 {
                d / b.abs()
            } else {
                d
            }
        })
        .collect()
}

/// Newton iteration for `C exp(X + Cᵀλ) = b`; the correction keeps `x`
/// positive.
pub fn project_onto_invariants(cons: &[Vec<f64>], base: &[f64], x: &mut [f64]) -> bool {
    if cons.is_empty() {
        return true;
    }
    let n = x.len();
    let m = cons.len();
    let cmat = DMatrix::from_fn(m, n, |i, j| cons[i][j]);
    for _ in 0..8 {
        let xs = DVector::from_iterator(n, x.iter().map(|v| v.exp()));
        let g = &cmat * &xs - DVector::from_column_slice(base);
        let scale = base.iter().fold(1e-300f64, |a, b| a.max(b.abs()));
        if g.amax() <= 1e-15 * scale {
            return true;
        }
        let jac = &cmat * DMatrix::from_diagonal(&xs) * cmat.transpose();
        let Some(lambda) = jac.lu().solve(&(-g)) else {
            return false;
        };
        let step = cmat.transpose() * lambda;
        for (xi, d) in x.iter_mut().zip(step.iter()) {
            *xi += d;
        }
    }
    true
}

/// Integrates from `x0 > 0` over `[0, horizon]`, recording every accepted step.
pub fn integrate(
    field: &LogField,
    schedule: &RateSchedule,
    conservation: &[Vec<f64>],
    x0: &[f64],
    horizon: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if let Some(i) = x0.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveState { index: i });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if schedule.edges() != field.exponents.len() {
        return Err(Error::DimensionMismatch {
            expected: field.exponents.len(),
            found: schedule.edges(),
        });
    }
    let n = x0.len();
    let base: Vec<f64> = conservation.iter().map(|c| dot_f64(c, x0)).collect();
    let mut x: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    let mut traj = Trajectory {
        times: vec![0.0],
        log_states: vec![x.clone()],
        stats: SolverStats::default(),
        conservation: conservation.to_vec(),
        residuals: vec![vec![0.0; conservation.len()]],
        max_residual: 0.0,
    };

    let mut stops = schedule.breakpoints(0.0, horizon);
    stops.push(horizon);
    let mut t = 0.0;
    let mut h = opts.initial_step.unwrap_or(1e-3 * horizon.min(1.0));
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    for &stop in &stops {
        let rates_piece = |tt: f64| schedule.rates_at(tt);
        // first stage at the start of each piece; rates are right-continuous
        field.eval(&x, &rates_piece(t), &mut k[0]);
        traj.stats.evaluations += 1;
        while t < stop {
            if traj.stats.accepted + traj.stats.rejected >= opts.max_steps {
                return Err(Error::ToleranceFailure { t });
            }
            if let Some(mx) = opts.max_step {
                h = h.min(mx);
            }
            let last = t + h >= stop;
            let hh = if last { stop - t } else { h };
            // stage times are clamped inside the piece so that each step sees one rate vector
            for s in 1..7 {
                for i in 0..n {
                    stage[i] = x[i] + hh * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                let ts = (t + C[s] * hh).min(stop - f64::EPSILON * stop.abs().max(1.0)).max(t);
                field.eval(&stage, &rates_piece(ts), &mut k[s]);
            }
            traj.stats.evaluations += 6;
            // stage 7 is the fifth-order solution (first-same-as-last)
            for i in 0..n {
                y_new[i] = x[i] + hh * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>();
            }
            let mut err = 0.0;
            for i in 0..n {
                let e = hh * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * x[i].abs().max(y_new[i].abs());
                err += (e / sc).powi(2);
            }
            let err = if n > 0 { (err / n as f64).sqrt() } else { 0.0 };
            if !err.is_finite() {
                h = hh * 0.2;
                traj.stats.rejected += 1;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::BlowUp { t });
                }
                continue;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { stop } else { t + hh };
                x.copy_from_slice(&y_new);
                if opts.project && !conservation.is_empty() {
                    project_onto_invariants(conservation, &base, &mut x);
                    traj.stats.projections += 1;
                    field.eval(&x, &rates_piece(t.min(stop - f64::EPSILON * stop.abs().max(1.0)).max(0.0)), &mut k[0]);
                    traj.stats.evaluations += 1;
                } else {
                    let k7 = k[6].clone();
                    k[0].copy_from_slice(&k7);
                }
                traj.stats.accepted += 1;
                if norm_f64(&x) > LOG_LIMIT || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::BlowUp { t });
                }
                let r = residuals(conservation, &base, &x);
                traj.max_residual = r.iter().copied().fold(traj.max_residual, f64::max);
                traj.times.push(t);
                traj.log_states.push(x.clone());
                traj.residuals.push(r);
                if !last {
                    h = hh * fac;
                }
            } else {
                traj.stats.rejected += 1;
                h = hh * fac.min(1.0);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::BlowUp { t });
                }
            }
        }
    }
    Ok(traj)
}
