use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_epsilon, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    PiecewiseConstant,
    Sinusoidal,
    CornerAdversarial,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "piecewise-constant" | "piecewise" => Ok(Self::PiecewiseConstant),
            "sinusoidal" => Ok(Self::Sinusoidal),
            "corner-adversarial" | "corner" => Ok(Self::CornerAdversarial),
            _ => Err(Error::InvalidArgument(format!("unknown schedule kind {s:?}"))),
        }
    }
}

/// Piecewise-constant schedules are generated up to this time and repeat
/// periodically afterwards.
pub const SCHEDULE_PERIOD: f64 = 1e4;

/// Mean dwell time of piecewise-constant and corner schedules.
pub const MEAN_DWELL: f64 = 1.0;

/// Range of the free per-class level in ratio mode, in log units.
const RATIO_LEVEL: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    Constant(Vec<f64>),
    Pieces {
        /// Piece start times, beginning at 0.
        starts: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    Sinusoidal {
        amplitude: f64,
        omega: Vec<f64>,
        phase: Vec<f64>,
    },
}

/// Time-dependent rates `k_e(t)` for each edge.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSchedule {
    kind: ScheduleKind,
    epsilon: f64,
    ratio: Option<f64>,
    edges: usize,
    seed: u64,
    profile: Profile,
}

/// Linkage-class assignment used by the ratio mode.
#[derive(Clone, Debug, Default)]
pub struct RatioMode {
    pub epsilon0: f64,
    pub classes: Vec<usize>,
}

impl RateSchedule {
    /// Rates fixed at the given values.
    pub fn constant(rates: Vec<f64>) -> Result<Self> {
        if let Some(e) = rates.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidRate {
                edge: e,
                reason: format!("rate must be positive, got {}", rates[e]),
            });
        }
        let lo = rates.iter().copied().fold(1.0f64, f64::min);
        let hi = rates.iter().copied().fold(1.0f64, f64::max);
        let epsilon = lo.min(1.0 / hi);
        Ok(Self {
            kind: ScheduleKind::Constant,
            epsilon,
            ratio: None,
            edges: rates.len(),
            seed: 0,
            profile: Profile::Constant(rates),
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ratio(&self) -> Option<f64> {
        self.ratio
    }

    pub fn edges(&self) -> usize {
        self.edges
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rates_at(&self, t: f64) -> Vec<f64> {
        match &self.profile {
            Profile::Constant(k) => k.clone(),
            Profile::Pieces { starts, values } => {
                let tau = t.rem_euclid(SCHEDULE_PERIOD);
                let idx = starts.partition_point(|&s| s <= tau).saturating_sub(1);
                values[idx].clone()
            }
            Profile::Sinusoidal {
                amplitude,
                omega,
                phase,
            } => omega
                .iter()
                .zip(phase)
                .map(|(w, p)| (amplitude * (w * t + p).sin()).exp())
                .collect(),
        }
    }

    /// Discontinuities of the schedule inside `(t0, t1)`, in order.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let Profile::Pieces { starts, .. } = &self.profile else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut base = (t0 / SCHEDULE_PERIOD).floor() * SCHEDULE_PERIOD;
        while base < t1 {
            for &s in starts {
                let b = base + s;
                if b > t0 && b < t1 {
                    out.push(b);
                }
            }
            base += SCHEDULE_PERIOD;
        }
        out
    }

    /// Checks the defining bounds at `t`: absolute `ε ≤ k ≤ 1/ε`, or in ratio
    /// mode `ε₀ ≤ k_e/k_f ≤ 1/ε₀` within each class.
    pub fn within_bounds(&self, t: f64, classes: &[usize]) -> bool {
        let k = self.rates_at(t);
        let slack = 1e-12;
        match self.ratio {
            None => k
                .iter()
                .all(|&v| v >= self.epsilon * (1.0 - slack) && v <= (1.0 + slack) / self.epsilon),
            Some(e0) => k.iter().enumerate().all(|(a, ka)| {
                k.iter()
                    .enumerate()
                    .filter(|(b, _)| classes.get(*b) == classes.get(a))
                    .all(|(_, kb)| ka / kb >= e0 * (1.0 - slack) && ka / kb <= (1.0 + slack) / e0)
            }),
        }
    }
}

/// Draws a schedule for `edges` edges. Absolute mode keeps every rate in
/// `[ε, 1/ε]`; with `ratio` set, rates in a class share a random level and
/// differ from each other by at most the factor `1/ε₀`.
pub fn sample_schedule(
    edges: usize,
    epsilon: f64,
    kind: ScheduleKind,
    seed: u64,
    ratio: Option<&RatioMode>,
) -> Result<RateSchedule> {
    check_epsilon(epsilon)?;
    if let Some(r) = ratio {
        check_epsilon(r.epsilon0)?;
        if r.classes.len() != edges {
            return Err(Error::DimensionMismatch {
                expected: edges,
                found: r.classes.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = epsilon.ln().abs();
    let draw = |rng: &mut ChaCha8Rng, corner: Option<u64>| -> Vec<f64> {
        match ratio {
            None => (0..edges)
                .map(|e| match corner {
                    Some(c) => if c >> (e % 64) & 1 == 1 { 1.0 / epsilon } else { epsilon },
                    None => rng.gen_range(-l..=l).exp(),
                })
                .collect(),
            Some(r) => {
                let half = r.epsilon0.ln().abs() / 2.0;
                let n = r.classes.iter().copied().max().map_or(0, |c| c + 1);
                let levels: Vec<f64> = (0..n).map(|_| rng.gen_range(-RATIO_LEVEL..=RATIO_LEVEL)).collect();
                (0..edges)
                    .map(|e| {
                        let u = match corner {
                            Some(c) => if c >> (e % 64) & 1 == 1 { half } else { -half },
                            None => rng.gen_range(-half..=half),
                        };
                        (levels[r.classes[e]] + u).exp()
                    })
                    .collect()
            }
        }
    };
    let profile = match kind {
        ScheduleKind::Constant => Profile::Constant(vec![1.0; edges]),
        ScheduleKind::PiecewiseConstant => {
            let mut starts = vec![0.0];
            let mut values = vec![draw(&mut rng, None)];
            let mut t = 0.0;
            loop {
                // exponential dwell with mean MEAN_DWELL
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                t += -MEAN_DWELL * u.ln();
                if t >= SCHEDULE_PERIOD {
                    break;
                }
                starts.push(t);
                values.push(draw(&mut rng, None));
            }
            Profile::Pieces { starts, values }
        }
        ScheduleKind::CornerAdversarial => {
            let pieces = (SCHEDULE_PERIOD / MEAN_DWELL) as usize;
            // corners with the first edge low, each followed by its complement,
            // so consecutive pieces always differ
            let mask: u64 = if edges >= 64 { u64::MAX } else { (1u64 << edges) - 1 };
            let half = if edges == 0 { 1 } else { 1u64 << (edges.min(64) - 1) };
            let offset = rng.gen_range(0..half);
            let starts = (0..pieces).map(|j| j as f64 * MEAN_DWELL).collect();
            let values = (0..pieces)
                .map(|j| {
                    let base = ((offset + (j / 2) as u64) % half) << 1;
                    let c = if j % 2 == 0 { base } else { !base & mask };
                    draw(&mut rng, Some(c))
                })
                .collect();
            Profile::Pieces { starts, values }
        }
        ScheduleKind::Sinusoidal => {
            let half = match ratio {
                Some(r) => r.epsilon0.ln().abs() / 2.0,
                None => l,
            };
            Profile::Sinusoidal {
                amplitude: half,
                omega: (0..edges).map(|_| rng.gen_range(0.1..=3.0)).collect(),
                phase: (0..edges)
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect(),
            }
        }
    };
    Ok(RateSchedule {
        kind,
        epsilon,
        ratio: ratio.map(|r| r.epsilon0),
        edges,
        seed,
        profile,
    })
}
