use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bounds imposed on sampled rate constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateBound {
    /// `ε ≤ k_e ≤ 1/ε` for every edge.
    Absolute { epsilon: f64 },
    /// `ε₀ ≤ k_e / k_f ≤ 1/ε₀` for edges in the same linkage class; the
    /// common level of each class is free.
    Ratio { epsilon0: f64 },
}

/// Corner assignments are enumerated exhaustively up to this many edges.
pub const MAX_CORNER_EDGES: usize = 12;

/// Range of the free per-class level in ratio mode, in log units.
const RATIO_LEVEL: f64 = 10.0;

/// Deterministic draw of `(X, k)` pairs. Sample `i` depends only on
/// `(seed, i)`, so samples can be evaluated in any order and replayed.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub seed: u64,
    pub dim: usize,
    pub half_width: f64,
    pub bound: RateBound,
    /// Linkage class of each edge (ratio mode).
    pub classes: Vec<usize>,
}

impl Sampler {
    pub fn edges(&self) -> usize {
        self.classes.len()
    }

    pub fn corner_count(&self) -> usize {
        if self.edges() <= MAX_CORNER_EDGES {
            1 << self.edges()
        } else {
            0
        }
    }

    /// Even samples walk through the corners, odd samples are random.
    pub fn corner_of(&self, i: usize) -> Option<usize> {
        let n = self.corner_count();
        (n > 0 && i.is_multiple_of(2)).then(|| (i / 2) % n)
    }

    fn rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }

    pub fn draw(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = self.rng(i);
        let x: Vec<f64> = (0..self.dim)
            .map(|_| rng.gen_range(-self.half_width..=self.half_width))
            .collect();
        let corner = self.corner_of(i);
        let k = match self.bound {
            RateBound::Absolute { epsilon } => {
                let l = epsilon.ln().abs();
                (0..self.edges())
                    .map(|e| match corner {
                        Some(c) if c >> e & 1 == 1 => 1.0 / epsilon,
                        Some(_) => epsilon,
                        None => rng.gen_range(-l..=l).exp(),
                    })
                    .collect()
            }
            RateBound::Ratio { epsilon0 } => {
                let half = epsilon0.ln().abs() / 2.0;
                let classes = self.classes.iter().copied().max().map_or(0, |c| c + 1);
                let levels: Vec<f64> = (0..classes)
                    .map(|_| rng.gen_range(-RATIO_LEVEL..=RATIO_LEVEL))
                    .collect();
                (0..self.edges())
                    .map(|e| {
                        let u = match corner {
                            Some(c) if c >> e & 1 == 1 => half,
                            Some(_) => -half,
                            None => rng.gen_range(-half..=half),
                        };
                        (levels[self.classes[e]] + u).exp()
                    })
                    .collect()
            }
        };
        (x, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(bound: RateBound, edges: usize) -> Sampler {
        Sampler {
            seed: 7,
            dim: 2,
            half_width: 4.0,
            bound,
            classes: vec![0; edges],
        }
    }

    #[test]
    fn draws_are_reproducible_and_bounded() {
        let s = sampler(RateBound::Absolute { epsilon: 0.1 }, 3);
        for i in 0..200 {
            let (x, k) = s.draw(i);
            assert_eq!((x.clone(), k.clone()), s.draw(i));
            assert!(x.iter().all(|v| v.abs() <= 4.0));
            assert!(k.iter().all(|&v| (0.1 - 1e-12..=10.0 + 1e-12).contains(&v)));
        }
        assert_ne!(s.draw(0).0, s.draw(1).0);
    }

    #[test]
    fn corners_are_all_visited() {
        let s = sampler(RateBound::Absolute { epsilon: 0.5 }, 3);
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..16 {
            if let Some(c) = s.corner_of(i) {
                let (_, k) = s.draw(i);
                assert!(k.iter().all(|&v| v == 0.5 || v == 2.0));
                seen.insert(c);
            }
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn ratio_mode_bounds_ratios_within_a_class() {
        let s = sampler(RateBound::Ratio { epsilon0: 0.2 }, 4);
        for i in 0..100 {
            let (_, k) = s.draw(i);
            for a in &k {
                for b in &k {
                    assert!(a / b >= 0.2 - 1e-12 && a / b <= 5.0 + 1e-9);
                }
            }
        }
    }
}
