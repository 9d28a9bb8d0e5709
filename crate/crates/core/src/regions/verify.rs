use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inclusion::ToricInclusion;
use crate::polyhedral::SignVector;
use crate::scalar::Scalar;

use super::{dot2, ln2, Point, PolygonRegion};

/// One piece of a segment on which the inclusion is constant. Pieces with
/// `t0 == t1` are the breakpoints themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsegmentRecord {
    pub segment: usize,
    /// Parameters along the x-space segment.
    pub t0: f64,
    pub t1: f64,
    /// Endpoints in log coordinates.
    pub start: Point,
    pub end: Point,
    pub normal: Point,
    pub signature: SignVector,
    /// Unit generators of the local cone.
    pub generators: Vec<Point>,
    /// `max g·ν` over the generators, `0` for the zero cone.
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCertificate {
    pub subsegments: Vec<SubsegmentRecord>,
    pub max_value: f64,
    pub tolerance: f64,
    pub delta: f64,
    pub verified: bool,
    /// Index of the record attaining `max_value`.
    pub worst: Option<usize>,
    /// Log-space box `[x_min, x_max, y_min, y_max]` an open curve was clipped to.
    pub clip_box: Option<[f64; 4]>,
}

impl RegionCertificate {
    pub fn worst_record(&self) -> Option<&SubsegmentRecord> {
        self.worst.map(|i| &self.subsegments[i])
    }
}

pub(crate) fn unit_normals_2d<T: Scalar>(ti: &ToricInclusion<T>) -> Result<Vec<Point>> {
    if ti.dim() != 2 {
        return Err(Error::RegionDimension(ti.dim()));
    }
    Ok(ti.hyperplane_fan()?.unit_normals().iter().map(|h| [h[0], h[1]]).collect())
}

/// Root of a monotone `f` on `[a, b]` with `f(a)` and `f(b)` of opposite signs.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Parameters in `(0, 1)` where `h·ln(p + t d)` crosses one of `levels`,
/// plus its interior critical point. The derivative's numerator is affine
/// in `t`, so there are at most two crossings per level.
fn crossings(h: Point, p: Point, d: Point, levels: &[f64]) -> Vec<f64> {
    let f = |t: f64| h[0] * (p[0] + t * d[0]).ln() + h[1] * (p[1] + t * d[1]).ln();
    let c0 = h[0] * d[0] * p[1] + h[1] * d[1] * p[0];
    let c1 = d[0] * d[1] * (h[0] + h[1]);
    let mut cuts = vec![0.0];
    if c1 != 0.0 {
        let tc = -c0 / c1;
        if tc > 0.0 && tc < 1.0 {
            cuts.push(tc);
        }
    }
    cuts.push(1.0);
    let mut out: Vec<f64> = cuts[1..cuts.len() - 1].to_vec();
    for w in cuts.windows(2) {
        for &c in levels {
            let g = |t: f64| f(t) - c;
            let (ga, gb) = (g(w[0]), g(w[1]));
            if ga == 0.0 && w[0] > 0.0 {
                out.push(w[0]);
            }
            if (ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0) {
                out.push(bisect(g, w[0], w[1]));
            }
        }
    }
    out
}

/// Generators `−σ_i ĥ_i` and `±ĥ_i` for `σ_i = 0`.
pub(crate) fn local_generators(units: &[Point], sigma: &SignVector) -> Vec<Point> {
    let mut out = Vec::new();
    for (h, &s) in units.iter().zip(&sigma.0) {
        match s {
            0 => {
                out.push(*h);
                out.push([-h[0], -h[1]]);
            }
            1 => out.push([-h[0], -h[1]]),
            _ => out.push(*h),
        }
    }
    out
}

fn record<T: Scalar>(
    ti: &ToricInclusion<T>,
    units: &[Point],
    segment: usize,
    (p, d): (Point, Point),
    (t0, t1): (f64, f64),
    normal: Point,
) -> Result<SubsegmentRecord> {
    let at = |t: f64| ln2([p[0] + t * d[0], p[1] + t * d[1]]);
    let tm = 0.5 * (t0 + t1);
    let signature = ti.signature(&at(tm))?;
    let generators = local_generators(units, &signature);
    let max_value = generators
        .iter()
        .map(|g| dot2(*g, normal))
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .unwrap_or(0.0);
    Ok(SubsegmentRecord {
        segment,
        t0,
        t1,
        start: at(t0),
        end: at(t1),
        normal,
        signature,
        generators,
        max_value,
    })
}

/// Splits every segment where the sign pattern or the uncertainty set
/// changes, and checks `g·ν ≤ tol` for every generator `g` of the constant
/// cone on each piece and at each breakpoint.
pub fn verify_region<T: Scalar>(ti: &ToricInclusion<T>, region: &PolygonRegion, tol: f64) -> Result<RegionCertificate> {
    let units = unit_normals_2d(ti)?;
    region.validate()?;
    let delta = ti.delta();
    let levels = [-delta, 0.0, delta];
    let per_segment: Vec<Result<Vec<SubsegmentRecord>>> = region
        .segments()
        .par_iter()
        .zip(region.normals.par_iter())
        .enumerate()
        .map(|(i, (&(a, b), &nu))| {
            let d = [b[0] - a[0], b[1] - a[1]];
            let mut ts = vec![0.0, 1.0];
            for h in &units {
                ts.extend(crossings(*h, a, d, &levels));
            }
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            let mut out = Vec::with_capacity(2 * ts.len());
            for (k, &t) in ts.iter().enumerate() {
                out.push(record(ti, &units, i, (a, d), (t, t), nu)?);
                if let Some(&next) = ts.get(k + 1) {
                    out.push(record(ti, &units, i, (a, d), (t, next), nu)?);
                }
            }
            Ok(out)
        })
        .collect();
    let mut subsegments = Vec::new();
    for r in per_segment {
        subsegments.extend(r?);
    }
    let (worst, max_value) = subsegments
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.max_value))
        .fold((None, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (Some(i), v) } else { (bi, bv) });
    Ok(RegionCertificate {
        verified: max_value <= tol,
        max_value,
        subsegments,
        tolerance: tol,
        delta,
        worst,
        clip_box: None,
    })
}
