use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inclusion::ToricInclusion;
use crate::scalar::Scalar;

use super::verify::unit_normals_2d;
use super::{dot2, exp2, ln2, verify_region, Point, PolygonRegion, RegionCertificate};

/// Slab crossings reach this multiple of `δ` beyond the slab center line.
pub const SLAB_OVERSHOOT: f64 = 1.1;

/// Retries of the region builder, each doubling `τ`.
pub const MAX_DOUBLINGS: usize = 8;

/// Default predicate tolerance of the builders.
const BUILD_TOL: f64 = 1e-10;

/// Scales tried per doubling when searching for a separating curve.
const SCALE_STEPS: usize = 4;

/// Offsets tried for straight separating chords.
const CHORD_STEPS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildAttempt {
    pub tau: f64,
    pub verified: bool,
    pub max_value: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionBuild {
    /// The last region constructed, verified or not.
    pub region: Option<PolygonRegion>,
    pub certificate: Option<RegionCertificate>,
    pub attempts: Vec<BuildAttempt>,
    pub verified: bool,
}

impl RegionBuild {
    pub fn into_verified(self) -> Result<(PolygonRegion, RegionCertificate)> {
        match (self.verified, self.region, self.certificate) {
            (true, Some(r), Some(c)) => Ok((r, c)),
            (_, _, cert) => {
                let last = self.attempts.last();
                let reason = match (last.and_then(|a| a.reason.clone()), cert) {
                    (Some(r), _) => r,
                    (None, Some(c)) => format!("certificate maximum {:.3e} exceeds {:.1e}", c.max_value, c.tolerance),
                    (None, None) => "no attempt made".into(),
                };
                Err(Error::RegionBuild {
                    attempts: self.attempts.len(),
                    reason,
                })
            }
        }
    }
}

fn angle(p: Point) -> f64 {
    p[1].atan2(p[0]).rem_euclid(TAU)
}

fn rotate(p: Point, a: f64) -> Point {
    let (s, c) = a.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Point `p + s h` where `h·ln x` equals `target`; the function increases
/// with `s`.
fn slab_exit(h: Point, p: Point, target: f64) -> Option<Point> {
    let at = |s: f64| [p[0] + s * h[0], p[1] + s * h[1]];
    let f = |s: f64| {
        let x = at(s);
        if x[0] <= 0.0 || x[1] <= 0.0 {
            return if s > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        dot2(h, ln2(x)) - target
    };
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some(p);
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let mut far = dir * p[0].hypot(p[1]).max(1e-300);
    let mut grow = 0;
    while (f(far) < 0.0) == (dir > 0.0) {
        far *= 2.0;
        grow += 1;
        if grow > 2000 {
            return None;
        }
    }
    let (mut a, mut b) = if dir > 0.0 { (0.0, far) } else { (far, 0.0) };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let x = at(0.5 * (a + b));
    (x[0] > 0.0 && x[1] > 0.0).then_some(x)
}

/// First point `p + s t`, `s > 0`, where `h·ln x` comes down to `target`.
/// `p` may sit on the level itself, as when both ends of a slab are
/// visited. Near a coordinate axis the line is parametrized by the distance
/// left to the axis, so arrivals at tiny coordinates keep their precision.
fn first_reach(h: Point, p: Point, t: Point, target: f64) -> Option<Point> {
    let f = |x: Point| (x[0] > 0.0 && x[1] > 0.0).then(|| dot2(h, ln2(x)) - target);
    if f(p)? < -1e-9 * (1.0 + target.abs()) {
        return None;
    }
    let at = |s: f64| [p[0] + s * t[0], p[1] + s * t[1]];
    let limit = (0..2)
        .filter(|&i| t[i] < 0.0)
        .map(|i| (p[i] / -t[i], i))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let s_max = limit.map_or(f64::INFINITY, |l| l.0);
    // the derivative's numerator is affine in s: at most one turning point
    let c0 = h[0] * t[0] * p[1] + h[1] * t[1] * p[0];
    let c1 = t[0] * t[1] * (h[0] + h[1]);
    let mut cuts = vec![0.0];
    if c1 != 0.0 && -c0 / c1 > 0.0 && -c0 / c1 < s_max {
        cuts.push(-c0 / c1);
    }
    cuts.push(s_max);
    for w in cuts.windows(2) {
        let a = w[0];
        if !f(at(a)).is_some_and(|v| v > 0.0) {
            continue;
        }
        if let Some((s_max, i)) = limit.filter(|_| w[1] == s_max) {
            // `e` is the parameter distance left before the axis
            let tail = |e: f64| {
                let mut x = at(s_max - e);
                x[i] = e * -t[i];
                x
            };
            let mut good = s_max - a;
            let mut bad = good;
            let mut found = false;
            for _ in 0..1100 {
                bad *= 0.5;
                if bad == 0.0 {
                    break;
                }
                match f(tail(bad)) {
                    Some(v) if v <= 0.0 => {
                        found = true;
                        break;
                    }
                    Some(_) => good = bad,
                    None => break,
                }
            }
            if !found {
                continue;
            }
            for _ in 0..200 {
                let m = if good > 4.0 * bad { (good * bad).sqrt() } else { 0.5 * (good + bad) };
                if m <= bad || m >= good {
                    break;
                }
                if f(tail(m)).is_some_and(|v| v > 0.0) {
                    good = m;
                } else {
                    bad = m;
                }
            }
            return Some(tail(bad));
        }
        let b = if w[1].is_finite() {
            w[1]
        } else {
            let mut far = p[0].hypot(p[1]).max(a).max(1.0);
            let mut n = 0;
            while f(at(far)).is_some_and(|v| v > 0.0) && n < 1100 {
                far *= 2.0;
                n += 1;
            }
            far
        };
        if f(at(b)).is_some_and(|v| v <= 0.0) {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                if f(at(m)).is_some_and(|v| v > 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            return Some(at(hi));
        }
    }
    None
}

/// Candidate sector normals tried per sector, on a logistic scale so that
/// normals very close to either ray are reachable.
const NORMAL_GRID: usize = 200;
const LOGISTIC_RANGE: f64 = 100.0;

/// Largest radius gap between arrivals offered to the closing segment.
const DENSE_STEP: f64 = 0.05;
/// Positions kept per ray while searching for a closed boundary.
const BEAM: usize = 12;
/// Widest angle a single sector segment is asked to span.
const MAX_SPAN: f64 = FRAC_PI_2;

struct Fan2 {
    /// Rays in counterclockwise order, starting with a fan ray. Waypoints
    /// split wide sectors and carry no slab.
    rays: Vec<Point>,
    waypoint: Vec<bool>,
    /// Angle from each ray to the next.
    widths: Vec<f64>,
    overshoot: f64,
}

impl Fan2 {
    /// `shift` moves the start that many fan rays past the default.
    fn new(units: &[Point], delta: f64, shift: usize) -> Self {
        let mut fan: Vec<(f64, Point)> = units
            .iter()
            .flat_map(|h| {
                let r = [-h[1], h[0]];
                [(angle(r), r), (angle([-r[0], -r[1]]), [-r[0], -r[1]])]
            })
            .collect();
        fan.sort_by(|a, b| a.0.total_cmp(&b.0));
        // close the walk in the sector holding the diagonal, where both x
        // coordinates are free and landing on a given line is easy
        let diag = FRAC_PI_4;
        let start = (0..fan.len())
            .find(|&j| {
                let next = (fan[(j + 1) % fan.len()].0 - fan[j].0).rem_euclid(TAU);
                let to_diag = (diag - fan[j].0).rem_euclid(TAU);
                (to_diag > 0.0 && to_diag <= next) || next == 0.0
            })
            .map_or(0, |j| j + 1);
        let n = fan.len();
        fan.rotate_left((start + shift) % n);
        let mut rays = Vec::new();
        let mut waypoint = Vec::new();
        let mut widths = Vec::new();
        for j in 0..fan.len() {
            let (a, r) = fan[j];
            let w = (fan[(j + 1) % fan.len()].0 - a).rem_euclid(TAU);
            let pieces = (w / MAX_SPAN).ceil().max(1.0) as usize;
            for q in 0..pieces {
                rays.push(rotate(r, w * q as f64 / pieces as f64));
                waypoint.push(q > 0);
                widths.push(w / pieces as f64);
            }
        }
        Self {
            rays,
            waypoint,
            widths,
            overshoot: SLAB_OVERSHOOT * delta,
        }
    }

    /// Hyperplane normal of ray `j`, oriented so the ray is its left turn.
    fn h(&self, j: usize) -> Point {
        let r = self.rays[j % self.rays.len()];
        [r[1], -r[0]]
    }

    /// Normal strictly inside sector `j`; `u` runs over the real line.
    fn sector_normal(&self, j: usize, u: f64) -> Point {
        // rotate from the nearer ray so tiny angles survive rounding
        let w = self.widths[j];
        if u <= 0.0 {
            rotate(self.rays[j], w / (1.0 + (-u).exp()))
        } else {
            rotate(self.rays[(j + 1) % self.rays.len()], -w / (1.0 + u.exp()))
        }
    }

    fn grid() -> impl Iterator<Item = f64> {
        (0..=NORMAL_GRID).map(|q| LOGISTIC_RANGE * (2.0 * q as f64 / NORMAL_GRID as f64 - 1.0))
    }

    /// Sector-`j` segments from `cur`, one per candidate normal, ending
    /// where they reach ray `j + 1` (its slab edge for a fan ray). Each
    /// carries the log offset of the arrival from radius `tau`; where the
    /// offset changes sign between neighbouring normals the crossing is
    /// refined, since hitting a given radius can need normals very close to
    /// a ray.
    fn arrivals(&self, j: usize, cur: Point, tau: f64, dense: bool) -> Vec<(f64, Point, Point)> {
        let r = self.rays[j + 1];
        let level = if self.waypoint[j + 1] { 0.0 } else { self.overshoot };
        let arrive = |u: f64| {
            let nu = self.sector_normal(j, u);
            let t = [-nu[1], nu[0]];
            let x = first_reach(self.h(j + 1), cur, t, level)?;
            Some((dot2(r, ln2(x)) - tau, nu, x))
        };
        type Arrival = (f64, Point, Point);
        let grid: Vec<(f64, Option<Arrival>)> = Self::grid().map(|u| (u, arrive(u))).collect();
        let mut found: Vec<(f64, Arrival)> = grid.iter().filter_map(|g| Some((g.0, g.1?))).collect();
        // where arrivals run off towards a coordinate axis, sample the
        // approach, which sweeps the radius
        for w in grid.windows(2) {
            let ((mut a, va), (mut b, vb)) = (w[0], w[1]);
            if va.is_some() == vb.is_some() {
                continue;
            }
            let some_at_a = va.is_some();
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                match arrive(m) {
                    Some(v) => {
                        found.push((m, v));
                        if some_at_a {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    None if some_at_a => b = m,
                    None => a = m,
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        if dense {
            // fill in until neighbouring arrivals are close in radius
            let mut stack: Vec<(f64, Arrival, f64, Arrival, usize)> =
                found.windows(2).map(|w| (w[0].0, w[0].1, w[1].0, w[1].1, 0)).collect();
            let mut extra = Vec::new();
            while let Some((a, va, b, vb, depth)) = stack.pop() {
                if (va.0 - vb.0).abs() <= DENSE_STEP || depth >= 48 {
                    continue;
                }
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    continue;
                }
                let Some(v) = arrive(m) else { continue };
                extra.push((m, v));
                stack.push((a, va, m, v, depth + 1));
                stack.push((m, v, b, vb, depth + 1));
            }
            found.extend(extra);
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        // then home in on radius `tau` wherever the offset changes sign
        let mut refined = Vec::new();
        for w in found.windows(2) {
            let ((mut a, va), (mut b, vb)) = (w[0], w[1]);
            if (va.0 <= 0.0) == (vb.0 <= 0.0) {
                continue;
            }
            let neg_a = va.0 <= 0.0;
            let mut best = va;
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let Some(v) = arrive(m) else { break };
                if v.0.abs() < best.0.abs() {
                    best = v;
                }
                if (v.0 <= 0.0) == neg_a {
                    a = m;
                } else {
                    b = m;
                }
            }
            refined.push(best);
        }
        found.into_iter().map(|f| f.1).chain(refined).collect()
    }

    /// Last sector segment from `cur` onto the first crossing line, landing
    /// past the slab.
    fn close(&self, cur: Point, p0: Point) -> Option<(Point, Point)> {
        let k = self.rays.len();
        let (r0, h0) = (self.rays[0], self.h(0));
        let c0 = dot2(r0, p0);
        let closing: Vec<(Point, Point)> = Self::grid()
            .map(|u| self.sector_normal(k - 1, u))
            .filter_map(|nu| {
                let t = [-nu[1], nu[0]];
                let rt = dot2(r0, t);
                if rt == 0.0 {
                    return None;
                }
                let s = (c0 - dot2(r0, cur)) / rt;
                let x = [cur[0] + s * t[0], cur[1] + s * t[1]];
                (s > 0.0 && x[0] > 0.0 && x[1] > 0.0 && dot2(h0, ln2(x)) >= self.overshoot).then_some((nu, x))
            })
            .collect();
        closing.get(closing.len() / 2).copied()
    }

    /// Walks counterclockwise from the crossing of the first ray at
    /// `exp(τ r)`, keeping a spread of reachable positions on each ray
    /// (preferring radius `τ`) until one of them lets the last sector
    /// segment land on the first crossing line beyond its slab.
    fn walk(&self, tau: f64) -> Option<(Vec<Point>, Vec<Point>)> {
        struct Node {
            parent: usize,
            nu: Point,
            arrive: Point,
            exit: Point,
        }
        let k = self.rays.len();
        let o = self.overshoot;
        let r0 = self.rays[0];
        let p0 = exp2([tau * r0[0], tau * r0[1]]);
        let a0 = slab_exit(self.h(0), p0, o)?;
        let b0 = slab_exit(self.h(0), p0, -o)?;
        let mut stages: Vec<Vec<Node>> = vec![vec![Node {
            parent: 0,
            nu: r0,
            arrive: a0,
            exit: b0,
        }]];
        for j in 0..k - 1 {
            let prev = stages.last()?;
            let mut next: Vec<(f64, Node)> = prev
                .iter()
                .enumerate()
                .flat_map(|(pi, node)| {
                    self.arrivals(j, node.exit, tau, j + 2 == k).into_iter().filter_map(move |(off, nu, x)| {
                        let exit = if self.waypoint[j + 1] {
                            x
                        } else {
                            // crossings run along -h; an arrival past the far edge would backtrack
                            let h = self.h(j + 1);
                            let e = slab_exit(h, x, -o)?;
                            if h[0] * (e[0] - x[0]) + h[1] * (e[1] - x[1]) > 0.0 {
                                return None;
                            }
                            e
                        };
                        Some((off, Node { parent: pi, nu, arrive: x, exit }))
                    })
                })
                .collect();
            if next.is_empty() {
                return None;
            }
            next.sort_by(|a, b| a.0.total_cmp(&b.0));
            if j + 2 == k {
                next.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
                let (last, closing) = next.into_iter().find_map(|(_, n)| Some((self.close(n.exit, p0)?, n)).map(|(c, n)| (n, c)))?;
                // unwind the chosen path
                let mut path = vec![last];
                let mut stages = stages;
                while stages.len() > 1 {
                    let stage = stages.pop()?;
                    let parent = path.last()?.parent;
                    path.push(stage.into_iter().nth(parent)?);
                }
                path.reverse();
                let mut corners = vec![closing.1, b0];
                let mut normals = vec![r0];
                for (q, node) in path.iter().enumerate() {
                    let ray = q + 1;
                    normals.push(node.nu);
                    corners.push(node.arrive);
                    if !self.waypoint[ray] {
                        normals.push(self.rays[ray]);
                        corners.push(node.exit);
                    }
                }
                normals.push(closing.0);
                return Some((corners, normals));
            }
            // keep an even spread over the reachable radii
            let keep: Vec<Node> = if next.len() <= BEAM {
                next.into_iter().map(|(_, n)| n).collect()
            } else {
                let step = (next.len() - 1) as f64 / (BEAM - 1) as f64;
                let picks: Vec<usize> = (0..BEAM).map(|q| (q as f64 * step).round() as usize).collect();
                next.into_iter()
                    .enumerate()
                    .filter(|(i, _)| picks.contains(i))
                    .map(|(_, (_, n))| n)
                    .collect()
            };
            stages.push(keep);
        }
        None
    }
}

/// One construction at scale `τ`, without verification.
///
/// The boundary alternates between slab crossings, which run along the
/// hyperplane direction to [`SLAB_OVERSHOOT`]`·δ` past the slab on both
/// sides, and sector segments whose normals lie strictly inside their
/// sector. Crossings start near `exp(τ r)` for each ray `r`.
pub fn region_at_scale<T: Scalar>(ti: &ToricInclusion<T>, tau: f64) -> Result<PolygonRegion> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let units = unit_normals_2d(ti)?;
    if units.is_empty() {
        let square = vec![[-tau, -tau], [tau, -tau], [tau, tau], [-tau, tau]];
        let mut r = PolygonRegion::polygon(square)?;
        r.tau = Some(tau);
        return Ok(r);
    }
    // the default start usually closes; other starts are the fallback
    let (corners, mut normals) = (0..2 * units.len())
        .find_map(|shift| Fan2::new(&units, ti.delta(), shift).walk(tau))
        .ok_or_else(|| Error::DegeneratePolygon(format!("boundary walk does not close at tau = {tau}")))?;
    // the closing point moved the first corner along the crossing line
    let (a, b) = (corners[0], corners[1]);
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    normals[0] = [d[1] / len, -d[0] / len];
    PolygonRegion::from_parts(corners.into_iter().map(ln2).collect(), normals, true, Some(tau))
}

/// Builds at `τ` and doubles `τ` until the region verifies, at most
/// [`MAX_DOUBLINGS`] times.
pub fn build_region<T: Scalar>(ti: &ToricInclusion<T>, tau: f64) -> Result<RegionBuild> {
    unit_normals_2d(ti)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let mut out = RegionBuild {
        region: None,
        certificate: None,
        attempts: Vec::new(),
        verified: false,
    };
    let mut t = tau;
    for _ in 0..=MAX_DOUBLINGS {
        match region_at_scale(ti, t) {
            Ok(region) => {
                let cert = verify_region(ti, &region, BUILD_TOL)?;
                out.attempts.push(BuildAttempt {
                    tau: t,
                    verified: cert.verified,
                    max_value: Some(cert.max_value),
                    reason: None,
                });
                out.verified = cert.verified;
                out.region = Some(region);
                out.certificate = Some(cert);
                if out.verified {
                    break;
                }
            }
            Err(e) => out.attempts.push(BuildAttempt {
                tau: t,
                verified: false,
                max_value: None,
                reason: Some(e.to_string()),
            }),
        }
        t *= 2.0;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatingCurve {
    /// Open polyline whose normals point toward `side`.
    pub curve: Option<PolygonRegion>,
    pub certificate: Option<RegionCertificate>,
    pub side: Point,
    pub clip_box: [f64; 4],
    /// Scale of the region whose boundary the curve follows.
    pub tau: Option<f64>,
    pub verified: bool,
    pub reason: Option<String>,
}

/// Parameter range of the x-space segment `a → b` inside the box
/// `[x_min, x_max, y_min, y_max]`.
fn clip_segment(a: Point, b: Point, xbox: [f64; 4]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..2 {
        let d = b[i] - a[i];
        let (lo, hi) = (xbox[2 * i], xbox[2 * i + 1]);
        if d == 0.0 {
            if a[i] < lo || a[i] > hi {
                return None;
            }
            continue;
        }
        let (p, q) = ((lo - a[i]) / d, (hi - a[i]) / d);
        t0 = t0.max(p.min(q));
        t1 = t1.min(p.max(q));
    }
    (t0 < t1).then_some((t0, t1))
}

/// The x-line through `exp(at)` with unit normal `nu`, cut to the log box.
/// Each end is placed exactly on the box edge that cuts it.
fn chord(clip_box: [f64; 4], at: Point, nu: Point) -> Option<PolygonRegion> {
    let xbox = clip_box.map(f64::exp);
    let x0 = [at[0].exp(), at[1].exp()];
    let t = [-nu[1], nu[0]];
    let (mut lo, mut hi) = ((f64::NEG_INFINITY, 0usize, 0.0), (f64::INFINITY, 0usize, 0.0));
    for i in 0..2 {
        if t[i] == 0.0 {
            if x0[i] < xbox[2 * i] || x0[i] > xbox[2 * i + 1] {
                return None;
            }
            continue;
        }
        let (e0, e1) = (clip_box[2 * i], clip_box[2 * i + 1]);
        let (s0, s1) = ((xbox[2 * i] - x0[i]) / t[i], (xbox[2 * i + 1] - x0[i]) / t[i]);
        let ((sa, ea), (sb, eb)) = if s0 < s1 { ((s0, e0), (s1, e1)) } else { ((s1, e1), (s0, e0)) };
        if sa > lo.0 {
            lo = (sa, i, ea);
        }
        if sb < hi.0 {
            hi = (sb, i, eb);
        }
    }
    if !(lo.0 < hi.0) {
        return None;
    }
    let end = |(s, i, edge): (f64, usize, f64)| {
        let j = 1 - i;
        let mut p = [0.0; 2];
        p[i] = edge;
        p[j] = (x0[j] + s * t[j]).ln();
        p
    };
    PolygonRegion::from_parts(vec![end(lo), end(hi)], vec![nu], false, None).ok()
}

/// Moves coordinates within `1e-6` of a box bound onto it.
fn snap(mut p: Point, clip_box: [f64; 4]) -> Point {
    for (i, v) in p.iter_mut().enumerate() {
        for bound in [clip_box[2 * i], clip_box[2 * i + 1]] {
            if (*v - bound).abs() < 1e-6 {
                *v = bound;
            }
        }
    }
    p
}

/// Pieces of a closed x-space polygon inside the box, each with the
/// normals of the segments it runs along.
fn pieces_in_box(xs: &[Point], normals: &[Point], xbox: [f64; 4]) -> Vec<(Vec<Point>, Vec<Point>)> {
    let m = xs.len();
    let inside = |p: Point| p[0] >= xbox[0] && p[0] <= xbox[1] && p[1] >= xbox[2] && p[1] <= xbox[3];
    let Some(start) = (0..m).find(|&j| !inside(xs[j])) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut cur: Option<(Vec<Point>, Vec<Point>)> = None;
    for q in 0..m {
        let j = (start + q) % m;
        let (a, b) = (xs[j], xs[(j + 1) % m]);
        let Some((t0, t1)) = clip_segment(a, b, xbox) else {
            continue;
        };
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let piece = cur.get_or_insert_with(|| (vec![at(t0)], Vec::new()));
        piece.0.push(at(t1));
        piece.1.push(normals[j]);
        if t1 < 1.0 || !inside(b) {
            out.extend(cur.take());
        }
    }
    out
}

/// Cuts the boundary of a verified region against the log-space box
/// `[x_min, x_max, y_min, y_max]` and keeps the piece facing `side` (an
/// x-space direction, e.g. `(-1, -1)` toward the origin). Regions are tried
/// at scales growing by `2^(1/4)` until one crosses the box with a piece whose normals
/// all face `side`. Every piece lies on verified segments; it is verified
/// again on its own.
pub fn build_separating_curve<T: Scalar>(ti: &ToricInclusion<T>, clip_box: [f64; 4], side: Point) -> Result<SeparatingCurve> {
    let units = unit_normals_2d(ti)?;
    let norm = side[0].hypot(side[1]);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument("side direction must be nonzero".into()));
    }
    let d = [side[0] / norm, side[1] / norm];
    if !(clip_box[0] < clip_box[1] && clip_box[2] < clip_box[3]) || clip_box.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("empty box {clip_box:?}")));
    }
    let mut out = SeparatingCurve {
        curve: None,
        certificate: None,
        side: d,
        clip_box,
        tau: None,
        verified: false,
        reason: Some("no region boundary crosses the box".into()),
    };
    let xbox = clip_box.map(f64::exp);
    // straight chords first: nothing else is needed for the empty fan,
    // and deep in a sector a single x-line is often enough
    let c = [0.5 * (clip_box[0] + clip_box[1]), 0.5 * (clip_box[2] + clip_box[3])];
    let reach = 0.5 * (clip_box[1] - clip_box[0]).hypot(clip_box[3] - clip_box[2]);
    let mut dirs = vec![d];
    dirs.extend(units.iter().flat_map(|h| [[-h[1], h[0]], [h[1], -h[0]]]).filter(|r| dot2(*r, d) > 0.0));
    for q in 0..CHORD_STEPS {
        let off = reach * q as f64 / CHORD_STEPS as f64;
        let at = [c[0] + off * d[0], c[1] + off * d[1]];
        for &nu in &dirs {
            let Some(curve) = chord(clip_box, at, nu) else {
                continue;
            };
            let mut cert = verify_region(ti, &curve, BUILD_TOL)?;
            if cert.verified {
                cert.clip_box = Some(clip_box);
                out.verified = true;
                out.reason = None;
                out.curve = Some(curve);
                out.certificate = Some(cert);
                return Ok(out);
            }
        }
    }
    let tau0 = 1.0 + 2.0 * ti.delta();
    for step in 0..=SCALE_STEPS * MAX_DOUBLINGS {
        let tau = tau0 * 2f64.powf(step as f64 / SCALE_STEPS as f64);
        let region = match region_at_scale(ti, tau) {
            Ok(r) if verify_region(ti, &r, BUILD_TOL)?.verified => r,
            Ok(_) => {
                out.reason = Some(format!("region at tau = {tau} fails the predicate"));
                continue;
            }
            Err(e) => {
                out.reason = Some(e.to_string());
                continue;
            }
        };
        let facing = |n: &Point| dot2(*n, d);
        let best = pieces_in_box(&region.x_vertices(), &region.normals, xbox)
            .into_iter()
            .filter(|(_, ns)| ns.iter().all(|n| facing(n) >= -1e-12))
            .max_by(|a, b| {
                let fa = a.1.iter().map(facing).fold(f64::NEG_INFINITY, f64::max);
                let fb = b.1.iter().map(facing).fold(f64::NEG_INFINITY, f64::max);
                fa.total_cmp(&fb)
            });
        let Some((pts, normals)) = best else {
            continue;
        };
        let mut logs: Vec<Point> = pts.into_iter().map(ln2).collect();
        // the cut is computed in x-space; put the ends exactly on the box
        for end in [0, logs.len() - 1] {
            logs[end] = snap(logs[end], clip_box);
        }
        let curve = match PolygonRegion::from_parts(logs, normals, false, region.tau) {
            Ok(c) => c,
            Err(e) => {
                out.reason = Some(e.to_string());
                continue;
            }
        };
        let mut cert = verify_region(ti, &curve, BUILD_TOL)?;
        cert.clip_box = Some(clip_box);
        out.tau = region.tau;
        out.verified = cert.verified;
        out.reason = (!cert.verified).then(|| "clipped boundary fails the predicate".to_string());
        out.curve = Some(curve);
        out.certificate = Some(cert);
        if out.verified {
            return Ok(out);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn inclusion(normals: &[[i64; 2]], delta: f64) -> ToricInclusion<Rational> {
        let ns: Vec<Vec<Rational>> = normals
            .iter()
            .map(|n| n.iter().map(|&v| Rational::from_i64(v)).collect())
            .collect();
        ToricInclusion::from_hyperplanes(2, &ns, delta).unwrap()
    }

    #[test]
    fn orthogonal_pair_gives_verified_octagon() {
        let ti = inclusion(&[[1, 0], [0, 1]], 1.0);
        let b = build_region(&ti, 5.0).unwrap();
        assert_eq!(b.attempts.len(), 1);
        let (r, cert) = b.into_verified().unwrap();
        assert_eq!(r.vertices.len(), 8);
        assert!(cert.max_value <= 1e-10);
        // four slab crossings along the axes, four sector edges facing into their quadrants
        let axis = r.normals.iter().filter(|n| n[0] == 0.0 || n[1] == 0.0).count();
        assert_eq!(axis, 4);
        assert!(r.contains([0.0, 0.0], 0.0));
    }

    #[test]
    fn single_hyperplane_gives_verified_hexagon() {
        let ti = inclusion(&[[1, -1]], 1.0);
        let (r, cert) = build_region(&ti, 5.0).unwrap().into_verified().unwrap();
        // two crossings plus a waypoint corner on each side of the band
        assert_eq!(r.vertices.len(), 6);
        assert!(cert.verified);
    }

    #[test]
    fn doubling_tau_still_verifies() {
        let ti = inclusion(&[[1, 0], [0, 1], [1, -1]], 0.8);
        let (r1, _) = build_region(&ti, 4.0).unwrap().into_verified().unwrap();
        let tau = 2.0 * r1.tau.unwrap();
        let r2 = region_at_scale(&ti, tau).unwrap();
        assert!(verify_region(&ti, &r2, 1e-10).unwrap().verified);
        assert_eq!(r2.tau, Some(tau));
        // the far side grows with tau; toward -inf x-space segments stay near the slabs
        let top = |r: &PolygonRegion, i: usize| r.vertices.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
        assert!(top(&r2, 0) > top(&r1, 0) + 1.0 && top(&r2, 1) > top(&r1, 1) + 1.0);
    }

    #[test]
    fn small_tau_is_retried() {
        let ti = inclusion(&[[1, 0], [0, 1], [1, 1], [1, -2]], 1.0);
        let b = build_region(&ti, 0.05).unwrap();
        assert!(b.attempts.len() > 1);
        assert!(!b.attempts[0].verified);
        assert!(b.verified, "{:?}", b.attempts);
        for w in b.attempts.windows(2) {
            assert_eq!(w[1].tau, 2.0 * w[0].tau);
        }
    }

    #[test]
    fn separating_curves() {
        for normals in [vec![[1, -1]], vec![[1, 0], [0, 1]], vec![[1, 0], [0, 1], [1, 1]]] {
            let ti = inclusion(&normals, 1.0);
            for side in [[-1.0, -1.0], [-1.0, 0.0], [0.0, -1.0]] {
                let c = build_separating_curve(&ti, [-20.0, 20.0, -20.0, 20.0], side).unwrap();
                assert!(c.verified, "{normals:?} {side:?}: {:?}", c.reason);
                let curve = c.curve.unwrap();
                assert!(curve.normals.iter().all(|n| dot2(*n, c.side) >= -1e-12));
                let cert = c.certificate.unwrap();
                assert_eq!(cert.clip_box, Some([-20.0, 20.0, -20.0, 20.0]));
                // both ends on the box
                for p in [curve.vertices[0], *curve.vertices.last().unwrap()] {
                    let on = p.iter().any(|v| (v.abs() - 20.0).abs() < 1e-9);
                    assert!(on, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn wrong_side_curve_fails() {
        let ti = inclusion(&[[1, 0], [0, 1]], 1.0);
        let c = build_separating_curve(&ti, [-20.0, 20.0, -20.0, 20.0], [-1.0, -1.0]).unwrap();
        let curve = c.curve.unwrap();
        let mut flipped = curve.vertices.clone();
        flipped.reverse();
        let wrong = PolygonRegion::polyline(flipped).unwrap();
        let cert = verify_region(&ti, &wrong, 1e-10).unwrap();
        assert!(!cert.verified);
        assert!(cert.worst_record().is_some());
    }

    #[test]
    fn empty_fan_region() {
        let ti = ToricInclusion::<Rational>::from_hyperplanes(2, &[], 1.0).unwrap();
        let (r, _) = build_region(&ti, 3.0).unwrap().into_verified().unwrap();
        assert_eq!(r.vertices.len(), 4);
        let c = build_separating_curve(&ti, [-20.0, 20.0, -20.0, 20.0], [-1.0, -1.0]).unwrap();
        assert!(c.verified);
    }

    #[test]
    fn rejects_bad_arguments() {
        let ti = inclusion(&[[1, 0]], 1.0);
        assert!(build_region(&ti, 0.0).is_err());
        assert!(build_separating_curve(&ti, [1.0, -1.0, 0.0, 1.0], [-1.0, 0.0]).is_err());
        assert!(build_separating_curve(&ti, [-1.0, 1.0, -1.0, 1.0], [0.0, 0.0]).is_err());
    }
}
