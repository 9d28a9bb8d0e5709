//! Invariant regions and zero-separating curves of planar toric inclusions.
//!
//! A region is a polygon of `ℝ²_{>0}` whose vertices are stored in log
//! coordinates. Its segments are straight in `x`, since the inclusion
//! constrains `ẋ` and a segment is crossed outward only when `ẋ·ν > 0`.

mod build;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{
    build_region, build_separating_curve, region_at_scale, BuildAttempt, RegionBuild, SeparatingCurve,
    MAX_DOUBLINGS, SLAB_OVERSHOOT,
};
pub use verify::{verify_region, RegionCertificate, SubsegmentRecord};

pub type Point = [f64; 2];

pub(crate) fn exp2(p: Point) -> Point {
    [p[0].exp(), p[1].exp()]
}

pub(crate) fn ln2(p: Point) -> Point {
    [p[0].ln(), p[1].ln()]
}

pub(crate) fn dot2(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross2(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub2(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Unit normal on the right of the direction `a → b`.
fn right_normal(a: Point, b: Point) -> Point {
    let d = sub2(b, a);
    let len = d[0].hypot(d[1]);
    [d[1] / len, -d[0] / len]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonRegion {
    /// Vertices in log coordinates, counterclockwise when closed.
    pub vertices: Vec<Point>,
    /// Unit normal of segment `i` (vertex `i` to `i + 1`) in x-space; it
    /// points out of a closed region and to the right of an open polyline.
    pub normals: Vec<Point>,
    pub closed: bool,
    /// Scale parameter of the builder, when built.
    pub tau: Option<f64>,
}

impl PolygonRegion {
    /// Closed polygon through the given log-space vertices, reoriented to
    /// run counterclockwise in x-space.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!("{} vertices", vertices.len())));
        }
        check_finite(&vertices)?;
        let xs: Vec<Point> = vertices.iter().map(|&v| exp2(v)).collect();
        if signed_area(&xs) < 0.0 {
            vertices.reverse();
        }
        Self::with_computed_normals(vertices, true)
    }

    /// Open polyline; normals lie to the right of the direction of travel.
    pub fn polyline(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::DegeneratePolygon(format!("{} vertices", vertices.len())));
        }
        check_finite(&vertices)?;
        Self::with_computed_normals(vertices, false)
    }

    fn with_computed_normals(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        let xs: Vec<Point> = vertices.iter().map(|&v| exp2(v)).collect();
        let count = if closed { xs.len() } else { xs.len() - 1 };
        let normals = (0..count)
            .map(|i| right_normal(xs[i], xs[(i + 1) % xs.len()]))
            .collect();
        let region = Self {
            vertices,
            normals,
            closed,
            tau: None,
        };
        region.validate()?;
        Ok(region)
    }

    /// Explicit normals, checked against the geometry.
    pub fn from_parts(vertices: Vec<Point>, normals: Vec<Point>, closed: bool, tau: Option<f64>) -> Result<Self> {
        check_finite(&vertices)?;
        let region = Self {
            vertices,
            normals,
            closed,
            tau,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn x_vertices(&self) -> Vec<Point> {
        self.vertices.iter().map(|&v| exp2(v)).collect()
    }

    /// Segment endpoints in x-space.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let xs = self.x_vertices();
        let n = xs.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(|i| (xs[i], xs[(i + 1) % n])).collect()
    }

    /// Checks segment count, nonzero lengths, simplicity, orientation and
    /// that every normal is a unit vector orthogonal to its segment.
    pub fn validate(&self) -> Result<()> {
        let min = if self.closed { 3 } else { 2 };
        if self.vertices.len() < min {
            return Err(Error::DegeneratePolygon(format!("{} vertices", self.vertices.len())));
        }
        let segs = self.segments();
        if self.normals.len() != segs.len() {
            return Err(Error::DegeneratePolygon(format!(
                "{} normals for {} segments",
                self.normals.len(),
                segs.len()
            )));
        }
        for (i, ((a, b), nu)) in segs.iter().zip(&self.normals).enumerate() {
            let d = sub2(*b, *a);
            let len = d[0].hypot(d[1]);
            let scale = a[0].abs().max(a[1].abs()).max(b[0].abs()).max(b[1].abs());
            if !(len > 1e-14 * scale) {
                return Err(Error::DegeneratePolygon(format!("segment {i} has zero length")));
            }
            if (nu[0].hypot(nu[1]) - 1.0).abs() > 1e-9 {
                return Err(Error::DegeneratePolygon(format!("normal {i} is not a unit vector")));
            }
            let r = right_normal(*a, *b);
            if (dot2(r, *nu) - 1.0).abs() > 1e-9 {
                return Err(Error::DegeneratePolygon(format!(
                    "normal {i} is not the right-hand normal of its segment"
                )));
            }
        }
        for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                let adjacent = j == i + 1 || (self.closed && i == 0 && j == segs.len() - 1);
                if !adjacent && segments_intersect(segs[i], segs[j]) {
                    return Err(Error::DegeneratePolygon(format!("segments {i} and {j} intersect")));
                }
            }
        }
        if self.closed && signed_area(&self.x_vertices()) <= 0.0 {
            return Err(Error::DegeneratePolygon("polygon is not counterclockwise".into()));
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        let xs = self.x_vertices();
        let n = xs.len();
        self.closed
            && (0..n).all(|i| cross2(sub2(xs[(i + 1) % n], xs[i]), sub2(xs[(i + 2) % n], xs[(i + 1) % n])) >= 0.0)
    }

    /// Whether the log-space point `p` lies in the closed region. For convex
    /// regions a point within `tol` (relative to `|x|`) of a supporting
    /// line still counts as inside.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        if !self.closed {
            return false;
        }
        let x = exp2(p);
        if self.is_convex() {
            let scale = x[0].hypot(x[1]);
            return self
                .segments()
                .iter()
                .zip(&self.normals)
                .all(|((a, _), nu)| dot2(*nu, sub2(x, *a)) <= tol * scale);
        }
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let t = (x[1] - a[1]) / (b[1] - a[1]);
                if x[0] < a[0] + t * (b[0] - a[0]) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Points along the straight x-space segments, `samples` per segment
    /// counting the start, followed by the final vertex.
    pub fn sample_x(&self, samples: usize) -> Vec<Point> {
        let samples = samples.max(1);
        let mut out = Vec::new();
        let segs = self.segments();
        for (a, b) in &segs {
            for j in 0..samples {
                let t = j as f64 / samples as f64;
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        if let Some((_, b)) = segs.last() {
            out.push(*b);
        }
        out
    }

    /// [`Self::sample_x`] in log coordinates.
    pub fn sample_log(&self, samples: usize) -> Vec<Point> {
        self.sample_x(samples).into_iter().map(ln2).collect()
    }
}

fn check_finite(vertices: &[Point]) -> Result<()> {
    match vertices.iter().position(|v| !(v[0].is_finite() && v[1].is_finite())) {
        Some(i) => Err(Error::DegeneratePolygon(format!("vertex {i} is not finite"))),
        None => Ok(()),
    }
}

fn signed_area(xs: &[Point]) -> f64 {
    let n = xs.len();
    (0..n).map(|i| cross2(xs[i], xs[(i + 1) % n])).sum::<f64>() / 2.0
}

fn segments_intersect((a, b): (Point, Point), (c, d): (Point, Point)) -> bool {
    let o = |p: Point, q: Point, r: Point| cross2(sub2(q, p), sub2(r, p));
    let (d1, d2) = (o(c, d, a), o(c, d, b));
    let (d3, d4) = (o(a, b, c), o(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

/// Densifies a log-space polyline with `samples` points per segment
/// (endpoints included) and exponentiates each point. A closed polyline
/// returns to its first point.
pub fn to_xspace(polyline: &[Point], samples: usize, closed: bool) -> Vec<Point> {
    let samples = samples.max(2);
    let n = polyline.len();
    if n == 0 {
        return Vec::new();
    }
    let count = if closed { n } else { n - 1 };
    let mut out = Vec::new();
    for i in 0..count {
        let (a, b) = (polyline[i], polyline[(i + 1) % n]);
        for j in 0..samples - 1 {
            let t = j as f64 / (samples - 1) as f64;
            out.push(exp2([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
        }
    }
    out.push(exp2(if closed { polyline[0] } else { polyline[n - 1] }));
    out
}
