//! Two-panel SVG of a region: log coordinates on the left with the
//! uncertainty slabs, concentration coordinates on the right.

use std::fmt::Write;

type Point = [f64; 2];

const PANEL: f64 = 360.0;
const MARGIN: f64 = 30.0;

pub struct Figure<'a> {
    pub title: String,
    /// Boundary sampled in log coordinates.
    pub log_curve: &'a [Point],
    /// Boundary in concentration coordinates.
    pub x_curve: &'a [Point],
    pub closed: bool,
    /// Unit normals of the fan hyperplanes and the slab half-width.
    pub slabs: &'a [Point],
    pub delta: f64,
    pub clip_box: Option<[f64; 4]>,
}

#[derive(Clone, Copy)]
struct Frame {
    lo: Point,
    hi: Point,
    left: f64,
}

impl Frame {
    fn fit(points: &[Point], left: f64, extra: Option<[f64; 4]>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut grow = |p: Point| {
            for k in 0..2 {
                if p[k].is_finite() {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        };
        points.iter().for_each(|&p| grow(p));
        if let Some(b) = extra {
            grow([b[0], b[2]]);
            grow([b[1], b[3]]);
        }
        for k in 0..2 {
            if !lo[k].is_finite() {
                (lo[k], hi[k]) = (-1.0, 1.0);
            }
            let pad = 0.05 * (hi[k] - lo[k]).max(1e-9);
            lo[k] -= pad;
            hi[k] += pad;
        }
        // equal scales on both axes
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        for k in 0..2 {
            let c = 0.5 * (lo[k] + hi[k]);
            lo[k] = c - 0.5 * span;
            hi[k] = c + 0.5 * span;
        }
        Self { lo, hi, left }
    }

    fn map(&self, p: Point) -> Point {
        let u = (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]);
        let v = (p[1] - self.lo[1]) / (self.hi[1] - self.lo[1]);
        [self.left + MARGIN + u * PANEL, MARGIN + (1.0 - v) * PANEL]
    }

    fn path(&self, pts: &[Point], closed: bool) -> String {
        let mut d = String::new();
        for (i, p) in pts.iter().filter(|p| p[0].is_finite() && p[1].is_finite()).enumerate() {
            let q = self.map(*p);
            let _ = write!(d, "{}{:.3},{:.3} ", if i == 0 { "M" } else { "L" }, q[0], q[1]);
        }
        if closed {
            d.push('Z');
        }
        d
    }

    /// Segment of the line `{X : h·X = c}` inside the frame.
    fn line(&self, h: Point, c: f64) -> Option<(Point, Point)> {
        let p0 = [h[0] * c, h[1] * c];
        let dir = [-h[1], h[0]];
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..2 {
            if dir[k].abs() < 1e-12 {
                if p0[k] < self.lo[k] || p0[k] > self.hi[k] {
                    return None;
                }
                continue;
            }
            let a = (self.lo[k] - p0[k]) / dir[k];
            let b = (self.hi[k] - p0[k]) / dir[k];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 < t1).then(|| {
            let at = |t: f64| self.map([p0[0] + t * dir[0], p0[1] + t * dir[1]]);
            (at(t0), at(t1))
        })
    }

    fn border(&self, out: &mut String, label: &str) {
        let _ = writeln!(
            out,
            r##"  <rect x="{}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#444"/>"##,
            self.left + MARGIN
        );
        let _ = writeln!(
            out,
            r##"  <text x="{}" y="{}" font-size="13" text-anchor="middle">{label}</text>"##,
            self.left + MARGIN + 0.5 * PANEL,
            MARGIN - 10.0
        );
        let _ = writeln!(
            out,
            r##"  <text x="{}" y="{}" font-size="10">[{:.3}, {:.3}] x [{:.3}, {:.3}]</text>"##,
            self.left + MARGIN,
            MARGIN + PANEL + 14.0,
            self.lo[0],
            self.hi[0],
            self.lo[1],
            self.hi[1]
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(fig: &Figure) -> String {
    let width = 2.0 * (PANEL + 2.0 * MARGIN);
    let height = PANEL + 2.0 * MARGIN + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"##
    );
    let _ = writeln!(out, "  <title>{}</title>", escape(&fig.title));
    let _ = writeln!(out, r##"  <rect width="100%" height="100%" fill="white"/>"##);

    let log = Frame::fit(fig.log_curve, 0.0, fig.clip_box);
    log.border(&mut out, "log coordinates");
    for h in fig.slabs {
        for (c, dash) in [(-fig.delta, "4 3"), (0.0, "1 3"), (fig.delta, "4 3")] {
            if let Some((a, b)) = log.line(*h, c) {
                let _ = writeln!(
                    out,
                    r##"  <line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#999" stroke-dasharray="{dash}"/>"##,
                    a[0], a[1], b[0], b[1]
                );
            }
        }
    }
    if let Some(b) = fig.clip_box {
        let corners = [[b[0], b[2]], [b[1], b[2]], [b[1], b[3]], [b[0], b[3]]];
        let _ = writeln!(
            out,
            r##"  <path d="{}" fill="none" stroke="#c80" stroke-dasharray="6 3"/>"##,
            log.path(&corners, true)
        );
    }
    let _ = writeln!(
        out,
        r##"  <path d="{}" fill="{}" stroke="#1f5fbf" stroke-width="1.5"/>"##,
        log.path(fig.log_curve, fig.closed),
        if fig.closed { "#1f5fbf22" } else { "none" }
    );

    let x = Frame::fit(fig.x_curve, PANEL + 2.0 * MARGIN, None);
    x.border(&mut out, "concentrations");
    let _ = writeln!(
        out,
        r##"  <path d="{}" fill="{}" stroke="#1f5fbf" stroke-width="1.5"/>"##,
        x.path(fig.x_curve, fig.closed),
        if fig.closed { "#1f5fbf22" } else { "none" }
    );
    let _ = writeln!(
        out,
        r##"  <text x="{MARGIN}" y="{}" font-size="12">{}</text>"##,
        height - 8.0,
        escape(&fig.title)
    );
    out.push_str("</svg>\n");
    out
}
