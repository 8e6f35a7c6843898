//! Exact rotated-box geometry.
//!
//! Boxes are parametric `(x, y, w, h, θ)` with θ in degrees, rotated
//! counter-clockwise about the box center. The exact SkewIoU is computed by
//! half-plane clipping of one rectangle against the other; a scanline
//! rasterizer gives an independent approximation used as an oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed-distance tolerance of the inclusive half-plane test.
pub const CLIP_EPS: f64 = 1e-9;
/// Intersections below this area are reported as empty.
pub const AREA_FLOOR: f64 = 1e-12;

/// Angle convention tag carried by a [`RotatedBox2D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleConvention {
    /// No range constraint on θ; what parsing and construction produce.
    #[default]
    Free,
    /// θ ∈ [−90°, 0°).
    OpenCv,
    /// θ ∈ [−90°, 90°) and w ≥ h.
    LongEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// 2-D rotated rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedBox2D {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    /// Degrees, counter-clockwise.
    pub theta: f64,
    #[serde(default)]
    pub convention: AngleConvention,
}

impl RotatedBox2D {
    pub fn new(x: f64, y: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        let b = Self {
            x,
            y,
            w,
            h,
            theta,
            convention: AngleConvention::Free,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn from_params(p: [f64; 5]) -> Result<Self> {
        Self::new(p[0], p[1], p[2], p[3], p[4])
    }

    pub fn params(&self) -> [f64; 5] {
        [self.x, self.y, self.w, self.h, self.theta]
    }

    /// Checks finiteness, positive extents and the range implied by the
    /// convention tag.
    pub fn validate(&self) -> Result<()> {
        let names = ["x", "y", "w", "h", "theta"];
        for (name, v) in names.iter().zip(self.params()) {
            if !v.is_finite() {
                return Err(Error::InvalidBox(format!("field `{name}` is not finite ({v})")));
            }
        }
        if self.w <= 0.0 {
            return Err(Error::InvalidBox(format!("field `w` must be > 0 (got {})", self.w)));
        }
        if self.h <= 0.0 {
            return Err(Error::InvalidBox(format!("field `h` must be > 0 (got {})", self.h)));
        }
        match self.convention {
            AngleConvention::Free => {}
            AngleConvention::OpenCv => {
                if !(-90.0..0.0).contains(&self.theta) {
                    return Err(Error::InvalidBox(format!(
                        "OpenCV convention needs theta in [-90, 0), got {}",
                        self.theta
                    )));
                }
            }
            AngleConvention::LongEdge => {
                if !(-90.0..90.0).contains(&self.theta) || self.w < self.h {
                    return Err(Error::InvalidBox(format!(
                        "long-edge convention needs theta in [-90, 90) and w >= h, got theta={} w={} h={}",
                        self.theta, self.w, self.h
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corners in counter-clockwise order, starting at the `(+w/2, +h/2)` corner.
    pub fn corners(&self) -> [Point; 4] {
        let (s, c) = self.theta.to_radians().sin_cos();
        let (hw, hh) = (0.5 * self.w, 0.5 * self.h);
        [(hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh)]
            .map(|(u, v)| Point::new(self.x + c * u - s * v, self.y + s * u + c * v))
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.corners().to_vec(),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    /// Rotates the whole box about the origin by `deg` degrees.
    pub fn rotated_about_origin(&self, deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
            theta: self.theta + deg,
            convention: AngleConvention::Free,
            ..*self
        }
    }

    /// Uniformly scales center and extents by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            x: self.x * k,
            y: self.y * k,
            w: self.w * k,
            h: self.h * k,
            ..*self
        }
    }
}

/// 3-D box rotated about the vertical (z) axis only.
///
/// `w` and `h` are the footprint extents (along the box's local x and y axes)
/// and `l` is the vertical extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedBox3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub h: f64,
    pub l: f64,
    /// Yaw in degrees.
    pub theta: f64,
}

impl RotatedBox3D {
    pub fn new(x: f64, y: f64, z: f64, w: f64, h: f64, l: f64, theta: f64) -> Result<Self> {
        let b = Self {
            x,
            y,
            z,
            w,
            h,
            l,
            theta,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn from_params(p: [f64; 7]) -> Result<Self> {
        Self::new(p[0], p[1], p[2], p[3], p[4], p[5], p[6])
    }

    pub fn params(&self) -> [f64; 7] {
        [self.x, self.y, self.z, self.w, self.h, self.l, self.theta]
    }

    pub fn validate(&self) -> Result<()> {
        let names = ["x", "y", "z", "w", "h", "l", "theta"];
        for (name, v) in names.iter().zip(self.params()) {
            if !v.is_finite() {
                return Err(Error::InvalidBox(format!("field `{name}` is not finite ({v})")));
            }
        }
        for (name, v) in [("w", self.w), ("h", self.h), ("l", self.l)] {
            if v <= 0.0 {
                return Err(Error::InvalidBox(format!("field `{name}` must be > 0 (got {v})")));
            }
        }
        Ok(())
    }

    /// Bird's-eye-view footprint.
    pub fn bev(&self) -> RotatedBox2D {
        RotatedBox2D {
            x: self.x,
            y: self.y,
            w: self.w,
            h: self.h,
            theta: self.theta,
            convention: AngleConvention::Free,
        }
    }

    pub fn volume(&self) -> f64 {
        self.w * self.h * self.l
    }

    fn z_range(&self) -> (f64, f64) {
        (self.z - 0.5 * self.l, self.z + 0.5 * self.l)
    }
}

/// Convex polygon with counter-clockwise vertices. May be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Builds a polygon from vertices in either orientation; the result is
    /// counter-clockwise. Fewer than three vertices give the empty polygon.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let mut vertices = dedup_ring(vertices);
        if vertices.len() < 3 {
            return Ok(Self::empty());
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::NotConvex);
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        if !is_convex_ccw(&vertices) {
            return Err(Error::NotConvex);
        }
        Ok(Self { vertices })
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn centroid(&self) -> Option<Point> {
        let a = signed_area(&self.vertices);
        if self.is_empty() || a == 0.0 {
            return None;
        }
        let n = self.vertices.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let k = p.cross(q);
            cx += (p.x + q.x) * k;
            cy += (p.y + q.y) * k;
        }
        Some(Point::new(cx / (6.0 * a), cy / (6.0 * a)))
    }

    /// Point-in-polygon with the inclusive half-plane tolerance.
    pub fn contains(&self, p: Point) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            edge_side(a, b, p) >= -CLIP_EPS
        })
    }

    fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Horizontal chord `[x_lo, x_hi]` of the polygon at height `y`.
    fn chord(&self, y: f64) -> Option<(f64, f64)> {
        let n = self.vertices.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let (ymin, ymax) = if p.y < q.y { (p.y, q.y) } else { (q.y, p.y) };
            if y < ymin || y > ymax {
                continue;
            }
            let x = if q.y == p.y {
                lo = lo.min(p.x.min(q.x));
                hi = hi.max(p.x.max(q.x));
                continue;
            } else {
                p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y)
            };
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo <= hi).then_some((lo, hi))
    }
}

fn dedup_ring(mut v: Vec<Point>) -> Vec<Point> {
    const TOL: f64 = 1e-12;
    v.dedup_by(|a, b| (a.x - b.x).abs() <= TOL && (a.y - b.y).abs() <= TOL);
    while v.len() > 1 {
        let (f, l) = (v[0], v[v.len() - 1]);
        if (f.x - l.x).abs() <= TOL && (f.y - l.y).abs() <= TOL {
            v.pop();
        } else {
            break;
        }
    }
    v
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * acc
}

fn is_convex_ccw(v: &[Point]) -> bool {
    let n = v.len();
    let mut turning = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        let e1 = b.sub(a);
        let e2 = c.sub(b);
        let cr = e1.cross(e2);
        if cr < -CLIP_EPS * e1.norm() * e2.norm().max(1.0) {
            return false;
        }
        turning += cr.atan2(e1.x * e2.x + e1.y * e2.y);
    }
    // a simple convex polygon turns exactly once
    (turning - std::f64::consts::TAU).abs() < 1e-6
}

/// Signed distance of `p` from the directed line `a → b`; positive on the left.
fn edge_side(a: Point, b: Point, p: Point) -> f64 {
    let e = b.sub(a);
    let len = e.norm();
    if len == 0.0 {
        return 0.0;
    }
    e.cross(p.sub(a)) / len
}

/// Vertices of a validated box as a counter-clockwise polygon.
pub fn box2d_vertices(b: &RotatedBox2D) -> Result<ConvexPolygon> {
    b.validate()?;
    Ok(b.polygon())
}

/// Shoelace area; never negative.
pub fn polygon_area(poly: &ConvexPolygon) -> f64 {
    signed_area(&poly.vertices).abs()
}

/// Intersection of two convex polygons by successive half-plane clipping of
/// `subject` against each edge of `clip`.
pub fn convex_clip(subject: &ConvexPolygon, clip: &ConvexPolygon) -> ConvexPolygon {
    if subject.is_empty() || clip.is_empty() {
        return ConvexPolygon::empty();
    }
    let mut output = subject.vertices.clone();
    let m = clip.vertices.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip.vertices[i];
        let b = clip.vertices[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let mut prev = input[input.len() - 1];
        let mut prev_side = edge_side(a, b, prev);
        for &cur in &input {
            let cur_side = edge_side(a, b, cur);
            let cur_in = cur_side >= -CLIP_EPS;
            let prev_in = prev_side >= -CLIP_EPS;
            if cur_in {
                if !prev_in {
                    output.push(crossing(prev, prev_side, cur, cur_side));
                }
                output.push(cur);
            } else if prev_in {
                output.push(crossing(prev, prev_side, cur, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    let vertices = dedup_ring(output);
    if vertices.len() < 3 || signed_area(&vertices).abs() < AREA_FLOOR {
        return ConvexPolygon::empty();
    }
    ConvexPolygon { vertices }
}

fn crossing(p: Point, sp: f64, q: Point, sq: f64) -> Point {
    let denom = sp - sq;
    let t = if denom == 0.0 { 0.5 } else { (sp / denom).clamp(0.0, 1.0) };
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Area of the intersection of two rotated rectangles.
pub fn intersection_area_2d(b1: &RotatedBox2D, b2: &RotatedBox2D) -> f64 {
    let a = convex_clip(&b1.polygon(), &b2.polygon()).area();
    if a < AREA_FLOOR {
        0.0
    } else {
        a
    }
}

/// Exact intersection-over-union of two rotated rectangles.
pub fn skew_iou_2d(b1: &RotatedBox2D, b2: &RotatedBox2D) -> f64 {
    let inter = intersection_area_2d(b1, b2);
    let union = b1.area() + b2.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Volume IoU of two yaw-only 3-D boxes: footprint intersection times the
/// vertical overlap.
pub fn skew_iou_3d(b1: &RotatedBox3D, b2: &RotatedBox3D) -> f64 {
    let (lo1, hi1) = b1.z_range();
    let (lo2, hi2) = b2.z_range();
    let dz = (hi1.min(hi2) - lo1.max(lo2)).max(0.0);
    let inter = if dz == 0.0 {
        0.0
    } else {
        intersection_area_2d(&b1.bev(), &b2.bev()) * dz
    };
    let union = b1.volume() + b2.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Pixel-counting IoU over a `grid_n × grid_n` lattice spanning both boxes.
///
/// Each row is handled as a scanline: the number of pixel centers inside a
/// convex polygon on a row is the number of lattice abscissae in its chord,
/// which is identical to testing every pixel individually.
pub fn rasterized_iou(b1: &RotatedBox2D, b2: &RotatedBox2D, grid_n: usize) -> Result<f64> {
    if grid_n < 100 {
        return Err(Error::InvalidConfig(format!("grid_n must be >= 100 (got {grid_n})")));
    }
    let p1 = b1.polygon();
    let p2 = b2.polygon();
    let (lo1, hi1) = p1.bounds();
    let (lo2, hi2) = p2.bounds();
    let x0 = lo1.x.min(lo2.x);
    let y0 = lo1.y.min(lo2.y);
    let dx = (hi1.x.max(hi2.x) - x0) / grid_n as f64;
    let dy = (hi1.y.max(hi2.y) - y0) / grid_n as f64;

    let count = |lo: f64, hi: f64| -> u64 {
        if hi < lo {
            return 0;
        }
        let first = ((lo - x0) / dx - 0.5).ceil().max(0.0);
        let last = ((hi - x0) / dx - 0.5).floor().min(grid_n as f64 - 1.0);
        if last < first {
            0
        } else {
            (last - first) as u64 + 1
        }
    };

    let (mut c1, mut c2, mut ci) = (0u64, 0u64, 0u64);
    for row in 0..grid_n {
        let y = y0 + (row as f64 + 0.5) * dy;
        let s1 = p1.chord(y);
        let s2 = p2.chord(y);
        if let Some((a, b)) = s1 {
            c1 += count(a, b);
        }
        if let Some((a, b)) = s2 {
            c2 += count(a, b);
        }
        if let (Some((a1, b1)), Some((a2, b2))) = (s1, s2) {
            ci += count(a1.max(a2), b1.min(b2));
        }
    }
    let union = c1 + c2 - ci;
    Ok(if union == 0 { 0.0 } else { ci as f64 / union as f64 })
}

/// Wraps an angle in degrees into `[-90, 90)`.
pub fn wrap_half_turn(deg: f64) -> f64 {
    let r = (deg + 90.0).rem_euclid(180.0) - 90.0;
    if r >= 90.0 {
        r - 180.0
    } else {
        r
    }
}

/// Re-expresses a box in the target convention without changing its point set.
pub fn canonicalize(b: &RotatedBox2D, target: AngleConvention) -> RotatedBox2D {
    let mut out = *b;
    out.convention = target;
    match target {
        AngleConvention::Free => {}
        AngleConvention::OpenCv => {
            let mut t = wrap_half_turn(b.theta);
            if t >= 0.0 {
                std::mem::swap(&mut out.w, &mut out.h);
                t -= 90.0;
            }
            // t - 90 can round to -90 - ulp for tiny negative inputs
            out.theta = t.max(-90.0);
        }
        AngleConvention::LongEdge => {
            let mut t = b.theta;
            if b.w < b.h {
                std::mem::swap(&mut out.w, &mut out.h);
                t += 90.0;
            }
            out.theta = wrap_half_turn(t);
        }
    }
    out
}
