//! Planar closed curves stored as counterclockwise marker polygons, the
//! domain generators used by the simulator and the discrete differential
//! geometry (normals, curvature, convexity) evaluated on them.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest marker count accepted for a [`ClosedCurve`].
pub const MIN_MARKERS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Rotation by -90 degrees; the outward normal of a counterclockwise tangent.
    pub fn rot_cw(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, rhs: Point2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Ordered marker polygon approximating the boundary of a bounded, simply
/// connected planar domain.
///
/// Invariants checked at construction: at least [`MIN_MARKERS`] finite
/// markers, no repeated consecutive markers, counterclockwise orientation
/// and no self-intersection.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    markers: Vec<Point2>,
}

impl ClosedCurve {
    /// Builds a curve from markers listed counterclockwise.
    pub fn new(markers: Vec<Point2>) -> Result<Self> {
        let curve = Self::from_markers_unchecked(markers)?;
        if curve.signed_area() <= 0.0 {
            return Err(Error::InvalidDomain(
                "markers are not ordered counterclockwise".into(),
            ));
        }
        if let Some((i, j)) = curve.first_self_intersection() {
            return Err(Error::InvalidDomain(format!(
                "curve self-intersects: edges {i} and {j} cross"
            )));
        }
        Ok(curve)
    }

    /// Builds a curve from markers in either orientation, reversing them
    /// (while keeping marker 0 first) when they run clockwise.
    pub fn from_points(mut markers: Vec<Point2>) -> Result<Self> {
        if polygon_signed_area(&markers) < 0.0 {
            markers[1..].reverse();
        }
        Self::new(markers)
    }

    fn from_markers_unchecked(markers: Vec<Point2>) -> Result<Self> {
        if markers.len() < MIN_MARKERS {
            return Err(Error::InvalidArgument(format!(
                "a closed curve needs at least {MIN_MARKERS} markers, got {}",
                markers.len()
            )));
        }
        if let Some(i) = markers.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidDomain(format!("marker {i} is not finite")));
        }
        let n = markers.len();
        for i in 0..n {
            if markers[i] == markers[(i + 1) % n] {
                return Err(Error::InvalidDomain(format!(
                    "markers {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { markers })
    }

    pub fn markers(&self) -> &[Point2] {
        &self.markers
    }

    pub fn into_markers(self) -> Vec<Point2> {
        self.markers
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    fn prev(&self, i: usize) -> Point2 {
        let n = self.markers.len();
        self.markers[(i + n - 1) % n]
    }

    fn next(&self, i: usize) -> Point2 {
        self.markers[(i + 1) % self.markers.len()]
    }

    /// Edge `i` runs from marker `i` to marker `i + 1`.
    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        (self.markers[i], self.next(i))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        (0..self.markers.len()).map(move |i| self.edge(i))
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges().map(|(a, b)| a.distance(b)).collect()
    }

    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.markers)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Area centroid of the polygon.
    pub fn centroid(&self) -> Point2 {
        let area = self.signed_area();
        let mut c = Point2::ORIGIN;
        for (p, q) in self.edges() {
            let w = p.cross(q);
            c += (p + q) * w;
        }
        c * (1.0 / (6.0 * area))
    }

    pub fn min_spacing(&self) -> f64 {
        self.edges()
            .map(|(a, b)| a.distance(b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).fold(0.0, f64::max)
    }

    /// Mean of the two edge lengths adjacent to each marker.
    pub fn local_spacing(&self) -> Vec<f64> {
        let lengths = self.edge_lengths();
        let n = lengths.len();
        (0..n)
            .map(|i| 0.5 * (lengths[i] + lengths[(i + n - 1) % n]))
            .collect()
    }

    /// Arclength coordinate of each marker, starting at marker 0.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.markers.len());
        let mut acc = 0.0;
        for (a, b) in self.edges() {
            s.push(acc);
            acc += a.distance(b);
        }
        s
    }

    /// Outward unit normal at every marker, taken from the circle through
    /// the marker and its two neighbours (the edge normal on straight runs).
    pub fn outward_normals(&self) -> Vec<Point2> {
        (0..self.markers.len())
            .map(|i| {
                let p = self.markers[i];
                let fwd = self.next(i) - p;
                let back = p - self.prev(i);
                let (lf, lb) = (fwd.norm(), back.norm());
                // Tangent of the circumscribed circle at the middle marker.
                let tangent = fwd * (lb / lf) + back * (lf / lb);
                tangent.rot_cw().normalized()
            })
            .collect()
    }

    /// Signed curvature at every marker from the circumscribed circle of
    /// consecutive marker triples; positive where the curve turns left.
    pub fn signed_curvatures(&self) -> Vec<f64> {
        (0..self.markers.len())
            .map(|i| three_point_curvature(self.prev(i), self.markers[i], self.next(i)))
            .collect()
    }

    /// Even-odd ray test. Points on the boundary may land either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the nearest point of the polygon.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box as (min corner, max corner).
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.markers {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// `2 * area / perimeter`; exact for disks and for polygons with an incircle.
    pub fn inradius_estimate(&self) -> f64 {
        2.0 * self.signed_area() / self.perimeter()
    }

    /// Returns the first pair of non-adjacent edges that intersect, or a pair
    /// of adjacent edges folding back onto each other.
    pub fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.markers.len();
        let boxes: Vec<(Point2, Point2)> = self
            .edges()
            .map(|(a, b)| {
                (
                    Point2::new(a.x.min(b.x), a.y.min(b.y)),
                    Point2::new(a.x.max(b.x), a.y.max(b.y)),
                )
            })
            .collect();
        for i in 0..n {
            let (a, b) = self.edge(i);
            // Adjacent edge i+1 shares marker i+1; it can only overlap by folding back.
            let (_, c) = self.edge((i + 1) % n);
            let (e1, e2) = (b - a, c - b);
            if e1.cross(e2) == 0.0 && e1.dot(e2) < 0.0 {
                return Some((i, (i + 1) % n));
            }
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (bi, bj) = (boxes[i], boxes[j]);
                if bi.1.x < bj.0.x || bj.1.x < bi.0.x || bi.1.y < bj.0.y || bj.1.y < bi.0.y {
                    continue;
                }
                let (p, q) = self.edge(j);
                if segments_intersect(a, b, p, q) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_simple(&self) -> bool {
        self.first_self_intersection().is_none()
    }
}

pub(crate) fn polygon_signed_area(points: &[Point2]) -> f64 {
    let n = points.len();
    0.5 * (0..n).map(|i| points[i].cross(points[(i + 1) % n])).sum::<f64>()
}

/// Signed curvature of the circle through three points; zero for collinear triples.
pub fn three_point_curvature(prev: Point2, p: Point2, next: Point2) -> f64 {
    let e1 = p - prev;
    let e2 = next - p;
    let denom = e1.norm() * e2.norm() * (next - prev).norm();
    let cross = e1.cross(e2);
    if denom == 0.0 || cross.abs() <= f64::EPSILON * e1.norm() * e2.norm() {
        return 0.0;
    }
    2.0 * cross / denom
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    p.distance(a + ab * t)
}

/// Everything [`curve_queries`] reports for one curve.
#[derive(Clone, Debug)]
pub struct CurveQueries {
    pub signed_area: f64,
    pub perimeter: f64,
    pub outward_normals: Vec<Point2>,
    pub signed_curvature: Vec<f64>,
}

pub fn curve_queries(curve: &ClosedCurve) -> CurveQueries {
    CurveQueries {
        signed_area: curve.signed_area(),
        perimeter: curve.perimeter(),
        outward_normals: curve.outward_normals(),
        signed_curvature: curve.signed_curvatures(),
    }
}

/// Default curvature tolerance for [`is_convex`]: `1e-6` per unit inradius.
pub fn default_convexity_tol(curve: &ClosedCurve) -> f64 {
    1e-6 / curve.inradius_estimate()
}

/// Convexity test combining the marker curvature sign with the polygon
/// turning test. `tol` is a curvature; turning at marker `i` is accepted
/// when `sin(turn) >= -tol * spacing_i`.
pub fn is_convex(curve: &ClosedCurve, tol: f64) -> bool {
    if curve.signed_curvatures().iter().any(|&k| k < -tol) {
        return false;
    }
    let spacing = curve.local_spacing();
    let m = curve.markers();
    let n = m.len();
    (0..n).all(|i| {
        let e1 = m[i] - m[(i + n - 1) % n];
        let e2 = m[(i + 1) % n] - m[i];
        let sin_turn = e1.cross(e2) / (e1.norm() * e2.norm());
        sin_turn >= -tol * spacing[i]
    })
}

/// Markers on a circle of radius `radius` about the origin, starting at
/// `(radius, 0)` and running counterclockwise. No validation.
pub fn disk_points(radius: f64, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n as f64;
            Point2::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

pub fn make_disk(radius: f64, n: usize) -> Result<ClosedCurve> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    if n < MIN_MARKERS {
        return Err(Error::InvalidArgument(format!(
            "disk needs at least {MIN_MARKERS} markers, got {n}"
        )));
    }
    ClosedCurve::new(disk_points(radius, n))
}

pub fn translate(curve: &ClosedCurve, offset: Point2) -> ClosedCurve {
    ClosedCurve {
        markers: curve.markers.iter().map(|&p| p + offset).collect(),
    }
}

/// Equilateral triangle of side `2a` with corners rounded by tangent
/// circular fillets of radius `fillet_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundedTriangleSpec {
    pub a: f64,
    pub fillet_radius: f64,
    pub marker_count: usize,
}

impl RoundedTriangleSpec {
    pub fn new(a: f64, fillet_radius: f64, marker_count: usize) -> Result<Self> {
        let spec = Self {
            a,
            fillet_radius,
            marker_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half side length must be positive, got {}",
                self.a
            )));
        }
        let r = self.fillet_radius;
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fillet radius must be non-negative, got {r}"
            )));
        }
        let r_max = self.a / 3f64.sqrt();
        if r >= r_max {
            return Err(Error::InvalidArgument(format!(
                "fillets overlap: radius {r} must be below a/sqrt(3) = {r_max}"
            )));
        }
        if self.marker_count < 18.max(MIN_MARKERS) {
            return Err(Error::InvalidArgument(format!(
                "rounded triangle needs at least 18 markers, got {}",
                self.marker_count
            )));
        }
        Ok(())
    }

    pub fn vertices(&self) -> [Point2; 3] {
        triangle_vertices(self.a)
    }

    /// Right end of the straight part of the bottom edge, `a - sqrt(3) r`.
    pub fn flat_half_width(&self) -> f64 {
        self.a - 3f64.sqrt() * self.fillet_radius
    }

    pub fn perimeter(&self) -> f64 {
        let r = self.fillet_radius;
        6.0 * self.a - 6.0 * 3f64.sqrt() * r + 2.0 * PI * r
    }

    /// Exact enclosed area: triangle minus the three corner regions cut off
    /// by the fillets.
    pub fn area(&self) -> f64 {
        let r = self.fillet_radius;
        // Each corner loses a kite of area sqrt(3) r^2 minus a 120 degree sector.
        3f64.sqrt() * self.a * self.a - 3.0 * (3f64.sqrt() * r * r - PI * r * r / 3.0)
    }

    pub fn fillet_centers(&self) -> [Point2; 3] {
        let incenter = Point2::new(0.0, self.a / 3f64.sqrt());
        self.vertices()
            .map(|v| v + (incenter - v).normalized() * (2.0 * self.fillet_radius))
    }

    /// Boundary point at arclength `s` from the bottom midpoint `(0, 0)`,
    /// travelling counterclockwise.
    pub fn point_at(&self, s: f64) -> Point2 {
        let a = self.a;
        let r = self.fillet_radius;
        let sqrt3 = 3f64.sqrt();
        let straight = 2.0 * a - 2.0 * sqrt3 * r;
        let arc = 2.0 * PI * r / 3.0;
        let [p1, p2, p3] = self.vertices();
        let [c1, c2, c3] = self.fillet_centers();
        let mut s = s.rem_euclid(self.perimeter());

        // Bottom half edge from (0,0) to the right tangency point.
        let half = straight / 2.0;
        if s <= half {
            return Point2::new(s, 0.0);
        }
        s -= half;
        // (start of straight edge, unit direction, fillet centre, start angle)
        // for each corner after the current edge.
        let legs = [
            (c2, -PI / 2.0, (p3 - p2).normalized()),
            (c3, PI / 6.0, (p1 - p3).normalized()),
            (c1, 5.0 * PI / 6.0, (p2 - p1).normalized()),
        ];
        for (k, &(center, angle0, dir)) in legs.iter().enumerate() {
            if s <= arc && r > 0.0 {
                let theta = angle0 + s / r;
                return center + Point2::new(theta.cos(), theta.sin()) * r;
            }
            s -= arc;
            let start =
                center + Point2::new((angle0 + 2.0 * PI / 3.0).cos(), (angle0 + 2.0 * PI / 3.0).sin()) * r;
            let len = if k == 2 { half } else { straight };
            if s <= len || k == 2 {
                return start + dir * s.min(len);
            }
            s -= len;
        }
        unreachable!("arclength reduced modulo the perimeter")
    }
}

pub fn triangle_vertices(a: f64) -> [Point2; 3] {
    [
        Point2::new(-a, 0.0),
        Point2::new(a, 0.0),
        Point2::new(0.0, a * 3f64.sqrt()),
    ]
}

/// Markers equally spaced in arclength along the rounded triangle, with
/// marker 0 at the bottom midpoint so the set is symmetric under `x -> -x`.
/// With a zero fillet the three vertices are inserted as markers whenever
/// `marker_count` is a multiple of 6.
pub fn make_rounded_triangle(spec: &RoundedTriangleSpec) -> Result<ClosedCurve> {
    spec.validate()?;
    let n = spec.marker_count;
    let perimeter = spec.perimeter();
    let markers = (0..n)
        .map(|k| {
            // Mirror the second half so the marker set is exactly symmetric.
            if 2 * k > n {
                let p = spec.point_at((n - k) as f64 * perimeter / n as f64);
                Point2::new(-p.x, p.y)
            } else {
                spec.point_at(k as f64 * perimeter / n as f64)
            }
        })
        .collect();
    ClosedCurve::new(markers)
}

/// `N` markers equally spaced in arclength along the polygon, keeping marker 0.
pub fn resample_uniform(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < MIN_MARKERS {
        return Err(Error::InvalidArgument(format!(
            "resampling needs at least {MIN_MARKERS} markers, got {n}"
        )));
    }
    let lengths = curve.edge_lengths();
    let perimeter: f64 = lengths.iter().sum();
    let m = curve.markers();
    let mut out = Vec::with_capacity(n);
    let mut edge = 0;
    let mut edge_start = 0.0;
    for k in 0..n {
        let target = k as f64 * perimeter / n as f64;
        while edge + 1 < lengths.len() && edge_start + lengths[edge] < target {
            edge_start += lengths[edge];
            edge += 1;
        }
        let t = ((target - edge_start) / lengths[edge]).clamp(0.0, 1.0);
        let (a, b) = curve.edge(edge);
        out.push(if t == 0.0 { m[edge] } else { a.lerp(b, t) });
    }
    ClosedCurve::new(out)
}

/// Lowest intersection of the vertical line through `x` with the curve.
pub fn extract_graph_height(curve: &ClosedCurve, x: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (a, b) in curve.edges() {
        let (lo, hi) = if a.x <= b.x { (a, b) } else { (b, a) };
        if x < lo.x || x > hi.x {
            continue;
        }
        let y = if hi.x == lo.x {
            lo.y.min(hi.y)
        } else {
            lo.y + (x - lo.x) / (hi.x - lo.x) * (hi.y - lo.y)
        };
        best = best.min(y);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::OutOfRange(format!(
            "vertical line x = {x} does not meet the curve"
        )))
    }
}

/// Convex hull (Andrew's monotone chain), counterclockwise.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rounded(a: f64, r: f64, n: usize) -> ClosedCurve {
        make_rounded_triangle(&RoundedTriangleSpec::new(a, r, n).unwrap()).unwrap()
    }

    #[test]
    fn disk_points_quarter_turns() {
        let p = disk_points(1.0, 4);
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, e) in p.iter().zip(expect) {
            assert!((p.x - e.0).abs() < 1e-15 && (p.y - e.1).abs() < 1e-15);
        }
    }

    #[test]
    fn disk_area_converges_to_pi() {
        let c = make_disk(1.0, 512).unwrap();
        let inscribed = 256.0 * (2.0 * PI / 512.0).sin();
        assert!((c.signed_area() - inscribed).abs() < 1e-12);
        assert!((c.signed_area() - PI).abs() <= 1e-4);
        assert!(is_convex(&make_disk(2.0, 256).unwrap(), 1e-6));
    }

    #[test]
    fn disk_rejects_bad_arguments() {
        assert!(matches!(make_disk(0.0, 64), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_disk(1.0, 7), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disk_curvature_and_normals() {
        let c = make_disk(2.0, 512).unwrap();
        let q = curve_queries(&c);
        for (k, (n, p)) in q
            .signed_curvature
            .iter()
            .zip(q.outward_normals.iter().zip(c.markers()))
        {
            assert!((k - 0.5).abs() / 0.5 <= 1e-3);
            assert!((*n - p.normalized()).norm() <= 1e-3);
        }
    }

    #[test]
    fn rejects_clockwise_and_self_intersecting() {
        let mut pts = disk_points(1.0, 16);
        pts.reverse();
        assert!(ClosedCurve::new(pts.clone()).is_err());
        let fixed = ClosedCurve::from_points(pts).unwrap();
        assert!(fixed.signed_area() > 0.0);

        // Figure-eight-ish bow tie.
        let bow: Vec<Point2> = (0..16)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 16.0;
                Point2::new(t.sin(), (2.0 * t).sin() * 0.5 + 0.1 * t.cos())
            })
            .collect();
        assert!(ClosedCurve::from_points(bow).is_err());
    }

    #[test]
    fn reflex_vertex_is_not_convex() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(2.0, 2.0),
            Point2::new(1.0, 1.5),
            Point2::new(0.0, 2.0),
            Point2::new(0.0, 1.0),
        ];
        let c = ClosedCurve::new(pts).unwrap();
        assert!(!is_convex(&c, 1e-6));
    }

    #[test]
    fn rounded_triangle_flat_bottom_and_containment() {
        let spec = RoundedTriangleSpec::new(1.0, 0.05, 600).unwrap();
        assert!((spec.flat_half_width() - 0.913397).abs() < 1e-6);
        let c = make_rounded_triangle(&spec).unwrap();
        let [_, p2, p3] = spec.vertices();
        let sqrt3 = 3f64.sqrt();
        for p in c.markers() {
            assert!(p.y >= -1e-12);
            assert!(sqrt3 * p.x.abs() <= sqrt3 - p.y + 1e-12, "{p:?} outside D");
            if p.y.abs() < 1e-14 {
                assert!(p.x.abs() <= spec.flat_half_width() + 1e-12);
            }
        }
        // Tangency point on the right edge.
        let t = spec.point_at(spec.flat_half_width() + 2.0 * PI * 0.05 / 3.0);
        let on_edge = (p3 - p2).cross(t - p2).abs();
        assert!(on_edge < 1e-12);
        assert!(is_convex(&c, default_convexity_tol(&c)));
        assert!((c.perimeter() - spec.perimeter()).abs() / spec.perimeter() < 1e-4);
    }

    #[test]
    fn rounded_triangle_is_mirror_symmetric() {
        let c = rounded(1.0, 0.02, 401);
        let m = c.markers();
        let n = m.len();
        assert_eq!(m[0], Point2::ORIGIN);
        for k in 1..n {
            let a = m[k];
            let b = m[n - k];
            assert!((a.x + b.x).abs() < 1e-14 && (a.y - b.y).abs() < 1e-14);
        }
    }

    #[test]
    fn sharp_triangle_has_vertex_markers() {
        let c = rounded(1.0, 0.0, 60);
        for v in triangle_vertices(1.0) {
            let d = c
                .markers()
                .iter()
                .map(|p| p.distance(v))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-12, "vertex {v:?} missing, nearest {d}");
        }
        assert!((c.signed_area() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rounded_triangle_area_monotone_in_fillet() {
        let areas: Vec<f64> = [0.2, 0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&r| rounded(1.0, r, 1200).signed_area())
            .collect();
        for w in areas.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!((areas[4] - 3f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn rounded_triangle_rejects_overlapping_fillets() {
        assert!(RoundedTriangleSpec::new(1.0, 0.6, 300).is_err());
        assert!(RoundedTriangleSpec::new(1.0, 0.57, 300).is_ok());
    }

    #[test]
    fn resample_keeps_markers_on_circle() {
        let c = make_disk(1.0, 300).unwrap();
        let r = resample_uniform(&c, 256).unwrap();
        for p in r.markers() {
            assert!((p.norm() - 1.0).abs() <= 1e-3);
        }
        let again = resample_uniform(&r, 256).unwrap();
        let drift = r
            .markers()
            .iter()
            .zip(again.markers())
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        // Not idempotent: the second pass walks chords of the first.
        assert!(drift <= 1e-5 * r.perimeter());
        let regular = make_disk(1.0, 64).unwrap();
        let same = resample_uniform(&regular, 64).unwrap();
        for (a, b) in regular.markers().iter().zip(same.markers()) {
            assert!(a.distance(*b) < 1e-12);
        }
        assert!(resample_uniform(&c, 4).is_err());
    }

    #[test]
    fn resample_preserves_triangle_perimeter() {
        let c = rounded(1.0, 0.05, 700);
        let r = resample_uniform(&c, 512).unwrap();
        // Chords cut the fillet arcs, a second-order loss.
        assert!((r.perimeter() - c.perimeter()).abs() <= 5e-4 * c.perimeter());
    }

    #[test]
    fn graph_height_examples() {
        let t = rounded(1.0, 0.05, 600);
        assert_eq!(extract_graph_height(&t, 0.0).unwrap(), 0.0);
        let d = make_disk(1.0, 4096).unwrap();
        assert!((extract_graph_height(&d, 0.0).unwrap() + 1.0).abs() < 1e-6);
        assert!((extract_graph_height(&d, 0.6).unwrap() + 0.8).abs() < 1e-5);
        assert!(matches!(extract_graph_height(&d, 1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn inward_dent_breaks_convexity() {
        let c = make_disk(1.0, 256).unwrap();
        let dent = 0.01 * c.perimeter();
        let mut pts = c.into_markers();
        pts[10] = pts[10] * (1.0 - dent);
        let dented = ClosedCurve::new(pts).unwrap();
        assert!(!is_convex(&dented, 1e-6));
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 0.5),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(polygon_signed_area(&h) > 0.0);
    }
}
