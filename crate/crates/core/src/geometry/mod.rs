//! Planar geometry for disk-robot planning.
//!
//! Obstacles are circles or simple polygons. Every operation works on a
//! [`Region`], a base shape grown by a Minkowski offset; growing by the robot
//! radius and later by a clearance margin just accumulates the offset, so
//! distances and containment stay exact instead of approximating rounded
//! corners with extra vertices. Offsets never shrink a shape.
//!
//! Conventions used throughout:
//! * polygons are simple, counter-clockwise, closed implicitly (last vertex
//!   connects to the first);
//! * signed distance is negative inside, positive outside, zero on the
//!   boundary;
//! * `BOUNDARY_EPS` is the tolerance separating "on the boundary" from a
//!   real crossing. Coordinates are metres in a room-sized workspace, so an
//!   absolute tolerance is appropriate.

mod decomp;
mod shape;
mod star;

pub use decomp::convex_decomposition;
pub use star::{starshaped_hull, StarBoundary, StarHullOptions, StarObstacle};

use crate::math;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// Tolerance for boundary membership tests, in metres.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Cross products smaller than this count as collinear.
const COLLINEAR_EPS: f64 = 1e-9;

// ---------------------------------------------------------------------------
// points
// ---------------------------------------------------------------------------

/// Point in the plane, also used as a 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ZERO: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    /// Unit vector, or `None` when shorter than `eps`.
    pub fn try_normalize(self, eps: f64) -> Option<Point> {
        let n = self.norm();
        if n <= eps {
            None
        } else {
            Some(self / n)
        }
    }

    #[inline]
    pub fn from_angle(theta: f64) -> Point {
        Point::new(math::cos(theta), math::sin(theta))
    }

    /// Polar angle in `(-pi, pi]`.
    #[inline]
    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    #[inline]
    pub fn rotate(self, theta: f64) -> Point {
        let (s, c) = (math::sin(theta), math::cos(theta));
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    #[inline]
    fn div(self, k: f64) -> Point {
        Point::new(self.x / k, self.y / k)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

/// Rejected input or a failed construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    /// Shape constructor rejected its vertices; the string names the rule.
    InvalidShape(&'static str),
    /// Operation needs at least one shape.
    EmptyInput,
    /// Convex hull of regions requires a uniform offset.
    MixedOffsets,
    /// No admissible star center found for a cluster.
    NoValidCenter,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InvalidShape(why) => write!(f, "invalid shape: {why}"),
            GeometryError::EmptyInput => write!(f, "operation needs at least one shape"),
            GeometryError::MixedOffsets => {
                write!(f, "convex hull over regions requires equal offsets")
            }
            GeometryError::NoValidCenter => {
                write!(f, "no admissible star center found for cluster")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

// ---------------------------------------------------------------------------
// obstacles
// ---------------------------------------------------------------------------

/// Base obstacle shape. Build through the checked constructors; the variants
/// are exposed for matching only.
#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Circle {
        center: Point,
        radius: f64,
    },
    /// Convex, counter-clockwise.
    ConvexPolygon {
        vertices: Vec<Point>,
    },
    /// Simple, counter-clockwise, possibly non-convex.
    Polygon {
        vertices: Vec<Point>,
    },
}

impl Obstacle {
    pub fn circle(center: Point, radius: f64) -> Result<Obstacle, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() || !center.x.is_finite() || !center.y.is_finite()
        {
            return Err(GeometryError::InvalidShape("circle needs finite positive radius"));
        }
        Ok(Obstacle::Circle { center, radius })
    }

    /// Validates convexity on top of the general polygon rules and
    /// normalizes the winding to counter-clockwise.
    pub fn convex_polygon(vertices: Vec<Point>) -> Result<Obstacle, GeometryError> {
        let vertices = shape::validate_polygon(vertices)?;
        if !shape::is_convex_ccw(&vertices) {
            return Err(GeometryError::InvalidShape("vertices are not convex"));
        }
        Ok(Obstacle::ConvexPolygon { vertices })
    }

    /// Simple polygon, any winding on input, stored counter-clockwise.
    pub fn polygon(vertices: Vec<Point>) -> Result<Obstacle, GeometryError> {
        let vertices = shape::validate_polygon(vertices)?;
        Ok(Obstacle::Polygon { vertices })
    }

    /// Signed distance to the shape and the closest point on its boundary.
    /// For a query at a circle center the boundary point at angle zero is
    /// returned so callers always get a usable direction.
    pub fn signed_distance(&self, q: Point) -> (f64, Point) {
        match self {
            Obstacle::Circle { center, radius } => {
                let d = q.dist(*center);
                let on = if let Some(u) = (q - *center).try_normalize(1e-15) {
                    *center + u * *radius
                } else {
                    *center + Point::new(*radius, 0.0)
                };
                (d - radius, on)
            }
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                shape::polygon_signed_distance(vertices, q)
            }
        }
    }

    /// Largest `dot(p, dir)` over the shape, `dir` unit.
    pub fn support(&self, dir: Point) -> f64 {
        match self {
            Obstacle::Circle { center, radius } => center.dot(dir) + radius,
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => vertices
                .iter()
                .map(|v| v.dot(dir))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// A point with positive clearance to the boundary from inside.
    /// For polygons this is the deepest vertex-averaged fallback: the
    /// centroid works for convex shapes, otherwise the deepest of centroid
    /// and edge midpoint probes is taken.
    pub fn interior_point(&self) -> Point {
        match self {
            Obstacle::Circle { center, .. } => *center,
            Obstacle::ConvexPolygon { vertices } => shape::polygon_centroid(vertices),
            Obstacle::Polygon { vertices } => {
                let c = shape::polygon_centroid(vertices);
                if shape::polygon_signed_distance(vertices, c).0 < -BOUNDARY_EPS {
                    return c;
                }
                // Non-convex and the centroid fell outside: probe inward
                // offsets of edge midpoints and keep the deepest.
                let mut best = (f64::INFINITY, c);
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if let Some(t) = (b - a).try_normalize(1e-12) {
                        // Inward normal of a CCW edge.
                        let inward = t.perp();
                        let mid = (a + b) * 0.5;
                        for k in [0.25, 0.1, 0.02] {
                            let probe = mid + inward * (k * (b - a).norm());
                            let (d, _) = shape::polygon_signed_distance(vertices, probe);
                            if d < best.0 {
                                best = (d, probe);
                            }
                        }
                    }
                }
                best.1
            }
        }
    }

    pub fn vertices(&self) -> Option<&[Point]> {
        match self {
            Obstacle::Circle { .. } => None,
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                Some(vertices)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// regions
// ---------------------------------------------------------------------------

/// Hit of a ray against a region boundary, ordered by distance from the
/// origin along the (unit) ray direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Distance along the ray, metres.
    pub t: f64,
    pub point: Point,
    /// Outward unit normal of the boundary at `point`.
    pub normal: Point,
}

/// An obstacle grown by a Minkowski offset: all points within `offset` of
/// the base shape. The representation keeps the base exact, so repeated
/// growing is loss-free.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    base: Obstacle,
    offset: f64,
}

impl Region {
    pub fn new(base: Obstacle) -> Region {
        Region { base, offset: 0.0 }
    }

    pub fn with_offset(base: Obstacle, offset: f64) -> Region {
        debug_assert!(offset >= 0.0);
        Region { base, offset }
    }

    pub fn base(&self) -> &Obstacle {
        &self.base
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Same region grown by `margin`.
    pub fn inflate(&self, margin: f64) -> Region {
        debug_assert!(margin >= 0.0);
        Region {
            base: self.base.clone(),
            offset: self.offset + margin,
        }
    }

    /// Negative inside, zero on the boundary, positive outside. Exact up to
    /// floating point: the offset shifts the base field uniformly.
    #[inline]
    pub fn signed_distance(&self, q: Point) -> f64 {
        self.base.signed_distance(q).0 - self.offset
    }

    /// Closed containment (boundary counts as inside).
    #[inline]
    pub fn contains(&self, q: Point) -> bool {
        self.signed_distance(q) <= BOUNDARY_EPS
    }

    /// Open containment (boundary does not count).
    #[inline]
    pub fn contains_interior(&self, q: Point) -> bool {
        self.signed_distance(q) < -BOUNDARY_EPS
    }

    /// A point on the offset surface near `q`, with the outward unit normal
    /// there. For queries outside the region this is the exact nearest
    /// surface point; for queries buried inside a sealed concave pocket the
    /// point is guaranteed on the surface but may be only near-nearest.
    pub fn closest_boundary_point(&self, q: Point) -> (Point, Point) {
        match &self.base {
            Obstacle::Circle { center, radius } => {
                let dir = (q - *center)
                    .try_normalize(1e-12)
                    .unwrap_or(Point::new(1.0, 0.0));
                (*center + dir * (radius + self.offset), dir)
            }
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                if self.signed_distance(q) > 1e-12 {
                    // Outside the grown region the nearest base feature
                    // direction is exact.
                    let (s, on_base) = self.base.signed_distance(q);
                    let dir = (q - on_base)
                        .try_normalize(1e-15)
                        .unwrap_or(Point::new(1.0, 0.0));
                    debug_assert!(s > 0.0);
                    (on_base + dir * self.offset, dir)
                } else {
                    shape::closest_offset_polygon_point(vertices, self.offset, q)
                }
            }
        }
    }

    /// Largest `dot(p, dir)` over the region, `dir` unit.
    pub fn support(&self, dir: Point) -> f64 {
        self.base.support(dir) + self.offset
    }

    /// All transversal crossings of the ray `origin + t * dir`, `t >= 0`,
    /// with the region boundary, sorted by `t` and deduplicated. `dir` need
    /// not be unit; it is normalized internally and `t` is metric.
    ///
    /// Tangential grazes show up as a single hit. Every returned point lies
    /// on the boundary to within `1e-7`.
    pub fn ray_hits(&self, origin: Point, dir: Point) -> Vec<RayHit> {
        let Some(u) = dir.try_normalize(1e-15) else {
            return Vec::new();
        };
        let mut hits = match &self.base {
            Obstacle::Circle { center, radius } => {
                shape::ray_circle_hits(origin, u, *center, radius + self.offset)
            }
            Obstacle::ConvexPolygon { vertices } => {
                shape::ray_offset_polygon_hits(origin, u, vertices, self.offset, true)
            }
            Obstacle::Polygon { vertices } => {
                shape::ray_offset_polygon_hits(origin, u, vertices, self.offset, false)
            }
        };
        hits.sort_unstable_by(|a, b| a.t.total_cmp(&b.t));
        hits.dedup_by(|a, b| (a.t - b.t).abs() <= 1e-9);
        hits
    }

    /// Points spread along the boundary, spacing roughly `perimeter / n`.
    /// Intended for conservative sampling tests, not exact cover.
    pub fn boundary_points(&self, n: usize) -> Vec<Point> {
        let n = n.max(4);
        match &self.base {
            Obstacle::Circle { center, radius } => {
                let r = radius + self.offset;
                (0..n)
                    .map(|i| {
                        let th = i as f64 / n as f64 * core::f64::consts::TAU;
                        *center + Point::from_angle(th) * r
                    })
                    .collect()
            }
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                shape::offset_polygon_boundary_points(vertices, self.offset, n)
            }
        }
    }

    /// Loose axis-aligned bounds, guaranteed to contain the region.
    pub fn bounding_box(&self) -> (Point, Point) {
        let (lo, hi) = match &self.base {
            Obstacle::Circle { center, radius } => (
                Point::new(center.x - radius, center.y - radius),
                Point::new(center.x + radius, center.y + radius),
            ),
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    lo.x = lo.x.min(v.x);
                    lo.y = lo.y.min(v.y);
                    hi.x = hi.x.max(v.x);
                    hi.y = hi.y.max(v.y);
                }
                (lo, hi)
            }
        };
        (
            lo - Point::new(self.offset, self.offset),
            hi + Point::new(self.offset, self.offset),
        )
    }
}

// ---------------------------------------------------------------------------
// free operations
// ---------------------------------------------------------------------------

/// Closed containment of a point in a region.
#[inline]
pub fn contains(region: &Region, q: Point) -> bool {
    region.contains(q)
}

/// Grow a region by a margin.
#[inline]
pub fn inflate(region: &Region, margin: f64) -> Region {
    region.inflate(margin)
}

/// Separation between two regions: positive is the gap, zero is touching,
/// negative means overlap (the magnitude of the negative value is not a
/// penetration depth, only the sign is meaningful there).
pub fn distance(a: &Region, b: &Region) -> f64 {
    shape::base_distance(&a.base, &b.base) - a.offset - b.offset
}

/// Whether two regions overlap or touch within `BOUNDARY_EPS`.
#[inline]
pub fn intersects(a: &Region, b: &Region) -> bool {
    distance(a, b) <= BOUNDARY_EPS
}

/// Groups regions into connected components of the "intersects" relation.
/// Returns groups of indices into the input, each sorted ascending; the
/// groups themselves are ordered by their smallest member.
pub fn cluster_intersecting(regions: &[Region]) -> Vec<Vec<usize>> {
    let n = regions.len();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for i in 0..n {
        for j in (i + 1)..n {
            if intersects(&regions[i], &regions[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    out.sort_unstable_by_key(|g| g[0]);
    out
}

/// Convex hull of a set of regions sharing one offset.
///
/// The hull of polygon bases is exact (hull of the vertex union, same
/// offset). A circle base is first circumscribed by a regular 64-gon, which
/// keeps the result a superset at no more than 0.13 % radial overshoot.
/// Nearly collinear input collapses to a guaranteed covering disk instead of
/// a degenerate polygon.
pub fn convex_hull(regions: &[Region]) -> Result<Region, GeometryError> {
    let first = regions.first().ok_or(GeometryError::EmptyInput)?;
    let offset = first.offset;
    if regions.iter().any(|r| (r.offset - offset).abs() > 1e-12) {
        return Err(GeometryError::MixedOffsets);
    }
    if regions.len() == 1 {
        return Ok(first.clone());
    }

    let mut pts: Vec<Point> = Vec::new();
    for r in regions {
        match &r.base {
            Obstacle::Circle { center, radius } => {
                // Circumscribed polygon: vertices pushed out so the 32-gon
                // contains the circle.
                let rr = radius / math::cos(core::f64::consts::PI / 32.0);
                for i in 0..32 {
                    let th = i as f64 / 32.0 * core::f64::consts::TAU;
                    pts.push(*center + Point::from_angle(th) * rr);
                }
            }
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                pts.extend_from_slice(vertices);
            }
        }
    }

    let hull = shape::monotone_chain(&mut pts);
    if hull.len() >= 3 {
        if let Ok(poly) = Obstacle::convex_polygon(hull) {
            return Ok(Region::with_offset(poly, offset));
        }
    }
    // Degenerate spread: cover everything with a disk around the point mean.
    let mut c = Point::ZERO;
    for p in &pts {
        c = c + *p;
    }
    c = c / pts.len() as f64;
    let r = pts
        .iter()
        .map(|p| p.dist(c))
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    Ok(Region::with_offset(
        Obstacle::Circle { center: c, radius: r * (1.0 + 1e-9) + 1e-12 },
        offset,
    ))
}
