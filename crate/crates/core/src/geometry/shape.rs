//! Polygon and segment primitives backing the public geometry API.
//!
//! Everything here assumes validated input: polygons are simple, CCW, at
//! least a triangle, with no repeated consecutive vertices. The offset ray
//! casting works against the exact Minkowski surface, which for a polygon is
//! its edges shifted outward plus circular arcs around the vertices.

use super::{GeometryError, Obstacle, Point, RayHit, COLLINEAR_EPS};
use crate::math;
use alloc::vec::Vec;

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

pub(super) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let mut a = 0.0;
    for i in 0..n {
        a += v[i].cross(v[(i + 1) % n]);
    }
    a * 0.5
}

pub(super) fn polygon_centroid(v: &[Point]) -> Point {
    let n = v.len();
    let mut a = 0.0;
    let mut c = Point::ZERO;
    for i in 0..n {
        let cr = v[i].cross(v[(i + 1) % n]);
        a += cr;
        c = c + (v[i] + v[(i + 1) % n]) * cr;
    }
    c / (3.0 * a)
}

/// All checks a stored polygon must pass: finite, >= 3 distinct vertices,
/// nonzero area, no self intersection. Winding is normalized to CCW.
pub(super) fn validate_polygon(mut v: Vec<Point>) -> Result<Vec<Point>, GeometryError> {
    if v.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::InvalidShape("non-finite vertex"));
    }
    // Drop repeated consecutive vertices (including a repeated closing one).
    v.dedup_by(|a, b| a.dist(*b) <= 1e-12);
    while v.len() >= 2 && v[0].dist(v[v.len() - 1]) <= 1e-12 {
        v.pop();
    }
    if v.len() < 3 {
        return Err(GeometryError::InvalidShape("needs at least three distinct vertices"));
    }
    let area = signed_area(&v);
    if area.abs() <= 1e-12 {
        return Err(GeometryError::InvalidShape("zero area"));
    }
    if area < 0.0 {
        v.reverse();
    }
    if !is_simple(&v) {
        return Err(GeometryError::InvalidShape("self-intersecting outline"));
    }
    Ok(v)
}

/// Non-adjacent edge pairs must not touch.
fn is_simple(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip the shared-vertex neighbours.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (v[j], v[(j + 1) % n]);
            if segment_segment_distance(a1, a2, b1, b2) <= 1e-12 {
                return false;
            }
        }
    }
    true
}

/// CCW chain with no right turns (collinear runs allowed).
pub(super) fn is_convex_ccw(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        if (b - a).cross(c - b) < -COLLINEAR_EPS {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// distances
// ---------------------------------------------------------------------------

/// Closest point on segment `ab` to `q` and the squared distance.
pub(super) fn point_segment(a: Point, b: Point, q: Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.norm2();
    let t = if len2 <= 1e-24 {
        0.0
    } else {
        ((q - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    let p = a + ab * t;
    (p, (q - p).norm2())
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn proper_intersection(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0))
}

pub(super) fn segment_segment_distance(a1: Point, a2: Point, b1: Point, b2: Point) -> f64 {
    if proper_intersection(a1, a2, b1, b2) {
        return 0.0;
    }
    let d1 = point_segment(b1, b2, a1).1;
    let d2 = point_segment(b1, b2, a2).1;
    let d3 = point_segment(a1, a2, b1).1;
    let d4 = point_segment(a1, a2, b2).1;
    math::sqrt(d1.min(d2).min(d3.min(d4)))
}

/// Even-odd test. Points within floating noise of the boundary may land on
/// either side; callers combine this with the distance anyway.
pub(super) fn point_in_polygon(v: &[Point], q: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > q.y) != (b.y > q.y) {
            let x_int = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if q.x < x_int {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed distance to a simple polygon plus the closest boundary point.
pub(super) fn polygon_signed_distance(v: &[Point], q: Point) -> (f64, Point) {
    let n = v.len();
    let mut best = (f64::INFINITY, v[0]);
    for i in 0..n {
        let (p, d2) = point_segment(v[i], v[(i + 1) % n], q);
        if d2 < best.0 {
            best = (d2, p);
        }
    }
    let d = math::sqrt(best.0);
    if point_in_polygon(v, q) {
        (-d, best.1)
    } else {
        (d, best.1)
    }
}

/// Distance between two base shapes; zero or negative when they overlap.
pub(super) fn base_distance(a: &Obstacle, b: &Obstacle) -> f64 {
    use Obstacle::*;
    match (a, b) {
        (Circle { center: ca, radius: ra }, Circle { center: cb, radius: rb }) => {
            ca.dist(*cb) - ra - rb
        }
        (Circle { center, radius }, other) | (other, Circle { center, radius }) => {
            other.signed_distance(*center).0 - radius
        }
        (pa, pb) => {
            let (va, vb) = (pa.vertices().unwrap(), pb.vertices().unwrap());
            // Containment has no edge crossing, so check a vertex each way.
            if point_in_polygon(vb, va[0]) || point_in_polygon(va, vb[0]) {
                return -1.0;
            }
            let (na, nb) = (va.len(), vb.len());
            let mut best = f64::INFINITY;
            for i in 0..na {
                for j in 0..nb {
                    let d = segment_segment_distance(
                        va[i],
                        va[(i + 1) % na],
                        vb[j],
                        vb[(j + 1) % nb],
                    );
                    if d < best {
                        best = d;
                    }
                }
            }
            best
        }
    }
}

// ---------------------------------------------------------------------------
// ray casting
// ---------------------------------------------------------------------------

/// Both crossings of a ray with a circle, `t >= -1e-9`.
pub(super) fn ray_circle_hits(origin: Point, u: Point, center: Point, r: f64) -> Vec<RayHit> {
    let oc = origin - center;
    let b = oc.dot(u);
    let c = oc.norm2() - r * r;
    let disc = b * b - c;
    let mut hits = Vec::new();
    if disc < 0.0 {
        return hits;
    }
    let s = math::sqrt(disc);
    for t in [-b - s, -b + s] {
        if t >= -1e-9 {
            let p = origin + u * t;
            let normal = (p - center)
                .try_normalize(1e-15)
                .unwrap_or(Point::new(1.0, 0.0));
            hits.push(RayHit { t: t.max(0.0), point: p, normal });
        }
    }
    // A grazing ray yields two nearly equal roots; the caller dedups.
    hits
}

/// Ray against the Minkowski surface of polygon `v` grown by `offset`:
/// outward-shifted edges plus vertex arcs. For a convex CCW polygon every
/// feature-respecting candidate is genuine boundary; arcs are clipped to
/// the wedge between adjacent edge normals instead. Concave polygons keep
/// the exact signed-distance filter, which drops candidates buried inside
/// a closing pocket.
pub(super) fn ray_offset_polygon_hits(
    origin: Point,
    u: Point,
    v: &[Point],
    offset: f64,
    convex: bool,
) -> Vec<RayHit> {
    let n = v.len();
    let mut hits = Vec::new();
    let keep = |p: Point| {
        let (d, _) = polygon_signed_distance(v, p);
        (d - offset).abs() <= 1e-7
    };

    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let Some(e) = (b - a).try_normalize(1e-15) else {
            continue;
        };
        // Outward normal of a CCW edge.
        let nrm = -e.perp();
        let a_off = a + nrm * offset;
        // Solve origin + t u = a_off + s e.
        let denom = u.cross(e);
        if denom.abs() > 1e-15 {
            let d = a_off - origin;
            let t = d.cross(e) / denom;
            let s = d.cross(u) / denom;
            let len = (b - a).norm();
            if t >= -1e-9 && s >= -1e-9 && s <= len + 1e-9 {
                let p = origin + u * t;
                if convex || keep(p) {
                    hits.push(RayHit { t: t.max(0.0), point: p, normal: nrm });
                }
            }
        }
        if offset > 1e-12 {
            if convex {
                let prev = v[(i + n - 1) % n];
                let n_in = match (a - prev).try_normalize(1e-15) {
                    Some(e_in) => -e_in.perp(),
                    None => nrm,
                };
                for h in ray_circle_hits(origin, u, a, offset) {
                    let dir = h.point - a;
                    if n_in.cross(dir) >= -1e-9 && dir.cross(nrm) >= -1e-9 {
                        hits.push(h);
                    }
                }
            } else {
                for h in ray_circle_hits(origin, u, a, offset) {
                    if keep(h.point) {
                        hits.push(h);
                    }
                }
            }
        }
    }
    hits
}

// ---------------------------------------------------------------------------
// hull and boundary sampling
// ---------------------------------------------------------------------------

/// Andrew's monotone chain. Returns the CCW hull without collinear interior
/// points; fewer than three output vertices means the input was degenerate.
pub(super) fn monotone_chain(pts: &mut Vec<Point>) -> Vec<Point> {
    pts.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.dist(*b) <= 1e-12);
    let n = pts.len();
    if n < 3 {
        return pts.clone();
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2
            && (hull[hull.len() - 1] - hull[hull.len() - 2])
                .cross(p - hull[hull.len() - 2])
                <= COLLINEAR_EPS
        {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len
            && (hull[hull.len() - 1] - hull[hull.len() - 2])
                .cross(p - hull[hull.len() - 2])
                <= COLLINEAR_EPS
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Nearest point on the offset surface of polygon `v`, found by projecting
/// the query onto every offset edge and vertex arc and keeping the closest
/// candidate that really lies on the surface (sealed pockets disqualify
/// their feature projections). The surface is never empty, so a candidate
/// always survives; used for queries inside the grown region where the
/// plain nearest-feature step can land in a swallowed pocket.
pub(super) fn closest_offset_polygon_point(v: &[Point], offset: f64, q: Point) -> (Point, Point) {
    let n = v.len();
    let mut best: Option<(f64, Point, Point)> = None;
    let consider = |p: Point, nrm: Point, best: &mut Option<(f64, Point, Point)>| {
        if (polygon_signed_distance(v, p).0 - offset).abs() <= 1e-9 {
            let d2 = (q - p).norm2();
            if best.as_ref().map_or(true, |b| d2 < b.0) {
                *best = Some((d2, p, nrm));
            }
        }
    };
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if let Some(e) = (b - a).try_normalize(1e-15) {
            let nrm = -e.perp();
            let (p, _) = point_segment(a + nrm * offset, b + nrm * offset, q);
            consider(p, nrm, &mut best);
        }
        if offset > 1e-12 {
            let dir = (q - a).try_normalize(1e-15).unwrap_or(Point::new(1.0, 0.0));
            consider(a + dir * offset, dir, &mut best);
        }
    }
    match best {
        Some((_, p, nrm)) => (p, nrm),
        None => {
            // Defensive: the +x support point is always on the surface.
            let far = v
                .iter()
                .map(|p| p.x)
                .fold(f64::NEG_INFINITY, f64::max);
            let vx = v.iter().find(|p| p.x == far).copied().unwrap_or(v[0]);
            (vx + Point::new(offset, 0.0), Point::new(1.0, 0.0))
        }
    }
}

/// Samples of the offset-polygon boundary: per-edge shifted samples plus
/// vertex arcs, filtered against pocket closures like the ray caster.
pub(super) fn offset_polygon_boundary_points(v: &[Point], offset: f64, n: usize) -> Vec<Point> {
    let nv = v.len();
    let mut perimeter = 0.0;
    for i in 0..nv {
        perimeter += v[i].dist(v[(i + 1) % nv]);
    }
    perimeter += core::f64::consts::TAU * offset;
    let spacing = perimeter / n as f64;

    let mut out = Vec::with_capacity(n + 2 * nv);
    let keep = |p: Point, out: &mut Vec<Point>| {
        if offset <= 1e-12 || (polygon_signed_distance(v, p).0 - offset).abs() <= 1e-7 {
            out.push(p);
        }
    };

    for i in 0..nv {
        let a = v[i];
        let b = v[(i + 1) % nv];
        let Some(e) = (b - a).try_normalize(1e-15) else {
            continue;
        };
        let nrm = -e.perp();
        let len = (b - a).norm();
        let steps = math::ceil(len / spacing).max(1.0) as usize;
        for k in 0..=steps {
            let p = a.lerp(b, k as f64 / steps as f64) + nrm * offset;
            keep(p, &mut out);
        }
        if offset > 1e-12 {
            // Arc at vertex b between this edge normal and the next one.
            let c = v[(i + 2) % nv];
            if let Some(e2) = (c - b).try_normalize(1e-15) {
                let n2 = -e2.perp();
                let a0 = nrm.angle();
                let mut sweep = math::wrap_angle(n2.angle() - a0);
                if sweep < 0.0 {
                    // Reflex vertex: the arc is swallowed, samples would be
                    // filtered anyway.
                    sweep = 0.0;
                }
                let steps = math::ceil(sweep * offset / spacing).max(1.0) as usize;
                for k in 0..=steps {
                    let th = a0 + sweep * k as f64 / steps as f64;
                    keep(b + Point::from_angle(th) * offset, &mut out);
                }
            }
        }
    }
    out
}
