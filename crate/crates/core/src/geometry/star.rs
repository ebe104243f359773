//! Star-shaped obstacles as radial maps around a center.
//!
//! A [`StarObstacle`] is the radial completion of a union of member regions
//! seen from an interior center `c`: along each direction the region extends
//! to the farthest boundary crossing of any member. The completion is the
//! smallest superset of the union that is star-shaped with respect to `c`,
//! so treating it as the obstacle is conservative. Where the winning member
//! changes, the boundary radius jumps; those angles form a measure-zero set
//! and the normal reported there belongs to the farther member.
//!
//! The scaling function `gamma` is distance from the center over boundary
//! radius in the same direction: 1 on the boundary, above 1 outside, and it
//! grows without bound. It drives both the obstacle-avoiding vector field
//! and the exterior checks during construction.

use super::{GeometryError, Point, Region};
use crate::budget::Budget;
use crate::math;
use alloc::vec::Vec;

/// Boundary data of a star obstacle along one direction from its center.
#[derive(Debug, Clone, Copy)]
pub struct StarBoundary {
    /// Distance from the center to the boundary, strictly positive.
    pub radius: f64,
    pub point: Point,
    /// Outward unit normal of the member feature that forms the boundary.
    pub normal: Point,
}

/// Union of member regions completed to a star shape around `center`.
#[derive(Debug, Clone)]
pub struct StarObstacle {
    center: Point,
    members: Vec<Region>,
}

impl StarObstacle {
    /// `center` must lie strictly inside at least one member.
    pub fn new(center: Point, members: Vec<Region>) -> Result<StarObstacle, GeometryError> {
        if members.is_empty() {
            return Err(GeometryError::EmptyInput);
        }
        let depth = members
            .iter()
            .map(|m| m.signed_distance(center))
            .fold(f64::INFINITY, f64::min);
        if depth >= -1e-9 {
            return Err(GeometryError::InvalidShape("star center not interior"));
        }
        Ok(StarObstacle { center, members })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn members(&self) -> &[Region] {
        &self.members
    }

    /// Boundary along `theta`: the farthest member crossing of the ray from
    /// the center. The center is interior, so a crossing always exists.
    pub fn boundary_at(&self, theta: f64) -> StarBoundary {
        let dir = Point::from_angle(theta);
        let mut best: Option<StarBoundary> = None;
        for m in &self.members {
            for h in m.ray_hits(self.center, dir) {
                if best.as_ref().map_or(true, |b| h.t > b.radius) {
                    best = Some(StarBoundary {
                        radius: h.t,
                        point: h.point,
                        normal: h.normal,
                    });
                }
            }
        }
        best.unwrap_or(StarBoundary {
            // Unreachable for a valid obstacle; a degenerate sliver falls
            // back to a point-like boundary just off the center.
            radius: 1e-9,
            point: self.center + dir * 1e-9,
            normal: dir,
        })
    }

    /// Scaling of `q` relative to the boundary: < 1 inside, 1 on the
    /// boundary, > 1 outside. Exactly at the center the value is 0.
    pub fn gamma(&self, q: Point) -> f64 {
        let v = q - self.center;
        let r = v.norm();
        if r <= 1e-12 {
            return 0.0;
        }
        r / self.boundary_at(v.angle()).radius
    }

    /// Closed containment in the completed region.
    pub fn contains(&self, q: Point) -> bool {
        self.gamma(q) <= 1.0 + 1e-12
    }

    /// Exact distance from `q` to the member union (not the completion).
    /// Lower-bounds nothing about the completion; useful as a cheap filter
    /// and for diagnostics.
    pub fn min_member_distance(&self, q: Point) -> f64 {
        self.members
            .iter()
            .map(|m| m.signed_distance(q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Joint axis-aligned bounds of the members; contains the completion.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for m in &self.members {
            let (l, h) = m.bounding_box();
            lo = Point::new(lo.x.min(l.x), lo.y.min(l.y));
            hi = Point::new(hi.x.max(h.x), hi.y.max(h.y));
        }
        (lo, hi)
    }

    /// Boundary points at `n` evenly spaced angles.
    pub fn boundary_samples(&self, n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| {
                self.boundary_at(i as f64 / n as f64 * core::f64::consts::TAU)
                    .point
            })
            .collect()
    }

    /// Conservative overlap test between two completions. Exact on the
    /// member unions; the riser regions added by the completion are covered
    /// by sampling `samples` boundary directions of each obstacle, so a
    /// sliver thinner than the sampling can slip through. Callers treat a
    /// positive answer as "must merge".
    pub fn overlaps(&self, other: &StarObstacle, samples: usize, margin: f64) -> bool {
        // The completion stays on rays between the center and member
        // boundary points, so the members' joint box bounds it too.
        let (alo, ahi) = self.bounding_box();
        let (blo, bhi) = other.bounding_box();
        if alo.x > bhi.x + margin
            || blo.x > ahi.x + margin
            || alo.y > bhi.y + margin
            || blo.y > ahi.y + margin
        {
            return false;
        }
        for a in &self.members {
            for b in &other.members {
                if super::distance(a, b) <= margin {
                    return true;
                }
            }
        }
        if self.contains(other.center) || other.contains(self.center) {
            return true;
        }
        let n = samples.max(8);
        for i in 0..n {
            let th = i as f64 / n as f64 * core::f64::consts::TAU;
            if other.gamma(self.boundary_at(th).point) <= 1.0 + margin {
                return true;
            }
            if self.gamma(other.boundary_at(th).point) <= 1.0 + margin {
                return true;
            }
        }
        false
    }
}

/// Requirements a star hull must satisfy beyond starshapedness.
#[derive(Debug, Clone, Default)]
pub struct StarHullOptions {
    /// Points that must end up strictly outside the completion, such as the
    /// projected robot and goal positions.
    pub required_exterior: Vec<Point>,
    /// Keep the center away from this segment; centers too close are nudged
    /// sideways, and dropped if the nudge leaves the interior.
    pub avoid_segment: Option<(Point, Point)>,
}

/// Minimum gap between a center and the avoided segment, metres.
const SEGMENT_CLEARANCE: f64 = 1e-3;
/// Sideways step applied to centers that sit on the avoided segment.
const SEGMENT_NUDGE: f64 = 1e-2;
/// Required margin of `gamma` above 1 for the exterior points.
const EXTERIOR_GAMMA_MARGIN: f64 = 1e-9;
/// Candidate centers must be at least this deep inside the union.
const MIN_DEPTH: f64 = 1e-6;

/// Builds a star-shaped obstacle covering `members`.
///
/// Candidate centers are ranked by depth inside the union; the first one
/// that is clear of `avoid_segment` and whose completion leaves every
/// required point outside wins. A single convex member short-circuits to
/// its natural center, for which the completion equals the member itself.
///
/// Fails with [`GeometryError::NoValidCenter`] when no candidate passes or
/// the budget runs out mid-search.
pub fn starshaped_hull<B: Budget>(
    members: &[Region],
    opts: &StarHullOptions,
    budget: B,
) -> Result<StarObstacle, GeometryError> {
    if members.is_empty() {
        return Err(GeometryError::EmptyInput);
    }

    let mut candidates: Vec<(f64, Point)> = Vec::new();
    let depth_of = |c: Point| -> f64 {
        members
            .iter()
            .map(|m| m.signed_distance(c))
            .fold(f64::INFINITY, f64::min)
    };
    let push = |c: Point, candidates: &mut Vec<(f64, Point)>| {
        let d = depth_of(c);
        if d < -MIN_DEPTH {
            candidates.push((d, c));
        }
    };

    // Natural anchors first: member interior points and their midpoints.
    let anchors: Vec<Point> = members
        .iter()
        .map(|m| m.base().interior_point())
        .collect();
    for &a in &anchors {
        push(a, &mut candidates);
    }
    if anchors.len() > 1 {
        let mean = anchors.iter().fold(Point::ZERO, |s, &p| s + p) / anchors.len() as f64;
        push(mean, &mut candidates);
        for i in 0..anchors.len().min(16) {
            for j in (i + 1)..anchors.len().min(16) {
                push((anchors[i] + anchors[j]) * 0.5, &mut candidates);
            }
        }
    }

    // Depth grid over the joint bounding box.
    let (mut lo, mut hi) = members[0].bounding_box();
    for m in &members[1..] {
        let (l, h) = m.bounding_box();
        lo = Point::new(lo.x.min(l.x), lo.y.min(l.y));
        hi = Point::new(hi.x.max(h.x), hi.y.max(h.y));
    }
    const GRID: usize = 16;
    for iy in 0..GRID {
        for ix in 0..GRID {
            let c = Point::new(
                lo.x + (hi.x - lo.x) * (ix as f64 + 0.5) / GRID as f64,
                lo.y + (hi.y - lo.y) * (iy as f64 + 0.5) / GRID as f64,
            );
            push(c, &mut candidates);
        }
    }

    // Deepest first.
    candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    for (_, raw) in candidates {
        if budget.exhausted() {
            return Err(GeometryError::NoValidCenter);
        }
        let Some(center) = clear_of_segment(raw, opts, &depth_of) else {
            continue;
        };
        let star = match StarObstacle::new(center, members.to_vec()) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let ok = opts
            .required_exterior
            .iter()
            .all(|&p| star.gamma(p) > 1.0 + EXTERIOR_GAMMA_MARGIN);
        if ok {
            return Ok(star);
        }
    }
    Err(GeometryError::NoValidCenter)
}

/// Moves `c` off the avoided segment if needed; `None` drops the candidate.
fn clear_of_segment(
    c: Point,
    opts: &StarHullOptions,
    depth_of: &impl Fn(Point) -> f64,
) -> Option<Point> {
    let Some((s1, s2)) = opts.avoid_segment else {
        return Some(c);
    };
    let (on, d2) = super::shape::point_segment(s1, s2, c);
    if math::sqrt(d2) >= SEGMENT_CLEARANCE {
        return Some(c);
    }
    let axis = (s2 - s1)
        .try_normalize(1e-12)
        .map(|e| e.perp())
        .unwrap_or(Point::new(0.0, 1.0));
    let away = c - on;
    // Prefer pushing further to the side the candidate already leans to.
    let first = if away.dot(axis) >= 0.0 { axis } else { -axis };
    for dir in [first, -first] {
        let moved = c + dir * SEGMENT_NUDGE;
        if depth_of(moved) < -MIN_DEPTH
            && math::sqrt(super::shape::point_segment(s1, s2, moved).1) >= SEGMENT_CLEARANCE
        {
            return Some(moved);
        }
    }
    None
}
