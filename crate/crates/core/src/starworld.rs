//! Workspace modification ahead of each control step.
//!
//! The free space is tightened by a clearance radius `rho` picked from a
//! geometric schedule, the robot and goal positions are projected out of the
//! inflated obstacles, and intersecting obstacle clusters are reshaped into
//! disjoint star-shaped obstacles, convexified where that does not swallow
//! the projected points. Construction runs under a compute budget; when the
//! budget runs out the inflated obstacles are kept as-is, split into convex
//! pieces where needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::budget::Budget;
use crate::geometry::{
    cluster_intersecting, convex_decomposition, convex_hull, starshaped_hull, GeometryError,
    Obstacle, Point, Region, StarHullOptions, StarObstacle,
};

/// Tuning for clearance selection and star construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceParams {
    /// Largest clearance radius tried, metres.
    pub rho_bar: f64,
    /// Shrink factor applied per attempt, in (0, 1).
    pub gamma: f64,
    /// Compute budget for star construction, seconds.
    pub max_time: f64,
}

impl Default for WorkspaceParams {
    fn default() -> Self {
        WorkspaceParams {
            rho_bar: 0.3,
            gamma: 0.5,
            max_time: 0.05,
        }
    }
}

impl WorkspaceParams {
    fn validate(&self) -> Result<(), StarWorldError> {
        if !(self.rho_bar > 0.0) || !self.rho_bar.is_finite() {
            return Err(StarWorldError::InvalidParams("rho_bar must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(StarWorldError::InvalidParams("gamma must lie in (0, 1)"));
        }
        if !(self.max_time > 0.0) {
            return Err(StarWorldError::InvalidParams("max_time must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StarWorldError {
    /// The query position is strictly inside an obstacle.
    RobotInCollision,
    InvalidParams(&'static str),
    Geometry(GeometryError),
}

impl From<GeometryError> for StarWorldError {
    fn from(e: GeometryError) -> Self {
        StarWorldError::Geometry(e)
    }
}

impl core::fmt::Display for StarWorldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StarWorldError::RobotInCollision => write!(f, "robot position is inside an obstacle"),
            StarWorldError::InvalidParams(m) => write!(f, "invalid workspace params: {m}"),
            StarWorldError::Geometry(e) => write!(f, "geometry failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StarWorldError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            StarWorldError::Geometry(e) => Some(e),
            _ => None,
        }
    }
}

/// Admissibility slack: the complement of the inflated obstacles is closed,
/// so boundary contact counts as admissible.
const ADMIT_EPS: f64 = 1e-12;
/// A query is in collision only when strictly interior beyond this.
const COLLISION_EPS: f64 = 1e-9;
/// Candidates produced by the golden-angle sweep of the clearance ball.
const SPIRAL_SAMPLES: usize = 256;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
/// Hard cap on clearance halvings; hitting it means degenerate inputs.
const MAX_SHRINKS: usize = 4096;
/// Offset applied to on-boundary anchors before hull exclusion checks.
const EXTERIOR_NUDGE: f64 = 1e-7;
/// Sampling density and slack for the star overlap predicate.
const OVERLAP_SAMPLES: usize = 256;
const OVERLAP_MARGIN: f64 = 1e-9;

/// The set the initial reference point is drawn from: the ball `B(p, rho)`
/// minus the rho-inflated obstacles. Nonempty by construction, with a
/// verified member kept as `witness`.
#[derive(Debug, Clone)]
pub struct ClearanceDisk {
    center: Point,
    rho: f64,
    witness: Point,
    inflated: Vec<Region>,
}

impl ClearanceDisk {
    pub fn center(&self) -> Point {
        self.center
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// A point of the set found during the clearance search.
    pub fn witness(&self) -> Point {
        self.witness
    }

    /// The obstacles inflated by `rho`, shared by the projection steps.
    pub fn inflated(&self) -> &[Region] {
        &self.inflated
    }

    pub fn contains(&self, q: Point) -> bool {
        q.dist(self.center) <= self.rho + ADMIT_EPS && admissible(&self.inflated, q)
    }
}

/// Golden-angle spiral filling the ball `B(p, rho)`.
fn spiral_point(p: Point, rho: f64, i: usize) -> Point {
    let r = rho * crate::math::sqrt(((i as f64) + 0.5) / SPIRAL_SAMPLES as f64);
    p + Point::from_angle(i as f64 * GOLDEN_ANGLE) * r
}

fn min_sdf(regions: &[Region], q: Point) -> f64 {
    regions
        .iter()
        .map(|r| r.signed_distance(q))
        .fold(f64::INFINITY, f64::min)
}

fn admissible(regions: &[Region], q: Point) -> bool {
    min_sdf(regions, q) >= -ADMIT_EPS
}

/// Largest rho from the schedule `rho_bar * gamma^k` for which some point
/// within `rho` of `p` clears every obstacle by `rho`.
pub fn select_clearance(
    p: Point,
    obstacles: &[Region],
    params: &WorkspaceParams,
) -> Result<(f64, ClearanceDisk), StarWorldError> {
    params.validate()?;
    if min_sdf(obstacles, p) < -COLLISION_EPS {
        return Err(StarWorldError::RobotInCollision);
    }

    let mut rho = params.rho_bar;
    for _ in 0..MAX_SHRINKS {
        let inflated: Vec<Region> = obstacles.iter().map(|r| r.inflate(rho)).collect();
        if let Some(witness) = find_witness(p, rho, &inflated) {
            return Ok((
                rho,
                ClearanceDisk {
                    center: p,
                    rho,
                    witness,
                    inflated,
                },
            ));
        }
        rho *= params.gamma;
    }
    Err(StarWorldError::InvalidParams(
        "clearance schedule exhausted without a free point",
    ))
}

/// Searches `B(p, rho)` minus the inflated obstacles. Candidates come from a
/// golden-angle spiral and per-obstacle push-outs; a failed sweep retries
/// from the least-violating candidate with alternating projections.
fn find_witness(p: Point, rho: f64, inflated: &[Region]) -> Option<Point> {
    if admissible(inflated, p) {
        return Some(p);
    }

    let in_ball = |q: Point| q.dist(p) <= rho + ADMIT_EPS;
    let mut best_ok: Option<(f64, Point)> = None;
    let mut seed: Option<(f64, Point)> = None;
    let consider = |q: Point, best_ok: &mut Option<(f64, Point)>, seed: &mut Option<(f64, Point)>| {
        if !in_ball(q) {
            return;
        }
        let s = min_sdf(inflated, q);
        if s >= -ADMIT_EPS {
            if best_ok.map_or(true, |(b, _)| s > b) {
                *best_ok = Some((s, q));
            }
        } else if seed.map_or(true, |(b, _)| s > b) {
            *seed = Some((s, q));
        }
    };

    for region in inflated {
        let (b, n) = region.closest_boundary_point(p);
        consider(b, &mut best_ok, &mut seed);
        consider(b + n * 1e-9, &mut best_ok, &mut seed);
    }
    for i in 0..SPIRAL_SAMPLES {
        consider(spiral_point(p, rho, i), &mut best_ok, &mut seed);
    }

    if let Some((_, q)) = best_ok {
        return Some(q);
    }

    // Alternate pushing out of the worst obstacle and clamping to the ball.
    let (_, mut q) = seed?;
    for _ in 0..24 {
        let (worst, _) = inflated
            .iter()
            .map(|r| r.signed_distance(q))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        let (b, n) = inflated[worst].closest_boundary_point(q);
        q = b + n * 1e-9;
        let d = q.dist(p);
        if d > rho {
            q = p + (q - p) * (rho / d);
        }
        if in_ball(q) && admissible(inflated, q) {
            return Some(q);
        }
    }
    None
}

/// Distance-then-angle argmin over a candidate list. The angle tiebreak
/// keeps results deterministic when several candidates are equidistant.
fn pick_nearest(
    about: Point,
    candidates: &[Point],
    admit: impl Fn(Point) -> bool,
) -> Option<Point> {
    const DIST_TIE: f64 = 1e-9;
    let mut best: Option<(f64, f64, Point)> = None;
    for &c in candidates {
        if !admit(c) {
            continue;
        }
        let d = c.dist(about);
        let ang = (c - about).angle();
        let better = match &best {
            None => true,
            Some((bd, ba, _)) => d < bd - DIST_TIE || (d <= bd + DIST_TIE && ang < ba - 1e-12),
        };
        if better {
            best = Some((d, ang, c));
        }
    }
    best.map(|(_, _, c)| c)
}

/// Points where the boundaries of `a` and `b` cross, found by bracketing
/// sign changes of `b`'s field along `a`'s boundary and polishing with
/// alternating projections onto the two surfaces.
fn boundary_crossings(a: &Region, b: &Region, out: &mut Vec<Point>) {
    let samples = a.boundary_points(256);
    let n = samples.len();
    for i in 0..n {
        let q0 = samples[i];
        let q1 = samples[(i + 1) % n];
        let s0 = b.signed_distance(q0);
        let s1 = b.signed_distance(q1);
        if s0 == 0.0 || s0.signum() == s1.signum() {
            continue;
        }
        let mut q = q0.lerp(q1, s0.abs() / (s0.abs() + s1.abs()));
        for _ in 0..24 {
            q = b.closest_boundary_point(q).0;
            q = a.closest_boundary_point(q).0;
        }
        if a.signed_distance(q).abs() <= 1e-9 && b.signed_distance(q).abs() <= 1e-9 {
            out.push(q);
        }
    }
}

/// Points where a region boundary crosses the circle of radius `rho` about
/// `p`, polished the same way as region-region crossings.
fn rim_crossings(region: &Region, p: Point, rho: f64, out: &mut Vec<Point>) {
    let samples = region.boundary_points(256);
    let n = samples.len();
    for i in 0..n {
        let q0 = samples[i];
        let q1 = samples[(i + 1) % n];
        let s0 = q0.dist(p) - rho;
        let s1 = q1.dist(p) - rho;
        if s0 == 0.0 || s0.signum() == s1.signum() {
            continue;
        }
        let mut q = q0.lerp(q1, s0.abs() / (s0.abs() + s1.abs()));
        for _ in 0..24 {
            let d = q.dist(p);
            if d > 1e-15 {
                q = p + (q - p) * (rho / d);
            }
            q = region.closest_boundary_point(q).0;
        }
        if region.signed_distance(q).abs() <= 1e-9 && (q.dist(p) - rho).abs() <= 1e-9 {
            out.push(q);
        }
    }
}

/// Nearest point of the clearance set to `p`. Returns `p` itself whenever
/// `p` already clears every obstacle by `rho`.
pub fn project_initial(p: Point, disk: &ClearanceDisk) -> Point {
    if disk.contains(p) {
        return p;
    }
    let regions = disk.inflated();
    let rho = disk.rho();

    let mut candidates: Vec<Point> = vec![disk.witness()];
    for region in regions {
        let (b, n) = region.closest_boundary_point(p);
        candidates.push(b);
        candidates.push(b + n * 1e-9);
    }
    for i in 0..regions.len() {
        for j in (i + 1)..regions.len() {
            boundary_crossings(&regions[i], &regions[j], &mut candidates);
        }
        rim_crossings(&regions[i], p, rho, &mut candidates);
    }
    // Admissible spiral points pulled toward p until admissibility breaks.
    for i in 0..SPIRAL_SAMPLES {
        let q = spiral_point(p, rho, i);
        if !admissible(regions, q) {
            continue;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if admissible(regions, p.lerp(q, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        candidates.push(p.lerp(q, hi));
    }

    pick_nearest(p, &candidates, |q| disk.contains(q))
        .unwrap_or_else(|| disk.witness())
}

/// Nearest point to `pg` outside every inflated obstacle.
pub fn project_goal(pg: Point, inflated: &[Region]) -> Point {
    if admissible(inflated, pg) {
        return pg;
    }
    let mut candidates: Vec<Point> = Vec::new();
    for region in inflated {
        let (b, n) = region.closest_boundary_point(pg);
        candidates.push(b);
        candidates.push(b + n * 1e-9);
    }
    for i in 0..inflated.len() {
        for j in (i + 1)..inflated.len() {
            boundary_crossings(&inflated[i], &inflated[j], &mut candidates);
        }
        for q in inflated[i].boundary_points(256) {
            candidates.push(q);
        }
    }
    pick_nearest(pg, &candidates, |q| admissible(inflated, q)).unwrap_or(pg)
}

/// The reshaped world handed to the vector field and path stages.
#[derive(Debug, Clone)]
pub struct StarWorld {
    pub obstacles: Vec<StarObstacle>,
    pub rho: f64,
    pub r0: Point,
    pub rg: Point,
    /// True when the star obstacles are pairwise disjoint.
    pub disjoint: bool,
    /// True when the budget fallback shipped the inflated obstacles as-is.
    pub fallback_used: bool,
}

/// Anchors sitting exactly on an inflated boundary are moved a hair outward
/// so exclusion checks see them strictly outside.
fn exteriorize(q: Point, regions: &[Region]) -> Point {
    let mut out = q;
    for _ in 0..4 {
        let Some((worst, s)) = regions
            .iter()
            .map(|r| r.signed_distance(out))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return out;
        };
        if s > 1e-9 {
            break;
        }
        let (b, n) = regions[worst].closest_boundary_point(out);
        out = b + n * EXTERIOR_NUDGE;
    }
    out
}

fn natural_star(region: Region) -> Result<StarObstacle, StarWorldError> {
    let center = region.base().interior_point();
    StarObstacle::new(center, vec![region]).map_err(Into::into)
}

/// Budget fallback: ship the inflated obstacles unmerged, splitting
/// nonconvex polygons into convex pieces.
fn fallback_world(
    inflated: &[Region],
    rho: f64,
    r0: Point,
    rg: Point,
) -> Result<StarWorld, StarWorldError> {
    let mut obstacles = Vec::new();
    for region in inflated {
        match region.base() {
            Obstacle::Polygon { vertices } => {
                for piece in convex_decomposition(vertices)? {
                    obstacles.push(natural_star(Region::with_offset(piece, region.offset()))?);
                }
            }
            _ => obstacles.push(natural_star(region.clone())?),
        }
    }
    Ok(StarWorld {
        obstacles,
        rho,
        r0,
        rg,
        disjoint: false,
        fallback_used: true,
    })
}

fn any_overlap(stars: &[StarObstacle]) -> Option<(usize, usize)> {
    for i in 0..stars.len() {
        for j in (i + 1)..stars.len() {
            if stars[i].overlaps(&stars[j], OVERLAP_SAMPLES, OVERLAP_MARGIN) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Single convex members complete to themselves; their hull is an identity.
fn is_convex_single(star: &StarObstacle) -> bool {
    star.members().len() == 1
        && matches!(
            star.members()[0].base(),
            Obstacle::Circle { .. } | Obstacle::ConvexPolygon { .. }
        )
}

/// Full workspace modification: clearance, projections, star construction,
/// merging, and per-obstacle convexification, all under `budget`.
pub fn build_star_world<B: Budget>(
    obstacles: &[Region],
    p: Point,
    pg: Point,
    params: &WorkspaceParams,
    budget: B,
) -> Result<StarWorld, StarWorldError> {
    let (rho, disk) = select_clearance(p, obstacles, params)?;
    let r0 = project_initial(p, &disk);
    let rg = project_goal(pg, disk.inflated());
    let inflated = disk.inflated;

    let r0x = exteriorize(r0, &inflated);
    let rgx = exteriorize(rg, &inflated);
    let opts = StarHullOptions {
        required_exterior: vec![r0x, rgx],
        avoid_segment: Some((r0, rg)),
    };

    if budget.exhausted() {
        return fallback_world(&inflated, rho, r0, rg);
    }

    let mut stars: Vec<StarObstacle> = Vec::new();
    for group in cluster_intersecting(&inflated) {
        if budget.exhausted() {
            return fallback_world(&inflated, rho, r0, rg);
        }
        let members: Vec<Region> = group.iter().map(|&i| inflated[i].clone()).collect();
        match starshaped_hull(&members, &opts, &budget) {
            Ok(star) => stars.push(star),
            Err(GeometryError::NoValidCenter) => return fallback_world(&inflated, rho, r0, rg),
            Err(e) => return Err(e.into()),
        }
    }

    // Completions can grow past their cluster; merge until pairwise disjoint
    // or the attempt stops paying off.
    while let Some((i, j)) = any_overlap(&stars) {
        if budget.exhausted() {
            return fallback_world(&inflated, rho, r0, rg);
        }
        let mut members = stars[i].members().to_vec();
        members.extend_from_slice(stars[j].members());
        stars.remove(j);
        match starshaped_hull(&members, &opts, &budget) {
            Ok(star) => stars[i] = star,
            Err(GeometryError::NoValidCenter) => return fallback_world(&inflated, rho, r0, rg),
            Err(e) => return Err(e.into()),
        }
    }

    // Convexification in input order against the partially updated set. A
    // spent budget stops improving but keeps the valid star world.
    for i in 0..stars.len() {
        if budget.exhausted() {
            break;
        }
        if is_convex_single(&stars[i]) {
            continue;
        }
        let hull = match convex_hull(stars[i].members()) {
            Ok(h) => h,
            Err(e) => return Err(e.into()),
        };
        if hull.signed_distance(r0x) <= 1e-9 || hull.signed_distance(rgx) <= 1e-9 {
            continue;
        }
        let Ok(candidate) = starshaped_hull(&[hull], &opts, &budget) else {
            continue;
        };
        let clear = stars
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .all(|(_, other)| !candidate.overlaps(other, OVERLAP_SAMPLES, OVERLAP_MARGIN));
        if clear {
            stars[i] = candidate;
        }
    }

    let disjoint = any_overlap(&stars).is_none();
    Ok(StarWorld {
        obstacles: stars,
        rho,
        r0,
        rg,
        disjoint,
        fallback_used: false,
    })
}
