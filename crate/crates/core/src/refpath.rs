//! Receding-horizon reference paths.
//!
//! The unit guiding field is integrated with a proximity-capped Euler
//! stepper to produce an arc-length-parameterized sample path, optionally
//! reusing the previous step's path when it is still collision-free. The
//! samples are then condensed into a low-degree polynomial with a certified
//! deviation bound for the tracking controller.

use alloc::vec;
use alloc::vec::Vec;

use crate::budget::Budget;
use crate::dsfield;
use crate::geometry::Point;
use crate::math;
use crate::starworld::StarWorld;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefPathError {
    /// Integration start lies inside a star obstacle.
    StartInObstacle,
    /// The polynomial cannot represent the path tighter than the clearance.
    ApproxTooCoarse { eps: f64 },
    InvalidInput(&'static str),
}

impl core::fmt::Display for RefPathError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RefPathError::StartInObstacle => write!(f, "path start is inside an obstacle"),
            RefPathError::ApproxTooCoarse { eps } => {
                write!(f, "polynomial deviation {eps} reaches the clearance radius")
            }
            RefPathError::InvalidInput(m) => write!(f, "invalid path input: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RefPathError {}

/// Base step in path coordinate units.
const DS_BASE: f64 = 0.05;
/// Smallest step attempted before the path is truncated where it stands.
const DS_FLOOR: f64 = 1e-3;
/// Gamma band grazing samples are lifted back out to, so the next chord
/// starts clear of the boundary it slides along.
const LIFT_BAND: f64 = 1e-3;
/// Distance under which the goal counts as reached, metres.
const TOL_GOAL: f64 = 1e-3;
/// Sample spacing used for constant tails.
const TAIL_DS: f64 = 0.25;
/// Interior tolerance mirrored from the field module.
const GAMMA_TOL: f64 = 1e-9;

/// Arc-length-parameterized path samples over the coordinate [0, horizon].
///
/// Away from the static tail, consecutive points are exactly `dp_max * ds`
/// apart: the path runs at unit speed in the scaled coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSamples {
    pub s_grid: Vec<f64>,
    pub points: Vec<Point>,
    pub dp_max: f64,
    pub horizon: usize,
    /// Coordinate where the compute budget cut integration short, if it did.
    pub truncated_at: Option<f64>,
    /// Coordinate where the goal tolerance was first met, if it was.
    pub goal_reached_at: Option<f64>,
}

impl PathSamples {
    /// Index of the stored sample nearest to `p`.
    pub fn nearest_index(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.points.iter().enumerate() {
            let d = q.dist(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// First coordinate of the static tail, if any part of the path is one.
    pub fn tail_start(&self) -> Option<f64> {
        match (self.goal_reached_at, self.truncated_at) {
            (Some(g), Some(t)) => Some(g.min(t)),
            (Some(g), None) => Some(g),
            (None, Some(t)) => Some(t),
            (None, None) => None,
        }
    }
}

fn min_gamma(world: &StarWorld, q: Point) -> f64 {
    world
        .obstacles
        .iter()
        .map(|o| o.gamma(q))
        .fold(f64::INFINITY, f64::min)
}

fn exterior(world: &StarWorld, q: Point) -> bool {
    min_gamma(world, q) >= 1.0 - GAMMA_TOL
}

/// Radially restores a grazing point to the lift band. Gamma is linear in
/// the distance from a star center, so one rescale per obstacle is exact.
/// Only dips within the band are restored: a deeper reading is not a
/// grazing error but a blocked chord (a star's radial boundary may jump at
/// a shadow edge), and rescaling across one would tear the path.
fn lift(world: &StarWorld, mut q: Point) -> Point {
    for _ in 0..4 {
        let mut g = f64::INFINITY;
        let mut against = None;
        for o in &world.obstacles {
            let og = o.gamma(q);
            if og < g {
                g = og;
                against = Some(o);
            }
        }
        let Some(o) = against else { break };
        if !(1.0 - LIFT_BAND..1.0 + LIFT_BAND).contains(&g) {
            break;
        }
        q = o.center() + (q - o.center()) * ((1.0 + 2.0 * LIFT_BAND) / g);
    }
    q
}

/// Appends a constant tail at `point` from `s` up to the horizon.
fn push_tail(s_grid: &mut Vec<f64>, points: &mut Vec<Point>, mut s: f64, point: Point, n: f64) {
    while s < n - 1e-12 {
        s += TAIL_DS;
        if s >= n - 1e-9 {
            s = n;
        }
        s_grid.push(s);
        points.push(point);
    }
}

struct Integration {
    s_grid: Vec<f64>,
    points: Vec<Point>,
    truncated_at: Option<f64>,
    goal_reached_at: Option<f64>,
}

/// Core stepping loop shared by fresh integration and reuse extension.
/// Starts from the last entry of `s_grid`/`points`, which must be present.
fn integrate_tail<B: Budget>(
    rg: Point,
    world: &StarWorld,
    n: f64,
    dp_max: f64,
    budget: &B,
    mut s_grid: Vec<f64>,
    mut points: Vec<Point>,
) -> Integration {
    let mut s = *s_grid.last().expect("seeded grid");
    let mut r = *points.last().expect("seeded points");
    let mut truncated_at = None;
    let mut goal_reached_at = None;

    while s < n - 1e-12 {
        if r.dist(rg) < TOL_GOAL {
            goal_reached_at = Some(s);
            push_tail(&mut s_grid, &mut points, s, rg, n);
            break;
        }
        if budget.exhausted() {
            truncated_at = Some(s);
            push_tail(&mut s_grid, &mut points, s, r, n);
            break;
        }

        let Ok(eval) = dsfield::field(r, rg, world) else {
            truncated_at = Some(s);
            push_tail(&mut s_grid, &mut points, s, r, n);
            break;
        };
        if eval.unit_velocity == Point::ZERO {
            // Field sink; the goal check above handles the nominal case.
            goal_reached_at = Some(s);
            push_tail(&mut s_grid, &mut points, s, r, n);
            break;
        }

        let mut ds = DS_BASE.min(n - s);

        // Midpoint slope, then shrink the chord until it stays exterior.
        let step = loop {
            let probe = r + eval.unit_velocity * (dp_max * ds * 0.5);
            let dir = match dsfield::field(probe, rg, world) {
                Ok(m) if m.unit_velocity != Point::ZERO => m.unit_velocity,
                _ => eval.unit_velocity,
            };
            let end = lift(world, r + dir * (dp_max * ds));
            if exterior(world, r.lerp(end, 0.5)) && exterior(world, end) {
                break Some(end);
            }
            ds *= 0.5;
            if ds < DS_FLOOR {
                break None;
            }
        };

        match step {
            Some(end) => {
                s += ds;
                if n - s <= 1e-12 {
                    s = n;
                }
                r = end;
                s_grid.push(s);
                points.push(r);
            }
            None => {
                truncated_at = Some(s);
                push_tail(&mut s_grid, &mut points, s, r, n);
                break;
            }
        }
    }

    Integration {
        s_grid,
        points,
        truncated_at,
        goal_reached_at,
    }
}

/// Integrates the unit field from `r0` toward `rg` over coordinate
/// [0, horizon], at arc speed `dp_max` per coordinate unit.
pub fn integrate_path<B: Budget>(
    r0: Point,
    rg: Point,
    world: &StarWorld,
    horizon: usize,
    dp_max: f64,
    budget: B,
) -> Result<PathSamples, RefPathError> {
    if horizon == 0 {
        return Err(RefPathError::InvalidInput("horizon must be at least 1"));
    }
    if !(dp_max > 0.0) {
        return Err(RefPathError::InvalidInput("dp_max must be positive"));
    }
    if !exterior(world, r0) {
        return Err(RefPathError::StartInObstacle);
    }

    let run = integrate_tail(
        rg,
        world,
        horizon as f64,
        dp_max,
        &budget,
        vec![0.0],
        vec![r0],
    );
    Ok(PathSamples {
        s_grid: run.s_grid,
        points: run.points,
        dp_max,
        horizon,
        truncated_at: run.truncated_at,
        goal_reached_at: run.goal_reached_at,
    })
}

/// Shifts the previous path for the current step when it is still usable:
/// every stored point must clear the new star world and the nearest stored
/// point must lie within the new clearance ball around `p`. The traversed
/// prefix is dropped, the coordinate re-zeroed, and the freed coordinate
/// range re-integrated from the old endpoint.
pub fn maybe_reuse<B: Budget>(
    previous: &PathSamples,
    world: &StarWorld,
    p: Point,
    budget: B,
) -> Option<PathSamples> {
    // Padding past a truncation point is not path. Drop it before judging
    // the rest, and extend from the last integrated sample instead.
    let keep = match previous.truncated_at {
        Some(t) => previous
            .s_grid
            .iter()
            .take_while(|&&s| s <= t + 1e-12)
            .count(),
        None => previous.s_grid.len(),
    };
    if keep == 0 {
        return None;
    }
    let kept_s = &previous.s_grid[..keep];
    let kept_p = &previous.points[..keep];
    if !kept_p.iter().all(|&q| exterior(world, q)) {
        return None;
    }
    let start = kept_p
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.dist(p).total_cmp(&b.1.dist(p)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if kept_p[start].dist(p) > world.rho {
        return None;
    }

    let s0 = kept_s[start];
    let n = previous.horizon as f64;
    let mut s_grid: Vec<f64> = Vec::with_capacity(kept_s.len());
    let mut points: Vec<Point> = Vec::with_capacity(kept_p.len());
    for (s, q) in kept_s[start..].iter().zip(&kept_p[start..]) {
        s_grid.push(s - s0);
        points.push(*q);
    }

    // A tail in the old path stays a tail; only genuinely new coordinate
    // range is integrated, from the old endpoint.
    let mut goal_reached_at = previous.goal_reached_at.map(|g| (g - s0).max(0.0));
    let mut truncated_at = None;
    let at_goal = goal_reached_at.is_some()
        && points.last().is_some_and(|q| q.dist(world.rg) < TOL_GOAL);

    if at_goal {
        let s_last = *s_grid.last().unwrap();
        let q_last = *points.last().unwrap();
        push_tail(&mut s_grid, &mut points, s_last, q_last, n);
    } else {
        let run = integrate_tail(world.rg, world, n, previous.dp_max, &budget, s_grid, points);
        s_grid = run.s_grid;
        points = run.points;
        truncated_at = run.truncated_at;
        goal_reached_at = run.goal_reached_at;
    }

    Some(PathSamples {
        s_grid,
        points,
        dp_max: previous.dp_max,
        horizon: previous.horizon,
        truncated_at,
        goal_reached_at,
    })
}

/// Polynomial condensation of a sample path on the domain [0, horizon],
/// anchored so that evaluation at 0 reproduces the first sample exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPath {
    anchor: Point,
    /// Coefficients of T_k(u) - T_k(-1), k = 1..=degree, per coordinate.
    cx: Vec<f64>,
    cy: Vec<f64>,
    horizon: f64,
    eps: f64,
    s_valid: f64,
}

impl PolyPath {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn domain(&self) -> (f64, f64) {
        (0.0, self.horizon)
    }

    /// Last coordinate backed by integrated samples. Beyond it the path is
    /// truncation padding, which must earn no progress; a goal tail does not
    /// shorten this, since riding it out means standing at the goal.
    pub fn s_valid(&self) -> f64 {
        self.s_valid
    }

    pub fn degree(&self) -> usize {
        self.cx.len()
    }

    /// Path point at coordinate `s`, clamped into the domain.
    pub fn eval(&self, s: f64) -> Point {
        let u = 2.0 * s.clamp(0.0, self.horizon) / self.horizon - 1.0;
        let (mut t_prev, mut t_cur) = (1.0, u);
        let mut sign = -1.0; // T_k(-1) = (-1)^k
        let mut out = self.anchor;
        for (cx, cy) in self.cx.iter().zip(&self.cy) {
            let basis = t_cur - sign;
            out.x += cx * basis;
            out.y += cy * basis;
            let t_next = 2.0 * u * t_cur - t_prev;
            t_prev = t_cur;
            t_cur = t_next;
            sign = -sign;
        }
        out
    }

    /// Derivative with respect to `s`.
    pub fn deriv(&self, s: f64) -> Point {
        let u = 2.0 * s.clamp(0.0, self.horizon) / self.horizon - 1.0;
        let du = 2.0 / self.horizon;
        // T_k'(u) = k * U_{k-1}(u).
        let (mut u_prev, mut u_cur) = (0.0, 1.0);
        let mut out = Point::ZERO;
        for (k, (cx, cy)) in self.cx.iter().zip(&self.cy).enumerate() {
            let dt = (k as f64 + 1.0) * u_cur * du;
            out.x += cx * dt;
            out.y += cy * dt;
            let u_next = 2.0 * u * u_cur - u_prev;
            u_prev = u_cur;
            u_cur = u_next;
        }
        out
    }
}

fn shifted_chebyshev_row(u: f64, degree: usize, row: &mut [f64]) {
    let (mut t_prev, mut t_cur) = (1.0, u);
    let mut sign = -1.0;
    for slot in row.iter_mut().take(degree) {
        *slot = t_cur - sign;
        let t_next = 2.0 * u * t_cur - t_prev;
        t_prev = t_cur;
        t_cur = t_next;
        sign = -sign;
    }
}

/// Solves the anchored least squares via ridge-stabilized normal equations.
/// The Chebyshev basis keeps the Gram matrix well conditioned; the tiny
/// ridge only guards rank loss from long constant tails.
fn solve_normal(gram: &mut [f64], rhs_x: &mut [f64], rhs_y: &mut [f64], m: usize) -> bool {
    let max_diag = (0..m).map(|i| gram[i * m + i]).fold(0.0f64, f64::max);
    let ridge = 1e-12 * max_diag.max(1e-300);
    for i in 0..m {
        gram[i * m + i] += ridge;
    }
    // Cholesky in place.
    for i in 0..m {
        for j in 0..=i {
            let mut sum = gram[i * m + j];
            for k in 0..j {
                sum -= gram[i * m + k] * gram[j * m + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                gram[i * m + i] = math::sqrt(sum);
            } else {
                gram[i * m + j] = sum / gram[j * m + j];
            }
        }
    }
    for rhs in [rhs_x, rhs_y] {
        for i in 0..m {
            let mut sum = rhs[i];
            for k in 0..i {
                sum -= gram[i * m + k] * rhs[k];
            }
            rhs[i] = sum / gram[i * m + i];
        }
        for i in (0..m).rev() {
            let mut sum = rhs[i];
            for k in (i + 1)..m {
                sum -= gram[k * m + i] * rhs[k];
            }
            rhs[i] = sum / gram[i * m + i];
        }
    }
    true
}

/// Fits the samples with a degree-`degree` polynomial pinned to the first
/// sample, and certifies the deviation bound `eps` on a validation grid ten
/// times denser than the samples. `rho` is the clearance the bound must
/// stay below for the tracking tunnel to remain collision-free.
pub fn fit_poly(path: &PathSamples, degree: usize, rho: f64) -> Result<PolyPath, RefPathError> {
    if degree < 1 {
        return Err(RefPathError::InvalidInput("degree must be at least 1"));
    }
    if path.points.len() < degree + 1 {
        return Err(RefPathError::InvalidInput("not enough samples for degree"));
    }
    if path.points.len() != path.s_grid.len() {
        return Err(RefPathError::InvalidInput("grid and points disagree"));
    }
    let n = path.horizon as f64;
    let anchor = path.points[0];

    let rows = path.points.len();
    let mut row = vec![0.0; degree];
    let mut gram = vec![0.0; degree * degree];
    let mut rhs_x = vec![0.0; degree];
    let mut rhs_y = vec![0.0; degree];
    for (s, q) in path.s_grid.iter().zip(&path.points) {
        let u = 2.0 * s / n - 1.0;
        shifted_chebyshev_row(u, degree, &mut row);
        let y = *q - anchor;
        for i in 0..degree {
            for j in 0..=i {
                gram[i * degree + j] += row[i] * row[j];
            }
            rhs_x[i] += row[i] * y.x;
            rhs_y[i] += row[i] * y.y;
        }
    }
    for i in 0..degree {
        for j in (i + 1)..degree {
            gram[i * degree + j] = gram[j * degree + i];
        }
    }
    if !solve_normal(&mut gram, &mut rhs_x, &mut rhs_y, degree) {
        return Err(RefPathError::InvalidInput("degenerate sample geometry"));
    }

    let poly = PolyPath {
        anchor,
        cx: rhs_x,
        cy: rhs_y,
        horizon: n,
        eps: 0.0,
        s_valid: path.truncated_at.unwrap_or(n),
    };

    // Validation against the densified piecewise-linear path.
    let mut worst = 0.0f64;
    for w in path.s_grid.windows(2).zip(path.points.windows(2)) {
        let ((s0, s1), (q0, q1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
        for t in 0..=10 {
            let a = t as f64 / 10.0;
            let s = s0 + (s1 - s0) * a;
            let truth = q0.lerp(q1, a);
            worst = worst.max(poly.eval(s).dist(truth));
        }
    }
    let _ = rows;
    let eps = 1.05 * worst + 1e-15;
    if eps >= rho {
        return Err(RefPathError::ApproxTooCoarse { eps });
    }
    Ok(PolyPath { eps, ..poly })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{Spent, Unlimited};
    use crate::geometry::{Obstacle, Region};
    use crate::starworld::{build_star_world, WorkspaceParams};
    use approx::assert_abs_diff_eq;

    fn empty_world(r0: Point, rg: Point) -> StarWorld {
        StarWorld {
            obstacles: Vec::new(),
            rho: 0.3,
            r0,
            rg,
            disjoint: true,
            fallback_used: false,
        }
    }

    fn assert_unit_speed(path: &PathSamples) {
        let tail = path.tail_start().unwrap_or(f64::INFINITY);
        for (w_s, w_p) in path.s_grid.windows(2).zip(path.points.windows(2)) {
            if w_s[1] > tail + 1e-12 {
                continue;
            }
            let arc = w_p[1].dist(w_p[0]);
            let expect = path.dp_max * (w_s[1] - w_s[0]);
            assert!(
                (arc - expect).abs() <= 1e-6 * path.dp_max,
                "speed violation: {arc} vs {expect}"
            );
        }
    }

    #[test]
    fn straight_line_in_empty_world() {
        let world = empty_world(Point::ZERO, Point::new(10.0, 0.0));
        let path = integrate_path(world.r0, world.rg, &world, 5, 0.3, Unlimited).unwrap();
        assert_eq!(path.points[0], Point::ZERO);
        assert_eq!(*path.s_grid.last().unwrap(), 5.0);
        let end = *path.points.last().unwrap();
        assert_abs_diff_eq!(end.x, 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(end.y, 0.0, epsilon = 1e-9);
        assert!(path.truncated_at.is_none());
        assert!(path.goal_reached_at.is_none());
        assert_unit_speed(&path);
        for w in path.s_grid.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 0.05, epsilon = 1e-12);
        }
    }

    #[test]
    fn start_at_goal_yields_constant_path() {
        let g = Point::new(2.0, -1.0);
        let world = empty_world(g, g);
        let path = integrate_path(g, g, &world, 5, 0.3, Unlimited).unwrap();
        assert_eq!(path.goal_reached_at, Some(0.0));
        assert!(path.points.iter().all(|&q| q == g));
        assert_eq!(*path.s_grid.last().unwrap(), 5.0);
    }

    #[test]
    fn goal_reached_mid_horizon_freezes_at_goal() {
        let world = empty_world(Point::ZERO, Point::new(0.9, 0.0));
        let path = integrate_path(world.r0, world.rg, &world, 5, 0.3, Unlimited).unwrap();
        let g = path.goal_reached_at.expect("goal flag");
        assert_abs_diff_eq!(g, 3.0, epsilon = 1e-9);
        for (s, q) in path.s_grid.iter().zip(&path.points) {
            if *s > g + 1e-9 {
                assert_eq!(*q, world.rg);
            }
        }
        assert_eq!(*path.s_grid.last().unwrap(), 5.0);
    }

    #[test]
    fn spent_budget_truncates_immediately() {
        let world = empty_world(Point::ZERO, Point::new(10.0, 0.0));
        let path = integrate_path(world.r0, world.rg, &world, 5, 0.3, Spent).unwrap();
        assert_eq!(path.truncated_at, Some(0.0));
        assert!(path.points.iter().all(|&q| q == Point::ZERO));
        assert_eq!(*path.s_grid.last().unwrap(), 5.0);
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let raw = [Region::new(
            Obstacle::circle(Point::new(0.0, 0.0), 1.0).unwrap(),
        )];
        let world = build_star_world(
            &raw,
            Point::new(-3.0, 0.0),
            Point::new(3.0, 0.0),
            &WorkspaceParams::default(),
            Unlimited,
        )
        .unwrap();
        assert_eq!(
            integrate_path(Point::new(0.2, 0.0), world.rg, &world, 5, 0.3, Unlimited),
            Err(RefPathError::StartInObstacle)
        );
    }

    fn blocked_world() -> ([Region; 1], StarWorld) {
        let raw = [Region::new(
            Obstacle::circle(Point::new(0.0, 0.0), 0.8).unwrap(),
        )];
        let world = build_star_world(
            &raw,
            Point::new(-2.5, 0.05),
            Point::new(2.5, 0.0),
            &WorkspaceParams::default(),
            Unlimited,
        )
        .unwrap();
        (raw, world)
    }

    #[test]
    fn curved_path_keeps_clearance_and_unit_speed() {
        let (raw, world) = blocked_world();
        let path = integrate_path(world.r0, world.rg, &world, 5, 0.3, Unlimited).unwrap();
        assert_unit_speed(&path);
        for q in &path.points {
            assert!(min_gamma(&world, *q) >= 1.0 - 1e-9);
            assert!(raw[0].signed_distance(*q) >= world.rho - 1e-6);
        }
        // No-tunneling guard: accepted steps stay below the start-point
        // distance to the member union, up to the floor-step carve-out.
        for (w_s, w_p) in path.s_grid.windows(2).zip(path.points.windows(2)) {
            let step = w_p[1].dist(w_p[0]);
            let sdf = world
                .obstacles
                .iter()
                .map(|o| o.min_member_distance(w_p[0]))
                .fold(f64::INFINITY, f64::min);
            let floor_len = DS_FLOOR * path.dp_max;
            assert!(
                step <= sdf.max(floor_len) + 1e-12,
                "step {step} exceeds clearance {sdf} at s {}",
                w_s[0]
            );
        }
    }

    #[test]
    fn reuse_shifts_reindexes_and_extends() {
        let (_, world) = blocked_world();
        let fresh = integrate_path(world.r0, world.rg, &world, 5, 0.3, Unlimited).unwrap();
        let probe = fresh.points[12] + Point::new(0.003, -0.002);
        let reused = maybe_reuse(&fresh, &world, probe, Unlimited).expect("reusable");

        assert_eq!(reused.points[0], fresh.points[12]);
        assert_eq!(reused.s_grid[0], 0.0);
        assert_eq!(*reused.s_grid.last().unwrap(), 5.0);
        let kept = fresh.points.len() - 12;
        assert_eq!(&reused.points[..kept], &fresh.points[12..]);
        assert!(reused.points.len() > kept, "tail extension missing");
        assert_unit_speed(&reused);
        let again = maybe_reuse(&fresh, &world, probe, Unlimited).unwrap();
        assert_eq!(again, reused);
    }

    #[test]
    fn reuse_refused_when_path_blocked_or_robot_far() {
        let (_, world) = blocked_world();
        let fresh = integrate_path(world.r0, world.rg, &world, 5, 0.3, Unlimited).unwrap();

        // An obstacle moved onto the old path invalidates it.
        let moved = [Region::new(
            Obstacle::circle(fresh.points[10], 0.3).unwrap(),
        )];
        let world2 = build_star_world(
            &moved,
            Point::new(-2.5, 2.0),
            world.rg,
            &WorkspaceParams::default(),
            Unlimited,
        )
        .unwrap();
        assert!(maybe_reuse(&fresh, &world2, world.r0, Unlimited).is_none());

        // A robot farther than rho from every stored sample gets no reuse.
        assert!(maybe_reuse(&fresh, &world, Point::new(0.0, 5.0), Unlimited).is_none());
    }

    fn line_path() -> PathSamples {
        let pts: Vec<Point> = (0..=100)
            .map(|i| Point::new(0.015 * i as f64, -0.006 * i as f64))
            .collect();
        PathSamples {
            s_grid: (0..=100).map(|i| 0.05 * i as f64).collect(),
            points: pts,
            dp_max: 0.3,
            horizon: 5,
            truncated_at: None,
            goal_reached_at: None,
        }
    }

    #[test]
    fn line_fit_is_exact_and_anchored() {
        let path = line_path();
        let poly = fit_poly(&path, 10, 0.3).unwrap();
        assert!(poly.eps() < 1e-9, "eps {}", poly.eps());
        assert_eq!(poly.eval(0.0), path.points[0]);
        let mid = poly.eval(2.5);
        assert_abs_diff_eq!(mid.x, 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(mid.y, -0.3, epsilon = 1e-9);
    }

    #[test]
    fn constant_fit_is_exact() {
        let q = Point::new(1.0, 2.0);
        let path = PathSamples {
            s_grid: (0..=20).map(|i| 0.25 * i as f64).collect(),
            points: vec![q; 21],
            dp_max: 0.3,
            horizon: 5,
            truncated_at: None,
            goal_reached_at: Some(0.0),
        };
        let poly = fit_poly(&path, 10, 0.3).unwrap();
        assert!(poly.eps() < 1e-12);
        assert_eq!(poly.eval(0.0), q);
        assert!(poly.eval(3.3).dist(q) < 1e-12);
    }

    fn quarter_circle_path() -> PathSamples {
        let n = 100;
        let pts: Vec<Point> = (0..=n)
            .map(|i| {
                let a = core::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        PathSamples {
            s_grid: (0..=n).map(|i| 5.0 * i as f64 / n as f64).collect(),
            points: pts,
            dp_max: core::f64::consts::FRAC_PI_2 / 5.0,
            horizon: 5,
            truncated_at: None,
            goal_reached_at: None,
        }
    }

    #[test]
    fn quarter_circle_fit_is_tight() {
        let path = quarter_circle_path();
        let poly = fit_poly(&path, 10, 0.3).unwrap();
        assert!(poly.eps() < 1e-4, "eps {}", poly.eps());
        // Certification: residual on a 10x grid never exceeds eps.
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let s = 5.0 * i as f64 / 1000.0;
            let a = core::f64::consts::FRAC_PI_2 * s / 5.0;
            let truth = Point::new(a.cos(), a.sin());
            worst = worst.max(poly.eval(s).dist(truth));
        }
        assert!(worst <= poly.eps(), "residual {worst} above eps {}", poly.eps());
    }

    #[test]
    fn coarse_fit_is_rejected_against_tight_clearance() {
        let path = quarter_circle_path();
        match fit_poly(&path, 10, 1e-6) {
            Err(RefPathError::ApproxTooCoarse { eps }) => assert!(eps >= 1e-6),
            other => panic!("expected ApproxTooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_fit_inputs_are_rejected() {
        let path = line_path();
        assert!(matches!(
            fit_poly(&path, 0, 0.3),
            Err(RefPathError::InvalidInput(_))
        ));
        let mut short = line_path();
        short.s_grid.truncate(5);
        short.points.truncate(5);
        assert!(matches!(
            fit_poly(&short, 10, 0.3),
            Err(RefPathError::InvalidInput(_))
        ));
    }

    #[test]
    fn poly_derivative_matches_finite_differences() {
        let path = quarter_circle_path();
        let poly = fit_poly(&path, 10, 0.3).unwrap();
        for i in 1..20 {
            let s = 5.0 * i as f64 / 20.0;
            let h = 1e-6;
            let fd = (poly.eval(s + h) - poly.eval(s - h)) / (2.0 * h);
            let an = poly.deriv(s);
            assert_abs_diff_eq!(an.x, fd.x, epsilon = 1e-6);
            assert_abs_diff_eq!(an.y, fd.y, epsilon = 1e-6);
        }
    }
}
