//! Obstacle-avoiding guiding field over a star world.
//!
//! The nominal attractor `rg - r` is reshaped per obstacle by an
//! eigendecomposition that zeroes the approach component at the boundary and
//! amplifies the tangent one, then the per-obstacle results are blended with
//! weights that hand full control to whichever boundary is being touched.
//! Trajectories of the field slide along obstacles instead of entering them.

use alloc::vec::Vec;

use crate::geometry::{Point, StarObstacle};
use crate::math;
use crate::starworld::StarWorld;

/// Queries strictly inside an obstacle have no field value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorPoint;

impl core::fmt::Display for InteriorPoint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "query point lies inside a star obstacle")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for InteriorPoint {}

/// One field evaluation: the modulated velocity, its unit version, and the
/// per-obstacle scaled distances it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub velocity: Point,
    /// Zero when `velocity` is shorter than the normalization floor.
    pub unit_velocity: Point,
    /// One entry per star obstacle, each >= 1.
    pub gammas: Vec<f64>,
}

/// Row-major 2x2 matrix, just enough linear algebra for the modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn mul_vec(&self, v: Point) -> Point {
        Point::new(
            self.0[0][0] * v.x + self.0[0][1] * v.y,
            self.0[1][0] * v.x + self.0[1][1] * v.y,
        )
    }

    /// lambda_r on the axis `e`, lambda_t on its perpendicular.
    fn from_eigenbasis(e: Point, lambda_r: f64, lambda_t: f64) -> Mat2 {
        let t = e.perp();
        Mat2([
            [
                lambda_r * e.x * e.x + lambda_t * t.x * t.x,
                lambda_r * e.x * e.y + lambda_t * t.x * t.y,
            ],
            [
                lambda_r * e.y * e.x + lambda_t * t.y * t.x,
                lambda_r * e.y * e.y + lambda_t * t.y * t.y,
            ],
        ])
    }

    fn scaled_rotation(scale: f64, angle: f64) -> Mat2 {
        let (s, c) = (scale * math::sin(angle), scale * math::cos(angle));
        Mat2([[c, -s], [s, c]])
    }
}

/// Below this, a point counts as strictly interior.
const INTERIOR_TOL: f64 = 1e-9;
/// Velocities shorter than this normalize to zero.
const ZERO_SPEED: f64 = 1e-12;
/// Queries coinciding with a star center are moved this far along +x before
/// evaluation; the center ray is otherwise undefined.
const CENTER_PERTURB: f64 = 1e-9;

/// Scaled radial distance to `obstacle`: 1 on the boundary, growing with the
/// distance from the star center along the query ray.
pub fn gamma(obstacle: &StarObstacle, r: Point) -> Result<f64, InteriorPoint> {
    let g = obstacle.gamma(r);
    if g < 1.0 - INTERIOR_TOL {
        return Err(InteriorPoint);
    }
    Ok(if g < 1.0 { 1.0 } else { g })
}

fn perturb_off_centers(r: Point, world: &StarWorld) -> Point {
    if world
        .obstacles
        .iter()
        .any(|o| o.center().dist(r) < 1e-12)
    {
        r + Point::new(CENTER_PERTURB, 0.0)
    } else {
        r
    }
}

fn gammas_of(r: Point, world: &StarWorld) -> Result<Vec<f64>, InteriorPoint> {
    world.obstacles.iter().map(|o| gamma(o, r)).collect()
}

/// Boundary-dominant partition of unity: w_j -> 1 as gamma_j -> 1. When
/// several obstacles touch at once the weight splits evenly among them.
fn weights(gammas: &[f64]) -> Vec<f64> {
    let n = gammas.len();
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&l| l != j)
                .map(|l| gammas[l] - 1.0)
                .product()
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total > 1e-300 {
        for v in &mut w {
            *v /= total;
        }
        return w;
    }
    let min = gammas.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hits = gammas.iter().filter(|&&g| g <= min + 1e-12).count().max(1);
    for (v, &g) in w.iter_mut().zip(gammas) {
        *v = if g <= min + 1e-12 {
            1.0 / hits as f64
        } else {
            0.0
        };
    }
    w
}

/// Eigenbasis pairs the center-ray direction with the surface tangent at
/// the ray's boundary crossing; the basis is not orthogonal, so this forms
/// `E diag(lr, lt) E^{-1}` with a genuine inverse. At the boundary the
/// radial eigenvalue is zero and every image lands on the tangent line.
fn per_obstacle_matrix(obstacle: &StarObstacle, r: Point, g: f64) -> Mat2 {
    let e_ref = (r - obstacle.center())
        .try_normalize(1e-15)
        .unwrap_or(Point::new(1.0, 0.0));
    let n = obstacle.boundary_at(e_ref.angle()).normal;
    let (lr, lt) = (1.0 - 1.0 / g, 1.0 + 1.0 / g);

    let det = e_ref.dot(n);
    if det.abs() < 1e-9 {
        // Grazing ray; the radial frame degenerates onto the tangent line.
        return Mat2::from_eigenbasis(n, lr, lt);
    }
    let e_tan = n.perp();
    let inv = 1.0 / det;
    let col_r = e_ref * lr;
    let col_t = e_tan * lt;
    Mat2([
        [
            (col_r.x * e_tan.y - col_t.x * e_ref.y) * inv,
            (col_t.x * e_ref.x - col_r.x * e_tan.x) * inv,
        ],
        [
            (col_r.y * e_tan.y - col_t.y * e_ref.y) * inv,
            (col_t.y * e_ref.x - col_r.y * e_tan.x) * inv,
        ],
    ])
}

fn combined_matrix(r: Point, rg: Point, world: &StarWorld, gammas: &[f64]) -> Mat2 {
    match world.obstacles.len() {
        0 => Mat2::IDENTITY,
        1 => per_obstacle_matrix(&world.obstacles[0], r, gammas[0]),
        _ => {
            let f = rg - r;
            let Some(f_hat) = f.try_normalize(ZERO_SPEED) else {
                return Mat2::IDENTITY;
            };
            let nominal = math::atan2(f_hat.y, f_hat.x);
            let speed = f.norm();
            let w = weights(gammas);

            // Blend speeds linearly and directions on the circle, each
            // obstacle's contribution measured as an offset from nominal.
            let mut angle = 0.0;
            let mut magnitude = 0.0;
            for ((obstacle, &g), &wj) in world.obstacles.iter().zip(gammas).zip(&w) {
                let vj = per_obstacle_matrix(obstacle, r, g).mul_vec(f);
                let mj = vj.norm();
                if mj >= 1e-15 {
                    angle += wj * math::wrap_angle(vj.angle() - nominal);
                }
                magnitude += wj * mj;
            }
            Mat2::scaled_rotation(magnitude / speed, angle)
        }
    }
}

/// Modulation matrix at `r`: the velocity there is `M * (rg - r)`.
///
/// With one obstacle this is the eigendecomposition itself; with several it
/// is the scaled rotation carrying the nominal attractor onto the blended
/// velocity. Far from all obstacles it approaches the identity.
pub fn modulation(r: Point, rg: Point, world: &StarWorld) -> Result<Mat2, InteriorPoint> {
    let r = perturb_off_centers(r, world);
    let gammas = gammas_of(r, world)?;
    Ok(combined_matrix(r, rg, world, &gammas))
}

/// Field evaluation at `r` steering toward `rg`.
pub fn field(r: Point, rg: Point, world: &StarWorld) -> Result<FieldEval, InteriorPoint> {
    let r = perturb_off_centers(r, world);
    let gammas = gammas_of(r, world)?;
    let velocity = combined_matrix(r, rg, world, &gammas).mul_vec(rg - r);
    let unit_velocity = velocity.try_normalize(ZERO_SPEED).unwrap_or(Point::ZERO);
    Ok(FieldEval {
        velocity,
        unit_velocity,
        gammas,
    })
}
