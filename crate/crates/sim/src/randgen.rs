//! Seeded random scenarios for sweep testing.
//!
//! Layouts keep a generous margin around the start pose and the goal, and
//! scripted motion stays slow relative to the robot, so a well-behaved
//! controller never sees an obstacle forced onto it. Everything derives from
//! the seed; the same seed always yields the same file.

use crate::scenario::{
    ControlConfig, ObstacleConfig, RobotConfig, ScenarioFile, ShapeConfig, Waypoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use star_tunnel_core::geometry::Point;
use std::f64::consts::{PI, TAU};

const DURATION: f64 = 16.0;
/// Scripted translation speed cap, well under the robot's top speed.
/// Scripted motion cannot yield, so it stays slow and short-ranged enough
/// that a rule-abiding robot is never forced into unavoidable contact.
const OBSTACLE_SPEED: f64 = 0.2;
/// Largest total excursion of a moving obstacle from its birth position.
const MAX_EXCURSION: f64 = 1.0;
/// Clear radius around the start pose: obstacle extent plus robot radius,
/// full clearance, and slack.
const START_MARGIN: f64 = 1.1;
const GOAL_MARGIN: f64 = 0.6;

pub fn random_scenario(seed: u64) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let theta = rng.gen_range(-PI..PI);
    let goal_dir = Point::from_angle(rng.gen_range(-PI..PI));
    let goal_dist = rng.gen_range(4.0..6.0);
    let goal = goal_dir * goal_dist;
    let perp = goal_dir.perp();

    let count = rng.gen_range(3..=8usize);
    let mut shapes: Vec<(Point, f64, ShapeConfig)> = Vec::with_capacity(count);
    let mut obstacles = Vec::with_capacity(count);

    while shapes.len() < count {
        // Motion is drawn first so the placement margin can absorb the
        // whole excursion: a drifting obstacle can never reach the start.
        let mut moving = rng.gen_bool(0.35);
        let slack = if moving { MAX_EXCURSION } else { 0.0 };
        let force_sibling = shapes.len() + 1 == count && shapes.len() >= 2 && rng.gen_bool(0.6);
        let mut placed = if force_sibling {
            place_sibling(&mut rng, &shapes, goal, slack)
        } else {
            place_free(&mut rng, goal_dir, perp, goal, goal_dist, slack)
        };
        // A berth wide enough to drift in may not exist; park it instead.
        if placed.is_none() && moving {
            moving = false;
            placed = if force_sibling {
                place_sibling(&mut rng, &shapes, goal, 0.0)
            } else {
                place_free(&mut rng, goal_dir, perp, goal, goal_dist, 0.0)
            };
        }
        match placed {
            Some(s) => {
                obstacles.push(ObstacleConfig {
                    shape: s.2.clone(),
                    waypoints: if moving {
                        waypoint_walk(&mut rng)
                    } else {
                        Vec::new()
                    },
                });
                shapes.push(s);
            }
            // Crowded draw; accept the smaller world.
            None => break,
        }
    }

    ScenarioFile {
        name: format!("random-{seed:04}"),
        duration: DURATION,
        seed,
        goal: [goal.x, goal.y],
        goal_tol: 0.05,
        robot: RobotConfig {
            start: [0.0, 0.0, theta],
            ..RobotConfig::default()
        },
        control: ControlConfig::default(),
        obstacles,
    }
}

fn draw_shape(rng: &mut ChaCha8Rng, center: Point) -> (f64, ShapeConfig) {
    if rng.gen_bool(0.6) {
        let radius = rng.gen_range(0.3..0.75);
        (
            radius,
            ShapeConfig::Circle {
                center: [center.x, center.y],
                radius,
            },
        )
    } else {
        let sides = rng.gen_range(3..=6usize);
        let base = rng.gen_range(0.4..0.8);
        let spin = rng.gen_range(0.0..TAU);
        let mut extent: f64 = 0.0;
        let mut vertices = Vec::with_capacity(sides);
        for i in 0..sides {
            let ang = spin + TAU * i as f64 / sides as f64;
            let r = base * rng.gen_range(0.75..1.25);
            extent = extent.max(r);
            let v = center + Point::from_angle(ang) * r;
            vertices.push([v.x, v.y]);
        }
        (extent, ShapeConfig::Polygon { vertices })
    }
}

fn clear_of_anchors(center: Point, extent: f64, goal: Point, slack: f64) -> bool {
    center.norm() >= extent + START_MARGIN + slack
        && center.dist(goal) >= extent + GOAL_MARGIN + slack
}

fn place_free(
    rng: &mut ChaCha8Rng,
    goal_dir: Point,
    perp: Point,
    goal: Point,
    goal_dist: f64,
    slack: f64,
) -> Option<(Point, f64, ShapeConfig)> {
    for _ in 0..30 {
        let along = rng.gen_range(0.18..0.85) * goal_dist;
        let lateral = rng.gen_range(-2.4..2.4);
        let center = goal_dir * along + perp * lateral;
        let (extent, shape) = draw_shape(rng, center);
        if clear_of_anchors(center, extent, goal, slack) {
            return Some((center, extent, shape));
        }
    }
    None
}

/// Drops a circle onto an existing obstacle so the pair intersects and the
/// star stage has something to merge.
fn place_sibling(
    rng: &mut ChaCha8Rng,
    placed: &[(Point, f64, ShapeConfig)],
    goal: Point,
    slack: f64,
) -> Option<(Point, f64, ShapeConfig)> {
    for _ in 0..30 {
        let pick = rng.gen_range(0..placed.len());
        let (host, host_extent) = (placed[pick].0, placed[pick].1);
        let radius = rng.gen_range(0.3..0.55);
        let gap = rng.gen_range(0.3..0.8) * (host_extent + radius);
        let center = host + Point::from_angle(rng.gen_range(0.0..TAU)) * gap;
        if clear_of_anchors(center, radius, goal, slack) {
            return Some((
                center,
                radius,
                ShapeConfig::Circle {
                    center: [center.x, center.y],
                    radius,
                },
            ));
        }
    }
    None
}

/// Piecewise-linear drift: a few slow legs that never stray far from the
/// birth position.
fn waypoint_walk(rng: &mut ChaCha8Rng) -> Vec<Waypoint> {
    let legs = rng.gen_range(2..=3usize);
    let leg_dt = DURATION / legs as f64;
    let mut offset = Point::new(0.0, 0.0);
    let mut waypoints = vec![Waypoint {
        t: 0.0,
        offset: [0.0, 0.0],
    }];
    for leg in 1..=legs {
        let len = rng.gen_range(0.3..1.0f64).min(OBSTACLE_SPEED * leg_dt);
        let mut step = Point::from_angle(rng.gen_range(0.0..TAU)) * len;
        if (offset + step).norm() > MAX_EXCURSION {
            step = step * -1.0;
        }
        offset = offset + step;
        waypoints.push(Waypoint {
            t: leg as f64 * leg_dt,
            offset: [offset.x, offset.y],
        });
    }
    waypoints
}
