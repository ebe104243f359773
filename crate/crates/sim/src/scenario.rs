//! Scenario files and their validated runtime form.
//!
//! A scenario is a TOML document: robot, goal, control configuration, and a
//! list of obstacles, each optionally carrying a piecewise-linear waypoint
//! schedule. Poses are interpolated between waypoints and sampled at control
//! instants, so within one control period every obstacle is frozen.

use serde::{Deserialize, Serialize};
use star_tunnel_core::geometry::{Obstacle, Point, Region};
use star_tunnel_core::models::{Unicycle, UnicycleState};
use star_tunnel_core::ocp::OcpParams;
use star_tunnel_core::starworld::WorkspaceParams;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum ScenarioError {
    Io(std::io::Error),
    Parse(toml::de::Error),
    Invalid(String),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io(e) => write!(f, "cannot read scenario: {e}"),
            ScenarioError::Parse(e) => write!(f, "cannot parse scenario: {e}"),
            ScenarioError::Invalid(m) => write!(f, "invalid scenario: {m}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e)
    }
}

impl From<toml::de::Error> for ScenarioError {
    fn from(e: toml::de::Error) -> Self {
        ScenarioError::Parse(e)
    }
}

/// On-disk scenario document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioFile {
    pub name: String,
    /// Simulated time span, seconds.
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    pub goal: [f64; 2],
    #[serde(default = "default_goal_tol")]
    pub goal_tol: f64,
    pub robot: RobotConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<ObstacleConfig>,
}

fn default_goal_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    /// Initial pose `[x, y, theta]`.
    pub start: [f64; 3],
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            start: [0.0, 0.0, 0.0],
            radius: default_radius(),
            v_max: default_v_max(),
            omega_max: default_omega_max(),
        }
    }
}

fn default_radius() -> f64 {
    0.2
}

fn default_v_max() -> f64 {
    1.5
}

fn default_omega_max() -> f64 {
    1.5
}

/// Controller configuration shared by every pipeline stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// Control period, seconds.
    pub dt: f64,
    pub horizon: usize,
    pub progress_weight: f64,
    pub terminal_error_weight: f64,
    /// Diagonal of the input-variation weight.
    pub input_rate_weight: [f64; 2],
    /// Largest clearance radius tried, meters.
    pub rho_bar: f64,
    /// Clearance shrink factor per attempt.
    pub gamma: f64,
    pub poly_degree: usize,
    /// Per-stage wall-clock budgets, seconds.
    pub workspace_time: f64,
    pub path_time: f64,
    pub solver_time: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            dt: 0.2,
            horizon: 5,
            progress_weight: 500.0,
            terminal_error_weight: 100.0,
            input_rate_weight: [250.0, 2.5],
            rho_bar: 0.3,
            gamma: 0.5,
            poly_degree: 10,
            workspace_time: 0.05,
            path_time: 0.02,
            solver_time: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ObstacleConfig {
    #[serde(flatten)]
    pub shape: ShapeConfig,
    /// Translation schedule; absent or empty means static.
    #[serde(default, rename = "waypoint", skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeConfig {
    Circle { center: [f64; 2], radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub offset: [f64; 2],
}

/// Writes the default control and robot configuration as TOML.
///
/// Kept as a function so tests can pin the exact bytes.
pub fn dump_defaults() -> String {
    #[derive(Serialize)]
    struct Defaults {
        control: ControlConfig,
        robot: RobotConfig,
    }
    toml::to_string(&Defaults {
        control: ControlConfig::default(),
        robot: RobotConfig::default(),
    })
    .expect("defaults serialize")
}

/// An obstacle with its translation schedule resolved.
#[derive(Debug, Clone)]
pub struct MovingObstacle {
    base: Obstacle,
    /// Sorted by time; empty means static.
    waypoints: Vec<(f64, Point)>,
}

impl MovingObstacle {
    pub fn new(base: Obstacle, waypoints: Vec<(f64, Point)>) -> MovingObstacle {
        MovingObstacle { base, waypoints }
    }

    pub fn is_static(&self) -> bool {
        self.waypoints.iter().all(|(_, o)| o.norm() == 0.0)
    }

    /// Translation at `t`, linearly interpolated and clamped to the schedule.
    pub fn offset_at(&self, t: f64) -> Point {
        let wp = &self.waypoints;
        let Some(first) = wp.first() else {
            return Point::new(0.0, 0.0);
        };
        if t <= first.0 {
            return first.1;
        }
        for pair in wp.windows(2) {
            let (t0, o0) = pair[0];
            let (t1, o1) = pair[1];
            if t <= t1 {
                let a = (t - t0) / (t1 - t0);
                return o0.lerp(o1, a);
            }
        }
        wp.last().unwrap().1
    }

    pub fn shape_at(&self, t: f64) -> Obstacle {
        translate(&self.base, self.offset_at(t))
    }

    pub fn base(&self) -> &Obstacle {
        &self.base
    }
}

/// Translates an obstacle rigidly; validity and winding are preserved.
fn translate(o: &Obstacle, d: Point) -> Obstacle {
    let shift = |vs: &[Point]| vs.iter().map(|&v| v + d).collect::<Vec<_>>();
    match o {
        Obstacle::Circle { center, radius } => {
            Obstacle::circle(*center + d, *radius).expect("translated circle stays valid")
        }
        Obstacle::ConvexPolygon { vertices } => {
            Obstacle::convex_polygon(shift(vertices)).expect("translated polygon stays valid")
        }
        Obstacle::Polygon { vertices } => {
            Obstacle::polygon(shift(vertices)).expect("translated polygon stays valid")
        }
    }
}

/// Robot-radius dilation: every obstacle inflated by `a`, turning the disk
/// robot into a point.
pub fn dilate_world(raw: &[Region], robot_radius: f64) -> Vec<Region> {
    raw.iter().map(|r| r.inflate(robot_radius)).collect()
}

/// A validated scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub seed: u64,
    pub goal: Point,
    pub goal_tol: f64,
    pub robot: Unicycle,
    pub start: UnicycleState,
    pub control: ControlConfig,
    pub obstacles: Vec<MovingObstacle>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Scenario, ScenarioFile), ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = toml::from_str(&text)?;
        let scenario = Scenario::from_file(&file)?;
        Ok((scenario, file))
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Scenario, ScenarioError> {
        let c = &file.control;
        let invalid = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if !(file.duration > 0.0) || !file.duration.is_finite() {
            return invalid("duration must be positive");
        }
        if !(c.dt > 0.0) || !c.dt.is_finite() {
            return invalid("dt must be positive");
        }
        if c.horizon == 0 {
            return invalid("horizon must be at least 1");
        }
        if c.poly_degree == 0 || c.poly_degree > 30 {
            return invalid("poly_degree must lie in 1..=30");
        }
        if !(c.rho_bar > 0.0 && c.rho_bar.is_finite()) {
            return invalid("rho_bar must be positive");
        }
        if !(c.gamma > 0.0 && c.gamma < 1.0) {
            return invalid("gamma must lie in (0, 1)");
        }
        for w in [c.progress_weight, c.terminal_error_weight] {
            if !(w >= 0.0) || !w.is_finite() {
                return invalid("cost weights must be finite and nonnegative");
            }
        }
        for w in c.input_rate_weight {
            if !(w >= 0.0) || !w.is_finite() {
                return invalid("input_rate_weight entries must be finite and nonnegative");
            }
        }
        for b in [c.workspace_time, c.path_time, c.solver_time] {
            if !(b > 0.0) || !b.is_finite() {
                return invalid("stage budgets must be positive");
            }
        }
        let r = &file.robot;
        if !(r.radius >= 0.0 && r.radius.is_finite()) {
            return invalid("robot radius must be finite and nonnegative");
        }
        if !(r.v_max > 0.0 && r.v_max.is_finite()) || !(r.omega_max > 0.0 && r.omega_max.is_finite())
        {
            return invalid("robot speed bounds must be positive");
        }
        if !r.start.iter().all(|v| v.is_finite()) || !file.goal.iter().all(|v| v.is_finite()) {
            return invalid("start and goal must be finite");
        }
        if !(file.goal_tol > 0.0) || !file.goal_tol.is_finite() {
            return invalid("goal_tol must be positive");
        }

        let mut obstacles = Vec::with_capacity(file.obstacles.len());
        for (i, oc) in file.obstacles.iter().enumerate() {
            let bad = |m: String| ScenarioError::Invalid(format!("obstacle {i}: {m}"));
            let base = match &oc.shape {
                ShapeConfig::Circle { center, radius } => {
                    Obstacle::circle(Point::new(center[0], center[1]), *radius)
                        .map_err(|e| bad(e.to_string()))?
                }
                ShapeConfig::Polygon { vertices } => {
                    let vs = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                    Obstacle::polygon(vs).map_err(|e| bad(e.to_string()))?
                }
            };
            let mut last_t = f64::NEG_INFINITY;
            let mut waypoints = Vec::with_capacity(oc.waypoints.len());
            for w in &oc.waypoints {
                if !w.t.is_finite() || w.t < 0.0 || !w.offset.iter().all(|v| v.is_finite()) {
                    return Err(bad("waypoints must have finite t >= 0 and offsets".into()));
                }
                if w.t <= last_t {
                    return Err(bad("waypoint times must be strictly increasing".into()));
                }
                last_t = w.t;
                waypoints.push((w.t, Point::new(w.offset[0], w.offset[1])));
            }
            obstacles.push(MovingObstacle { base, waypoints });
        }

        Ok(Scenario {
            name: file.name.clone(),
            duration: file.duration,
            seed: file.seed,
            goal: Point::new(file.goal[0], file.goal[1]),
            goal_tol: file.goal_tol,
            robot: Unicycle::new(c.dt, r.radius, r.v_max, r.omega_max),
            start: UnicycleState::new(r.start[0], r.start[1], r.start[2]),
            control: file.control.clone(),
            obstacles,
        })
    }

    pub fn steps(&self) -> usize {
        ((self.duration / self.control.dt).round() as usize).max(1)
    }

    /// Obstacles frozen at `t`, before dilation.
    pub fn raw_obstacles_at(&self, t: f64) -> Vec<Region> {
        self.obstacles
            .iter()
            .map(|o| Region::new(o.shape_at(t)))
            .collect()
    }

    /// Robot-dilated obstacle set frozen at `t`: the world the planner sees.
    pub fn obstacles_at(&self, t: f64) -> Vec<Region> {
        dilate_world(&self.raw_obstacles_at(t), self.robot.radius)
    }

    pub fn workspace_params(&self) -> WorkspaceParams {
        WorkspaceParams {
            rho_bar: self.control.rho_bar,
            gamma: self.control.gamma,
            max_time: self.control.workspace_time,
        }
    }

    pub fn ocp_params(&self, tunnel_radius: f64) -> OcpParams {
        let [rv, rw] = self.control.input_rate_weight;
        OcpParams {
            horizon: self.control.horizon,
            progress_weight: self.control.progress_weight,
            terminal_error_weight: self.control.terminal_error_weight,
            input_rate_weight: vec![rv, 0.0, 0.0, rw],
            tunnel_radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        r#"
            name = "unit"
            duration = 2.0
            goal = [3.0, 0.0]

            [robot]
            start = [0.0, 0.0, 0.0]

            [[obstacle]]
            kind = "circle"
            center = [2.0, 1.0]
            radius = 0.5

            [[obstacle.waypoint]]
            t = 0.0
            offset = [0.0, 0.0]

            [[obstacle.waypoint]]
            t = 2.0
            offset = [1.0, 0.0]

            [[obstacle]]
            kind = "polygon"
            vertices = [[4.0, -1.0], [5.0, -1.0], [5.0, 0.0], [4.0, 0.0]]
        "#
    }

    #[test]
    fn parses_defaults_and_schedules() {
        let file: ScenarioFile = toml::from_str(minimal_toml()).unwrap();
        assert_eq!(file.control, ControlConfig::default());
        assert_eq!(file.goal_tol, 0.05);
        let sc = Scenario::from_file(&file).unwrap();
        assert_eq!(sc.steps(), 10);
        assert_eq!(sc.obstacles.len(), 2);
        assert!(!sc.obstacles[0].is_static());
        assert!(sc.obstacles[1].is_static());
    }

    #[test]
    fn file_round_trips_through_toml() {
        let file: ScenarioFile = toml::from_str(minimal_toml()).unwrap();
        let text = toml::to_string(&file).unwrap();
        let again: ScenarioFile = toml::from_str(&text).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn offsets_interpolate_and_clamp() {
        let file: ScenarioFile = toml::from_str(minimal_toml()).unwrap();
        let sc = Scenario::from_file(&file).unwrap();
        let o = &sc.obstacles[0];
        assert_eq!(o.offset_at(-1.0), Point::new(0.0, 0.0));
        assert_eq!(o.offset_at(1.0), Point::new(0.5, 0.0));
        assert_eq!(o.offset_at(5.0), Point::new(1.0, 0.0));
        let Obstacle::Circle { center, .. } = o.shape_at(1.0) else {
            panic!("circle stays a circle");
        };
        assert_eq!(center, Point::new(2.5, 1.0));
    }

    #[test]
    fn dilation_adds_to_circle_radii() {
        let raw = vec![Region::new(
            Obstacle::circle(Point::new(0.0, 0.0), 1.0).unwrap(),
        )];
        let fat = dilate_world(&raw, 0.25);
        let q = Point::new(2.0, 0.0);
        assert!((fat[0].signed_distance(q) - 0.75).abs() < 1e-12);
        let same = dilate_world(&raw, 0.0);
        assert_eq!(same[0].signed_distance(q), raw[0].signed_distance(q));
    }

    #[test]
    fn rejects_bad_fields() {
        let file: ScenarioFile = toml::from_str(minimal_toml()).unwrap();

        let mut bad = file.clone();
        bad.control.gamma = 1.0;
        assert!(Scenario::from_file(&bad).is_err());

        let mut bad = file.clone();
        bad.obstacles[0].waypoints[1].t = 0.0;
        assert!(Scenario::from_file(&bad).is_err());

        let mut bad = file;
        bad.robot.v_max = 0.0;
        assert!(Scenario::from_file(&bad).is_err());
    }

    #[test]
    fn unknown_control_keys_are_rejected() {
        let text = r#"
            name = "unit"
            duration = 1.0
            goal = [1.0, 0.0]

            [robot]
            start = [0.0, 0.0, 0.0]

            [control]
            dtt = 0.2
        "#;
        assert!(toml::from_str::<ScenarioFile>(text).is_err());
    }
}
