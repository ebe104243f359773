//! Closed-loop simulation: freeze obstacles, rebuild the star world, refresh
//! the reference path, solve the tunnel OCP, apply the first input.
//!
//! Obstacles are frozen for the whole control period and only advance at the
//! next sampling instant, so the stationarity assumption the controller
//! relies on holds by construction. The other world assumption, that
//! obstacles never move onto the robot, is checked every step: a scripted
//! violation aborts the run instead of being logged as a controller failure.

use crate::scenario::Scenario;
use crate::Deadline;
use serde::{Deserialize, Serialize};
use star_tunnel_core::geometry::{Point, Region};
use star_tunnel_core::models::{RobotModel, UnicycleState};
use star_tunnel_core::ocp::{
    extract_control, shift_warm_start, solve, trivial_solution, OcpError, OcpSolution, SolveStatus,
};
use star_tunnel_core::refpath::{fit_poly, integrate_path, maybe_reuse, PathSamples, PolyPath, RefPathError};
use star_tunnel_core::starworld::{build_star_world, StarWorld, StarWorldError};
use std::fmt;
use std::time::Instant;

#[derive(Debug)]
pub enum SimError {
    /// The start pose already touches a dilated obstacle.
    RobotInCollision,
    /// A scripted obstacle moved onto the robot; the scenario breaks the
    /// world assumptions, the controller is not at fault.
    AssumptionViolated { step: usize, t: f64 },
    /// The controller drove the robot into a frozen obstacle. Always a bug.
    SafetyViolated { step: usize, t: f64 },
    /// A pipeline stage failed outright.
    Stage {
        step: usize,
        stage: &'static str,
        message: String,
    },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::RobotInCollision => write!(f, "robot starts inside an obstacle"),
            SimError::AssumptionViolated { step, t } => {
                write!(f, "obstacle moved onto the robot at step {step} (t = {t:.2} s)")
            }
            SimError::SafetyViolated { step, t } => {
                write!(f, "robot entered a frozen obstacle at step {step} (t = {t:.2} s)")
            }
            SimError::Stage { step, stage, message } => {
                write!(f, "{stage} stage failed at step {step}: {message}")
            }
        }
    }
}

impl std::error::Error for SimError {}

/// Per-stage wall-clock times, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub workspace_ms: f64,
    pub path_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

/// One control step of the trace. Fields that only exist when the full
/// pipeline ran (a polynomial was fit, the OCP was solved) are optional; the
/// idle fallbacks leave them empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub t: f64,
    pub x: [f64; 3],
    pub u: [f64; 2],
    pub rho: f64,
    pub r0: [f64; 2],
    pub rg: [f64; 2],
    pub path_points: usize,
    pub path_end_s: f64,
    pub path_reused: bool,
    pub eps: Option<f64>,
    pub tunnel_radius: Option<f64>,
    pub s_n: Option<f64>,
    pub cost: Option<f64>,
    pub trivial_cost: Option<f64>,
    pub trivial_residual: Option<f64>,
    pub solution_residual: Option<f64>,
    pub solver_status: String,
    pub stars: usize,
    pub disjoint: bool,
    pub fallback_world: bool,
    /// Signed distance to the nearest dilated obstacle; `None` in an empty
    /// world.
    pub min_obstacle_distance: Option<f64>,
    pub goal_distance: f64,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<TraceRecord>,
    pub reached_goal: bool,
    pub arrival_time: Option<f64>,
    pub final_state: UnicycleState,
}

/// Everything one control step produced, lent to the inspector before the
/// robot advances.
pub struct StepView<'a> {
    pub k: usize,
    pub t: f64,
    /// Dilated obstacles frozen at `t`.
    pub obstacles: &'a [Region],
    pub world: &'a StarWorld,
    pub path: &'a PathSamples,
    pub poly: Option<&'a PolyPath>,
    pub trivial: Option<&'a OcpSolution>,
    pub solution: Option<&'a OcpSolution>,
    pub record: &'a TraceRecord,
}

pub fn min_distance(obstacles: &[Region], p: Point) -> Option<f64> {
    obstacles
        .iter()
        .map(|r| r.signed_distance(p))
        .min_by(|a, b| a.total_cmp(b))
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::MaxIter => "max_iter",
        SolveStatus::FallbackTrivial => "fallback_trivial",
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn simulate(scenario: &Scenario) -> Result<RunResult, SimError> {
    simulate_with(scenario, |_| {})
}

/// Runs the closed loop, handing every step to `inspect` before the robot
/// advances. The inspector sees borrowed stage outputs that are dropped
/// afterwards, so trace records stay lean.
pub fn simulate_with(
    scenario: &Scenario,
    mut inspect: impl FnMut(StepView<'_>),
) -> Result<RunResult, SimError> {
    let robot = scenario.robot;
    let dt = robot.dt;
    let mut state = scenario.start;
    let mut u_prev = robot.idle_input();
    let mut prev_path: Option<PathSamples> = None;
    let mut prev_sol: Option<OcpSolution> = None;
    let mut records = Vec::new();
    let mut reached = false;
    let mut arrival = None;

    if min_distance(&scenario.obstacles_at(0.0), state.position()).is_some_and(|d| d <= 0.0) {
        return Err(SimError::RobotInCollision);
    }

    for k in 0..scenario.steps() {
        let t = k as f64 * dt;
        let p = state.position();
        if p.dist(scenario.goal) < scenario.goal_tol {
            reached = true;
            arrival = Some(t);
            break;
        }

        let step_clock = Instant::now();
        let obstacles = scenario.obstacles_at(t);
        let min_dist = min_distance(&obstacles, p);

        let ws_clock = Instant::now();
        let wp = scenario.workspace_params();
        let world = build_star_world(&obstacles, p, scenario.goal, &wp, Deadline::after(wp.max_time))
            .map_err(|e| match e {
                StarWorldError::RobotInCollision => SimError::SafetyViolated { step: k, t },
                other => SimError::Stage {
                    step: k,
                    stage: "workspace",
                    message: other.to_string(),
                },
            })?;
        let workspace_ms = ms(ws_clock);

        let path_clock = Instant::now();
        let path_budget = Deadline::after(scenario.control.path_time);
        let (path, reused) = match prev_path
            .take()
            .and_then(|pp| maybe_reuse(&pp, &world, p, &path_budget))
        {
            Some(pth) => (pth, true),
            None => (
                integrate_path(
                    world.r0,
                    world.rg,
                    &world,
                    scenario.control.horizon,
                    robot.dp_max(),
                    &path_budget,
                )
                .map_err(|e| SimError::Stage {
                    step: k,
                    stage: "path",
                    message: e.to_string(),
                })?,
                false,
            ),
        };
        let fit = fit_poly(&path, scenario.control.poly_degree, world.rho);
        let path_ms = ms(path_clock);

        let solve_clock = Instant::now();
        let mut poly = None;
        let mut trivial = None;
        let mut solution = None;
        let applied;
        let status;
        match fit {
            Ok(pl) => {
                let params = scenario.ocp_params(world.rho - pl.eps());
                let x = state.to_vec();
                match trivial_solution(&robot, &x, &u_prev, pl.eval(0.0), &params) {
                    Ok(triv) => {
                        let warm = prev_sol
                            .take()
                            .map(|s| shift_warm_start(&s, s.predicted_states[1].s));
                        let sol = solve(
                            &robot,
                            &x,
                            &u_prev,
                            &pl,
                            &params,
                            warm.as_ref(),
                            Deadline::after(scenario.control.solver_time),
                        )
                        .map_err(|e| SimError::Stage {
                            step: k,
                            stage: "control",
                            message: e.to_string(),
                        })?;
                        applied = extract_control(&sol).to_vec();
                        status = status_name(sol.status).to_string();
                        trivial = Some(triv);
                        solution = Some(sol);
                    }
                    // The reference start drifted out of the tunnel; holding
                    // still is safe in the frozen world, so idle and rebuild
                    // next period.
                    Err(OcpError::TunnelViolated { .. }) => {
                        applied = robot.idle_input();
                        status = "idle:tunnel".to_string();
                    }
                    Err(e) => {
                        return Err(SimError::Stage {
                            step: k,
                            stage: "control",
                            message: e.to_string(),
                        })
                    }
                }
                poly = Some(pl);
            }
            // The polynomial cannot certify the clearance; same idle policy.
            Err(RefPathError::ApproxTooCoarse { .. }) => {
                applied = robot.idle_input();
                status = "idle:fit".to_string();
            }
            Err(e) => {
                return Err(SimError::Stage {
                    step: k,
                    stage: "fit",
                    message: e.to_string(),
                })
            }
        }
        let solve_ms = ms(solve_clock);

        let record = TraceRecord {
            k,
            t,
            x: [state.x, state.y, state.theta],
            u: [applied[0], applied[1]],
            rho: world.rho,
            r0: [world.r0.x, world.r0.y],
            rg: [world.rg.x, world.rg.y],
            path_points: path.points.len(),
            path_end_s: path.s_grid.last().copied().unwrap_or(0.0),
            path_reused: reused,
            eps: poly.as_ref().map(|p| p.eps()),
            tunnel_radius: poly.as_ref().map(|p| world.rho - p.eps()),
            s_n: solution
                .as_ref()
                .map(|s| s.predicted_states.last().expect("nonempty plan").s),
            cost: solution.as_ref().map(|s| s.cost),
            trivial_cost: trivial.as_ref().map(|s| s.cost),
            trivial_residual: trivial.as_ref().map(|s| s.constraint_residual),
            solution_residual: solution.as_ref().map(|s| s.constraint_residual),
            solver_status: status,
            stars: world.obstacles.len(),
            disjoint: world.disjoint,
            fallback_world: world.fallback_used,
            min_obstacle_distance: min_dist,
            goal_distance: p.dist(scenario.goal),
            timings: StageTimings {
                workspace_ms,
                path_ms,
                solve_ms,
                total_ms: ms(step_clock),
            },
        };
        inspect(StepView {
            k,
            t,
            obstacles: &obstacles,
            world: &world,
            path: &path,
            poly: poly.as_ref(),
            trivial: trivial.as_ref(),
            solution: solution.as_ref(),
            record: &record,
        });
        records.push(record);

        let next = robot.step_pose(state, applied[0], applied[1]);
        let np = next.position();
        if min_distance(&obstacles, np).is_some_and(|d| d <= 0.0) {
            return Err(SimError::SafetyViolated { step: k, t });
        }
        let t_next = (k + 1) as f64 * dt;
        if min_distance(&scenario.obstacles_at(t_next), np).is_some_and(|d| d <= 0.0) {
            return Err(SimError::AssumptionViolated {
                step: k + 1,
                t: t_next,
            });
        }

        u_prev = applied;
        prev_path = Some(path);
        prev_sol = solution;
        state = next;
    }

    if !reached && state.position().dist(scenario.goal) < scenario.goal_tol {
        reached = true;
        arrival = Some(scenario.steps() as f64 * dt);
    }

    Ok(RunResult {
        records,
        reached_goal: reached,
        arrival_time: arrival,
        final_state: state,
    })
}
