//! Robot models: sampled-time dynamics plus the bounds the controller needs.
//!
//! The controller is model-agnostic. It only requires a discrete step map,
//! the planar output `h(x)` it must keep inside the tunnel, input bounds for
//! its box projection, an idle input that freezes the output, and the step
//! reach `dp_max`, the farthest the output can move in one sample. The
//! reference path is scaled by `dp_max` so one unit of path parameter is
//! reachable per sample.

use crate::geometry::Point;
use crate::math;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// An input component left its `[lower, upper]` interval.
    InputOutOfBounds { index: usize },
    /// State or input slice had the wrong length.
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InputOutOfBounds { index } => {
                write!(f, "input component {index} out of bounds")
            }
            ModelError::DimensionMismatch { expected, got } => {
                write!(f, "expected slice of length {expected}, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// Discrete-time robot with a planar position output.
pub trait RobotModel {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;

    /// Sample time in seconds.
    fn dt(&self) -> f64;

    /// Body radius in metres; the workspace is grown by this much so the
    /// robot can be treated as a point.
    fn radius(&self) -> f64;

    /// One sample step. `state` and `input` lengths must match the model.
    fn step(&self, state: &[f64], input: &[f64]) -> Vec<f64>;

    /// Planar position output `h(x)`.
    fn output(&self, state: &[f64]) -> Point;

    /// Jacobian of the step map w.r.t. state (row-major,
    /// `state_dim x state_dim`) and input (`state_dim x input_dim`),
    /// evaluated at `(state, input)`. The default differentiates `step`
    /// with central differences; models with cheap analytic forms should
    /// override.
    fn step_jacobians(&self, state: &[f64], input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.state_dim(), self.input_dim());
        let h = 1e-6;
        let mut a = alloc::vec![0.0; n * n];
        let mut b = alloc::vec![0.0; n * m];
        let mut xs = state.to_vec();
        for j in 0..n {
            let keep = xs[j];
            xs[j] = keep + h;
            let fp = self.step(&xs, input);
            xs[j] = keep - h;
            let fm = self.step(&xs, input);
            xs[j] = keep;
            for i in 0..n {
                a[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let mut us = input.to_vec();
        for j in 0..m {
            let keep = us[j];
            us[j] = keep + h;
            let fp = self.step(state, &us);
            us[j] = keep - h;
            let fm = self.step(state, &us);
            us[j] = keep;
            for i in 0..n {
                b[i * m + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        (a, b)
    }

    /// Jacobian of `output` w.r.t. the state (row-major, `2 x state_dim`).
    fn output_jacobian(&self, state: &[f64]) -> Vec<f64>;

    /// Per-component input bounds `(lower, upper)`.
    fn input_bounds(&self) -> Vec<(f64, f64)>;

    /// Input that keeps `h(x)` fixed for one step.
    fn idle_input(&self) -> Vec<f64>;

    /// Upper bound on `|h(step(x,u)) - h(x)|` over admissible inputs.
    fn dp_max(&self) -> f64;

    /// Checks an input against the bounds.
    fn check_input(&self, input: &[f64]) -> Result<(), ModelError> {
        let bounds = self.input_bounds();
        if input.len() != bounds.len() {
            return Err(ModelError::DimensionMismatch {
                expected: bounds.len(),
                got: input.len(),
            });
        }
        for (i, (&u, &(lo, hi))) in input.iter().zip(bounds.iter()).enumerate() {
            if !(u >= lo - 1e-9 && u <= hi + 1e-9) {
                return Err(ModelError::InputOutOfBounds { index: i });
            }
        }
        Ok(())
    }
}

/// Unicycle pose `[px, py, theta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnicycleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl UnicycleState {
    pub fn new(x: f64, y: f64, theta: f64) -> UnicycleState {
        UnicycleState { x, y, theta }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        alloc::vec![self.x, self.y, self.theta]
    }

    pub fn from_slice(s: &[f64]) -> UnicycleState {
        UnicycleState { x: s[0], y: s[1], theta: s[2] }
    }
}

/// Euler-discretized unicycle with speed and turn-rate limits.
///
/// Inputs are `[v, omega]`; the pose advances by
/// `[v cos(theta) dt, v sin(theta) dt, omega dt]` and the heading is kept
/// wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unicycle {
    pub dt: f64,
    pub radius: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl Unicycle {
    /// Forward-only drive: `v` in `[0, v_max]`, `|omega| <= omega_max`.
    pub fn new(dt: f64, radius: f64, v_max: f64, omega_max: f64) -> Unicycle {
        Unicycle { dt, radius, v_min: 0.0, v_max, omega_max }
    }

    /// Typed step for callers that hold poses rather than raw slices.
    pub fn step_pose(&self, s: UnicycleState, v: f64, omega: f64) -> UnicycleState {
        UnicycleState {
            x: s.x + v * math::cos(s.theta) * self.dt,
            y: s.y + v * math::sin(s.theta) * self.dt,
            theta: math::wrap_angle(s.theta + omega * self.dt),
        }
    }
}

impl RobotModel for Unicycle {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn step(&self, state: &[f64], input: &[f64]) -> Vec<f64> {
        let s = self.step_pose(UnicycleState::from_slice(state), input[0], input[1]);
        s.to_vec()
    }

    fn output(&self, state: &[f64]) -> Point {
        Point::new(state[0], state[1])
    }

    fn step_jacobians(&self, state: &[f64], input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (th, v) = (state[2], input[0]);
        let (s, c) = (math::sin(th), math::cos(th));
        let a = alloc::vec![
            1.0, 0.0, -v * s * self.dt,
            0.0, 1.0, v * c * self.dt,
            0.0, 0.0, 1.0,
        ];
        let b = alloc::vec![
            c * self.dt, 0.0,
            s * self.dt, 0.0,
            0.0, self.dt,
        ];
        (a, b)
    }

    fn output_jacobian(&self, _state: &[f64]) -> Vec<f64> {
        alloc::vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
    }

    fn input_bounds(&self) -> Vec<(f64, f64)> {
        alloc::vec![(self.v_min, self.v_max), (-self.omega_max, self.omega_max)]
    }

    fn idle_input(&self) -> Vec<f64> {
        alloc::vec![0.0, 0.0]
    }

    fn dp_max(&self) -> f64 {
        // Position moves exactly v*dt per step, maximized at full speed.
        self.v_max.max(self.v_min.abs()) * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn model() -> Unicycle {
        Unicycle::new(0.2, 0.2, 1.5, 1.5)
    }

    #[test]
    fn step_matches_hand_arithmetic() {
        let m = model();
        // Facing +x at the origin, full speed, quarter turn rate.
        let s = m.step_pose(UnicycleState::new(0.0, 0.0, 0.0), 1.5, 1.0);
        assert_relative_eq!(s.x, 0.3, epsilon = 1e-15);
        assert_relative_eq!(s.y, 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.theta, 0.2, epsilon = 1e-15);
        // Facing +y: motion is purely vertical.
        let s = m.step_pose(UnicycleState::new(1.0, 2.0, FRAC_PI_2), 1.0, -0.5);
        assert_relative_eq!(s.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.y, 2.2, epsilon = 1e-12);
        assert_relative_eq!(s.theta, FRAC_PI_2 - 0.1, epsilon = 1e-12);
    }

    #[test]
    fn heading_wraps() {
        let m = model();
        let s = m.step_pose(UnicycleState::new(0.0, 0.0, PI - 0.05), 0.0, 1.5);
        assert!(s.theta <= PI && s.theta > -PI);
        assert_relative_eq!(s.theta, PI - 0.05 + 0.3 - 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn reach_bound_is_tight_and_safe() {
        let m = model();
        assert_relative_eq!(m.dp_max(), 0.3, epsilon = 1e-15);
        // No admissible input moves the output farther than dp_max.
        let mut worst: f64 = 0.0;
        for iv in 0..=20 {
            for io in 0..=20 {
                let v = 1.5 * iv as f64 / 20.0;
                let w = -1.5 + 3.0 * io as f64 / 20.0;
                let x0 = UnicycleState::new(0.3, -0.8, 1.1);
                let x1 = m.step_pose(x0, v, w);
                worst = worst.max(x0.position().dist(x1.position()));
            }
        }
        assert!(worst <= m.dp_max() + 1e-12);
        assert!(worst > m.dp_max() - 1e-9, "bound should be attained");
    }

    #[test]
    fn idle_input_freezes_output() {
        let m = model();
        let x0 = alloc::vec![0.5, -0.2, 2.0];
        let x1 = m.step(&x0, &m.idle_input());
        assert_eq!(m.output(&x0), m.output(&x1));
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let m = model();
        let x = alloc::vec![0.4, -1.2, 0.7];
        let u = alloc::vec![0.9, -0.6];
        let (a, b) = m.step_jacobians(&x, &u);
        // Compare against the trait's finite-difference default.
        struct Fd(Unicycle);
        impl RobotModel for Fd {
            fn state_dim(&self) -> usize {
                self.0.state_dim()
            }
            fn input_dim(&self) -> usize {
                self.0.input_dim()
            }
            fn dt(&self) -> f64 {
                self.0.dt()
            }
            fn radius(&self) -> f64 {
                self.0.radius()
            }
            fn step(&self, s: &[f64], u: &[f64]) -> Vec<f64> {
                self.0.step(s, u)
            }
            fn output(&self, s: &[f64]) -> Point {
                self.0.output(s)
            }
            fn output_jacobian(&self, s: &[f64]) -> Vec<f64> {
                self.0.output_jacobian(s)
            }
            fn input_bounds(&self) -> Vec<(f64, f64)> {
                self.0.input_bounds()
            }
            fn idle_input(&self) -> Vec<f64> {
                self.0.idle_input()
            }
            fn dp_max(&self) -> f64 {
                self.0.dp_max()
            }
        }
        let (a_fd, b_fd) = Fd(m).step_jacobians(&x, &u);
        for (got, want) in a.iter().zip(a_fd.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-6);
        }
        for (got, want) in b.iter().zip(b_fd.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-6);
        }
    }

    #[test]
    fn input_validation() {
        let m = model();
        assert!(m.check_input(&[1.5, -1.5]).is_ok());
        assert!(matches!(
            m.check_input(&[1.6, 0.0]),
            Err(ModelError::InputOutOfBounds { index: 0 })
        ));
        assert!(matches!(
            m.check_input(&[0.0, 2.0]),
            Err(ModelError::InputOutOfBounds { index: 1 })
        ));
        assert!(matches!(
            m.check_input(&[0.0]),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }
}
