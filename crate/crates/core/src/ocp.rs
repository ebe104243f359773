//! Tunnel-tracking optimal controller.
//!
//! The sampled-time problem lives on the extended state `(x, s)`: the path
//! coordinate `s` joins the robot state and its increment `ds` joins the
//! input, so progress along the reference curve is a decision variable. The
//! cost rewards terminal progress and penalizes terminal tracking error and
//! input variation; the one nonlinear constraint keeps the robot output
//! inside the tunnel `B(r(s), tunnel_radius)` around the path at every
//! predicted step. Holding still with `ds = 0` is feasible whenever the path
//! anchor lies inside the tunnel, so a valid fallback exists before the
//! solver runs and safety never depends on solver quality.
//!
//! The solver is a dense single-shooting method sized for a handful of
//! variables: an augmented-Lagrangian outer loop on the tunnel constraints
//! around a spectral projected-gradient inner loop, with gradients from one
//! adjoint sweep through the model Jacobians and the polynomial path. It is
//! deterministic, allocation-only, and clock-free; real-time callers bound
//! it through [`Budget`].

use crate::budget::Budget;
use crate::geometry::Point;
use crate::models::RobotModel;
use crate::refpath::PolyPath;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Squared-norm inset keeping iterates strictly inside the open tunnel ball.
const TUNNEL_MARGIN: f64 = 1e-9;
/// Extra slack over the inset a candidate may use and still count feasible.
const FEAS_SLACK: f64 = TUNNEL_MARGIN / 2.0;
/// Outer multiplier cycles across all starts.
const OUTER_CAP: usize = 100;
/// Outer multiplier cycles per start.
const START_OUTERS: usize = 12;
/// Projected-gradient steps per outer cycle.
const INNER_CAP: usize = 25;
/// Convergence threshold on the unit projected-gradient step.
const PG_TOL: f64 = 1e-9;
const BETA0: f64 = 1e3;
const BETA_MAX: f64 = 1e8;
const BETA_GROW: f64 = 10.0;
/// Violation must shrink by this factor per cycle or the penalty grows.
const VIOL_SHRINK: f64 = 0.25;
const ARMIJO: f64 = 1e-4;
const LS_MAX: usize = 30;
const BB_MIN: f64 = 1e-10;
const BB_MAX: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub enum OcpError {
    /// The path anchor is not strictly inside the tunnel, so not even the
    /// hold-still solution is feasible. Signals a clearance accounting bug
    /// upstream, never a solver failure.
    TunnelViolated { distance: f64, tunnel_radius: f64 },
    InvalidInput(&'static str),
}

impl fmt::Display for OcpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OcpError::TunnelViolated { distance, tunnel_radius } => write!(
                f,
                "path anchor at distance {distance} exceeds tunnel radius {tunnel_radius}"
            ),
            OcpError::InvalidInput(what) => write!(f, "invalid input: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OcpError {}

/// Weights and limits of the tracking problem.
///
/// `input_rate_weight` is a row-major `input_dim x input_dim` matrix; it must
/// be symmetric positive semidefinite (zero switches the variation penalty
/// off). `tunnel_radius` is the path clearance minus the certified fit error,
/// so staying inside the tunnel keeps the robot clear of every obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpParams {
    pub horizon: usize,
    pub progress_weight: f64,
    pub terminal_error_weight: f64,
    pub input_rate_weight: Vec<f64>,
    pub tunnel_radius: f64,
}

impl Default for OcpParams {
    /// Stock tuning for the two-input drives shipped with the crate.
    fn default() -> OcpParams {
        OcpParams {
            horizon: 5,
            progress_weight: 500.0,
            terminal_error_weight: 100.0,
            input_rate_weight: vec![250.0, 0.0, 0.0, 2.5],
            tunnel_radius: 0.3,
        }
    }
}

impl OcpParams {
    pub fn validate(&self, input_dim: usize) -> Result<(), OcpError> {
        if self.horizon == 0 {
            return Err(OcpError::InvalidInput("horizon must be at least 1"));
        }
        if !(self.progress_weight >= 0.0 && self.progress_weight.is_finite()) {
            return Err(OcpError::InvalidInput("progress weight must be finite and nonnegative"));
        }
        if !(self.terminal_error_weight >= 0.0 && self.terminal_error_weight.is_finite()) {
            return Err(OcpError::InvalidInput(
                "terminal error weight must be finite and nonnegative",
            ));
        }
        if !(self.tunnel_radius > 0.0 && self.tunnel_radius.is_finite()) {
            return Err(OcpError::InvalidInput("tunnel radius must be positive"));
        }
        let m = input_dim;
        let r = &self.input_rate_weight;
        if r.len() != m * m {
            return Err(OcpError::InvalidInput("input rate weight has the wrong shape"));
        }
        let scale = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !scale.is_finite() {
            return Err(OcpError::InvalidInput("input rate weight must be finite"));
        }
        let tol = 1e-12 * (1.0 + scale);
        for i in 0..m {
            for j in (i + 1)..m {
                if (r[i * m + j] - r[j * m + i]).abs() > tol {
                    return Err(OcpError::InvalidInput("input rate weight must be symmetric"));
                }
            }
        }
        if !is_psd(r, m, tol) {
            return Err(OcpError::InvalidInput(
                "input rate weight must be positive semidefinite",
            ));
        }
        Ok(())
    }
}

/// LDL factorization with a zero-pivot guard; rejects indefinite matrices.
fn is_psd(r: &[f64], m: usize, tol: f64) -> bool {
    let mut a = r.to_vec();
    for k in 0..m {
        let d = a[k * m + k];
        if d < -tol {
            return false;
        }
        if d <= tol {
            // Singular direction: its whole row must vanish too.
            for j in (k + 1)..m {
                if a[k * m + j].abs() > tol {
                    return false;
                }
            }
            continue;
        }
        for i in (k + 1)..m {
            let l = a[i * m + k] / d;
            for j in (k + 1)..m {
                a[i * m + j] -= l * a[k * m + j];
            }
        }
    }
    true
}

/// Robot state joined with the path coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub state: Vec<f64>,
    pub s: f64,
}

/// Robot input joined with the path-coordinate increment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedInput {
    pub input: Vec<f64>,
    pub ds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Inner iteration converged on a feasible point.
    Optimal,
    /// Iteration or time budget ran out; the best feasible iterate is kept.
    MaxIter,
    /// The hold-still solution was returned.
    FallbackTrivial,
}

/// Feasible plan over the horizon.
///
/// `predicted_states` has one more entry than `inputs`; entry 0 is the
/// measured state with `s = 0`. `constraint_residual` is the worst violation
/// across dynamics defects, input and coordinate boxes, and the tunnel
/// (closed-ball reading), and is at most 1e-6 for every value this module
/// returns.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpSolution {
    pub inputs: Vec<ExtendedInput>,
    pub predicted_states: Vec<ExtendedState>,
    pub cost: f64,
    pub status: SolveStatus,
    pub constraint_residual: f64,
}

/// First robot input of the plan; the coordinate increment stays internal.
pub fn extract_control(sol: &OcpSolution) -> &[f64] {
    &sol.inputs[0].input
}

/// Hold-still plan: idle inputs, zero path advance.
///
/// Feasible whenever the anchor `r(0)` lies strictly inside the tunnel
/// around the current output, which the workspace stage guarantees. The cost
/// is the terminal anchor error plus the variation penalty of switching from
/// `prev_input` to idle.
pub fn trivial_solution<M: RobotModel>(
    model: &M,
    state: &[f64],
    prev_input: &[f64],
    anchor: Point,
    params: &OcpParams,
) -> Result<OcpSolution, OcpError> {
    params.validate(model.input_dim())?;
    if state.len() != model.state_dim() {
        return Err(OcpError::InvalidInput("state length does not match the model"));
    }
    if prev_input.len() != model.input_dim() {
        return Err(OcpError::InvalidInput("previous input length does not match the model"));
    }
    let distance = anchor.dist(model.output(state));
    if !(distance * distance <= params.tunnel_radius * params.tunnel_radius - TUNNEL_MARGIN) {
        return Err(OcpError::TunnelViolated { distance, tunnel_radius: params.tunnel_radius });
    }

    let idle = model.idle_input();
    let mut states = Vec::with_capacity(params.horizon + 1);
    states.push(ExtendedState { state: state.to_vec(), s: 0.0 });
    let mut x = state.to_vec();
    for _ in 0..params.horizon {
        // Idle freezes the output; internal state may still drift.
        x = model.step(&x, &idle);
        states.push(ExtendedState { state: x.clone(), s: 0.0 });
    }
    let e = anchor - model.output(&states[params.horizon].state);
    let du: Vec<f64> = idle.iter().zip(prev_input).map(|(a, b)| a - b).collect();
    let cost = params.terminal_error_weight * e.norm2() + quad(&params.input_rate_weight, &du);
    let mut sol = OcpSolution {
        inputs: vec![ExtendedInput { input: idle, ds: 0.0 }; params.horizon],
        predicted_states: states,
        cost,
        status: SolveStatus::FallbackTrivial,
        constraint_residual: 0.0,
    };
    sol.constraint_residual = max_violation(model, |_| anchor, params, &sol);
    Ok(sol)
}

/// Tracks the path from `state`, never returning anything worse than the
/// hold-still plan.
///
/// `prev_input` is the input applied at the previous sample (idle before the
/// first); the variation penalty is anchored to it. `warm_start` seeds the
/// first solver start and is treated as a guess only. The budget is checked
/// between iterations; on exhaustion the best feasible iterate so far, or
/// the hold-still plan, is returned. The only errors are malformed inputs
/// and a tunnel accounting failure; solver quality never surfaces as an
/// error.
pub fn solve<M: RobotModel, B: Budget>(
    model: &M,
    state: &[f64],
    prev_input: &[f64],
    path: &PolyPath,
    params: &OcpParams,
    warm_start: Option<&OcpSolution>,
    budget: B,
) -> Result<OcpSolution, OcpError> {
    params.validate(model.input_dim())?;
    let (lo, hi) = path.domain();
    if lo != 0.0 || (hi - params.horizon as f64).abs() > 1e-9 {
        return Err(OcpError::InvalidInput("path domain must match the horizon"));
    }
    let anchor = path.eval(0.0);
    let trivial = trivial_solution(model, state, prev_input, anchor, params)?;

    let nn = params.horizon;
    let m = model.input_dim();
    let prob = Problem { model, x0: state, prev: prev_input, path, params };
    let bounds = prob.box_bounds();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(warm) = warm_start {
        if warm.inputs.len() == nn && warm.inputs.iter().all(|i| i.input.len() == m) {
            let mut mu = Vec::with_capacity(nn * (m + 1));
            for i in &warm.inputs {
                mu.extend_from_slice(&i.input);
                mu.push(i.ds);
            }
            starts.push(mu);
        }
    }
    // Ride the path at full rate, and hold still; the penalty loop pulls
    // either toward the constrained optimum.
    let mut eager = Vec::with_capacity(nn * (m + 1));
    let mut idle_mu = Vec::with_capacity(nn * (m + 1));
    let idle = model.idle_input();
    for _ in 0..nn {
        eager.extend_from_slice(&idle);
        eager.push(1.0);
        idle_mu.extend_from_slice(&idle);
        idle_mu.push(0.0);
    }
    starts.push(eager);
    starts.push(idle_mu);
    // One bang start per input bound. An all-idle plan can be a saddle:
    // a drive facing away from the path has zero output sensitivity to
    // its heading rate at zero speed, so no gradient start escapes.
    for (j, &(lo, hi)) in model.input_bounds().iter().enumerate() {
        for bound in [lo, hi] {
            if (bound - idle[j]).abs() < 1e-12 {
                continue;
            }
            let mut mu = Vec::with_capacity(nn * (m + 1));
            for _ in 0..nn {
                let mut u = idle.clone();
                u[j] = bound;
                mu.extend_from_slice(&u);
                mu.push(0.0);
            }
            starts.push(mu);
        }
    }

    let mut outers_used = 0usize;
    let mut best: Option<(f64, Vec<f64>, SolveStatus)> = None;
    for mu0 in starts {
        if outers_used >= OUTER_CAP || budget.exhausted() {
            break;
        }
        run_start(&prob, &bounds, mu0, &budget, &mut outers_used, &mut best);
    }

    // Whatever budget is left goes into re-polishing the incumbent, fresh
    // multipliers each round. Stop once a round stalls.
    while outers_used < OUTER_CAP && !budget.exhausted() {
        let Some((cost_before, mu0, status)) = best.clone() else {
            break;
        };
        if status == SolveStatus::Optimal {
            break;
        }
        run_start(&prob, &bounds, mu0, &budget, &mut outers_used, &mut best);
        let stalled = best.as_ref().is_some_and(|(c, _, s)| {
            *s != SolveStatus::Optimal && *c >= cost_before - 1e-12 * (1.0 + cost_before.abs())
        });
        if stalled {
            break;
        }
    }

    match best {
        Some((cost, mu, status)) if cost < trivial.cost => {
            let roll = prob.rollout(&mu);
            let mut sol = prob.solution_from(&mu, &roll, status);
            debug_assert!((sol.cost - cost).abs() <= 1e-12 * (1.0 + cost.abs()));
            sol.constraint_residual = max_violation(model, |s| path.eval(s), params, &sol);
            Ok(sol)
        }
        _ => Ok(trivial),
    }
}

/// Drops the executed input, repeats the last one, and rewinds the path
/// coordinate by the consumed amount. The result is an initial guess only:
/// the state entries are stale and cost and residual are copied through.
pub fn shift_warm_start(prev: &OcpSolution, path_shift: f64) -> OcpSolution {
    let nn = prev.inputs.len();
    let hi = nn as f64;
    let mut inputs = prev.inputs.clone();
    if nn > 1 {
        inputs.rotate_left(1);
        inputs[nn - 1] = inputs[nn - 2].clone();
    }
    let predicted_states = prev
        .predicted_states
        .iter()
        .map(|st| ExtendedState {
            state: st.state.clone(),
            s: (st.s - path_shift).max(0.0).min(hi),
        })
        .collect();
    OcpSolution {
        inputs,
        predicted_states,
        cost: prev.cost,
        status: prev.status,
        constraint_residual: prev.constraint_residual,
    }
}

/// Worst violation of the plan against the closed constraint set.
fn max_violation<M: RobotModel>(
    model: &M,
    reference: impl Fn(f64) -> Point,
    params: &OcpParams,
    sol: &OcpSolution,
) -> f64 {
    let nf = params.horizon as f64;
    let bounds = model.input_bounds();
    let mut v = 0.0f64;
    for st in &sol.predicted_states {
        v = v.max(-st.s).max(st.s - nf);
    }
    for inp in &sol.inputs {
        for (&u, &(lo, hi)) in inp.input.iter().zip(&bounds) {
            v = v.max(lo - u).max(u - hi);
        }
        v = v.max(-inp.ds).max(inp.ds - 1.0);
    }
    for (i, inp) in sol.inputs.iter().enumerate() {
        let cur = &sol.predicted_states[i];
        let next = &sol.predicted_states[i + 1];
        let fx = model.step(&cur.state, &inp.input);
        for (a, b) in fx.iter().zip(&next.state) {
            v = v.max((a - b).abs());
        }
        v = v.max((cur.s + inp.ds - next.s).abs());
    }
    for st in &sol.predicted_states[1..] {
        let e = reference(st.s) - model.output(&st.state);
        v = v.max(e.norm() - params.tunnel_radius);
    }
    v
}

fn quad(r: &[f64], v: &[f64]) -> f64 {
    let m = v.len();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            acc += v[i] * r[i * m + j] * v[j];
        }
    }
    acc
}

/// `out += 2 c R v` for symmetric `R`.
fn add_scaled_rv(out: &mut [f64], r: &[f64], v: &[f64], c: f64) {
    let m = v.len();
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            acc += r[i * m + j] * v[j];
        }
        out[i] += 2.0 * c * acc;
    }
}

struct Problem<'a, M: RobotModel> {
    model: &'a M,
    x0: &'a [f64],
    prev: &'a [f64],
    path: &'a PolyPath,
    params: &'a OcpParams,
}

struct Roll {
    xs: Vec<Vec<f64>>,
    ss: Vec<f64>,
    /// Tracking errors at states 1..=N.
    es: Vec<Point>,
    /// Tunnel constraint values, `|e|^2 - (radius^2 - margin)`, negative
    /// when satisfied.
    gs: Vec<f64>,
    /// Whether state i sits on the saturated end of the path coordinate;
    /// its derivatives in the preceding inputs are then zero.
    sat: Vec<bool>,
    cost: f64,
}

impl Roll {
    fn max_g(&self) -> f64 {
        self.gs.iter().fold(0.0f64, |a, &g| a.max(g))
    }
}

impl<'a, M: RobotModel> Problem<'a, M> {
    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn dim(&self) -> usize {
        self.params.horizon * (self.model.input_dim() + 1)
    }

    fn cset(&self) -> f64 {
        self.params.tunnel_radius * self.params.tunnel_radius - TUNNEL_MARGIN
    }

    fn box_bounds(&self) -> Vec<(f64, f64)> {
        let ub = self.model.input_bounds();
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.horizon() {
            out.extend_from_slice(&ub);
            out.push((0.0, 1.0));
        }
        out
    }

    fn rollout(&self, mu: &[f64]) -> Roll {
        let (nn, m) = (self.horizon(), self.model.input_dim());
        let cset = self.cset();
        let cap = self.path.s_valid();
        let mut xs = Vec::with_capacity(nn + 1);
        let mut ss = Vec::with_capacity(nn + 1);
        let mut es = Vec::with_capacity(nn);
        let mut gs = Vec::with_capacity(nn);
        let mut sat = Vec::with_capacity(nn + 1);
        xs.push(self.x0.to_vec());
        ss.push(0.0);
        sat.push(false);
        let mut rate = 0.0;
        let mut u_prev = self.prev;
        for i in 0..nn {
            let base = i * (m + 1);
            let u = &mu[base..base + m];
            let ds = mu[base + m];
            let x = self.model.step(&xs[i], u);
            // Saturate at the last integrated coordinate: a plan may not bank
            // progress by riding truncation padding.
            let s = (ss[i] + ds).min(cap);
            let e = self.path.eval(s) - self.model.output(&x);
            xs.push(x);
            ss.push(s);
            sat.push(ss[i] + ds > cap);
            es.push(e);
            gs.push(e.norm2() - cset);
            let du: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
            rate += quad(&self.params.input_rate_weight, &du);
            u_prev = &mu[base..base + m];
        }
        let cost = -self.params.progress_weight * ss[nn]
            + self.params.terminal_error_weight * es[nn - 1].norm2()
            + rate;
        Roll { xs, ss, es, gs, sat, cost }
    }

    /// Objective plus the augmented-Lagrangian terms for the tunnel rows.
    fn merit(&self, roll: &Roll, lam: &[f64], beta: f64) -> f64 {
        let mut phi = roll.cost;
        for (&g, &l) in roll.gs.iter().zip(lam) {
            let t = (l + beta * g).max(0.0);
            phi += (t * t - l * l) / (2.0 * beta);
        }
        phi
    }

    /// Merit value and its gradient by one adjoint sweep.
    fn merit_grad(&self, mu: &[f64], lam: &[f64], beta: f64) -> (f64, Vec<f64>, Roll) {
        let (nn, m, n) = (self.horizon(), self.model.input_dim(), self.model.state_dim());
        let roll = self.rollout(mu);
        let phi = self.merit(&roll, lam, beta);
        // Active multiplier estimates; also d(merit)/d(g_i).
        let sig: Vec<f64> =
            roll.gs.iter().zip(lam).map(|(&g, &l)| (l + beta * g).max(0.0)).collect();

        let mut grad = vec![0.0; self.dim()];
        let ce = self.params.terminal_error_weight;
        let e_n = roll.es[nn - 1];
        let h_n = self.model.output_jacobian(&roll.xs[nn]);
        let w_n = 2.0 * (ce + sig[nn - 1]);
        let mut lx = vec![0.0; n];
        for j in 0..n {
            lx[j] = -w_n * (h_n[j] * e_n.x + h_n[n + j] * e_n.y);
        }
        let mut ls =
            -self.params.progress_weight + w_n * e_n.dot(self.path.deriv(roll.ss[nn]));

        for i in (0..nn).rev() {
            let base = i * (m + 1);
            let u = &mu[base..base + m];
            let (a, b) = self.model.step_jacobians(&roll.xs[i], u);
            for j in 0..m {
                let mut acc = 0.0;
                for row in 0..n {
                    acc += b[row * m + j] * lx[row];
                }
                grad[base + j] = acc;
            }
            // A saturated coordinate is flat in everything upstream.
            let ls_through = if roll.sat[i + 1] { 0.0 } else { ls };
            grad[base + m] = ls_through;
            if i >= 1 {
                let mut lx_next = vec![0.0; n];
                for j in 0..n {
                    let mut acc = 0.0;
                    for row in 0..n {
                        acc += a[row * n + j] * lx[row];
                    }
                    lx_next[j] = acc;
                }
                let w = 2.0 * sig[i - 1];
                let e = roll.es[i - 1];
                let h = self.model.output_jacobian(&roll.xs[i]);
                for j in 0..n {
                    lx_next[j] -= w * (h[j] * e.x + h[n + j] * e.y);
                }
                ls = ls_through + w * e.dot(self.path.deriv(roll.ss[i]));
                lx = lx_next;
            }
        }
        // Variation penalty acts on the inputs directly.
        let r = &self.params.input_rate_weight;
        for i in 0..nn {
            let base = i * (m + 1);
            let u_prev = if i == 0 { self.prev } else { &mu[base - (m + 1)..base - 1] };
            let du: Vec<f64> = mu[base..base + m].iter().zip(u_prev).map(|(a, b)| a - b).collect();
            add_scaled_rv(&mut grad[base..base + m], r, &du, 1.0);
            if i + 1 < nn {
                let nbase = base + m + 1;
                let du_next: Vec<f64> = mu[nbase..nbase + m]
                    .iter()
                    .zip(&mu[base..base + m])
                    .map(|(a, b)| a - b)
                    .collect();
                add_scaled_rv(&mut grad[base..base + m], r, &du_next, -1.0);
            }
        }
        (phi, grad, roll)
    }

    fn solution_from(&self, mu: &[f64], roll: &Roll, status: SolveStatus) -> OcpSolution {
        let (nn, m) = (self.horizon(), self.model.input_dim());
        let inputs = (0..nn)
            .map(|i| {
                let base = i * (m + 1);
                ExtendedInput { input: mu[base..base + m].to_vec(), ds: mu[base + m] }
            })
            .collect();
        let predicted_states = roll
            .xs
            .iter()
            .zip(&roll.ss)
            .map(|(x, &s)| ExtendedState { state: x.clone(), s })
            .collect();
        OcpSolution {
            inputs,
            predicted_states,
            cost: roll.cost,
            status,
            constraint_residual: 0.0,
        }
    }
}

fn project(mu: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in mu.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn note_best(best: &mut Option<(f64, Vec<f64>, SolveStatus)>, roll: &Roll, mu: &[f64]) {
    if roll.max_g() <= FEAS_SLACK && best.as_ref().is_none_or(|(c, _, _)| roll.cost < *c) {
        let status = best.as_ref().map_or(SolveStatus::MaxIter, |(_, _, s)| *s);
        *best = Some((roll.cost, mu.to_vec(), status));
    }
}

/// One augmented-Lagrangian run from `mu0`; feasible improvements land in
/// `best` together with the run outcome.
fn run_start<M: RobotModel, B: Budget>(
    prob: &Problem<'_, M>,
    bounds: &[(f64, f64)],
    mut mu: Vec<f64>,
    budget: &B,
    outers_used: &mut usize,
    best: &mut Option<(f64, Vec<f64>, SolveStatus)>,
) {
    project(&mut mu, bounds);
    let nn = prob.horizon();
    let mut lam = vec![0.0; nn];
    let mut beta = BETA0;
    let mut prev_viol = f64::INFINITY;
    let mut run_best: Option<(f64, Vec<f64>, SolveStatus)> = None;
    let mut status = SolveStatus::MaxIter;
    for _ in 0..START_OUTERS {
        if *outers_used >= OUTER_CAP || budget.exhausted() {
            break;
        }
        *outers_used += 1;
        let converged = spg(prob, bounds, &mut mu, &lam, beta, budget, &mut run_best);
        let roll = prob.rollout(&mu);
        note_best(&mut run_best, &roll, &mu);
        let viol = roll.max_g();
        if converged && viol <= FEAS_SLACK {
            status = SolveStatus::Optimal;
            break;
        }
        for (l, &g) in lam.iter_mut().zip(&roll.gs) {
            *l = (*l + beta * g).max(0.0);
        }
        if viol > VIOL_SHRINK * prev_viol {
            beta = (beta * BETA_GROW).min(BETA_MAX);
        }
        prev_viol = viol;
    }
    if let Some((cost, mu_best, _)) = run_best {
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            *best = Some((cost, mu_best, status));
        }
    }
}

/// Spectral projected gradient on the merit function. Returns true when the
/// unit projected step drops below tolerance.
fn spg<M: RobotModel, B: Budget>(
    prob: &Problem<'_, M>,
    bounds: &[(f64, f64)],
    mu: &mut Vec<f64>,
    lam: &[f64],
    beta: f64,
    budget: &B,
    best: &mut Option<(f64, Vec<f64>, SolveStatus)>,
) -> bool {
    let (mut phi, mut grad, roll) = prob.merit_grad(mu, lam, beta);
    note_best(best, &roll, mu);
    let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut alpha = if gmax > 0.0 { (1.0 / gmax).clamp(BB_MIN, BB_MAX) } else { 1.0 };

    for _ in 0..INNER_CAP {
        if budget.exhausted() {
            return false;
        }
        let crit = mu
            .iter()
            .zip(&grad)
            .zip(bounds)
            .fold(0.0f64, |a, ((&v, &g), &(lo, hi))| a.max(((v - g).clamp(lo, hi) - v).abs()));
        if crit <= PG_TOL {
            return true;
        }

        let dir: Vec<f64> = mu
            .iter()
            .zip(&grad)
            .zip(bounds)
            .map(|((&v, &g), &(lo, hi))| (v - alpha * g).clamp(lo, hi) - v)
            .collect();
        let dmax = dir.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if dmax <= 1e-15 {
            return true;
        }
        let gd: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..LS_MAX {
            let cand: Vec<f64> = mu.iter().zip(&dir).map(|(v, d)| v + t * d).collect();
            let roll_c = prob.rollout(&cand);
            let phi_c = prob.merit(&roll_c, lam, beta);
            if phi_c <= phi + ARMIJO * t * gd {
                note_best(best, &roll_c, &cand);
                let (phi_n, grad_n, _) = prob.merit_grad(&cand, lam, beta);
                let mut sty = 0.0;
                let mut sts = 0.0;
                for k in 0..cand.len() {
                    let sk = cand[k] - mu[k];
                    sty += sk * (grad_n[k] - grad[k]);
                    sts += sk * sk;
                }
                alpha = if sty > 0.0 { (sts / sty).clamp(BB_MIN, BB_MAX) } else { BB_MAX };
                *mu = cand;
                phi = phi_n;
                grad = grad_n;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{Spent, Unlimited};
    use crate::geometry::Point;
    use crate::models::{RobotModel, Unicycle};
    use crate::refpath::{fit_poly, integrate_path, PathSamples, PolyPath};
    use crate::starworld::StarWorld;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use core::f64::consts::FRAC_PI_2;

    fn model() -> Unicycle {
        Unicycle::new(0.2, 0.2, 1.5, 1.5)
    }

    fn params(tunnel: f64) -> OcpParams {
        OcpParams { tunnel_radius: tunnel, ..OcpParams::default() }
    }

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

    /// Straight path along +x starting at the origin, fitted exactly.
    fn straight_path() -> PolyPath {
        let world = empty_world(Point::ZERO, Point::new(10.0, 0.0));
        let path = integrate_path(world.r0, world.rg, &world, 5, 0.3, Unlimited).unwrap();
        fit_poly(&path, 10, 0.3).unwrap()
    }

    /// Constant path pinned at `p`.
    fn constant_path(p: Point) -> PolyPath {
        let world = empty_world(p, p);
        let path = integrate_path(p, p, &world, 5, 0.3, Unlimited).unwrap();
        fit_poly(&path, 10, 0.3).unwrap()
    }

    /// Circular-arc samples at unit path speed, for a curved fit.
    fn arc_path() -> PolyPath {
        let radius = 2.0;
        let rate = 0.3 / radius;
        let n = 100usize;
        let s_grid: Vec<f64> = (0..=n).map(|i| 5.0 * i as f64 / n as f64).collect();
        let points = s_grid
            .iter()
            .map(|&s| Point::new(radius * (rate * s).cos(), radius * (rate * s).sin()))
            .collect();
        let samples = PathSamples {
            s_grid,
            points,
            dp_max: 0.3,
            horizon: 5,
            truncated_at: None,
            goal_reached_at: None,
        };
        fit_poly(&samples, 10, 0.3).unwrap()
    }

    fn idle2() -> Vec<f64> {
        alloc::vec![0.0, 0.0]
    }

    #[test]
    fn params_are_validated() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, 0.0];
        let bad = |p: OcpParams| {
            trivial_solution(&m, &x, &idle2(), Point::ZERO, &p).unwrap_err()
        };
        assert!(matches!(
            bad(OcpParams { horizon: 0, ..OcpParams::default() }),
            OcpError::InvalidInput(_)
        ));
        assert!(matches!(
            bad(OcpParams { tunnel_radius: 0.0, ..OcpParams::default() }),
            OcpError::InvalidInput(_)
        ));
        assert!(matches!(
            bad(OcpParams { progress_weight: -1.0, ..OcpParams::default() }),
            OcpError::InvalidInput(_)
        ));
        assert!(matches!(
            bad(OcpParams {
                input_rate_weight: alloc::vec![1.0, 2.0, 0.0, 1.0],
                ..OcpParams::default()
            }),
            OcpError::InvalidInput(_)
        ));
        assert!(matches!(
            bad(OcpParams {
                input_rate_weight: alloc::vec![1.0, 3.0, 3.0, 1.0],
                ..OcpParams::default()
            }),
            OcpError::InvalidInput(_)
        ));
        assert!(matches!(
            bad(OcpParams { input_rate_weight: alloc::vec![1.0], ..OcpParams::default() }),
            OcpError::InvalidInput(_)
        ));
        // Zero variation weight is allowed.
        let p = OcpParams { input_rate_weight: alloc::vec![0.0; 4], ..OcpParams::default() };
        assert!(p.validate(2).is_ok());
        // Dimension mismatches are rejected before any arithmetic.
        assert!(matches!(
            trivial_solution(&m, &[0.0; 2], &idle2(), Point::ZERO, &OcpParams::default()),
            Err(OcpError::InvalidInput(_))
        ));
        assert!(matches!(
            trivial_solution(&m, &x, &[0.0; 3], Point::ZERO, &OcpParams::default()),
            Err(OcpError::InvalidInput(_))
        ));
    }

    #[test]
    fn trivial_holds_still_and_is_free() {
        let m = model();
        let x = alloc::vec![0.4, -0.7, 1.2];
        let sol =
            trivial_solution(&m, &x, &idle2(), Point::new(0.4, -0.7), &params(0.15)).unwrap();
        assert_eq!(sol.cost, 0.0);
        assert_eq!(sol.status, SolveStatus::FallbackTrivial);
        assert_eq!(sol.constraint_residual, 0.0);
        assert_eq!(sol.inputs.len(), 5);
        assert_eq!(sol.predicted_states.len(), 6);
        for inp in &sol.inputs {
            assert_eq!(inp.input, idle2());
            assert_eq!(inp.ds, 0.0);
        }
        for st in &sol.predicted_states {
            assert_eq!(m.output(&st.state), Point::new(0.4, -0.7));
            assert_eq!(st.s, 0.0);
        }
        assert_eq!(extract_control(&sol), &[0.0, 0.0]);
    }

    #[test]
    fn trivial_cost_is_the_weighted_anchor_error() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, 0.0];
        let sol =
            trivial_solution(&m, &x, &idle2(), Point::new(0.1, 0.0), &params(0.15)).unwrap();
        assert_relative_eq!(sol.cost, 1.0, epsilon = 1e-12);
        assert_eq!(sol.constraint_residual, 0.0);
        // Switching away from a nonzero applied input is charged by R.
        let sol = trivial_solution(&m, &x, &[0.5, 0.0], Point::new(0.1, 0.0), &params(0.15))
            .unwrap();
        assert_relative_eq!(sol.cost, 1.0 + 250.0 * 0.25, epsilon = 1e-12);
    }

    #[test]
    fn trivial_rejected_on_the_tunnel_rim() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, 0.0];
        let err = trivial_solution(&m, &x, &idle2(), Point::new(0.15, 0.0), &params(0.15))
            .unwrap_err();
        match err {
            OcpError::TunnelViolated { distance, tunnel_radius } => {
                assert_relative_eq!(distance, 0.15, epsilon = 1e-15);
                assert_relative_eq!(tunnel_radius, 0.15, epsilon = 1e-15);
            }
            other => panic!("expected tunnel violation, got {other:?}"),
        }
        // Just inside passes.
        assert!(
            trivial_solution(&m, &x, &idle2(), Point::new(0.1499, 0.0), &params(0.15)).is_ok()
        );
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let m = model();
        let path = arc_path();
        let x0 = alloc::vec![1.9, 0.1, 1.4];
        let prev = alloc::vec![0.3, -0.2];
        let p = params(0.2);
        let prob = Problem { model: &m, x0: &x0, prev: &prev, path: &path, params: &p };
        let mu = alloc::vec![
            0.8, 0.3, 0.6, //
            1.1, -0.4, 0.9, //
            0.5, 0.2, 0.3, //
            0.9, -0.1, 0.7, //
            1.2, 0.4, 0.5,
        ];
        let lam = alloc::vec![0.4, 0.0, 1.3, 0.2, 0.9];
        let beta = 37.0;
        let (_, grad, roll) = prob.merit_grad(&mu, &lam, beta);
        // Away from the penalty kink, so central differences are valid.
        for (g, l) in roll.gs.iter().zip(&lam) {
            assert!((g + l / beta).abs() > 1e-3, "test point sits on a kink");
        }
        let h = 1e-6;
        for k in 0..mu.len() {
            let mut lo = mu.clone();
            let mut hi = mu.clone();
            lo[k] -= h;
            hi[k] += h;
            let f_lo = prob.merit(&prob.rollout(&lo), &lam, beta);
            let f_hi = prob.merit(&prob.rollout(&hi), &lam, beta);
            let fd = (f_hi - f_lo) / (2.0 * h);
            assert_abs_diff_eq!(grad[k], fd, epsilon = 1e-4 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn goal_hold_rides_the_path_coordinate_to_the_end() {
        let m = model();
        let x = alloc::vec![0.4, -0.7, 1.2];
        let path = constant_path(Point::new(0.4, -0.7));
        let sol = solve(&m, &x, &idle2(), &path, &params(0.15), None, Unlimited).unwrap();
        assert_eq!(sol.cost, -2500.0);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.predicted_states.last().unwrap().s, 5.0);
        assert!(sol.constraint_residual <= 1e-6);
        assert_eq!(extract_control(&sol), &[0.0, 0.0]);
    }

    #[test]
    fn straight_run_beats_the_full_throttle_candidate() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, 0.0];
        let path = straight_path();
        let p = params(0.15);

        // Full-throttle candidate: v at the cap, ds = 1. Its cost is an
        // independent upper bound for the solver.
        let mut state = x.clone();
        let mut cand_cost = 0.0;
        let mut u_prev = idle2();
        let mut s = 0.0;
        for _ in 0..5 {
            let u = alloc::vec![1.5, 0.0];
            state = m.step(&state, &u);
            s += 1.0;
            let e = path.eval(s) - m.output(&state);
            assert!(e.norm() < p.tunnel_radius, "candidate must be feasible");
            let du: Vec<f64> = u.iter().zip(&u_prev).map(|(a, b)| a - b).collect();
            cand_cost += quad(&p.input_rate_weight, &du);
            u_prev = u;
            if s == 5.0 {
                cand_cost += p.terminal_error_weight * e.norm2();
            }
        }
        cand_cost += -p.progress_weight * s;
        assert_relative_eq!(cand_cost, -1937.5, epsilon = 1e-6);

        let sol = solve(&m, &x, &idle2(), &path, &p, None, Unlimited).unwrap();
        assert!(
            sol.cost <= cand_cost + 1e-9,
            "solver cost {} above candidate {}",
            sol.cost,
            cand_cost
        );
        assert!(sol.constraint_residual <= 1e-6);
        let trivial =
            trivial_solution(&m, &x, &idle2(), path.eval(0.0), &p).unwrap();
        assert!(sol.cost <= trivial.cost + 1e-9);
        // Strictly inside the tunnel at every predicted step.
        for st in &sol.predicted_states[1..] {
            let e = path.eval(st.s) - m.output(&st.state);
            assert!(e.norm() < p.tunnel_radius);
        }
        // Identical calls agree bit for bit.
        let again = solve(&m, &x, &idle2(), &path, &p, None, Unlimited).unwrap();
        assert_eq!(sol.cost, again.cost);
        assert_eq!(sol.inputs, again.inputs);
    }

    #[test]
    fn misaligned_start_advances_slowly_but_feasibly() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, FRAC_PI_2];
        let path = straight_path();
        let p = params(0.15);
        let sol = solve(&m, &x, &idle2(), &path, &p, None, Unlimited).unwrap();
        assert!(sol.constraint_residual <= 1e-6);
        let trivial = trivial_solution(&m, &x, &idle2(), path.eval(0.0), &p).unwrap();
        assert!(sol.cost <= trivial.cost + 1e-9);
        // Facing away from the path caps the reachable coordinate well
        // below the horizon.
        let s_n = sol.predicted_states.last().unwrap().s;
        assert!(s_n < 3.5, "expected limited progress, got s_N = {s_n}");
        let bounds = m.input_bounds();
        for inp in &sol.inputs {
            for (&u, &(lo, hi)) in inp.input.iter().zip(&bounds) {
                assert!(u >= lo - 1e-12 && u <= hi + 1e-12);
            }
            assert!(inp.ds >= -1e-12 && inp.ds <= 1.0 + 1e-12);
        }
        for st in &sol.predicted_states {
            assert!(st.s >= -1e-12 && st.s <= 5.0 + 1e-12);
        }
    }

    #[test]
    fn spent_budget_falls_back_to_the_trivial_solution() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, 0.0];
        let path = straight_path();
        let p = params(0.15);
        let sol = solve(&m, &x, &idle2(), &path, &p, None, Spent).unwrap();
        let trivial = trivial_solution(&m, &x, &idle2(), path.eval(0.0), &p).unwrap();
        assert_eq!(sol, trivial);
        assert_eq!(sol.status, SolveStatus::FallbackTrivial);
    }

    #[test]
    fn warm_start_shift_drops_consumes_and_clamps() {
        let m = model();
        let x = alloc::vec![0.0, 0.0, 0.0];
        let path = straight_path();
        let p = params(0.15);
        let sol = solve(&m, &x, &idle2(), &path, &p, None, Unlimited).unwrap();

        let shifted = shift_warm_start(&sol, 0.0);
        assert_eq!(shifted.inputs[..4], sol.inputs[1..5]);
        assert_eq!(shifted.inputs[4], sol.inputs[4]);
        assert_eq!(shifted.predicted_states, sol.predicted_states);

        let consumed = sol.predicted_states[1].s;
        let shifted = shift_warm_start(&sol, consumed);
        for (a, b) in shifted.predicted_states.iter().zip(&sol.predicted_states) {
            assert_relative_eq!(a.s, (b.s - consumed).max(0.0), epsilon = 1e-15);
            assert!(a.s >= 0.0 && a.s <= 5.0);
        }

        // Warm-started resolve stays at least as good and still feasible.
        let warm = solve(&m, &x, &idle2(), &path, &p, Some(&shifted), Unlimited).unwrap();
        assert!(warm.constraint_residual <= 1e-6);
        assert!(warm.cost <= sol.cost + 1e-9);
    }
}
