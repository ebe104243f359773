//! Trace, diagnostics, and plot emission.
//!
//! The trace is one JSON record per line behind a self-describing header, so
//! a recorded run can be re-read and re-plotted without the original
//! scenario file. Diagnostics are a CSV table that is byte-identical across
//! reruns of the same scenario; wall-clock timings live only in the trace.

use crate::scenario::{Scenario, ScenarioFile};
use crate::sim::{simulate_with, RunResult, SimError, StepView, TraceRecord};
use serde::{Deserialize, Serialize};
use star_tunnel_core::geometry::{Obstacle, Point};
use star_tunnel_core::models::RobotModel;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

pub const TRACE_FORMAT: &str = "star-tunnel-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TraceHeader {
    format: String,
    version: u32,
    scenario: ScenarioFile,
    reached_goal: bool,
    arrival_time: Option<f64>,
    final_state: [f64; 3],
}

/// Everything a world snapshot needs, captured while the step's stage
/// outputs were still alive.
#[derive(Debug, Clone)]
pub struct Frame {
    pub k: usize,
    pub t: f64,
    pub robot: [f64; 3],
    pub radius: f64,
    pub rho: f64,
    pub tunnel: Option<f64>,
    pub raw: Vec<ShapeOutline>,
    pub dilated: Vec<Vec<Point>>,
    pub stars: Vec<Vec<Point>>,
    pub star_centers: Vec<Point>,
    pub path: Vec<Point>,
    pub curve: Vec<Point>,
    pub predicted: Vec<Point>,
    pub r0: Point,
    pub rg: Point,
    pub executed: Vec<Point>,
    pub goal: Point,
    pub goal_tol: f64,
}

#[derive(Debug, Clone)]
pub enum ShapeOutline {
    Circle { center: Point, radius: f64 },
    Poly(Vec<Point>),
}

/// Simulates while capturing one frame per requested snapshot time.
///
/// Requested times snap to the nearest executed control step; times past the
/// end of the run resolve to its final step, so the caller always gets
/// exactly one frame per request (empty runs aside).
pub fn run_and_collect(
    scenario: &Scenario,
    snapshot_times: &[f64],
) -> Result<(RunResult, Vec<Frame>), SimError> {
    let dt = scenario.control.dt;
    let last_k = scenario.steps().saturating_sub(1);
    let wanted: Vec<usize> = snapshot_times
        .iter()
        .map(|&t| ((t.max(0.0) / dt).round() as usize).min(last_k))
        .collect();
    let capture = !wanted.is_empty();

    let mut trail: Vec<Point> = Vec::new();
    let mut captured: Vec<(usize, Frame)> = Vec::new();
    let mut last: Option<Frame> = None;
    let result = simulate_with(scenario, |view| {
        trail.push(Point::new(view.record.x[0], view.record.x[1]));
        if !capture {
            return;
        }
        let frame = build_frame(scenario, &view, &trail);
        if wanted.contains(&view.k) {
            captured.push((view.k, frame.clone()));
        }
        last = Some(frame);
    })?;

    let mut frames = Vec::with_capacity(wanted.len());
    for k in wanted {
        let hit = captured.iter().find(|(ck, _)| *ck == k).map(|(_, f)| f);
        match hit.or(last.as_ref()) {
            Some(f) => frames.push(f.clone()),
            None => break,
        }
    }
    Ok((result, frames))
}

fn build_frame(scenario: &Scenario, view: &StepView<'_>, trail: &[Point]) -> Frame {
    let raw = scenario
        .obstacles
        .iter()
        .map(|o| match o.shape_at(view.t) {
            Obstacle::Circle { center, radius } => ShapeOutline::Circle { center, radius },
            Obstacle::ConvexPolygon { vertices } | Obstacle::Polygon { vertices } => {
                ShapeOutline::Poly(vertices)
            }
        })
        .collect();
    let curve = view
        .poly
        .map(|poly| {
            let (lo, hi) = poly.domain();
            (0..=120)
                .map(|i| poly.eval(lo + (hi - lo) * i as f64 / 120.0))
                .collect()
        })
        .unwrap_or_default();
    let predicted = view
        .solution
        .map(|sol| {
            sol.predicted_states
                .iter()
                .map(|st| scenario.robot.output(&st.state))
                .collect()
        })
        .unwrap_or_default();
    Frame {
        k: view.k,
        t: view.t,
        robot: view.record.x,
        radius: scenario.robot.radius,
        rho: view.world.rho,
        tunnel: view.record.tunnel_radius,
        raw,
        dilated: view.obstacles.iter().map(|r| r.boundary_points(96)).collect(),
        stars: view
            .world
            .obstacles
            .iter()
            .map(|s| s.boundary_samples(144))
            .collect(),
        star_centers: view.world.obstacles.iter().map(|s| s.center()).collect(),
        path: view.path.points.clone(),
        curve,
        predicted,
        r0: view.world.r0,
        rg: view.world.rg,
        executed: trail.to_vec(),
        goal: scenario.goal,
        goal_tol: scenario.goal_tol,
    }
}

/// Writes trace, diagnostics, control plot, and one snapshot per frame.
/// Returns the paths written, trace first.
pub fn emit_outputs(
    dir: &Path,
    file: &ScenarioFile,
    result: &RunResult,
    frames: &[Frame],
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let trace = dir.join("trace.jsonl");
    write_trace(&trace, file, result)?;
    written.push(trace);

    let diag = dir.join("diagnostics.csv");
    std::fs::write(&diag, diagnostics_csv(&result.records))?;
    written.push(diag);

    let controls = dir.join("controls.svg");
    std::fs::write(&controls, controls_svg(file, &result.records))?;
    written.push(controls);

    for (i, frame) in frames.iter().enumerate() {
        let snap = dir.join(format!("snapshot_{i:02}.svg"));
        std::fs::write(&snap, snapshot_svg(frame, &file.name))?;
        written.push(snap);
    }
    Ok(written)
}

pub fn write_trace(path: &Path, file: &ScenarioFile, result: &RunResult) -> io::Result<()> {
    let header = TraceHeader {
        format: TRACE_FORMAT.to_string(),
        version: TRACE_VERSION,
        scenario: file.clone(),
        reached_goal: result.reached_goal,
        arrival_time: result.arrival_time,
        final_state: [
            result.final_state.x,
            result.final_state.y,
            result.final_state.theta,
        ],
    };
    let mut out = serde_json::to_string(&header).map_err(into_io)?;
    out.push('\n');
    for record in &result.records {
        out.push_str(&serde_json::to_string(record).map_err(into_io)?);
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// Reads a recorded trace back into the scenario it came from and the run it
/// produced.
pub fn read_trace(path: &Path) -> io::Result<(ScenarioFile, RunResult)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| bad_data("empty trace file".to_string()))?;
    let header: TraceHeader = serde_json::from_str(first).map_err(into_io)?;
    if header.format != TRACE_FORMAT {
        return Err(bad_data(format!("not a trace file: format {:?}", header.format)));
    }
    if header.version != TRACE_VERSION {
        return Err(bad_data(format!(
            "unsupported trace version {}",
            header.version
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<TraceRecord>(line).map_err(into_io)?);
    }
    let [x, y, theta] = header.final_state;
    Ok((
        header.scenario,
        RunResult {
            records,
            reached_goal: header.reached_goal,
            arrival_time: header.arrival_time,
            final_state: star_tunnel_core::models::UnicycleState::new(x, y, theta),
        },
    ))
}

fn into_io(e: serde_json::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

fn bad_data(m: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, m)
}

pub const DIAGNOSTICS_COLUMNS: &str = "k,t,x,y,theta,v,omega,rho,r0_x,r0_y,rg_x,rg_y,\
path_points,path_end_s,path_reused,eps,tunnel_radius,s_n,cost,trivial_cost,trivial_residual,\
solution_residual,solver_status,stars,disjoint,fallback_world,min_obstacle_distance,goal_distance";

/// Per-step diagnostics as CSV. Timings are deliberately left out so the
/// bytes depend only on the scenario.
pub fn diagnostics_csv(records: &[TraceRecord]) -> String {
    fn opt(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(DIAGNOSTICS_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.t,
            r.x[0],
            r.x[1],
            r.x[2],
            r.u[0],
            r.u[1],
            r.rho,
            r.r0[0],
            r.r0[1],
            r.rg[0],
            r.rg[1],
            r.path_points,
            r.path_end_s,
            r.path_reused,
            opt(r.eps),
            opt(r.tunnel_radius),
            opt(r.s_n),
            opt(r.cost),
            opt(r.trivial_cost),
            opt(r.trivial_residual),
            opt(r.solution_residual),
            r.solver_status,
            r.stars,
            r.disjoint,
            r.fallback_world,
            opt(r.min_obstacle_distance),
            r.goal_distance,
        );
    }
    out
}

// ---------------------------------------------------------------------------
// SVG helpers. Hand-rolled on purpose: two fixed plot kinds do not justify a
// charting dependency, and the files must stay standalone.

struct Canvas {
    min: Point,
    max: Point,
    scale: f64,
    width: f64,
    height: f64,
    body: String,
}

impl Canvas {
    fn new(min: Point, max: Point, target_width: f64) -> Canvas {
        let pad = 0.6;
        let min = Point::new(min.x - pad, min.y - pad);
        let max = Point::new(max.x + pad, max.y + pad);
        let scale = target_width / (max.x - min.x).max(1e-9);
        Canvas {
            min,
            max,
            scale,
            width: target_width,
            height: (max.y - min.y) * scale,
            body: String::new(),
        }
    }

    fn xy(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.min.x) * self.scale,
            (self.max.y - p.y) * self.scale,
        )
    }

    fn points_attr(&self, pts: &[Point]) -> String {
        let mut s = String::with_capacity(pts.len() * 12);
        for p in pts {
            let (x, y) = self.xy(*p);
            let _ = write!(s, "{x:.2},{y:.2} ");
        }
        s.pop();
        s
    }

    fn polyline(&mut self, pts: &[Point], attrs: &str) {
        if pts.len() < 2 {
            return;
        }
        let points = self.points_attr(pts);
        let _ = writeln!(self.body, "<polyline points=\"{points}\" fill=\"none\" {attrs}/>");
    }

    fn polygon(&mut self, pts: &[Point], attrs: &str) {
        if pts.len() < 3 {
            return;
        }
        let points = self.points_attr(pts);
        let _ = writeln!(self.body, "<polygon points=\"{points}\" {attrs}/>");
    }

    fn circle(&mut self, center: Point, world_radius: f64, attrs: &str) {
        let (cx, cy) = self.xy(center);
        let r = world_radius * self.scale;
        let _ = writeln!(self.body, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" {attrs}/>");
    }

    fn segment(&mut self, a: Point, b: Point, attrs: &str) {
        let (x1, y1) = self.xy(a);
        let (x2, y2) = self.xy(b);
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" {attrs}/>"
        );
    }

    fn text(&mut self, x: f64, y: f64, attrs: &str, content: &str) {
        let _ = writeln!(self.body, "<text x=\"{x:.1}\" y=\"{y:.1}\" {attrs}>{content}</text>");
    }

    fn into_svg(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
viewBox=\"0 0 {w:.2} {h:.2}\" font-family=\"sans-serif\">\n\
<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

fn extend_bounds(min: &mut Point, max: &mut Point, p: Point) {
    min.x = min.x.min(p.x);
    min.y = min.y.min(p.y);
    max.x = max.x.max(p.x);
    max.y = max.y.max(p.y);
}

fn star_glyph(center: Point, r: f64) -> Vec<Point> {
    let mut pts = Vec::with_capacity(10);
    for i in 0..10 {
        let ang = std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 5.0;
        let rad = if i % 2 == 0 { r } else { 0.4 * r };
        pts.push(center + Point::from_angle(ang) * rad);
    }
    pts
}

/// World snapshot: obstacles (raw and dilated), star boundaries, reference
/// path with its tunnel band, predicted trajectory, and the executed trail.
pub fn snapshot_svg(frame: &Frame, name: &str) -> String {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for outline in &frame.dilated {
        for &p in outline {
            extend_bounds(&mut min, &mut max, p);
        }
    }
    for line in frame.stars.iter().chain([&frame.path, &frame.executed]) {
        for &p in line {
            extend_bounds(&mut min, &mut max, p);
        }
    }
    extend_bounds(&mut min, &mut max, frame.goal);
    extend_bounds(&mut min, &mut max, Point::new(frame.robot[0], frame.robot[1]));
    if !min.x.is_finite() {
        min = Point::new(-1.0, -1.0);
        max = Point::new(1.0, 1.0);
    }

    let mut c = Canvas::new(min, max, 900.0);

    for outline in &frame.dilated {
        let mut closed = outline.clone();
        if let Some(&first) = closed.first() {
            closed.push(first);
        }
        c.polygon(
            &closed,
            "fill=\"#eef1f5\" stroke=\"#9aa3af\" stroke-width=\"1\" stroke-dasharray=\"4 3\"",
        );
    }
    for shape in &frame.raw {
        match shape {
            ShapeOutline::Circle { center, radius } => {
                c.circle(*center, *radius, "fill=\"#64748b\"");
            }
            ShapeOutline::Poly(vertices) => {
                c.polygon(vertices, "fill=\"#64748b\"");
            }
        }
    }
    for (boundary, center) in frame.stars.iter().zip(&frame.star_centers) {
        let mut closed = boundary.clone();
        if let Some(&first) = closed.first() {
            closed.push(first);
        }
        c.polyline(&closed, "stroke=\"#d97706\" stroke-width=\"1.6\"");
        c.circle(*center, 0.03, "fill=\"#d97706\"");
    }

    if let Some(tunnel) = frame.tunnel {
        let band = (2.0 * tunnel * c.scale).max(1.0);
        let attrs = format!(
            "stroke=\"#3b82f6\" stroke-opacity=\"0.18\" stroke-width=\"{band:.2}\" \
stroke-linecap=\"round\" stroke-linejoin=\"round\""
        );
        c.polyline(&frame.curve, &attrs);
    }
    c.polyline(&frame.path, "stroke=\"#2563eb\" stroke-width=\"1.6\"");
    c.polyline(
        &frame.curve,
        "stroke=\"#1d4ed8\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\"",
    );
    c.polyline(&frame.predicted, "stroke=\"#dc2626\" stroke-width=\"1.6\"");
    for &p in &frame.predicted {
        c.circle(p, 0.025, "fill=\"#dc2626\"");
    }
    c.polyline(
        &frame.executed,
        "stroke=\"#475569\" stroke-width=\"1.2\" stroke-opacity=\"0.8\"",
    );

    c.circle(frame.r0, 0.04, "fill=\"#2563eb\"");
    c.circle(frame.rg, 0.04, "fill=\"#16a34a\"");
    c.circle(frame.goal, frame.goal_tol, "fill=\"none\" stroke=\"#16a34a\" stroke-width=\"1\"");
    let goal_marker = star_glyph(frame.goal, 0.12);
    c.polygon(&goal_marker, "fill=\"#16a34a\"");
    if let Some(&start) = frame.executed.first() {
        let s = 0.08;
        let square = vec![
            start + Point::new(-s, -s),
            start + Point::new(s, -s),
            start + Point::new(s, s),
            start + Point::new(-s, s),
        ];
        c.polygon(&square, "fill=\"none\" stroke=\"#0f172a\" stroke-width=\"1.5\"");
    }

    let robot = Point::new(frame.robot[0], frame.robot[1]);
    c.circle(robot, frame.radius, "fill=\"#0f172a\" fill-opacity=\"0.85\"");
    let heading = robot + Point::from_angle(frame.robot[2]) * (frame.radius * 1.6);
    c.segment(robot, heading, "stroke=\"#0f172a\" stroke-width=\"2\"");

    let title = format!(
        "{name}  t = {t:.2} s  step {k}  rho = {rho:.3} m",
        t = frame.t,
        k = frame.k,
        rho = frame.rho
    );
    c.text(10.0, 20.0, "font-size=\"14\" fill=\"#0f172a\"", &title);
    c.into_svg()
}

/// Control signals over time: one panel per input, plus the per-step
/// terminal path coordinate.
pub fn controls_svg(file: &ScenarioFile, records: &[TraceRecord]) -> String {
    const W: f64 = 900.0;
    const PANEL_H: f64 = 160.0;
    const GAP: f64 = 44.0;
    const LEFT: f64 = 56.0;
    const TOP: f64 = 28.0;

    let t_end = records
        .last()
        .map(|r| r.t + file.control.dt)
        .unwrap_or(1.0);
    let horizon = file.control.horizon as f64;

    struct Panel<'a> {
        label: &'a str,
        ymin: f64,
        ymax: f64,
        bounds: Vec<f64>,
        series: Vec<(f64, f64)>,
    }

    let step_series = |pick: &dyn Fn(&TraceRecord) -> f64| -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(records.len() * 2);
        for r in records {
            pts.push((r.t, pick(r)));
            pts.push((r.t + file.control.dt, pick(r)));
        }
        pts
    };

    let v_max = file.robot.v_max;
    let w_max = file.robot.omega_max;
    let panels = [
        Panel {
            label: "v [m/s]",
            ymin: -0.1 * v_max,
            ymax: 1.15 * v_max,
            bounds: vec![0.0, v_max],
            series: step_series(&|r| r.u[0]),
        },
        Panel {
            label: "omega [rad/s]",
            ymin: -1.15 * w_max,
            ymax: 1.15 * w_max,
            bounds: vec![-w_max, w_max],
            series: step_series(&|r| r.u[1]),
        },
        Panel {
            label: "s_N",
            ymin: -0.1 * horizon,
            ymax: 1.15 * horizon,
            bounds: vec![0.0, horizon],
            series: records
                .iter()
                .filter_map(|r| r.s_n.map(|s| (r.t, s)))
                .collect(),
        },
    ];

    let height = TOP + panels.len() as f64 * (PANEL_H + GAP);
    let mut body = String::new();
    let plot_w = W - LEFT - 20.0;

    for (i, panel) in panels.iter().enumerate() {
        let y0 = TOP + i as f64 * (PANEL_H + GAP);
        let sx = |t: f64| LEFT + t / t_end * plot_w;
        let sy = |v: f64| y0 + PANEL_H - (v - panel.ymin) / (panel.ymax - panel.ymin) * PANEL_H;

        let _ = writeln!(
            body,
            "<rect x=\"{LEFT:.1}\" y=\"{y0:.1}\" width=\"{plot_w:.1}\" height=\"{PANEL_H:.1}\" \
fill=\"none\" stroke=\"#94a3b8\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            body,
            "<text x=\"{LEFT:.1}\" y=\"{:.1}\" font-size=\"13\" fill=\"#0f172a\">{}</text>",
            y0 - 8.0,
            panel.label
        );
        for &b in &panel.bounds {
            let y = sy(b);
            let _ = writeln!(
                body,
                "<line x1=\"{LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
stroke=\"#cbd5e1\" stroke-width=\"1\" stroke-dasharray=\"5 4\"/>",
                LEFT + plot_w
            );
            let _ = writeln!(
                body,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"#64748b\" \
text-anchor=\"end\">{b}</text>",
                LEFT - 6.0,
                y + 3.0
            );
        }
        let ticks = (t_end.ceil() as usize).max(1);
        for s in 0..=ticks {
            let t = s as f64;
            if t > t_end {
                break;
            }
            let x = sx(t);
            let _ = writeln!(
                body,
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
stroke=\"#e2e8f0\" stroke-width=\"1\"/>",
                y0,
                y0 + PANEL_H
            );
            if i == panels.len() - 1 {
                let _ = writeln!(
                    body,
                    "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"#64748b\" \
text-anchor=\"middle\">{t}</text>",
                    y0 + PANEL_H + 16.0
                );
            }
        }
        if panel.series.len() >= 2 {
            let mut pts = String::new();
            for &(t, v) in &panel.series {
                let _ = write!(pts, "{:.2},{:.2} ", sx(t), sy(v));
            }
            pts.pop();
            let _ = writeln!(
                body,
                "<polyline points=\"{pts}\" fill=\"none\" stroke=\"#2563eb\" stroke-width=\"1.5\"/>"
            );
        }
    }
    let _ = writeln!(
        body,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"#64748b\" \
text-anchor=\"middle\">t [s]</text>",
        LEFT + plot_w / 2.0,
        height - 10.0
    );

    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W:.0}\" height=\"{height:.0}\" \
viewBox=\"0 0 {W:.2} {height:.2}\" font-family=\"sans-serif\">\n\
<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{body}</svg>\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RobotConfig, ScenarioFile};

    fn tiny_scenario() -> (Scenario, ScenarioFile) {
        let file = ScenarioFile {
            name: "tiny".into(),
            duration: 2.0,
            seed: 7,
            goal: [1.5, 0.0],
            goal_tol: 0.05,
            robot: RobotConfig::default(),
            control: Default::default(),
            obstacles: vec![crate::scenario::ObstacleConfig {
                shape: crate::scenario::ShapeConfig::Circle {
                    center: [0.8, 0.8],
                    radius: 0.3,
                },
                waypoints: Vec::new(),
            }],
        };
        (Scenario::from_file(&file).unwrap(), file)
    }

    #[test]
    fn trace_round_trips() {
        let (sc, file) = tiny_scenario();
        let (result, _) = run_and_collect(&sc, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.jsonl");
        write_trace(&path, &file, &result).unwrap();
        let (file2, result2) = read_trace(&path).unwrap();
        assert_eq!(file, file2);
        assert_eq!(result.records, result2.records);
        assert_eq!(result.reached_goal, result2.reached_goal);
        assert_eq!(result.arrival_time, result2.arrival_time);
    }

    #[test]
    fn diagnostics_have_one_row_per_record_and_stable_bytes() {
        let (sc, _) = tiny_scenario();
        let (a, _) = run_and_collect(&sc, &[]).unwrap();
        let (b, _) = run_and_collect(&sc, &[]).unwrap();
        let csv_a = diagnostics_csv(&a.records);
        let csv_b = diagnostics_csv(&b.records);
        assert_eq!(csv_a, csv_b);
        assert_eq!(csv_a.lines().count(), a.records.len() + 1);
        let cols = DIAGNOSTICS_COLUMNS.split(',').count();
        for line in csv_a.lines() {
            assert_eq!(line.split(',').count(), cols);
        }
    }

    #[test]
    fn snapshot_count_matches_requests() {
        let (sc, file) = tiny_scenario();
        let times = [0.0, 0.4, 99.0];
        let (result, frames) = run_and_collect(&sc, &times).unwrap();
        assert_eq!(frames.len(), times.len());
        let dir = tempfile::tempdir().unwrap();
        let written = emit_outputs(dir.path(), &file, &result, &frames).unwrap();
        let snaps = written
            .iter()
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("snapshot_"))
            })
            .count();
        assert_eq!(snaps, times.len());
        let svg = std::fs::read_to_string(&written[written.len() - 1]).unwrap();
        assert!(svg.contains("<svg") && svg.contains("polyline"));
    }
}
