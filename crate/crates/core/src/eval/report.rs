//! Aggregated tables, CSV and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Shape};
use crate::sim::{PlannerKind, RunTrace};

use super::metrics::{RunMetrics, RunRecord};

/// One row of the comparison table. Means cover arrived runs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub planner: PlannerKind,
    pub path_length_m: Option<f64>,
    pub total_time_s: Option<f64>,
    pub min_hr_dist_m: Option<f64>,
    /// Number of runs that collided.
    pub collided: usize,
    /// Number of runs that arrived.
    pub arrived: usize,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerStats {
    pub row: ReportRow,
    pub path_length_std: Option<f64>,
    pub total_time_std: Option<f64>,
    pub min_hr_dist_std: Option<f64>,
}

/// Mean and sample standard deviation. Values are sorted first so the
/// result does not depend on input order.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

pub fn summarize(scenario: &str, planner: PlannerKind, runs: &[RunMetrics]) -> PlannerStats {
    let ok: Vec<&RunMetrics> = runs.iter().filter(|m| m.arrived && !m.collided).collect();
    let path = mean_std(&ok.iter().map(|m| m.path_length).collect::<Vec<_>>());
    let time = mean_std(&ok.iter().map(|m| m.total_time).collect::<Vec<_>>());
    let dist = mean_std(&ok.iter().filter_map(|m| m.min_hr_distance).collect::<Vec<_>>());
    PlannerStats {
        row: ReportRow {
            scenario: scenario.to_string(),
            planner,
            path_length_m: path.map(|p| p.0),
            total_time_s: time.map(|p| p.0),
            min_hr_dist_m: dist.map(|p| p.0),
            collided: runs.iter().filter(|m| m.collided).count(),
            arrived: runs.iter().filter(|m| m.arrived).count(),
            repeats: runs.len(),
        },
        path_length_std: path.map(|p| p.1),
        total_time_std: time.map(|p| p.1),
        min_hr_dist_std: dist.map(|p| p.1),
    }
}

/// Groups records by (scenario, planner), ordered by scenario name then planner.
pub fn aggregate(records: &[RunRecord]) -> Vec<PlannerStats> {
    let mut keys: Vec<(String, PlannerKind)> = records.iter().map(|r| (r.scenario.clone(), r.planner)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(s, p)| {
            let runs: Vec<RunMetrics> = records
                .iter()
                .filter(|r| r.scenario == s && r.planner == p)
                .map(|r| r.metrics)
                .collect();
            summarize(&s, p, &runs)
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record([
        "scenario",
        "planner",
        "path_length_m",
        "total_time_s",
        "min_hr_dist_m",
        "collided",
        "arrived",
        "repeats",
    ])?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::Trace(e.to_string()))?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn fmt_opt(v: Option<f64>, std: Option<f64>) -> String {
    match (v, std) {
        (Some(v), Some(s)) => format!("{v:.2}±{s:.2}"),
        (Some(v), None) => format!("{v:.2}"),
        _ => "-".to_string(),
    }
}

/// Plain-text comparison: one line per scenario, one column group per planner.
pub fn text_table(stats: &[PlannerStats]) -> String {
    let mut scenarios: Vec<&str> = stats.iter().map(|s| s.row.scenario.as_str()).collect();
    scenarios.dedup();
    let mut planners: Vec<PlannerKind> = stats.iter().map(|s| s.row.planner).collect();
    planners.sort();
    planners.dedup();

    let mut out = String::new();
    let _ = write!(out, "{:<20}", "scenario");
    for p in &planners {
        let _ = write!(
            out,
            "| {:<44}",
            format!("{} (length m / time s / min H-R m / ok)", p.as_str().to_uppercase())
        );
    }
    out.push('\n');
    for s in scenarios {
        let _ = write!(out, "{s:<20}");
        for p in &planners {
            match stats.iter().find(|x| x.row.scenario == s && x.row.planner == *p) {
                Some(x) => {
                    let cell = format!(
                        "{} / {} / {} / {}/{}",
                        fmt_opt(x.row.path_length_m, x.path_length_std),
                        fmt_opt(x.row.total_time_s, x.total_time_std),
                        fmt_opt(x.row.min_hr_dist_m, x.min_hr_dist_std),
                        x.row.arrived,
                        x.row.repeats
                    );
                    let _ = write!(out, "| {cell:<44}");
                }
                None => {
                    let _ = write!(out, "| {:<44}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

struct Frame {
    min: Point2,
    max: Point2,
    scale: f64,
    margin: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Point2>) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        if !min.is_finite() {
            min = Point2::ZERO;
            max = Point2::new(1.0, 1.0);
        }
        Self {
            min,
            max,
            scale: 60.0,
            margin: 20.0,
        }
    }

    fn size(&self) -> (f64, f64) {
        (
            (self.max.x - self.min.x) * self.scale + 2.0 * self.margin,
            (self.max.y - self.min.y) * self.scale + 2.0 * self.margin,
        )
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.min.x) * self.scale + self.margin,
            (self.max.y - p.y) * self.scale + self.margin,
        )
    }

    fn polyline(&self, pts: &[Point2]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.1},{y:.1}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Top-down plot of one run: walls, robot path (solid), each person's
/// path, and the forecasts made along the way (dashed).
pub fn render_svg(trace: &RunTrace) -> String {
    let mut ids: Vec<_> = trace.ticks.iter().flat_map(|t| t.agents.iter().map(|a| a.id)).collect();
    ids.sort();
    ids.dedup();
    let robot: Vec<Point2> = trace.ticks.iter().map(|t| t.robot.position()).collect();
    let static_pts = trace.header.statics.iter().flat_map(|o| match o.shape {
        Shape::Point { at } => vec![at],
        Shape::Circle { center, radius } => vec![
            center + Point2::new(-radius, -radius),
            center + Point2::new(radius, radius),
        ],
        Shape::Segment { a, b } => vec![a, b],
    });
    let agent_pts = trace.ticks.iter().flat_map(|t| t.agents.iter().map(|a| a.position));
    let frame = Frame::fit(
        robot
            .iter()
            .copied()
            .chain(static_pts)
            .chain(agent_pts)
            .chain([trace.header.goal.position()]),
    );
    let (w, h) = frame.size();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(
        s,
        r#"<title>{} / {} / seed {}</title>"#,
        trace.header.scenario, trace.header.planner, trace.header.seed
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for o in &trace.header.statics {
        match o.shape {
            Shape::Segment { a, b } => {
                let ((x1, y1), (x2, y2)) = (frame.map(a), frame.map(b));
                let _ = writeln!(
                    s,
                    r#"<line class="static" x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="black" stroke-width="3"/>"#
                );
            }
            Shape::Circle { center, radius } => {
                let (cx, cy) = frame.map(center);
                let _ = writeln!(
                    s,
                    r#"<circle class="static" cx="{cx:.1}" cy="{cy:.1}" r="{:.1}" fill="gray"/>"#,
                    radius * frame.scale
                );
            }
            Shape::Point { at } => {
                let (cx, cy) = frame.map(at);
                let _ = writeln!(
                    s,
                    r#"<circle class="static" cx="{cx:.1}" cy="{cy:.1}" r="2" fill="black"/>"#
                );
            }
        }
    }
    // forecasts every two seconds
    for t in trace.ticks.iter().filter(|t| t.tick % 20 == 0) {
        for p in &t.predictions {
            let _ = writeln!(
                s,
                r#"<polyline class="prediction" points="{}" fill="none" stroke="orange" stroke-width="1.5" stroke-dasharray="6,4"/>"#,
                frame.polyline(p)
            );
        }
    }
    for id in &ids {
        let path: Vec<Point2> = trace
            .ticks
            .iter()
            .filter_map(|t| t.agents.iter().find(|a| a.id == *id).map(|a| a.position))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="agent" data-id="{id}" points="{}" fill="none" stroke="red" stroke-width="2"/>"#,
            frame.polyline(&path)
        );
    }
    let _ = writeln!(
        s,
        r#"<polyline class="robot" points="{}" fill="none" stroke="blue" stroke-width="2.5"/>"#,
        frame.polyline(&robot)
    );
    let (gx, gy) = frame.map(trace.header.goal.position());
    let _ = writeln!(
        s,
        r#"<circle class="goal" cx="{gx:.1}" cy="{gy:.1}" r="5" fill="green"/>"#
    );
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv`, `results.txt`, and one plot plus one trace per run.
/// Returns the paths written.
pub fn emit_report(stats: &[PlannerStats], records: &[RunRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let rows: Vec<ReportRow> = stats.iter().map(|s| s.row.clone()).collect();
    let mut csv_bytes = Vec::new();
    write_csv(&rows, &mut csv_bytes)?;
    let csv_path = out_dir.join("results.csv");
    write_file(&csv_path, &csv_bytes)?;
    written.push(csv_path);

    let txt_path = out_dir.join("results.txt");
    write_file(&txt_path, text_table(stats).as_bytes())?;
    written.push(txt_path);

    if !records.is_empty() {
        let plots = out_dir.join("plots");
        let traces = out_dir.join("traces");
        fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
        fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
        for r in records {
            let stem = format!("{}_{}_{}", r.scenario, r.planner, r.seed);
            let svg = plots.join(format!("{stem}.svg"));
            write_file(&svg, render_svg(&r.trace).as_bytes())?;
            written.push(svg);
            let mut buf = Vec::new();
            r.trace.write_jsonl(&mut buf)?;
            let jl = traces.join(format!("{stem}.jsonl"));
            write_file(&jl, &buf)?;
            written.push(jl);
        }
    }
    Ok(written)
}
