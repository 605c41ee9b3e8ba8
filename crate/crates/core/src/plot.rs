//! Deterministic SVG 1.1 figures.
//!
//! Every plot area carries `data-x-min`, `data-x-max`, `data-y-min`,
//! `data-y-max` and the pixel box `data-px-left/right/top/bottom`, so the
//! affine transform from data to pixels can be inverted from the file alone.

use std::fmt::Write as _;

use crate::analysis::{effort_points, Analysis, SaturationCurve};
use crate::effort::EffortAxis;
use crate::error::{Error, Result};
use crate::runner::AggregatedRow;
use crate::trajectory::{optimal_trajectory, ImportanceSeries, Virtue};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 500.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 420.0;

pub const ORANGE: &str = "#e66101";
pub const BLUE: &str = "#2c7bb6";

/// Color ramp for the color-coded virtue, low to high.
const RAMP: [(u8, u8, u8); 3] = [(68, 1, 84), (33, 145, 140), (253, 231, 37)];
const SHAPES: [Shape; 5] = [Shape::Circle, Shape::Square, Shape::Triangle, Shape::Diamond, Shape::Cross];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Circle,
    Square,
    Triangle,
    Diamond,
    Cross,
}

fn series_color(v: Virtue) -> &'static str {
    match v {
        Virtue::Quality | Virtue::Completeness => ORANGE,
        Virtue::Diversity => BLUE,
    }
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Data range padded so that no point sits on the frame.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.05 * hi.abs().max(1.0) };
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (RIGHT - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str, frame: &Frame, x_label: &str, y_label: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(body, "<title>{}</title>", escape(title));
        let _ = writeln!(body, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        let _ = writeln!(
            body,
            "<g class=\"plot-area\" data-x-min=\"{}\" data-x-max=\"{}\" data-y-min=\"{}\" data-y-max=\"{}\" \
             data-px-left=\"{LEFT}\" data-px-right=\"{RIGHT}\" data-px-top=\"{TOP}\" data-px-bottom=\"{BOTTOM}\">",
            frame.x.0, frame.x.1, frame.y.0, frame.y.1
        );
        let mut svg = Self { body };
        svg.axes(frame, x_label, y_label);
        svg
    }

    fn axes(&mut self, f: &Frame, x_label: &str, y_label: &str) {
        let b = &mut self.body;
        let _ = writeln!(
            b,
            "<path class=\"axis\" d=\"M{LEFT} {TOP} L{LEFT} {BOTTOM} L{RIGHT} {BOTTOM}\" fill=\"none\" stroke=\"black\"/>"
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = f.x.0 + t * (f.x.1 - f.x.0);
            let yv = f.y.0 + t * (f.y.1 - f.y.0);
            let (px, py) = (f.px(xv), f.py(yv));
            let _ = writeln!(
                b,
                "<line class=\"tick\" x1=\"{0}\" y1=\"{BOTTOM}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>\
                 <text x=\"{0}\" y=\"{2}\" font-size=\"11\" text-anchor=\"middle\">{3}</text>",
                fmt(px),
                fmt(BOTTOM + 5.0),
                fmt(BOTTOM + 18.0),
                format!("{xv:.2}")
            );
            let _ = writeln!(
                b,
                "<line class=\"tick\" x1=\"{0}\" y1=\"{1}\" x2=\"{LEFT}\" y2=\"{1}\" stroke=\"black\"/>\
                 <text x=\"{2}\" y=\"{3}\" font-size=\"11\" text-anchor=\"end\">{4}</text>",
                fmt(LEFT - 5.0),
                fmt(py),
                fmt(LEFT - 8.0),
                fmt(py + 4.0),
                format!("{yv:.3}")
            );
        }
        let _ = writeln!(
            b,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            fmt((LEFT + RIGHT) / 2.0),
            fmt(HEIGHT - 20.0),
            escape(x_label)
        );
        let _ = writeln!(
            b,
            "<text x=\"20\" y=\"{0}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">{1}</text>",
            fmt((TOP + BOTTOM) / 2.0),
            escape(y_label)
        );
    }

    fn polyline(&mut self, class: &str, extra: &str, color: &str, pts: &[(f64, f64)]) {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect();
        let _ = writeln!(
            self.body,
            "<polyline class=\"{class}\"{extra} points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            coords.join(" ")
        );
    }

    fn marker(&mut self, class: &str, shape: Shape, x: f64, y: f64, fill: &str, title: &str) {
        let r = 6.0;
        let t = format!("<title>{}</title>", escape(title));
        let el = match shape {
            Shape::Circle => format!("<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{r}\" fill=\"{fill}\" stroke=\"black\">{t}</circle>", fmt(x), fmt(y)),
            Shape::Square => format!(
                "<rect class=\"{class}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"black\">{t}</rect>",
                fmt(x - r), fmt(y - r), fmt(2.0 * r), fmt(2.0 * r)
            ),
            Shape::Triangle => format!(
                "<polygon class=\"{class}\" points=\"{},{} {},{} {},{}\" fill=\"{fill}\" stroke=\"black\">{t}</polygon>",
                fmt(x), fmt(y - r), fmt(x + r), fmt(y + r), fmt(x - r), fmt(y + r)
            ),
            Shape::Diamond => format!(
                "<polygon class=\"{class}\" points=\"{},{} {},{} {},{} {},{}\" fill=\"{fill}\" stroke=\"black\">{t}</polygon>",
                fmt(x), fmt(y - r), fmt(x + r), fmt(y), fmt(x), fmt(y + r), fmt(x - r), fmt(y)
            ),
            Shape::Cross => format!(
                "<path class=\"{class}\" d=\"M{} {} L{} {} M{} {} L{} {}\" stroke=\"{fill}\" stroke-width=\"3\">{t}</path>",
                fmt(x - r), fmt(y - r), fmt(x + r), fmt(y + r), fmt(x - r), fmt(y + r), fmt(x + r), fmt(y - r)
            ),
        };
        self.body.push_str(&el);
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(self.body, "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>", fmt(x), fmt(y), escape(s));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</g>\n</svg>\n");
        self.body
    }
}

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let s = t - i as f64;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    let mix = |p: u8, q: u8| (f64::from(p) + s * (f64::from(q) - f64::from(p))).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Effort against normalized performance: one marker per valid cell and the
/// optimal trajectory as a polyline. On the quality-diversity axis quality
/// sets the color; on the diversity-completeness axis completeness does.
/// Diversity always sets the marker shape.
pub fn scatter_svg(rows: &[AggregatedRow], axis: EffortAxis) -> Result<String> {
    let points = effort_points(rows, axis);
    if points.is_empty() {
        return Err(Error::Empty("no valid cells to plot"));
    }
    let traj = optimal_trajectory(&points)?;
    let frame = Frame {
        x: range(points.iter().map(|p| p.effort)),
        y: range(points.iter().map(|p| p.perf_norm)),
    };
    let color_virtue = match axis {
        EffortAxis::QualityDiversity => Virtue::Quality,
        EffortAxis::DiversityCompleteness => Virtue::Completeness,
    };
    let snaps: Vec<_> = points.iter().filter_map(|p| p.virtues).collect();
    let shades = distinct_sorted(snaps.iter().map(|s| color_virtue.of(s)));
    let shapes = distinct_sorted(snaps.iter().map(|s| s.diversity));
    let (c_lo, c_hi) = (shades[0], shades[shades.len() - 1]);

    let mut svg = Svg::new(
        &format!("effort ({}) vs normalized performance", axis.as_str()),
        &frame,
        &format!("effort ({})", axis.as_str()),
        "normalized performance",
    );
    let hull: Vec<(f64, f64)> = traj.vertices.iter().map(|v| (frame.px(v.effort), frame.py(v.perf_norm))).collect();
    svg.polyline("hull", "", "black", &hull);
    for p in &points {
        let Some(s) = p.virtues else { continue };
        let shade = color_virtue.of(&s);
        let t = if c_hi > c_lo { (shade - c_lo) / (c_hi - c_lo) } else { 1.0 };
        let k = shapes.iter().position(|&d| d == s.diversity).unwrap_or(0);
        let title = format!("{}: effort {}, perf_norm {}", p.id, p.effort, p.perf_norm);
        svg.marker("marker", SHAPES[k % SHAPES.len()], frame.px(p.effort), frame.py(p.perf_norm), &ramp(t), &title);
    }

    // legend: shapes for diversity, color ramp ends for the other virtue
    let mut y = TOP + 10.0;
    svg.text(RIGHT + 20.0, y, "diversity");
    for (k, d) in shapes.iter().enumerate() {
        y += 20.0;
        svg.marker("legend", SHAPES[k % SHAPES.len()], RIGHT + 30.0, y - 4.0, "#bbbbbb", &format!("diversity {d}"));
        svg.text(RIGHT + 45.0, y, &format!("{d}"));
    }
    y += 30.0;
    svg.text(RIGHT + 20.0, y, color_virtue.name());
    for (label, t) in [(c_lo, 0.0), (c_hi, 1.0)] {
        y += 20.0;
        svg.marker("legend", Shape::Circle, RIGHT + 30.0, y - 4.0, &ramp(t), &format!("{} {label}", color_virtue.name()));
        svg.text(RIGHT + 45.0, y, &format!("{label:.1}"));
    }
    Ok(svg.finish())
}

/// Virtue value (quality as a fraction) needed at each normalized
/// performance along the trajectory.
pub fn importance_svg(series: &[ImportanceSeries]) -> Result<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Empty("no importance points to plot"));
    }
    let value = |v: Virtue, x: f64| if v == Virtue::Quality { x / 100.0 } else { x };
    let frame = Frame {
        x: range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y: (0.0, 1.05),
    };
    let mut svg = Svg::new("virtue importance along the trajectory", &frame, "normalized performance", "virtue required");
    let mut ly = TOP + 10.0;
    for s in series {
        let color = series_color(s.virtue);
        let pts: Vec<(f64, f64)> = s.points.iter().map(|&(p, v)| (frame.px(p), frame.py(value(s.virtue, v)))).collect();
        svg.polyline("series", &format!(" data-virtue=\"{}\"", s.virtue.name()), color, &pts);
        for &(x, y) in &pts {
            svg.marker("point", Shape::Circle, x, y, color, s.virtue.name());
        }
        svg.marker("legend", Shape::Circle, RIGHT + 30.0, ly - 4.0, color, s.virtue.name());
        svg.text(RIGHT + 45.0, ly, s.virtue.name());
        ly += 20.0;
    }
    Ok(svg.finish())
}

/// Envelope curves per virtue with the detected saturation point marked.
pub fn saturation_svg(curves: &[SaturationCurve]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::Empty("no saturation curves to plot"));
    }
    let value = |v: Virtue, x: f64| if v == Virtue::Quality { x / 100.0 } else { x };
    let frame = Frame {
        x: (0.0, 1.05),
        y: range(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1))),
    };
    let mut svg = Svg::new("performance against each virtue", &frame, "virtue value", "normalized performance");
    let mut ly = TOP + 10.0;
    for c in curves {
        let color = series_color(c.virtue);
        let pts: Vec<(f64, f64)> = c.points.iter().map(|&(v, p)| (frame.px(value(c.virtue, v)), frame.py(p))).collect();
        svg.polyline("curve", &format!(" data-virtue=\"{}\"", c.virtue.name()), color, &pts);
        if let Some(s) = c.saturation {
            let (_, p) = c.points.iter().copied().find(|&(v, _)| v == s).expect("saturation point is on the curve");
            svg.marker(
                "saturation",
                Shape::Diamond,
                frame.px(value(c.virtue, s)),
                frame.py(p),
                color,
                &format!("{} saturates at {s}", c.virtue.name()),
            );
        }
        svg.marker("legend", Shape::Circle, RIGHT + 30.0, ly - 4.0, color, c.virtue.name());
        svg.text(RIGHT + 45.0, ly, c.virtue.name());
        ly += 20.0;
    }
    Ok(svg.finish())
}

/// All three figures of an analysis: `(file name, svg)`.
pub fn render_plots(rows: &[AggregatedRow], analysis: &Analysis) -> Result<Vec<(&'static str, String)>> {
    let mut out = vec![
        ("scatter.svg", scatter_svg(rows, analysis.axis)?),
        ("importance.svg", importance_svg(&analysis.importance)?),
    ];
    if !analysis.saturation.is_empty() {
        out.push(("saturation.svg", saturation_svg(&analysis.saturation)?));
    }
    Ok(out)
}
