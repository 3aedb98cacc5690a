//! Minimal native SVG line/scatter rendering for the experiment outputs.
//! Log axes, polylines, markers, and a text legend; nothing else.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            markers: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: Vec::new(),
        }
    }

    pub fn log_y(mut self) -> Self {
        self.y_scale = Scale::Log;
        self
    }

    pub fn log_log(mut self) -> Self {
        self.x_scale = Scale::Log;
        self.y_scale = Scale::Log;
        self
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;

fn transform(v: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => v,
        Scale::Log => v.max(f64::MIN_POSITIVE).log10(),
    }
}

fn ticks(lo: f64, hi: f64, scale: Scale) -> Vec<(f64, String)> {
    match scale {
        Scale::Log => {
            let (a, b) = (lo.floor() as i64, hi.ceil() as i64);
            let step = (((b - a) as usize / 6).max(1)) as i64;
            (a..=b)
                .step_by(step as usize)
                .map(|e| (e as f64, format!("1e{e}")))
                .collect()
        }
        Scale::Linear => {
            let span = (hi - lo).max(1e-300);
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|&s| span / s <= 6.0)
                .unwrap_or(mag * 10.0);
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            (first..=last)
                .map(|i| {
                    let v = i as f64 * step;
                    (v, format!("{v}"))
                })
                .collect()
        }
    }
}

fn render_panel(svg: &mut String, panel: &Panel, x0: f64, y0: f64) {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for s in &panel.series {
        for &(x, y) in &s.points {
            let tx = transform(x, panel.x_scale);
            let ty = transform(y, panel.y_scale);
            if tx.is_finite() && ty.is_finite() {
                pts.push((tx, ty));
            }
        }
    }
    if pts.is_empty() {
        return;
    }
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if (xmax - xmin).abs() < 1e-12 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin).abs() < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let pad_x = 0.04 * (xmax - xmin);
    let pad_y = 0.06 * (ymax - ymin);
    xmin -= pad_x;
    xmax += pad_x;
    ymin -= pad_y;
    ymax += pad_y;

    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| x0 + MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| y0 + MARGIN_T + plot_h - (y - ymin) / (ymax - ymin) * plot_h;

    let _ = write!(
        svg,
        "<rect x='{:.1}' y='{:.1}' width='{plot_w:.1}' height='{plot_h:.1}' fill='none' stroke='#333'/>",
        x0 + MARGIN_L,
        y0 + MARGIN_T
    );
    let _ = write!(
        svg,
        "<text x='{:.1}' y='{:.1}' text-anchor='middle' font-size='13' font-family='sans-serif'>{}</text>",
        x0 + MARGIN_L + plot_w / 2.0,
        y0 + MARGIN_T - 12.0,
        panel.title
    );
    let _ = write!(
        svg,
        "<text x='{:.1}' y='{:.1}' text-anchor='middle' font-size='11' font-family='sans-serif'>{}</text>",
        x0 + MARGIN_L + plot_w / 2.0,
        y0 + PANEL_H - 10.0,
        panel.x_label
    );
    let _ = write!(
        svg,
        "<text x='{:.1}' y='{:.1}' text-anchor='middle' font-size='11' font-family='sans-serif' transform='rotate(-90 {:.1} {:.1})'>{}</text>",
        x0 + 16.0,
        y0 + MARGIN_T + plot_h / 2.0,
        x0 + 16.0,
        y0 + MARGIN_T + plot_h / 2.0,
        panel.y_label
    );

    for (tx, label) in ticks(xmin, xmax, panel.x_scale) {
        if tx < xmin || tx > xmax {
            continue;
        }
        let px = sx(tx);
        let py = y0 + MARGIN_T + plot_h;
        let _ = write!(
            svg,
            "<line x1='{px:.1}' y1='{py:.1}' x2='{px:.1}' y2='{:.1}' stroke='#333'/>\
             <text x='{px:.1}' y='{:.1}' text-anchor='middle' font-size='10' font-family='sans-serif'>{label}</text>",
            py + 4.0,
            py + 16.0
        );
    }
    for (ty, label) in ticks(ymin, ymax, panel.y_scale) {
        if ty < ymin || ty > ymax {
            continue;
        }
        let py = sy(ty);
        let px = x0 + MARGIN_L;
        let _ = write!(
            svg,
            "<line x1='{:.1}' y1='{py:.1}' x2='{px:.1}' y2='{py:.1}' stroke='#333'/>\
             <text x='{:.1}' y='{:.1}' text-anchor='end' font-size='10' font-family='sans-serif'>{label}</text>",
            px - 4.0,
            px - 6.0,
            py + 3.0
        );
    }

    for (si, s) in panel.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in &s.points {
            let tx = transform(x, panel.x_scale);
            let ty = transform(y, panel.y_scale);
            if !(tx.is_finite() && ty.is_finite()) {
                continue;
            }
            if path.is_empty() {
                let _ = write!(path, "M{:.2},{:.2}", sx(tx), sy(ty));
            } else {
                let _ = write!(path, " L{:.2},{:.2}", sx(tx), sy(ty));
            }
        }
        let _ = write!(svg, "<path d='{path}' fill='none' stroke='{color}' stroke-width='1.5'/>");
        if s.markers {
            for &(x, y) in &s.points {
                let tx = transform(x, panel.x_scale);
                let ty = transform(y, panel.y_scale);
                if tx.is_finite() && ty.is_finite() {
                    let _ = write!(
                        svg,
                        "<circle cx='{:.2}' cy='{:.2}' r='2.4' fill='{color}'/>",
                        sx(tx),
                        sy(ty)
                    );
                }
            }
        }
        let ly = y0 + MARGIN_T + 14.0 + 14.0 * si as f64;
        let _ = write!(
            svg,
            "<line x1='{:.1}' y1='{ly:.1}' x2='{:.1}' y2='{ly:.1}' stroke='{color}' stroke-width='2'/>\
             <text x='{:.1}' y='{:.1}' font-size='10' font-family='sans-serif'>{}</text>",
            x0 + MARGIN_L + 8.0,
            x0 + MARGIN_L + 28.0,
            x0 + MARGIN_L + 32.0,
            ly + 3.0,
            s.label
        );
    }
}

/// Render panels side by side into one SVG document.
pub fn render_svg(panels: &[Panel]) -> String {
    let total_w = PANEL_W * panels.len() as f64;
    let mut svg = format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{total_w}' height='{PANEL_H}' \
         viewBox='0 0 {total_w} {PANEL_H}'>\
         <rect width='{total_w}' height='{PANEL_H}' fill='white'/>"
    );
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut svg, panel, PANEL_W * i as f64, 0.0);
    }
    svg.push_str("</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let panel = Panel::new("demo", "n", "error")
            .log_log()
            .with_series(Series::new("curve", vec![(10.0, 1.0), (100.0, 0.3), (1000.0, 0.1)]));
        let svg = render_svg(&[panel.clone(), panel]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        assert!(svg.contains("<path"));
        assert!(svg.contains("demo"));
    }

    #[test]
    fn deterministic_output() {
        let panel = Panel::new("p", "x", "y")
            .with_series(Series::new("s", vec![(0.0, 0.0), (1.0, 2.0)]));
        assert_eq!(render_svg(&[panel.clone()]), render_svg(&[panel]));
    }
}
