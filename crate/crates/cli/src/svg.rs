//! Minimal SVG plots: trajectories, grouped bars, line series and a polar
//! heatmap. Plain text output keeps the figures diffable.

use std::fmt::Write as _;

pub const GRAY: &str = "#8c8c8c";
pub const CYAN: &str = "#17becf";

/// Stroke color of an ego vessel driven by the named variant.
pub fn variant_color(name: &str) -> &'static str {
    match name {
        "MOA_LSTM" => "#d62728",
        "MOA_PLUS" => "#ff7f0e",
        "MOA" => "#1f77b4",
        "VO_PLUS" => "#2ca02c",
        "VO" => "#9467bd",
        _ => "#000000",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round-number tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-9);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 1.5 * target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Maps data coordinates into a plot rectangle; y grows upward.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#000"/>"##,
            self.x0, self.y0, self.w, self.h
        );
        for t in ticks(self.xr.0, self.xr.1, 6) {
            let x = self.px(t);
            let yb = self.y0 + self.h;
            let _ = writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{yb:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
                yb + 4.0,
                yb + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(self.yr.0, self.yr.1, 5) {
            let y = self.py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#000"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
                self.x0 - 4.0,
                self.x0,
                self.x0 - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 34.0,
            esc(xlabel)
        );
        let (lx, ly) = (self.x0 - 44.0, self.y0 + self.h / 2.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
            esc(ylabel)
        );
    }

    fn polyline(&self, s: &mut String, pts: &[(f64, f64)], color: &str, width: f64, dash: bool) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", self.px(*x), self.py(*y));
        }
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
            d.trim_end()
        );
    }
}

fn document(w: f64, h: f64, title: &str, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n\
         <text x=\"{:.1}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n{body}</svg>\n",
        w / 2.0,
        esc(title)
    )
}

fn legend(s: &mut String, x: f64, y: f64, entries: &[(&str, &str, bool)]) {
    for (i, (name, color, dash)) in entries.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        let dash = if *dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            x + 22.0,
            x + 27.0,
            yy + 4.0,
            esc(name)
        );
    }
}

/// One vessel path in a trajectory plot.
#[derive(Debug, Clone)]
pub struct Path {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub is_ego: bool,
}

/// Top-down trajectory plot in meters, equal axis scales.
pub fn trajectory(title: &str, paths: &[Path], goal: Option<(f64, f64)>) -> String {
    let all = paths.iter().flat_map(|p| p.points.iter().copied()).chain(goal);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (-1.0, 1.0, -1.0, 1.0);
    }
    let side = (xmax - xmin).max(ymax - ymin).max(1.0) * 1.08;
    let (cx, cy) = ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
    let f = Frame {
        x0: 70.0,
        y0: 40.0,
        w: 520.0,
        h: 520.0,
        xr: (cx - side / 2.0, cx + side / 2.0),
        yr: (cy - side / 2.0, cy + side / 2.0),
    };
    let mut s = String::new();
    f.axes(&mut s, "east (m)", "north (m)");
    for p in paths
        .iter()
        .filter(|p| !p.is_ego)
        .chain(paths.iter().filter(|p| p.is_ego))
    {
        f.polyline(&mut s, &p.points, &p.color, if p.is_ego { 2.0 } else { 1.2 }, false);
        if let Some(&(x, y)) = p.points.last() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                f.px(x),
                f.py(y),
                p.color
            );
        }
    }
    if let Some((gx, gy)) = goal {
        let _ = writeln!(
            s,
            r##"<path d="M {x:.2} {y:.2} m -6 -6 l 12 12 m 0 -12 l -12 12" stroke="#000" stroke-width="2"/>"##,
            x = f.px(gx),
            y = f.py(gy)
        );
    }
    let mut entries: Vec<(&str, &str, bool)> = Vec::new();
    for p in paths.iter().filter(|p| p.is_ego) {
        entries.push((&p.label, &p.color, false));
    }
    if paths.iter().any(|p| !p.is_ego && p.color == CYAN) {
        entries.push(("cooperative obstacle", CYAN, false));
    }
    if paths.iter().any(|p| !p.is_ego && p.color == GRAY) {
        entries.push(("non-cooperative obstacle", GRAY, false));
    }
    legend(&mut s, 610.0, 60.0, &entries);
    document(800.0, 610.0, title, &s)
}

/// Grouped bar chart: one group per category, one bar per series. Values
/// are expected in `[0, 1]`.
pub fn grouped_bars(title: &str, ylabel: &str, categories: &[String], series: &[(String, String, Vec<f64>)]) -> String {
    let f = Frame {
        x0: 70.0,
        y0: 40.0,
        w: 640.0,
        h: 360.0,
        xr: (0.0, categories.len().max(1) as f64),
        yr: (0.0, 1.0),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#000"/>"##,
        f.x0, f.y0, f.w, f.h
    );
    for t in ticks(0.0, 1.0, 5) {
        let y = f.py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            f.x0,
            f.x0 + f.w,
            f.x0 - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let nb = series.len().max(1) as f64;
    let bw = 0.8 / nb;
    for (ci, cat) in categories.iter().enumerate() {
        for (si, (_, color, vals)) in series.iter().enumerate() {
            let v = vals.get(ci).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            let xl = f.px(ci as f64 + 0.1 + si as f64 * bw);
            let xr = f.px(ci as f64 + 0.1 + (si + 1) as f64 * bw);
            let _ = writeln!(
                s,
                r#"<rect x="{xl:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                f.py(v),
                xr - xl,
                f.py(0.0) - f.py(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            f.px(ci as f64 + 0.5),
            f.y0 + f.h + 14.0,
            esc(cat)
        );
    }
    let (lx, ly) = (f.x0 - 44.0, f.y0 + f.h / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{lx:.1}" y="{ly:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
        esc(ylabel)
    );
    let entries: Vec<(&str, &str, bool)> = series.iter().map(|(n, c, _)| (n.as_str(), c.as_str(), false)).collect();
    legend(&mut s, 730.0, 60.0, &entries);
    document(860.0, 440.0, title, &s)
}

/// A named line in a time-series plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

/// Line plot with optional horizontal reference lines `(label, y, color)`.
pub fn lines(title: &str, xlabel: &str, ylabel: &str, series: &[Series], refs: &[(String, f64, String)]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .chain(refs.iter().map(|r| r.1));
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ymax = ys.fold(0.0f64, f64::max);
    let (xmin, xmax) = if xmin.is_finite() && xmax > xmin {
        (xmin, xmax)
    } else {
        (0.0, 1.0)
    };
    let f = Frame {
        x0: 70.0,
        y0: 40.0,
        w: 600.0,
        h: 340.0,
        xr: (xmin, xmax),
        yr: (0.0, if ymax > 0.0 { ymax * 1.05 } else { 1.0 }),
    };
    let mut s = String::new();
    f.axes(&mut s, xlabel, ylabel);
    for (label, y, color) in refs {
        f.polyline(&mut s, &[(xmin, *y), (xmax, *y)], color, 1.0, true);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{color}" text-anchor="end">{}</text>"#,
            f.x0 + f.w - 4.0,
            f.py(*y) - 4.0,
            esc(label)
        );
    }
    for line in series {
        f.polyline(&mut s, &line.points, &line.color, 1.8, line.dashed);
    }
    let entries: Vec<(&str, &str, bool)> = series
        .iter()
        .map(|l| (l.label.as_str(), l.color.as_str(), l.dashed))
        .collect();
    legend(&mut s, 690.0, 60.0, &entries);
    document(880.0, 420.0, title, &s)
}

/// Linear blue-to-yellow ramp; `t` in `[0, 1]`.
fn ramp_color(t: f64) -> String {
    let stops = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (t.floor() as usize).min(stops.len() - 2);
    let u = t - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let c = |x: f64, y: f64| (x + (y - x) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Polar heatmap of a heading x speed field: angle is the compass heading
/// (north up, clockwise), radius the speed ratio. `value(h, k)` is read for
/// every heading `h` in `0..headings` and speed step `k` in `1..speeds`;
/// the zero-speed ring collapses to a point and is skipped.
pub fn polar_heatmap(
    title: &str,
    headings: usize,
    speeds: usize,
    value: impl Fn(usize, usize) -> f64,
    marker_heading: Option<f64>,
) -> String {
    let (cx, cy, r) = (300.0, 320.0, 250.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for h in 0..headings {
        for k in 1..speeds {
            let v = value(h, k);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pt = |deg: f64, rad: f64| {
        let a = deg.to_radians();
        (cx + rad * a.sin(), cy - rad * a.cos())
    };
    let ring = r / (speeds - 1).max(1) as f64;
    let dh = 360.0 / headings as f64;
    let mut s = String::new();
    for h in 0..headings {
        let (a0, a1) = (h as f64 * dh - dh / 2.0, h as f64 * dh + dh / 2.0);
        for k in 1..speeds {
            let (r0, r1) = ((k as f64 - 0.5) * ring, ((k as f64 + 0.5) * ring).min(r + ring / 2.0));
            let p = [pt(a0, r0), pt(a0, r1), pt(a1, r1), pt(a1, r0)];
            let _ = writeln!(
                s,
                r#"<path d="M{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}Z" fill="{}"/>"#,
                p[0].0,
                p[0].1,
                p[1].0,
                p[1].1,
                p[2].0,
                p[2].1,
                p[3].0,
                p[3].1,
                ramp_color((value(h, k) - lo) / span)
            );
        }
    }
    for deg in (0..360).step_by(45) {
        let (x, y) = pt(deg as f64, r + ring / 2.0 + 14.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{deg}</text>"#,
            y + 4.0
        );
    }
    if let Some(m) = marker_heading {
        let (x, y) = pt(m, r + ring / 2.0);
        let _ = writeln!(
            s,
            r##"<line x1="{cx}" y1="{cy}" x2="{x:.2}" y2="{y:.2}" stroke="#d62728" stroke-width="2"/>"##
        );
    }
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        let y = 560.0 - t * 440.0;
        let _ = writeln!(
            s,
            r#"<rect x="610" y="{:.1}" width="18" height="23" fill="{}"/>"#,
            y - 22.0,
            ramp_color(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="634" y="545" font-size="11">{}</text><text x="634" y="112" font-size="11">{}</text>"#,
        fmt_tick(lo),
        fmt_tick(hi)
    );
    document(700.0, 620.0, title, &s)
}
