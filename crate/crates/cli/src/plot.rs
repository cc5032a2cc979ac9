//! Self-contained SVG line charts from trace or sweep CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::config("empty CSV"))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(|s| s.trim().to_string()).collect()).collect();
        if rows.is_empty() {
            return Err(CliError::config("CSV has a header but no rows"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != header.len() {
                return Err(CliError::config(format!("CSV row {} has {} fields, header has {}", i + 2, r.len(), header.len())));
            }
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("missing column {name:?}")))
    }

    fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }
}

/// Named points plus whether they are drawn as a line or as dots.
struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    line: bool,
}

fn number(s: &str, column: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::config(format!("column {column:?}: {s:?} is not a number")))
}

/// One polyline of avg_regret against day per run (or algorithm).
fn trace_series(t: &Table) -> Result<(Vec<Series>, String, String), CliError> {
    let day = t.column("day")?;
    let regret = t.column("avg_regret")?;
    let key = ["run_id", "algorithm"].into_iter().find(|k| t.has(k)).map(|k| t.column(k)).transpose()?;
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &t.rows {
        let name = key.map_or_else(|| "run".to_string(), |k| r[k].clone());
        if r[regret].is_empty() {
            continue;
        }
        groups.entry(name).or_default().push((number(&r[day], "day")?, number(&r[regret], "avg_regret")?));
    }
    let series = groups.into_iter().map(|(name, points)| Series { name, points, line: true }).collect();
    Ok((series, "day".into(), "average regret".into()))
}

/// Per-seed dots and a mean line of avg_regret against `x`, one colour per
/// algorithm. Non-numeric `x` values are placed in first-seen order.
fn sweep_series(t: &Table, x: Option<&str>) -> Result<(Vec<Series>, String, String), CliError> {
    let regret = t.column("avg_regret")?;
    let alg = t.column("algorithm")?;
    let x_name = match x {
        Some(x) => x.to_string(),
        None => {
            let cell = t.column("cell")?;
            let seed = t.column("seed")?;
            if seed <= cell + 1 {
                return Err(CliError::config("missing column: sweep CSV has no grid axis between cell and seed"));
            }
            t.header[cell + 1].clone()
        }
    };
    let xc = t.column(&x_name)?;
    let numeric = t.rows.iter().all(|r| r[xc].parse::<f64>().is_ok());
    let mut categories: Vec<String> = Vec::new();
    let mut position = |v: &str| -> f64 {
        if numeric {
            v.parse().unwrap_or(0.0)
        } else {
            match categories.iter().position(|c| c == v) {
                Some(i) => i as f64,
                None => {
                    categories.push(v.to_string());
                    (categories.len() - 1) as f64
                }
            }
        }
    };
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &t.rows {
        if r[regret].is_empty() {
            continue;
        }
        let px = position(&r[xc]);
        groups.entry(r[alg].clone()).or_default().push((px, number(&r[regret], "avg_regret")?));
    }
    let mut series = Vec::new();
    for (name, points) in groups {
        let mut by_x: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
        for &(px, py) in &points {
            let e = by_x.entry(px.to_bits() ^ (1 << 63)).or_insert((px, 0.0, 0));
            e.1 += py;
            e.2 += 1;
        }
        let mut means: Vec<(f64, f64)> = by_x.values().map(|&(px, s, c)| (px, s / c as f64)).collect();
        means.sort_by(|a, b| a.0.total_cmp(&b.0));
        series.push(Series { name: format!("{name} (seeds)"), points, line: false });
        series.push(Series { name: format!("{name} (mean)"), points: means, line: true });
    }
    Ok((series, x_name, "average regret".into()))
}

fn tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a trace or sweep CSV. `x` picks the sweep axis.
pub fn render(text: &str, x: Option<&str>) -> Result<String, CliError> {
    let t = Table::parse(text)?;
    let (series, x_label, y_label) = if t.has("day") { trace_series(&t)? } else { sweep_series(&t, x)? };
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        return Err(CliError::config("no plottable rows"));
    }
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(px, py)| (a.min(px), b.max(px), c.min(py), d.max(py)),
    );
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    y0 = y0.min(0.0);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<!-- expertstream {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (vx, vy) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(vx), sy(vy));
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 16.0,
            tick(vx)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0,
            tick(vy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&y_label)
    );
    let mut colour_of: BTreeMap<String, &str> = BTreeMap::new();
    for (i, s) in series.iter().enumerate() {
        let base = s.name.split(" (").next().unwrap_or(&s.name).to_string();
        let next = PALETTE[colour_of.len() % PALETTE.len()];
        let colour = *colour_of.entry(base).or_insert(next);
        if s.line {
            let pts: Vec<String> = s.points.iter().map(|&(px, py)| format!("{:.2},{:.2}", sx(px), sy(py))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        } else {
            for &(px, py) in &s.points {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}" fill-opacity="0.45"/>"#,
                    sx(px),
                    sy(py)
                );
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{colour}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 6.0,
            lx + 18.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
