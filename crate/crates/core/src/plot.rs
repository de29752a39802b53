//! Minimal SVG line charts for the CSV outputs.

use std::fmt::Write as _;

use crate::io::Table;
use crate::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One polyline per `y` column against column `x`. With `group` set, each
/// distinct value of that column becomes its own polyline.
#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x: Option<String>,
    pub y: Vec<String>,
    pub group: Option<String>,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn column_index(table: &Table, name: &str) -> Result<usize> {
    table
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidArgument(format!("no column named `{name}`")))
}

fn build_series(table: &Table, spec: &PlotSpec) -> Result<Vec<Series>> {
    let xi = match &spec.x {
        Some(name) => column_index(table, name)?,
        None => 0,
    };
    let gi = spec.group.as_deref().map(|g| column_index(table, g)).transpose()?;
    let yis: Vec<usize> = if spec.y.is_empty() {
        (0..table.header.len()).filter(|&k| k != xi && Some(k) != gi).collect()
    } else {
        spec.y.iter().map(|y| column_index(table, y)).collect::<Result<_>>()?
    };
    if yis.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let mut out: Vec<Series> = Vec::new();
    for &yi in &yis {
        let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
        for (_, row) in &table.rows {
            let key = gi.map_or(0.0, |g| row[g]);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, pts)) => pts.push((row[xi], row[yi])),
                None => groups.push((key, vec![(row[xi], row[yi])])),
            }
        }
        for (key, points) in groups {
            let label = match gi {
                Some(g) => format!("{} {}={}", table.header[yi], table.header[g], key),
                None => table.header[yi].clone(),
            };
            out.push(Series { label, points });
        }
    }
    Ok(out)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the table as an SVG document.
pub fn render_svg(table: &Table, spec: &PlotSpec) -> Result<String> {
    let series = build_series(table, spec)?;
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = range(all().map(|p| p.0));
    let (y0, y1) = range(all().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let x_label = spec
        .x
        .clone()
        .unwrap_or_else(|| table.header.first().cloned().unwrap_or_default());

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            b + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        escape(&x_label)
    );
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
        let ly = t + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}" text-anchor="end">{}</text>"#,
            r,
            ly,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        Table {
            header: vec!["cycle".into(), "t_s".into(), "error_deg".into()],
            rows: vec![
                (2, vec![0.0, 0.0, 1.0]),
                (3, vec![0.0, 1.0, 2.0]),
                (4, vec![1.0, 0.0, -1.0]),
                (5, vec![1.0, 1.0, 0.5]),
            ],
        }
    }

    #[test]
    fn groups_become_polylines() {
        let spec = PlotSpec {
            title: "errors".into(),
            x: Some("t_s".into()),
            y: vec!["error_deg".into()],
            group: Some("cycle".into()),
        };
        let svg = render_svg(&table(), &spec).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn default_uses_every_other_column() {
        let svg = render_svg(&table(), &PlotSpec::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn unknown_column_is_an_error() {
        let spec = PlotSpec {
            y: vec!["nope".into()],
            ..PlotSpec::default()
        };
        assert!(render_svg(&table(), &spec).is_err());
    }
}
