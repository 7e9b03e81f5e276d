//! Standalone SVG regret plot: one series per algorithm, mean line with a
//! one-standard-deviation band.

use std::fmt::Write as _;
use std::path::Path;

use super::sweep::{Summary, SweepResult};
use crate::error::{CbwkError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

/// Blue for GLMtron, orange for gradient descent, red for LinUCB.
fn color(algorithm: &str, index: usize) -> &'static str {
    match algorithm {
        "squarecbwk:glmtron" => "#1f77b4",
        "squarecbwk:ogd" => "#ff7f0e",
        "linucb" => "#d62728",
        "twostage:glmtron" => "#2ca02c",
        "twostage:ogd" => "#9467bd",
        _ => ["#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"][index % 5],
    }
}

/// Rounds a span to 1, 2 or 5 times a power of ten.
fn nice_step(span: f64, ticks: f64) -> f64 {
    let raw = (span / ticks).max(f64::MIN_POSITIVE);
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    }
}

fn axis_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if hi - lo < 1e-12 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
    let step = nice_step(hi - lo, 5.0);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn label(v: f64) -> String {
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders the regret-vs-parameter figure as an SVG document.
pub fn render_svg(result: &SweepResult) -> Result<String> {
    let summaries: Vec<Summary> = result.summaries().into_iter().filter(|s| s.count > 0).collect();
    if summaries.is_empty() {
        return Err(CbwkError::config("nothing to plot: no successful rows"));
    }
    let mut series: Vec<(String, Vec<&Summary>)> = Vec::new();
    for s in &summaries {
        match series.iter_mut().find(|(a, _)| *a == s.algorithm) {
            Some((_, v)) => v.push(s),
            None => series.push((s.algorithm.clone(), vec![s])),
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by_key(|s| s.sweep_value);
    }

    let xs = summaries.iter().map(|s| s.sweep_value as f64);
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let y_lo = summaries.iter().map(|s| s.mean - s.std).fold(f64::INFINITY, f64::min);
    let y_hi = summaries.iter().map(|s| s.mean + s.std).fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1, xstep) = axis_range(x_lo, x_hi);
    let (y0, y1, ystep) = axis_range(y_lo.min(0.0), y_hi);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let mut t = x0;
    while t <= x1 + xstep * 1e-6 {
        let x = px(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 18.0,
            label(t)
        );
        t += xstep;
    }
    let mut t = y0;
    while t <= y1 + ystep * 1e-6 {
        let y = py(t);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        );
        t += ystep;
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        result.sweep_param
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">regret</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, (name, pts)) in series.iter().enumerate() {
        let c = color(name, i);
        let upper: Vec<String> = pts
            .iter()
            .map(|s| format!("{:.2},{:.2}", px(s.sweep_value as f64), py(s.mean + s.std)))
            .collect();
        let lower: Vec<String> = pts
            .iter()
            .rev()
            .map(|s| format!("{:.2},{:.2}", px(s.sweep_value as f64), py(s.mean - s.std)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polygon points="{} {}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|s| format!("{:.2},{:.2}", px(s.sweep_value as f64), py(s.mean)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for s in pts {
            let _ = writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#,
                px(s.sweep_value as f64),
                py(s.mean)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_plot(result: &SweepResult, path: &Path) -> Result<()> {
    let svg = render_svg(result)?;
    std::fs::write(path, svg).map_err(|e| CbwkError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::{CellOutcome, Row};

    fn row(alg: &str, v: usize, regret: f64) -> Row {
        Row {
            algorithm: alg.into(),
            sweep_param: "T".into(),
            sweep_value: v,
            seed: 0,
            outcome: Ok(CellOutcome {
                regret,
                tau: 1,
                total_reward: 0.0,
            }),
            runtime_ms: None,
        }
    }

    #[test]
    fn single_point_has_zero_width_band() {
        let r = SweepResult {
            sweep_param: "T".into(),
            rows: vec![row("linucb", 100, 5.0)],
        };
        let svg = render_svg(&r).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        let poly = svg.lines().find(|l| l.starts_with("<polygon")).unwrap();
        let pts: Vec<&str> = poly.split('"').nth(1).unwrap().split(' ').collect();
        assert_eq!(pts[0], pts[1]);
    }

    #[test]
    fn three_series_use_the_figure_colors() {
        let rows = ["squarecbwk:glmtron", "squarecbwk:ogd", "linucb"]
            .iter()
            .flat_map(|a| [row(a, 10, 1.0), row(a, 20, 2.0)])
            .collect();
        let svg = render_svg(&SweepResult {
            sweep_param: "m".into(),
            rows,
        })
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        for c in ["#1f77b4", "#ff7f0e", "#d62728"] {
            assert!(svg.contains(c));
        }
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_step(97.0, 5.0), 20.0);
        assert_eq!(axis_range(3.0, 97.0), (0.0, 100.0, 20.0));
    }
}
