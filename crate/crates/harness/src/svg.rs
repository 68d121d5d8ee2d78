//! Standalone SVG plots: projection scatters and time-series lines.

use std::fmt::Write;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 280.0;
const MARGIN: f64 = 48.0;

enum Mark {
    Dots,
    Line,
}

struct Panel<'a> {
    title: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    data: Vec<(f64, f64)>,
    mark: Mark,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw_panel(out: &mut String, panel: &Panel, left: f64) {
    let (x0, x1) = range(panel.data.iter().map(|p| p.0));
    let (y0, y1) = range(panel.data.iter().map(|p| p.1));
    let (pl, pt) = (left + MARGIN, MARGIN);
    let (pw, ph) = (PANEL_W - 1.5 * MARGIN, PANEL_H - 2.0 * MARGIN);
    let sx = |x: f64| pl + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| pt + ph - (y - y0) / (y1 - y0) * ph;

    let _ = writeln!(
        out,
        r##"<rect x="{pl:.1}" y="{pt:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        pl + pw / 2.0,
        pt - 14.0,
        escape(panel.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
        pl + pw / 2.0,
        pt + ph + 32.0,
        escape(panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        pl - 34.0,
        pt + ph / 2.0,
        pl - 34.0,
        pt + ph / 2.0,
        escape(panel.y_label)
    );
    for (v, x, anchor) in [(x0, pl, "start"), (x1, pl + pw, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="{anchor}" font-size="9">{v:.3}</text>"#,
            pt + ph + 14.0
        );
    }
    for (v, y) in [(y0, pt + ph), (y1, pt + 8.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end" font-size="9">{v:.3}</text>"#,
            pl - 4.0
        );
    }
    match panel.mark {
        Mark::Dots => {
            let _ = writeln!(out, r##"<g fill="#1f77b4" fill-opacity="0.5">"##);
            for &(x, y) in &panel.data {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="1.2"/>"#, sx(x), sy(y));
            }
            out.push_str("</g>\n");
        }
        Mark::Line => {
            let mut d = String::new();
            for (i, &(x, y)) in panel.data.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
            }
            let _ = writeln!(
                out,
                r##"<path d="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
                d.trim_end()
            );
        }
    }
}

fn document(title: &str, panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    for (i, panel) in panels.iter().enumerate() {
        draw_panel(&mut out, panel, PANEL_W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// XY, XZ and YZ projections of a point cloud (meters).
pub fn projections(title: &str, points: &[[f64; 3]]) -> String {
    let proj = |a: usize, b: usize| points.iter().map(|p| (p[a], p[b])).collect();
    document(
        title,
        &[
            Panel { title: "XY", x_label: "x (m)", y_label: "y (m)", data: proj(0, 1), mark: Mark::Dots },
            Panel { title: "XZ", x_label: "x (m)", y_label: "z (m)", data: proj(0, 2), mark: Mark::Dots },
            Panel { title: "YZ", x_label: "y (m)", y_label: "z (m)", data: proj(1, 2), mark: Mark::Dots },
        ],
    )
}

/// Speed and acceleration against time.
pub fn speed_plot(title: &str, time: &[f64], speed: &[f64], acceleration: &[f64]) -> String {
    let series = |v: &[f64]| time.iter().copied().zip(v.iter().copied()).collect();
    document(
        title,
        &[
            Panel {
                title: "End-effector speed",
                x_label: "time (s)",
                y_label: "speed (m/s)",
                data: series(speed),
                mark: Mark::Line,
            },
            Panel {
                title: "End-effector acceleration",
                x_label: "time (s)",
                y_label: "acceleration (m/s²)",
                data: series(acceleration),
                mark: Mark::Line,
            },
        ],
    )
}
