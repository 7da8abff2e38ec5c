//! Log-log error plots of equidistribution payloads, rendered as plain SVG.

use std::fmt::Write as _;

use horopoints::stats::{rate_fit, EquidistReport, ERROR_FLOOR};

use crate::HarnessError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const LEGEND_ROW: f64 = 14.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    fit: Option<(f64, f64)>,
}

/// Renders the equidist payload `json` (an array of reports) as an SVG.
pub fn render_equidist(json: &str) -> Result<String, HarnessError> {
    let reports: Vec<EquidistReport> = serde_json::from_str(json)?;
    let series: Vec<Series> = reports
        .iter()
        .filter_map(|r| {
            let points: Vec<(f64, f64)> = r
                .n_values
                .iter()
                .zip(&r.errors)
                .filter(|(_, &e)| e > ERROR_FLOOR)
                .map(|(&n, &e)| ((n as f64).log10(), e.log10()))
                .collect();
            if points.is_empty() {
                return None;
            }
            let ns: Vec<f64> = points.iter().map(|p| 10f64.powf(p.0)).collect();
            let es: Vec<f64> = points.iter().map(|p| 10f64.powf(p.1)).collect();
            // intercept in log10 space from the fitted slope
            let fit = rate_fit(&ns, &es).ok().map(|(kappa, _)| {
                let mean_x = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
                let mean_y = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
                (kappa, mean_y + kappa * mean_x)
            });
            Some(Series { label: format!("{} (d={})", r.description, r.spec.d), points, fit })
        })
        .collect();
    if series.is_empty() {
        return Err(HarnessError::NoData);
    }
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x0, x1) = padded(xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = padded(ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    // legend rows sit above the axes
    let top = MARGIN.max(LEGEND_ROW * (series.len() + 2) as f64);
    let height = top + HEIGHT - MARGIN;
    let sy = |y: f64| height - MARGIN - (y - y0) / (y1 - y0) * (height - top - MARGIN);

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(w, "<!-- series,n,error");
    for (i, s) in series.iter().enumerate() {
        for p in &s.points {
            let _ = writeln!(w, "{i},{},{:e}", 10f64.powf(p.0).round(), 10f64.powf(p.1));
        }
    }
    let _ = writeln!(w, "-->");
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" stroke="black" fill="none"/>"#,
        l = MARGIN,
        t = top,
        b = height - MARGIN,
        r = WIDTH - MARGIN
    );
    for k in x0.ceil() as i64..=x1.floor() as i64 {
        let x = sx(k as f64);
        let _ = writeln!(w, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{k}</text>"#, height - MARGIN + 18.0);
    }
    for k in y0.ceil() as i64..=y1.floor() as i64 {
        let y = sy(k as f64);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"#, MARGIN - 6.0, y + 4.0);
    }
    let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#, WIDTH / 2.0, height - 15.0);
    let _ = writeln!(w, r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">|error|</text>"#, height / 2.0, height / 2.0);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s.points.iter().map(|p| format!("{:.1},{:.1}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(w, r#"<polyline points="{}" stroke="{color}" fill="none"/>"#, path.join(" "));
        for p in &s.points {
            let _ = writeln!(w, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(p.0), sy(p.1));
        }
        let mut legend = s.label.clone();
        if let Some((kappa, intercept)) = s.fit {
            let (a, b) = (s.points[0].0, s.points[s.points.len() - 1].0);
            let _ = writeln!(
                w,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-dasharray="5,4"/>"#,
                sx(a),
                sy(intercept - kappa * a),
                sx(b),
                sy(intercept - kappa * b)
            );
            let _ = write!(legend, ", slope -{kappa:.3}");
        }
        let y = LEGEND_ROW * (i + 1) as f64;
        let _ = writeln!(w, r#"<text x="{:.1}" y="{y:.1}" fill="{color}">{}</text>"#, MARGIN + 10.0, escape(&legend));
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).max(0.5);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
