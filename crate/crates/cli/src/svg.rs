use std::fmt::Write;

use iterprior::numerics::{Density1D, DensityGrid2D};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn ticks(out: &mut String, x0: f64, x1: f64, y: f64, lo: f64, hi: f64) {
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let x = x0 + f * (x1 - x0);
        let v = lo + f * (hi - lo);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            y + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y + 18.0,
            format_tick(v)
        );
    }
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Histogram of `samples` over the density's bins with the smoothed
/// density drawn on top.
pub fn histogram(density: &Density1D, samples: &[f64], title: &str, x_label: &str) -> String {
    let bins = density.bins();
    let support = density.support();
    let mut counts = vec![0.0; bins];
    for &s in samples {
        if let Some(b) = support.bin_of(s) {
            counts[b] += 1.0;
        }
    }
    let n = samples.len().max(1) as f64;
    let hist: Vec<f64> = counts.iter().map(|c| c / n).collect();
    let peak = hist
        .iter()
        .chain(density.masses())
        .fold(0.0f64, |a, &b| a.max(b))
        .max(f64::MIN_POSITIVE);

    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let bw = (x1 - x0) / bins as f64;
    let y_of = |m: f64| y0 - (y0 - y1) * m / peak;

    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT, title);
    out.push_str("<g fill=\"#9ecae1\" stroke=\"none\">\n");
    for (i, &m) in hist.iter().enumerate() {
        if m > 0.0 {
            let top = y_of(m);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}"/>"#,
                x0 + i as f64 * bw,
                y0 - top
            );
        }
    }
    out.push_str("</g>\n");
    let points: Vec<String> = density
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &m)| format!("{:.2},{:.2}", x0 + (i as f64 + 0.5) * bw, y_of(m)))
        .collect();
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"{}\"/>",
        points.join(" ")
    );
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    ticks(&mut out, x0, x1, y0, density.lo(), density.hi());
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">probability</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// Heatmap of a grid over `w0` (horizontal) and `w1` (vertical).
pub fn heatmap(grid: &DensityGrid2D, title: &str) -> String {
    let res = grid.resolution();
    let size = 360.0;
    let (x0, y0) = (LEFT, TOP);
    let cell = size / res as f64;
    let peak = grid
        .masses()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
        .max(f64::MIN_POSITIVE);

    let mut out = String::new();
    open(&mut out, size + LEFT + RIGHT + 20.0, size + TOP + BOTTOM, title);
    out.push_str("<g stroke=\"none\">\n");
    for i in 0..res {
        for j in 0..res {
            let m = grid.mass(i, j);
            if m <= 0.0 {
                continue;
            }
            let shade = 255.0 * (1.0 - m / peak);
            let (r, g) = (shade.round() as u8, (shade * 0.6 + 80.0 * m / peak).round() as u8);
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="rgb({r},{g},255)"/>"#,
                x0 + i as f64 * cell,
                y0 + (res - 1 - j) as f64 * cell,
                cell + 0.05,
                cell + 0.05
            );
        }
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    ticks(&mut out, x0, x0 + size, y0 + size, 0.0, 1.0);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let y = y0 + size - f * size;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            format_tick(f)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">w0</text>"#,
        x0 + size / 2.0,
        y0 + size + 40.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">w1</text>"#,
        y0 + size / 2.0,
        y0 + size / 2.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use iterprior::numerics::Support1D;

    #[test]
    fn titles_are_escaped() {
        let d = Density1D::uniform(Support1D::new(0.0, 1.0, 10).unwrap());
        let svg = histogram(&d, &[0.5], "a < b & c", "x");
        assert!(svg.contains("a &lt; b &amp; c"));
    }

    #[test]
    fn heatmap_skips_empty_cells() {
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let g = DensityGrid2D::from_weights(3, w).unwrap();
        assert_eq!(heatmap(&g, "t").matches("rgb(").count(), 1);
    }
}
