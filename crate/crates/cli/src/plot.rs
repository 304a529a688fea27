//! Self-contained SVG charts: line traces and SPAT timelines.

use std::fmt::Write;

use tcbench_core::urban::{Color, SpatEvent};

const W: f64 = 900.0;
const H: f64 = 320.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 150.0;
const PAD_T: f64 = 40.0;
const PAD_B: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, esc(title));
    s
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn axes(s: &mut String, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (PAD_L, W - PAD_R, H - PAD_B, PAD_T);
    let _ = writeln!(s, r#"<path d="M{x0} {y1}V{y0}H{x1}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = f64::from(k) / 4.0;
        let px = x0 + f * (x1 - x0);
        let py = y0 - f * (y0 - y1);
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#, y0 + 16.0, x.0 + f * (x.1 - x.0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#, x0 - 6.0, py + 4.0, y.0 + f * (y.1 - y.0));
        let _ = writeln!(s, r##"<path d="M{x0} {py:.1}H{x1}" stroke="#ddd"/>"##);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, esc(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    );
}

/// Line chart of named series; `reference` draws a dashed horizontal line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)], reference: Option<f64>) -> String {
    let xr = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let yr = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).chain(reference));
    let yr = (yr.0.min(0.0), yr.1);
    let sx = |x: f64| PAD_L + (x - xr.0) / (xr.1 - xr.0) * (W - PAD_L - PAD_R);
    let sy = |y: f64| H - PAD_B - (y - yr.0) / (yr.1 - yr.0) * (H - PAD_T - PAD_B);
    let mut s = open(title);
    axes(&mut s, xr, yr, x_label, y_label);
    if let Some(r) = reference {
        let _ = writeln!(s, r#"<path d="M{PAD_L} {:.1}H{}" stroke="gray" stroke-dasharray="6 4"/>"#, sy(r), W - PAD_R);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let d: String = pts
            .iter()
            .enumerate()
            .map(|(k, (x, y))| format!("{}{:.1} {:.1}", if k == 0 { "M" } else { "L" }, sx(*x), sy(*y)))
            .collect();
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>"#);
        }
        let ly = PAD_T + 18.0 * i as f64;
        let _ = writeln!(s, r#"<path d="M{} {ly:.1}h20" stroke="{c}" stroke-width="3"/>"#, W - PAD_R + 10.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}">{}</text>"#, W - PAD_R + 36.0, ly + 4.0, esc(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Signal phase and timing bars for one intersection over `[t0, t1)`.
pub fn spat_chart(intersection: &str, n_phases: usize, events: &[SpatEvent], t0: f64, t1: f64) -> String {
    let mut s = open(&format!("SPAT {intersection}"));
    axes(&mut s, (t0, t1), (0.0, n_phases as f64), "time [s]", "phase");
    let sx = |t: f64| PAD_L + (t.clamp(t0, t1) - t0) / (t1 - t0) * (W - PAD_L - PAD_R);
    let row_h = (H - PAD_T - PAD_B) / n_phases.max(1) as f64;
    for p in 0..n_phases {
        let y = H - PAD_B - (p + 1) as f64 * row_h + 4.0;
        let mut state = (Color::Red, f64::NEG_INFINITY);
        let evs: Vec<&SpatEvent> = events.iter().filter(|e| e.intersection == intersection && e.phase == p).collect();
        let mut bars = vec![];
        for e in evs {
            bars.push((state.0, state.1, e.t));
            state = (e.color, e.t);
        }
        bars.push((state.0, state.1, f64::INFINITY));
        for (c, a, b) in bars {
            if b <= t0 || a >= t1 {
                continue;
            }
            let fill = match c {
                Color::Green => "#2ca02c",
                Color::Yellow => "#f2c200",
                Color::Red => "#d62728",
            };
            let (xa, xb) = (sx(a), sx(b));
            let _ = writeln!(s, r#"<rect x="{xa:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{fill}"/>"#, xb - xa, row_h - 8.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}">phase {p}</text>"#, W - PAD_R + 10.0, y + row_h / 2.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_closed_svg() {
        let c = line_chart("t", "x", "y", &[("a".into(), vec![(0.0, 1.0), (1.0, 2.0)])], Some(1.5));
        assert!(c.starts_with("<svg") && c.ends_with("</svg>\n"));
        let e = vec![SpatEvent { t: 0.0, intersection: "I1".into(), phase: 0, color: Color::Green }];
        let s = spat_chart("I1", 2, &e, 0.0, 10.0);
        assert_eq!(s.matches("<rect").count(), 1 + 2);
        assert!(line_chart("<&>", "", "", &[], None).contains("&lt;&amp;&gt;"));
    }
}
