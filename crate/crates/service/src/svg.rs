//! SVG scatter plot of a speed-accuracy trade-off curve.

use std::fmt::Write;

use satf_core::analytics::SatfCurve;
use satf_core::benchmark::ExpertProfile;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-9);
        let lo = (lo - pad).max(0.0);
        let hi = if hi - lo < 1e-9 { lo + 1.0 } else { hi + pad };
        Self { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self, count: usize) -> Vec<f64> {
        let raw = (self.hi - self.lo) / count as f64;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 {
            out.push(t);
            t += step;
        }
        out
    }
}

/// Renders points in curve order (time ascending left to right, off-target
/// upwards) with dashed lines at the expert's mean time and mean score.
pub fn render_satf(curve: &SatfCurve, expert: Option<&ExpertProfile>, title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let expert_t = expert.map(|e| e.time.mean);
    let expert_p = expert.map(|e| e.precision.mean);
    let xa = Axis::new(curve.points.iter().map(|p| p.time_s).chain(expert_t));
    let ya = Axis::new(
        curve
            .points
            .iter()
            .map(|p| p.off_target_px as f64)
            .chain(expert_p),
    );
    let sx = |v: f64| LEFT + xa.frac(v) * plot_w;
    let sy = |v: f64| TOP + (1.0 - ya.frac(v)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for t in xa.ticks(8) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            trim(t)
        );
    }
    for t in ya.ticks(6) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            trim(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">task time (s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">off-target score (px)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if let Some(t) = expert_t {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line class="expert-time" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
            TOP + plot_h
        );
    }
    if let Some(p) = expert_p {
        let y = sy(p);
        let _ = writeln!(
            s,
            r##"<line class="expert-precision" x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
            LEFT + plot_w
        );
    }

    let _ = writeln!(s, r#"<g class="points">"#);
    for p in &curve.points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#2471a3"><title>{} #{}: {:.3} s, {} px</title></circle>"##,
            sx(p.time_s),
            sy(p.off_target_px as f64),
            escape(&p.trial_ref.session_id),
            p.trial_ref.trial_index,
            p.time_s,
            p.off_target_px
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// `cx` attributes of the plotted points, in document order.
pub fn point_xs(svg: &str) -> Vec<f64> {
    svg.lines()
        .filter(|l| l.starts_with("<circle"))
        .filter_map(|l| {
            let rest = &l[l.find("cx=\"")? + 4..];
            rest[..rest.find('"')?].parse().ok()
        })
        .collect()
}
