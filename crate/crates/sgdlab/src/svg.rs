//! Minimal SVG emitter: line charts, histograms, heatmaps. No runtime
//! plotting dependency and no timestamps, so output bytes depend only on the
//! data.

const W: f64 = 800.0;
const H: f64 = 560.0;
const ML: f64 = 70.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn finite_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        ML + (x - self.x_lo) / (self.x_hi - self.x_lo) * (W - ML - MR)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MB - (y - self.y_lo) / (self.y_hi - self.y_lo) * (H - MT - MB)
    }

    fn axes(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        out.push_str(&format!(
            "<rect x='{ML}' y='{MT}' width='{}' height='{}' fill='none' stroke='#333'/>\n",
            W - ML - MR,
            H - MT - MB
        ));
        out.push_str(&format!(
            "<text x='{}' y='24' text-anchor='middle' font-size='16'>{}</text>\n",
            W / 2.0,
            xml_escape(title)
        ));
        out.push_str(&format!(
            "<text x='{}' y='{}' text-anchor='middle' font-size='13'>{}</text>\n",
            W / 2.0,
            H - 12.0,
            xml_escape(x_label)
        ));
        out.push_str(&format!(
            "<text x='16' y='{}' text-anchor='middle' font-size='13' transform='rotate(-90 16 {})'>{}</text>\n",
            H / 2.0,
            H / 2.0,
            xml_escape(y_label)
        ));
        for k in 0..=4 {
            let fx = self.x_lo + (self.x_hi - self.x_lo) * k as f64 / 4.0;
            let fy = self.y_lo + (self.y_hi - self.y_lo) * k as f64 / 4.0;
            out.push_str(&format!(
                "<text x='{:.1}' y='{}' text-anchor='middle' font-size='11'>{:.3}</text>\n",
                self.sx(fx),
                H - MB + 16.0,
                fx
            ));
            out.push_str(&format!(
                "<text x='{}' y='{:.1}' text-anchor='end' font-size='11'>{:.3}</text>\n",
                ML - 6.0,
                self.sy(fy) + 4.0,
                fy
            ));
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(body: String) -> String {
    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{W}' height='{H}' viewBox='0 0 {W} {H}'>\n\
         <rect width='100%' height='100%' fill='white'/>\n{body}</svg>\n"
    )
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let frame = {
        let (x_lo, x_hi) = finite_bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (y_lo, y_hi) = finite_bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        Frame { x_lo, x_hi, y_lo, y_hi }
    };
    let mut body = String::new();
    frame.axes(&mut body, title, x_label, y_label);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.sx(x), frame.sy(y)))
            .collect();
        body.push_str(&format!(
            "<polyline points='{}' fill='none' stroke='{color}' stroke-width='1.5'/>\n",
            pts.join(" ")
        ));
        body.push_str(&format!(
            "<text x='{}' y='{}' font-size='12' fill='{color}'>{}</text>\n",
            W - MR - 150.0,
            MT + 16.0 + 16.0 * k as f64,
            xml_escape(&s.label)
        ));
    }
    document(body)
}

pub fn histogram_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    // Series points are (bin center, count); rendered as stepped outlines so
    // several snapshots can overlay.
    line_chart(title, x_label, "count", series)
}

/// Heatmap of `z[i][j]` over `xs[i] x ys[j]`, values mapped 0 -> dark blue,
/// 1 -> white.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], z: &[Vec<f64>]) -> String {
    let frame = {
        let (x_lo, x_hi) = finite_bounds(xs.iter().copied());
        let (y_lo, y_hi) = finite_bounds(ys.iter().copied());
        Frame { x_lo, x_hi, y_lo, y_hi }
    };
    let mut body = String::new();
    let cw = (W - ML - MR) / xs.len() as f64;
    let ch = (H - MT - MB) / ys.len() as f64;
    for (i, _) in xs.iter().enumerate() {
        for (j, _) in ys.iter().enumerate() {
            let v = z[i][j].clamp(0.0, 1.0);
            // dark blue (8, 48, 107) to white
            let r = (8.0 + v * 247.0) as u8;
            let g = (48.0 + v * 207.0) as u8;
            let b = (107.0 + v * 148.0) as u8;
            body.push_str(&format!(
                "<rect x='{:.2}' y='{:.2}' width='{:.2}' height='{:.2}' fill='rgb({r},{g},{b})'/>\n",
                ML + i as f64 * cw,
                H - MB - (j as f64 + 1.0) * ch,
                cw + 0.5,
                ch + 0.5,
            ));
        }
    }
    frame.axes(&mut body, title, x_label, y_label);
    document(body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_valid_looking_svg_without_timestamps() {
        let s = line_chart(
            "test",
            "x",
            "y",
            &[Series {
                label: "a".into(),
                points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)],
            }],
        );
        assert!(s.starts_with("<svg"));
        assert!(s.ends_with("</svg>\n"));
        assert!(s.contains("polyline"));
        // Byte-identical on re-render.
        let s2 = line_chart(
            "test",
            "x",
            "y",
            &[Series {
                label: "a".into(),
                points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)],
            }],
        );
        assert_eq!(s, s2);

        let hm = heatmap("hm", "a", "b", &[0.0, 1.0], &[0.0, 1.0], &[vec![0.0, 0.5], vec![1.0, 0.2]]);
        assert!(hm.contains("rect"));
    }
}
