use std::fmt::Write as _;

use super::{RooflineDataset, Series};

/// `series,ai_flop_per_byte,gflops,label`, one row per dataset row.
pub fn render_csv(dataset: &RooflineDataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "ai_flop_per_byte", "gflops", "label"])
        .expect("in-memory csv");
    for r in &dataset.rows {
        w.write_record([
            r.series.as_str(),
            &r.ai_flop_per_byte.to_string(),
            &r.gflops.to_string(),
            &r.label,
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct LogAxis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl LogAxis {
    fn map(&self, v: f64) -> f64 {
        let v = v.clamp(self.lo, self.hi);
        let t = (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10());
        self.px_lo + t * (self.px_hi - self.px_lo)
    }

    fn decades(&self) -> impl Iterator<Item = f64> {
        let (a, b) = (self.lo.log10().ceil() as i32, self.hi.log10().floor() as i32);
        (a..=b).map(|e| 10f64.powi(e))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone log-log SVG line chart of the dataset.
pub fn render_svg(dataset: &RooflineDataset) -> String {
    let (x_lo, x_hi) = dataset.ai_range;
    let y_hi = dataset
        .rows
        .iter()
        .map(|r| r.gflops)
        .fold(f64::MIN_POSITIVE, f64::max)
        * 2.0;
    let y_lo = dataset
        .rows
        .iter()
        .filter(|r| r.series != Series::Kernel)
        .map(|r| r.gflops)
        .filter(|v| *v > 0.0)
        .fold(f64::MAX, f64::min)
        .min(y_hi / 10.0);
    let x = LogAxis {
        lo: x_lo,
        hi: x_hi,
        px_lo: LEFT,
        px_hi: WIDTH - RIGHT,
    };
    let y = LogAxis {
        lo: y_lo,
        hi: y_hi,
        px_lo: HEIGHT - BOTTOM,
        px_hi: TOP,
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let unit = if dataset.normalized {
        "normalized throughput"
    } else {
        "GFLOP/s"
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">Roofline, FP{} elements, {} thread(s)</text>"#,
        WIDTH / 2.0,
        dataset.elen_bits,
        dataset.threads
    );

    // Axes and decade grid.
    let _ = writeln!(
        s,
        r#"<g stroke="black"><line x1="{LEFT}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b:.1}"/></g>"#,
        b = HEIGHT - BOTTOM,
        r = WIDTH - RIGHT
    );
    for d in x.decades() {
        let px = x.map(d);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{TOP}" x2="{px:.1}" y2="{b:.1}" stroke="#ddd"/><text x="{px:.1}" y="{ty:.1}" text-anchor="middle">{d}</text>"##,
            b = HEIGHT - BOTTOM,
            ty = HEIGHT - BOTTOM + 16.0
        );
    }
    for d in y.decades() {
        let py = y.map(d);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{r:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{tx:.1}" y="{ty:.1}" text-anchor="end">{d}</text>"##,
            r = WIDTH - RIGHT,
            tx = LEFT - 6.0,
            ty = py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">arithmetic intensity (FLOP/byte)</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{unit}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0
    );

    let polyline = |series: Series, style: &str| -> String {
        let pts: Vec<String> = dataset
            .series(series)
            .map(|r| format!("{:.1},{:.1}", x.map(r.ai_flop_per_byte), y.map(r.gflops)))
            .collect();
        format!(r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" "))
    };
    let _ = writeln!(s, "{}", polyline(Series::RoofVector, r##"stroke="#2a7" stroke-width="2""##));
    let _ = writeln!(s, "{}", polyline(Series::RoofScalar, r##"stroke="#247" stroke-width="2""##));
    let _ = writeln!(
        s,
        "{}",
        polyline(Series::InflectionScalar, r##"stroke="#247" stroke-dasharray="4 3""##)
    );
    let _ = writeln!(
        s,
        "{}",
        polyline(Series::InflectionVector, r##"stroke="#2a7" stroke-dasharray="4 3""##)
    );

    for r in dataset.series(Series::Kernel) {
        let (px, py) = (x.map(r.ai_flop_per_byte), y.map(r.gflops));
        let _ = writeln!(
            s,
            r##"<circle cx="{px:.1}" cy="{py:.1}" r="4" fill="#c33"/><text x="{:.1}" y="{:.1}">{}</text>"##,
            px + 6.0,
            py - 6.0,
            escape(&r.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
