use std::fmt::Write;

use super::format_percent;
use crate::data::Value;
use crate::ice::IceProfile;
use crate::{Error, Result};

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 64.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Vertical range for the plot; a flat profile gets a small band around
/// its single value.
fn y_range(profile: &IceProfile, bars: bool) -> (f64, f64) {
    let (lo, hi) = profile
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.confidence), hi.max(p.confidence))
        });
    let pad = ((hi - lo) * 0.1).max(0.05);
    let hi = (hi + pad).min(1.0);
    let lo = if bars { 0.0 } else { (lo - pad).max(0.0) };
    (lo, hi)
}

/// ICE chart of the confidence score: bars for categorical features, a line
/// for continuous ones. The factual point is drawn in a distinct class.
pub fn render_profile_svg(profile: &IceProfile, prediction: &str) -> Result<String> {
    if profile.points.is_empty() {
        return Err(Error::Render("empty profile".into()));
    }
    let bars = profile.points.iter().any(|p| matches!(p.value, Value::Label(_)));
    let (y_lo, y_hi) = y_range(profile, bars);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_of = |u: f64| TOP + plot_h * (1.0 - (u - y_lo) / (y_hi - y_lo));
    let n = profile.points.len();

    let mut s = String::new();
    let w = &mut s;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        w,
        "<style>.axis{{stroke:#333;stroke-width:1}}.grid{{stroke:#ddd;stroke-width:1}}.bar{{fill:#8fb3d9}}.factual{{fill:#d9534f}}.line{{fill:none;stroke:#2c6fb7;stroke-width:2}}text{{font-family:sans-serif;font-size:12px;fill:#222}}.title{{font-size:15px;font-weight:bold}}</style>"
    );
    let _ = writeln!(
        w,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle">Prediction: {} ({})</text>"#,
        WIDTH / 2.0,
        escape(prediction),
        escape(&profile.feature)
    );

    for i in 0..TICKS {
        let u = y_lo + (y_hi - y_lo) * i as f64 / (TICKS - 1) as f64;
        let y = y_of(u);
        let _ = writeln!(
            w,
            r#"<line class="grid" x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            format_percent(u)
        );
    }
    let _ = writeln!(
        w,
        r#"<line class="axis" x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}"/><line class="axis" x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        TOP + plot_h,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Confidence score</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&profile.feature)
    );

    let slot = plot_w / n as f64;
    let x_of = |i: usize| LEFT + slot * (i as f64 + 0.5);
    let base = TOP + plot_h;
    if bars {
        for (i, p) in profile.points.iter().enumerate() {
            let class = if i == profile.factual_index { "bar factual" } else { "bar" };
            let y = y_of(p.confidence);
            let _ = writeln!(
                w,
                r#"<rect class="{class}" x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"><title>{}: {}</title></rect>"#,
                x_of(i) - slot * 0.35,
                slot * 0.7,
                base - y,
                escape(&p.value.to_string()),
                format_percent(p.confidence)
            );
        }
    } else {
        let pts: Vec<String> = profile
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{:.2},{:.2}", x_of(i), y_of(p.confidence)))
            .collect();
        let _ = writeln!(w, r#"<polyline class="line" points="{}"/>"#, pts.join(" "));
        let f = profile.factual();
        let _ = writeln!(
            w,
            r#"<circle class="factual" cx="{:.2}" cy="{:.2}" r="5"><title>{}: {}</title></circle>"#,
            x_of(profile.factual_index),
            y_of(f.confidence),
            escape(&f.value.to_string()),
            format_percent(f.confidence)
        );
    }
    // Label every category; thin out numeric labels to about ten.
    let every = if bars { 1 } else { n.div_ceil(10) };
    for (i, p) in profile.points.iter().enumerate() {
        if i % every != 0 && i != profile.factual_index {
            continue;
        }
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x_of(i),
            base + 18.0,
            escape(&p.value.to_string())
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
