//! Deterministic SVG panels.
//!
//! Every panel is a 1200×300 document with one subplot per GRF channel. Coordinates are
//! printed with two decimals, so identical inputs give identical bytes.
//!
//! Relevance is colored with a 64-step diverging scale anchored at zero: bins 0–31 run
//! from blue to white, bins 32–63 from white to red, and the scale spans
//! `[−m, m]` with `m` the largest magnitude on the displayed curve.

use std::fmt::Write as _;

use crate::data::ChannelId;
use crate::eval::{Overlap, SignalSummary};
use crate::spm::SpmResult;

pub const WIDTH: f64 = 1200.0;
pub const HEIGHT: f64 = 300.0;
pub const PALETTE_STEPS: usize = 64;

const FEMALE: &str = "#7b3294";
const MALE: &str = "#008837";
const NEUTRAL: &str = "#888888";

const NEGATIVE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const POSITIVE: (f64, f64, f64) = (178.0, 24.0, 43.0);

/// Red, green, blue of bin `k` of the diverging scale.
pub fn palette(k: usize) -> (u8, u8, u8) {
    let k = k.min(PALETTE_STEPS - 1);
    let half = PALETTE_STEPS / 2;
    let (end, s) = if k < half {
        (NEGATIVE, (half - 1 - k) as f64 / (half - 1) as f64)
    } else {
        (POSITIVE, (k - half) as f64 / (half - 1) as f64)
    };
    let mix = |c: f64| (255.0 + (c - 255.0) * s).round() as u8;
    (mix(end.0), mix(end.1), mix(end.2))
}

/// Bin of `v` on a scale spanning `[−max_abs, max_abs]`; zero and an all-zero scale
/// land on the white bin 32.
pub fn relevance_bin(v: f64, max_abs: f64) -> usize {
    if max_abs <= 0.0 || !max_abs.is_finite() {
        return PALETTE_STEPS / 2;
    }
    let u = (v / max_abs).clamp(-1.0, 1.0);
    (((u + 1.0) / 2.0 * PALETTE_STEPS as f64).floor() as usize).min(PALETTE_STEPS - 1)
}

pub fn relevance_color(v: f64, max_abs: f64) -> String {
    let (r, g, b) = palette(relevance_bin(v, max_abs));
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Horizontal slot of one channel and its value range.
struct Frame {
    x0: f64,
    w: f64,
    lo: f64,
    hi: f64,
    n: usize,
}

const TOP: f64 = 50.0;
const BOTTOM: f64 = 270.0;

impl Frame {
    fn new(slot: usize, slots: usize, n: usize, lo: f64, hi: f64) -> Frame {
        let slot_w = WIDTH / slots as f64;
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        let pad = 0.05 * (hi - lo);
        Frame { x0: slot as f64 * slot_w + 30.0, w: slot_w - 45.0, lo: lo - pad, hi: hi + pad, n }
    }

    fn x(&self, i: f64) -> f64 {
        self.x0 + self.w * if self.n > 1 { i / (self.n - 1) as f64 } else { 0.5 }
    }

    fn y(&self, v: f64) -> f64 {
        BOTTOM - (BOTTOM - TOP) * (v - self.lo) / (self.hi - self.lo)
    }

    fn polyline(&self, values: &[f64], stroke: &str, svg: &mut String) {
        let pts: Vec<String> = values.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", self.x(i as f64), self.y(v))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{stroke}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
    }

    fn band(&self, lower: &[f64], upper: &[f64], fill: &str, svg: &mut String) {
        let mut pts: Vec<String> = upper.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", self.x(i as f64), self.y(v))).collect();
        pts.extend(lower.iter().enumerate().rev().map(|(i, &v)| format!("{:.2},{:.2}", self.x(i as f64), self.y(v))));
        let _ = writeln!(svg, r#"<polygon fill="{fill}" fill-opacity="0.35" stroke="none" points="{}"/>"#, pts.join(" "));
    }

    fn shade(&self, start: usize, end: usize, svg: &mut String) {
        let (a, b) = (self.x(start as f64 - 0.5).max(self.x0), self.x(end as f64 + 0.5).min(self.x0 + self.w));
        let _ = writeln!(
            svg,
            r##"<rect x="{a:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="#d9d9d9"/>"##,
            b - a,
            BOTTOM - TOP
        );
    }

    fn axes(&self, label: &str, svg: &mut String) {
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000" stroke-width="0.8"/>"##,
            self.x0,
            self.w,
            BOTTOM - TOP
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{label}</text>"#, self.x0 + self.w / 2.0, TOP - 6.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="9" text-anchor="end">{:.2}</text>"#, self.x0 - 3.0, TOP + 8.0, self.hi);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="9" text-anchor="end">{:.2}</text>"#, self.x0 - 3.0, BOTTOM, self.lo);
    }
}

fn document(title: &str, body: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<text x="12" y="20" font-size="14" font-weight="bold">{}</text>"#, escape(title));
    svg.push_str(body);
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range<'a>(curves: impl IntoIterator<Item = &'a [f64]>) -> (f64, f64) {
    curves
        .into_iter()
        .flatten()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn find<'a, T>(items: &'a [(ChannelId, T)], ch: ChannelId) -> Option<&'a T> {
    items.iter().find(|(c, _)| *c == ch).map(|(_, t)| t)
}

/// Panel A: class means per channel with SPM clusters shaded.
pub fn panel_means(female: &[SignalSummary], male: &[SignalSummary], spm: &[(ChannelId, SpmResult)]) -> String {
    let mut body = String::new();
    let slots = female.len();
    for (slot, (f, m)) in female.iter().zip(male).enumerate() {
        let (lo, hi) = range([f.mean.as_slice(), m.mean.as_slice()]);
        let frame = Frame::new(slot, slots, f.mean.len(), lo, hi);
        if let Some(r) = find(spm, f.channel) {
            for c in &r.clusters {
                frame.shade(c.start, c.end, &mut body);
            }
        }
        frame.polyline(&f.mean, FEMALE, &mut body);
        frame.polyline(&m.mean, MALE, &mut body);
        frame.axes(&f.channel.to_string(), &mut body);
    }
    legend(&mut body, &[("female", FEMALE), ("male", MALE), ("SPM cluster", "#d9d9d9")]);
    document("A  class means and SPM clusters", &body)
}

/// Panels B and C: one class's mean ± one standard deviation, the mean colored by
/// that class's mean relevance where available.
pub fn panel_class(title: &str, signals: &[SignalSummary], relevance: &[(ChannelId, Vec<f64>)]) -> String {
    let mut body = String::new();
    let slots = signals.len();
    for (slot, s) in signals.iter().enumerate() {
        let lower: Vec<f64> = s.mean.iter().zip(&s.std).map(|(m, d)| m - d).collect();
        let upper: Vec<f64> = s.mean.iter().zip(&s.std).map(|(m, d)| m + d).collect();
        let (lo, hi) = range([lower.as_slice(), upper.as_slice()]);
        let frame = Frame::new(slot, slots, s.mean.len(), lo, hi);
        frame.band(&lower, &upper, "#bdbdbd", &mut body);
        match find(relevance, s.channel) {
            Some(r) => {
                let max_abs = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (i, (&v, &rv)) in s.mean.iter().zip(r).enumerate() {
                    let _ = writeln!(
                        body,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.20" fill="{}" stroke="none"/>"#,
                        frame.x(i as f64),
                        frame.y(v),
                        relevance_color(rv, max_abs)
                    );
                }
            }
            None => frame.polyline(&s.mean, NEUTRAL, &mut body),
        }
        frame.axes(&s.channel.to_string(), &mut body);
    }
    color_bar(&mut body);
    document(title, &body)
}

/// Panel D: effect size per channel with the total relevance curve on its own scale.
pub fn panel_effect(channels: &[ChannelId], spm: &[(ChannelId, SpmResult)], total: &[(ChannelId, Vec<f64>)]) -> String {
    let mut body = String::new();
    for (slot, &ch) in channels.iter().enumerate() {
        let d = find(spm, ch).map(|r| r.d_curve.as_slice());
        let rel = find(total, ch).map(Vec::as_slice);
        let n = d.or(rel).map_or(1, <[f64]>::len);
        let d_abs = d.map_or(0.0, |d| d.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let frame = Frame::new(slot, channels.len(), n, -d_abs, d_abs);
        if let Some(rel) = rel {
            let peak = rel.iter().fold(0.0f64, |m, v| m.max(*v));
            let scale = if peak > 0.0 { (frame.hi - frame.lo) / peak } else { 0.0 };
            let scaled: Vec<f64> = rel.iter().map(|v| frame.lo + v * scale * 0.95).collect();
            frame.polyline(&scaled, "#e08214", &mut body);
        }
        if let Some(d) = d {
            frame.polyline(d, "#000000", &mut body);
        }
        frame.axes(&ch.to_string(), &mut body);
    }
    legend(&mut body, &[("Cohen's d", "#000000"), ("total relevance (scaled)", "#e08214")]);
    document("D  effect size and total relevance", &body)
}

fn legend(body: &mut String, entries: &[(&str, &str)]) {
    let mut x = 420.0;
    for (label, color) in entries {
        let _ = writeln!(body, r#"<rect x="{x:.2}" y="10" width="12" height="12" fill="{color}"/>"#);
        let _ = writeln!(body, r#"<text x="{:.2}" y="20" font-size="11">{}</text>"#, x + 16.0, escape(label));
        x += 24.0 + 7.0 * label.len() as f64;
    }
}

fn color_bar(body: &mut String) {
    for k in 0..PALETTE_STEPS {
        let (r, g, b) = palette(k);
        let _ = writeln!(
            body,
            r##"<rect x="{:.2}" y="10" width="4" height="12" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
            800.0 + 4.0 * k as f64
        );
    }
    let _ = writeln!(body, r#"<text x="796" y="20" font-size="10" text-anchor="end">−max</text>"#);
    let _ = writeln!(body, r#"<text x="1060" y="20" font-size="10">+max relevance</text>"#);
}

/// Panel E as text: per-channel and overall Jaccard indices for each comparison.
pub fn overlap_table(comparisons: &[(&str, Overlap)]) -> String {
    let mut channels: Vec<ChannelId> = comparisons.iter().flat_map(|(_, o)| o.per_channel.iter().map(|p| p.0)).collect();
    channels.sort();
    channels.dedup();
    let mut s = String::new();
    let _ = write!(s, "{:<16}", "comparison");
    for ch in &channels {
        let _ = write!(s, " {:>6}", ch.to_string());
    }
    let _ = writeln!(s, " {:>8}", "overall");
    for (name, o) in comparisons {
        let _ = write!(s, "{name:<16}");
        for ch in &channels {
            match o.per_channel.iter().find(|p| p.0 == *ch) {
                Some((_, j)) => {
                    let _ = write!(s, " {j:>6.3}");
                }
                None => {
                    let _ = write!(s, " {:>6}", "-");
                }
            }
        }
        let _ = writeln!(s, " {:>8.3}", o.overall);
    }
    s
}
