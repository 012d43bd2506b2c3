//! File formats: matrix JSON, distribution and curve CSV, statistics JSON, SVG.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::analytics::{HittingDist, SuccessCurve, SuccessRow};
use crate::engine::Statistics;
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::prob::{format_rational, Probability};

pub const DIST_CSV_HEADER: &str = "t,prob";
pub const CURVE_CSV_HEADER: &str = "m,prob_commutator,prob_full";

/// `{"V": [[[re, im], …]], "W": …}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesFile {
    #[serde(rename = "V")]
    pub v: Mat2,
    #[serde(rename = "W")]
    pub w: Mat2,
}

pub fn parse_matrices(s: &str) -> Result<MatricesFile> {
    Ok(serde_json::from_str(s)?)
}

pub fn read_matrices(path: &Path) -> Result<MatricesFile> {
    let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrices(&s)
}

pub fn matrices_json(m: &MatricesFile) -> String {
    to_json(m)
}

/// Pretty JSON whose floats go through [`fmt_f64`].
struct DigitsFormatter(serde_json::ser::PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for DigitsFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, DigitsFormatter(Default::default()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// 17 significant digits, trailing zeros dropped; round-trips every double.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if !(-6..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}

pub fn dist_csv(d: &HittingDist<f64>) -> String {
    let mut out = String::from(DIST_CSV_HEADER);
    out.push('\n');
    for (t, p) in d.steps() {
        let _ = writeln!(out, "{t},{}", fmt_f64(*p));
    }
    out
}

/// Reads a `t,prob` CSV back; rows must run `t = 1, 2, …` without gaps.
pub fn parse_dist_csv(s: &str) -> Result<HittingDist<f64>> {
    let mut lines = s.lines();
    match lines.next().map(str::trim) {
        Some(DIST_CSV_HEADER) => {}
        other => return Err(Error::Parse(format!("expected header {DIST_CSV_HEADER:?}, got {other:?}"))),
    }
    let mut probs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (t, p) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("row {}: expected two columns", i + 1)))?;
        let t: usize = t.trim().parse().map_err(|_| Error::Parse(format!("row {}: bad step {t:?}", i + 1)))?;
        let p: f64 = p.trim().parse().map_err(|_| Error::Parse(format!("row {}: bad probability {p:?}", i + 1)))?;
        if t != probs.len() + 1 {
            return Err(Error::Parse(format!("row {}: expected t = {}, got {t}", i + 1, probs.len() + 1)));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parse(format!("row {}: probability {p} outside [0, 1]", i + 1)));
        }
        probs.push(p);
    }
    Ok(HittingDist::from_steps(probs))
}

pub fn curve_csv(c: &SuccessCurve) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for SuccessRow { m, prob_commutator, prob_full } in &c.rows {
        let _ = writeln!(out, "{m},{},{}", fmt_f64(*prob_commutator), fmt_f64(*prob_full));
    }
    out
}

pub fn parse_curve_csv(s: &str) -> Result<SuccessCurve> {
    let mut lines = s.lines();
    match lines.next().map(str::trim) {
        Some(CURVE_CSV_HEADER) => {}
        other => return Err(Error::Parse(format!("expected header {CURVE_CSV_HEADER:?}, got {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [m, c, f] = cols[..] else {
            return Err(Error::Parse(format!("row {}: expected three columns", i + 1)));
        };
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", i + 1));
        rows.push(SuccessRow {
            m: m.parse().map_err(|_| bad("m"))?,
            prob_commutator: c.parse().map_err(|_| bad("prob_commutator"))?,
            prob_full: f.parse().map_err(|_| bad("prob_full"))?,
        });
    }
    Ok(SuccessCurve { rows })
}

pub fn statistics_json(s: &Statistics) -> String {
    to_json(s)
}

pub fn parse_statistics(s: &str) -> Result<Statistics> {
    Ok(serde_json::from_str(s)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactRow {
    pub t: usize,
    pub prob: String,
}

/// Exact distribution with `num/den` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDistFile {
    pub p: String,
    pub t_max: usize,
    pub probs: Vec<ExactRow>,
}

pub fn exact_dist_json(p: &Probability, d: &HittingDist<BigRational>) -> String {
    let file = ExactDistFile {
        p: format_rational(&p.to_rational()),
        t_max: d.t_max(),
        probs: d
            .steps()
            .map(|(t, r)| ExactRow {
                t,
                prob: format_rational(r),
            })
            .collect(),
    };
    to_json(&file)
}

/// A named polyline for [`svg_line_chart`].
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 600.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// 800×600 line chart with linear axes.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 60.0);
    let pw = SVG_W - left - right;
    let ph = SVG_H - top - bottom;
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y1.is_finite() {
        y1 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        SVG_W / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        out,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + ph);
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            sx(fx),
            top + ph + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">{}</text>"#,
            left - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        left + pw / 2.0,
        SVG_H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 18 {y})">{}</text>"#,
        escape(y_label),
        y = top + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(s.name)
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" fill="{color}" font-family="sans-serif" font-size="12">{}</text>"#,
            left + 12.0,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Success curve as an SVG chart.
pub fn curve_svg(c: &SuccessCurve, title: &str) -> String {
    let commutator = Series {
        name: "prob_commutator",
        points: c.rows.iter().map(|r| (r.m as f64, r.prob_commutator)).collect(),
    };
    let full = Series {
        name: "prob_full",
        points: c.rows.iter().map(|r| (r.m as f64, r.prob_full)).collect(),
    };
    svg_line_chart(title, "gate uses m", "success probability", &[commutator, full])
}

pub fn dist_svg(d: &HittingDist<f64>, title: &str) -> String {
    let s = Series {
        name: "prob",
        points: d.steps().map(|(t, p)| (t as f64, *p)).collect(),
    };
    svg_line_chart(title, "step t", "probability", &[s])
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    fmt_f64(if r == 0.0 { 0.0 } else { r })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
