//! CSV, JSON, SVG and plain-text renderings of results.
//!
//! Machine formats (CSV, JSON) carry full `f64` precision; absent values are
//! `na` in CSV and `null` in JSON. The text renderer rounds to four
//! significant digits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::crc::CrcEstimate;
use crate::dataset::{DescriptiveStats, ElicitationMatrix, InterviewSequence, Summary};
use crate::planner::{type1_assess, ScenarioRow, StoppingRule, Type1Report};
use crate::survival::{saturation_summary, KmCurve, SaturationSummary};

/// A curve with its landmarks and stopping-rule assessments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmReport {
    pub new_codes: Vec<u32>,
    pub curve: KmCurve,
    pub summary: SaturationSummary,
    pub rules: Vec<Type1Report>,
}

impl KmReport {
    pub fn new(sequence: &InterviewSequence, curve: KmCurve) -> Self {
        let summary = saturation_summary(&curve);
        let rules = StoppingRule::standard()
            .into_iter()
            .map(|rule| type1_assess(sequence, rule))
            .collect();
        Self {
            new_codes: sequence.new_codes().to_vec(),
            curve,
            summary,
            rules,
        }
    }
}

fn na(value: Option<f64>) -> String {
    value.map_or_else(|| "na".to_owned(), |v| v.to_string())
}

/// Rounds to four significant digits for display.
pub fn sig4(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn sig4_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "na".to_owned(), sig4)
}

fn write_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header).expect("write to memory");
    for row in rows {
        wtr.write_record(row).expect("write to memory");
    }
    String::from_utf8(wtr.into_inner().expect("flush to memory")).expect("utf-8 input")
}

pub fn curve_csv(curve: &KmCurve) -> String {
    write_csv(
        &["seq", "n_at_risk", "event", "S", "V", "ci_low", "ci_high"],
        curve.points.iter().map(|p| {
            vec![
                p.seq.to_string(),
                p.at_risk.to_string(),
                u8::from(p.event).to_string(),
                p.survival.to_string(),
                na(p.variance),
                na(p.ci.map(|c| c.low)),
                na(p.ci.map(|c| c.high)),
            ]
        }),
    )
}

/// The matrix in the wide input layout.
pub fn matrix_csv(matrix: &ElicitationMatrix) -> String {
    let mut header = vec!["interview_id", "seq"];
    header.extend(matrix.codes().iter().map(String::as_str));
    write_csv(
        &header,
        matrix
            .interviews()
            .iter()
            .zip(matrix.elicited())
            .map(|(interview, row)| {
                let mut record = vec![interview.id.clone(), interview.seq.to_string()];
                record.extend(row.iter().map(|&e| u8::from(e).to_string()));
                record
            }),
    )
}

pub fn sequence_csv(sequence: &InterviewSequence) -> String {
    write_csv(
        &["seq", "new_codes"],
        sequence
            .new_codes()
            .iter()
            .enumerate()
            .map(|(i, n)| vec![(i + 1).to_string(), n.to_string()]),
    )
}

pub fn crc_csv(series: &[CrcEstimate]) -> String {
    write_csv(
        &[
            "seq",
            "M",
            "C",
            "R",
            "lp",
            "chapman",
            "good_turing",
            "remaining_lp",
            "remaining_chapman",
            "remaining_good_turing",
        ],
        series.iter().map(|e| {
            vec![
                e.seq.to_string(),
                e.marked.to_string(),
                e.captured.to_string(),
                e.recaptured.to_string(),
                na(e.lincoln_petersen),
                na(e.chapman),
                na(e.good_turing),
                na(e.remaining_lincoln_petersen),
                na(e.remaining_chapman),
                na(e.remaining_good_turing),
            ]
        }),
    )
}

/// Tidy `section,key,value` rows.
pub fn describe_csv(stats: &DescriptiveStats) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push =
        |section: &str, key: String, value: String| rows.push(vec![section.to_owned(), key, value]);
    for (i, n) in stats.marked_per_interview.iter().enumerate() {
        push("interview_marked", (i + 1).to_string(), n.to_string());
    }
    for (i, n) in stats.total_per_interview.iter().enumerate() {
        push("interview_total", (i + 1).to_string(), n.to_string());
    }
    for (code, r) in &stats.recaptures_per_code {
        push("code_recaptures", code.clone(), r.to_string());
    }
    for (r, count) in &stats.recapture_frequency {
        push("recapture_frequency", r.to_string(), count.to_string());
    }
    for (section, s) in [
        ("marked_summary", &stats.marked),
        ("recapture_summary", &stats.recaptures),
    ] {
        push(section, "n".into(), s.n.to_string());
        push(section, "mean".into(), s.mean.to_string());
        push(section, "median".into(), s.median.to_string());
        push(section, "std_dev".into(), na(s.std_dev));
    }
    write_csv(&["section", "key", "value"], rows)
}

fn pattern_string(pattern: &[bool]) -> String {
    pattern
        .iter()
        .map(|&b| if b { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn scenarios_csv(rows: &[ScenarioRow]) -> String {
    let methods: Vec<String> = rows
        .first()
        .map(|r| {
            r.projections
                .iter()
                .map(|p| format!("additional_{}", p.method))
                .collect()
        })
        .unwrap_or_default();
    let mut header = vec![
        "pattern",
        "J",
        "km_final",
        "ci_low",
        "ci_high",
        "upper_ci_zero",
    ];
    header.extend(methods.iter().map(String::as_str));
    write_csv(
        &header,
        rows.iter().map(|r| {
            let mut cells = vec![
                pattern_string(&r.pattern),
                r.pattern.len().to_string(),
                r.km_final.to_string(),
                na(r.ci.map(|c| c.low)),
                na(r.ci.map(|c| c.high)),
                na(r.upper_ci_extrapolated_zero),
            ];
            cells.extend(r.projections.iter().map(|p| {
                p.additional_interviews
                    .map_or_else(|| "na".to_owned(), |n| n.to_string())
            }));
            cells
        }),
    )
}

pub fn km_text(report: &KmReport) -> String {
    let mut out = String::new();
    let level = sig4((1.0 - report.curve.alpha) * 100.0);
    let _ = writeln!(out, "seq  at_risk  event  S        {level}% CI");
    for p in &report.curve.points {
        let ci = p.ci.map_or_else(
            || "(na, na)".to_owned(),
            |c| format!("({}, {})", sig4(c.low), sig4(c.high)),
        );
        let _ = writeln!(
            out,
            "{:<4} {:<8} {:<6} {:<8} {}",
            p.seq,
            p.at_risk,
            if p.event { "yes" } else { "no" },
            sig4(p.survival),
            ci
        );
    }
    let s = &report.summary;
    let _ = writeln!(
        out,
        "alpha {}  |  S reaches 0 at: {}  |  S line zero: {}  |  upper-CI line zero: {}",
        report.curve.alpha,
        s.km_zero_seq
            .map_or_else(|| "na".to_owned(), |j| j.to_string()),
        sig4_opt(s.km_extrapolated_zero),
        sig4_opt(s.upper_ci_extrapolated_zero),
    );
    for r in &report.rules {
        let _ = writeln!(
            out,
            "{}: {}",
            r.rule,
            match r.decision.stop_seq {
                None => "not stopped".to_owned(),
                Some(j) if r.is_type1 => format!(
                    "stops at {j}; Type I error ({} new codes in {} later interviews)",
                    r.missed_codes, r.extra_interviews_needed
                ),
                Some(j) => format!("stops at {j}; no later new codes"),
            }
        );
    }
    out
}

pub fn crc_text(series: &[CrcEstimate]) -> String {
    let mut out = String::from("seq  M    C    R    D    LP        Chapman   GT\n");
    for e in series {
        let _ = writeln!(
            out,
            "{:<4} {:<4} {:<4} {:<4} {:<4} {:<9} {:<9} {}",
            e.seq,
            e.marked,
            e.captured,
            e.recaptured,
            e.distinct,
            sig4_opt(e.lincoln_petersen),
            sig4_opt(e.chapman),
            sig4_opt(e.good_turing)
        );
    }
    out
}

pub fn describe_text(stats: &DescriptiveStats) -> String {
    let summary = |s: &Summary| {
        format!(
            "N {}  mean {}  median {}  SD {}",
            s.n,
            sig4(s.mean),
            sig4(s.median),
            sig4_opt(s.std_dev)
        )
    };
    let mut out = String::new();
    let _ = writeln!(out, "marked per interview: {}", summary(&stats.marked));
    let _ = writeln!(out, "recaptures per code:  {}", summary(&stats.recaptures));
    let _ = writeln!(out, "recapture  codes");
    for (r, n) in &stats.recapture_frequency {
        let _ = writeln!(out, "{r:<10} {n}");
    }
    out
}

pub fn scenarios_text(rows: &[ScenarioRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let ci = r.ci.map_or_else(
            || "(na, na)".to_owned(),
            |c| format!("({}, {})", sig4(c.low), sig4(c.high)),
        );
        let extra: Vec<String> = r
            .projections
            .iter()
            .map(|p| {
                format!(
                    "{}={}",
                    p.method,
                    p.additional_interviews
                        .map_or_else(|| "na".to_owned(), |n| n.to_string())
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "({})  S={} {}  {}",
            pattern_string(&r.pattern),
            sig4(r.km_final),
            ci,
            extra.join(" ")
        );
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

/// Step plot of S with a shaded confidence band, censoring ticks and a
/// dashed upper-limit extrapolation line.
pub fn curve_svg(curve: &KmCurve, summary: &SaturationSummary) -> String {
    let j = curve.points.len() as f64;
    let x_max = summary
        .upper_ci_extrapolated_zero
        .into_iter()
        .chain(summary.km_extrapolated_zero)
        .filter(|x| x.is_finite())
        .fold(j, f64::max)
        .min(j * 10.0)
        .ceil()
        .max(1.0);
    let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}" stroke="black" fill="none"/>"#,
        sx(0.0),
        sy(1.0),
        sx(0.0),
        sy(0.0),
        sx(x_max),
        sy(0.0)
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick}</text>"#,
            sx(0.0) - 4.0,
            sy(tick) + 4.0
        );
    }
    let step = (x_max / 10.0).ceil().max(1.0);
    let mut tick = 0.0;
    while tick <= x_max {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{tick}</text>"#,
            sx(tick),
            sy(0.0) + 14.0
        );
        tick += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">interview</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0
    );

    // CI band as right-continuous steps over estimable points
    let band: Vec<(f64, f64, f64)> = std::iter::once((0.0, 1.0, 1.0))
        .chain(
            curve
                .points
                .iter()
                .filter_map(|p| p.ci.map(|c| (p.seq as f64, c.low, c.high))),
        )
        .collect();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (i, (x, low, high)) in band.iter().enumerate() {
        let x_next = band.get(i + 1).map_or(j, |b| b.0);
        upper.push(format!(
            "{:.2},{:.2} {:.2},{:.2}",
            sx(*x),
            sy(*high),
            sx(x_next),
            sy(*high)
        ));
        lower.push(format!(
            "{:.2},{:.2} {:.2},{:.2}",
            sx(x_next),
            sy(*low),
            sx(*x),
            sy(*low)
        ));
    }
    lower.reverse();
    let _ = writeln!(
        svg,
        r##"<polygon points="{} {}" fill="#4a7ab5" fill-opacity="0.2" stroke="none"/>"##,
        upper.join(" "),
        lower.join(" ")
    );

    // survival steps
    let mut d = format!("M{:.2},{:.2}", sx(0.0), sy(1.0));
    let mut prev = 1.0;
    for p in &curve.points {
        let x = p.seq as f64;
        if p.survival != prev {
            let _ = write!(d, " H{:.2} V{:.2}", sx(x), sy(p.survival));
            prev = p.survival;
        }
    }
    let _ = write!(d, " H{:.2}", sx(j));
    let _ = writeln!(
        svg,
        r##"<path d="{d}" stroke="#1f3f6e" stroke-width="2" fill="none"/>"##
    );

    for p in curve.points.iter().filter(|p| !p.event) {
        let (x, y) = (sx(p.seq as f64), sy(p.survival));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f3f6e"/>"##,
            y - 4.0,
            y + 4.0
        );
    }

    if let Some(zero) = summary.upper_ci_extrapolated_zero {
        if let Some(last) = curve
            .events()
            .filter_map(|p| p.ci.map(|c| (p.seq, c.high)))
            .last()
        {
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#b5463a" stroke-dasharray="5,4"/>"##,
                sx(last.0 as f64),
                sy(last.1),
                sx(zero.min(x_max)),
                sy(0.0)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
