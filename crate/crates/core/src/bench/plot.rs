//! Standalone SVG charts of benchmark summaries.

use std::fmt::Write as _;
use std::path::Path;

use super::{BenchError, SummaryRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

fn unique<'a>(values: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn frame(title: &str) -> String {
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
    let plot_h = HEIGHT - TOP - BOTTOM;
    for pct in [0, 25, 50, 75, 100] {
        let y = TOP + plot_h * (1.0 - pct as f64 / 100.0);
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{pct}%</text>",
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    svg
}

fn legend(svg: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>\
             <text x=\"{:.1}\" y=\"{y:.1}\">{}</text>",
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            escape(name)
        );
    }
}

/// Grouped bars: one group per setting, one bar per planner, heights are
/// success rates with the value printed above each bar.
pub fn bar_chart_svg(summary: &[SummaryRow], title: &str) -> Result<String, BenchError> {
    if summary.is_empty() {
        return Err(BenchError::NothingToPlot);
    }
    let settings = unique(summary.iter().map(|s| s.setting.as_str()));
    let planners = unique(summary.iter().map(|s| s.planner.as_str()));
    let mut svg = frame(title);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let group_w = plot_w / settings.len() as f64;
    let bar_w = group_w * 0.8 / planners.len() as f64;
    for (g, setting) in settings.iter().enumerate() {
        let gx = LEFT + g as f64 * group_w + group_w * 0.1;
        for (p, planner) in planners.iter().enumerate() {
            let Some(row) = summary
                .iter()
                .find(|s| s.setting == *setting && s.planner == *planner)
            else {
                continue;
            };
            let rate = row.success_rate();
            let h = plot_h * rate / 100.0;
            let x = gx + p as f64 * bar_w;
            let y = TOP + plot_h - h;
            let _ = writeln!(
                svg,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"><title>{} {}: {rate:.2}%</title></rect>\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\">{rate:.0}</text>",
                bar_w * 0.9,
                PALETTE[p % PALETTE.len()],
                escape(setting),
                escape(planner),
                x + bar_w * 0.45,
                y - 3.0
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            gx + group_w * 0.4,
            HEIGHT - BOTTOM + 18.0,
            escape(setting)
        );
    }
    legend(&mut svg, &planners);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Success rate against setting (in table order), one line per planner.
pub fn line_chart_svg(summary: &[SummaryRow], title: &str) -> Result<String, BenchError> {
    if summary.is_empty() {
        return Err(BenchError::NothingToPlot);
    }
    let settings = unique(summary.iter().map(|s| s.setting.as_str()));
    let planners = unique(summary.iter().map(|s| s.planner.as_str()));
    let mut svg = frame(title);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |i: usize| {
        if settings.len() == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + 20.0 + (plot_w - 40.0) * i as f64 / (settings.len() - 1) as f64
        }
    };
    for (i, setting) in settings.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            x_of(i),
            HEIGHT - BOTTOM + 18.0,
            escape(setting)
        );
    }
    for (p, planner) in planners.iter().enumerate() {
        let color = PALETTE[p % PALETTE.len()];
        let points: Vec<(f64, f64, f64)> = settings
            .iter()
            .enumerate()
            .filter_map(|(i, setting)| {
                summary
                    .iter()
                    .find(|s| s.setting == *setting && s.planner == *planner)
                    .map(|s| {
                        (
                            x_of(i),
                            TOP + plot_h * (1.0 - s.success_rate() / 100.0),
                            s.success_rate(),
                        )
                    })
            })
            .collect();
        let coords: Vec<String> = points
            .iter()
            .map(|(x, y, _)| format!("{x:.1},{y:.1}"))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            coords.join(" ")
        );
        for (x, y, rate) in points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3.5\" fill=\"{color}\"/>\
                 <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{rate:.2}</text>",
                y - 7.0
            );
        }
    }
    legend(&mut svg, &planners);
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_bar_chart(
    summary: &[SummaryRow],
    title: &str,
    path: impl AsRef<Path>,
) -> Result<(), BenchError> {
    let svg = bar_chart_svg(summary, title)?;
    std::fs::write(path, svg)?;
    Ok(())
}

pub fn emit_line_chart(
    summary: &[SummaryRow],
    title: &str,
    path: impl AsRef<Path>,
) -> Result<(), BenchError> {
    let svg = line_chart_svg(summary, title)?;
    std::fs::write(path, svg)?;
    Ok(())
}
