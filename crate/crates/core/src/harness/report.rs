use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::grid::{window_len, Curve, GridSummary, SummaryRow, CONVERGENCE_FRACTION};
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn finite_range(curves: &[&Curve]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in curves {
        for (&m, &s) in c.mean.iter().zip(&c.std) {
            if m.is_finite() && s.is_finite() {
                lo = lo.min(m - s);
                hi = hi.max(m + s);
            }
        }
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Reward-vs-iteration chart: one mean line and a one-std band per curve.
pub fn render_svg(title: &str, curves: &[&Curve]) -> String {
    let len = curves.iter().map(|c| c.mean.len()).max().unwrap_or(0).max(2);
    let (y_lo, y_hi) = finite_range(curves);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |i: usize| LEFT + plot_w * i as f64 / (len - 1) as f64;
    let py = |y: f64| TOP + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    for k in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let yy = py(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{}" y2="{yy:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{y:.1}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            yy + 4.0
        );
        let i = ((len - 1) as f64 * k as f64 / 4.0).round() as usize;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{i}</text>"#,
            px(i),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">eval episode reward</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(usize, f64, f64)> = c
            .mean
            .iter()
            .zip(&c.std)
            .enumerate()
            .filter(|(_, (m, sd))| m.is_finite() && sd.is_finite())
            .map(|(i, (&m, &sd))| (i, m, sd))
            .collect();
        if !pts.is_empty() {
            let mut band: Vec<String> = pts.iter().map(|&(i, m, sd)| format!("{:.2},{:.2}", px(i), py(m + sd))).collect();
            band.extend(pts.iter().rev().map(|&(i, m, sd)| format!("{:.2},{:.2}", px(i), py(m - sd))));
            let _ = writeln!(
                s,
                r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                band.join(" ")
            );
            let line: Vec<String> = pts.iter().map(|&(i, m, _)| format!("{:.2},{:.2}", px(i), py(m))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                line.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let label = if pts.is_empty() {
            format!("{} (no complete seeds)", c.label)
        } else {
            c.label.clone()
        };
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{:.1}" width="14" height="4" fill="{color}"/><text x="{}" y="{:.1}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly + 1.0,
            xml_escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn score(r: &SummaryRow) -> String {
    if r.n_effective == 0 {
        "n/a".into()
    } else {
        format!("{:.2} ± {:.2}", r.mean, r.std)
    }
}

/// Markdown report: the long score table, a modes-as-columns table and the
/// difference of every mode against `Sh-Decent` at equal agent count.
pub fn render_markdown(title: &str, summary: &GridSummary, svg_files: &[String]) -> String {
    let window = window_len(summary.total_iterations, CONVERGENCE_FRACTION);
    let mut s = String::new();
    let _ = writeln!(s, "# {title}\n");
    let _ = writeln!(
        s,
        "Scores are evaluation episode rewards of a lone racer. Each seed is scored by its mean over \
the final {window} of {} iterations; the table reports the mean and sample standard deviation of \
those per-seed scores.\n",
        summary.total_iterations
    );
    let _ = writeln!(s, "## Scores\n");
    let _ = writeln!(s, "| Env | Mode | N | Run | Seeds | Mean | Std |");
    let _ = writeln!(s, "|---|---|---:|---|---:|---:|---:|");
    for r in &summary.rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {}/{} | {:.3} | {:.3} |",
            r.env,
            r.mode,
            r.n_agents,
            r.run,
            r.n_effective,
            r.seeds.len(),
            r.mean,
            r.std
        );
    }

    let mut modes: Vec<&str> = Vec::new();
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for r in &summary.rows {
        if !modes.contains(&r.mode.as_str()) {
            modes.push(&r.mode);
        }
        if !keys.contains(&(r.env.as_str(), r.n_agents)) {
            keys.push((&r.env, r.n_agents));
        }
    }
    let find = |env: &str, n: usize, mode: &str| {
        summary.rows.iter().find(|r| r.env == env && r.n_agents == n && r.mode == mode)
    };
    let _ = writeln!(s, "\n## By mode\n");
    let _ = writeln!(s, "| Env | N | {} |", modes.join(" | "));
    let _ = writeln!(s, "|---|---:|{}", "---:|".repeat(modes.len()));
    for &(env, n) in &keys {
        let cells: Vec<String> = modes.iter().map(|m| find(env, n, m).map_or("".into(), score)).collect();
        let _ = writeln!(s, "| {env} | {n} | {} |", cells.join(" | "));
    }

    let baseline = "Sh-Decent";
    let diffs: Vec<(&SummaryRow, &SummaryRow)> = summary
        .rows
        .iter()
        .filter(|r| r.mode != baseline && r.n_agents > 1)
        .filter_map(|r| find(&r.env, r.n_agents, baseline).map(|b| (r, b)))
        .collect();
    if !diffs.is_empty() {
        let _ = writeln!(s, "\n## Difference against {baseline}\n");
        let _ = writeln!(s, "| Env | N | Mode | Δ mean | Δ % |");
        let _ = writeln!(s, "|---|---:|---|---:|---:|");
        for (r, b) in diffs {
            let delta = r.mean - b.mean;
            let pct = if b.mean != 0.0 { 100.0 * delta / b.mean.abs() } else { f64::NAN };
            let _ = writeln!(s, "| {} | {} | {} | {:+.3} | {:+.2} |", r.env, r.n_agents, r.mode, delta, pct);
        }
    }
    if !svg_files.is_empty() {
        let _ = writeln!(s, "\n## Learning curves\n");
        for f in svg_files {
            let _ = writeln!(s, "![{f}]({f})");
        }
    }
    s
}

/// Write one SVG per environment and `report.md` into `dir`. Returns the
/// written paths, SVGs first.
pub fn emit_report(summary: &GridSummary, dir: impl AsRef<Path>, title: &str) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if summary.rows.is_empty() {
        return Err(Error::EmptyGrid);
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut envs: Vec<&str> = Vec::new();
    for r in &summary.rows {
        if !envs.contains(&r.env.as_str()) {
            envs.push(&r.env);
        }
    }
    let mut written = Vec::new();
    let mut svg_names = Vec::new();
    for env in envs {
        let curves: Vec<&Curve> = summary
            .curves
            .iter()
            .filter(|c| summary.rows.iter().any(|r| r.env == env && r.run == c.run))
            .collect();
        let name = format!("{env}.svg");
        let path = dir.join(&name);
        std::fs::write(&path, render_svg(&format!("{title}: {env}"), &curves)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        svg_names.push(name);
    }
    let path = dir.join("report.md");
    std::fs::write(&path, render_markdown(title, summary, &svg_names)).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
