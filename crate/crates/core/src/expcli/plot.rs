use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::ResultRow;
use super::ExpError;

/// Reads a results CSV written by a sweep.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, ExpError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = ResultRow::from_record(&record)
            .ok_or_else(|| ExpError::Config(format!("malformed result row {record:?}")))?;
        rows.push(row);
    }
    Ok(rows)
}

struct Series {
    name: String,
    /// `(x, mean, stderr)` sorted by `x`.
    points: Vec<(f64, f64, f64)>,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Groups successful rows by algorithm and `x`, in first-seen algorithm order.
fn collect_series<'a>(rows: impl Iterator<Item = &'a ResultRow>, x: impl Fn(&ResultRow) -> f64) -> Vec<Series> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let Some(gap) = r.subopt else { continue };
        let idx = match order.iter().position(|n| *n == r.algorithm) {
            Some(i) => i,
            None => {
                order.push(r.algorithm.clone());
                order.len() - 1
            }
        };
        groups.entry((idx, x(r).to_bits())).or_default().push(gap);
    }
    order
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let mut points: Vec<(f64, f64, f64)> = groups
                .iter()
                .filter(|((a, _), _)| *a == i)
                .map(|((_, xb), v)| {
                    let (m, se) = mean_stderr(v);
                    (f64::from_bits(*xb), m, se)
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { name, points }
        })
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_Y: f64 = 50.0;

fn render(title: &str, x_label: &str, log_x: bool, series: &[Series]) -> String {
    let tx = |x: f64| if log_x { x.max(f64::MIN_POSITIVE).log10() } else { x };
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| tx(p.0))).collect();
    let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y1 = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1 + p.2))
        .fold(0.0_f64, f64::max)
        .max(1e-12)
        * 1.1;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let px = |x: f64| MARGIN_LEFT + (tx(x) - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN_Y - y / y1 * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, MARGIN_LEFT + plot_w / 2.0, escape(title));
    let (left, bottom, right, top) = (MARGIN_LEFT, HEIGHT - MARGIN_Y, MARGIN_LEFT + plot_w, MARGIN_Y);
    let _ = writeln!(svg, r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let y = y1 * i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, py(y) + 4.0, tick(y));
    }
    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in &ticks {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(*x), bottom + 16.0, tick(*x));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + plot_w / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">SubOpt (value units)</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, path.join(" "));
        for p in &s.points {
            let (x, lo, hi) = (px(p.0), py((p.1 - p.2).max(0.0)), py(p.1 + p.2));
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}"/>"#);
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, py(p.1));
        }
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, right + 16.0, ly);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, right + 32.0, ly + 9.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes mean SubOpt ± standard error charts: one against `K` (log scale)
/// per `ε`, and one against `ε` per `K`, each with a series per algorithm.
pub fn emit_plots(rows: &[ResultRow], out_dir: &Path) -> Result<Vec<PathBuf>, ExpError> {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| !r.is_error()).collect();
    if ok.is_empty() {
        return Err(ExpError::EmptySelection);
    }
    std::fs::create_dir_all(out_dir)?;
    let mut eps: Vec<f64> = ok.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut ks: Vec<usize> = ok.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();

    let mut written = Vec::new();
    for e in &eps {
        let series = collect_series(ok.iter().copied().filter(|r| r.epsilon == *e), |r| r.k as f64);
        let path = out_dir.join(format!("subopt_vs_k_eps{e}.svg"));
        std::fs::write(&path, render(&format!("SubOpt vs K at ε = {e}"), "K (episodes, log scale)", true, &series))?;
        written.push(path);
    }
    for k in &ks {
        let series = collect_series(ok.iter().copied().filter(|r| r.k == *k), |r| r.epsilon);
        let path = out_dir.join(format!("subopt_vs_eps_k{k}.svg"));
        std::fs::write(&path, render(&format!("SubOpt vs ε at K = {k}"), "ε (contamination fraction)", false, &series))?;
        written.push(path);
    }
    Ok(written)
}
