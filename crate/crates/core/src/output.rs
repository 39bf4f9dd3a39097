//! CSV tables, the run manifest and a minimal SVG line plot drawn from a table.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const UNITS_LINE: &str =
    "units: omega in omega_p, length in c/omega_p, time in 1/omega_p, force in F0 = 3|d|^2/(16 pi z0^4 eps0)";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// File stem, e.g. `population`.
    pub name: String,
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Columns drawn against column `x` when plotting.
    pub plot: Option<(usize, Vec<usize>)>,
}

impl CsvTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn with_plot(mut self, x: &str, ys: &[&str]) -> Self {
        let idx = |c: &str| self.columns.iter().position(|n| n == c).expect("plot column");
        self.plot = Some((idx(x), ys.iter().map(|c| idx(c)).collect()));
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Header comments (digest first, then units), header row, data rows with
    /// 12 significant digits.
    pub fn render(&self, digest: &str) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "# scenario_sha256: {digest}");
        let _ = writeln!(o, "# {UNITS_LINE}");
        for c in &self.comments {
            let _ = writeln!(o, "# {c}");
        }
        let _ = writeln!(o, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.11e}")).collect();
            let _ = writeln!(o, "{}", cells.join(","));
        }
        o
    }

    /// Inverse of [`CsvTable::render`]; comment lines other than the digest are kept verbatim.
    pub fn parse(name: &str, text: &str) -> Result<(Self, String)> {
        let mut digest = String::new();
        let mut t = CsvTable::new(name, &[]);
        for line in text.lines() {
            if let Some(c) = line.strip_prefix("# ") {
                if let Some(d) = c.strip_prefix("scenario_sha256: ") {
                    digest = d.to_string();
                } else if c != UNITS_LINE {
                    t.comments.push(c.to_string());
                }
            } else if t.columns.is_empty() {
                t.columns = line.split(',').map(str::to_string).collect();
            } else {
                let row = line
                    .split(',')
                    .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("{name}: bad number `{v}`"))))
                    .collect::<Result<Vec<_>>>()?;
                t.push(row);
            }
        }
        Ok((t, digest))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub scenario_digest: String,
    pub versions: BTreeMap<String, String>,
    pub wall_clock_s: f64,
    /// Quadrature and convergence estimates keyed by stage.
    pub estimates: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

pub fn module_versions() -> BTreeMap<String, String> {
    let v = env!("CARGO_PKG_VERSION").to_string();
    ["core-config", "material", "greens", "kernels", "volterra", "markov", "force", "laplace", "cli", "oracles"]
        .iter()
        .map(|m| (m.to_string(), v.clone()))
        .collect()
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of the table's plot columns. Returns None when the table has no plot.
pub fn render_svg(t: &CsvTable) -> Option<String> {
    let (xi, ys) = t.plot.as_ref()?;
    if t.rows.is_empty() {
        return None;
    }
    let xs: Vec<f64> = t.rows.iter().map(|r| r[*xi]).collect();
    let (x0, x1) = bounds(xs.iter().copied());
    let (y0, y1) = bounds(t.rows.iter().flat_map(|r| ys.iter().map(move |k| r[*k])));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    if y0 < 0.0 && y1 > 0.0 {
        let z = sy(0.0);
        let _ = writeln!(o, r##"<line x1="{PAD}" y1="{z:.2}" x2="{}" y2="{z:.2}" stroke="#999" stroke-dasharray="4 3"/>"##, W - PAD);
    }
    for (v, anchor, x, y) in [(x0, "start", PAD, H - PAD + 16.0), (x1, "end", W - PAD, H - PAD + 16.0)] {
        let _ = writeln!(o, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.4}</text>"#);
    }
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="end">{y0:.4}</text>"#, PAD - 4.0, H - PAD);
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, PAD - 4.0, PAD + 10.0);
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 20.0, t.columns[*xi]);
    for (n, k) in ys.iter().enumerate() {
        let c = COLORS[n % COLORS.len()];
        let pts: Vec<String> = t.rows.iter().map(|r| format!("{:.2},{:.2}", sx(r[*xi]), sy(r[*k]))).collect();
        let _ = writeln!(o, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" fill="{c}">{}</text>"#,
            PAD + 8.0,
            PAD + 16.0 + 14.0 * n as f64,
            t.columns[*k]
        );
    }
    o.push_str("</svg>\n");
    Some(o)
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Write every table (and its SVG when asked) plus manifest.json into `dir`.
/// Nothing is created before all content is rendered.
pub fn write_all(dir: &Path, digest: &str, tables: &[CsvTable], plot: bool, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for t in tables {
        files.push((dir.join(format!("{}.csv", t.name)), t.render(digest)));
        if plot {
            if let Some(svg) = render_svg(t) {
                files.push((dir.join(format!("{}.svg", t.name)), svg));
            }
        }
    }
    manifest.outputs = files
        .iter()
        .map(|(p, _)| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    files.push((dir.join("manifest.json"), json + "\n"));
    std::fs::create_dir_all(dir)?;
    for (p, body) in &files {
        std::fs::write(p, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
