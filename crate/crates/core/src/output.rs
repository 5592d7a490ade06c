//! Bit-stable CSV and SVG emission and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Field;

/// Column-oriented numeric table. The first column is `x` or `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if header.len() != columns.len() {
            return Err(Error::Verification(format!(
                "{} labels for {} columns",
                header.len(),
                columns.len()
            )));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Verification("columns differ in length".into()));
            }
        }
        Ok(Self { header, columns })
    }

    /// `x` followed by one column per labelled field; all fields share a grid.
    pub fn from_fields(fields: &[(String, &Field)]) -> Result<Self> {
        let Some((_, first)) = fields.first() else {
            return Self::new(vec!["x".into()], vec![Vec::new()]);
        };
        let grid = first.grid();
        let mut header = vec!["x".to_string()];
        let mut columns = vec![grid.nodes()];
        for (label, f) in fields {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            header.push(label.clone());
            columns.push(f.values().to_vec());
        }
        Ok(Self { header, columns })
    }

    /// Key column plus named series.
    pub fn series(key: &str, keys: &[f64], series: &[(&str, &[f64])]) -> Result<Self> {
        let mut header = vec![key.to_string()];
        let mut columns = vec![keys.to_vec()];
        for (name, v) in series {
            header.push(name.to_string());
            columns.push(v.to_vec());
        }
        Self::new(header, columns)
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// Label of a snapshot column.
pub fn time_label(t: f64) -> String {
    format!("t={t}")
}

/// Seventeen significant digits, exponent form; round-trips every `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a table as CSV text.
pub fn csv_string(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for r in 0..table.rows() {
        let row: Vec<String> = table.columns.iter().map(|c| format_value(c[r])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    write_atomic(path, csv_string(table).as_bytes())
}

/// Parses CSV text written by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Verification("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Verification(format!(
                "row {} has {} cells",
                i + 2,
                cells.len()
            )));
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(
                cell.trim().parse().map_err(|_| {
                    Error::Verification(format!("row {}: bad number `{cell}`", i + 2))
                })?,
            );
        }
    }
    Table::new(header, columns)
}

pub fn read_csv(path: &Path) -> Result<Table> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One polyline of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Line plot with optional logarithmic axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn axis_value(v: f64, log: bool) -> Option<f64> {
    if log {
        (v > 0.0 && v.is_finite()).then(|| v.log10())
    } else {
        v.is_finite().then_some(v)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders a figure as a standalone SVG document.
pub fn svg_string(fig: &Figure) -> String {
    let points: Vec<Vec<(f64, f64)>> = fig
        .series
        .iter()
        .map(|s| {
            s.x.iter()
                .zip(&s.y)
                .filter_map(|(&x, &y)| Some((axis_value(x, fig.log_x)?, axis_value(y, fig.log_y)?)))
                .collect()
        })
        .collect();
    let all = points.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let tick = |v: f64, log: bool| {
        if log {
            format!("1e{v:.2}")
        } else {
            format!("{v:.4e}")
        }
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (v, anchor_x) in [(x0, MARGIN), (x1, WIDTH - MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            HEIGHT - MARGIN + 16.0,
            tick(v, fig.log_x)
        );
    }
    for (v, anchor_y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{anchor_y:.2}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN - 4.0,
            tick(v, fig.log_y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&fig.y_label)
    );
    for (k, (s, pts)) in fig.series.iter().zip(&points).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(fig: &Figure, path: &Path) -> Result<()> {
    write_atomic(path, svg_string(fig).as_bytes())
}

/// Verdict of one enabled check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Human-readable criterion, e.g. `smoothing_gap < 0.10`.
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

impl Check {
    /// `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: format!("{name} < {threshold}"),
            value,
            pass: value < threshold,
        }
    }

    /// `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: format!("{name} <= {threshold}"),
            value,
            pass: value <= threshold,
        }
    }

    /// `value > threshold`.
    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: format!("{name} > {threshold}"),
            value,
            pass: value > threshold,
        }
    }

    /// Boolean property; `value` is 1 or 0.
    pub fn holds(name: &str, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            value: if pass { 1.0 } else { 0.0 },
            pass,
        }
    }
}

/// An artifact recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Reproducibility record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub config: String,
    pub wall_clock_secs: f64,
    pub checks: Vec<Check>,
    pub files: Vec<FileEntry>,
    /// Set when a numerical abort interrupted the run.
    pub error: Option<String>,
}

impl RunManifest {
    /// All checks passed and the run completed.
    pub fn success(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, prefix: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name.starts_with(prefix))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nlpme run manifest");
        let _ = writeln!(out, "version: {}", self.version);
        let _ = writeln!(out, "experiment: {}", self.experiment);
        let _ = writeln!(out, "wall_clock_s: {:.3}", self.wall_clock_secs);
        let status = match (&self.error, self.success()) {
            (Some(_), _) => "partial",
            (None, true) => "pass",
            (None, false) => "fail",
        };
        let _ = writeln!(out, "status: {status}");
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(out, "\n[checks]");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {} (value {})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                format_value(c.value)
            );
        }
        let _ = writeln!(out, "\n[files]");
        for f in &self.files {
            let _ = writeln!(out, "{}  {:>10}  {}", f.sha256, f.bytes, f.name);
        }
        let _ = writeln!(out, "\n[config]");
        out.push_str(&self.config);
        if !self.config.ends_with('\n') {
            out.push('\n');
        }
        out
    }
}

/// Collects the artifacts of one run inside its output directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        self.record(name, csv_string(table).as_bytes())
    }

    pub fn svg(&mut self, name: &str, fig: &Figure) -> Result<()> {
        self.record(name, svg_string(fig).as_bytes())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.txt` last.
    pub fn finish(&self, manifest: &RunManifest) -> Result<()> {
        write_atomic(&self.dir.join("manifest.txt"), manifest.render().as_bytes())
    }
}
