//! Output files: headers, CSV tables, SVG plots and atomic writes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
    /// Markdown tables (algebra only).
    Md,
}

/// Provenance written at the top of every file.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Header {
    fn lines(&self) -> Vec<String> {
        let tol: Vec<String> = self.tolerances.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
        vec![
            format!("{} {}", self.tool, self.version),
            format!("command={} scenario={} seed={}", self.command, self.scenario, self.seed),
            format!("tolerances: {}", tol.join(" ")),
        ]
    }
}

/// A measured value that disagrees with its reference value.
#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub id: String,
    pub measured: f64,
    pub reference: f64,
    pub note: String,
}

/// One output file, rendered in memory.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub file_name: String,
    pub format: Format,
    pub content: String,
}

impl Artifact {
    pub fn json<R: Serialize>(stem: &str, header: &Header, report: &R, discrepancies: &[Discrepancy]) -> Result<Self> {
        let doc = serde_json::json!({ "header": header, "report": report, "discrepancies": discrepancies });
        let mut content = serde_json::to_string_pretty(&doc)?;
        content.push('\n');
        Ok(Self { file_name: format!("{stem}.json"), format: Format::Json, content })
    }

    pub fn csv(stem: &str, header: &Header, table: &Table) -> Self {
        let mut content: String = header.lines().iter().map(|l| format!("# {l}\n")).collect();
        content.push_str(&table.render());
        Self { file_name: format!("{stem}.csv"), format: Format::Csv, content }
    }

    pub fn svg(stem: &str, header: &Header, body: String) -> Self {
        let comment: String = header.lines().iter().map(|l| format!("<!-- {} -->\n", l.replace("--", "- -"))).collect();
        Self { file_name: format!("{stem}.svg"), format: Format::Svg, content: format!("{comment}{body}") }
    }

    pub fn markdown(stem: &str, header: &Header, body: String) -> Self {
        let comment: String = header.lines().iter().map(|l| format!("<!-- {l} -->\n")).collect();
        Self { file_name: format!("{stem}.md"), format: Format::Md, content: format!("{comment}\n{body}") }
    }
}

/// Writes `content` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let err = |source| CliError::Write { path: path.into(), source };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(content.as_bytes()).map_err(err)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(err)?;
    }
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.file_name);
            write_atomic(&path, &a.content).map(|_| path)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV

/// A numeric table with an optional leading text column.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

// ---------------------------------------------------------------------------
// SVG

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn open_svg(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Line plot of several `(x, y)` series sharing axes.
pub fn line_plot(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|(_, s)| s.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|(_, s)| s.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut svg = open_svg(title);
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{text}</text>"
        );
    };
    label(&mut svg, MARGIN, HEIGHT - MARGIN + 16.0, "start", format!("{x0:.4}"));
    label(&mut svg, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end", format!("{x1:.4}"));
    label(&mut svg, WIDTH / 2.0, HEIGHT - 12.0, "middle", escape(x_label));
    label(&mut svg, MARGIN - 4.0, HEIGHT - MARGIN, "end", format!("{y0:.4}"));
    label(&mut svg, MARGIN - 4.0, MARGIN + 10.0, "end", format!("{y1:.4}"));
    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        label(
            &mut svg,
            WIDTH - MARGIN - 6.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            "end",
            format!("<tspan fill=\"{colour}\">{}</tspan>", escape(name)),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Filled cells on a `(column, row)` lattice, one colour per layer; rows grow
/// upwards.
pub fn cell_map(title: &str, x_label: &str, y_label: &str, size: (usize, usize), layers: &[(String, Vec<(usize, usize)>)]) -> String {
    let (nc, nr) = (size.0.max(1) as f64, size.1.max(1) as f64);
    let (w, h) = ((WIDTH - 2.0 * MARGIN) / nc, (HEIGHT - 2.0 * MARGIN) / nr);
    let mut svg = open_svg(title);
    for (k, (name, cells)) in layers.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(svg, "<g fill=\"{colour}\" fill-opacity=\"0.55\">");
        let mut sorted: Vec<(usize, usize)> = cells.iter().map(|&(c, r)| (r, c)).collect();
        sorted.sort_unstable();
        sorted.dedup();
        // one rectangle per horizontal run
        let mut i = 0;
        while i < sorted.len() {
            let (r, c0) = sorted[i];
            let mut c1 = c0;
            while i + 1 < sorted.len() && sorted[i + 1] == (r, c1 + 1) {
                c1 += 1;
                i += 1;
            }
            i += 1;
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
                MARGIN + c0 as f64 * w,
                HEIGHT - MARGIN - (r as f64 + 1.0) * h,
                (c1 - c0 + 1) as f64 * w,
                h
            );
        }
        svg.push_str("</g>\n");
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\" text-anchor=\"end\">{}</text>",
            WIDTH - 6.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(svg, "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>", HEIGHT / 2.0, HEIGHT / 2.0, escape(y_label));
    svg.push_str("</svg>\n");
    svg
}

/// Oblique projection of polylines in 3-space, each group in its own colour.
pub fn wireframe(title: &str, groups: &[(String, Vec<Vec<[f64; 3]>>)]) -> String {
    let project = |p: &[f64; 3]| (p[0] - 0.5 * p[1], p[2] - 0.35 * p[1]);
    let all: Vec<(f64, f64)> = groups.iter().flat_map(|(_, ls)| ls.iter().flatten().map(project)).collect();
    let (x0, x1) = bounds(all.iter().map(|p| p.0));
    let (y0, y1) = bounds(all.iter().map(|p| p.1));
    let scale = ((WIDTH - 2.0 * MARGIN) / (x1 - x0)).min((HEIGHT - 2.0 * MARGIN) / (y1 - y0));
    let mut svg = open_svg(title);
    for (k, (name, lines)) in groups.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(svg, "<g fill=\"none\" stroke=\"{colour}\" stroke-width=\"0.8\">");
        for line in lines {
            let pts: Vec<String> = line
                .iter()
                .map(project)
                .map(|(x, y)| format!("{:.2},{:.2}", MARGIN + (x - x0) * scale, HEIGHT - MARGIN - (y - y0) * scale))
                .collect();
            let _ = writeln!(svg, "<polyline points=\"{}\"/>", pts.join(" "));
        }
        svg.push_str("</g>\n");
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\" text-anchor=\"end\">{}</text>",
            WIDTH - 6.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        Header {
            tool: "wavelab",
            version: VERSION,
            command: "simulate",
            scenario: "t".into(),
            seed: 3,
            tolerances: [("cfl".to_string(), 0.45)].into(),
        }
    }

    #[test]
    fn csv_carries_the_header() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![num(0.1), num(2.0)]);
        let a = Artifact::csv("out", &header(), &t);
        let lines: Vec<&str> = a.content.lines().collect();
        assert!(lines[0].starts_with("# wavelab"));
        assert!(lines[1].contains("seed=3"));
        assert!(lines[2].contains("cfl=4.5e-1"));
        assert_eq!(&lines[3..], ["x,y", "0.1,2.0"]);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn plots_are_well_formed() {
        let s = line_plot("a < b", "x", &[("f".into(), vec![(0.0, 1.0), (1.0, 2.0)])]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>") && s.contains("a &lt; b"));
        let m = cell_map("m", "x", "t", (4, 4), &[("S+".into(), vec![(0, 0), (3, 3)])]);
        assert_eq!(m.matches("<rect x=").count(), 3);
    }
}
