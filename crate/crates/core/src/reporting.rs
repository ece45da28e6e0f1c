//! Tabulation, SVG rendering and on-disk export of results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ccp::{CcpResult, SweepEntry};
use crate::error::{Error, Result};
use crate::geometry::{diameter_graph, pendant_area, upper_bound, Polygon};
use crate::verification::{structure_report, TOL_FINAL};

/// Best published lower bound on the maximal area of a unit-diameter `n`-gon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiteratureBound {
    pub n: usize,
    pub area: f64,
    pub sources: &'static [&'static str],
}

/// Sorted by `n`.
pub const LITERATURE_BOUNDS: &[LiteratureBound] = &[
    LiteratureBound {
        n: 6,
        area: 0.6749814429,
        sources: &["bieri1961", "graham1975", "mossinghoff2006b"],
    },
    LiteratureBound {
        n: 8,
        area: 0.7268684828,
        sources: &["audet2002", "mossinghoff2006b"],
    },
    LiteratureBound {
        n: 10,
        area: 0.7491373459,
        sources: &["henrion2013", "mossinghoff2006b"],
    },
    LiteratureBound {
        n: 12,
        area: 0.7607298734,
        sources: &["henrion2013", "mossinghoff2006b"],
    },
    LiteratureBound {
        n: 14,
        area: 0.7675310111,
        sources: &["mossinghoff2006b"],
    },
    LiteratureBound {
        n: 16,
        area: 0.7718613220,
        sources: &["mossinghoff2006b"],
    },
    LiteratureBound {
        n: 18,
        area: 0.7747881651,
        sources: &["mossinghoff2006b"],
    },
    LiteratureBound {
        n: 20,
        area: 0.7768587560,
        sources: &["mossinghoff2006b"],
    },
    LiteratureBound {
        n: 22,
        area: 0.7783773308,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 24,
        area: 0.7795240461,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 26,
        area: 0.7804111201,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 28,
        area: 0.7811114192,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 30,
        area: 0.7816739255,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 32,
        area: 0.7818946320,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 34,
        area: 0.7823103007,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 36,
        area: 0.7826513767,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 38,
        area: 0.7829526627,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 40,
        area: 0.7832011589,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 42,
        area: 0.7834135187,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 44,
        area: 0.7835966860,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 46,
        area: 0.7837554636,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 48,
        area: 0.7838942710,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 50,
        area: 0.7840161496,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 52,
        area: 0.7841233641,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 54,
        area: 0.7842192995,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 56,
        area: 0.7843044654,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 58,
        area: 0.7843807534,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 60,
        area: 0.7844492943,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 62,
        area: 0.7845111362,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 64,
        area: 0.7834620877,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 66,
        area: 0.7845910589,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 68,
        area: 0.7846139029,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 70,
        area: 0.7846403575,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 72,
        area: 0.7847454020,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 74,
        area: 0.7845564840,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 76,
        area: 0.7847585719,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 78,
        area: 0.7845160579,
        sources: &["pinter2018"],
    },
    LiteratureBound {
        n: 80,
        area: 0.7848252941,
        sources: &["pinter2018"],
    },
];

pub fn literature_lower_bound(n: usize) -> Option<&'static LiteratureBound> {
    LITERATURE_BOUNDS
        .binary_search_by_key(&n, |b| b.n)
        .ok()
        .map(|i| &LITERATURE_BOUNDS[i])
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    /// Area of the pendant polygon used as the starting point.
    pub area_start: f64,
    pub literature: Option<f64>,
    pub upper_bound: f64,
    pub area: f64,
    pub iterations: usize,
}

impl SweepRow {
    pub fn from_result(r: &CcpResult) -> Result<Self> {
        Ok(SweepRow {
            n: r.n,
            area_start: pendant_area(r.n)?,
            literature: literature_lower_bound(r.n).map(|b| b.area),
            upper_bound: upper_bound(r.n),
            area: r.area,
            iterations: r.iterations,
        })
    }
}

/// Rows for the successful entries of a sweep, in input order.
pub fn sweep_rows(entries: &[SweepEntry]) -> Vec<SweepRow> {
    entries
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok())
        .filter_map(|r| SweepRow::from_result(r).ok())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

const HEADERS: [&str; 6] = ["n", "A(R+)", "lit", "A_bar", "A*", "k"];

fn row_cells(r: &SweepRow) -> [String; 6] {
    [
        r.n.to_string(),
        format!("{:.10}", r.area_start),
        r.literature
            .map_or_else(|| "--".to_string(), |a| format!("{a:.10}")),
        format!("{:.10}", r.upper_bound),
        format!("{:.10}", r.area),
        r.iterations.to_string(),
    ]
}

/// Areas are printed with 10 decimals; a missing literature value is `--`.
pub fn render_table(rows: &[SweepRow], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&HEADERS.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&row_cells(r).join(","));
                out.push('\n');
            }
        }
        TableFormat::Text => {
            let cells: Vec<[String; 6]> = rows.iter().map(row_cells).collect();
            let mut widths = HEADERS.map(str::len);
            for c in &cells {
                for (w, s) in widths.iter_mut().zip(c) {
                    *w = (*w).max(s.len());
                }
            }
            let line = |c: &[&str]| {
                let parts: Vec<String> = c
                    .iter()
                    .zip(widths)
                    .map(|(s, w)| format!("{s:>w$}"))
                    .collect();
                parts.join(" | ").trim_end().to_string()
            };
            out.push_str(&line(&HEADERS));
            out.push('\n');
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
            for c in &cells {
                let refs: Vec<&str> = c.iter().map(String::as_str).collect();
                out.push_str(&line(&refs));
                out.push('\n');
            }
        }
        TableFormat::Json => {
            out = serde_json::to_string_pretty(rows).expect("rows serialize");
            out.push('\n');
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvgOptions {
    /// Side of the square canvas in pixels.
    pub size: f64,
    pub labels: bool,
    /// Tolerance used to decide which chords have diameter length.
    pub chord_tol: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            size: 400.0,
            labels: false,
            chord_tol: TOL_FINAL,
        }
    }
}

/// Dashed boundary, solid diameter chords, optional vertex labels. The output
/// depends only on the polygon and the options.
pub fn render_svg(p: &Polygon, opts: &SvgOptions) -> String {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for v in p.vertices() {
        xmin = xmin.min(v.x);
        xmax = xmax.max(v.x);
        ymin = ymin.min(v.y);
        ymax = ymax.max(v.y);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    let margin = 0.05 * opts.size;
    let scale = (opts.size - 2.0 * margin) / span;
    let cx = 0.5 * (xmin + xmax);
    let cy = 0.5 * (ymin + ymax);
    let map = |x: f64, y: f64| {
        (
            0.5 * opts.size + (x - cx) * scale,
            0.5 * opts.size - (y - cy) * scale,
        )
    };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        opts.size
    )
    .unwrap();
    let points: Vec<String> = p
        .vertices()
        .iter()
        .map(|v| {
            let (x, y) = map(v.x, v.y);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    writeln!(
        s,
        r#"  <polygon points="{}" fill="none" stroke="black" stroke-width="1" stroke-dasharray="4 3"/>"#,
        points.join(" ")
    )
    .unwrap();
    if let Ok(g) = diameter_graph(p, opts.chord_tol) {
        for &(i, j) in &g.edges {
            let (x1, y1) = map(p.vertex(i).x, p.vertex(i).y);
            let (x2, y2) = map(p.vertex(j).x, p.vertex(j).y);
            writeln!(
                s,
                r#"  <line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black" stroke-width="1"/>"#
            )
            .unwrap();
        }
    }
    if opts.labels {
        for (i, v) in p.vertices().iter().enumerate() {
            let (x, y) = map(v.x, v.y);
            writeln!(
                s,
                r#"  <text x="{:.3}" y="{:.3}" font-size="10">v{i}</text>"#,
                x + 3.0,
                y - 3.0
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Paths written by [`export_run`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedFiles {
    pub polygon: PathBuf,
    pub trace: PathBuf,
    pub structure: PathBuf,
    pub svg: PathBuf,
}

/// First 12 hex digits of the SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes polygon JSON, trace CSV, structure report JSON and SVG into `dir`.
/// File names carry `n` and a hash of the polygon JSON.
pub fn export_run(result: &CcpResult, dir: &Path) -> Result<ExportedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let polygon_json = result.polygon.to_json();
    let stem = format!("n{}_{}", result.n, content_hash(polygon_json.as_bytes()));
    let files = ExportedFiles {
        polygon: dir.join(format!("polygon_{stem}.json")),
        trace: dir.join(format!("trace_{stem}.csv")),
        structure: dir.join(format!("structure_{stem}.json")),
        svg: dir.join(format!("polygon_{stem}.svg")),
    };
    write(&files.polygon, &polygon_json)?;
    let trace = result.trace.clone().unwrap_or_default();
    write(&files.trace, &trace.to_csv())?;
    let structure = match structure_report(&result.polygon, TOL_FINAL) {
        Ok(r) => r.to_json(),
        Err(e) => format!("{}\n", serde_json::json!({ "error": e.to_string() })),
    };
    write(&files.structure, &structure)?;
    write(
        &files.svg,
        &render_svg(&result.polygon, &SvgOptions::default()),
    )?;
    Ok(files)
}

/// Exports each successful entry into `dir/n<N>/` and writes `table.csv`.
pub fn export_sweep(entries: &[SweepEntry], dir: &Path) -> Result<Vec<ExportedFiles>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for e in entries {
        if let Ok(r) = &e.outcome {
            out.push(export_run(r, &dir.join(format!("n{}", e.n)))?);
        }
    }
    write(
        &dir.join("table.csv"),
        &render_table(&sweep_rows(entries), TableFormat::Csv),
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccp::CcpStatus;
    use crate::geometry::{area, build_pendant_polygon, build_regular_polygon};

    fn fake_result(n: usize) -> CcpResult {
        let polygon = build_pendant_polygon(n).unwrap();
        CcpResult {
            n,
            area: area(&polygon),
            z: Vec::new(),
            polygon,
            iterations: 3,
            status: CcpStatus::Converged,
            last_rel_step: 0.0,
            trace: None,
            property_violations: Vec::new(),
        }
    }

    #[test]
    fn literature_lookup() {
        let b = literature_lower_bound(6).unwrap();
        assert_eq!(b.area, 0.6749814429);
        assert!(b.sources.contains(&"bieri1961"));
        assert!(literature_lower_bound(7).is_none());
        assert!(literature_lower_bound(128).is_none());
        assert!(LITERATURE_BOUNDS.windows(2).all(|w| w[0].n < w[1].n));
    }

    #[test]
    fn table_formats() {
        let rows = vec![
            SweepRow::from_result(&fake_result(6)).unwrap(),
            SweepRow::from_result(&fake_result(82)).unwrap(),
        ];
        let csv = render_table(&rows, TableFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,A(R+),lit,A_bar,A*,k");
        assert!(lines[1].starts_with("6,0.6722882584,0.6749814429,0.6961524227,"));
        assert!(lines[1].ends_with(",3"));
        assert_eq!(lines[2].split(',').nth(2), Some("--"));

        let text = render_table(&rows, TableFormat::Text);
        let bars: Vec<usize> = text.lines().filter_map(|l| l.find('|')).collect();
        assert_eq!(bars.len(), 3);
        assert!(bars.iter().all(|&b| b == bars[0]));
        assert!(text.lines().nth(1).unwrap().contains("-+-"));

        let json: serde_json::Value =
            serde_json::from_str(&render_table(&rows, TableFormat::Json)).unwrap();
        assert_eq!(json[1]["literature"], serde_json::Value::Null);
    }

    #[test]
    fn svg_is_deterministic_and_draws_chords() {
        let p = build_pendant_polygon(6).unwrap();
        let opts = SvgOptions {
            labels: true,
            ..SvgOptions::default()
        };
        let a = render_svg(&p, &opts);
        assert_eq!(a, render_svg(&p, &opts));
        assert_eq!(a.matches("<line").count(), 6);
        assert_eq!(a.matches("<text").count(), 6);
        assert!(a.contains("stroke-dasharray"));
        // The origin vertex sits at the bottom of the canvas.
        let hex = render_svg(&build_regular_polygon(6).unwrap(), &SvgOptions::default());
        assert_eq!(hex.matches("<line").count(), 3);
    }

    #[test]
    fn export_writes_four_hashed_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = fake_result(8);
        let files = export_run(&r, dir.path()).unwrap();
        for f in [&files.polygon, &files.trace, &files.structure, &files.svg] {
            assert!(f.exists(), "{f:?}");
        }
        let name = files.polygon.file_name().unwrap().to_str().unwrap();
        assert!(name.starts_with("polygon_n8_") && name.len() == "polygon_n8_.json".len() + 12);
        let back = Polygon::read_json(&files.polygon).unwrap();
        assert_eq!(back, r.polygon);
        let again = export_run(&r, dir.path()).unwrap();
        assert_eq!(again, files);
        let structure: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&files.structure).unwrap()).unwrap();
        assert_eq!(structure["passes"], true);
    }

    #[test]
    fn sweep_export_uses_subdirectories() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            SweepEntry {
                n: 6,
                outcome: Ok(fake_result(6)),
            },
            SweepEntry {
                n: 7,
                outcome: Err(Error::OddN(7)),
            },
            SweepEntry {
                n: 8,
                outcome: Ok(fake_result(8)),
            },
        ];
        let files = export_sweep(&entries, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files[1].polygon.starts_with(dir.path().join("n8")));
        let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
        assert_eq!(table.lines().count(), 3);
    }
}
