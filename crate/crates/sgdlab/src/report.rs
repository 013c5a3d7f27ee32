//! CSV/JSON artifact writers.
//!
//! CSV dialect: comma-separated, one header row, `.` decimal separator, LF
//! line endings. Floats are written with Rust's shortest-roundtrip formatting,
//! so re-running a seeded command overwrites byte-identical files. Every CSV
//! gets a `<name>.provenance.json` sidecar carrying the command, full config
//! echo, seed, and artifact version.

use crate::ensemble::{Classification, EnsembleResult, Histogram, PhaseDiagramGrid};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const ARTIFACT_VERSION: u32 = 1;

pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

pub fn fmt(v: f64) -> String {
    // Shortest-roundtrip in a readable magnitude band, scientific outside it
    // (Display pads 1e-142 with a hundred zeros).
    if v == 0.0 || (v.abs() >= 1e-6 && v.abs() < 1e12) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Serialize)]
struct Sidecar<'a, C: Serialize> {
    command: &'a str,
    artifact_version: u32,
    seed: u64,
    config: &'a C,
}

/// Write `<csv_path>.provenance.json` next to an artifact.
pub fn provenance_sidecar<C: Serialize>(
    csv_path: &Path,
    command: &str,
    seed: u64,
    config: &C,
) -> std::io::Result<()> {
    let mut sidecar_path: PathBuf = csv_path.to_path_buf();
    let name = format!(
        "{}.provenance.json",
        sidecar_path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("artifact")
    );
    sidecar_path.set_file_name(name);
    let mut out = BufWriter::new(File::create(sidecar_path)?);
    serde_json::to_writer_pretty(
        &mut out,
        &Sidecar {
            command,
            artifact_version: ARTIFACT_VERSION,
            seed,
            config,
        },
    )?;
    out.write_all(b"\n")?;
    out.flush()
}

/// `runs.csv`: run_id, status, terminal coordinates, first divergence step.
pub fn write_runs_csv(path: &Path, result: &EnsembleResult) -> std::io::Result<()> {
    let dim = result.dim();
    let mut header = vec!["run_id".to_string(), "status".to_string()];
    header.extend((0..dim).map(|i| format!("w{i}")));
    header.push("first_divergence_step".to_string());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header_refs,
        result.runs.iter().enumerate().map(|(i, r)| {
            let mut row = vec![
                i.to_string(),
                serde_json::to_value(r.status)
                    .unwrap()
                    .as_str()
                    .unwrap()
                    .to_string(),
            ];
            row.extend(r.terminal_w.iter().map(|&v| fmt(v)));
            row.push(
                r.first_divergence_step
                    .map(|s| s.to_string())
                    .unwrap_or_default(),
            );
            row
        }),
    )
}

/// `snapshots.csv`: run_id, step, coordinates.
pub fn write_snapshots_csv(path: &Path, result: &EnsembleResult) -> std::io::Result<()> {
    let dim = result.dim();
    let mut header = vec!["run_id".to_string(), "step".to_string()];
    header.extend((0..dim).map(|i| format!("w{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = result.snapshots.iter().enumerate().flat_map(|(i, snaps)| {
        result
            .snapshot_steps
            .iter()
            .zip(snaps)
            .map(move |(&step, w)| {
                let mut row = vec![i.to_string(), step.to_string()];
                row.extend(w.iter().map(|&v| fmt(v)));
                row
            })
    });
    write_csv(path, &header_refs, rows)
}

/// Long-format histogram rows `step,bin_lo,bin_hi,count` with underflow and
/// overflow rows at the ends.
pub fn histogram_rows(step: u64, h: &Histogram) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(h.counts.len() + 2);
    rows.push(vec![
        step.to_string(),
        "-inf".into(),
        fmt(h.lo),
        h.underflow.to_string(),
    ]);
    for (i, &c) in h.counts.iter().enumerate() {
        let (lo, hi) = h.bin_edges(i);
        rows.push(vec![step.to_string(), fmt(lo), fmt(hi), c.to_string()]);
    }
    rows.push(vec![
        step.to_string(),
        fmt(h.hi),
        "inf".into(),
        h.overflow.to_string(),
    ]);
    rows
}

/// Long-format phase grid `a,lambda,escape_probability,all_diverged`.
pub fn write_phase_grid_csv(path: &Path, grid: &PhaseDiagramGrid) -> std::io::Result<()> {
    let rows = grid.a_values.iter().enumerate().flat_map(|(i, &a)| {
        let escape = &grid.escape_probability[i];
        let div = &grid.all_diverged[i];
        grid.lambda_values
            .iter()
            .enumerate()
            .map(move |(j, &lambda)| {
                vec![
                    fmt(a),
                    fmt(lambda),
                    fmt(escape[j]),
                    (div[j] as u8).to_string(),
                ]
            })
            .collect::<Vec<_>>()
    });
    write_csv(
        path,
        &["a", "lambda", "escape_probability", "all_diverged"],
        rows,
    )
}

pub fn write_boundary_csv(path: &Path, grid: &PhaseDiagramGrid) -> std::io::Result<()> {
    write_csv(
        path,
        &["a", "lambda_lo", "lambda_hi"],
        grid.theory_boundary
            .iter()
            .map(|&(a, lo, hi)| vec![fmt(a), fmt(lo), fmt(hi)]),
    )
}

pub fn write_classification_csv(path: &Path, c: &Classification) -> std::io::Result<()> {
    let mut rows: Vec<Vec<String>> = c
        .counts
        .iter()
        .map(|(label, n)| vec![label.clone(), n.to_string()])
        .collect();
    rows.push(vec!["diverged".into(), c.diverged.to_string()]);
    rows.push(vec!["unclassified".into(), c.unclassified.to_string()]);
    write_csv(path, &["basin", "count"], rows)
}

/// 2-D occupancy counts of a snapshot on a `bins x bins` grid over
/// `[lo, hi]²`, long format `x,y,count` (cell centers).
pub fn density2d_rows(
    result: &EnsembleResult,
    snapshot_index: usize,
    bins: usize,
    lo: f64,
    hi: f64,
) -> Vec<Vec<String>> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![vec![0u64; bins]; bins];
    for snaps in &result.snapshots {
        let w = &snaps[snapshot_index];
        let (x, y) = (w[0], w[1]);
        if x >= lo && x < hi && y >= lo && y < hi {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            let j = (((y - lo) / width) as usize).min(bins - 1);
            counts[i][j] += 1;
        }
    }
    let mut rows = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            rows.push(vec![
                fmt(lo + (i as f64 + 0.5) * width),
                fmt(lo + (j as f64 + 0.5) * width),
                c.to_string(),
            ]);
        }
    }
    rows
}
