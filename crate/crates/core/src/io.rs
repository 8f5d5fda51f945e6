//! File formats: correlation functions as one CSV per order plus a JSON
//! sidecar, simulator snapshots and estimator tables as CSV.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces the values bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{PeriodicGrid, SiteSpace};
use crate::hierarchy::{GridTruncation, Storage, MAX_ORDER};
use crate::sim::ReplicaOutput;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("only periodic-grid truncations can be written")]
    NotAGrid,
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.to_path_buf(), source }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path).map_err(file_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    w.write_all(b"\n").map_err(file_err(path))?;
    w.flush().map_err(file_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, IoError> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

/// JSON sidecar describing a written truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSidecar {
    pub format_version: u32,
    pub max_order: usize,
    pub dim: usize,
    pub length: f64,
    pub spacing: f64,
    pub points_per_axis: usize,
    /// Only sorted index tuples stored; always false for files written here.
    pub symmetric_storage: bool,
    /// Rows hold tuples whose first point is the origin.
    pub translation_invariant: bool,
    pub files: Vec<String>,
}

fn order_file(n: usize) -> String {
    format!("order_{n}.csv")
}

/// Writes `k` as `order_<n>.csv` files and `truncation.json` into `dir`.
///
/// Columns are the per-axis grid indices of each point (`p1_x1, …`) and the
/// value. Translation-invariant files list only tuples anchored at the origin.
pub fn write_truncation(dir: &Path, k: &GridTruncation) -> Result<Vec<PathBuf>, IoError> {
    let SiteSpace::Periodic(grid) = k.space() else {
        return Err(IoError::NotAGrid);
    };
    std::fs::create_dir_all(dir).map_err(file_err(dir))?;
    let d = grid.dim();
    let mut written = Vec::new();
    let mut files = Vec::new();
    let mut tuple = [0usize; MAX_ORDER + 1];
    for n in 0..=k.max_order() {
        let name = order_file(n);
        let path = dir.join(&name);
        let mut w = csv_writer(&path)?;
        let mut header: Vec<String> = (1..=n).flat_map(|j| (1..=d).map(move |a| format!("p{j}_x{a}"))).collect();
        header.push("value".into());
        w.write_record(&header).map_err(csv_err(&path))?;
        for (idx, v) in k.order(n).iter().enumerate() {
            k.representative(n, idx, &mut tuple);
            let mut row: Vec<String> =
                tuple[..n].iter().flat_map(|&s| grid.axis_indices(s)[..d].to_vec()).map(|i| i.to_string()).collect();
            row.push(format!("{v}"));
            w.write_record(&row).map_err(csv_err(&path))?;
        }
        w.flush().map_err(file_err(&path))?;
        files.push(name);
        written.push(path);
    }
    let sidecar = TruncationSidecar {
        format_version: FORMAT_VERSION,
        max_order: k.max_order(),
        dim: d,
        length: grid.length(),
        spacing: grid.spacing(),
        points_per_axis: grid.points_per_axis(),
        symmetric_storage: false,
        translation_invariant: k.storage() == Storage::TranslationInvariant,
        files,
    };
    let path = dir.join("truncation.json");
    write_json(&path, &sidecar)?;
    written.push(path);
    Ok(written)
}

/// Reads a truncation written by [`write_truncation`].
pub fn read_truncation(dir: &Path) -> Result<GridTruncation, IoError> {
    let sidecar_path = dir.join("truncation.json");
    let text = std::fs::read_to_string(&sidecar_path).map_err(file_err(&sidecar_path))?;
    let meta: TruncationSidecar =
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: sidecar_path.clone(), source })?;
    let format = |path: &Path, reason: String| IoError::Format { path: path.to_path_buf(), reason };
    if meta.format_version != FORMAT_VERSION {
        return Err(format(&sidecar_path, format!("unsupported format version {}", meta.format_version)));
    }
    let grid = PeriodicGrid::new(meta.dim, meta.points_per_axis, meta.length)
        .map_err(|e| format(&sidecar_path, e.to_string()))?;
    let storage = if meta.translation_invariant { Storage::TranslationInvariant } else { Storage::Full };
    let mut k = GridTruncation::zeros(SiteSpace::Periodic(grid), storage, meta.max_order)
        .map_err(|e| format(&sidecar_path, e.to_string()))?;
    let d = meta.dim;
    let mut expected = [0usize; MAX_ORDER + 1];
    for n in 0..=meta.max_order {
        let path = dir.join(order_file(n));
        let mut r = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
        let mut count = 0;
        for (idx, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err(&path))?;
            if rec.len() != n * d + 1 || idx >= k.order(n).len() {
                return Err(format(&path, format!("unexpected row {}", idx + 1)));
            }
            k.representative(n, idx, &mut expected);
            for j in 0..n {
                let axes: Vec<usize> = (0..d)
                    .map(|a| rec[j * d + a].parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format(&path, e.to_string()))?;
                if grid.site_from_axes(&axes) != expected[j] {
                    return Err(format(&path, format!("row {} is out of order", idx + 1)));
                }
            }
            k.order_mut(n)[idx] =
                rec[n * d].parse().map_err(|e: std::num::ParseFloatError| format(&path, e.to_string()))?;
            count += 1;
        }
        if count != k.order(n).len() {
            return Err(format(&path, format!("{count} rows, expected {}", k.order(n).len())));
        }
    }
    Ok(k)
}

/// `replica, snapshot_time, particle_index, x1..xd`.
pub fn write_snapshots(path: &Path, outputs: &[ReplicaOutput], dim: usize) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["replica".to_string(), "snapshot_time".into(), "particle_index".into()];
    header.extend((1..=dim).map(|a| format!("x{a}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for o in outputs {
        for s in &o.snapshots {
            for i in 0..s.len() {
                let mut row = vec![o.replica.to_string(), format!("{}", s.time), i.to_string()];
                row.extend(s.point(i).iter().map(|c| format!("{c}")));
                w.write_record(&row).map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(file_err(path))
}

/// One line of an estimator table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub time: f64,
    pub estimator: String,
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub value: f64,
    pub stderr: f64,
    pub n_replicas: usize,
}

/// `time, estimator, bin_lo, bin_hi, value, stderr, n_replicas`.
pub fn write_estimates(path: &Path, rows: &[EstimateRow]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.write_record(["time", "estimator", "bin_lo", "bin_hi", "value", "stderr", "n_replicas"])
        .map_err(csv_err(path))?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            format!("{}", r.time),
            r.estimator.clone(),
            opt(r.bin_lo),
            opt(r.bin_hi),
            format!("{}", r.value),
            format!("{}", r.stderr),
            r.n_replicas.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

/// Writes a gnuplot-compatible script that plots `y` against `x` from a CSV file.
pub fn write_plot_script(
    path: &Path,
    csv_name: &str,
    title: &str,
    x: (usize, &str),
    y: (usize, &str),
    filter: Option<(usize, &str)>,
) -> Result<(), IoError> {
    let mut f = BufWriter::new(File::create(path).map_err(file_err(path))?);
    let using = match filter {
        Some((col, val)) => format!("(strcol({col}) eq \"{val}\" ? ${} : 1/0):{}", x.0, y.0),
        None => format!("{}:{}", x.0, y.0),
    };
    let text = format!(
        "# columns: x = {xn} (column {xc}), y = {yn} (column {yc})\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{title}'\n\
         set xlabel '{xn}'\n\
         set ylabel '{yn}'\n\
         plot '{csv_name}' using {using} with linespoints\n",
        xn = x.1,
        xc = x.0,
        yn = y.1,
        yc = y.0,
    );
    f.write_all(text.as_bytes()).map_err(file_err(path))?;
    f.flush().map_err(file_err(path))
}
