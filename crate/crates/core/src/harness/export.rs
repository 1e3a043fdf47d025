//! CSV and JSON export of episode trajectories and benchmark tables.
//!
//! CSV files are UTF-8, comma separated, with a mandatory header row and
//! floats written with 17 significant digits so they parse back bit-exactly.
//! Empty cells mean "no value". JSON documents carry `schema_version`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bench::{BenchmarkTable, VariantRow};
use super::metrics::compute_metrics;
use super::runner::EpisodeRecord;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

const EPISODE_HEADER: &str = "t,theta_set,theta,theta_dot,theta_r,theta_dot_r,e_theta,e_theta_dot,u,u_r,cost,lyapunov,k_hat_1,k_hat_2,k_u_hat";
const TABLE_HEADER: &str = "variant,n_envs,n_completed,n_diverged,mean_avg_cost,se_avg_cost,mean_total_cost,mean_avg_e_theta_sq_deg2,se_avg_e_theta_sq_deg2";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(ExportFormat::Csv),
            Some("json") => Ok(ExportFormat::Json),
            _ => Err(Error::Argument(format!(
                "cannot infer export format from {}; use .csv or .json",
                path.display()
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct EpisodeDocument {
    schema_version: u32,
    kind: String,
    episode: EpisodeRecord,
}

#[derive(Serialize, Deserialize)]
struct BenchmarkDocument {
    schema_version: u32,
    kind: String,
    benchmark: BenchmarkTable,
}

fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f17).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| Error::io(path, e))?,
    ))
}

pub fn export_episode(record: &EpisodeRecord, format: ExportFormat, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    match format {
        ExportFormat::Csv => write_episode_csv(record, &mut out),
        ExportFormat::Json => {
            let doc = EpisodeDocument {
                schema_version: SCHEMA_VERSION,
                kind: "episode".into(),
                episode: record.clone(),
            };
            serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::io(path, e.into()))?;
            out.write_all(b"\n")
        }
    }
    .and_then(|_| out.flush())
    .map_err(|e| Error::io(path, e))
}

pub fn import_episode(path: &Path, format: ExportFormat) -> Result<EpisodeRecord> {
    let input = open(path)?;
    match format {
        ExportFormat::Csv => read_episode_csv(input),
        ExportFormat::Json => {
            let doc: EpisodeDocument = serde_json::from_reader(input)?;
            check_document(doc.schema_version, &doc.kind, "episode")?;
            Ok(doc.episode)
        }
    }
}

pub fn export_table(table: &BenchmarkTable, format: ExportFormat, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    match format {
        ExportFormat::Csv => write_table_csv(&table.rows, &mut out),
        ExportFormat::Json => {
            let doc = BenchmarkDocument {
                schema_version: SCHEMA_VERSION,
                kind: "benchmark".into(),
                benchmark: table.clone(),
            };
            serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::io(path, e.into()))?;
            out.write_all(b"\n")
        }
    }
    .and_then(|_| out.flush())
    .map_err(|e| Error::io(path, e))
}

/// Reads back a JSON benchmark document.
pub fn import_table(path: &Path) -> Result<BenchmarkTable> {
    let doc: BenchmarkDocument = serde_json::from_reader(open(path)?)?;
    check_document(doc.schema_version, &doc.kind, "benchmark")?;
    Ok(doc.benchmark)
}

fn check_document(version: u32, kind: &str, want: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    if kind != want {
        return Err(Error::Schema(format!(
            "expected a {want} document, found {kind}"
        )));
    }
    Ok(())
}

pub fn write_episode_csv<W: Write>(record: &EpisodeRecord, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{EPISODE_HEADER}")?;
    let n = record.times.len();
    // costs sit on every k-th tick of the inner grid
    let stride = if record.costs.is_empty() {
        usize::MAX
    } else {
        n.div_ceil(record.costs.len())
    };
    for i in 0..n {
        let cost = (i % stride == 0)
            .then(|| record.costs.get(i / stride).copied())
            .flatten();
        let v = record.lyapunov.as_ref().map(|l| l[i]);
        let g = record.gains.get(i);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f17(record.times[i]),
            f17(record.theta_set[i]),
            f17(record.x[i][0]),
            f17(record.x[i][1]),
            f17(record.x_r[i][0]),
            f17(record.x_r[i][1]),
            f17(record.e[i][0]),
            f17(record.e[i][1]),
            f17(record.u[i]),
            f17(record.u_r[i]),
            opt(cost),
            opt(v),
            opt(g.map(|g| g[0])),
            opt(g.map(|g| g[1])),
            opt(g.map(|g| g[2])),
        )?;
    }
    Ok(())
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|e| Error::Parse {
        line,
        column,
        message: format!("'{cell}': {e}"),
    })
}

fn split_row(line: &str, expected: usize, line_no: usize) -> Result<Vec<&str>> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != expected {
        return Err(Error::Parse {
            line: line_no,
            column: 1,
            message: format!("expected {expected} fields, found {}", cells.len()),
        });
    }
    Ok(cells)
}

fn required(v: Option<f64>, line: usize, column: usize) -> Result<f64> {
    v.ok_or(Error::Parse {
        line,
        column,
        message: "missing value".into(),
    })
}

pub fn read_episode_csv<R: BufRead>(input: R) -> Result<EpisodeRecord> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("<episode csv>", e))?
        .unwrap_or_default();
    if header.trim_end() != EPISODE_HEADER {
        return Err(Error::Schema(format!(
            "unexpected episode header '{header}'"
        )));
    }
    let mut rec = EpisodeRecord {
        times: vec![],
        theta_set: vec![],
        x: vec![],
        x_r: vec![],
        u: vec![],
        u_r: vec![],
        e: vec![],
        gains: vec![],
        costs: vec![],
        lyapunov: None,
        summary: Default::default(),
    };
    let mut lyap: Vec<f64> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io("<episode csv>", e))?;
        let cells = split_row(&line, 15, line_no)?;
        let vals: Vec<Option<f64>> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| parse_cell(s, line_no, c + 1))
            .collect::<Result<_>>()?;
        let req = |c: usize| required(vals[c], line_no, c + 1);
        rec.times.push(req(0)?);
        rec.theta_set.push(req(1)?);
        rec.x.push([req(2)?, req(3)?]);
        rec.x_r.push([req(4)?, req(5)?]);
        rec.e.push([req(6)?, req(7)?]);
        rec.u.push(req(8)?);
        rec.u_r.push(req(9)?);
        if let Some(c) = vals[10] {
            rec.costs.push(c);
        }
        if let Some(v) = vals[11] {
            lyap.push(v);
        }
        if let (Some(a), Some(b), Some(c)) = (vals[12], vals[13], vals[14]) {
            rec.gains.push([a, b, c]);
        }
    }
    if !lyap.is_empty() {
        if lyap.len() != rec.times.len() {
            return Err(Error::Schema("lyapunov column is partially filled".into()));
        }
        rec.lyapunov = Some(lyap);
    }
    rec.summary = compute_metrics(&rec);
    Ok(rec)
}

pub fn write_table_csv<W: Write>(rows: &[VariantRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.variant,
            r.n_envs,
            r.n_completed,
            r.n_diverged,
            opt(r.mean_avg_cost),
            opt(r.se_avg_cost),
            opt(r.mean_total_cost),
            opt(r.mean_avg_e_theta_sq_deg),
            opt(r.se_avg_e_theta_sq_deg),
        )?;
    }
    Ok(())
}

pub fn read_table_csv<R: BufRead>(input: R) -> Result<Vec<VariantRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("<table csv>", e))?
        .unwrap_or_default();
    if header.trim_end() != TABLE_HEADER {
        return Err(Error::Schema(format!("unexpected table header '{header}'")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io("<table csv>", e))?;
        let cells = split_row(&line, 9, line_no)?;
        let count = |c: usize| {
            cells[c].parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                column: c + 1,
                message: format!("'{}': {e}", cells[c]),
            })
        };
        let float = |c: usize| parse_cell(cells[c], line_no, c + 1);
        rows.push(VariantRow {
            variant: cells[0].to_string(),
            n_envs: count(1)?,
            n_completed: count(2)?,
            n_diverged: count(3)?,
            mean_avg_cost: float(4)?,
            se_avg_cost: float(5)?,
            mean_total_cost: float(6)?,
            mean_avg_e_theta_sq_deg: float(7)?,
            se_avg_e_theta_sq_deg: float(8)?,
        });
    }
    Ok(rows)
}

/// Reads back a CSV benchmark table.
pub fn import_table_csv(path: &Path) -> Result<Vec<VariantRow>> {
    read_table_csv(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_table_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TABLE_HEADER}\n"));
        assert!(read_table_csv(format!("{TABLE_HEADER}\n").as_bytes())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn table_csv_round_trip() {
        let rows = vec![
            VariantRow {
                variant: "lqr-mrac100".into(),
                n_envs: 3,
                n_completed: 2,
                n_diverged: 1,
                mean_avg_cost: Some(0.1 + 0.2),
                se_avg_cost: Some(1e-300),
                mean_total_cost: Some(-0.0),
                mean_avg_e_theta_sq_deg: Some(std::f64::consts::PI),
                se_avg_e_theta_sq_deg: None,
            },
            VariantRow {
                variant: "lqr-direct100".into(),
                n_envs: 3,
                n_completed: 0,
                n_diverged: 3,
                mean_avg_cost: None,
                se_avg_cost: None,
                mean_total_cost: None,
                mean_avg_e_theta_sq_deg: None,
                se_avg_e_theta_sq_deg: None,
            },
        ];
        let mut buf = Vec::new();
        write_table_csv(&rows, &mut buf).unwrap();
        let back = read_table_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
        assert!(back[0].mean_total_cost.unwrap().is_sign_negative());
    }

    #[test]
    fn bad_rows_report_position() {
        let text = format!("{TABLE_HEADER}\nx,1,1,0,abc,,,,\n");
        match read_table_csv(text.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_table_csv("nope\n".as_bytes()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            ExportFormat::from_path(Path::new("a/b.csv")).unwrap(),
            ExportFormat::Csv
        );
        assert_eq!(
            ExportFormat::from_path(Path::new("b.json")).unwrap(),
            ExportFormat::Json
        );
        assert!(ExportFormat::from_path(Path::new("b.txt")).is_err());
    }
}
