//! File formats: tree and forest JSON, path CSV (`index,value` for lattice
//! paths, `t,value` for real paths), distance-matrix CSV and report JSON.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::coding::{ContourFn, HeightSeq, LatticePath};
use crate::error::{Error, Result};
use crate::forest::{Forest, UlamHarrisTree};
use crate::invariance::{ExperimentReport, MARGINAL_TIMES};
use crate::realpath::RealPath;
use crate::realtree::FiniteRealTree;

/// Relative tolerance when checking that `t` values form a uniform grid.
const GRID_TOLERANCE: f64 = 1e-9;

fn parse_error(line: usize, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { line, field: field.into(), message: message.into() }
}

fn json_error(e: serde_json::Error) -> Error {
    if e.is_io() {
        return Error::Json(e);
    }
    if e.line() == 0 {
        // validation failures raised after parsing carry no position
        return parse_error(1, "document", e.to_string());
    }
    parse_error(e.line(), format!("column {}", e.column()), e.to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

fn to_compact_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

pub fn tree_to_json(tree: &UlamHarrisTree) -> Result<String> {
    to_compact_json(tree)
}

pub fn tree_from_json(text: &str) -> Result<UlamHarrisTree> {
    from_json(text)
}

pub fn forest_to_json(forest: &Forest) -> Result<String> {
    to_compact_json(forest)
}

/// Accepts a forest object or a single tree object.
pub fn forest_from_json(text: &str) -> Result<Forest> {
    let value: serde_json::Value = from_json(text)?;
    if value.get("child_counts").is_some() {
        return from_json::<UlamHarrisTree>(text).map(Forest::from);
    }
    from_json(text)
}

pub fn report_to_json(report: &ExperimentReport) -> Result<String> {
    to_json(report)
}

pub fn report_from_json(text: &str) -> Result<ExperimentReport> {
    from_json(text)
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => parse_error(line, "record", format!("{kind:?}")),
    }
}

fn write_pairs<A: ToString, B: ToString>(header: [&str; 2], rows: impl IntoIterator<Item = (A, B)>) -> Result<String> {
    let mut w = writer();
    w.write_record(header).map_err(csv_error)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()]).map_err(csv_error)?;
    }
    finish(w)
}

/// Reads a two-column CSV with the given header, returning raw string pairs
/// with their line numbers.
fn read_pairs(text: &str, header: [&str; 2]) -> Result<Vec<(usize, String, String)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = r.records();
    let first = match records.next() {
        None => return Err(parse_error(1, "header", "empty file")),
        Some(rec) => rec.map_err(csv_error)?,
    };
    if first.len() != 2 || first[0].trim() != header[0] || first[1].trim() != header[1] {
        return Err(parse_error(1, "header", format!("expected `{},{}`", header[0], header[1])));
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(parse_error(line, "record", format!("expected 2 fields, found {}", rec.len())));
        }
        out.push((line, rec[0].trim().to_string(), rec[1].trim().to_string()));
    }
    if out.is_empty() {
        return Err(parse_error(2, header[0], "no data rows"));
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| parse_error(line, field, format!("`{raw}`: {e}")))
}

fn parse_indexed<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    read_pairs(text, ["index", "value"])?
        .into_iter()
        .enumerate()
        .map(|(expected, (line, index, value))| {
            let index: usize = parse_field(line, "index", &index)?;
            if index != expected {
                return Err(parse_error(line, "index", format!("expected {expected}, found {index}")));
            }
            parse_field(line, "value", &value)
        })
        .collect()
}

pub fn lattice_path_to_csv(path: &LatticePath) -> Result<String> {
    write_pairs(["index", "value"], path.values().iter().enumerate())
}

pub fn lattice_path_from_csv(text: &str) -> Result<LatticePath> {
    let values = parse_indexed::<i64>(text)?;
    LatticePath::new(values).map_err(|e| match e {
        Error::InvalidPath { index, reason } => parse_error(index + 2, "value", reason),
        e => e,
    })
}

pub fn height_to_csv(h: &HeightSeq) -> Result<String> {
    write_pairs(["index", "value"], h.values().iter().enumerate())
}

pub fn height_from_csv(text: &str) -> Result<HeightSeq> {
    HeightSeq::new(parse_indexed::<u64>(text)?)
}

pub fn real_path_to_csv(path: &RealPath) -> Result<String> {
    write_pairs(["t", "value"], path.values().iter().enumerate().map(|(i, v)| (path.time(i), v)))
}

/// Expects `t` to start at 0 and increase by a constant step.
pub fn real_path_from_csv(text: &str) -> Result<RealPath> {
    let rows = read_pairs(text, ["t", "value"])?;
    let mut times = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, t, v) in &rows {
        times.push(parse_field::<f64>(*line, "t", t)?);
        values.push(parse_field::<f64>(*line, "value", v)?);
    }
    if times[0] != 0.0 {
        return Err(parse_error(rows[0].0, "t", "the first time must be 0"));
    }
    if times.len() == 1 {
        return RealPath::new(1.0, values);
    }
    let step = times[times.len() - 1] / (times.len() - 1) as f64;
    for (i, &t) in times.iter().enumerate() {
        if (t - i as f64 * step).abs() > GRID_TOLERANCE * step.max(t.abs()) {
            return Err(parse_error(rows[i].0, "t", format!("{t} is off the uniform grid of step {step}")));
        }
    }
    RealPath::new(step, values).map_err(|e| parse_error(rows[1].0, "t", e.to_string()))
}

/// Contour values at all half-integer times, header `t,value`.
pub fn contour_to_csv(contour: &ContourFn) -> Result<String> {
    write_pairs(["t", "value"], contour.half_integer_samples())
}

/// Square matrix with a header row and column of sample times.
pub fn distance_matrix_to_csv(tree: &FiniteRealTree) -> Result<String> {
    let mut w = writer();
    let mut header = vec!["t".to_string()];
    header.extend(tree.sample_times.iter().map(f64::to_string));
    w.write_record(&header).map_err(csv_error)?;
    for (t, row) in tree.sample_times.iter().zip(&tree.dist) {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_error)?;
    }
    finish(w)
}

/// One row per `n` with the KS distances at each marginal time.
pub fn report_to_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = writer();
    let mut header: Vec<String> = ["n", "a_n", "k_n", "s_eff", "samples"].map(String::from).to_vec();
    header.extend(MARGINAL_TIMES.iter().map(|t| format!("ks_{t}")));
    header.extend(MARGINAL_TIMES.iter().map(|t| format!("ks_bessel_{t}")));
    header.extend(["sup_hc", "sup_hc_direct", "max_height_increment"].map(String::from));
    w.write_record(&header).map_err(csv_error)?;
    for r in &report.per_n {
        let mut rec = vec![r.n.to_string(), r.a_n.to_string(), r.k_n.to_string(), r.s_eff.to_string(), r.samples.to_string()];
        for map in [&r.ks, &r.ks_bessel] {
            rec.extend(
                MARGINAL_TIMES
                    .iter()
                    .map(|t| map.get(&t.to_string()).map_or(String::new(), f64::to_string)),
            );
        }
        rec.extend([r.sup_hc.to_string(), r.sup_hc_direct.to_string(), r.max_height_increment.to_string()]);
        w.write_record(&rec).map_err(csv_error)?;
    }
    finish(w)
}

pub fn read_file(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)?.read_to_string(&mut s)?;
    Ok(s)
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::File::create(dir.join(name))?.write_all(contents.as_bytes())?;
    Ok(())
}
