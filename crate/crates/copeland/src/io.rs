//! File formats.
//!
//! - matrix CSV: `n` rows of `n` probabilities, no header
//! - comparisons CSV: header `item_a,item_b,winner`, one comparison per row
//! - counts CSV: header `item_a,item_b,comparisons,wins_a`, one pair per row
//! - truth file: one item id per line, best first
//! - position sets CSV: one sorted set of one-based positions per row

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use copeland_core::model::ComparisonMatrix;
use copeland_core::sample::{ingest_comparisons, ComparisonRecord, ObservationSet};

use crate::error::{Error, Result};

/// Refuse to expand more comparisons than this into per-comparison rows.
pub const MAX_EXPANDED_RECORDS: u64 = 100_000_000;

pub const COMPARISONS_HEADER: [&str; 3] = ["item_a", "item_b", "winner"];
pub const COUNTS_HEADER: [&str; 4] = ["item_a", "item_b", "comparisons", "wins_a"];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::read(path, e))
}

fn csv_reader<R: Read>(input: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(headers).trim(csv::Trim::All).comment(Some(b'#')).from_reader(input)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::data(format!("line {line}: cannot parse `{raw}`")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Whitespace-separated numbers, one or more per line; `#` starts a comment.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (no, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| Error::read(path, e))?;
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            out.push(
                tok.parse().map_err(|_| Error::data(format!("{}:{}: cannot parse `{tok}`", path.display(), no + 1)))?,
            );
        }
    }
    Ok(out)
}

pub fn parse_matrix<R: Read>(input: R) -> Result<ComparisonMatrix> {
    let mut grid = Vec::new();
    for rec in csv_reader(input, false).records() {
        let rec = rec.map_err(|e| Error::data(e.to_string()))?;
        let line = line_of(&rec);
        grid.push((0..rec.len()).map(|i| field(&rec, i, line)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(ComparisonMatrix::new(&grid)?)
}

pub fn read_matrix(path: &Path) -> Result<ComparisonMatrix> {
    parse_matrix(open(path)?).map_err(|e| e.context(path.display()))
}

pub fn write_matrix<W: Write>(m: &ComparisonMatrix, out: &mut W) -> std::io::Result<()> {
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_position_sets(path: &Path) -> Result<Vec<Vec<usize>>> {
    let mut sets = Vec::new();
    for rec in csv_reader(open(path)?, false).records() {
        let rec = rec.map_err(|e| Error::read(path, e))?;
        let line = line_of(&rec);
        let set = (0..rec.len())
            .map(|i| field(&rec, i, line))
            .collect::<Result<Vec<usize>>>()
            .map_err(|e| e.context(path.display()))?;
        sets.push(set);
    }
    Ok(sets)
}

fn check_header(found: &csv::StringRecord, want: &[&str]) -> bool {
    found.len() == want.len() && found.iter().zip(want).all(|(a, b)| a == *b)
}

fn parse_records<R: Read>(reader: &mut csv::Reader<R>) -> Result<Vec<ComparisonRecord>> {
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::data(e.to_string()))?;
            Ok(ComparisonRecord::new(&rec[0], &rec[1], &rec[2]))
        })
        .collect()
}

/// Pair counts keyed by identifiers, items indexed by first appearance.
fn parse_counts<R: Read>(reader: &mut csv::Reader<R>) -> Result<(ObservationSet, Vec<String>)> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut intern = |name: &str| {
        *index.entry(name.to_string()).or_insert_with(|| {
            ids.push(name.to_string());
            ids.len() - 1
        })
    };
    let mut tallies: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::data(e.to_string()))?;
        let line = line_of(&rec);
        let (a, b) = (intern(&rec[0]), intern(&rec[1]));
        if a == b {
            return Err(Error::data(format!("line {line}: {} compared with itself", &rec[0])));
        }
        let c: u64 = field(&rec, 2, line)?;
        let wins_a: u64 = field(&rec, 3, line)?;
        if wins_a > c {
            return Err(Error::data(format!("line {line}: {wins_a} wins in {c} comparisons")));
        }
        let (key, low_wins) = if a < b { ((a, b), wins_a) } else { ((b, a), c - wins_a) };
        let t = tallies.entry(key).or_default();
        t.0 += c;
        t.1 += low_wins;
    }
    if ids.len() < 2 {
        return Err(Error::data("fewer than two items"));
    }
    let r = tallies.values().map(|t| t.0).max().unwrap_or(0);
    let rows = tallies.into_iter().map(|((i, j), (c, w))| (i, j, c, w));
    Ok((ObservationSet::from_pair_counts(ids.len(), r, None, rows)?, ids))
}

/// Read either a comparisons CSV or a counts CSV, chosen by header.
///
/// Returns the observations and the identifier of each item index.
pub fn parse_observations<R: Read>(input: R) -> Result<(ObservationSet, Vec<String>)> {
    let mut reader = csv_reader(input, true);
    let header = reader.headers().map_err(|e| Error::data(e.to_string()))?.clone();
    if check_header(&header, &COMPARISONS_HEADER) {
        let records = parse_records(&mut reader)?;
        Ok(ingest_comparisons(&records)?)
    } else if check_header(&header, &COUNTS_HEADER) {
        parse_counts(&mut reader)
    } else {
        Err(Error::data(format!(
            "unrecognised header `{}`; expected `{}` or `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            COMPARISONS_HEADER.join(","),
            COUNTS_HEADER.join(",")
        )))
    }
}

pub fn read_observations(path: &Path) -> Result<(ObservationSet, Vec<String>)> {
    parse_observations(open(path)?).map_err(|e| e.context(path.display()))
}

/// Write every pair `i < j` (zero counts included, so `n` survives a round
/// trip). `ids` defaults to the item indices.
pub fn write_counts<W: Write>(obs: &ObservationSet, ids: Option<&[String]>, out: W) -> Result<()> {
    let name = |i: usize| ids.map_or_else(|| i.to_string(), |ids| ids[i].clone());
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::runtime(e.to_string());
    w.write_record(COUNTS_HEADER).map_err(io_err)?;
    for (i, j, c) in obs.iter_pairs() {
        w.write_record([name(i), name(j), c.comparisons.to_string(), c.wins_low.to_string()]).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::runtime(e.to_string()))
}

/// Expand counts into one row per comparison.
pub fn write_comparisons<W: Write>(obs: &ObservationSet, ids: Option<&[String]>, out: W) -> Result<()> {
    if obs.total_comparisons() > MAX_EXPANDED_RECORDS {
        return Err(Error::usage(format!(
            "{} comparisons exceed the {MAX_EXPANDED_RECORDS} row limit; use the counts format",
            obs.total_comparisons()
        )));
    }
    let name = |i: usize| ids.map_or_else(|| i.to_string(), |ids| ids[i].clone());
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::runtime(e.to_string());
    w.write_record(COMPARISONS_HEADER).map_err(io_err)?;
    for (i, j, c) in obs.iter_pairs() {
        let (a, b) = (name(i), name(j));
        for _ in 0..c.wins_low {
            w.write_record([&a, &b, &a]).map_err(io_err)?;
        }
        for _ in 0..c.wins_high() {
            w.write_record([&a, &b, &b]).map_err(io_err)?;
        }
    }
    w.flush().map_err(|e| Error::runtime(e.to_string()))
}

/// Item ids in rank order, best first. Blank lines and `#` comments skipped.
pub fn parse_truth<R: Read>(input: R) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    let mut seen = BTreeSet::new();
    for (no, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::data(e.to_string()))?;
        let id = line.split('#').next().unwrap_or("").trim();
        if id.is_empty() {
            continue;
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::data(format!("line {}: item {id} listed twice", no + 1)));
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}

pub fn read_truth(path: &Path) -> Result<Vec<String>> {
    parse_truth(open(path)?).map_err(|e| e.context(path.display()))
}

/// Create `path` for writing, mapping failures to runtime errors.
pub fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path).map(std::io::BufWriter::new).map_err(|e| Error::write(path, e))
}
