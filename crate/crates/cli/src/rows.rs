//! Result rows and their CSV form.
//!
//! Header: `method,alg,T,precision,metric,value,seed,threads,devices`.
//! One metric per row. `threads` is the pooled worker count for measured
//! metrics and the simulated thread count for simulated ones. Only
//! `wall_median_s` and `speedup` rows depend on timing.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    WallMedianS,
    TimeUnits,
    WorkUnits,
    SpanLaunches,
    MaxRelErr,
    Speedup,
    SimSpeedup,
}

impl Metric {
    /// Whether the value comes from a wall clock.
    pub fn is_timing(&self) -> bool {
        matches!(self, Metric::WallMedianS | Metric::Speedup)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub alg: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub precision: String,
    pub metric: Metric,
    pub value: f64,
    pub seed: u64,
    pub threads: usize,
    pub devices: usize,
}

pub const HEADER: &str = "method,alg,T,precision,metric,value,seed,threads,devices";

/// Writes rows with a header; the header is written even with no rows.
pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_csv_atomic(path: &Path, rows: &[ResultRow]) -> Result<(), BenchError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_rows(&mut tmp, rows)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| BenchError::Io(e.error))?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != HEADER {
        return Err(BenchError::Usage(format!("unexpected CSV header `{}`", header.join(","))));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: Metric, value: f64) -> ResultRow {
        ResultRow {
            method: "PKF".into(),
            alg: "blelloch".into(),
            t: 64,
            precision: "f64".into(),
            metric,
            value,
            seed: 3,
            threads: 4,
            devices: 1,
        }
    }

    #[test]
    fn header_only_when_empty() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn round_trip() {
        let rows = vec![row(Metric::MaxRelErr, 1.25e-9), row(Metric::TimeUnits, 123456.0), row(Metric::WallMedianS, 0.1)];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("PKF,blelloch,64,f64,max_rel_err,"));
        assert!(!text.contains('\r'));
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "old").unwrap();
        write_csv_atomic(&path, &[row(Metric::SpanLaunches, 7.0)]).unwrap();
        let back = read_rows(std::fs::File::open(&path).unwrap()).unwrap();
        assert_eq!(back, vec![row(Metric::SpanLaunches, 7.0)]);
    }
}
