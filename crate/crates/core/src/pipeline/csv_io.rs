//! Cohort CSV files.
//!
//! Header `patient_id,sex,age,g0,g30,g60,g90,g120[,seq]` (any column order),
//! UTF-8, comma separated, decimal point. `sex` is `F`, `M` or empty, `age`
//! and `seq` are optional integers.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result, RowError};
use crate::model::{check_concentration, OgttRecord, Sex};

pub const REQUIRED_COLUMNS: [&str; 8] = [
    "patient_id",
    "sex",
    "age",
    "g0",
    "g30",
    "g60",
    "g90",
    "g120",
];
const GLUCOSE_COLUMNS: [&str; 5] = ["g0", "g30", "g60", "g90", "g120"];

/// Parsed rows plus the rows that were rejected.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<OgttRecord>,
    /// `row` is the line number in the file (the header is line 1).
    pub errors: Vec<RowError>,
}

pub fn ingest_csv(path: impl AsRef<Path>, strict: bool) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, path, strict)
}

pub fn ingest_reader(reader: impl Read, path: &Path, strict: bool) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let headers = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 8];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = col(name).ok_or_else(|| schema(format!("missing column `{name}`")))?;
    }
    let seq_idx = col("seq");

    let mut out = Ingested::default();
    for result in rdr.records() {
        let row = match result {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                let err = RowError {
                    row: line,
                    field: String::new(),
                    message: e.to_string(),
                };
                if strict {
                    return Err(Error::Rows(vec![err]));
                }
                out.errors.push(err);
                continue;
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        match parse_row(&row, &idx, seq_idx, line) {
            Ok(record) => out.records.push(record),
            Err(err) if strict => return Err(Error::Rows(vec![err])),
            Err(err) => out.errors.push(err),
        }
    }
    Ok(out)
}

fn parse_row(
    row: &csv::StringRecord,
    idx: &[usize; 8],
    seq_idx: Option<usize>,
    line: usize,
) -> std::result::Result<OgttRecord, RowError> {
    let field = |i: usize| row.get(i).unwrap_or("");
    let err = |name: &str, message: String| RowError {
        row: line,
        field: name.to_string(),
        message,
    };
    let patient_id = field(idx[0]).to_string();
    if patient_id.is_empty() {
        return Err(err("patient_id", "empty patient id".into()));
    }
    let sex: Sex = field(idx[1])
        .parse()
        .map_err(|e: Error| err("sex", e.to_string()))?;
    let age = match field(idx[2]) {
        "" => None,
        s => Some(
            s.parse::<u32>()
                .map_err(|_| err("age", format!("`{s}` is not a non-negative integer")))?,
        ),
    };
    let mut g = [0.0; 5];
    for (k, name) in GLUCOSE_COLUMNS.iter().enumerate() {
        let s = field(idx[3 + k]);
        let v: f64 = s
            .parse()
            .map_err(|_| err(name, format!("`{s}` is not a number")))?;
        check_concentration(v).map_err(|m| err(name, m))?;
        g[k] = v;
    }
    let seq = match seq_idx.map(field) {
        None | Some("") => None,
        Some(s) => Some(
            s.parse::<i64>()
                .map_err(|_| err("seq", format!("`{s}` is not an integer")))?,
        ),
    };
    Ok(OgttRecord {
        patient_id,
        sex,
        age,
        g,
        seq,
    })
}

/// Writes records in the ingest schema, always including the `seq` column.
/// Values are printed in shortest round-trip form, so ingesting the output
/// gives back identical records.
pub fn write_csv(records: &[OgttRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    header.push("seq");
    let csv_err = |e: csv::Error| Error::Pipeline(format!("csv write failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.patient_id.clone(),
            r.sex.as_str().to_string(),
            r.age.map(|a| a.to_string()).unwrap_or_default(),
        ];
        row.extend(r.g.iter().map(|v| v.to_string()));
        row.push(r.seq.map(|s| s.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Pipeline(format!("csv write failed: {e}")))?;
    Ok(())
}

pub fn records_to_csv_string(records: &[OgttRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}
