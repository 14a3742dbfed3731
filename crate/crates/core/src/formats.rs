//! Shared CSV/JSON plumbing. Every artifact is written to a temporary file
//! in the destination directory and renamed into place.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Shortest decimal representation that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    if x == 0.0 {
        // normalize -0
        "0".to_string()
    } else {
        format!("{x}")
    }
}

pub fn parse_float(path: &Path, field: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse()
        .map_err(|_| Error::malformed(path, format!("{field} `{raw}` is not a number")))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::malformed(path, e.to_string());
    writer.write_record(header).map_err(map)?;
    for row in rows {
        writer.write_record(&row).map_err(map)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Error::malformed(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::malformed(path, e.to_string()))
}

/// Opens a CSV file and checks its header exactly.
pub fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(Error::malformed(
            path,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    Ok(reader)
}

pub fn records(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    reader(path, header)?
        .records()
        .map(|r| r.map_err(|e| Error::malformed(path, e.to_string())))
        .collect()
}

/// Writes a square matrix as `ticker,<tickers...>` rows.
pub fn write_dense_matrix(path: &Path, tickers: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut header = vec!["ticker"];
    header.extend(tickers.iter().map(String::as_str));
    let rows = tickers.iter().enumerate().map(|(i, t)| {
        let mut row = vec![t.clone()];
        row.extend((0..tickers.len()).map(|j| float(m[(i, j)])));
        row
    });
    write_rows(path, &header, rows)
}

pub fn read_dense_matrix(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .clone();
    if header.get(0) != Some("ticker") {
        return Err(Error::malformed(
            path,
            "dense matrix header must start with `ticker`",
        ));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = tickers.len();
    let mut m = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        if i >= n || record.len() != n + 1 || record[0] != tickers[i] {
            return Err(Error::malformed(
                path,
                format!("row {} does not match header", i + 1),
            ));
        }
        for j in 0..n {
            m[(i, j)] = parse_float(path, "entry", &record[j + 1])?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::malformed(
            path,
            format!("{rows} rows for {n} tickers"),
        ));
    }
    Ok((tickers, m))
}
