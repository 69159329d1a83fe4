use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Output encoding picked from the `--out` extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn for_path(path: Option<&Path>) -> Self {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// CSV with a header row, or a JSON array with the same field order.
/// The header is written even without rows.
pub fn write_rows<T: Serialize>(
    rows: &[T],
    header: &[&str],
    format: Format,
    out: impl Write,
) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes to `path` or, without one, CSV to stdout.
pub fn emit<T: Serialize>(rows: &[T], header: &[&str], path: Option<&Path>) -> Result<()> {
    let format = Format::for_path(path);
    match path {
        Some(p) => write_rows(rows, header, format, File::create(p)?),
        None => write_rows(rows, header, format, io::stdout().lock()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: usize,
        b: Option<f64>,
    }

    #[test]
    fn csv_with_header_and_empty_option() {
        let mut buf = Vec::new();
        write_rows(
            &[Row { a: 1, b: None }, Row { a: 2, b: Some(0.5) }],
            &["a", "b"],
            Format::Csv,
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\n2,0.5\n");
    }

    #[test]
    fn empty_rows_keep_header() {
        let mut buf = Vec::new();
        write_rows::<Row>(&[], &["a", "b"], Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n");
    }

    #[test]
    fn json_mirrors_fields() {
        let mut buf = Vec::new();
        write_rows(
            &[Row { a: 1, b: None }],
            &["a", "b"],
            Format::Json,
            &mut buf,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["a"], 1);
        assert!(v[0]["b"].is_null());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::for_path(Some(Path::new("x.JSON"))), Format::Json);
        assert_eq!(Format::for_path(Some(Path::new("x.csv"))), Format::Csv);
        assert_eq!(Format::for_path(None), Format::Csv);
    }
}
