//! Feature-cloud CSV files: a header `f0,f1,…` then one row per sample.

use std::path::Path;

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::parse(path, line, e.to_string())
}

/// Reads an `N×F` feature matrix. Row numbers in errors count the header as row 1.
pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, 0, format!("{other:?}")),
        })?;
    let width = reader.headers().map_err(|e| csv_error(path, e))?.len();
    if width == 0 {
        return Err(Error::parse(path, 1, "header has no columns"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != width {
            return Err(Error::parse(
                path,
                row,
                format!("row {row} has {} fields, header has {width}", record.len()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, row, format!("row {row}: {field:?} is not a number")))?;
            data.push(v);
        }
        rows += 1;
    }
    Tensor::new([rows, width], data)
}

fn write_matrix(path: &Path, header: &[String], t: &Tensor) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    let width = header.len();
    for row in t.data().chunks(width) {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_feature_csv(path: impl AsRef<Path>, features: &Tensor) -> Result<()> {
    if features.rank() != 2 {
        return Err(Error::dim("write_feature_csv", format!("expected N×F, got {:?}", features.shape())));
    }
    let header: Vec<String> = (0..features.shape()[1]).map(|i| format!("f{i}")).collect();
    write_matrix(path.as_ref(), &header, features)
}

/// Writes `N×2` points under an `x,y` header.
pub fn write_points_csv(path: impl AsRef<Path>, points: &Tensor) -> Result<()> {
    if points.rank() != 2 || points.shape()[1] != 2 {
        return Err(Error::dim("write_points_csv", format!("expected N×2, got {:?}", points.shape())));
    }
    write_matrix(path.as_ref(), &["x".to_string(), "y".to_string()], points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_back_written_features() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let t = Tensor::new([3, 2], vec![0.1, 2.0, -3.5, 4.0, 1e-9, 6.0]).unwrap();
        write_feature_csv(&p, &t).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("f0,f1\n"));
        assert_eq!(read_feature_csv(&p).unwrap(), t);
    }

    #[test]
    fn ragged_row_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, "f0,f1\n1,2\n3\n").unwrap();
        let err = read_feature_csv(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
