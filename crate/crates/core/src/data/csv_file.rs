use std::path::Path;

use super::{Dataset, Task};
use crate::nn::Matrix;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Min-max normalize the feature columns.
    pub normalize: bool,
    /// Fill empty cells with their column mean instead of rejecting the row.
    pub mean_pad: bool,
}

/// Load a headed, comma-separated numeric table as a regression dataset.
///
/// Columns named in `target_columns` become targets (in that order); every
/// other column is a feature. Errors name the offending line (the header is
/// line 1).
pub fn load_csv<T: Scalar>(path: &Path, target_columns: &[&str], options: CsvOptions) -> Result<Dataset<T>> {
    let csv_err = |message: String| Error::Csv { path: path.to_path_buf(), message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => csv_err(format!("{other:?}")),
    })?;
    let headers: Vec<String> = reader.headers().map_err(|e| csv_err(e.to_string()))?.iter().map(str::to_owned).collect();
    if target_columns.is_empty() {
        return Err(csv_err("no target columns named".into()));
    }
    let mut target_idx = Vec::with_capacity(target_columns.len());
    for name in target_columns {
        let i = headers.iter().position(|h| h == name).ok_or_else(|| csv_err(format!("no column named {name:?}")))?;
        target_idx.push(i);
    }
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|i| !target_idx.contains(i)).collect();
    if feature_idx.is_empty() {
        return Err(csv_err("every column is a target; no features left".into()));
    }

    let mut cells: Vec<Vec<Option<T>>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| csv_err(format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(csv_err(format!("line {line}: {} fields, header has {}", record.len(), headers.len())));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (c, field) in record.iter().enumerate() {
            if field.is_empty() {
                if !options.mean_pad {
                    return Err(csv_err(format!("line {line}: column {:?} is empty", headers[c])));
                }
                row.push(None);
                continue;
            }
            match field.parse::<T>() {
                Ok(v) if v.is_finite() => row.push(Some(v)),
                _ => return Err(csv_err(format!("line {line}: column {:?} is not a number: {field:?}", headers[c]))),
            }
        }
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(csv_err("no data rows".into()));
    }

    if options.mean_pad {
        for c in 0..headers.len() {
            let present: Vec<T> = cells.iter().filter_map(|row| row[c]).collect();
            if present.is_empty() {
                return Err(csv_err(format!("column {:?} has no values to pad from", headers[c])));
            }
            let fill = crate::stats::mean(&present);
            cells.iter_mut().for_each(|row| {
                row[c].get_or_insert(fill);
            });
        }
    }
    let value = |r: usize, c: usize| cells[r][c].expect("empty cells rejected or padded");
    let n = cells.len();
    let features = Matrix::from_fn(n, feature_idx.len(), |r, j| value(r, feature_idx[j]));
    let targets = Matrix::from_fn(n, target_idx.len(), |r, j| value(r, target_idx[j]));
    let mut ds = Dataset::new(features, targets, Task::Regression)?;
    if options.normalize {
        ds.normalize();
    }
    Ok(ds)
}
