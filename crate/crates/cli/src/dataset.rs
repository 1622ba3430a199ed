//! CSV ingestion: rectangular tables of finite reals, decimal point,
//! optional single header row, optional label column.

use std::path::Path;

use kme_core::DataMatrixF64;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub matrix: DataMatrixF64,
    pub labels: Option<Vec<f64>>,
}

/// Parses a comma-separated file. Cells must all be finite numbers; any
/// ragged or non-numeric row is rejected with its 1-based file line number.
pub fn load_csv(path: &Path, has_header: bool, label_col: Option<usize>) -> CliResult<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());

    let mut width: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut seen_header = !has_header;

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if cells.len() != w => {
                return Err(CliError::Runtime(format!(
                    "{}: ragged row at line {lineno}: expected {w} fields, got {}",
                    path.display(),
                    cells.len()
                )));
            }
            _ => {}
        }
        if !seen_header {
            seen_header = true;
            continue;
        }
        let mut row = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::Runtime(format!(
                    "{}: line {lineno}, column {}: cannot parse `{}` as a number",
                    path.display(),
                    c + 1,
                    cell.trim()
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Runtime(format!(
                    "{}: line {lineno}, column {}: non-finite value",
                    path.display(),
                    c + 1
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }

    let width = width.unwrap_or(0);
    if rows.is_empty() {
        return Err(CliError::Runtime(format!("{}: empty dataset", path.display())));
    }
    if let Some(lc) = label_col {
        if lc >= width {
            return Err(CliError::Runtime(format!(
                "{}: label column {lc} out of range for {width} columns",
                path.display()
            )));
        }
        if width < 2 {
            return Err(CliError::Runtime(format!(
                "{}: splitting out the label column leaves no features",
                path.display()
            )));
        }
        for row in &mut rows {
            labels.push(row.remove(lc));
        }
    }

    let matrix = DataMatrixF64::from_rows(&rows)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(Dataset {
        name,
        matrix,
        labels: if label_col.is_some() { Some(labels) } else { None },
    })
}
