//! CSV ingestion and output: data files (header row, a `group` column, numeric
//! coordinates) and contrast grids (numeric, no header).

use std::io::Write;
use std::path::Path;

use mcv_core::{GroupedData64, Matrix64, Sample64};

use crate::error::{CliError, CliResult, Context};

pub const GROUP_COLUMN: &str = "group";

/// A parsed data file in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub columns: Vec<String>,
    pub groups: Vec<String>,
    pub values: Matrix64,
}

impl DataFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
        let header = reader.headers().map_err(csv_err)?.clone();
        let group_col = header
            .iter()
            .position(|h| h == GROUP_COLUMN)
            .ok_or_else(|| CliError::input(format!("{}: missing `{GROUP_COLUMN}` column", path.display())))?;
        let columns: Vec<String> =
            header.iter().enumerate().filter(|&(i, _)| i != group_col).map(|(_, h)| h.to_string()).collect();
        if columns.is_empty() {
            return Err(CliError::input(format!("{}: no numeric columns", path.display())));
        }
        let mut groups = Vec::new();
        let mut values = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let line = r + 2;
            for (i, field) in record.iter().enumerate() {
                if i == group_col {
                    if field.is_empty() {
                        return Err(CliError::input(format!("{}:{line}: empty group label", path.display())));
                    }
                    groups.push(field.to_string());
                    continue;
                }
                let v: f64 = field.parse().map_err(|_| {
                    CliError::input(format!(
                        "{}:{line}: column `{}`: `{field}` is not a number",
                        path.display(),
                        &header[i]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(CliError::input(format!(
                        "{}:{line}: column `{}` is not finite",
                        path.display(),
                        &header[i]
                    )));
                }
                values.push(v);
            }
        }
        if groups.is_empty() {
            return Err(CliError::input(format!("{}: no observations", path.display())));
        }
        let values = Matrix64::from_vec(groups.len(), columns.len(), values).context(|| path.display().to_string())?;
        Ok(Self { columns, groups, values })
    }

    pub fn grouped(&self) -> CliResult<GroupedData64> {
        GroupedData64::from_labelled_rows(&self.values, &self.groups).context(|| "grouping observations".into())
    }

    /// Samples per label in order of first appearance; accepts a single group.
    pub fn samples(&self) -> Vec<(String, Sample64)> {
        let mut order: Vec<(String, Vec<f64>)> = Vec::new();
        for (i, g) in self.groups.iter().enumerate() {
            let slot = match order.iter().position(|(l, _)| l == g) {
                Some(p) => p,
                None => {
                    order.push((g.clone(), Vec::new()));
                    order.len() - 1
                }
            };
            order[slot].1.extend_from_slice(self.values.row(i));
        }
        let d = self.values.cols();
        order
            .into_iter()
            .map(|(l, v)| {
                let m = Matrix64::from_vec(v.len() / d, d, v).expect("rows share the file's column count");
                (l, Sample64::new(m))
            })
            .collect()
    }

    pub fn write<W: Write>(&self, out: W) -> CliResult<()> {
        let to_err = |e: csv::Error| CliError::input(format!("writing CSV: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![GROUP_COLUMN.to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(to_err)?;
        for (i, g) in self.groups.iter().enumerate() {
            let mut rec = vec![g.clone()];
            rec.extend(self.values.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush().map_err(|e| CliError::input(format!("writing CSV: {e}")))
    }
}

/// Reads a headerless numeric grid, one contrast per row.
pub fn read_contrast_grid(path: &Path) -> CliResult<Matrix64> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| CliError::input(format!("{}:{}: `{f}` is not a number", path.display(), r + 1)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input(format!("{}: empty contrast matrix", path.display())));
    }
    Matrix64::from_rows(&rows).context(|| path.display().to_string())
}
