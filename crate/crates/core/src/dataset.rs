//! Row-major numeric matrix with optional class labels.

use crate::error::{Error, Result};

/// Which CSV column, if any, holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassPolicy {
    /// Last column is the label when its first data cell is not numeric.
    #[default]
    Auto,
    LastColumn,
    None,
    /// Zero-based column index.
    Index(usize),
}

/// `rows × cols` numeric cells plus per-row identity and labels.
///
/// `row_ids` start as `0..rows` and follow their row through every
/// permutation, so a released dataset still knows where each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    row_ids: Vec<u64>,
    labels: Option<Vec<String>>,
    column_names: Option<Vec<String>>,
    label_name: Option<String>,
    label_position: Option<usize>,
}

impl Dataset {
    /// Builds a dataset from row-major `values`. Every cell must be finite.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "values",
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                column: pos % cols.max(1),
                value: values[pos],
            });
        }
        Ok(Dataset {
            rows,
            cols,
            values,
            row_ids: (0..rows as u64).collect(),
            labels: None,
            column_names: None,
            label_name: None,
            label_position: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Arity {
                    row: i,
                    expected: cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Dataset::new(rows.len(), cols, values)
    }

    /// Builds a dataset from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut values = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    what: "column",
                    expected: rows,
                    got: c.len(),
                });
            }
            for (i, &v) in c.iter().enumerate() {
                values[i * cols + j] = v;
            }
        }
        Dataset::new(rows, cols, values)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::LengthMismatch {
                what: "labels",
                expected: self.rows,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(Error::LengthMismatch {
                what: "column names",
                expected: self.cols,
                got: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    /// Header and position of the label column in the CSV layout.
    pub fn with_label_layout(mut self, name: Option<String>, position: Option<usize>) -> Self {
        self.label_name = name;
        self.label_position = position;
        self
    }

    pub fn with_row_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.rows {
            return Err(Error::LengthMismatch {
                what: "row ids",
                expected: self.rows,
                got: ids.len(),
            });
        }
        self.row_ids = ids;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, column: &[f64]) {
        debug_assert_eq!(column.len(), self.rows);
        for (i, &v) in column.iter().enumerate() {
            self.values[i * self.cols + j] = v;
        }
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_name.as_deref()
    }

    pub fn label_position(&self) -> Option<usize> {
        self.label_position
    }

    /// Copy of the rows at `indices`, in that order, labels and ids included.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            rows: indices.len(),
            cols: self.cols,
            values,
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
            column_names: self.column_names.clone(),
            label_name: self.label_name.clone(),
            label_position: self.label_position,
        }
    }

    /// Contiguous row range `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            rows: end - start,
            cols: self.cols,
            values: self.values[start * self.cols..end * self.cols].to_vec(),
            row_ids: self.row_ids[start..end].to_vec(),
            labels: self.labels.as_ref().map(|l| l[start..end].to_vec()),
            column_names: self.column_names.clone(),
            label_name: self.label_name.clone(),
            label_position: self.label_position,
        }
    }

    /// Row-wise concatenation. Schema metadata comes from the first part.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let Some(first) = parts.first() else {
            return Dataset::new(0, 0, Vec::new());
        };
        let cols = first.cols;
        let has_labels = first.labels.is_some();
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let mut values = Vec::with_capacity(rows * cols);
        let mut row_ids = Vec::with_capacity(rows);
        let mut labels = has_labels.then(|| Vec::with_capacity(rows));
        for (k, p) in parts.iter().enumerate() {
            if p.cols != cols {
                return Err(Error::Arity {
                    row: k,
                    expected: cols,
                    got: p.cols,
                });
            }
            if p.labels.is_some() != has_labels {
                return Err(Error::Shape("mixing labelled and unlabelled parts".into()));
            }
            values.extend_from_slice(&p.values);
            row_ids.extend_from_slice(&p.row_ids);
            if let (Some(dst), Some(src)) = (labels.as_mut(), p.labels.as_ref()) {
                dst.extend(src.iter().cloned());
            }
        }
        Ok(Dataset {
            rows,
            cols,
            values,
            row_ids,
            labels,
            column_names: first.column_names.clone(),
            label_name: first.label_name.clone(),
            label_position: first.label_position,
        })
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
