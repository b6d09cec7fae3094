//! CSV ingestion and emission.
//!
//! Numbers are written with a fixed number of significant digits and always
//! with `.` as the decimal separator. The class column, when present, is
//! written back at the position it was read from.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::dataset::{ClassPolicy, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub delimiter: u8,
    pub has_header: bool,
    pub class_policy: ClassPolicy,
    /// Significant digits per emitted number.
    pub precision: usize,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            delimiter: b',',
            has_header: true,
            class_policy: ClassPolicy::Auto,
            precision: 10,
        }
    }
}

impl CsvSchema {
    pub fn with_class_policy(mut self, policy: ClassPolicy) -> Self {
        self.class_policy = policy;
        self
    }

    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Incremental reader: yields the CSV in row chunks, so a stream never holds
/// more than one chunk in memory.
pub struct CsvRowReader<R: Read> {
    inner: csv::Reader<R>,
    schema: CsvSchema,
    headers: Option<Vec<String>>,
    width: Option<usize>,
    label_col: Option<usize>,
    record: csv::StringRecord,
    rows_read: usize,
}

impl<R: Read> CsvRowReader<R> {
    pub fn new(reader: R, schema: CsvSchema) -> Result<Self> {
        let mut inner = csv::ReaderBuilder::new()
            .delimiter(schema.delimiter)
            .has_headers(schema.has_header)
            .flexible(true)
            .from_reader(reader);
        let headers = if schema.has_header {
            Some(inner.headers()?.iter().map(str::to_owned).collect())
        } else {
            None
        };
        Ok(CsvRowReader {
            inner,
            schema,
            headers,
            width: None,
            label_col: None,
            record: csv::StringRecord::new(),
            rows_read: 0,
        })
    }

    pub fn rows_read(&self) -> usize {
        self.rows_read
    }

    fn line(&self) -> u64 {
        self.record.position().map_or(0, |p| p.line())
    }

    fn settle_layout(&mut self) -> Result<()> {
        let width = self
            .headers
            .as_ref()
            .map_or(self.record.len(), Vec::len)
            .max(self.record.len());
        let label_col = match self.schema.class_policy {
            ClassPolicy::None => None,
            ClassPolicy::LastColumn => Some(width - 1),
            ClassPolicy::Index(i) if i < width => Some(i),
            ClassPolicy::Index(i) => {
                return Err(Error::Parse {
                    line: self.line(),
                    column: i + 1,
                    message: format!("class column {} beyond {width} fields", i + 1),
                })
            }
            ClassPolicy::Auto => {
                let last = self.record.get(width - 1).unwrap_or("");
                (width > 1 && parse_cell(last).is_none()).then_some(width - 1)
            }
        };
        self.width = Some(width);
        self.label_col = label_col;
        Ok(())
    }

    /// Reads up to `max_rows` rows; `None` at end of input.
    pub fn next_chunk(&mut self, max_rows: usize) -> Result<Option<Dataset>> {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut n = 0;
        while n < max_rows && self.inner.read_record(&mut self.record)? {
            if self.width.is_none() {
                self.settle_layout()?;
            }
            let width = self.width.unwrap();
            if self.record.len() != width {
                return Err(Error::Parse {
                    line: self.line(),
                    column: self.record.len().min(width) + 1,
                    message: format!("expected {width} fields, got {}", self.record.len()),
                });
            }
            for (j, cell) in self.record.iter().enumerate() {
                if Some(j) == self.label_col {
                    labels.push(cell.to_owned());
                    continue;
                }
                match parse_cell(cell) {
                    Some(v) => values.push(v),
                    None => {
                        return Err(Error::Parse {
                            line: self.line(),
                            column: j + 1,
                            message: format!("not a finite number: {cell:?}"),
                        })
                    }
                }
            }
            n += 1;
        }
        if n == 0 {
            return Ok(None);
        }
        self.rows_read += n;
        let width = self.width.unwrap();
        let cols = width - usize::from(self.label_col.is_some());
        let mut d = Dataset::new(n, cols, values)?;
        let first_id = (self.rows_read - n) as u64;
        d = d.with_row_ids((first_id..first_id + n as u64).collect())?;
        if self.label_col.is_some() {
            d = d.with_labels(labels)?;
        }
        if let Some(h) = &self.headers {
            let names: Vec<String> = h
                .iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != self.label_col)
                .map(|(_, s)| s.clone())
                .collect();
            if names.len() == cols {
                d = d.with_column_names(names)?;
            }
        }
        let label_name = self
            .label_col
            .and_then(|j| self.headers.as_ref().and_then(|h| h.get(j).cloned()));
        Ok(Some(d.with_label_layout(label_name, self.label_col)))
    }
}

/// Reads a whole CSV into a dataset.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rows = CsvRowReader::new(reader, schema.clone())?;
    rows.next_chunk(usize::MAX)?.ok_or(Error::EmptyInput)
}

pub fn read_csv_path(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    read_csv(BufReader::new(File::open(path)?), schema)
}

/// `v` with `sig` significant digits, plain decimal where reasonable.
pub fn format_number(v: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", sig - 1, v);
        match s.split_once('e') {
            Some((m, e)) if m.contains('.') => {
                format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.'))
            }
            _ => s,
        }
    }
}

/// Writes one header and then any number of row blocks.
pub struct CsvBlockWriter<W: Write> {
    inner: csv::Writer<W>,
    schema: CsvSchema,
    header_done: bool,
}

impl<W: Write> CsvBlockWriter<W> {
    pub fn new(writer: W, schema: CsvSchema) -> Self {
        let inner = csv::WriterBuilder::new()
            .delimiter(schema.delimiter)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        CsvBlockWriter {
            inner,
            schema,
            header_done: false,
        }
    }

    fn label_at(d: &Dataset) -> Option<usize> {
        d.labels()
            .map(|_| d.label_position().unwrap_or(d.cols()).min(d.cols()))
    }

    fn write_header(&mut self, d: &Dataset) -> Result<()> {
        let mut header: Vec<String> = match d.column_names() {
            Some(n) => n.to_vec(),
            None => (1..=d.cols()).map(|j| format!("attr{j}")).collect(),
        };
        if let Some(pos) = Self::label_at(d) {
            header.insert(pos, d.label_name().unwrap_or("class").to_owned());
        }
        self.inner.write_record(&header)?;
        Ok(())
    }

    pub fn write_block(&mut self, d: &Dataset) -> Result<()> {
        if !self.header_done {
            if self.schema.has_header {
                self.write_header(d)?;
            }
            self.header_done = true;
        }
        let label_at = Self::label_at(d);
        let mut rec: Vec<String> = Vec::with_capacity(d.cols() + 1);
        for i in 0..d.rows() {
            rec.clear();
            rec.extend(d.row(i).iter().map(|&v| format_number(v, self.schema.precision)));
            if let (Some(pos), Some(labels)) = (label_at, d.labels()) {
                rec.insert(pos, labels[i].clone());
            }
            self.inner.write_record(&rec)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn write_csv<W: Write>(dataset: &Dataset, schema: &CsvSchema, writer: W) -> Result<()> {
    let mut w = CsvBlockWriter::new(writer, schema.clone());
    w.write_block(dataset)?;
    w.flush()
}

/// Writes to a temporary file beside `path` and renames it into place, so a
/// failed write never leaves partial output.
pub fn write_csv_path(dataset: &Dataset, schema: &CsvSchema, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_csv(dataset, schema, std::io::BufWriter::new(tmp.as_file_mut()))?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
