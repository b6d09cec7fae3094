//! Streaming wrapper around [`Perturber`].
//!
//! Incoming rows are buffered until a full window is available. Each full
//! window is perturbed and accumulated; once `threshold` windows have
//! accumulated they are shuffled together and released as one block.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::perturbation::{PerturbationConfig, Perturber, WindowFrame};
use crate::MIN_WINDOW;

#[derive(Debug, Clone, Default)]
struct Schema {
    cols: Option<usize>,
    labelled: Option<bool>,
    column_names: Option<Vec<String>>,
    label_name: Option<String>,
    label_position: Option<usize>,
}

/// Single-owner state of one perturbed stream.
#[derive(Debug)]
pub struct StreamPerturber {
    engine: Perturber,
    threshold: usize,
    schema: Schema,
    buffer: Vec<f64>,
    buffer_labels: Vec<String>,
    buffer_ids: Vec<u64>,
    windows_since_release: usize,
    accumulator: Vec<WindowFrame>,
    // Raw rows of the newest accumulated window, kept so a short tail can be
    // merged into it at flush time.
    last_raw: Option<WindowFrame>,
    next_window: u64,
    next_release: u64,
    next_row_id: u64,
}

impl StreamPerturber {
    pub fn new(config: PerturbationConfig) -> Result<Self> {
        if config.threshold < 1 {
            return Err(Error::InvalidThreshold(config.threshold));
        }
        let threshold = config.threshold as usize;
        Ok(StreamPerturber {
            engine: Perturber::new(config)?,
            threshold,
            schema: Schema::default(),
            buffer: Vec::new(),
            buffer_labels: Vec::new(),
            buffer_ids: Vec::new(),
            windows_since_release: 0,
            accumulator: Vec::new(),
            last_raw: None,
            next_window: 0,
            next_release: 0,
            next_row_id: 0,
        })
    }

    #[doc(hidden)]
    pub fn without_noise(mut self) -> Self {
        self.engine = self.engine.without_noise();
        self
    }

    pub fn engine(&self) -> &Perturber {
        &self.engine
    }

    /// Rows waiting for a full window.
    pub fn buffered(&self) -> usize {
        self.buffer_ids.len()
    }

    pub fn windows_since_release(&self) -> usize {
        self.windows_since_release
    }

    pub fn accumulated_rows(&self) -> usize {
        self.accumulator.iter().map(WindowFrame::len).sum()
    }

    fn check_schema(&mut self, rows: &Dataset) -> Result<()> {
        let cols = *self.schema.cols.get_or_insert(rows.cols());
        if rows.cols() != cols {
            return Err(Error::Arity {
                row: self.next_row_id as usize,
                expected: cols,
                got: rows.cols(),
            });
        }
        let labelled = *self.schema.labelled.get_or_insert(rows.labels().is_some());
        if rows.labels().is_some() != labelled {
            return Err(Error::Shape("label column appeared or vanished mid-stream".into()));
        }
        if self.schema.column_names.is_none() {
            self.schema.column_names = rows.column_names().map(<[String]>::to_vec);
            self.schema.label_name = rows.label_name().map(str::to_owned);
            self.schema.label_position = rows.label_position();
        }
        Ok(())
    }

    fn take_buffered(&mut self, n: usize) -> Result<Dataset> {
        let cols = self.schema.cols.unwrap_or(0);
        let values: Vec<f64> = self.buffer.drain(..n * cols).collect();
        let ids: Vec<u64> = self.buffer_ids.drain(..n).collect();
        let mut d = Dataset::new(n, cols, values)?.with_row_ids(ids)?;
        if self.schema.labelled == Some(true) {
            d = d.with_labels(self.buffer_labels.drain(..n).collect())?;
        }
        if let Some(names) = &self.schema.column_names {
            d = d.with_column_names(names.clone())?;
        }
        Ok(d.with_label_layout(self.schema.label_name.clone(), self.schema.label_position))
    }

    fn process_window(&mut self, raw: WindowFrame) -> Result<()> {
        let done = self.engine.perturb_window(&raw)?;
        self.accumulator.push(done);
        self.last_raw = Some(raw);
        self.windows_since_release += 1;
        Ok(())
    }

    fn release(&mut self) -> Result<Dataset> {
        let out = self.engine.release(&mut self.accumulator, self.next_release)?;
        self.next_release += 1;
        self.windows_since_release = 0;
        self.last_raw = None;
        Ok(out)
    }

    /// Appends `rows` and returns every block released along the way.
    pub fn ingest(&mut self, rows: &Dataset) -> Result<Vec<Dataset>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        self.check_schema(rows)?;
        self.buffer.extend_from_slice(rows.values());
        if let Some(labels) = rows.labels() {
            self.buffer_labels.extend(labels.iter().cloned());
        }
        let start = self.next_row_id;
        self.buffer_ids.extend(start..start + rows.rows() as u64);
        self.next_row_id += rows.rows() as u64;

        let ws = self.engine.config().window_size;
        let mut released = Vec::new();
        while self.buffered() >= ws {
            let data = self.take_buffered(ws)?;
            let frame = WindowFrame::new(self.next_window, data);
            self.next_window += 1;
            self.process_window(frame)?;
            if self.windows_since_release == self.threshold {
                released.push(self.release()?);
            }
        }
        Ok(released)
    }

    /// Drains the buffer and releases whatever has accumulated.
    ///
    /// A tail shorter than the model minimum joins the newest unreleased
    /// window. With nothing to join it is refused and discarded, and the
    /// error reports how many rows were dropped.
    pub fn flush(&mut self) -> Result<Option<Dataset>> {
        let pending = self.buffered();
        if pending >= MIN_WINDOW {
            let data = self.take_buffered(pending)?;
            let frame = WindowFrame::new(self.next_window, data);
            self.next_window += 1;
            self.process_window(frame)?;
        } else if pending > 0 {
            match self.last_raw.take() {
                Some(last) => {
                    let tail = self.take_buffered(pending)?;
                    let merged = Dataset::concat(&[last.data, tail])?;
                    self.accumulator.pop();
                    self.windows_since_release -= 1;
                    self.process_window(WindowFrame::new(last.index, merged))?;
                }
                None => {
                    self.buffer.clear();
                    self.buffer_labels.clear();
                    self.buffer_ids.clear();
                    return Err(Error::BelowMinimum { rows: pending });
                }
            }
        }
        if self.accumulator.is_empty() {
            return Ok(None);
        }
        self.release().map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new(n, 2, (0..2 * n).map(|_| rng.gen()).collect()).unwrap()
    }

    fn stream(ws: usize, t: i64) -> StreamPerturber {
        StreamPerturber::new(PerturbationConfig::new(1.0, ws).with_threshold(t).with_seed(7)).unwrap()
    }

    #[test]
    fn releases_every_window_at_t1() {
        let mut s = stream(100, 1);
        let out = s.ingest(&rows(250, 0)).unwrap();
        assert_eq!(out.iter().map(Dataset::rows).collect::<Vec<_>>(), [100, 100]);
        assert_eq!(s.buffered(), 50);
        let tail = s.flush().unwrap().unwrap();
        assert_eq!(tail.rows(), 50);
    }

    #[test]
    fn holds_back_until_threshold() {
        let mut s = stream(100, 3);
        assert!(s.ingest(&rows(250, 0)).unwrap().is_empty());
        assert_eq!(s.windows_since_release(), 2);
        assert_eq!(s.accumulated_rows(), 200);
    }

    #[test]
    fn empty_ingest_is_noop() {
        let mut s = stream(100, 1);
        assert!(s.ingest(&rows(0, 0)).unwrap().is_empty());
        assert_eq!(s.buffered(), 0);
        assert!(s.flush().unwrap().is_none());
    }

    #[test]
    fn short_tail_without_window_is_refused() {
        let mut s = stream(100, 1);
        s.ingest(&rows(3, 0)).unwrap();
        assert!(matches!(s.flush(), Err(Error::BelowMinimum { rows: 3 })));
        assert_eq!(s.buffered(), 0);
    }

    #[test]
    fn short_tail_merges_into_pending_window() {
        let mut s = stream(100, 2);
        assert!(s.ingest(&rows(102, 1)).unwrap().is_empty());
        let out = s.flush().unwrap().unwrap();
        assert_eq!(out.rows(), 102);
        let mut ids = out.row_ids().to_vec();
        ids.sort_unstable();
        assert_eq!(ids, (0..102).collect::<Vec<_>>());
    }

    #[test]
    fn arity_change_is_rejected() {
        let mut s = stream(10, 1);
        s.ingest(&rows(3, 0)).unwrap();
        let bad = Dataset::new(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(s.ingest(&bad), Err(Error::Arity { .. })));
    }

    #[test]
    fn static_threshold_is_not_a_stream() {
        assert!(StreamPerturber::new(PerturbationConfig::new(1.0, 10)).is_err());
    }

    #[test]
    fn row_ids_are_stream_positions() {
        // Windows close at 4, 8, 12 rows; the first two release together and
        // the 3-row tail joins the third.
        let mut s = stream(4, 2);
        let mut seen = Vec::new();
        for k in 0..5 {
            for b in s.ingest(&rows(3, k)).unwrap() {
                seen.extend_from_slice(b.row_ids());
            }
        }
        if let Some(b) = s.flush().unwrap() {
            seen.extend_from_slice(b.row_ids());
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..15).collect::<Vec<_>>());
    }
}
