//! The perturbation pipeline: windows, per-attribute noisy fits, release.
//!
//! For each window and each attribute the engine
//!
//! 1. min-max normalizes the raw column to `[0, 1]`,
//! 2. sorts it, remembering which row holds each rank,
//! 3. fits the noisy Chebyshev model to the sorted values,
//! 4. evaluates the model on the abscissae and min-max normalizes the result,
//! 5. rescales to the raw `[min, max]` of the column in that window,
//! 6. writes the value synthesized for rank `j` back onto the row of rank `j`.
//!
//! Perturbed windows are concatenated and their rows shuffled before release.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

pub use crate::dataset::{ClassPolicy, Dataset};
use crate::error::{Error, Result};
use crate::laplace::{self, NoiseSpec, NoiseVector, Purpose};
use crate::noisy_fit::{self, AttributeSeries, PowerSums};
use crate::MIN_WINDOW;

/// Columns whose raw range is below this are passed through unchanged.
pub const CONSTANT_RANGE: f64 = 1e-12;

/// Threshold value selecting the static, single-release path.
pub const STATIC_THRESHOLD: i64 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    pub epsilon: f64,
    pub window_size: usize,
    /// Windows per release in stream mode; `-1` for a static dataset.
    pub threshold: i64,
    pub seed: Option<u64>,
    pub class_policy: ClassPolicy,
}

impl PerturbationConfig {
    pub fn new(epsilon: f64, window_size: usize) -> Self {
        PerturbationConfig {
            epsilon,
            window_size,
            threshold: STATIC_THRESHOLD,
            seed: None,
            class_policy: ClassPolicy::Auto,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_threshold(mut self, threshold: i64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        NoiseSpec::new(self.epsilon)?;
        if self.window_size < MIN_WINDOW {
            return Err(Error::InvalidWindowSize(self.window_size));
        }
        if self.threshold != STATIC_THRESHOLD && self.threshold < 1 {
            return Err(Error::InvalidThreshold(self.threshold));
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.threshold == STATIC_THRESHOLD
    }
}

/// Noise injected into the fit. `Disabled` is an oracle-test hook only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    Laplace(NoiseSpec),
    #[doc(hidden)]
    Disabled,
}

impl NoiseMode {
    fn draw<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> NoiseVector {
        match self {
            NoiseMode::Laplace(spec) => laplace::sample_laplace(spec, n, rng),
            NoiseMode::Disabled => NoiseVector::zeros(n),
        }
    }

    fn epsilon(self) -> Option<f64> {
        match self {
            NoiseMode::Laplace(spec) => Some(spec.epsilon()),
            NoiseMode::Disabled => None,
        }
    }
}

/// A contiguous block of rows processed by one fit cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFrame {
    /// Position of the window in the dataset or stream; selects its noise
    /// substreams.
    pub index: u64,
    pub data: Dataset,
    /// Raw per-attribute minimum over the window.
    pub min: Vec<f64>,
    /// Raw per-attribute maximum over the window.
    pub max: Vec<f64>,
}

impl WindowFrame {
    pub fn new(index: u64, data: Dataset) -> Self {
        let cols = data.cols();
        let mut min = vec![f64::INFINITY; cols];
        let mut max = vec![f64::NEG_INFINITY; cols];
        for i in 0..data.rows() {
            for (j, &v) in data.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        WindowFrame { index, data, min, max }
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn original_row_ids(&self) -> &[u64] {
        self.data.row_ids()
    }
}

/// Row ranges of the windows for `rows` rows at window size `ws`. A trailing
/// remainder shorter than the model minimum joins the preceding window.
pub fn window_bounds(rows: usize, ws: usize) -> Vec<(usize, usize)> {
    let mut bounds: Vec<(usize, usize)> = (0..rows)
        .step_by(ws.max(1))
        .map(|s| (s, (s + ws).min(rows)))
        .collect();
    if bounds.len() > 1 {
        let (s, e) = bounds[bounds.len() - 1];
        if e - s < MIN_WINDOW {
            bounds.pop();
            bounds.last_mut().unwrap().1 = e;
        }
    }
    bounds
}

/// Splits `dataset` into consecutive windows of `ws` rows.
pub fn partition(dataset: &Dataset, ws: usize) -> Result<Vec<WindowFrame>> {
    if ws < MIN_WINDOW {
        return Err(Error::InvalidWindowSize(ws));
    }
    if dataset.rows() < MIN_WINDOW {
        return Err(Error::TooFewRows {
            rows: dataset.rows(),
        });
    }
    Ok(window_bounds(dataset.rows(), ws)
        .into_iter()
        .enumerate()
        .map(|(k, (s, e))| WindowFrame::new(k as u64, dataset.slice_rows(s, e)))
        .collect())
}

/// Abscissae and their power sums for a window length, cached because every
/// attribute of every equally sized window shares them.
#[derive(Debug, Default)]
struct GridCache {
    grids: Mutex<HashMap<usize, Arc<Grid>>>,
}

#[derive(Debug)]
pub struct Grid {
    pub x: Vec<f64>,
    pub sums: PowerSums,
}

impl Grid {
    pub fn new(n: usize) -> Self {
        let x = noisy_fit::abscissae(n);
        let sums = noisy_fit::power_sums(&x);
        Grid { x, sums }
    }
}

impl GridCache {
    fn get(&self, n: usize) -> Arc<Grid> {
        let mut grids = self.grids.lock().unwrap();
        grids.entry(n).or_insert_with(|| Arc::new(Grid::new(n))).clone()
    }
}

/// Perturbs one raw column against the grid `x`, returning values in the
/// column's original row order.
pub fn perturb_attribute<R: Rng + ?Sized>(
    column: &[f64],
    grid: &Grid,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = column.len();
    if n < MIN_WINDOW {
        return Err(Error::TooFewRows { rows: n });
    }
    if grid.x.len() != n {
        return Err(Error::LengthMismatch {
            what: "abscissae",
            expected: n,
            got: grid.x.len(),
        });
    }
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < CONSTANT_RANGE {
        return Ok(column.to_vec());
    }

    // Rank order, ties broken by row index.
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        column[a as usize]
            .total_cmp(&column[b as usize])
            .then(a.cmp(&b))
    });
    let range = hi - lo;
    let sorted: Vec<f64> = order
        .iter()
        .map(|&i| (column[i as usize] - lo) / range)
        .collect();

    let noise_vec = noise.draw(n, rng);
    let series = AttributeSeries::new(&grid.x, &sorted)?;
    let system = noisy_fit::build_normal_system_with(&grid.sums, series, &noise_vec)?;
    let mut model = noisy_fit::solve(&system)?;
    model.epsilon = noise.epsilon();

    let synth = noisy_fit::synthesize(&model, &grid.x);
    let (slo, shi) = synth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let srange = shi - slo;

    let mut out = vec![0.0; n];
    for (rank, &row) in order.iter().enumerate() {
        let unit = if srange > 0.0 && srange.is_finite() {
            (synth[rank] - slo) / srange
        } else {
            0.5
        };
        out[row as usize] = (lo + unit * range).clamp(lo, hi);
    }
    Ok(out)
}

/// Owns the configuration, resolved master seed, and grid cache for one
/// dataset or stream.
#[derive(Debug)]
pub struct Perturber {
    config: PerturbationConfig,
    master_seed: u64,
    noise: NoiseMode,
    grids: GridCache,
}

impl Perturber {
    pub fn new(config: PerturbationConfig) -> Result<Self> {
        config.validate()?;
        let noise = NoiseMode::Laplace(NoiseSpec::new(config.epsilon)?);
        let master_seed = config.seed.unwrap_or_else(laplace::entropy_seed);
        Ok(Perturber {
            config,
            master_seed,
            noise,
            grids: GridCache::default(),
        })
    }

    /// Replaces Laplace noise with zeros. For oracle tests only.
    #[doc(hidden)]
    pub fn without_noise(mut self) -> Self {
        self.noise = NoiseMode::Disabled;
        self
    }

    pub fn config(&self) -> &PerturbationConfig {
        &self.config
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn grid(&self, n: usize) -> Arc<Grid> {
        self.grids.get(n)
    }

    /// Perturbs every attribute of `frame`, each with its own noise substream.
    pub fn perturb_window(&self, frame: &WindowFrame) -> Result<WindowFrame> {
        let data = &frame.data;
        let grid = self.grid(data.rows());
        let columns: Vec<Vec<f64>> = (0..data.cols())
            .into_par_iter()
            .map(|j| {
                let mut rng =
                    laplace::substream(self.master_seed, Purpose::Noise, frame.index, j as u64);
                perturb_attribute(&data.column(j), &grid, self.noise, &mut rng).map_err(|e| {
                    Error::Window {
                        window: frame.index as usize,
                        attribute: j,
                        source: Box::new(e),
                    }
                })
            })
            .collect::<Result<_>>()?;
        let mut out = data.clone();
        for (j, c) in columns.iter().enumerate() {
            out.set_column(j, c);
        }
        Ok(WindowFrame {
            index: frame.index,
            data: out,
            min: frame.min.clone(),
            max: frame.max.clone(),
        })
    }

    /// Shuffles the accumulated frames with the substream for `release`.
    pub fn release(&self, frames: &mut Vec<WindowFrame>, release: u64) -> Result<Dataset> {
        let mut rng = laplace::substream(self.master_seed, Purpose::Shuffle, release, 0);
        shuffle_and_release(frames, &mut rng)
    }

    /// Static path: every window perturbed, one shuffle, one release.
    pub fn perturb_dataset(&self, dataset: &Dataset) -> Result<Dataset> {
        if !self.config.is_static() {
            return Err(Error::Precondition(
                "perturb_dataset is the static path; use a stream for threshold >= 1".into(),
            ));
        }
        let frames = partition(dataset, self.config.window_size)?;
        let mut done = frames
            .iter()
            .map(|f| self.perturb_window(f))
            .collect::<Result<Vec<_>>>()?;
        self.release(&mut done, 0)
    }
}

/// Concatenates `frames`, permutes whole rows uniformly (Fisher-Yates), and
/// clears `frames`.
pub fn shuffle_and_release<R: Rng + ?Sized>(
    frames: &mut Vec<WindowFrame>,
    rng: &mut R,
) -> Result<Dataset> {
    if frames.is_empty() {
        return Err(Error::Precondition("nothing accumulated to release".into()));
    }
    let parts: Vec<Dataset> = frames.drain(..).map(|f| f.data).collect();
    let merged = Dataset::concat(&parts)?;
    let mut perm: Vec<usize> = (0..merged.rows()).collect();
    perm.shuffle(rng);
    Ok(merged.select_rows(&perm))
}

/// Convenience wrapper for the static path.
pub fn perturb_dataset(dataset: &Dataset, config: &PerturbationConfig) -> Result<Dataset> {
    Perturber::new(config.clone())?.perturb_dataset(dataset)
}
