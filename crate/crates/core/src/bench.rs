//! Scaling benchmark: times the static perturbation path on synthetic
//! uniform data, excluding data generation and any IO.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::perturbation::{PerturbationConfig, Perturber};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub rows: usize,
    pub attrs: usize,
    /// Fastest of the repeats.
    pub seconds: f64,
}

impl Timing {
    pub fn rows_per_sec(&self) -> f64 {
        self.rows as f64 / self.seconds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub window_size: usize,
    pub base: Timing,
    pub double_rows: Timing,
    pub double_attrs: Timing,
}

impl BenchReport {
    pub fn row_ratio(&self) -> f64 {
        self.double_rows.seconds / self.base.seconds
    }

    pub fn attr_ratio(&self) -> f64 {
        self.double_attrs.seconds / self.base.seconds
    }
}

pub fn uniform_dataset(rows: usize, attrs: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..rows * attrs).map(|_| rng.gen::<f64>()).collect();
    Dataset::new(rows, attrs, values).expect("uniform samples are finite")
}

/// Best-of-`repeats` wall time of one static perturbation.
pub fn time_perturbation(
    rows: usize,
    attrs: usize,
    window_size: usize,
    repeats: usize,
    seed: u64,
) -> Result<Timing> {
    let data = uniform_dataset(rows, attrs, seed);
    let engine = Perturber::new(PerturbationConfig::new(1.0, window_size).with_seed(seed))?;
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let out = engine.perturb_dataset(&data)?;
        best = best.min(start.elapsed().as_secs_f64());
        debug_assert_eq!(out.rows(), rows);
    }
    Ok(Timing {
        rows,
        attrs,
        seconds: best,
    })
}

/// Timings at `(N, A)`, `(2N, A)` and `(N, 2A)`.
pub fn run(rows: usize, attrs: usize, window_size: usize, repeats: usize, seed: u64) -> Result<BenchReport> {
    // One untimed pass warms the thread pool and allocator.
    time_perturbation(rows.min(window_size * 2), attrs, window_size, 1, seed)?;
    Ok(BenchReport {
        window_size,
        base: time_perturbation(rows, attrs, window_size, repeats, seed)?,
        double_rows: time_perturbation(2 * rows, attrs, window_size, repeats, seed)?,
        double_attrs: time_perturbation(rows, 2 * attrs, window_size, repeats, seed)?,
    })
}
