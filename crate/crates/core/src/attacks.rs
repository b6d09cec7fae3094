//! Resistance of a perturbed dataset against two reconstruction attacks.
//!
//! Both report, per attribute, the standard deviation of the difference
//! between the standardized original column and what the attacker holds
//! (the perturbed column for naive inference, a regression reconstruction for
//! the known input-output attack). Larger is more resistant; `min` across
//! attributes is the guaranteed floor.
//!
//! By default rows are compared positionally, i.e. row `i` of the released
//! dataset against row `i` of the original, which is all an attacker holding
//! the released file can do. [`Alignment::RowId`] instead lines rows up by
//! their retained identity, which measures the per-attribute transform alone.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Default share of rows whose (original, perturbed) pair the attacker knows.
pub const DEFAULT_KNOWN_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    #[default]
    Positional,
    RowId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSummary {
    pub min: f64,
    pub avg: f64,
    pub per_attribute: Vec<f64>,
}

impl AttackSummary {
    fn from_stds(per_attribute: Vec<f64>) -> Self {
        let min = per_attribute.iter().copied().fold(f64::INFINITY, f64::min);
        let avg = per_attribute.iter().sum::<f64>() / per_attribute.len().max(1) as f64;
        AttackSummary {
            min: if per_attribute.is_empty() { 0.0 } else { min },
            avg,
            per_attribute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackReport {
    pub naive_inference: Option<AttackSummary>,
    pub known_io: Option<AttackSummary>,
    pub known_fraction: Option<f64>,
}

impl AttackReport {
    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |prefix: &str, s: &AttackSummary| {
            out.push((format!("{prefix}_min"), format!("{:.6}", s.min)));
            out.push((format!("{prefix}_avg"), format!("{:.6}", s.avg)));
            let per: Vec<String> = s.per_attribute.iter().map(|v| format!("{v:.6}")).collect();
            out.push((format!("{prefix}_per_attribute"), per.join(";")));
        };
        if let Some(s) = &self.naive_inference {
            push("ni", s);
        }
        if let Some(s) = &self.known_io {
            push("io", s);
        }
        if let Some(f) = self.known_fraction {
            out.push(("known_fraction".into(), format!("{f}")));
        }
        out
    }
}

fn mean_std(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = v.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn column_stats(d: &Dataset, j: usize) -> (f64, f64) {
    mean_std((0..d.rows()).map(move |i| d.get(i, j)))
}

/// Z-scores every column with the sample standard deviation. Constant
/// columns become zeros.
pub fn standardize(dataset: &Dataset) -> Dataset {
    let mut out = dataset.clone();
    let cols = dataset.cols();
    let stats: Vec<(f64, f64)> = (0..cols).map(|j| column_stats(dataset, j)).collect();
    for (k, v) in out.values_mut().iter_mut().enumerate() {
        let (m, s) = stats[k % cols];
        *v = if s > 0.0 { (*v - m) / s } else { 0.0 };
    }
    out
}

fn check_shape(original: &Dataset, perturbed: &Dataset) -> Result<()> {
    if original.rows() != perturbed.rows() || original.cols() != perturbed.cols() {
        return Err(Error::Shape(format!(
            "original is {}x{}, perturbed is {}x{}",
            original.rows(),
            original.cols(),
            perturbed.rows(),
            perturbed.cols()
        )));
    }
    Ok(())
}

/// `perturbed` reordered so row `i` lines up with row `i` of `original`.
pub fn align(original: &Dataset, perturbed: &Dataset, alignment: Alignment) -> Result<Dataset> {
    check_shape(original, perturbed)?;
    match alignment {
        Alignment::Positional => Ok(perturbed.clone()),
        Alignment::RowId => {
            let mut by_id = std::collections::HashMap::with_capacity(perturbed.rows());
            for (i, &id) in perturbed.row_ids().iter().enumerate() {
                by_id.insert(id, i);
            }
            let idx = original
                .row_ids()
                .iter()
                .map(|id| {
                    by_id
                        .get(id)
                        .copied()
                        .ok_or_else(|| Error::Shape(format!("row id {id} missing from perturbed")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(perturbed.select_rows(&idx))
        }
    }
}

/// Std of `z(original) - z(perturbed)` per attribute.
pub fn naive_inference(
    original: &Dataset,
    perturbed: &Dataset,
    alignment: Alignment,
) -> Result<AttackSummary> {
    let perturbed = align(original, perturbed, alignment)?;
    let (zo, zp) = (standardize(original), standardize(&perturbed));
    let stds = (0..original.cols())
        .map(|j| mean_std((0..original.rows()).map(|i| zo.get(i, j) - zp.get(i, j))).1)
        .collect();
    Ok(AttackSummary::from_stds(stds))
}

/// Known input-output attack.
///
/// The attacker knows `known_fraction` of the (original, perturbed) row
/// pairs, fits an affine map perturbed → original on them by least squares,
/// and applies it to the other rows. Error is measured on those rows in
/// units of the original column's standard deviation.
pub fn known_io_attack<R: Rng + ?Sized>(
    original: &Dataset,
    perturbed: &Dataset,
    known_fraction: f64,
    alignment: Alignment,
    rng: &mut R,
) -> Result<AttackSummary> {
    let perturbed = align(original, perturbed, alignment)?;
    let (rows, cols) = (original.rows(), original.cols());
    if !(known_fraction > 0.0 && known_fraction <= 1.0) {
        return Err(Error::Precondition(format!(
            "known fraction {known_fraction} must be in (0, 1]"
        )));
    }
    let known = (known_fraction * rows as f64).floor() as usize;
    if known < cols + 1 {
        return Err(Error::Precondition(format!(
            "insufficient known pairs: {known} known rows, need at least {} for {cols} attributes",
            cols + 1
        )));
    }
    let mut idx: Vec<usize> = (0..rows).collect();
    idx.shuffle(rng);
    let (known_rows, rest) = idx.split_at(known);
    let eval_rows = if rest.is_empty() { known_rows } else { rest };

    let design = |rows: &[usize]| {
        DMatrix::from_fn(rows.len(), cols + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                perturbed.get(rows[r], c - 1)
            }
        })
    };
    let svd = design(known_rows).svd(true, true);
    let eval_design = design(eval_rows);

    let stds = (0..cols)
        .map(|j| {
            let (_, s) = column_stats(original, j);
            if s == 0.0 {
                return Ok(0.0);
            }
            let target = DVector::from_iterator(known, known_rows.iter().map(|&i| original.get(i, j)));
            let w = svd
                .solve(&target, 1e-12)
                .map_err(|e| Error::Precondition(format!("regression failed: {e}")))?;
            let recon = &eval_design * w;
            let diffs = eval_rows
                .iter()
                .zip(recon.iter())
                .map(|(&i, &r)| (original.get(i, j) - r) / s);
            Ok(mean_std(diffs).1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackSummary::from_stds(stds))
}
