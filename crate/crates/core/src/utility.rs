//! Classification utility of perturbed data, measured with a 1-nearest-
//! neighbour classifier under stratified k-fold cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attacks::standardize;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::perturbation::{PerturbationConfig, Perturber};

pub const CLASSIFIER: &str = "1-NN";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub parameter: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport {
    /// Cross-validated accuracy. For a sweep this is the accuracy on the
    /// unperturbed input, for reference.
    pub accuracy: f64,
    pub folds: usize,
    pub classifier: &'static str,
    pub sweep: Vec<SweepPoint>,
}

/// Fold of every row: each class is shuffled and dealt round-robin, so every
/// fold gets `⌊c/k⌋` or `⌈c/k⌉` members of a class with `c` members.
fn stratified_folds<R: Rng + ?Sized>(labels: &[String], folds: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < folds) {
        return Err(Error::Precondition(format!(
            "class {class:?} has {} members, fewer than {folds} folds",
            members.len()
        )));
    }
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(rng);
        for &i in members.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Index of the training row nearest to `query`; ties go to the lower index.
fn nearest(values: &[f64], cols: usize, train: &[usize], query: &[f64]) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for &t in train {
        let row = &values[t * cols..(t + 1) * cols];
        let mut d = 0.0;
        for (a, b) in row.iter().zip(query) {
            let diff = a - b;
            d += diff * diff;
        }
        if d < best.0 || (d == best.0 && t < best.1) {
            best = (d, t);
        }
    }
    best.1
}

/// Stratified `folds`-fold cross-validated 1-NN accuracy on z-scored
/// attributes.
pub fn knn_accuracy<R: Rng + ?Sized>(dataset: &Dataset, folds: usize, rng: &mut R) -> Result<UtilityReport> {
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::Precondition("dataset has no class labels".into()))?;
    if folds < 2 {
        return Err(Error::Precondition(format!("need at least 2 folds, got {folds}")));
    }
    let assignment = stratified_folds(labels, folds, rng)?;
    let z = standardize(dataset);
    let (values, cols) = (z.values(), z.cols());

    let correct: usize = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..dataset.rows()).partition(|&i| assignment[i] == f);
            test.par_iter()
                .filter(|&&i| {
                    let hit = nearest(values, cols, &train, &values[i * cols..(i + 1) * cols]);
                    labels[hit] == labels[i]
                })
                .count()
        })
        .sum();
    Ok(UtilityReport {
        accuracy: correct as f64 / dataset.rows() as f64,
        folds,
        classifier: CLASSIFIER,
        sweep: Vec::new(),
    })
}

fn sweep<R: Rng + ?Sized>(
    dataset: &Dataset,
    points: &[(f64, PerturbationConfig)],
    folds: usize,
    rng: &mut R,
) -> Result<UtilityReport> {
    let fold_seed: u64 = rng.gen();
    let baseline = knn_accuracy(dataset, folds, &mut ChaCha8Rng::seed_from_u64(fold_seed))?;
    let mut out = Vec::with_capacity(points.len());
    for (parameter, config) in points {
        let config = config.clone().with_seed(rng.gen());
        let released = Perturber::new(config)?.perturb_dataset(dataset)?;
        let acc = knn_accuracy(&released, folds, &mut ChaCha8Rng::seed_from_u64(fold_seed))?;
        out.push(SweepPoint {
            parameter: *parameter,
            accuracy: acc.accuracy,
        });
    }
    Ok(UtilityReport {
        sweep: out,
        ..baseline
    })
}

/// Perturbs at every `ε` (fresh seed each) and reports 1-NN accuracy.
pub fn epsilon_sweep<R: Rng + ?Sized>(
    dataset: &Dataset,
    template: &PerturbationConfig,
    epsilons: &[f64],
    folds: usize,
    rng: &mut R,
) -> Result<UtilityReport> {
    let points: Vec<_> = epsilons
        .iter()
        .map(|&e| (e, PerturbationConfig { epsilon: e, ..template.clone() }))
        .collect();
    sweep(dataset, &points, folds, rng)
}

/// Perturbs at every window size with the template's `ε`.
pub fn window_sweep<R: Rng + ?Sized>(
    dataset: &Dataset,
    template: &PerturbationConfig,
    window_sizes: &[usize],
    folds: usize,
    rng: &mut R,
) -> Result<UtilityReport> {
    let points: Vec<_> = window_sizes
        .iter()
        .map(|&ws| (ws as f64, PerturbationConfig { window_size: ws, ..template.clone() }))
        .collect();
    sweep(dataset, &points, folds, rng)
}
