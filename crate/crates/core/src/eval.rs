//! Stratified k-fold plans, nested selection of the penalty C, and
//! stratified source sub-sampling.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::ContrastDataset;
use crate::error::{Error, Result};
use crate::linalg::gram;
use crate::linmodel::{fit_kernel, sign_label, ClassifierKind};
use crate::par::derive_seed;

pub const DEFAULT_N_FOLDS: usize = 6;
pub const DEFAULT_N_SUBSAMPLES: usize = 6;
pub const DEFAULT_KEEP_FRACTION: f64 = 0.8;

pub fn default_c_grid() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub n: usize,
    pub n_folds: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

fn class_indices(labels: &[i8]) -> [Vec<usize>; 2] {
    let neg = (0..labels.len()).filter(|&i| labels[i] < 0).collect();
    let pos = (0..labels.len()).filter(|&i| labels[i] > 0).collect();
    [neg, pos]
}

/// Shuffles each class and deals it round-robin over the folds, continuing
/// the deal where the previous class stopped so fold sizes also balance.
pub fn stratified_kfold(labels: &[i8], n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::Cv(format!("need at least 2 folds, got {n_folds}")));
    }
    let classes = class_indices(labels);
    if let Some(small) = classes.iter().find(|c| c.len() < n_folds) {
        return Err(Error::Cv(format!(
            "a class has {} samples, fewer than {n_folds} folds",
            small.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut offset = 0;
    for mut members in classes {
        members.shuffle(&mut rng);
        for (r, &i) in members.iter().enumerate() {
            assignments[i] = (offset + r) % n_folds;
        }
        offset = (offset + members.len()) % n_folds;
    }
    Ok(FoldPlan {
        n: labels.len(),
        n_folds,
        seed,
        assignments,
    })
}

/// Outcome of the inner cross-validation over the C grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CSelection {
    pub c: f64,
    /// Grid sorted ascending, aligned with `mean_accuracy`.
    pub grid: Vec<f64>,
    pub mean_accuracy: Vec<f64>,
    pub n_folds: usize,
}

fn sorted_grid(c_grid: &[f64]) -> Result<Vec<f64>> {
    if c_grid.is_empty() {
        return Err(Error::Config("empty C grid".into()));
    }
    if c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::Config(
            "C grid values must be positive and finite".into(),
        ));
    }
    let mut grid = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

pub(crate) fn sub_block(k: ArrayView2<'_, f64>, rows: &[usize], cols: &[usize]) -> Array2<f64> {
    k.select(Axis(0), rows).select(Axis(1), cols)
}

/// Nested CV on a Gram matrix covering exactly the training block. The inner
/// fold count is `min(n_folds, smallest class count)`.
pub fn select_c_kernel(
    gram: ArrayView2<'_, f64>,
    y: &[i8],
    kind: ClassifierKind,
    c_grid: &[f64],
    n_folds: usize,
    seed: u64,
) -> Result<CSelection> {
    let grid = sorted_grid(c_grid)?;
    if grid.len() == 1 {
        return Ok(CSelection {
            c: grid[0],
            mean_accuracy: vec![f64::NAN],
            grid,
            n_folds: 0,
        });
    }
    let smallest = class_indices(y).iter().map(Vec::len).min().unwrap_or(0);
    let folds = stratified_kfold(y, n_folds.min(smallest), seed)?;
    let mut totals = vec![0.0; grid.len()];
    for fold in 0..folds.n_folds {
        let train = folds.train_indices(fold);
        let test = folds.test_indices(fold);
        let k_train = sub_block(gram, &train, &train);
        let k_cross = sub_block(gram, &test, &train);
        let y_train: Vec<i8> = train.iter().map(|&i| y[i]).collect();
        for (total, &c) in totals.iter_mut().zip(&grid) {
            let model = fit_kernel(kind, k_train.view(), &y_train, c)?;
            let hits = model
                .decision_from_kernel(k_cross.view())
                .into_iter()
                .zip(&test)
                .filter(|(v, &i)| sign_label(*v) == y[i])
                .count();
            *total += hits as f64 / test.len() as f64;
        }
    }
    let mean_accuracy: Vec<f64> = totals.iter().map(|t| t / folds.n_folds as f64).collect();
    let mut best = 0;
    for (i, &acc) in mean_accuracy.iter().enumerate() {
        if acc > mean_accuracy[best] {
            best = i;
        }
    }
    Ok(CSelection {
        c: grid[best],
        grid,
        mean_accuracy,
        n_folds: folds.n_folds,
    })
}

/// The C maximizing mean inner-CV accuracy, ties resolved toward smaller C.
pub fn nested_select_c(
    x: ArrayView2<'_, f64>,
    y: &[i8],
    kind: ClassifierKind,
    c_grid: &[f64],
    n_folds: usize,
    seed: u64,
) -> Result<f64> {
    nested_select_c_report(x, y, kind, c_grid, n_folds, seed).map(|s| s.c)
}

pub fn nested_select_c_report(
    x: ArrayView2<'_, f64>,
    y: &[i8],
    kind: ClassifierKind,
    c_grid: &[f64],
    n_folds: usize,
    seed: u64,
) -> Result<CSelection> {
    if x.nrows() != y.len() {
        return Err(Error::Dim(format!(
            "{} rows for {} labels",
            x.nrows(),
            y.len()
        )));
    }
    select_c_kernel(gram(x).view(), y, kind, c_grid, n_folds, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsamplePlan {
    pub n_subsamples: usize,
    pub keep_fraction: f64,
    pub seed: u64,
    pub index_sets: Vec<Vec<usize>>,
}

impl SubsamplePlan {
    /// Stratified random subsets keeping `round(keep_fraction * count)` of
    /// each class.
    pub fn new(labels: &[i8], n_subsamples: usize, keep_fraction: f64, seed: u64) -> Result<Self> {
        if n_subsamples == 0 {
            return Err(Error::Config("need at least one sub-sample".into()));
        }
        if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "keep fraction {keep_fraction} outside (0, 1]"
            )));
        }
        let classes = class_indices(labels);
        let keep: Vec<usize> = classes
            .iter()
            .map(|c| (keep_fraction * c.len() as f64 + 0.5).floor() as usize)
            .collect();
        if keep.iter().any(|&k| k < 2) {
            return Err(Error::Cv(format!(
                "keep fraction {keep_fraction} leaves fewer than 2 samples in a class"
            )));
        }
        let index_sets = (0..n_subsamples)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[s as u64]));
                let mut set: Vec<usize> = classes
                    .iter()
                    .zip(&keep)
                    .flat_map(|(members, &k)| {
                        let mut m = members.clone();
                        m.shuffle(&mut rng);
                        m.truncate(k);
                        m
                    })
                    .collect();
                set.sort_unstable();
                set
            })
            .collect();
        Ok(Self {
            n_subsamples,
            keep_fraction,
            seed,
            index_sets,
        })
    }
}

pub fn subsample_source(d: &ContrastDataset, plan: &SubsamplePlan) -> Result<Vec<ContrastDataset>> {
    plan.index_sets
        .iter()
        .map(|rows| d.select_rows(rows))
        .collect()
}
