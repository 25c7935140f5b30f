//! Inline learning, transfer learning and selection transfer accuracy
//! curves over the cubic percentile grid.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{ContrastDataset, TaskPair};
use crate::error::{Error, Result};
use crate::eval::{
    default_c_grid, select_c_kernel, stratified_kfold, sub_block, subsample_source, FoldPlan,
    SubsamplePlan, DEFAULT_KEEP_FRACTION, DEFAULT_N_FOLDS, DEFAULT_N_SUBSAMPLES,
};
use crate::linalg::gram;
use crate::linmodel::{accuracy, fit_kernel, predict, sign_label, ClassifierKind, LinearModel};
use crate::par::{derive_seed, try_map_indexed};
use crate::selection::{
    cubic_grid, FeatureRanking, PercentileGrid, VoxelSelection, DEFAULT_MIN_VOXELS,
    DEFAULT_N_POINTS,
};
use crate::stats::anova_f;

const STREAM_OUTER_FOLDS: u64 = 1;
const STREAM_INNER_CV: u64 = 2;
const STREAM_SUBSAMPLES: u64 = 3;
const STREAM_TRANSFER_INNER_CV: u64 = 4;

/// Where inline learning ranks voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InlineSelection {
    /// ANOVA on each outer training block only.
    #[default]
    FoldWise,
    /// ANOVA once on the whole target task.
    WholeTask,
}

impl std::str::FromStr for InlineSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "foldwise" => Ok(Self::FoldWise),
            "wholetask" => Ok(Self::WholeTask),
            other => Err(Error::Config(format!(
                "unknown inline selection mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub classifier: ClassifierKind,
    pub c_grid: Vec<f64>,
    pub n_folds: usize,
    pub n_subsamples: usize,
    pub subsample_fraction: f64,
    pub n_points: usize,
    pub min_voxels: usize,
    pub seed: u64,
    pub inline_selection: InlineSelection,
    pub standardize_samples: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::LinearSvc,
            c_grid: default_c_grid(),
            n_folds: DEFAULT_N_FOLDS,
            n_subsamples: DEFAULT_N_SUBSAMPLES,
            subsample_fraction: DEFAULT_KEEP_FRACTION,
            n_points: DEFAULT_N_POINTS,
            min_voxels: DEFAULT_MIN_VOXELS,
            seed: 0,
            inline_selection: InlineSelection::FoldWise,
            standardize_samples: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config(format!(
                "n_folds must be at least 2, got {}",
                self.n_folds
            )));
        }
        if self.n_subsamples == 0 || self.n_points < 2 || self.min_voxels == 0 {
            return Err(Error::Config(
                "n_subsamples, min_voxels must be positive and n_points at least 2".into(),
            ));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "subsample_fraction {} outside (0, 1]",
                self.subsample_fraction
            )));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::Config(
                "C grid must be non-empty, positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self, k: usize) -> Result<PercentileGrid> {
        cubic_grid(k, self.n_points, self.min_voxels)
    }

    fn prepare(&self, d: &ContrastDataset) -> ContrastDataset {
        if self.standardize_samples {
            d.standardized()
        } else {
            d.clone()
        }
    }

    /// Outer fold plan used for every CV-based curve on a task.
    pub fn outer_folds(&self, labels: &[i8]) -> Result<FoldPlan> {
        stratified_kfold(
            labels,
            self.n_folds,
            derive_seed(self.seed, &[STREAM_OUTER_FOLDS]),
        )
    }

    pub fn subsample_plan(&self, labels: &[i8]) -> Result<SubsamplePlan> {
        SubsamplePlan::new(
            labels,
            self.n_subsamples,
            self.subsample_fraction,
            derive_seed(self.seed, &[STREAM_SUBSAMPLES]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveRole {
    Inline,
    Transfer,
    #[serde(rename = "selection")]
    SelectionTransfer,
}

impl CurveRole {
    pub fn name(self) -> &'static str {
        match self {
            CurveRole::Inline => "inline",
            CurveRole::Transfer => "transfer",
            CurveRole::SelectionTransfer => "selection",
        }
    }
}

/// Replicate accuracies (grid points x replicates) for one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    pub role: CurveRole,
    pub grid: PercentileGrid,
    pub replicates: Array2<f64>,
    pub mean: Vec<f64>,
    /// Voxels used at each grid point (first replicate's selection).
    pub selection_sizes: Vec<usize>,
}

impl AccuracyCurve {
    pub fn new(
        role: CurveRole,
        grid: PercentileGrid,
        replicates: Array2<f64>,
        selection_sizes: Vec<usize>,
    ) -> Result<Self> {
        if replicates.nrows() != grid.len() {
            return Err(Error::Grid(format!(
                "{} replicate rows for {} grid points",
                replicates.nrows(),
                grid.len()
            )));
        }
        if replicates.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Data("accuracy outside [0, 1]".into()));
        }
        let mean = replicates
            .rows()
            .into_iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect();
        Ok(Self {
            role,
            grid,
            replicates,
            mean,
            selection_sizes,
        })
    }

    pub fn fractions(&self) -> &[f64] {
        self.grid.fractions()
    }

    pub fn n_replicates(&self) -> usize {
        self.replicates.ncols()
    }

    pub fn row(&self, point: usize) -> Vec<f64> {
        self.replicates.row(point).to_vec()
    }
}

fn ranking_of(d: &ContrastDataset) -> Result<FeatureRanking> {
    FeatureRanking::from_scores(&anova_f(d.samples().view(), d.labels())?)
}

fn columns(x: ArrayView2<'_, f64>, sel: &VoxelSelection) -> Array2<f64> {
    x.select(Axis(1), sel.indices())
}

fn with_context<T>(role: CurveRole, fraction: f64, replicate: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Protocol {
        role: role.name(),
        fraction,
        replicate,
        source: Box::new(e),
    })
}

/// Nested C selection on the training block, fit, and accuracy on the test
/// block. `g` is the Gram matrix over all rows of the task.
fn fold_accuracy(
    g: ArrayView2<'_, f64>,
    y: &[i8],
    train: &[usize],
    test: &[usize],
    cfg: &ProtocolConfig,
    inner_seed: u64,
) -> Result<f64> {
    let k_train = sub_block(g, train, train);
    let y_train: Vec<i8> = train.iter().map(|&i| y[i]).collect();
    let chosen = select_c_kernel(
        k_train.view(),
        &y_train,
        cfg.classifier,
        &cfg.c_grid,
        cfg.n_folds,
        inner_seed,
    )?;
    let model = fit_kernel(cfg.classifier, k_train.view(), &y_train, chosen.c)?;
    let k_cross = sub_block(g, test, train);
    let pred: Vec<i8> = model
        .decision_from_kernel(k_cross.view())
        .into_iter()
        .map(sign_label)
        .collect();
    let truth: Vec<i8> = test.iter().map(|&i| y[i]).collect();
    accuracy(&pred, &truth)
}

fn inner_seed(cfg: &ProtocolConfig, fold: usize) -> u64 {
    derive_seed(cfg.seed, &[STREAM_INNER_CV, fold as u64])
}

/// CV on `target` with one voxel selection per grid point shared by all folds.
fn cv_with_fixed_selections(
    role: CurveRole,
    target: &ContrastDataset,
    grid: PercentileGrid,
    selections: &[VoxelSelection],
    cfg: &ProtocolConfig,
) -> Result<AccuracyCurve> {
    let folds = cfg.outer_folds(target.labels())?;
    let rows = try_map_indexed(selections.len(), |p| {
        let sel = &selections[p];
        let g = gram(columns(target.samples().view(), sel).view());
        (0..folds.n_folds)
            .map(|f| {
                let r = fold_accuracy(
                    g.view(),
                    target.labels(),
                    &folds.train_indices(f),
                    &folds.test_indices(f),
                    cfg,
                    inner_seed(cfg, f),
                );
                with_context(role, sel.fraction(), f, r)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let sizes = selections.iter().map(VoxelSelection::len).collect();
    AccuracyCurve::new(role, grid, rows_to_matrix(rows), sizes)
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> Array2<f64> {
    let n_cols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), n_cols), flat).expect("rectangular replicate rows")
}

/// Cross-validated accuracy on the target alone (τ-inline).
pub fn inline_curve(target: &ContrastDataset, cfg: &ProtocolConfig) -> Result<AccuracyCurve> {
    cfg.validate()?;
    let target = cfg.prepare(target);
    let grid = cfg.grid(target.k())?;
    let role = CurveRole::Inline;
    match cfg.inline_selection {
        InlineSelection::WholeTask => {
            let ranking = ranking_of(&target)?;
            let selections = grid
                .fractions()
                .iter()
                .map(|&p| ranking.top(p, cfg.min_voxels))
                .collect::<Result<Vec<_>>>()?;
            cv_with_fixed_selections(role, &target, grid, &selections, cfg)
        }
        InlineSelection::FoldWise => {
            let folds = cfg.outer_folds(target.labels())?;
            let rankings = try_map_indexed(folds.n_folds, |f| {
                ranking_of(&target.select_rows(&folds.train_indices(f))?)
            })?;
            let n_folds = folds.n_folds;
            let fractions = grid.fractions().to_vec();
            let items = try_map_indexed(fractions.len() * n_folds, |item| {
                let (p, f) = (item / n_folds, item % n_folds);
                let r = rankings[f]
                    .top(fractions[p], cfg.min_voxels)
                    .and_then(|sel| {
                        let g = gram(columns(target.samples().view(), &sel).view());
                        let acc = fold_accuracy(
                            g.view(),
                            target.labels(),
                            &folds.train_indices(f),
                            &folds.test_indices(f),
                            cfg,
                            inner_seed(cfg, f),
                        )?;
                        Ok((acc, sel.len()))
                    });
                with_context(role, fractions[p], f, r)
            })?;
            let replicates = Array2::from_shape_fn((fractions.len(), n_folds), |(p, f)| {
                items[p * n_folds + f].0
            });
            let sizes = (0..fractions.len()).map(|p| items[p * n_folds].1).collect();
            AccuracyCurve::new(role, grid, replicates, sizes)
        }
    }
}

/// A source-trained classifier and the voxels it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferModel {
    pub selection: VoxelSelection,
    pub model: LinearModel,
}

/// Source-only training output for transfer learning, indexed
/// `[grid point][sub-sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferModels {
    pub grid: PercentileGrid,
    pub models: Vec<Vec<TransferModel>>,
    pub k: usize,
}

/// Trains one classifier per (grid point, source sub-sample). Only the
/// source task is consulted.
pub fn train_transfer_models(
    source: &ContrastDataset,
    cfg: &ProtocolConfig,
) -> Result<TransferModels> {
    cfg.validate()?;
    let source = cfg.prepare(source);
    let grid = cfg.grid(source.k())?;
    let plan = cfg.subsample_plan(source.labels())?;
    let subs = subsample_source(&source, &plan)?;
    let rankings = try_map_indexed(subs.len(), |s| ranking_of(&subs[s]))?;
    let n_reps = subs.len();
    let fractions = grid.fractions().to_vec();
    let flat = try_map_indexed(fractions.len() * n_reps, |item| {
        let (p, s) = (item / n_reps, item % n_reps);
        let sub = &subs[s];
        let r = rankings[s]
            .top(fractions[p], cfg.min_voxels)
            .and_then(|selection| {
                let xs = columns(sub.samples().view(), &selection);
                let g = gram(xs.view());
                let seed = derive_seed(cfg.seed, &[STREAM_TRANSFER_INNER_CV, s as u64]);
                let chosen = select_c_kernel(
                    g.view(),
                    sub.labels(),
                    cfg.classifier,
                    &cfg.c_grid,
                    cfg.n_folds,
                    seed,
                )?;
                let model = fit_kernel(cfg.classifier, g.view(), sub.labels(), chosen.c)?
                    .into_linear(xs.view());
                Ok(TransferModel { selection, model })
            });
        with_context(CurveRole::Transfer, fractions[p], s, r)
    })?;
    let mut it = flat.into_iter();
    let models = (0..fractions.len())
        .map(|_| it.by_ref().take(n_reps).collect())
        .collect();
    Ok(TransferModels {
        grid,
        models,
        k: source.k(),
    })
}

/// Accuracy of every source-trained model on the whole target.
pub fn score_transfer(
    models: &TransferModels,
    target: &ContrastDataset,
    cfg: &ProtocolConfig,
) -> Result<AccuracyCurve> {
    if target.k() != models.k {
        return Err(Error::Dim(format!(
            "models use {} voxels, target has {}",
            models.k,
            target.k()
        )));
    }
    let target = cfg.prepare(target);
    let n_reps = models.models.first().map_or(0, Vec::len);
    let fractions = models.grid.fractions().to_vec();
    let flat = try_map_indexed(fractions.len() * n_reps, |item| {
        let (p, s) = (item / n_reps, item % n_reps);
        let tm = &models.models[p][s];
        let xt = columns(target.samples().view(), &tm.selection);
        let r = predict(&tm.model, xt.view()).and_then(|pred| accuracy(&pred, target.labels()));
        with_context(CurveRole::Transfer, fractions[p], s, r)
    })?;
    let replicates =
        Array2::from_shape_vec((fractions.len(), n_reps), flat).expect("grid x replicates");
    let sizes = models
        .models
        .iter()
        .map(|row| row[0].selection.len())
        .collect();
    AccuracyCurve::new(CurveRole::Transfer, models.grid.clone(), replicates, sizes)
}

/// Train on source sub-samples, predict the entire target (τ-transfer).
pub fn transfer_curve(pair: &TaskPair, cfg: &ProtocolConfig) -> Result<AccuracyCurve> {
    let models = train_transfer_models(pair.source(), cfg)?;
    score_transfer(&models, pair.target(), cfg)
}

/// Voxels ranked on the full source task, one selection per grid point.
pub fn source_selections(
    source: &ContrastDataset,
    cfg: &ProtocolConfig,
) -> Result<Vec<VoxelSelection>> {
    cfg.validate()?;
    let source = cfg.prepare(source);
    let ranking = ranking_of(&source)?;
    cfg.grid(source.k())?
        .fractions()
        .iter()
        .map(|&p| ranking.top(p, cfg.min_voxels))
        .collect()
}

/// Source-ranked voxels, classifier trained and tested on the target by
/// cross-validation (τ-selection).
pub fn selection_transfer_curve(pair: &TaskPair, cfg: &ProtocolConfig) -> Result<AccuracyCurve> {
    let selections = source_selections(pair.source(), cfg)?;
    let target = cfg.prepare(pair.target());
    let grid = cfg.grid(target.k())?;
    cv_with_fixed_selections(
        CurveRole::SelectionTransfer,
        &target,
        grid,
        &selections,
        cfg,
    )
}
