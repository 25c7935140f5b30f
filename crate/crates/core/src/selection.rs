//! Cubic percentile grid and top-fraction voxel selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::FeatureScores;

pub const DEFAULT_N_POINTS: usize = 15;
pub const DEFAULT_MIN_VOXELS: usize = 150;

/// Selection fractions whose cube roots are equally spaced, from
/// `min_voxels / k` up to exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileGrid {
    fractions: Vec<f64>,
}

impl PercentileGrid {
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn percents(&self) -> Vec<f64> {
        self.fractions.iter().map(|f| 100.0 * f).collect()
    }

    /// Wraps an explicit fraction list (strictly increasing, in `(0, 1]`).
    pub fn from_fractions(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::Config("empty fraction grid".into()));
        }
        if fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::Config("grid fractions must lie in (0, 1]".into()));
        }
        if fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "grid fractions must be strictly increasing".into(),
            ));
        }
        Ok(Self { fractions })
    }
}

/// `fractions[i] = (r + i/(n_points-1) * (1 - r))^3`, `r = (min_voxels/k)^(1/3)`.
/// Endpoints are pinned exactly to `min_voxels / k` and `1.0`. When
/// `min_voxels == k` the grid collapses to the single point `1.0`.
pub fn cubic_grid(k: usize, n_points: usize, min_voxels: usize) -> Result<PercentileGrid> {
    if k == 0 || min_voxels == 0 {
        return Err(Error::Config("k and min_voxels must be positive".into()));
    }
    if n_points < 2 {
        return Err(Error::Config(format!(
            "n_points must be at least 2, got {n_points}"
        )));
    }
    if min_voxels > k {
        return Err(Error::Config(format!(
            "min_voxels = {min_voxels} exceeds k = {k}"
        )));
    }
    if min_voxels == k {
        return Ok(PercentileGrid {
            fractions: vec![1.0],
        });
    }
    let first = min_voxels as f64 / k as f64;
    let r = first.cbrt();
    let last = n_points - 1;
    let fractions = (0..n_points)
        .map(|i| match i {
            0 => first,
            i if i == last => 1.0,
            i => (r + (i as f64 / last as f64) * (1.0 - r)).powi(3),
        })
        .collect();
    Ok(PercentileGrid { fractions })
}

/// A concrete voxel subset at one grid fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSelection {
    fraction: f64,
    indices: Vec<usize>,
}

impl VoxelSelection {
    pub fn new(fraction: f64, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { fraction, indices }
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn all(k: usize) -> Self {
        Self {
            fraction: 1.0,
            indices: (0..k).collect(),
        }
    }
}

/// Number of voxels kept at `fraction`: round-half-up of `fraction * k`,
/// raised to `min_voxels`, clamped to `[1, k]`.
pub fn selection_size(k: usize, fraction: f64, min_voxels: usize) -> usize {
    let rounded = (fraction * k as f64 + 0.5).floor() as usize;
    rounded.max(min_voxels).clamp(1, k)
}

/// Features ordered best first: larger score wins (`+inf` above every finite
/// value), ties go to the smaller index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_scores(scores: &FeatureScores) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Stat("cannot rank an empty score vector".into()));
        }
        let s = scores.as_slice();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        Ok(Self { order })
    }

    pub fn k(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn top(&self, fraction: f64, min_voxels: usize) -> Result<VoxelSelection> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!("fraction {fraction} outside (0, 1]")));
        }
        let size = selection_size(self.k(), fraction, min_voxels);
        Ok(VoxelSelection::new(fraction, self.order[..size].to_vec()))
    }
}

/// The highest-scoring voxels at `fraction`, returned in ascending index order.
pub fn select_top(
    scores: &FeatureScores,
    fraction: f64,
    min_voxels: usize,
) -> Result<VoxelSelection> {
    FeatureRanking::from_scores(scores)?.top(fraction, min_voxels)
}
