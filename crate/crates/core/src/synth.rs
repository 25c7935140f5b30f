//! Synthetic task pairs with planted Gaussian activation blobs.
//!
//! A blob adds `amplitude * exp(-d^2 / (2 s^2))` to the positive class and
//! subtracts it from the negative class, with `s` chosen so the field falls
//! to half its peak at distance `radius`. Ground-truth masks hold the voxels
//! within `radius` of a blob centre, i.e. where that blob's field is at
//! least half its amplitude.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ContrastDataset, GridGeometry, TaskPair};
use crate::error::{Error, Result};
use crate::par::{self, derive_seed};

/// `FWHM = 2 sqrt(2 ln 2) sigma`.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl BlobSpec {
    pub fn new(center: [f64; 3], radius: f64, amplitude: f64) -> Self {
        Self {
            center,
            radius,
            amplitude,
        }
    }

    fn sigma(&self) -> f64 {
        2.0 * self.radius / FWHM_PER_SIGMA
    }

    fn dist2(&self, coord: [usize; 3]) -> f64 {
        (0..3)
            .map(|a| (coord[a] as f64 - self.center[a]).powi(2))
            .sum()
    }

    pub fn field_at(&self, coord: [usize; 3]) -> f64 {
        let s = self.sigma();
        self.amplitude * (-self.dist2(coord) / (2.0 * s * s)).exp()
    }

    pub fn contains(&self, coord: [usize; 3]) -> bool {
        self.dist2(coord) <= self.radius * self.radius * (1.0 + 1e-12)
    }
}

fn default_source_name() -> String {
    "source".into()
}

fn default_target_name() -> String {
    "target".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub geometry: GridGeometry,
    pub n_per_class: usize,
    #[serde(default)]
    pub shared_blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub source_only_blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub target_only_blobs: Vec<BlobSpec>,
    pub noise_sigma: f64,
    #[serde(default)]
    pub smoothing_fwhm: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_source_name")]
    pub source_name: String,
    #[serde(default = "default_target_name")]
    pub target_name: String,
}

impl SyntheticSpec {
    /// 20 x 25 x 20 grid (10,000 voxels), 40 samples per class, unit noise,
    /// 2-voxel smoothing. One shared blob and one target-only blob, both of
    /// amplitude 0.6 and radius 3.
    pub fn desk_default() -> Self {
        Self {
            geometry: GridGeometry::new([20, 25, 20]).expect("valid dims"),
            n_per_class: 40,
            shared_blobs: vec![BlobSpec::new([10.0, 12.0, 10.0], 3.0, 0.6)],
            source_only_blobs: vec![],
            target_only_blobs: vec![BlobSpec::new([4.0, 5.0, 4.0], 3.0, 0.6)],
            noise_sigma: 1.0,
            smoothing_fwhm: 2.0,
            seed: 0,
            source_name: default_source_name(),
            target_name: default_target_name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class < crate::dataset::MIN_PER_CLASS {
            return Err(Error::Config(format!(
                "n_per_class = {} below {}",
                self.n_per_class,
                crate::dataset::MIN_PER_CLASS
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise_sigma = {} invalid",
                self.noise_sigma
            )));
        }
        if !(self.smoothing_fwhm >= 0.0) || !self.smoothing_fwhm.is_finite() {
            return Err(Error::Config(format!(
                "smoothing_fwhm = {} invalid",
                self.smoothing_fwhm
            )));
        }
        let lists = [
            ("shared_blobs", &self.shared_blobs),
            ("source_only_blobs", &self.source_only_blobs),
            ("target_only_blobs", &self.target_only_blobs),
        ];
        for (list, blobs) in lists {
            for (i, b) in blobs.iter().enumerate() {
                check_blob(self.geometry, list, i, b)?;
            }
        }
        Ok(())
    }

    /// The spec with source-only and target-only blobs (and names) exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            source_only_blobs: self.target_only_blobs.clone(),
            target_only_blobs: self.source_only_blobs.clone(),
            source_name: self.target_name.clone(),
            target_name: self.source_name.clone(),
            ..self.clone()
        }
    }
}

fn check_blob(geometry: GridGeometry, list: &str, i: usize, b: &BlobSpec) -> Result<()> {
    if !(b.radius > 0.0) || !b.radius.is_finite() || !b.amplitude.is_finite() {
        return Err(Error::Config(format!(
            "{list}[{i}]: radius must be positive and values finite"
        )));
    }
    let dims = geometry.dims();
    let inside = (0..3).all(|a| b.center[a] >= 0.0 && b.center[a] <= (dims[a] - 1) as f64);
    if !inside {
        return Err(Error::Config(format!(
            "{list}[{i}]: center {:?} outside grid {:?}",
            b.center, dims
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dims: [usize; 3],
    pub shared_mask: Vec<usize>,
    pub source_mask: Vec<usize>,
    pub target_mask: Vec<usize>,
}

fn mask(geometry: GridGeometry, blobs: &[&BlobSpec]) -> Vec<usize> {
    (0..geometry.voxel_count())
        .filter(|&i| {
            let c = geometry.coord(i);
            blobs.iter().any(|b| b.contains(c))
        })
        .collect()
}

fn field(geometry: GridGeometry, blobs: &[&BlobSpec]) -> Vec<f64> {
    (0..geometry.voxel_count())
        .map(|i| {
            let c = geometry.coord(i);
            blobs.iter().map(|b| b.field_at(c)).sum()
        })
        .collect()
}

fn fingerprint(seed: u64, lists: [&[BlobSpec]; 3]) -> u64 {
    let mut tags = Vec::new();
    for (tag, list) in lists.iter().enumerate() {
        tags.push(0xB10B_0000 + tag as u64);
        for b in *list {
            tags.extend(b.center.iter().map(|v| v.to_bits()));
            tags.push(b.radius.to_bits());
            tags.push(b.amplitude.to_bits());
        }
    }
    derive_seed(seed, &tags)
}

fn gaussian_kernel(fwhm: f64) -> Vec<f64> {
    let sigma = fwhm / FWHM_PER_SIGMA;
    let half = (4.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-half..=half)
        .map(|t| (-(t as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable isotropic Gaussian smoothing of one volume, zero outside the grid.
pub fn smooth_volume(volume: &mut [f64], geometry: GridGeometry, fwhm: f64) {
    if fwhm <= 0.0 {
        return;
    }
    let kernel = gaussian_kernel(fwhm);
    let half = (kernel.len() / 2) as isize;
    let dims = geometry.dims();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut scratch = vec![0.0; volume.len()];
    for axis in 0..3 {
        let len = dims[axis] as isize;
        for (i, out) in scratch.iter_mut().enumerate() {
            let pos = geometry.coord(i)[axis] as isize;
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let q = pos + t as isize - half;
                if q >= 0 && q < len {
                    let j = (i as isize + (q - pos) * strides[axis] as isize) as usize;
                    acc += w * volume[j];
                }
            }
            *out = acc;
        }
        volume.copy_from_slice(&scratch);
    }
}

fn generate_task(
    name: &str,
    geometry: GridGeometry,
    signal: &[f64],
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<ContrastDataset> {
    let k = geometry.voxel_count();
    let n = 2 * spec.n_per_class;
    let labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * k);
    for &label in &labels {
        let sign = f64::from(label);
        values.extend(signal.iter().map(|s| {
            let noise: f64 = rng.sample(StandardNormal);
            sign * s + spec.noise_sigma * noise
        }));
    }
    par::for_each_chunk_mut(&mut values, k, |_, row| {
        smooth_volume(row, geometry, spec.smoothing_fwhm)
    });
    let samples = Array2::from_shape_vec((n, k), values).map_err(|e| Error::Data(e.to_string()))?;
    ContrastDataset::new(name, samples, labels, geometry)
}

/// Builds one task whose signal is the sum of `blobs`, using the geometry,
/// sample count, noise and smoothing of `spec`. The noise stream is keyed on
/// the blob list and `spec.seed`.
pub fn generate_single(
    name: &str,
    blobs: &[BlobSpec],
    spec: &SyntheticSpec,
) -> Result<ContrastDataset> {
    spec.validate()?;
    let g = spec.geometry;
    for (i, b) in blobs.iter().enumerate() {
        check_blob(g, "blobs", i, b)?;
    }
    let refs: Vec<&BlobSpec> = blobs.iter().collect();
    let seed = fingerprint(spec.seed, [blobs, &[], &[]]);
    generate_task(name, g, &field(g, &refs), spec, seed)
}

/// Builds the source and target tasks plus their ground-truth masks.
/// Noise streams are keyed on each task's blob content, so
/// [`SyntheticSpec::swapped`] reproduces the two datasets with roles exchanged.
pub fn generate_pair(spec: &SyntheticSpec) -> Result<(TaskPair, GroundTruth)> {
    spec.validate()?;
    let g = spec.geometry;
    let shared: Vec<&BlobSpec> = spec.shared_blobs.iter().collect();
    let source_blobs: Vec<&BlobSpec> = shared
        .iter()
        .copied()
        .chain(&spec.source_only_blobs)
        .collect();
    let target_blobs: Vec<&BlobSpec> = shared
        .iter()
        .copied()
        .chain(&spec.target_only_blobs)
        .collect();

    let fp_source = fingerprint(
        spec.seed,
        [
            &spec.shared_blobs,
            &spec.source_only_blobs,
            &spec.target_only_blobs,
        ],
    );
    let fp_target = fingerprint(
        spec.seed,
        [
            &spec.shared_blobs,
            &spec.target_only_blobs,
            &spec.source_only_blobs,
        ],
    );
    let (seed_source, seed_target) = if fp_source == fp_target {
        (derive_seed(fp_source, &[0]), derive_seed(fp_source, &[1]))
    } else {
        (fp_source, fp_target)
    };

    let source = generate_task(
        &spec.source_name,
        g,
        &field(g, &source_blobs),
        spec,
        seed_source,
    )?;
    let target = generate_task(
        &spec.target_name,
        g,
        &field(g, &target_blobs),
        spec,
        seed_target,
    )?;
    let truth = GroundTruth {
        dims: g.dims(),
        shared_mask: mask(g, &shared),
        source_mask: mask(g, &source_blobs),
        target_mask: mask(g, &target_blobs),
    };
    Ok((TaskPair::new(source, target)?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Selectivity {
    pub precision: f64,
    pub recall: f64,
    pub dice: f64,
}

/// Overlap of a selection with a truth mask. An empty truth mask (or an
/// empty selection) scores zero on every measure.
pub fn selectivity_scores(selected: &[usize], truth_mask: &[usize]) -> Selectivity {
    let mut sel = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    let mut truth = truth_mask.to_vec();
    truth.sort_unstable();
    truth.dedup();
    if sel.is_empty() || truth.is_empty() {
        return Selectivity {
            precision: 0.0,
            recall: 0.0,
            dice: 0.0,
        };
    }
    let hits = sel
        .iter()
        .filter(|i| truth.binary_search(i).is_ok())
        .count() as f64;
    Selectivity {
        precision: hits / sel.len() as f64,
        recall: hits / truth.len() as f64,
        dice: 2.0 * hits / (sel.len() + truth.len()) as f64,
    }
}
