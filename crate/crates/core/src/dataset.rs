//! Contrast datasets, task pairs and the XFD1 container format.
//!
//! XFD1 layout (all integers little-endian):
//!
//! ```text
//! "XFD1" | u32 n | u32 k | u32 dims[3] | n label bytes (0 => -1, 1 => +1) | n*k f64, row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::selection::VoxelSelection;

pub const MAGIC: &[u8; 4] = b"XFD1";
/// Magic plus `n`, `k` and the three grid dimensions.
pub const HEADER_LEN: usize = 4 + 4 + 4 + 12;
/// Smallest per-class count that still admits 6-fold stratified CV.
pub const MIN_PER_CLASS: usize = 6;
pub const MIN_SAMPLES: usize = 12;

/// Rectangular voxel grid. Linear index `i = x + dims[0] * (y + dims[1] * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GridGeometry {
    dims: [usize; 3],
}

impl GridGeometry {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Config(format!(
                "grid dims must be positive, got {dims:?}"
            )));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Config(format!("grid dims {dims:?} overflow")))?;
        Ok(Self { dims })
    }

    /// A flat `k x 1 x 1` grid.
    pub fn flat(k: usize) -> Result<Self> {
        Self::new([k, 1, 1])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn coord(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn index(&self, coord: [usize; 3]) -> usize {
        let [nx, ny, _] = self.dims;
        coord[0] + nx * (coord[1] + ny * coord[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastDataset {
    name: String,
    samples: Array2<f64>,
    labels: Vec<i8>,
    geometry: GridGeometry,
}

impl ContrastDataset {
    /// Builds a dataset and checks every invariant, including the
    /// per-class minimum needed for 6-fold cross-validation.
    pub fn new(
        name: impl Into<String>,
        samples: Array2<f64>,
        labels: Vec<i8>,
        geometry: GridGeometry,
    ) -> Result<Self> {
        let d = Self::new_unchecked_counts(name, samples, labels, geometry)?;
        let (neg, pos) = d.class_counts();
        if d.n() < MIN_SAMPLES {
            return Err(Error::Data(format!(
                "{} samples, need at least {MIN_SAMPLES}",
                d.n()
            )));
        }
        if neg < MIN_PER_CLASS || pos < MIN_PER_CLASS {
            return Err(Error::Data(format!(
                "class counts ({neg}, {pos}), need at least {MIN_PER_CLASS} per class"
            )));
        }
        Ok(d)
    }

    /// Same as [`ContrastDataset::new`] without the sample-count minimums.
    /// Used for row subsets (sub-samples, CV blocks).
    pub(crate) fn new_unchecked_counts(
        name: impl Into<String>,
        samples: Array2<f64>,
        labels: Vec<i8>,
        geometry: GridGeometry,
    ) -> Result<Self> {
        let (n, k) = samples.dim();
        if k == 0 {
            return Err(Error::Data("dataset has no features".into()));
        }
        if labels.len() != n {
            return Err(Error::Dim(format!(
                "{} labels for {n} samples",
                labels.len()
            )));
        }
        if geometry.voxel_count() != k {
            return Err(Error::Dim(format!(
                "geometry {:?} has {} voxels, samples have {k} columns",
                geometry.dims(),
                geometry.voxel_count()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != -1 && l != 1) {
            return Err(Error::Data(format!("label {bad} is not -1 or +1")));
        }
        if let Some(((i, j), v)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value {v} at ({i}, {j})")));
        }
        Ok(Self {
            name: name.into(),
            samples: samples.as_standard_layout().into_owned(),
            labels,
            geometry,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    pub fn k(&self) -> usize {
        self.samples.ncols()
    }

    /// `(count of -1, count of +1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    /// Keeps the selected columns in ascending index order. Selecting every
    /// column returns an equal dataset; otherwise the geometry becomes flat.
    pub fn restrict(&self, sel: &VoxelSelection) -> Result<Self> {
        self.restrict_indices(sel.indices())
    }

    pub fn restrict_indices(&self, indices: &[usize]) -> Result<Self> {
        let k = self.k();
        if let Some(&bad) = indices.iter().find(|&&i| i >= k) {
            return Err(Error::Index { index: bad, len: k });
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(Error::Data("empty selection".into()));
        }
        let geometry = if sorted.len() == k {
            self.geometry
        } else {
            GridGeometry::flat(sorted.len())?
        };
        Ok(Self {
            name: self.name.clone(),
            samples: self.samples.select(Axis(1), &sorted),
            labels: self.labels.clone(),
            geometry,
        })
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n()) {
            return Err(Error::Index {
                index: bad,
                len: self.n(),
            });
        }
        Self::new_unchecked_counts(
            self.name.clone(),
            self.samples.select(Axis(0), rows),
            rows.iter().map(|&r| self.labels[r]).collect(),
            self.geometry,
        )
    }

    /// Z-scores every sample across its features. Constant rows become zero.
    pub fn standardized(&self) -> Self {
        let mut samples = self.samples.clone();
        for mut row in samples.rows_mut() {
            let k = row.len() as f64;
            let mean = row.sum() / k;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
            let sd = var.sqrt();
            row.mapv_inplace(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 });
        }
        Self {
            samples,
            ..self.clone()
        }
    }

    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.samples.clone(),
            labels,
            self.geometry,
        )
    }
}

#[derive(Debug, Clone)]
pub struct TaskPair {
    source: ContrastDataset,
    target: ContrastDataset,
    direction_name: String,
}

impl TaskPair {
    pub fn new(source: ContrastDataset, target: ContrastDataset) -> Result<Self> {
        let name = format!("{} → {}", source.name(), target.name());
        Self::named(source, target, name)
    }

    pub fn named(
        source: ContrastDataset,
        target: ContrastDataset,
        direction_name: impl Into<String>,
    ) -> Result<Self> {
        if source.geometry() != target.geometry() {
            return Err(Error::Dim(format!(
                "source grid {:?} differs from target grid {:?}",
                source.geometry().dims(),
                target.geometry().dims()
            )));
        }
        Ok(Self {
            source,
            target,
            direction_name: direction_name.into(),
        })
    }

    pub fn source(&self) -> &ContrastDataset {
        &self.source
    }

    pub fn target(&self) -> &ContrastDataset {
        &self.target
    }

    pub fn direction_name(&self) -> &str {
        &self.direction_name
    }

    /// The same two tasks with roles exchanged.
    pub fn reversed(&self) -> Self {
        let name = format!("{} → {}", self.target.name(), self.source.name());
        Self {
            source: self.target.clone(),
            target: self.source.clone(),
            direction_name: name,
        }
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn encode_dataset(d: &ContrastDataset) -> Result<Vec<u8>> {
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} exceeds u32")))
    };
    let mut buf = Vec::with_capacity(HEADER_LEN + d.n() + 8 * d.n() * d.k());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&to_u32(d.n(), "n")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(d.k(), "k")?.to_le_bytes());
    for dim in d.geometry.dims() {
        buf.extend_from_slice(&to_u32(dim, "dim")?.to_le_bytes());
    }
    buf.extend(d.labels.iter().map(|&l| u8::from(l == 1)));
    for v in d.samples.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_dataset(bytes: &[u8], name: &str) -> Result<ContrastDataset> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing XFD1 header".into()));
    }
    let n = read_u32(bytes, 4) as usize;
    let k = read_u32(bytes, 8) as usize;
    let dims = [
        read_u32(bytes, 12) as usize,
        read_u32(bytes, 16) as usize,
        read_u32(bytes, 20) as usize,
    ];
    let geometry = GridGeometry::new(dims).map_err(|e| Error::Format(e.to_string()))?;
    if geometry.voxel_count() != k {
        return Err(Error::Format(format!(
            "dims {dims:?} do not multiply to k = {k}"
        )));
    }
    let expected = n
        .checked_mul(k)
        .and_then(|nk| nk.checked_mul(8))
        .and_then(|p| p.checked_add(HEADER_LEN + n))
        .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for n = {n}, k = {k}, found {}",
            bytes.len()
        )));
    }
    let labels = bytes[HEADER_LEN..HEADER_LEN + n]
        .iter()
        .map(|&b| match b {
            0 => Ok(-1),
            1 => Ok(1),
            other => Err(Error::Format(format!("label byte {other:#04x}"))),
        })
        .collect::<Result<Vec<i8>>>()?;
    let values: Vec<f64> = bytes[HEADER_LEN + n..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let samples =
        Array2::from_shape_vec((n, k), values).map_err(|e| Error::Format(e.to_string()))?;
    ContrastDataset::new(name, samples, labels, geometry)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Reads an XFD1 file. The dataset is named after the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<ContrastDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes, &stem(path))
}

pub fn save_dataset(d: &ContrastDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_dataset(d)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Imports a header-less CSV whose first column is the label. Any two
/// distinct label values are accepted; the smaller one maps to -1
/// (numeric order when every label parses as a number, text order otherwise).
pub fn import_csv(path: impl AsRef<Path>, geometry: GridGeometry) -> Result<ContrastDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Format(format!("{other:?}")),
        })?;
    let k = geometry.voxel_count();
    let mut raw_labels = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        if record.len() != k + 1 {
            return Err(Error::Format(format!(
                "row {row} has {} columns, expected label + {k}",
                record.len()
            )));
        }
        raw_labels.push(record[0].to_string());
        for (col, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("row {row}, column {}: {field:?}", col + 1)))?;
            values.push(v);
        }
    }
    let labels = encode_labels(&raw_labels)?;
    let samples = Array2::from_shape_vec((labels.len(), k), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    ContrastDataset::new(stem(path), samples, labels, geometry)
}

fn encode_labels(raw: &[String]) -> Result<Vec<i8>> {
    let mut distinct: Vec<&String> = raw.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::Data(format!(
            "need exactly two label values, found {}",
            distinct.len()
        )));
    }
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    let low = match numeric {
        Some(v) if v[1] < v[0] => distinct[1],
        _ => distinct[0],
    };
    Ok(raw.iter().map(|l| if l == low { -1 } else { 1 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy(n_per_class: usize, k: usize) -> ContrastDataset {
        let n = 2 * n_per_class;
        let samples = Array2::from_shape_fn((n, k), |(i, j)| (i * k + j) as f64 * 0.25 - 3.0);
        let labels = (0..n).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect();
        ContrastDataset::new("toy", samples, labels, GridGeometry::flat(k).unwrap()).unwrap()
    }

    #[test]
    fn geometry_index_round_trips() {
        let g = GridGeometry::new([3, 4, 5]).unwrap();
        assert_eq!(g.voxel_count(), 60);
        for i in 0..60 {
            assert_eq!(g.index(g.coord(i)), i);
        }
        assert_eq!(g.coord(1), [1, 0, 0]);
        assert_eq!(g.coord(3), [0, 1, 0]);
        assert_eq!(g.coord(12), [0, 0, 1]);
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.xfd");
        let d = toy(6, 8);
        save_dataset(&d, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.n(), 12);
        assert_eq!(back.k(), 8);
        assert_eq!(back, d);
    }

    #[test]
    fn file_size_follows_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.xfd");
        save_dataset(&toy(6, 1000), &path).unwrap();
        let size = fs::metadata(&path).unwrap().len() as usize;
        // 24-byte header, 12 label bytes, 12 * 1000 doubles.
        assert_eq!(size, 24 + 12 + 12 * 1000 * 8);
    }

    #[test]
    fn single_class_file_is_rejected() {
        let d = toy(6, 4);
        let mut bytes = encode_dataset(&d).unwrap();
        for b in &mut bytes[HEADER_LEN..HEADER_LEN + 12] {
            *b = 1;
        }
        assert!(matches!(decode_dataset(&bytes, "x"), Err(Error::Data(_))));
    }

    #[test]
    fn nan_entry_is_rejected() {
        let d = toy(6, 4);
        let mut bytes = encode_dataset(&d).unwrap();
        let at = HEADER_LEN + 12;
        bytes[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        match decode_dataset(&bytes, "x") {
            Err(Error::Data(msg)) => assert!(msg.contains("(0, 0)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header_is_format_error() {
        assert!(matches!(
            decode_dataset(b"XFD2\0\0", "x"),
            Err(Error::Format(_))
        ));
        let mut bytes = encode_dataset(&toy(6, 4)).unwrap();
        bytes.pop();
        assert!(matches!(decode_dataset(&bytes, "x"), Err(Error::Format(_))));
    }

    #[test]
    fn small_class_is_rejected() {
        let samples = Array2::zeros((12, 2));
        let mut labels = vec![1i8; 12];
        labels[..5].fill(-1);
        let err = ContrastDataset::new("x", samples, labels, GridGeometry::flat(2).unwrap());
        assert!(matches!(err, Err(Error::Data(_))));
    }

    #[test]
    fn save_to_missing_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("no/such/dir/x.xfd");
        assert!(matches!(
            save_dataset(&toy(6, 2), path),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn restrict_picks_columns() {
        let samples = array![[10.0, 20.0], [30.0, 40.0]];
        let d = ContrastDataset::new_unchecked_counts(
            "x",
            samples,
            vec![-1, 1],
            GridGeometry::flat(2).unwrap(),
        )
        .unwrap();
        let r = d.restrict_indices(&[1]).unwrap();
        assert_eq!(r.samples(), &array![[20.0], [40.0]]);
        assert_eq!(r.labels(), d.labels());
        assert_eq!(d.restrict_indices(&[0, 1]).unwrap(), d);
        assert!(matches!(
            d.restrict_indices(&[2]),
            Err(Error::Index { index: 2, len: 2 })
        ));
    }

    #[test]
    fn nested_restriction_composes() {
        let d = toy(6, 10);
        let outer = [1, 3, 4, 7, 9];
        let inner = [0, 2, 4]; // positions within `outer`
        let composed: Vec<usize> = inner.iter().map(|&i| outer[i]).collect();
        let a = d
            .restrict_indices(&outer)
            .unwrap()
            .restrict_indices(&inner)
            .unwrap();
        let b = d.restrict_indices(&composed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_labels_map_ascending_to_negative() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut text = String::new();
        for i in 0..12 {
            let label = if i < 6 { "10" } else { "2" };
            text.push_str(&format!("{label},{i},{}\n", i * 2));
        }
        fs::write(&path, text).unwrap();
        let d = import_csv(&path, GridGeometry::new([2, 1, 1]).unwrap()).unwrap();
        assert_eq!(&d.labels()[..6], &[1; 6]);
        assert_eq!(&d.labels()[6..], &[-1; 6]);
        assert_eq!(d.samples()[[3, 1]], 6.0);
    }

    #[test]
    fn standardized_rows_have_zero_mean_unit_variance() {
        let d = toy(6, 5).standardized();
        for row in d.samples().rows() {
            let mean = row.sum() / 5.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_requires_matching_geometry() {
        let a = toy(6, 4);
        let b = toy(6, 5);
        assert!(matches!(TaskPair::new(a, b), Err(Error::Dim(_))));
    }
}
