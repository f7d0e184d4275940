//! Dataset loading, synthesis and label corruption.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::nn::{LabeledDataset, NnError};
use crate::rng;

/// Number of classes in IDX digit datasets.
pub const IDX_CLASSES: usize = 10;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad IDX magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic { path: String, found: u32, expected: u32 },
    #[error("{path}: truncated file ({detail})")]
    Truncated { path: String, detail: String },
    #[error("sample {index}: label {label} is not below {classes}")]
    LabelOutOfRange { index: usize, label: usize, classes: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path} line {line}: {detail}")]
    Csv { path: String, line: usize, detail: String },
    #[error("{0}: no samples")]
    Empty(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    /// IDX: divide by 255. CSV: per-feature min-max scaling into `[0, 1]`.
    #[default]
    UnitRange,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    IdxFiles { images: PathBuf, labels: PathBuf },
    Csv { path: PathBuf },
    SyntheticGaussian { d: usize, m: usize, c: usize, separation: f64, seed: u64 },
    /// Basis-vector inputs of the lower-bound construction.
    AdversarialBasis { k: u32, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub source: Source,
    pub limit: Option<usize>,
    pub normalize: Normalize,
    pub random_label_fraction: f64,
    pub label_seed: u64,
}

impl DatasetSpec {
    pub fn new(source: Source) -> Self {
        Self { source, limit: None, normalize: Normalize::UnitRange, random_label_fraction: 0.0, label_seed: 0 }
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.limit == Some(0) {
            return Err(DataError::InvalidArgument("limit must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.random_label_fraction) {
            return Err(DataError::InvalidArgument(format!(
                "random label fraction must lie in [0, 1], got {}",
                self.random_label_fraction
            )));
        }
        Ok(())
    }

    /// Loads the source, then applies the limit and label corruption.
    pub fn load(&self) -> Result<LabeledDataset, DataError> {
        self.validate()?;
        let data = match &self.source {
            Source::IdxFiles { images, labels } => load_idx(images, labels, self)?,
            Source::Csv { path } => load_csv(path, self)?,
            Source::SyntheticGaussian { d, m, c, separation, seed } => {
                let data = synthetic_gaussian(*d, *m, *c, *seed, *separation)?;
                self.limit.map_or(data.clone(), |n| data.truncated(n))
            }
            Source::AdversarialBasis { k, n } => {
                let data = adversarial_basis(*k, *n)?;
                self.limit.map_or(data.clone(), |l| data.truncated(l))
            }
        };
        if self.random_label_fraction > 0.0 {
            randomize_labels(&data, self.random_label_fraction, self.label_seed)
        } else {
            Ok(data)
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.display().to_string(), source }
}

struct Idx {
    dims: Vec<usize>,
    payload: Vec<u8>,
}

fn read_idx(path: &Path, magic: u32, ndims: usize) -> Result<Idx, DataError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let p = path.display().to_string();
    let truncated = |detail: String| DataError::Truncated { path: p.clone(), detail };
    if bytes.len() < 4 {
        return Err(truncated("missing header".into()));
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if found != magic {
        return Err(DataError::BadMagic { path: p.clone(), found, expected: magic });
    }
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(truncated("missing dimensions".into()));
    }
    let dims: Vec<usize> = (0..ndims)
        .map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize)
        .collect();
    let need: usize = dims.iter().product();
    if bytes.len() < header + need {
        return Err(truncated(format!("need {} payload bytes, found {}", need, bytes.len() - header)));
    }
    Ok(Idx { dims, payload: bytes[header..header + need].to_vec() })
}

/// Reads an IDX image file (`0x803`) and label file (`0x801`).
pub fn load_idx(images: &Path, labels: &Path, spec: &DatasetSpec) -> Result<LabeledDataset, DataError> {
    let img = read_idx(images, IDX_IMAGES_MAGIC, 3)?;
    let lab = read_idx(labels, IDX_LABELS_MAGIC, 1)?;
    let (n, d) = (img.dims[0], img.dims[1] * img.dims[2]);
    if n != lab.dims[0] {
        return Err(DataError::CountMismatch { images: n, labels: lab.dims[0] });
    }
    if n == 0 || d == 0 {
        return Err(DataError::Empty(images.display().to_string()));
    }
    let take = spec.limit.map_or(n, |l| l.min(n));
    let y: Vec<usize> = lab.payload[..take].iter().map(|&b| usize::from(b)).collect();
    if let Some((index, &label)) = y.iter().enumerate().find(|(_, &l)| l >= IDX_CLASSES) {
        return Err(DataError::LabelOutOfRange { index, label, classes: IDX_CLASSES });
    }
    let scale = match spec.normalize {
        Normalize::UnitRange => 1.0 / 255.0,
        Normalize::None => 1.0,
    };
    let x: Vec<f64> = img.payload[..take * d].iter().map(|&b| f64::from(b) * scale).collect();
    let name = images.file_name().map_or("idx".into(), |s| s.to_string_lossy().into_owned());
    Ok(LabeledDataset::new(Matrix::new(take, d, x)?, y, IDX_CLASSES, name)?)
}

/// Reads comma-separated rows of features followed by an integer label. A
/// first row that does not parse as numbers is treated as a header.
pub fn load_csv(path: &Path, spec: &DatasetSpec) -> Result<LabeledDataset, DataError> {
    let p = path.display().to_string();
    let csv_err = |line: u64, detail: String| DataError::Csv { path: p.clone(), line: line as usize, detail };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io { path: p.clone(), source },
            other => DataError::Csv { path: p.clone(), line: 0, detail: format!("{other:?}") },
        })?;
    let limit = spec.limit.unwrap_or(usize::MAX);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(idx as u64 + 1, |pos| pos.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if width.is_none() && idx == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if y.len() >= limit {
            break;
        }
        let w = *width.get_or_insert(record.len());
        if w < 2 {
            return Err(csv_err(line, "need at least one feature and a label".into()));
        }
        if record.len() != w {
            return Err(csv_err(line, format!("expected {w} fields, found {}", record.len())));
        }
        for f in record.iter().take(w - 1) {
            let v: f64 = f.parse().map_err(|_| csv_err(line, format!("non-numeric field {f:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(line, format!("non-finite field {f:?}")));
            }
            x.push(v);
        }
        let label = &record[w - 1];
        y.push(label.parse::<usize>().map_err(|_| csv_err(line, format!("label {label:?} is not a class index")))?);
    }
    let (m, d) = match width {
        Some(w) if !y.is_empty() => (y.len(), w - 1),
        _ => return Err(DataError::Empty(p.clone())),
    };
    if spec.normalize == Normalize::UnitRange {
        for j in 0..d {
            let col = (0..m).map(|i| x[i * d + j]);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let span = hi - lo;
            for i in 0..m {
                let v = &mut x[i * d + j];
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
    }
    let classes = y.iter().max().map_or(1, |&l| l + 1);
    let name = path.file_name().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    Ok(LabeledDataset::new(Matrix::new(m, d, x)?, y, classes, name)?)
}

/// Gaussian blobs: `c` means on a sphere of radius `separation`, unit
/// normal noise. Each class gets `floor(m / c)` samples, with the remainder
/// going to class 0. Samples are shuffled.
pub fn synthetic_gaussian(d: usize, m: usize, c: usize, seed: u64, separation: f64) -> Result<LabeledDataset, DataError> {
    if c < 2 || d == 0 || m < c {
        return Err(DataError::InvalidArgument(format!("need c >= 2, d >= 1, m >= c; got d={d}, m={m}, c={c}")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(DataError::InvalidArgument(format!("separation must be nonnegative, got {separation}")));
    }
    let mut r = rng::substream(seed, "synthetic");
    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
            let n = crate::linalg::l2_norm(&v).max(1e-300);
            v.into_iter().map(|x| separation * x / n).collect()
        })
        .collect();
    let per = m / c;
    let mut y: Vec<usize> = (0..c).flat_map(|k| std::iter::repeat(k).take(per)).collect();
    y.extend(std::iter::repeat(0).take(m - per * c));
    y.shuffle(&mut r);
    let mut x = Vec::with_capacity(m * d);
    for &label in &y {
        for mean in &means[label] {
            let z: f64 = StandardNormal.sample(&mut r);
            x.push(mean + z);
        }
    }
    Ok(LabeledDataset::new(Matrix::new(m, d, x)?, y, c, format!("gaussian-d{d}-m{m}-c{c}-s{separation}"))?)
}

/// `m = n 2^k` samples; sample `i` (0-based) is the basis vector `e_{i / n}`.
pub fn adversarial_basis(k: u32, n: usize) -> Result<LabeledDataset, DataError> {
    if n == 0 || k >= 31 {
        return Err(DataError::InvalidArgument(format!("need n >= 1 and small k; got k={k}, n={n}")));
    }
    let dim = 1usize << k;
    let m = n * dim;
    let x = Matrix::from_fn(m, dim, |i, j| if i / n == j { 1.0 } else { 0.0 });
    Ok(LabeledDataset::new(x, vec![0; m], 1, format!("basis-k{k}-n{n}"))?)
}

/// Resamples the labels of a seeded `floor(fraction m)`-subset uniformly
/// from `[0, c)`. A resampled label may equal the original.
pub fn randomize_labels(data: &LabeledDataset, fraction: f64, seed: u64) -> Result<LabeledDataset, DataError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DataError::InvalidArgument(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let m = data.m();
    let count = (fraction * m as f64).floor() as usize;
    let mut r = rng::substream(seed, "labels");
    let mut y = data.y().to_vec();
    for i in rand::seq::index::sample(&mut r, m, count.min(m)) {
        y[i] = r.gen_range(0..data.classes());
    }
    Ok(data.with_labels(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_fixture(dir: &Path, images: &[[u8; 784]], labels: &[u8]) -> (PathBuf, PathBuf) {
        let ip = dir.join("img");
        let lp = dir.join("lab");
        let mut f = std::fs::File::create(&ip).unwrap();
        f.write_all(&0x803u32.to_be_bytes()).unwrap();
        for v in [images.len() as u32, 28, 28] {
            f.write_all(&v.to_be_bytes()).unwrap();
        }
        for im in images {
            f.write_all(im).unwrap();
        }
        let mut g = std::fs::File::create(&lp).unwrap();
        g.write_all(&0x801u32.to_be_bytes()).unwrap();
        g.write_all(&(labels.len() as u32).to_be_bytes()).unwrap();
        g.write_all(labels).unwrap();
        (ip, lp)
    }

    fn idx_spec(ip: &Path, lp: &Path) -> DatasetSpec {
        DatasetSpec::new(Source::IdxFiles { images: ip.into(), labels: lp.into() })
    }

    #[test]
    fn idx_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = [0u8; 784];
        a[0] = 51;
        let mut b = [0u8; 784];
        b[783] = 255;
        let (ip, lp) = idx_fixture(dir.path(), &[a, b], &[3, 9]);
        let spec = idx_spec(&ip, &lp);
        let data = spec.load().unwrap();
        assert_eq!(data.x().shape(), (2, 784));
        assert_eq!(data.x().get(0, 0), 51.0 / 255.0);
        assert_eq!(data.x().get(1, 783), 1.0);
        assert_eq!(data.y(), &[3, 9]);
        let one = DatasetSpec { limit: Some(1), ..spec }.load().unwrap();
        assert_eq!(one.m(), 1);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = idx_fixture(dir.path(), &[[0; 784], [0; 784]], &[1]);
        assert!(matches!(idx_spec(&ip, &lp).load(), Err(DataError::CountMismatch { .. })));
        let (ip, lp) = idx_fixture(dir.path(), &[[0; 784]], &[10]);
        assert!(matches!(idx_spec(&ip, &lp).load(), Err(DataError::LabelOutOfRange { .. })));
        assert!(matches!(idx_spec(&lp, &lp).load(), Err(DataError::BadMagic { .. })));
        let bytes = std::fs::read(&ip).unwrap();
        std::fs::write(&ip, &bytes[..100]).unwrap();
        assert!(matches!(idx_spec(&ip, &lp).load(), Err(DataError::Truncated { .. })));
    }

    fn csv(dir: &Path, text: &str) -> DatasetSpec {
        let p = dir.join("d.csv");
        std::fs::write(&p, text).unwrap();
        DatasetSpec { normalize: Normalize::None, ..DatasetSpec::new(Source::Csv { path: p }) }
    }

    #[test]
    fn csv_examples() {
        let dir = tempfile::tempdir().unwrap();
        let plain = csv(dir.path(), "1,2,0\n3,4,1\n").load().unwrap();
        assert_eq!((plain.m(), plain.d(), plain.classes()), (2, 2, 2));
        let headed = csv(dir.path(), "a,b,label\n1,2,0\n3,4,1\n").load().unwrap();
        assert_eq!(headed.x(), plain.x());
        assert_eq!(headed.y(), plain.y());
        match csv(dir.path(), "1,2,0\n3,1\n").load() {
            Err(DataError::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(csv(dir.path(), "").load(), Err(DataError::Empty(_))));
        assert!(matches!(csv(dir.path(), "1,2,0\n1,x,1\n").load(), Err(DataError::Csv { line: 2, .. })));
    }

    #[test]
    fn csv_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec { normalize: Normalize::UnitRange, ..csv(dir.path(), "1,5,0\n3,5,1\n2,5,0\n") };
        let data = spec.load().unwrap();
        assert_eq!(data.x().column(0), vec![0.0, 1.0, 0.5]);
        assert_eq!(data.x().column(1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn synthetic_examples() {
        let one_each = synthetic_gaussian(3, 4, 4, 1, 2.0).unwrap();
        let mut y = one_each.y().to_vec();
        y.sort();
        assert_eq!(y, vec![0, 1, 2, 3]);
        let uneven = synthetic_gaussian(2, 11, 3, 1, 1.0).unwrap();
        let count0 = uneven.y().iter().filter(|&&l| l == 0).count();
        assert_eq!(count0, 5);
        assert_eq!(synthetic_gaussian(3, 20, 2, 5, 1.0).unwrap(), synthetic_gaussian(3, 20, 2, 5, 1.0).unwrap());
        assert!(synthetic_gaussian(3, 20, 1, 5, 1.0).is_err());
    }

    #[test]
    fn synthetic_zero_separation_means_coincide() {
        // With zero separation the class means are equal, so class-wise sample
        // means agree up to noise.
        let data = synthetic_gaussian(2, 20_000, 2, 3, 0.0).unwrap();
        let mut sums = [[0.0; 2]; 2];
        let mut counts = [0.0; 2];
        for i in 0..data.m() {
            let l = data.y()[i];
            counts[l] += 1.0;
            for j in 0..2 {
                sums[l][j] += data.x().get(i, j);
            }
        }
        for j in 0..2 {
            assert!((sums[0][j] / counts[0] - sums[1][j] / counts[1]).abs() < 0.06);
        }
    }

    #[test]
    fn synthetic_separated_classes_are_linearly_separable() {
        let data = synthetic_gaussian(5, 500, 3, 7, 10.0).unwrap();
        // One-epoch multiclass perceptron.
        let mut w = vec![vec![0.0; 6]; 3];
        for i in 0..data.m() {
            let mut x = data.sample(i).to_vec();
            x.push(1.0);
            let score = |w: &Vec<f64>| crate::linalg::dot(w, &x);
            let pred = (0..3).max_by(|&a, &b| score(&w[a]).total_cmp(&score(&w[b]))).unwrap();
            let y = data.y()[i];
            if pred != y {
                for j in 0..6 {
                    w[y][j] += x[j];
                    w[pred][j] -= x[j];
                }
            }
        }
        let correct = (0..data.m())
            .filter(|&i| {
                let mut x = data.sample(i).to_vec();
                x.push(1.0);
                let pred = (0..3)
                    .max_by(|&a, &b| crate::linalg::dot(&w[a], &x).total_cmp(&crate::linalg::dot(&w[b], &x)))
                    .unwrap();
                pred == data.y()[i]
            })
            .count();
        assert!(correct as f64 / 500.0 > 0.95, "accuracy {correct}/500");
    }

    #[test]
    fn randomize_examples() {
        let base = synthetic_gaussian(1, 100_000, 2, 1, 1.0).unwrap();
        assert_eq!(randomize_labels(&base, 0.0, 3).unwrap(), base);
        let all = randomize_labels(&base, 1.0, 3).unwrap();
        let differ = all.y().iter().zip(base.y()).filter(|(a, b)| a != b).count() as f64 / 1e5;
        assert!((differ - 0.5).abs() < 0.01, "{differ}");
        assert_eq!(all, randomize_labels(&base, 1.0, 3).unwrap());
    }

    #[test]
    fn basis_dataset() {
        let data = adversarial_basis(1, 2).unwrap();
        assert_eq!(data.x().shape(), (4, 2));
        assert_eq!(data.x().row(1), &[1.0, 0.0]);
        assert_eq!(data.x().row(2), &[0.0, 1.0]);
    }
}
