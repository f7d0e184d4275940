//! The two-layer ReLU network `f(x) = V [U x]_+`, its margin and loss
//! functionals, and the checkpoint format.
//!
//! The ramp loss is the continuous one: 1 below margin 0, `1 - mu/gamma` on
//! `[0, gamma]`, 0 above `gamma`. At `gamma = 0` the margin loss becomes the
//! classification error, and a tie (`mu = 0`) counts as an error.

mod checkpoint;

pub use checkpoint::{decode, encode, load_checkpoint, save_checkpoint, sidecar_path, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Strategy};
use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// How the weights were drawn. Stored with the network because every
/// distance-to-initialization measure depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    /// `U_ij ~ U(-1/sqrt(d), 1/sqrt(d))`, `V_ij ~ U(-1/sqrt(h), 1/sqrt(h))`.
    #[default]
    UniformFanIn,
    /// Every entry `~ N(0, sigma^2)`.
    Gaussian { sigma: f64 },
    /// Weights supplied directly.
    Explicit,
}

impl std::fmt::Display for InitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitScheme::UniformFanIn => write!(f, "uniform_fan_in"),
            InitScheme::Gaussian { sigma } => write!(f, "gaussian({sigma})"),
            InitScheme::Explicit => write!(f, "explicit"),
        }
    }
}

/// Two-layer ReLU network without biases, with the frozen reference weights
/// `U0`, `V0` that the capacity measures are taken against.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    u: Matrix,
    v: Matrix,
    u0: Matrix,
    v0: Matrix,
    seed: u64,
    init: InitScheme,
}

impl TwoLayerNet {
    /// `u` is `h x d`, `v` is `c x h`; `u0`, `v0` must match.
    pub fn new(
        u: Matrix,
        v: Matrix,
        u0: Matrix,
        v0: Matrix,
        seed: u64,
        init: InitScheme,
    ) -> Result<Self, NnError> {
        if v.cols() != u.rows() {
            return Err(NnError::Shape(format!(
                "V is {:?} but U has {} rows",
                v.shape(),
                u.rows()
            )));
        }
        if u0.shape() != u.shape() || v0.shape() != v.shape() {
            return Err(NnError::Shape(format!(
                "reference shapes {:?}/{:?} differ from {:?}/{:?}",
                u0.shape(),
                v0.shape(),
                u.shape(),
                v.shape()
            )));
        }
        Ok(Self { u, v, u0, v0, seed, init })
    }

    /// Network whose reference weights are its current weights.
    pub fn at_init(u: Matrix, v: Matrix, seed: u64, init: InitScheme) -> Result<Self, NnError> {
        Self::new(u.clone(), v.clone(), u, v, seed, init)
    }

    /// Same reference weights, new current weights.
    pub fn with_weights(&self, u: Matrix, v: Matrix) -> Result<Self, NnError> {
        Self::new(u, v, self.u0.clone(), self.v0.clone(), self.seed, self.init)
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn u0(&self) -> &Matrix {
        &self.u0
    }

    pub fn v0(&self) -> &Matrix {
        &self.v0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn init(&self) -> InitScheme {
        self.init
    }

    pub fn d(&self) -> usize {
        self.u.cols()
    }

    pub fn h(&self) -> usize {
        self.u.rows()
    }

    pub fn c(&self) -> usize {
        self.v.rows()
    }

    pub(crate) fn weights_mut(&mut self) -> (&mut Matrix, &mut Matrix) {
        (&mut self.u, &mut self.v)
    }

    /// `V [U x]_+` for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.d() {
            return Err(NnError::Shape(format!("input has length {}, expected {}", x.len(), self.d())));
        }
        let hidden: Vec<f64> = self.u.matvec(x)?.into_iter().map(|z| z.max(0.0)).collect();
        Ok(self.v.matvec(&hidden)?)
    }

    /// Scores for every row of `x` (`m x d`), as an `m x c` matrix.
    pub fn batch_scores(&self, x: &Matrix) -> Result<Matrix, NnError> {
        if x.cols() != self.d() {
            return Err(NnError::Shape(format!("inputs have {} features, expected {}", x.cols(), self.d())));
        }
        let mut hidden = x.matmul_transposed(&self.u)?;
        hidden.as_mut_slice().iter_mut().for_each(|z| *z = z.max(0.0));
        Ok(hidden.matmul_transposed(&self.v)?)
    }

    fn check_data(&self, data: &LabeledDataset) -> Result<(), NnError> {
        if data.d() != self.d() {
            return Err(NnError::Shape(format!("data has d={}, net has d={}", data.d(), self.d())));
        }
        if data.classes() > self.c() {
            return Err(NnError::Shape(format!(
                "data has {} classes, net has {} outputs",
                data.classes(),
                self.c()
            )));
        }
        Ok(())
    }
}

/// Design matrix (`m x d`, one sample per row) with labels in `[0, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Matrix,
    y: Vec<usize>,
    classes: usize,
    name: String,
}

impl LabeledDataset {
    pub fn new(x: Matrix, y: Vec<usize>, classes: usize, name: impl Into<String>) -> Result<Self, NnError> {
        if y.len() != x.rows() {
            return Err(NnError::Shape(format!("{} labels for {} samples", y.len(), x.rows())));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= classes) {
            return Err(NnError::Label { label, classes });
        }
        Ok(Self { x, y, classes, name: name.into() })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    /// The first `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.m());
        let x = Matrix::new(n, self.d(), self.x.as_slice()[..n * self.d()].to_vec())
            .expect("prefix of a valid matrix");
        Self { x, y: self.y[..n].to_vec(), classes: self.classes, name: self.name.clone() }
    }

    pub fn with_labels(&self, y: Vec<usize>) -> Result<Self, NnError> {
        Self::new(self.x.clone(), y, self.classes, self.name.clone())
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Margin `gamma > 0` and confidence `delta in (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginParams {
    pub gamma: f64,
    pub delta: f64,
}

impl MarginParams {
    pub fn new(gamma: f64, delta: f64) -> Result<Self, NnError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(NnError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(NnError::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { gamma, delta })
    }
}

/// `scores[y] - max_{i != y} scores[i]`.
pub fn margin_operator(scores: &[f64], y: usize) -> Result<f64, NnError> {
    if scores.len() < 2 {
        return Err(NnError::InvalidArgument("margin needs at least two classes".into()));
    }
    if y >= scores.len() {
        return Err(NnError::Label { label: y, classes: scores.len() });
    }
    let other = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y)
        .fold(f64::NEG_INFINITY, |m, (_, &s)| m.max(s));
    Ok(scores[y] - other)
}

/// Continuous ramp loss. With `gamma = 0` this is the 0/1 loss where a tie
/// counts as an error.
pub fn ramp_loss(mu: f64, gamma: f64) -> f64 {
    if mu <= 0.0 && (mu < 0.0 || gamma == 0.0) {
        1.0
    } else if mu >= gamma {
        0.0
    } else {
        1.0 - mu / gamma
    }
}

/// `-log softmax(scores)[y]`, stabilized by subtracting the max score.
pub fn cross_entropy(scores: &[f64], y: usize) -> f64 {
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    max + sum.ln() - scores[y]
}

const SAMPLE_CHUNK: usize = 256;

/// Margin of every sample, in sample order.
pub fn margin_distribution(net: &TwoLayerNet, data: &LabeledDataset) -> Result<Vec<f64>, NnError> {
    margin_distribution_with(net, data, Strategy::default())
}

pub fn margin_distribution_with(
    net: &TwoLayerNet,
    data: &LabeledDataset,
    strategy: Strategy,
) -> Result<Vec<f64>, NnError> {
    net.check_data(data)?;
    let ranges = exec::chunk_ranges(data.m(), SAMPLE_CHUNK);
    let parts = exec::map_slice(strategy, &ranges, |r| -> Result<Vec<f64>, NnError> {
        let rows = r.len();
        let x = Matrix::new(rows, data.d(), data.x().as_slice()[r.start * data.d()..r.end * data.d()].to_vec())?;
        let scores = net.batch_scores(&x)?;
        (0..rows).map(|i| margin_operator(scores.row(i), data.y()[r.start + i])).collect()
    });
    let mut out = Vec::with_capacity(data.m());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Mean ramp loss at margin `gamma`; `gamma = 0` gives the training error.
pub fn empirical_margin_loss(net: &TwoLayerNet, data: &LabeledDataset, gamma: f64) -> Result<f64, NnError> {
    if !(gamma >= 0.0) {
        return Err(NnError::InvalidArgument(format!("gamma must be nonnegative, got {gamma}")));
    }
    let margins = margin_distribution(net, data)?;
    Ok(mean_ramp_loss(&margins, gamma))
}

/// Mean ramp loss over precomputed margins.
pub fn mean_ramp_loss(margins: &[f64], gamma: f64) -> f64 {
    margins.iter().map(|&mu| ramp_loss(mu, gamma)).sum::<f64>() / margins.len() as f64
}

/// Mean cross-entropy over the dataset.
pub fn mean_cross_entropy(net: &TwoLayerNet, data: &LabeledDataset) -> Result<f64, NnError> {
    net.check_data(data)?;
    let scores = net.batch_scores(data.x())?;
    let total: f64 = (0..data.m()).map(|i| cross_entropy(scores.row(i), data.y()[i])).sum();
    Ok(total / data.m() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(u: Matrix, v: Matrix) -> TwoLayerNet {
        TwoLayerNet::at_init(u, v, 0, InitScheme::Explicit).unwrap()
    }

    #[test]
    fn forward_examples() {
        let n = net(Matrix::identity(2), Matrix::identity(2));
        assert_eq!(n.forward(&[1.0, -1.0]).unwrap(), vec![1.0, 0.0]);
        let z = net(Matrix::random_normal(3, 2, 1.0, 4), Matrix::zeros(2, 3));
        assert_eq!(z.forward(&[0.3, -2.0]).unwrap(), vec![0.0, 0.0]);
        assert!(z.forward(&[1.0]).is_err());
    }

    #[test]
    fn forward_matches_loop_oracle() {
        let u = Matrix::random_normal(4, 3, 1.0, 10);
        let v = Matrix::random_normal(2, 4, 1.0, 11);
        let n = net(u.clone(), v.clone());
        let x = [1.0, 0.0, 0.0];
        let got = n.forward(&x).unwrap();
        for k in 0..2 {
            let mut s = 0.0;
            for j in 0..4 {
                let mut pre = 0.0;
                for i in 0..3 {
                    pre += u.get(j, i) * x[i];
                }
                if pre > 0.0 {
                    s += v.get(k, j) * pre;
                }
            }
            assert!((got[k] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin_operator(&[2.0, 0.0, 1.0], 0).unwrap(), 1.0);
        assert_eq!(margin_operator(&[0.0, 0.0], 0).unwrap(), 0.0);
        assert_eq!(margin_operator(&[-1.0, 3.0], 0).unwrap(), -4.0);
        assert!(margin_operator(&[1.0, 2.0], 2).is_err());
        assert!(margin_operator(&[1.0], 0).is_err());
    }

    #[test]
    fn ramp_examples() {
        let g = 0.7;
        assert_eq!(ramp_loss(2.0 * g, g), 0.0);
        assert_eq!(ramp_loss(-0.1, g), 1.0);
        assert!((ramp_loss(g / 2.0, g) - 0.5).abs() < 1e-15);
        assert_eq!(ramp_loss(0.0, g), 1.0);
        assert_eq!(ramp_loss(0.0, 0.0), 1.0);
        assert_eq!(ramp_loss(1e-9, 0.0), 0.0);
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.0, 0.0], 0) - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[1000.0, 0.0], 0) < 1e-300);
        let direct = -((3f64).exp() / (1f64.exp() + 2f64.exp() + 3f64.exp())).ln();
        assert!((cross_entropy(&[1.0, 2.0, 3.0], 2) - direct).abs() < 1e-12);
    }

    #[test]
    fn margin_loss_examples() {
        let x = Matrix::random_normal(5, 3, 1.0, 1);
        let data = LabeledDataset::new(x, vec![0, 1, 0, 1, 1], 2, "t").unwrap();
        let zero = net(Matrix::random_normal(4, 3, 1.0, 2), Matrix::zeros(2, 4));
        assert_eq!(empirical_margin_loss(&zero, &data, 0.0).unwrap(), 1.0);
        assert_eq!(margin_distribution(&zero, &data).unwrap(), vec![0.0; 5]);
        let g = 0.4;
        let by_hand = mean_ramp_loss(&[-1.0, 0.25 * g, 0.5 * g, 2.0 * g], g);
        assert!((by_hand - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn margin_distribution_matches_per_sample_calls() {
        let u = Matrix::random_normal(6, 4, 1.0, 3);
        let v = Matrix::random_normal(3, 6, 1.0, 4);
        let n = net(u, v);
        let x = Matrix::random_normal(3, 4, 1.0, 5);
        let data = LabeledDataset::new(x, vec![2, 0, 1], 3, "t").unwrap();
        let dist = margin_distribution(&n, &data).unwrap();
        for i in 0..3 {
            let s = n.forward(data.sample(i)).unwrap();
            assert!((dist[i] - margin_operator(&s, data.y()[i]).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_validation() {
        let x = Matrix::zeros(2, 2);
        assert!(LabeledDataset::new(x.clone(), vec![0], 2, "t").is_err());
        assert!(matches!(
            LabeledDataset::new(x, vec![0, 2], 2, "t"),
            Err(NnError::Label { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn shape_validation() {
        let u = Matrix::zeros(3, 2);
        assert!(TwoLayerNet::at_init(u.clone(), Matrix::zeros(2, 4), 0, InitScheme::Explicit).is_err());
        assert!(TwoLayerNet::new(
            u.clone(),
            Matrix::zeros(2, 3),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 3),
            0,
            InitScheme::Explicit
        )
        .is_err());
    }

    #[test]
    fn margin_params_validation() {
        assert!(MarginParams::new(1.0, 0.01).is_ok());
        assert!(MarginParams::new(0.0, 0.01).is_err());
        assert!(MarginParams::new(1.0, 1.0).is_err());
    }
}
