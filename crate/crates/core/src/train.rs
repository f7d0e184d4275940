//! Minibatch SGD with classical momentum on mean cross-entropy, and the
//! width sweep.
//!
//! One run is strictly sequential: the minibatch order defines the result.
//! The sweep trains different widths concurrently, each with its own seed
//! `seed_base ^ h`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Strategy};
use crate::fsio::write_atomic;
use crate::linalg::{gemm, Matrix, View};
pub use crate::nn::InitScheme;
use crate::nn::{self, LabeledDataset, NnError, TwoLayerNet};
use crate::rng;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss in epoch {epoch} (learning rate too high?)")]
    NonFinite { epoch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub stop_loss: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub init_scheme: InitScheme,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            momentum: 0.9,
            batch_size: 64,
            stop_loss: 0.01,
            max_epochs: 1000,
            seed: 0,
            init_scheme: InitScheme::UniformFanIn,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be nonnegative, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.stop_loss > 0.0) {
            return bad(format!("stop_loss must be positive, got {}", self.stop_loss));
        }
        if let InitScheme::Gaussian { sigma } = self.init_scheme {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return bad(format!("gaussian sigma must be nonnegative, got {sigma}"));
            }
        }
        if self.init_scheme == InitScheme::Explicit {
            return bad("init scheme must be uniform_fan_in or gaussian".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub final_train_cross_entropy: f64,
    pub reached_stop: bool,
    pub wall_time_s: f64,
    /// Epoch-mean cross-entropy, one entry per epoch.
    pub loss_curve: Vec<f64>,
}

/// Fresh network with `U0 = U`, `V0 = V`, deterministic in `seed`.
pub fn init_network(d: usize, h: usize, c: usize, scheme: InitScheme, seed: u64) -> Result<TwoLayerNet, TrainError> {
    if d == 0 || h == 0 || c == 0 {
        return Err(TrainError::Config(format!("dimensions must be positive: d={d}, h={h}, c={c}")));
    }
    let mut r = rng::substream(seed, "init");
    let (u, v) = match scheme {
        InitScheme::UniformFanIn => {
            let bu = 1.0 / (d as f64).sqrt();
            let bv = 1.0 / (h as f64).sqrt();
            let u = Matrix::from_fn(h, d, |_, _| r.gen_range(-bu..bu));
            let v = Matrix::from_fn(c, h, |_, _| r.gen_range(-bv..bv));
            (u, v)
        }
        InitScheme::Gaussian { sigma } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(TrainError::Config(format!("gaussian sigma must be nonnegative, got {sigma}")));
            }
            let normal = Normal::new(0.0, sigma).expect("valid sigma");
            let u = Matrix::from_fn(h, d, |_, _| normal.sample(&mut r));
            let v = Matrix::from_fn(c, h, |_, _| normal.sample(&mut r));
            (u, v)
        }
        InitScheme::Explicit => {
            return Err(TrainError::Config("explicit weights cannot be drawn".into()));
        }
    };
    Ok(TwoLayerNet::at_init(u, v, seed, scheme)?)
}

/// Mean cross-entropy of a minibatch and its gradients with respect to `U`
/// and `V`. The ReLU subgradient at 0 is taken as 0.
pub fn minibatch_gradients(net: &TwoLayerNet, x: &Matrix, y: &[usize]) -> Result<(f64, Matrix, Matrix), TrainError> {
    if x.cols() != net.d() || x.rows() != y.len() {
        return Err(NnError::Shape(format!(
            "batch {:?} with {} labels against d={}",
            x.shape(),
            y.len(),
            net.d()
        ))
        .into());
    }
    if let Some(&label) = y.iter().find(|&&l| l >= net.c()) {
        return Err(NnError::Label { label, classes: net.c() }.into());
    }
    let mut ws = Workspace::new(net.d(), net.h(), net.c(), x.rows());
    let loss = ws.gradients(net, x.as_slice(), y);
    let gu = Matrix::new(net.h(), net.d(), ws.grad_u).map_err(NnError::from)?;
    let gv = Matrix::new(net.c(), net.h(), ws.grad_v).map_err(NnError::from)?;
    Ok((loss, gu, gv))
}

/// Scratch buffers for one minibatch of at most `cap` samples.
struct Workspace {
    d: usize,
    h: usize,
    c: usize,
    z: Vec<f64>,
    hid: Vec<f64>,
    s: Vec<f64>,
    grad_u: Vec<f64>,
    grad_v: Vec<f64>,
}

impl Workspace {
    fn new(d: usize, h: usize, c: usize, cap: usize) -> Self {
        Self {
            d,
            h,
            c,
            z: vec![0.0; cap * h],
            hid: vec![0.0; cap * h],
            s: vec![0.0; cap * c],
            grad_u: vec![0.0; h * d],
            grad_v: vec![0.0; c * h],
        }
    }

    /// `x` holds `b = y.len()` rows of length `d`. Returns the mean loss and
    /// leaves the gradients in `grad_u`, `grad_v`.
    fn gradients(&mut self, net: &TwoLayerNet, x: &[f64], y: &[usize]) -> f64 {
        let (d, h, c, b) = (self.d, self.h, self.c, y.len());
        let z = &mut self.z[..b * h];
        let hid = &mut self.hid[..b * h];
        let s = &mut self.s[..b * c];
        let xv = View::row_major(x, d);
        // Z = X U^T, H = relu(Z), S = H V^T.
        gemm(b, d, h, 1.0, xv, View::transposed(net.u().as_slice(), d), 0.0, z, h);
        for (o, &v) in hid.iter_mut().zip(z.iter()) {
            *o = v.max(0.0);
        }
        gemm(b, h, c, 1.0, View::row_major(hid, h), View::transposed(net.v().as_slice(), h), 0.0, s, c);

        // S becomes dL/dS = (softmax - onehot) / b.
        let inv_b = 1.0 / b as f64;
        let mut loss = 0.0;
        for (i, &label) in y.iter().enumerate() {
            let row = &mut s[i * c..(i + 1) * c];
            loss += nn::cross_entropy(row, label);
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v *= inv_b / sum;
            }
            row[label] -= inv_b;
        }

        // dV = dS^T H.
        gemm(c, b, h, 1.0, View::transposed(s, c), View::row_major(hid, h), 0.0, &mut self.grad_v, h);
        // dZ = (dS V) masked by Z > 0, stored in `hid`.
        gemm(b, c, h, 1.0, View::row_major(s, c), View::row_major(net.v().as_slice(), h), 0.0, hid, h);
        for (g, &pre) in hid.iter_mut().zip(z.iter()) {
            if pre <= 0.0 {
                *g = 0.0;
            }
        }
        // dU = dZ^T X.
        gemm(h, b, d, 1.0, View::transposed(hid, h), xv, 0.0, &mut self.grad_u, d);
        loss * inv_b
    }
}

/// Trains `net` in place. `U0` and `V0` are never touched.
pub fn train(net: &mut TwoLayerNet, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    if data.d() != net.d() || data.classes() > net.c() {
        return Err(NnError::Shape(format!(
            "data (d={}, c={}) does not fit net (d={}, c={})",
            data.d(),
            data.classes(),
            net.d(),
            net.c()
        ))
        .into());
    }
    let start = Instant::now();
    let (d, h, c, m) = (net.d(), net.h(), net.c(), data.m());
    let bs = cfg.batch_size.min(m);
    let mut ws = Workspace::new(d, h, c, bs);
    let mut vel_u = vec![0.0; h * d];
    let mut vel_v = vec![0.0; c * h];
    let mut order: Vec<usize> = (0..m).collect();
    let mut shuffler = rng::substream(cfg.seed, "shuffle");
    let mut xb = vec![0.0; bs * d];
    let mut yb = vec![0usize; bs];
    let mut curve = Vec::new();
    let mut reached = false;

    for epoch in 1..=cfg.max_epochs {
        if cfg.shuffle {
            order.shuffle(&mut shuffler);
        }
        let mut total = 0.0;
        for batch in order.chunks(bs) {
            let b = batch.len();
            for (slot, &i) in batch.iter().enumerate() {
                xb[slot * d..(slot + 1) * d].copy_from_slice(data.sample(i));
                yb[slot] = data.y()[i];
            }
            let loss = ws.gradients(net, &xb[..b * d], &yb[..b]);
            if !loss.is_finite() {
                return Err(TrainError::NonFinite { epoch });
            }
            total += loss * b as f64;
            let (u, v) = net.weights_mut();
            momentum_step(u.as_mut_slice(), &mut vel_u, &ws.grad_u, cfg);
            momentum_step(v.as_mut_slice(), &mut vel_v, &ws.grad_v, cfg);
        }
        let epoch_loss = total / m as f64;
        curve.push(epoch_loss);
        if epoch_loss <= cfg.stop_loss {
            reached = true;
            break;
        }
    }
    if net.u().as_slice().iter().chain(net.v().as_slice()).any(|w| !w.is_finite()) {
        return Err(TrainError::NonFinite { epoch: curve.len() });
    }
    Ok(TrainReport {
        epochs_run: curve.len(),
        final_train_cross_entropy: curve.last().copied().unwrap_or(f64::NAN),
        reached_stop: reached,
        wall_time_s: start.elapsed().as_secs_f64(),
        loss_curve: curve,
    })
}

fn momentum_step(w: &mut [f64], vel: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
    for ((wi, vi), gi) in w.iter_mut().zip(vel.iter_mut()).zip(grad) {
        *vi = cfg.momentum * *vi - cfg.lr * gi;
        *wi += *vi;
    }
}

/// Outcome for one width of a sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub h: usize,
    pub seed: u64,
    pub result: Result<(TwoLayerNet, TrainReport), TrainError>,
    pub checkpoint: Option<PathBuf>,
}

impl SweepEntry {
    pub fn failed(&self) -> bool {
        self.result.is_err()
    }
}

/// Checkpoint file name for width `h` inside a sweep directory.
pub fn sweep_checkpoint_name(h: usize) -> String {
    format!("h{h:05}.capm")
}

/// Report file name next to a checkpoint.
pub fn report_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("report.json")
}

/// Trains one network per width with seed `cfg.seed ^ h`. Failures are
/// recorded per width. With `out_dir`, each trained net is saved as a
/// checkpoint together with its report.
pub fn width_sweep(
    widths: &[usize],
    data: &LabeledDataset,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    strategy: Strategy,
) -> Result<Vec<SweepEntry>, TrainError> {
    if widths.is_empty() {
        return Err(TrainError::Config("no widths given".into()));
    }
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| TrainError::Io { path: dir.display().to_string(), source })?;
    }
    let entries = exec::map_slice(strategy, widths, |&h| {
        let seed = cfg.seed ^ h as u64;
        let result = train_width(h, seed, data, cfg);
        let mut checkpoint = None;
        let result = result.and_then(|(net, report)| {
            if let Some(dir) = out_dir {
                let path = dir.join(sweep_checkpoint_name(h));
                persist(&net, &report, data, &TrainConfig { seed, ..cfg.clone() }, &path)?;
                checkpoint = Some(path);
            }
            Ok((net, report))
        });
        SweepEntry { h, seed, result, checkpoint }
    });
    Ok(entries)
}

fn train_width(h: usize, seed: u64, data: &LabeledDataset, cfg: &TrainConfig) -> Result<(TwoLayerNet, TrainReport), TrainError> {
    let run = TrainConfig { seed, ..cfg.clone() };
    let mut net = init_network(data.d(), h, data.classes(), run.init_scheme, seed)?;
    let report = train(&mut net, data, &run)?;
    Ok((net, report))
}

/// Saves a trained net with its report. The sidecar records the config and
/// dataset name.
pub fn persist(net: &TwoLayerNet, report: &TrainReport, data: &LabeledDataset, cfg: &TrainConfig, path: &Path) -> Result<(), TrainError> {
    let extra = serde_json::json!({ "data": data.name(), "m": data.m(), "train_config": cfg });
    nn::save_checkpoint(net, path, extra)?;
    let rp = report_path(path);
    let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
    json.push(b'\n');
    write_atomic(&rp, &json).map_err(|source| TrainError::Io { path: rp.display().to_string(), source })
}
