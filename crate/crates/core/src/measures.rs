//! Per-unit and per-layer measurements of a trained network.
//!
//! Unit capacity `beta_i = ||u_i - u0_i||_2` (row `i` of `U - U0`) and unit
//! impact `alpha_i = ||v_i||_2` (column `i` of `V`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::DataTerms;
use crate::exec::Strategy;
use crate::linalg::{self, Axis, InnerNorm, LinalgError, Matrix, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use crate::nn::{self, LabeledDataset, NnError, TwoLayerNet};

/// Number of bins in the angle histogram over `[0, 180]` degrees.
pub const ANGLE_BINS: usize = 36;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("normalizer is zero")]
    ZeroNormalizer,
}

pub fn unit_capacities(net: &TwoLayerNet) -> Vec<f64> {
    (0..net.h())
        .map(|i| {
            let diff: Vec<f64> = net.u().row(i).iter().zip(net.u0().row(i)).map(|(a, b)| a - b).collect();
            linalg::l2_norm(&diff)
        })
        .collect()
}

pub fn unit_impacts(net: &TwoLayerNet) -> Vec<f64> {
    let v = net.v();
    let mut sq = vec![0.0; v.cols()];
    for k in 0..v.rows() {
        for (s, x) in sq.iter_mut().zip(v.row(k)) {
            *s += x * x;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Max, mean and median of a set of per-unit values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        Self { max: s[n - 1], mean: s.iter().sum::<f64>() / n as f64, median }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePanel {
    pub h: usize,
    pub d: usize,
    pub c: usize,
    pub m: usize,
    pub data: String,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta_summary: Summary,
    pub alpha_summary: Summary,
    /// Angle between `u_i` and `u0_i`; `None` where either norm vanishes.
    pub angles_deg: Vec<Option<f64>>,
    pub degenerate_angle_units: usize,
    pub angle_histogram: Vec<usize>,
    pub fro_u: f64,
    pub fro_v: f64,
    pub fro_du: f64,
    pub fro_dv: f64,
    pub spec_u: f64,
    pub spec_u0: f64,
    pub spec_v: f64,
    pub spectral_converged: bool,
    /// Keys are `"<matrix>,p=<p>,q=<q>"`; see the metadata for the axis.
    pub group_norms: BTreeMap<String, f64>,
    pub margins: Vec<f64>,
    pub gamma_percentile: f64,
    pub gamma_5pct: f64,
    pub train_error: f64,
    pub capacity_numerator: f64,
    pub metadata: BTreeMap<String, String>,
}

/// Histogram of angles over `[0, 180]` in [`ANGLE_BINS`] equal bins.
pub fn angle_histogram(angles: &[Option<f64>]) -> Vec<usize> {
    let mut bins = vec![0; ANGLE_BINS];
    let width = 180.0 / ANGLE_BINS as f64;
    for a in angles.iter().flatten() {
        let b = ((a / width) as usize).min(ANGLE_BINS - 1);
        bins[b] += 1;
    }
    bins
}

fn group_norm_table(net: &TwoLayerNet) -> Result<BTreeMap<String, f64>, LinalgError> {
    let du = net.u().sub(net.u0())?;
    let dv = net.v().sub(net.v0())?;
    let mats: [(&str, &Matrix, Axis); 4] =
        [("U", net.u(), Axis::Rows), ("U-U0", &du, Axis::Rows), ("V^T", net.v(), Axis::Cols), ("(V-V0)^T", &dv, Axis::Cols)];
    let combos = [(1.0, InnerNorm::L2, "1", "2"), (2.0, InnerNorm::L2, "2", "2"), (f64::INFINITY, InnerNorm::L1, "inf", "1"), (f64::INFINITY, InnerNorm::L2, "inf", "2")];
    let mut out = BTreeMap::new();
    for (name, m, axis) in mats {
        for (p, inner, ps, qs) in combos {
            out.insert(format!("{name},p={ps},q={qs}"), linalg::group_norm(m, axis, p, inner)?);
        }
    }
    Ok(out)
}

/// `sqrt(c) ||V||_F (||U - U0||_F ||X||_F + ||U0 X||_F)`.
pub fn capacity_numerator(net: &TwoLayerNet, terms: &DataTerms) -> Result<f64, LinalgError> {
    let du = linalg::frobenius_norm(&net.u().sub(net.u0())?);
    Ok((net.c() as f64).sqrt() * linalg::frobenius_norm(net.v()) * (du * terms.x_fro + terms.u0x_fro))
}

/// Fills every panel field. `gamma_percentile` selects the margin percentile
/// reported as `gamma_5pct` (5 by convention).
pub fn measure_panel(net: &TwoLayerNet, data: &LabeledDataset, gamma_percentile: f64) -> Result<MeasurePanel, MeasureError> {
    let beta = unit_capacities(net);
    let alpha = unit_impacts(net);
    let angles_deg: Vec<Option<f64>> =
        (0..net.h()).map(|i| linalg::angle_degrees(net.u().row(i), net.u0().row(i)).ok()).collect();
    let spec = |m: &Matrix| linalg::spectral_norm(m, SPECTRAL_TOL, SPECTRAL_MAX_ITER);
    let (su, su0, sv) = (spec(net.u())?, spec(net.u0())?, spec(net.v())?);
    let margins = nn::margin_distribution(net, data)?;
    let gamma = linalg::percentile_nearest_rank(&margins, gamma_percentile)?;
    let terms = DataTerms::compute(net, data, Strategy::default())?;
    let mut metadata = BTreeMap::new();
    metadata.insert("group_norm_axis".into(), "hidden-unit axis: rows of U and U-U0, columns of V and V-V0".into());
    metadata.insert("percentile".into(), "nearest rank".into());
    metadata.insert("margin_normalizer".into(), "sqrt(c) ||V||_F (||U-U0||_F ||X||_F + ||U0 X||_F)".into());
    metadata.insert("init".into(), net.init().to_string());
    Ok(MeasurePanel {
        h: net.h(),
        d: net.d(),
        c: net.c(),
        m: data.m(),
        data: data.name().to_string(),
        beta_summary: Summary::of(&beta),
        alpha_summary: Summary::of(&alpha),
        degenerate_angle_units: angles_deg.iter().filter(|a| a.is_none()).count(),
        angle_histogram: angle_histogram(&angles_deg),
        angles_deg,
        beta,
        alpha,
        fro_u: linalg::frobenius_norm(net.u()),
        fro_v: linalg::frobenius_norm(net.v()),
        fro_du: linalg::frobenius_norm(&net.u().sub(net.u0())?),
        fro_dv: linalg::frobenius_norm(&net.v().sub(net.v0())?),
        spec_u: su.value,
        spec_u0: su0.value,
        spec_v: sv.value,
        spectral_converged: su.converged && su0.converged && sv.converged,
        group_norms: group_norm_table(net)?,
        train_error: nn::mean_ramp_loss(&margins, 0.0),
        margins,
        gamma_percentile,
        gamma_5pct: gamma,
        capacity_numerator: capacity_numerator(net, &terms)?,
        metadata,
    })
}

/// Margins divided by [`capacity_numerator`].
pub fn normalized_margins(net: &TwoLayerNet, data: &LabeledDataset) -> Result<Vec<f64>, MeasureError> {
    let terms = DataTerms::compute(net, data, Strategy::default())?;
    let z = capacity_numerator(net, &terms)?;
    if !(z > 0.0) {
        return Err(MeasureError::ZeroNormalizer);
    }
    Ok(nn::margin_distribution(net, data)?.into_iter().map(|m| m / z).collect())
}
