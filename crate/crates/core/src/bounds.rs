//! Generalization bounds with their printed constants, the six comparator
//! measures, and the covering-number construction behind the union bound
//! over per-unit norm budgets.
//!
//! Conventions:
//!
//! - `X` is read as `d x m` (samples as columns), so `||U0 X||_F` is the norm
//!   of an `h x m` matrix.
//! - Group norms always run along the hidden-unit axis: rows of `U` and
//!   `U - U0`, columns of `V` and `V - V0`.
//! - The two margin-bound forms use the denominator `gamma sqrt(m)` with an
//!   unnormalized `||X||_F`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::exec::{self, Strategy};
use crate::linalg::{self, Axis, InnerNorm, LinalgError, Matrix};
use crate::measures;
use crate::nn::{self, LabeledDataset, MarginParams, NnError, TwoLayerNet};

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("confidence radicand is negative ({0}); gamma sqrt(m) / delta is too small")]
    NegativeRadicand(f64),
    #[error("cover dimension {0} exceeds the enumeration limit of {MAX_COVER_DIM}")]
    CoverTooLarge(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Data-dependent norms that enter every bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTerms {
    pub m: usize,
    /// `||X||_F`.
    pub x_fro: f64,
    /// `||U0 X||_F`.
    pub u0x_fro: f64,
    /// `||u0_j X||_2` for each hidden unit `j`.
    pub u0x_unit: Vec<f64>,
}

const SAMPLE_CHUNK: usize = 256;

impl DataTerms {
    pub fn compute(net: &TwoLayerNet, data: &LabeledDataset, strategy: Strategy) -> Result<Self, LinalgError> {
        if data.d() != net.d() {
            return Err(LinalgError::Shape(format!("data has d={}, net has d={}", data.d(), net.d())));
        }
        let (d, h) = (data.d(), net.h());
        let ranges = exec::chunk_ranges(data.m(), SAMPLE_CHUNK);
        let parts = exec::map_slice(strategy, &ranges, |r| -> Result<Vec<f64>, LinalgError> {
            let x = Matrix::new(r.len(), d, data.x().as_slice()[r.start * d..r.end * d].to_vec())?;
            let proj = x.matmul_transposed(net.u0())?;
            let mut sq = vec![0.0; h];
            for i in 0..proj.rows() {
                for (s, v) in sq.iter_mut().zip(proj.row(i)) {
                    *s += v * v;
                }
            }
            Ok(sq)
        });
        let mut sq = vec![0.0; h];
        for p in parts {
            for (s, v) in sq.iter_mut().zip(p?) {
                *s += v;
            }
        }
        let u0x_unit: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
        Ok(Self {
            m: data.m(),
            x_fro: linalg::frobenius_norm(data.x()),
            u0x_fro: sq.iter().sum::<f64>().sqrt(),
            u0x_unit,
        })
    }
}

/// The two Rademacher bounds for the ramp-loss class:
/// `(2 sqrt(2c) + 2) / (gamma m) * sum_j alpha_j (beta_j ||X||_F + ||u0_j X||_2)`
/// and the Cauchy-Schwarz relaxation
/// `(2 sqrt(2c) + 2) / (gamma m) * ||alpha|| (||beta|| ||X||_F + ||U0 X||_F)`.
pub fn thm1_from_units(alpha: &[f64], beta: &[f64], terms: &DataTerms, c: usize, gamma: f64) -> Result<(f64, f64), BoundError> {
    if !(gamma > 0.0) {
        return Err(BoundError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if alpha.len() != beta.len() || alpha.len() != terms.u0x_unit.len() {
        return Err(BoundError::InvalidArgument("alpha, beta and unit projections differ in length".into()));
    }
    let k = (2.0 * (2.0 * c as f64).sqrt() + 2.0) / (gamma * terms.m as f64);
    let first: f64 = alpha
        .iter()
        .zip(beta)
        .zip(&terms.u0x_unit)
        .map(|((a, b), p)| a * (b * terms.x_fro + p))
        .sum();
    let second = linalg::l2_norm(alpha) * (linalg::l2_norm(beta) * terms.x_fro + terms.u0x_fro);
    Ok((k * first, k * second))
}

pub fn thm1_bounds(net: &TwoLayerNet, data: &LabeledDataset, gamma: f64) -> Result<(f64, f64), BoundError> {
    let terms = DataTerms::compute(net, data, Strategy::default())?;
    thm1_from_units(&measures::unit_impacts(net), &measures::unit_capacities(net), &terms, net.c(), gamma)
}

/// A bound split into its three summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub empirical_loss: f64,
    pub capacity_term: f64,
    pub confidence_term: f64,
    pub total: f64,
}

impl BoundTerms {
    fn new(empirical_loss: f64, capacity_term: f64, confidence_term: f64) -> Self {
        Self { empirical_loss, capacity_term, confidence_term, total: empirical_loss + capacity_term + confidence_term }
    }

    /// Everything except the empirical loss.
    pub fn complexity(&self) -> f64 {
        self.capacity_term + self.confidence_term
    }
}

fn check_margin(gamma: f64, delta: f64) -> Result<(), BoundError> {
    MarginParams::new(gamma, delta).map(|_| ()).map_err(|e| BoundError::InvalidArgument(e.to_string()))
}

fn confidence(count: f64, m: usize, gamma: f64, delta: f64) -> Result<f64, BoundError> {
    let m = m as f64;
    let radicand = (count + (gamma * m.sqrt() / delta).ln()) / m;
    if radicand < 0.0 {
        return Err(BoundError::NegativeRadicand(radicand));
    }
    Ok(3.0 * radicand.sqrt())
}

/// Frobenius-norm margin bound with a precomputed empirical loss:
/// `L + 3 sqrt(2) (sqrt(2c) + 1) (||V||_F + 1) (||U - U0||_F ||X||_F + ||U0 X||_F + 1) / (gamma sqrt(m))
///    + 3 sqrt((5h + ln(gamma sqrt(m) / delta)) / m)`.
pub fn thm2_with(net: &TwoLayerNet, terms: &DataTerms, loss: f64, gamma: f64, delta: f64) -> Result<BoundTerms, BoundError> {
    check_margin(gamma, delta)?;
    let c = net.c() as f64;
    let m = terms.m as f64;
    let v = linalg::frobenius_norm(net.v());
    let du = linalg::frobenius_norm(&net.u().sub(net.u0())?);
    let cap = 3.0 * 2f64.sqrt() * ((2.0 * c).sqrt() + 1.0) * (v + 1.0) * (du * terms.x_fro + terms.u0x_fro + 1.0)
        / (gamma * m.sqrt());
    let conf = confidence(5.0 * net.h() as f64, terms.m, gamma, delta)?;
    Ok(BoundTerms::new(loss, cap, conf))
}

pub fn thm2_bound(net: &TwoLayerNet, data: &LabeledDataset, gamma: f64, delta: f64) -> Result<BoundTerms, BoundError> {
    let terms = DataTerms::compute(net, data, Strategy::default())?;
    let loss = nn::empirical_margin_loss(net, data, gamma)?;
    thm2_with(net, &terms, loss, gamma, delta)
}

/// Exponent choice for the `l_p` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PChoice {
    Fixed(f64),
    /// `p = ln h`, raised to 2 when smaller.
    LnH,
}

impl PChoice {
    pub fn resolve(self, h: usize) -> f64 {
        match self {
            PChoice::Fixed(p) => p,
            PChoice::LnH => (h as f64).ln().max(2.0),
        }
    }

    pub fn label(self) -> String {
        match self {
            PChoice::Fixed(p) if p.is_infinite() => "inf".into(),
            PChoice::Fixed(p) => format!("{p}"),
            PChoice::LnH => "lnh".into(),
        }
    }
}

impl std::str::FromStr for PChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lnh" | "ln_h" | "ln(h)" => Ok(PChoice::LnH),
            "inf" => Ok(PChoice::Fixed(f64::INFINITY)),
            t => t.parse::<f64>().map(PChoice::Fixed).map_err(|_| format!("bad p value {t:?}")),
        }
    }
}

/// `l_p` margin bound with a precomputed empirical loss:
/// `L + 4 e^2 (sqrt(2c) + 1) (h^(1/2-1/p) ||V^T||_{p,2} + 1)
///      (h^(1/2-1/p) ||U - U0||_{p,2} ||X||_F + ||U0 X||_F + 1) / (gamma sqrt(m))
///    + 3 sqrt((ceil(e^(1-p) h - 1) ln(e h) + ln(gamma sqrt(m) / delta)) / m)`.
pub fn thm4_with(net: &TwoLayerNet, terms: &DataTerms, loss: f64, gamma: f64, delta: f64, p: f64) -> Result<BoundTerms, BoundError> {
    check_margin(gamma, delta)?;
    if !(p >= 2.0) {
        return Err(BoundError::InvalidArgument(format!("p must be at least 2, got {p}")));
    }
    let h = net.h() as f64;
    let c = net.c() as f64;
    let m = terms.m as f64;
    let scale = h.powf(0.5 - 1.0 / p);
    let vt = linalg::group_norm(net.v(), Axis::Cols, p, InnerNorm::L2)?;
    let du = linalg::group_norm(&net.u().sub(net.u0())?, Axis::Rows, p, InnerNorm::L2)?;
    let e = std::f64::consts::E;
    let cap = 4.0 * e * e * ((2.0 * c).sqrt() + 1.0) * (scale * vt + 1.0) * (scale * du * terms.x_fro + terms.u0x_fro + 1.0)
        / (gamma * m.sqrt());
    let count = ((1.0 - p).exp() * h - 1.0).ceil() * (e * h).ln();
    let conf = confidence(count, terms.m, gamma, delta)?;
    Ok(BoundTerms::new(loss, cap, conf))
}

pub fn thm4_bound(net: &TwoLayerNet, data: &LabeledDataset, gamma: f64, delta: f64, p: PChoice) -> Result<BoundTerms, BoundError> {
    let terms = DataTerms::compute(net, data, Strategy::default())?;
    let loss = nn::empirical_margin_loss(net, data, gamma)?;
    thm4_with(net, &terms, loss, gamma, delta, p.resolve(net.h()))
}

/// The six comparator measures, indexed 1..=6 as `rows[0..6]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub rows: [f64; 6],
    pub spectral_converged: bool,
}

impl Table1 {
    pub fn get(&self, row: usize) -> f64 {
        self.rows[row - 1]
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.rows.iter().enumerate().map(|(i, v)| ((i + 1).to_string(), *v)).collect()
    }
}

/// Short names of the six comparator rows.
pub const TABLE1_NAMES: [&str; 6] = [
    "d*h",
    "c*|U|_inf1*|V|_inf1",
    "sqrt(c)*|U|_F*|V|_F",
    "|U|_2*|V-V0|_12+|U-U0|_12*|V|_2",
    "|U|_2*|V-V0|_F+sqrt(h)*|U-U0|_F*|V|_2",
    "|U0|_2*|V|_F+|U-U0|_F*|V|_F+sqrt(h)",
];

/// Comparator measures with unit constants (plus the `c` and `sqrt(c)`
/// class-count scalings on rows 2 and 3). Spectral norms use `tol` with the
/// default iteration budget.
pub fn table1_measures(net: &TwoLayerNet, tol: f64) -> Result<Table1, BoundError> {
    let (d, h, c) = (net.d() as f64, net.h() as f64, net.c() as f64);
    let du = net.u().sub(net.u0())?;
    let dv = net.v().sub(net.v0())?;
    let spec = |m: &Matrix| linalg::spectral_norm(m, tol, linalg::SPECTRAL_MAX_ITER);
    let (su, sv, su0) = (spec(net.u())?, spec(net.v())?, spec(net.u0())?);
    let gn = |m: &Matrix, axis, p, q| linalg::group_norm(m, axis, p, q);
    let fro = linalg::frobenius_norm;
    let rows = [
        d * h,
        c * gn(net.u(), Axis::Rows, f64::INFINITY, InnerNorm::L1)? * gn(net.v(), Axis::Cols, f64::INFINITY, InnerNorm::L1)?,
        c.sqrt() * fro(net.u()) * fro(net.v()),
        su.value * gn(&dv, Axis::Cols, 1.0, InnerNorm::L2)? + gn(&du, Axis::Rows, 1.0, InnerNorm::L2)? * sv.value,
        su.value * fro(&dv) + h.sqrt() * fro(&du) * sv.value,
        su0.value * fro(net.v()) + fro(&du) * fro(net.v()) + h.sqrt(),
    ];
    Ok(Table1 { rows, spectral_converged: su.converged && sv.converged && su0.converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPanel {
    pub gamma: f64,
    pub delta: f64,
    pub m: usize,
    pub c: usize,
    pub h: usize,
    pub d: usize,
    pub x_fro: f64,
    pub u0x_fro: f64,
    pub empirical_margin_loss: f64,
    pub thm1_first_form: f64,
    pub thm1_second_form: f64,
    /// Complexity part of the Frobenius bound (total minus empirical loss).
    pub thm2_bound: f64,
    pub thm2_total: f64,
    /// Complexity part of the `l_p` bound, keyed by p label.
    pub thm4_bound: BTreeMap<String, f64>,
    pub thm4_total: BTreeMap<String, f64>,
    pub capacity_numerator: f64,
    pub table1: BTreeMap<String, f64>,
    pub spectral_converged: bool,
    pub metadata: BTreeMap<String, String>,
}

pub fn bound_panel(net: &TwoLayerNet, data: &LabeledDataset, params: MarginParams, ps: &[PChoice]) -> Result<BoundPanel, BoundError> {
    let MarginParams { gamma, delta } = params;
    let terms = DataTerms::compute(net, data, Strategy::default())?;
    let loss = nn::empirical_margin_loss(net, data, gamma)?;
    let (f1, f2) = thm1_from_units(&measures::unit_impacts(net), &measures::unit_capacities(net), &terms, net.c(), gamma)?;
    let t2 = thm2_with(net, &terms, loss, gamma, delta)?;
    let mut thm4_bound = BTreeMap::new();
    let mut thm4_total = BTreeMap::new();
    for &p in ps {
        let t = thm4_with(net, &terms, loss, gamma, delta, p.resolve(net.h()))?;
        thm4_bound.insert(p.label(), t.complexity());
        thm4_total.insert(p.label(), t.total);
    }
    let table = table1_measures(net, linalg::SPECTRAL_TOL)?;
    let mut metadata = BTreeMap::new();
    metadata.insert("group_norm_axis".into(), "hidden-unit axis: rows of U and U-U0, columns of V and V-V0".into());
    metadata.insert("x_layout".into(), "X is d x m (samples as columns); ||U0 X||_F is over an h x m matrix".into());
    metadata.insert("ramp_loss".into(), "continuous: 1 - mu/gamma on [0, gamma]".into());
    metadata.insert("table1_constants".into(), "unit constants; row 2 scaled by c, row 3 by sqrt(c)".into());
    metadata.insert("denominator".into(), "gamma sqrt(m) with unnormalized ||X||_F".into());
    metadata.insert("init".into(), net.init().to_string());
    for (i, name) in TABLE1_NAMES.iter().enumerate() {
        metadata.insert(format!("table1_row{}", i + 1), (*name).into());
    }
    Ok(BoundPanel {
        gamma,
        delta,
        m: terms.m,
        c: net.c(),
        h: net.h(),
        d: net.d(),
        x_fro: terms.x_fro,
        u0x_fro: terms.u0x_fro,
        empirical_margin_loss: loss,
        thm1_first_form: f1,
        thm1_second_form: f2,
        thm2_bound: t2.complexity(),
        thm2_total: t2.total,
        thm4_bound,
        thm4_total,
        capacity_numerator: measures::capacity_numerator(net, &terms)?,
        table1: table.to_map(),
        spectral_converged: table.spectral_converged,
        metadata,
    })
}

/// Largest dimension [`cover_construct`] will enumerate.
pub const MAX_COVER_DIM: usize = 12;

/// Parameters of the `l_p`-ball cover: dimension `D`, exponent `p >= 2`,
/// accuracy `eps > 0` and radius `beta > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub dim: usize,
    pub p: f64,
    pub eps: f64,
    pub beta: f64,
}

impl CoverSpec {
    pub fn validate(&self) -> Result<(), BoundError> {
        let bad = |m: String| Err(BoundError::InvalidArgument(m));
        if self.dim == 0 {
            return bad("D must be at least 1".into());
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return bad(format!("p must be finite and at least 2, got {}", self.p));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        Ok(())
    }

    /// `K = ceil(D / ((1 + eps)^p - 1))`. A quotient within `1e-7` relative
    /// of an integer is taken as that integer, so eps given to 8 digits
    /// lands on the intended grid.
    pub fn k(&self) -> Result<u64, BoundError> {
        self.validate()?;
        let q = self.dim as f64 / ((1.0 + self.eps).powf(self.p) - 1.0);
        if !(q < 1e15) {
            return Err(BoundError::InvalidArgument(format!("eps {} is too small: K would be {q:e}", self.eps)));
        }
        let r = q.round();
        let k = if (q - r).abs() <= 1e-7 * r.max(1.0) { r } else { q.ceil() };
        Ok((k as u64).max(1))
    }

    /// Norm bound every box satisfies: `D^(1/2 - 1/p) beta (1 + eps)`. When
    /// `K` was snapped down, the eps implied by `K` is used if larger.
    pub fn box_norm_bound(&self) -> f64 {
        let implied = self.k().map(|k| (1.0 + self.dim as f64 / k as f64).powf(1.0 / self.p)).unwrap_or(0.0);
        (self.dim as f64).powf(0.5 - 1.0 / self.p) * self.beta * (1.0 + self.eps).max(implied)
    }
}

/// `ln C(n, k)`: exact integer arithmetic when the value fits in `u128`,
/// log-gamma otherwise.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact: acc holds C(n, i) and the product
        // is divisible by i + 1.
        match acc.checked_mul(u128::from(n - i)) {
            Some(v) => acc = v / u128::from(i + 1),
            None => return ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0),
        }
    }
    (acc as f64).ln()
}

/// `ln N` with `N = C(K + D - 1, D - 1)`.
pub fn cover_count_log(spec: &CoverSpec) -> Result<f64, BoundError> {
    let k = spec.k()?;
    let d = spec.dim as u64;
    Ok(ln_binomial(k + d - 1, d - 1))
}

/// Dominance boxes: every point of the `l_p` ball of radius `beta`, taken
/// entrywise in absolute value, is dominated by one of them.
///
/// The boxes are `alpha_i = (j_i beta^p / K)^(1/p)` with integer
/// `j_i in [1, K]` and `sum j_i = min(K + D, D K)`, i.e. the maximal points of
/// the grid `{j : sum j_i <= K + D}`. Their number is at most `N`.
pub fn cover_construct(spec: &CoverSpec) -> Result<Vec<Vec<f64>>, BoundError> {
    spec.validate()?;
    if spec.dim > MAX_COVER_DIM {
        return Err(BoundError::CoverTooLarge(spec.dim));
    }
    let k = spec.k()? as usize;
    let d = spec.dim;
    let total = (k + d).min(d * k);
    let unit = spec.beta.powf(spec.p) / k as f64;
    let mut boxes = Vec::new();
    let mut parts = vec![0usize; d];
    compositions(&mut parts, 0, total, k, &mut |js| {
        boxes.push(js.iter().map(|&j| (j as f64 * unit).powf(1.0 / spec.p)).collect());
    });
    Ok(boxes)
}

/// Visits every way to write `remaining` as `parts[pos..]` with entries in `[1, max]`.
fn compositions(parts: &mut [usize], pos: usize, remaining: usize, max: usize, visit: &mut impl FnMut(&[usize])) {
    let left = parts.len() - pos;
    if left == 1 {
        if (1..=max).contains(&remaining) {
            parts[pos] = remaining;
            visit(parts);
        }
        return;
    }
    let lo = remaining.saturating_sub(max * (left - 1)).max(1);
    let hi = max.min(remaining - (left - 1));
    for j in lo..=hi {
        parts[pos] = j;
        compositions(parts, pos + 1, remaining - j, max, visit);
    }
}

/// Index of a box dominating `|x|` entrywise, if any.
pub fn dominating_box(boxes: &[Vec<f64>], x: &[f64]) -> Option<usize> {
    boxes.iter().position(|b| b.iter().zip(x).all(|(a, v)| v.abs() <= *a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::InitScheme;

    fn spec(dim: usize, p: f64, eps: f64) -> CoverSpec {
        CoverSpec { dim, p, eps, beta: 1.0 }
    }

    #[test]
    fn cover_count_examples() {
        assert_eq!(cover_count_log(&spec(1, 2.0, 0.5)).unwrap(), 0.0);
        let s = spec(2, 2.0, 2f64.sqrt() - 1.0);
        assert_eq!(s.k().unwrap(), 2);
        assert!((cover_count_log(&s).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(spec(2, 2.0, 0.41421356).k().unwrap(), 2);
    }

    #[test]
    fn ln_binomial_paths_agree() {
        for (n, k) in [(10u64, 3u64), (66, 49), (120, 60), (200, 17)] {
            let exact = ln_binomial(n, k);
            let lg = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
            assert!((exact - lg).abs() <= 1e-10 * exact.max(1.0), "{n} {k}");
        }
        assert!(ln_binomial(1000, 500) > 600.0);
    }

    #[test]
    fn cover_construct_small_cases() {
        let one = cover_construct(&CoverSpec { dim: 1, p: 2.0, eps: 2.0, beta: 3.0 }).unwrap();
        assert_eq!(one, vec![vec![3.0]]);
        let two = cover_construct(&spec(2, 2.0, 2f64.sqrt() - 1.0)).unwrap();
        assert_eq!(two.len(), 1);
        assert!((two[0][0] - 1.0).abs() < 1e-15 && (two[0][1] - 1.0).abs() < 1e-15);
        assert!(matches!(cover_construct(&spec(13, 2.0, 1.0)), Err(BoundError::CoverTooLarge(13))));
    }

    #[test]
    fn compositions_count_matches_formula() {
        // Compositions of 8 into 3 parts in [1, 5]: C(7, 2) minus the three
        // arrangements of (6, 1, 1).
        let mut n = 0;
        compositions(&mut [0; 3], 0, 8, 5, &mut |_| n += 1);
        assert_eq!(n, 21 - 3);
    }

    #[test]
    fn thm1_single_unit_example() {
        let terms = DataTerms { m: 1, x_fro: 1.0, u0x_fro: 0.0, u0x_unit: vec![0.0] };
        let (a, b) = thm1_from_units(&[1.0], &[1.0], &terms, 1, 1.0).unwrap();
        let expect = 2.0 * 2f64.sqrt() + 2.0;
        assert!((a - expect).abs() < 1e-12);
        assert!((b - expect).abs() < 1e-12);
        let (z1, z2) = thm1_from_units(&[0.0, 0.0], &[1.0, 2.0], &DataTerms { m: 3, x_fro: 2.0, u0x_fro: 0.0, u0x_unit: vec![0.0; 2] }, 2, 1.0).unwrap();
        assert_eq!((z1, z2), (0.0, 0.0));
    }

    #[test]
    fn thm2_zero_net() {
        let c = 3usize;
        let h = 4usize;
        let net = TwoLayerNet::at_init(Matrix::zeros(h, 2), Matrix::zeros(c, h), 0, InitScheme::Explicit).unwrap();
        let x = Matrix::random_normal(10, 2, 1.0, 1);
        let data = LabeledDataset::new(x, vec![0; 10], c, "z").unwrap();
        let (gamma, delta) = (0.5, 0.01);
        let got = thm2_bound(&net, &data, gamma, delta).unwrap();
        let m = 10f64;
        let expect = 1.0
            + 3.0 * 2f64.sqrt() * ((2.0 * c as f64).sqrt() + 1.0) / (gamma * m.sqrt())
            + 3.0 * ((5.0 * h as f64 + (gamma * m.sqrt() / delta).ln()) / m).sqrt();
        assert!((got.total - expect).abs() < 1e-12);
        assert_eq!(got.empirical_loss, 1.0);
    }

    #[test]
    fn negative_radicand_is_an_error() {
        let net = TwoLayerNet::at_init(Matrix::zeros(2, 1), Matrix::zeros(2, 2), 0, InitScheme::Explicit).unwrap();
        let terms = DataTerms { m: 1, x_fro: 1.0, u0x_fro: 0.0, u0x_unit: vec![0.0; 2] };
        assert!(matches!(thm2_with(&net, &terms, 0.0, 1e-9, 0.5), Err(BoundError::NegativeRadicand(_))));
    }

    #[test]
    fn thm4_ceiling_term() {
        let e = std::f64::consts::E;
        assert_eq!(((1.0 - 2.0f64).exp() * 100.0 - 1.0).ceil(), 36.0);
        assert!((PChoice::LnH.resolve(100) - 100f64.ln()).abs() < 1e-15);
        assert_eq!(PChoice::LnH.resolve(4), 2.0);
        assert!(e > 2.7);
    }

    #[test]
    fn table1_scalars() {
        let net = TwoLayerNet::new(
            Matrix::new(1, 1, vec![2.0]).unwrap(),
            Matrix::new(1, 1, vec![3.0]).unwrap(),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            0,
            InitScheme::Explicit,
        )
        .unwrap();
        let t = table1_measures(&net, 1e-12).unwrap();
        assert_eq!(t.get(1), 1.0);
        assert!((t.get(3) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn table1_at_init() {
        let u = Matrix::random_normal(6, 4, 0.3, 2);
        let v = Matrix::random_normal(3, 6, 0.3, 3);
        let net = TwoLayerNet::at_init(u.clone(), v.clone(), 0, InitScheme::Explicit).unwrap();
        let t = table1_measures(&net, 1e-12).unwrap();
        assert_eq!(t.get(4), 0.0);
        assert_eq!(t.get(5), 0.0);
        let su0 = linalg::spectral_norm(&u, 1e-12, 10_000).unwrap().value;
        assert!((t.get(6) - (su0 * linalg::frobenius_norm(&v) + 6f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn pchoice_parsing() {
        assert_eq!("lnh".parse::<PChoice>().unwrap(), PChoice::LnH);
        assert_eq!("4".parse::<PChoice>().unwrap(), PChoice::Fixed(4.0));
        assert!("x".parse::<PChoice>().is_err());
    }
}
