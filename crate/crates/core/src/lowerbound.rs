//! The adversarial Hadamard instance that certifies the Rademacher lower
//! bound, exact and sampled estimators, and brute-force oracles for the
//! contraction and linear-class inequalities.
//!
//! Instance: `d = h = 2^k`, `m = n 2^k`, sample `i` is `e_{i / n}` (0-based),
//! so the data splits into `2^k` groups of `n` identical inputs. For signs
//! `xi`, group `j` has `eps_j = sum of xi over group j`; the witness keeps
//! column `f_j` of the sign-adjusted Hadamard matrix when `eps_j >= 0` and
//! zeroes it otherwise, then sets `U = Diag(beta) F~` and `V = alpha^T`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, DataError};
use crate::exec::{self, Strategy};
use crate::linalg::{self, LinalgError, Matrix};
use crate::nn::{LabeledDataset, NnError, TwoLayerNet};
use crate::rng;

/// Largest `m` for exact enumeration over `2^m` sign vectors.
pub const MAX_EXACT_M: usize = 20;
/// Largest `n` for [`abs_sum_expectation`].
pub const MAX_ABS_SUM_N: usize = 40;
/// Largest dimension for [`contraction_check`].
pub const MAX_CONTRACTION_DIM: usize = 20;
/// Default number of draws in sampled mode.
pub const DEFAULT_TRIALS: usize = 100_000;

const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LowerBoundError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("size guard: {0}")]
    TooLarge(String),
    #[error("witness violates a constraint: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance {
    pub k: u32,
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Hadamard matrix with each column's sign chosen to maximize
    /// `<s, [f]_+>` where `s_j = alpha_j beta_j`.
    pub f: Matrix,
    pub dataset: LabeledDataset,
}

impl LowerBoundInstance {
    pub fn m(&self) -> usize {
        self.n << self.k
    }

    pub fn dim(&self) -> usize {
        1 << self.k
    }

    /// `alpha^T beta`.
    pub fn s_total(&self) -> f64 {
        linalg::dot(&self.alpha, &self.beta)
    }

    /// `<s, [f_j]_+>` for each column `j` of `F`.
    pub fn column_weights(&self) -> Vec<f64> {
        let s: Vec<f64> = self.alpha.iter().zip(&self.beta).map(|(a, b)| a * b).collect();
        (0..self.dim()).map(|j| positive_weight(&s, &self.f.column(j))).collect()
    }
}

fn positive_weight(s: &[f64], col: &[f64]) -> f64 {
    s.iter().zip(col).map(|(w, f)| w * f.max(0.0)).sum()
}

pub fn build_instance(k: u32, n: usize, alpha: &[f64], beta: &[f64]) -> Result<LowerBoundInstance, LowerBoundError> {
    let f = linalg::hadamard(k)?;
    let dim = f.rows();
    if alpha.len() != dim || beta.len() != dim {
        return Err(LowerBoundError::InvalidArgument(format!(
            "alpha and beta need length {dim}, got {} and {}",
            alpha.len(),
            beta.len()
        )));
    }
    if alpha.iter().chain(beta).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(LowerBoundError::InvalidArgument("alpha and beta must be positive".into()));
    }
    let s: Vec<f64> = alpha.iter().zip(beta).map(|(a, b)| a * b).collect();
    let mut adjusted = f.clone();
    for j in 0..dim {
        let col = f.column(j);
        let neg: Vec<f64> = col.iter().map(|v| -v).collect();
        if positive_weight(&s, &neg) > positive_weight(&s, &col) {
            for (i, v) in neg.into_iter().enumerate() {
                adjusted.set(i, j, v);
            }
        }
    }
    Ok(LowerBoundInstance {
        k,
        n,
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        f: adjusted,
        dataset: data::adversarial_basis(k, n)?,
    })
}

/// Weights realizing the supremum direction for one sign vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// `1 x h`.
    pub v: Matrix,
    /// `h x d`.
    pub u: Matrix,
    /// Which columns of `F` were kept.
    pub kept: Vec<bool>,
}

impl Witness {
    /// Single-output network with zero reference weights.
    pub fn network(&self) -> Result<TwoLayerNet, LowerBoundError> {
        let (h, d) = self.u.shape();
        Ok(TwoLayerNet::new(
            self.u.clone(),
            self.v.clone(),
            Matrix::zeros(h, d),
            Matrix::zeros(1, h),
            0,
            crate::nn::InitScheme::Explicit,
        )?)
    }
}

fn group_sums(inst: &LowerBoundInstance, xi: &[i8]) -> Vec<i64> {
    (0..inst.dim()).map(|j| xi[j * inst.n..(j + 1) * inst.n].iter().map(|&s| i64::from(s)).sum()).collect()
}

fn check_signs(inst: &LowerBoundInstance, xi: &[i8]) -> Result<(), LowerBoundError> {
    if xi.len() != inst.m() {
        return Err(LowerBoundError::InvalidArgument(format!("need {} signs, got {}", inst.m(), xi.len())));
    }
    if xi.iter().any(|&s| s != 1 && s != -1) {
        return Err(LowerBoundError::InvalidArgument("signs must be +1 or -1".into()));
    }
    Ok(())
}

/// Builds the witness for `xi` and checks it against the class constraints.
pub fn witness(inst: &LowerBoundInstance, xi: &[i8]) -> Result<Witness, LowerBoundError> {
    check_signs(inst, xi)?;
    let w = build_witness(inst, xi);
    check_feasible(inst, &w)?;
    Ok(w)
}

fn build_witness(inst: &LowerBoundInstance, xi: &[i8]) -> Witness {
    let dim = inst.dim();
    let kept: Vec<bool> = group_sums(inst, xi).into_iter().map(|e| e >= 0).collect();
    let u = Matrix::from_fn(dim, dim, |i, j| if kept[j] { inst.beta[i] * inst.f.get(i, j) } else { 0.0 });
    let v = Matrix::new(1, dim, inst.alpha.clone()).expect("positive alpha");
    Witness { v, u, kept }
}

/// `||v_j|| <= alpha_j`, `||u_j||_2 <= beta_j` and `||U||_2 <= max_j beta_j`
/// (reference weights are zero).
pub fn check_feasible(inst: &LowerBoundInstance, w: &Witness) -> Result<(), LowerBoundError> {
    let slack = |bound: f64| bound * (1.0 + FEASIBILITY_TOL) + 1e-15;
    for j in 0..inst.dim() {
        let vj = w.v.get(0, j).abs();
        if vj > slack(inst.alpha[j]) {
            return Err(LowerBoundError::Infeasible(format!("|v_{j}| = {vj} > alpha_{j} = {}", inst.alpha[j])));
        }
        let uj = linalg::l2_norm(w.u.row(j));
        if uj > slack(inst.beta[j]) {
            return Err(LowerBoundError::Infeasible(format!("||u_{j}|| = {uj} > beta_{j} = {}", inst.beta[j])));
        }
    }
    let bmax = inst.beta.iter().fold(0.0_f64, |m, &b| m.max(b));
    let spec = linalg::spectral_norm(&w.u, 1e-12, linalg::SPECTRAL_MAX_ITER)?.value;
    if spec > slack(bmax) {
        return Err(LowerBoundError::Infeasible(format!("||U||_2 = {spec} > max beta = {bmax}")));
    }
    Ok(())
}

/// `sum_i xi_i f(x_i)` for the witness network.
pub fn witness_value(inst: &LowerBoundInstance, xi: &[i8]) -> Result<f64, LowerBoundError> {
    let net = witness(inst, xi)?.network()?;
    let scores = net.batch_scores(inst.dataset.x())?;
    Ok(xi.iter().enumerate().map(|(i, &s)| f64::from(s) * scores.get(i, 0)).sum())
}

/// Closed form of [`witness_value`]: `sum_j [eps_j]_+ <s, [f_j]_+>`.
pub fn witness_value_closed_form(inst: &LowerBoundInstance, xi: &[i8]) -> f64 {
    let weights = inst.column_weights();
    group_sums(inst, xi).into_iter().zip(weights).map(|(e, w)| e.max(0) as f64 * w).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EstimateMode {
    Exact,
    Sampled { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// `(1/m) E_xi[value(xi)]`.
    pub value: f64,
    /// Standard error of `value`; zero in exact mode.
    pub std_error: f64,
    pub evaluations: usize,
}

fn signs_from_bits(bits: u64, m: usize, buf: &mut [i8]) {
    for (i, s) in buf.iter_mut().enumerate().take(m) {
        *s = if bits >> i & 1 == 1 { 1 } else { -1 };
    }
}

const SIGN_CHUNK: usize = 1024;

/// Lower estimate of the empirical Rademacher complexity of the constrained
/// class, averaging the witness value over all (exact) or sampled sign
/// vectors. Each witness is checked for feasibility.
pub fn rademacher_lower_estimate(inst: &LowerBoundInstance, mode: EstimateMode, strategy: Strategy) -> Result<Estimate, LowerBoundError> {
    let m = inst.m();
    match mode {
        EstimateMode::Exact => {
            if m > MAX_EXACT_M {
                return Err(LowerBoundError::TooLarge(format!("exact mode needs m <= {MAX_EXACT_M}, got {m}")));
            }
            let total = 1usize << m;
            let ranges = exec::chunk_ranges(total, SIGN_CHUNK);
            let parts = exec::map_slice(strategy, &ranges, |r| -> Result<f64, LowerBoundError> {
                let mut xi = vec![0i8; m];
                let mut acc = 0.0;
                for bits in r.clone() {
                    signs_from_bits(bits as u64, m, &mut xi);
                    acc += witness_value(inst, &xi)?;
                }
                Ok(acc)
            });
            let mut sum = 0.0;
            for p in parts {
                sum += p?;
            }
            Ok(Estimate { value: sum / total as f64 / m as f64, std_error: 0.0, evaluations: total })
        }
        EstimateMode::Sampled { trials, seed } => {
            if trials < 2 {
                return Err(LowerBoundError::InvalidArgument("sampled mode needs at least 2 trials".into()));
            }
            let base = rng::substream_seed(seed, "sampling");
            let ranges = exec::chunk_ranges(trials, SIGN_CHUNK);
            let parts = exec::map_indexed(strategy, ranges.len(), |c| -> Result<[f64; 2], LowerBoundError> {
                let mut r = rng::substream(base ^ c as u64, "chunk");
                let mut xi = vec![0i8; m];
                let mut acc = [0.0; 2];
                for _ in ranges[c].clone() {
                    for s in xi.iter_mut() {
                        *s = if r.gen::<bool>() { 1 } else { -1 };
                    }
                    let v = witness_value(inst, &xi)?;
                    acc[0] += v;
                    acc[1] += v * v;
                }
                Ok(acc)
            });
            let (mut s1, mut s2) = (0.0, 0.0);
            for p in parts {
                let [a, b] = p?;
                s1 += a;
                s2 += b;
            }
            let t = trials as f64;
            let mean = s1 / t;
            let var = ((s2 - t * mean * mean) / (t - 1.0)).max(0.0);
            let mf = m as f64;
            Ok(Estimate { value: mean / mf, std_error: (var / t).sqrt() / mf, evaluations: trials })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticValue {
    /// `alpha^T beta sqrt(2m) / (8m)`, for the power-of-two construction.
    pub power_of_two: f64,
    /// `alpha^T beta sqrt(m) / (16m)`, when sizes are not powers of two.
    pub general: f64,
}

pub fn analytic_lower_value(inst: &LowerBoundInstance) -> AnalyticValue {
    let m = inst.m() as f64;
    let s = inst.s_total();
    AnalyticValue { power_of_two: s * (2.0 * m).sqrt() / (8.0 * m), general: s * m.sqrt() / (16.0 * m) }
}

/// Exact `E |xi_1 + ... + xi_n|` from binomial weights.
pub fn abs_sum_expectation(n: usize) -> Result<f64, LowerBoundError> {
    if n > MAX_ABS_SUM_N {
        return Err(LowerBoundError::TooLarge(format!("n must be at most {MAX_ABS_SUM_N}, got {n}")));
    }
    let mut binom: u128 = 1;
    let mut total: u128 = 0;
    for j in 0..=n {
        total += (n as i64 - 2 * j as i64).unsigned_abs() as u128 * binom;
        binom = binom * (n - j) as u128 / (j + 1) as u128;
    }
    Ok(total as f64 / (1u128 << n) as f64)
}

/// `(||v||_2, sqrt(2) E|<xi, v>|)` with the expectation computed exactly.
pub fn contraction_check(v: &[f64]) -> Result<(f64, f64), LowerBoundError> {
    let n = v.len();
    if n > MAX_CONTRACTION_DIM {
        return Err(LowerBoundError::TooLarge(format!("dimension must be at most {MAX_CONTRACTION_DIM}, got {n}")));
    }
    let total = 1u64 << n;
    let mut sum = 0.0;
    for bits in 0..total {
        let dot: f64 = v.iter().enumerate().map(|(i, x)| if bits >> i & 1 == 1 { *x } else { -x }).sum();
        sum += dot.abs();
    }
    Ok((linalg::l2_norm(v), 2f64.sqrt() * sum / total as f64))
}

/// Largest `c m` enumerated exactly by [`brute_force_linear_rademacher`].
pub const MAX_LINEAR_EXACT: usize = 20;
/// Largest `c d` for which the grid cross-check runs.
pub const MAX_GRID_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRademacher {
    /// `E_xi sup_{||V - V0||_F <= r} sum_i <xi_i, V x_i>`.
    pub value: f64,
    /// Grid-search approximation of the same quantity (a lower estimate).
    pub grid_value: Option<f64>,
    /// `r sqrt(c) ||X||_F`.
    pub bound: f64,
    pub exact: bool,
}

/// Linear class `{x -> V x : ||V - V0||_F <= r}` with `c` outputs over the
/// columns of `x` (`d x m`). The supremum for fixed signs is
/// `r ||sum_i xi_i x_i^T||_F`; the mean over `V0` vanishes. All `2^(cm)`
/// sign patterns are enumerated when `c m <= 20`, otherwise `2^16` seeded
/// draws are used. `grid_density > 0` adds a grid search over directions.
pub fn brute_force_linear_rademacher(c: usize, r: f64, x: &Matrix, grid_density: usize) -> Result<LinearRademacher, LowerBoundError> {
    let (d, m) = x.shape();
    if c == 0 || !(r >= 0.0) {
        return Err(LowerBoundError::InvalidArgument(format!("need c >= 1 and r >= 0, got c={c}, r={r}")));
    }
    if m > 12 {
        return Err(LowerBoundError::TooLarge(format!("m must be at most 12, got {m}")));
    }
    if grid_density > 0 && c * d > MAX_GRID_DIM {
        return Err(LowerBoundError::TooLarge(format!("grid search needs c d <= {MAX_GRID_DIM}, got {}", c * d)));
    }
    let grid = (grid_density > 0).then(|| grid_directions(c * d, grid_density));
    let nbits = c * m;
    let exact = nbits <= MAX_LINEAR_EXACT;
    let (count, mut sampler) = if exact {
        (1usize << nbits, None)
    } else {
        (1usize << 16, Some(rng::substream(0x11ea5, "linear-sampling")))
    };
    let mut sum = 0.0;
    let mut grid_sum = 0.0;
    let mut mat = vec![0.0; c * d];
    for t in 0..count {
        let bits: u64 = match sampler.as_mut() {
            None => t as u64,
            Some(r) => r.gen(),
        };
        // M = sum_i xi_i x_i^T, stored c x d.
        mat.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            for k in 0..c {
                let sign = if bits >> (i * c + k) & 1 == 1 { 1.0 } else { -1.0 };
                for j in 0..d {
                    mat[k * d + j] += sign * x.get(j, i);
                }
            }
        }
        sum += r * linalg::l2_norm(&mat);
        if let Some(g) = &grid {
            let best = g.iter().map(|dir| linalg::dot(dir, &mat)).fold(0.0_f64, f64::max);
            grid_sum += r * best;
        }
    }
    Ok(LinearRademacher {
        value: sum / count as f64,
        grid_value: grid.map(|_| grid_sum / count as f64),
        bound: r * (c as f64).sqrt() * linalg::frobenius_norm(x),
        exact,
    })
}

/// Unit vectors through the points of `{-1, -1 + 2/g, ..., 1}^dim`.
fn grid_directions(dim: usize, g: usize) -> Vec<Vec<f64>> {
    let pts = g + 1;
    let total = pts.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut v = vec![0.0; dim];
        for x in v.iter_mut() {
            *x = -1.0 + 2.0 * (idx % pts) as f64 / g as f64;
            idx /= pts;
        }
        let n = linalg::l2_norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(k: u32) -> Vec<f64> {
        vec![1.0; 1 << k]
    }

    #[test]
    fn instance_examples() {
        let inst = build_instance(0, 3, &[1.0], &[1.0]).unwrap();
        assert_eq!(inst.dataset.x().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(inst.f.as_slice(), &[1.0]);
        let inst = build_instance(1, 1, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(inst.m(), 2);
        let bound = 2f64.powf(-0.5 - 1.0) * 2.0;
        for w in inst.column_weights() {
            assert!(w >= bound - 1e-15);
        }
        assert!((linalg::frobenius_norm(inst.dataset.x()) - 2f64.sqrt()).abs() < 1e-15);
        assert!(build_instance(1, 1, &[1.0], &[1.0, 1.0]).is_err());
        assert!(build_instance(0, 1, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn sign_choice_beats_the_alternative() {
        let alpha = [0.3, 2.0, 0.7, 1.1];
        let beta = [1.5, 0.2, 0.9, 0.4];
        let inst = build_instance(2, 1, &alpha, &beta).unwrap();
        let raw = linalg::hadamard(2).unwrap();
        let s: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| a * b).collect();
        for j in 0..4 {
            let col = raw.column(j);
            let neg: Vec<f64> = col.iter().map(|v| -v).collect();
            let best = positive_weight(&s, &col).max(positive_weight(&s, &neg));
            assert!((inst.column_weights()[j] - best).abs() < 1e-15);
        }
    }

    #[test]
    fn witness_examples() {
        let inst = build_instance(1, 1, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        let all = witness(&inst, &[1, 1]).unwrap();
        assert!(all.kept.iter().all(|&k| k));
        assert_eq!(all.u, inst.f);
        let one = witness(&inst, &[1, -1]).unwrap();
        assert_eq!(one.kept, vec![true, false]);
        let inst3 = build_instance(1, 3, &[1.0, 2.0], &[0.5, 1.0]).unwrap();
        let none = witness(&inst3, &[-1; 6]).unwrap();
        assert!(none.u.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(witness_value(&inst3, &[-1; 6]).unwrap(), 0.0);
        assert!(witness(&inst, &[1, 0]).is_err());
    }

    #[test]
    fn witness_value_matches_closed_form() {
        let inst = build_instance(2, 2, &[0.5, 1.0, 1.5, 2.0], &[1.0, 0.3, 0.7, 0.2]).unwrap();
        let mut xi = vec![0i8; 8];
        for bits in 0..256u64 {
            signs_from_bits(bits, 8, &mut xi);
            let a = witness_value(&inst, &xi).unwrap();
            let b = witness_value_closed_form(&inst, &xi);
            assert!((a - b).abs() < 1e-12, "{bits}");
        }
    }

    #[test]
    fn exact_estimate_examples() {
        let inst = build_instance(0, 1, &[1.0], &[1.0]).unwrap();
        let e = rademacher_lower_estimate(&inst, EstimateMode::Exact, Strategy::Sequential).unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
        assert!(e.value >= analytic_lower_value(&inst).power_of_two);
        let big = build_instance(0, 21, &[1.0], &[1.0]).unwrap();
        assert!(matches!(
            rademacher_lower_estimate(&big, EstimateMode::Exact, Strategy::Sequential),
            Err(LowerBoundError::TooLarge(_))
        ));
    }

    #[test]
    fn exact_certifies_analytic_on_k2_n2() {
        let inst = build_instance(2, 2, &ones(2), &ones(2)).unwrap();
        let e = rademacher_lower_estimate(&inst, EstimateMode::Exact, Strategy::Parallel).unwrap();
        assert!(e.value >= analytic_lower_value(&inst).power_of_two - 1e-12);
    }

    #[test]
    fn sampled_is_close_to_exact_and_deterministic() {
        let inst = build_instance(1, 3, &[1.0, 0.5], &[0.8, 1.2]).unwrap();
        let exact = rademacher_lower_estimate(&inst, EstimateMode::Exact, Strategy::Sequential).unwrap();
        let mode = EstimateMode::Sampled { trials: 20_000, seed: 4 };
        let a = rademacher_lower_estimate(&inst, mode, Strategy::Sequential).unwrap();
        let b = rademacher_lower_estimate(&inst, mode, Strategy::Parallel).unwrap();
        assert_eq!(a, b);
        assert!((a.value - exact.value).abs() < 5.0 * a.std_error + 1e-12);
    }

    #[test]
    fn analytic_examples() {
        let inst = build_instance(1, 1, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((analytic_lower_value(&inst).power_of_two - 0.25).abs() < 1e-15);
        let scaled = build_instance(1, 1, &[3.0, 3.0], &[1.0, 1.0]).unwrap();
        assert!((analytic_lower_value(&scaled).power_of_two - 0.75).abs() < 1e-15);
    }

    #[test]
    fn abs_sum_examples() {
        assert_eq!(abs_sum_expectation(1).unwrap(), 1.0);
        assert_eq!(abs_sum_expectation(2).unwrap(), 1.0);
        assert_eq!(abs_sum_expectation(4).unwrap(), 1.5);
        for n in 1..=MAX_ABS_SUM_N {
            assert!(abs_sum_expectation(n).unwrap() >= (n as f64 / 2.0).sqrt());
        }
        assert!(abs_sum_expectation(41).is_err());
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_check(&[1.0, 0.0]).unwrap(), (1.0, 2f64.sqrt()));
        let (l, r) = contraction_check(&[1.0, 1.0]).unwrap();
        assert!((l - 2f64.sqrt()).abs() < 1e-15 && (r - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(contraction_check(&[0.0; 3]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn linear_examples() {
        let x = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(brute_force_linear_rademacher(1, 0.0, &x, 0).unwrap().value, 0.0);
        let one = brute_force_linear_rademacher(1, 1.0, &x, 0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-15);
        assert!(one.value <= one.bound + 1e-12);
    }

    #[test]
    fn linear_grid_cross_check() {
        let x = Matrix::random_normal(2, 3, 1.0, 8);
        let res = brute_force_linear_rademacher(2, 1.5, &x, 12).unwrap();
        let g = res.grid_value.unwrap();
        assert!(g <= res.value + 1e-12);
        assert!(g >= 0.97 * res.value, "{g} vs {}", res.value);
        assert!(res.value <= res.bound);
    }
}
