//! Compact property checks runnable from an installed binary.

use capmeter_core::bounds::{self, cover_construct, cover_count_log, CoverSpec, DataTerms};
use capmeter_core::data::synthetic_gaussian;
use capmeter_core::exec::Strategy;
use capmeter_core::linalg::{self, Axis, InnerNorm};
use capmeter_core::lowerbound::{self, EstimateMode};
use capmeter_core::nn::{self, InitScheme};
use capmeter_core::{measures, rng, Matrix, TwoLayerNet};
use rand::Rng as _;

type Check = fn(u64) -> Result<(), String>;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn random_net(seed: u64) -> TwoLayerNet {
    let mut r = rng::substream(seed, "selftest-shape");
    let (d, h, c) = (r.gen_range(1..6), r.gen_range(1..9), r.gen_range(2..5));
    let m = |rows, cols, name: &str| Matrix::random_normal(rows, cols, 1.0, rng::substream_seed(seed, name));
    TwoLayerNet::new(m(h, d, "u"), m(c, h, "v"), m(h, d, "u0"), m(c, h, "v0"), seed, InitScheme::Explicit).expect("shapes agree")
}

fn data_for(net: &TwoLayerNet, seed: u64) -> capmeter_core::LabeledDataset {
    synthetic_gaussian(net.d(), 12, net.c(), seed, 1.0).expect("valid synthetic spec")
}

fn norm_identities(seed: u64) -> Result<(), String> {
    let net = random_net(seed);
    let du = linalg::frobenius_norm(&net.u().sub(net.u0()).map_err(|e| e.to_string())?);
    let beta = linalg::l2_norm(&measures::unit_capacities(&net));
    let alpha = linalg::l2_norm(&measures::unit_impacts(&net));
    if !close(beta, du, 1e-9) || !close(alpha, linalg::frobenius_norm(net.v()), 1e-9) {
        return Err(format!("|beta|={beta} |U-U0|_F={du} |alpha|={alpha}"));
    }
    let g = linalg::group_norm(net.u(), Axis::Rows, 2.0, InnerNorm::L2).map_err(|e| e.to_string())?;
    if !close(g, linalg::frobenius_norm(net.u()), 1e-12) {
        return Err(format!("group (2,2) norm {g} differs from Frobenius"));
    }
    Ok(())
}

fn bound_forms(seed: u64) -> Result<(), String> {
    let net = random_net(seed);
    let data = data_for(&net, seed);
    let (first, second) = bounds::thm1_bounds(&net, &data, 0.5).map_err(|e| e.to_string())?;
    if first > second * (1.0 + 1e-12) {
        return Err(format!("first form {first} exceeds second form {second}"));
    }
    Ok(())
}

fn margin_homogeneity(seed: u64) -> Result<(), String> {
    let net = random_net(seed);
    let data = data_for(&net, seed);
    let t = 0.5 + rng::substream(seed, "selftest-scale").gen::<f64>() * 3.0;
    let scaled = net.with_weights(net.u().clone(), net.v().scaled(t)).map_err(|e| e.to_string())?;
    let a = nn::margin_distribution(&net, &data).map_err(|e| e.to_string())?;
    let b = nn::margin_distribution(&scaled, &data).map_err(|e| e.to_string())?;
    for (x, y) in a.iter().zip(&b) {
        if !close(x * t, *y, 1e-10) {
            return Err(format!("margin {x} scaled by {t} gave {y}"));
        }
    }
    Ok(())
}

fn ramp_loss(seed: u64) -> Result<(), String> {
    let mut r = rng::substream(seed, "selftest-ramp");
    let gamma = r.gen::<f64>() * 2.0;
    let mut mus: Vec<f64> = (0..50).map(|_| r.gen::<f64>() * 6.0 - 3.0).collect();
    mus.sort_by(f64::total_cmp);
    let losses: Vec<f64> = mus.iter().map(|&mu| nn::ramp_loss(mu, gamma)).collect();
    if losses.iter().any(|l| !(0.0..=1.0).contains(l)) || losses.windows(2).any(|w| w[1] > w[0]) {
        return Err(format!("ramp loss not in [0,1] or not nonincreasing at gamma={gamma}"));
    }
    if nn::mean_ramp_loss(&mus, 0.0) > nn::mean_ramp_loss(&mus, gamma) {
        return Err("0/1 loss exceeds ramp loss".into());
    }
    Ok(())
}

fn hadamard(seed: u64) -> Result<(), String> {
    let k = (seed % 7) as u32;
    let h = linalg::hadamard(k).map_err(|e| e.to_string())?;
    let g = h.matmul_transposed(&h).map_err(|e| e.to_string())?;
    let eye = Matrix::identity(h.rows());
    if g.as_slice().iter().zip(eye.as_slice()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(format!("H H^T != I for k={k}"));
    }
    Ok(())
}

fn cover(seed: u64) -> Result<(), String> {
    let spec = CoverSpec { dim: 2, p: 2.0, eps: 2f64.sqrt() - 1.0, beta: 1.0 };
    if spec.k().map_err(|e| e.to_string())? != 2 || !close(cover_count_log(&spec).map_err(|e| e.to_string())?, 3f64.ln(), 1e-12) {
        return Err("D=2, p=2, eps=sqrt(2)-1 should give K=2, N=3".into());
    }
    let mut r = rng::substream(seed, "selftest-cover");
    let spec = CoverSpec { dim: r.gen_range(1..5), p: 2.0 + r.gen::<f64>() * 3.0, eps: 0.2 + r.gen::<f64>(), beta: 1.0 };
    let boxes = cover_construct(&spec).map_err(|e| e.to_string())?;
    let n = cover_count_log(&spec).map_err(|e| e.to_string())?.exp();
    if boxes.len() as f64 > n * (1.0 + 1e-9) {
        return Err(format!("{} boxes exceed N={n}", boxes.len()));
    }
    let bound = spec.box_norm_bound() * (1.0 + 1e-12);
    if let Some(b) = boxes.iter().find(|b| linalg::l2_norm(b) > bound) {
        return Err(format!("box {b:?} exceeds norm bound {bound}"));
    }
    Ok(())
}

fn lower_bound(seed: u64) -> Result<(), String> {
    let mut r = rng::substream(seed, "selftest-lb");
    let alpha: Vec<f64> = (0..2).map(|_| 0.1 + r.gen::<f64>()).collect();
    let beta: Vec<f64> = (0..2).map(|_| 0.1 + r.gen::<f64>()).collect();
    let inst = lowerbound::build_instance(1, 2, &alpha, &beta).map_err(|e| e.to_string())?;
    let est = lowerbound::rademacher_lower_estimate(&inst, EstimateMode::Exact, Strategy::Sequential).map_err(|e| e.to_string())?;
    let analytic = lowerbound::analytic_lower_value(&inst).power_of_two;
    if est.value < analytic - 1e-12 {
        return Err(format!("estimate {} below analytic {analytic}", est.value));
    }
    Ok(())
}

fn checkpoint(seed: u64) -> Result<(), String> {
    let net = random_net(seed);
    let back = nn::decode(&nn::encode(&net), net.init()).map_err(|e| e.to_string())?;
    if back != net {
        return Err("checkpoint roundtrip changed the network".into());
    }
    Ok(())
}

fn strategies_agree(seed: u64) -> Result<(), String> {
    let net = random_net(seed);
    let data = data_for(&net, seed);
    let a = nn::margin_distribution_with(&net, &data, Strategy::Sequential).map_err(|e| e.to_string())?;
    let b = nn::margin_distribution_with(&net, &data, Strategy::Parallel).map_err(|e| e.to_string())?;
    let ta = DataTerms::compute(&net, &data, Strategy::Sequential).map_err(|e| e.to_string())?;
    let tb = DataTerms::compute(&net, &data, Strategy::Parallel).map_err(|e| e.to_string())?;
    if a != b || ta != tb {
        return Err("sequential and parallel results differ".into());
    }
    Ok(())
}

const CHECKS: [(&str, Check); 9] = [
    ("norm identities", norm_identities),
    ("bound forms ordered", bound_forms),
    ("margin homogeneity", margin_homogeneity),
    ("ramp loss", ramp_loss),
    ("hadamard orthogonality", hadamard),
    ("cover count and norms", cover),
    ("lower bound certificate", lower_bound),
    ("checkpoint roundtrip", checkpoint),
    ("strategy agreement", strategies_agree),
];

/// Runs every check `trials` times; returns one line per check and whether
/// all passed.
pub fn run(trials: usize, seed: u64) -> (Vec<String>, bool) {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, check) in CHECKS {
        let failure = (0..trials.max(1) as u64).find_map(|t| check(seed.wrapping_add(t)).err().map(|e| (t, e)));
        match failure {
            None => lines.push(format!("ok    {name} ({} trials)", trials.max(1))),
            Some((t, e)) => {
                ok = false;
                lines.push(format!("FAIL  {name} (trial {t}): {e}"));
            }
        }
    }
    (lines, ok)
}
