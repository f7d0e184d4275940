//! Subcommand bodies.

use std::path::{Path, PathBuf};

use capmeter_core::bounds::{self, CoverSpec};
use capmeter_core::data::DatasetSpec;
use capmeter_core::exec::{self, Strategy};
use capmeter_core::lowerbound::{self, AnalyticValue, Estimate, EstimateMode};
use capmeter_core::measures::{self, MeasurePanel};
use capmeter_core::nn::{self, MarginParams};
use capmeter_core::train::{self, TrainConfig, TrainReport};
use capmeter_core::{linalg, LabeledDataset, TwoLayerNet};
use serde::{Deserialize, Serialize};

use crate::args::{
    BoundsArgs, CompareArgs, CoverArgs, GammaArg, LowerboundArgs, MarginArgs, MeasureArgs, ModeArg, OptimArgs,
    SelftestArgs, Split, SweepArgs, TrainArgs,
};
use crate::dataset;
use crate::error::{code, CliError, CliResult};
use crate::summary::{self, SummaryRow, SweepSummary};
use crate::{json_bytes, write_output};

/// Name of the manifest `sweep` leaves in its output directory.
pub const MANIFEST: &str = "sweep.json";

fn train_config(o: &OptimArgs) -> TrainConfig {
    TrainConfig {
        lr: o.lr,
        momentum: o.momentum,
        batch_size: o.batch,
        stop_loss: o.stop_loss,
        max_epochs: o.max_epochs,
        seed: o.seed,
        init_scheme: o.init,
        shuffle: !o.no_shuffle,
    }
}

fn strategy(sequential: bool) -> Strategy {
    if sequential {
        Strategy::Sequential
    } else {
        Strategy::Parallel
    }
}

fn report_line(h: usize, r: &TrainReport) -> String {
    format!(
        "h={h} epochs={} train_ce={:.6} reached_stop={}",
        r.epochs_run, r.final_train_cross_entropy, r.reached_stop
    )
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let cfg = train_config(&a.optim);
    cfg.validate()?;
    let spec = dataset::require_spec(&a.data, cfg.seed)?;
    let data = dataset::load(&spec)?;
    let mut net = train::init_network(data.d(), a.h, data.classes(), cfg.init_scheme, cfg.seed)?;
    let report = train::train(&mut net, &data, &cfg)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::write(&parent.display().to_string(), &e))?;
    }
    train::persist(&net, &report, &data, &cfg, &a.out)?;
    println!("{} -> {}", report_line(a.h, &report), a.out.display());
    if !report.reached_stop {
        eprintln!("warning: stopping loss {} not reached within {} epochs", cfg.stop_loss, cfg.max_epochs);
    }
    Ok(())
}

/// Record of how a sweep directory was produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepManifest {
    pub widths: Vec<usize>,
    pub data: DatasetSpec,
    pub test_data: Option<DatasetSpec>,
    pub train_config: TrainConfig,
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let cfg = train_config(&a.optim);
    cfg.validate()?;
    if a.widths.iter().any(|&h| h == 0) {
        return Err(CliError::invalid("widths must be positive"));
    }
    let spec = dataset::require_spec(&a.data, cfg.seed)?;
    let data = dataset::load(&spec)?;
    let manifest = SweepManifest {
        widths: a.widths.clone(),
        test_data: dataset::sibling_test_spec(&spec),
        data: spec,
        train_config: cfg.clone(),
    };
    let entries = train::width_sweep(&a.widths, &data, &cfg, Some(&a.out_dir), strategy(a.sequential))?;
    write_output(&a.out_dir.join(MANIFEST), &json_bytes(&manifest))?;
    let mut failures = 0;
    for e in &entries {
        match &e.result {
            Ok((_, report)) => {
                let path = e.checkpoint.as_deref().map(Path::display).map(|d| d.to_string()).unwrap_or_default();
                println!("{} seed={} -> {path}", report_line(e.h, report), e.seed);
            }
            Err(err) => {
                failures += 1;
                eprintln!("h={} seed={}: training failed: {err}", e.h, e.seed);
            }
        }
    }
    if failures > 0 {
        return Err(CliError::new(code::TRAINING_FAILED, format!("{failures} of {} widths failed", entries.len())));
    }
    Ok(())
}

fn load_net(path: &Path) -> CliResult<TwoLayerNet> {
    if !path.exists() {
        return Err(CliError::new(code::MISSING_FILE, format!("{}: no such file", path.display())));
    }
    Ok(nn::load_checkpoint(path)?.0)
}

const MEASURE_COLUMNS: [&str; 21] = [
    "ckpt",
    "h",
    "d",
    "c",
    "m",
    "train_error",
    "gamma_5pct",
    "beta_max",
    "beta_mean",
    "beta_median",
    "alpha_max",
    "alpha_mean",
    "alpha_median",
    "fro_u",
    "fro_v",
    "fro_du",
    "fro_dv",
    "spec_u",
    "spec_u0",
    "spec_v",
    "capacity_numerator",
];

fn measure_schema() -> String {
    let types: Vec<String> = MEASURE_COLUMNS
        .iter()
        .map(|c| {
            let t = match *c {
                "ckpt" => "str",
                "h" | "d" | "c" | "m" => "int",
                _ => "float",
            };
            format!("{c}:{t}")
        })
        .collect();
    format!("#schema=capmeter.measure_summary/1;{}", types.join(";"))
}

fn measure_row(ckpt: &Path, p: &MeasurePanel) -> Vec<String> {
    let f = summary::fmt_value;
    let mut row = vec![ckpt.display().to_string(), p.h.to_string(), p.d.to_string(), p.c.to_string(), p.m.to_string()];
    row.extend(
        [
            p.train_error,
            p.gamma_5pct,
            p.beta_summary.max,
            p.beta_summary.mean,
            p.beta_summary.median,
            p.alpha_summary.max,
            p.alpha_summary.mean,
            p.alpha_summary.median,
            p.fro_u,
            p.fro_v,
            p.fro_du,
            p.fro_dv,
            p.spec_u,
            p.spec_u0,
            p.spec_v,
            p.capacity_numerator,
        ]
        .into_iter()
        .map(f),
    );
    row
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Appends one row, writing the schema and header first for a new file.
fn append_measure_csv(path: &Path, row: &[String]) -> CliResult<()> {
    let schema = measure_schema();
    let header: Vec<String> = MEASURE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let header = csv_line(&header);
    let mut text = match std::fs::read_to_string(path) {
        Ok(existing) => {
            let mut lines = existing.lines();
            if lines.next() != Some(schema.as_str()) || lines.next() != Some(header.trim_end()) {
                return Err(CliError::invalid(format!("{}: existing file has a different schema", path.display())));
            }
            existing
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => format!("{schema}\n{header}"),
        Err(e) => return Err(CliError::read(&path.display().to_string(), &e)),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    text.push_str(&csv_line(row));
    write_output(path, text.as_bytes())
}

pub fn measure(a: MeasureArgs) -> CliResult<()> {
    let net = load_net(&a.ckpt)?;
    let data = dataset::load(&dataset::require_spec(&a.data, 0)?)?;
    if !(a.gamma_percentile > 0.0 && a.gamma_percentile <= 100.0) {
        return Err(CliError::invalid(format!("--gamma-percentile must lie in (0, 100], got {}", a.gamma_percentile)));
    }
    let panel = measures::measure_panel(&net, &data, a.gamma_percentile)?;
    let json = json_bytes(&panel);
    match &a.out {
        Some(out) => write_output(out, &json)?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    if let Some(csv) = &a.csv {
        append_measure_csv(csv, &measure_row(&a.ckpt, &panel))?;
    }
    Ok(())
}

/// Resolves `--gamma`, returning the value and a description of its source.
fn resolve_gamma(m: &MarginArgs, net: &TwoLayerNet, data: &LabeledDataset) -> CliResult<(f64, String)> {
    match m.gamma {
        GammaArg::Value(g) => Ok((g, "given".into())),
        GammaArg::Auto => {
            let margins = nn::margin_distribution(net, data)?;
            let g = linalg::percentile_nearest_rank(&margins, m.gamma_percentile)?;
            if !(g > 0.0) {
                return Err(CliError::invalid(format!(
                    "h={}: the {} percentile margin is {g}, not positive; pass --gamma explicitly",
                    net.h(),
                    m.gamma_percentile
                )));
            }
            Ok((g, format!("percentile {} of training margins (nearest rank)", m.gamma_percentile)))
        }
    }
}

fn bound_panel(m: &MarginArgs, net: &TwoLayerNet, data: &LabeledDataset) -> CliResult<bounds::BoundPanel> {
    let (gamma, source) = resolve_gamma(m, net, data)?;
    let params = MarginParams::new(gamma, m.delta)?;
    let mut panel = bounds::bound_panel(net, data, params, &m.p)?;
    panel.metadata.insert("gamma_source".into(), source);
    Ok(panel)
}

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    let net = load_net(&a.ckpt)?;
    let data = dataset::load(&dataset::require_spec(&a.data, 0)?)?;
    let panel = bound_panel(&a.margin, &net, &data)?;
    let json = json_bytes(&panel);
    match &a.out {
        Some(out) => write_output(out, &json)?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    Ok(())
}

/// Checkpoints `h<digits>.capm` in `dir`, sorted by width.
fn sweep_checkpoints(dir: &Path) -> CliResult<Vec<(usize, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::read(&dir.display().to_string(), &e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::read(&dir.display().to_string(), &e))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let width = name.strip_prefix('h').and_then(|s| s.strip_suffix(".capm")).and_then(|s| s.parse::<usize>().ok());
        if let Some(h) = width {
            out.push((h, path));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::new(code::MISSING_FILE, format!("{}: no h<width>.capm checkpoints", dir.display())));
    }
    Ok(out)
}

fn read_manifest(dir: &Path) -> CliResult<Option<SweepManifest>> {
    let path = dir.join(MANIFEST);
    match std::fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| CliError::new(code::BAD_INPUT, format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::read(&path.display().to_string(), &e)),
    }
}

fn summary_row(
    h: usize,
    ckpt: &Path,
    data: &LabeledDataset,
    test: Option<&LabeledDataset>,
    m: &MarginArgs,
) -> CliResult<SummaryRow> {
    let net = load_net(ckpt)?;
    if net.h() != h {
        return Err(CliError::new(code::BAD_INPUT, format!("{}: file name says h={h}, checkpoint has h={}", ckpt.display(), net.h())));
    }
    let rp = train::report_path(ckpt);
    let bytes = std::fs::read(&rp).map_err(|e| CliError::read(&rp.display().to_string(), &e))?;
    let report: TrainReport =
        serde_json::from_slice(&bytes).map_err(|e| CliError::new(code::BAD_INPUT, format!("{}: {e}", rp.display())))?;
    let measures = measures::measure_panel(&net, data, m.gamma_percentile)?;
    let bounds = bound_panel(m, &net, data)?;
    let test_error = match test {
        Some(t) => Some(nn::empirical_margin_loss(&net, t, 0.0)?),
        None => None,
    };
    Ok(SummaryRow { h, epochs: report.epochs_run, test_error, measures, bounds })
}

pub fn compare(a: CompareArgs) -> CliResult<()> {
    let manifest = read_manifest(&a.sweep_dir)?;
    let seed = manifest.as_ref().map_or(0, |mf| mf.train_config.seed);
    let spec = match (dataset::spec_from_args(&a.data, seed)?, &manifest) {
        (Some(spec), _) => spec,
        (None, Some(mf)) => mf.data.clone(),
        (None, None) => {
            return Err(CliError::usage(format!(
                "{} has no {MANIFEST}; pass --data or --synthetic",
                a.sweep_dir.display()
            )))
        }
    };
    let test_spec = match &a.test_data {
        Some(path) => Some(DatasetSpec {
            normalize: a.data.normalize.into(),
            ..DatasetSpec::new(dataset::source_for_path(path, Split::Test)?)
        }),
        None if !a.data.given() => manifest.as_ref().and_then(|mf| mf.test_data.clone()),
        None => None,
    };
    let data = dataset::load(&spec)?;
    let test = test_spec.as_ref().map(dataset::load).transpose()?;
    let ckpts = sweep_checkpoints(&a.sweep_dir)?;
    let rows = exec::map_slice(strategy(a.sequential), &ckpts, |(h, path)| summary_row(*h, path, &data, test.as_ref(), &a.margin));
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let table = SweepSummary::build(rows)?;
    let csv = table.to_csv();
    match &a.out {
        Some(out) => write_output(out, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let Some(svg) = &a.svg {
        let columns = if a.svg_columns.is_empty() { table.normalized_columns() } else { a.svg_columns.clone() };
        summary::emit_svg(&table, &columns, svg)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct LowerBoundReport {
    k: u32,
    n: usize,
    m: usize,
    dim: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// `sum_j alpha_j beta_j`.
    s_total: f64,
    mode: EstimateMode,
    estimate: Estimate,
    analytic: AnalyticValue,
    /// `estimate - analytic.power_of_two`.
    certification_margin: f64,
    /// Margin in standard errors; absent in exact mode.
    certification_z: Option<f64>,
    certified: bool,
    /// Upper value `sum_j alpha_j beta_j ||X||_F / m` on the same class.
    upper_value: f64,
    upper_margin: f64,
}

pub fn lowerbound(a: LowerboundArgs) -> CliResult<()> {
    if a.k > 12 {
        return Err(CliError::invalid(format!("--k {} is too large; at most 12", a.k)));
    }
    let dim = 1usize << a.k;
    let budget = |v: &[f64], name: &str| -> CliResult<Vec<f64>> {
        match v.len() {
            0 => Ok(vec![1.0; dim]),
            1 => Ok(vec![v[0]; dim]),
            n if n == dim => Ok(v.to_vec()),
            n => Err(CliError::invalid(format!("--{name} needs 1 or {dim} values, got {n}"))),
        }
    };
    let alpha = budget(&a.alpha, "alpha")?;
    let beta = budget(&a.beta, "beta")?;
    let inst = lowerbound::build_instance(a.k, a.n, &alpha, &beta)?;
    let mode = match a.mode {
        ModeArg::Exact => EstimateMode::Exact,
        ModeArg::Sampled => EstimateMode::Sampled { trials: a.trials, seed: a.seed },
    };
    let estimate = lowerbound::rademacher_lower_estimate(&inst, mode, strategy(a.sequential))?;
    let analytic = lowerbound::analytic_lower_value(&inst);
    let margin = estimate.value - analytic.power_of_two;
    let z = (estimate.std_error > 0.0).then(|| margin / estimate.std_error);
    let m = inst.m();
    let x_fro = (m as f64).sqrt();
    let upper_value = inst.s_total() * x_fro / m as f64;
    let report = LowerBoundReport {
        k: a.k,
        n: a.n,
        m,
        dim,
        s_total: inst.s_total(),
        alpha,
        beta,
        mode,
        estimate,
        analytic,
        certification_margin: margin,
        certification_z: z,
        certified: z.map_or(margin >= -1e-12, |z| z >= -3.0),
        upper_value,
        upper_margin: upper_value - estimate.value,
    };
    println!(
        "m={m} estimate={:.6e} (se {:.2e}) analytic={:.6e} margin={:.3e} certified={}",
        estimate.value, estimate.std_error, analytic.power_of_two, margin, report.certified
    );
    if let Some(out) = &a.out {
        write_output(out, &json_bytes(&report))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CoverReport {
    spec: CoverSpec,
    k: u64,
    ln_n: f64,
    box_norm_bound: f64,
    boxes: Option<Vec<Vec<f64>>>,
}

pub fn cover(a: CoverArgs) -> CliResult<()> {
    let spec = CoverSpec { dim: a.dim, p: a.p, eps: a.eps, beta: a.beta };
    let k = spec.k()?;
    let ln_n = bounds::cover_count_log(&spec)?;
    println!("K={k}");
    println!("ln N = {ln_n}");
    if ln_n < 40.0 {
        println!("N = {}", ln_n.exp().round());
    }
    let boxes = if a.construct {
        let boxes = bounds::cover_construct(&spec)?;
        let max_norm = boxes.iter().map(|b| linalg::l2_norm(b)).fold(0.0, f64::max);
        println!("boxes = {} (max l2 norm {max_norm}, bound {})", boxes.len(), spec.box_norm_bound());
        Some(boxes)
    } else {
        None
    };
    if let Some(out) = &a.out {
        let report = CoverReport { spec, k, ln_n, box_norm_bound: spec.box_norm_bound(), boxes };
        write_output(out, &json_bytes(&report))?;
    }
    Ok(())
}

pub fn selftest(a: SelftestArgs) -> CliResult<()> {
    let (lines, ok) = crate::selftest::run(a.trials, a.seed);
    for l in &lines {
        println!("{l}");
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::new(code::SELFTEST_FAILED, "selftest failed"))
    }
}
