//! Turns data flags into a [`DatasetSpec`].

use std::path::{Path, PathBuf};

use capmeter_core::data::{DatasetSpec, Source};
use capmeter_core::LabeledDataset;

use crate::args::{DataArgs, Split};
use crate::error::{code, CliError, CliResult};

fn idx_names(split: Split) -> &'static [(&'static str, &'static str)] {
    match split {
        Split::Train => &[("train-images-idx3-ubyte", "train-labels-idx1-ubyte")],
        Split::Test => &[
            ("test-images-idx3-ubyte", "test-labels-idx1-ubyte"),
            ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        ],
    }
}

/// IDX pair for `split` inside `dir`, if present.
pub fn find_idx(dir: &Path, split: Split) -> Option<(PathBuf, PathBuf)> {
    idx_names(split)
        .iter()
        .map(|(i, l)| (dir.join(i), dir.join(l)))
        .find(|(i, l)| i.is_file() && l.is_file())
}

/// Source for a path: IDX pair when it is a directory, CSV otherwise.
pub fn source_for_path(path: &Path, split: Split) -> CliResult<Source> {
    let meta = std::fs::metadata(path).map_err(|e| CliError::read(&path.display().to_string(), &e))?;
    let abs = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    if meta.is_dir() {
        let (images, labels) = find_idx(&abs, split).ok_or_else(|| {
            let (i, l) = idx_names(split)[0];
            CliError::new(code::MISSING_FILE, format!("{}: no {i} / {l} pair", path.display()))
        })?;
        Ok(Source::IdxFiles { images, labels })
    } else {
        Ok(Source::Csv { path: abs })
    }
}

/// Parses `d,m,c,separation,seed`.
pub fn parse_synthetic(s: &str) -> CliResult<Source> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::invalid(format!("--synthetic expects d,m,c,separation,seed; got {s:?}"));
    if parts.len() != 5 {
        return Err(bad());
    }
    let int = |t: &str| t.parse::<usize>().map_err(|_| bad());
    let separation: f64 = parts[3].parse().map_err(|_| bad())?;
    Ok(Source::SyntheticGaussian {
        d: int(parts[0])?,
        m: int(parts[1])?,
        c: int(parts[2])?,
        separation,
        seed: parts[4].parse().map_err(|_| bad())?,
    })
}

/// Spec described by the flags, or `None` when neither `--data` nor
/// `--synthetic` is given.
pub fn spec_from_args(args: &DataArgs, default_label_seed: u64) -> CliResult<Option<DatasetSpec>> {
    let source = match (&args.data, &args.synthetic) {
        (Some(path), _) => source_for_path(path, args.split)?,
        (None, Some(s)) => parse_synthetic(s)?,
        (None, None) => return Ok(None),
    };
    Ok(Some(DatasetSpec {
        limit: args.limit,
        normalize: args.normalize.into(),
        random_label_fraction: args.random_labels,
        label_seed: args.label_seed.unwrap_or(default_label_seed),
        ..DatasetSpec::new(source)
    }))
}

pub fn require_spec(args: &DataArgs, default_label_seed: u64) -> CliResult<DatasetSpec> {
    spec_from_args(args, default_label_seed)?.ok_or_else(|| CliError::usage("no data source: pass --data <path> or --synthetic d,m,c,sep,seed"))
}

pub fn load(spec: &DatasetSpec) -> CliResult<LabeledDataset> {
    Ok(spec.load()?)
}

/// Test-split counterpart of an IDX training spec, when the directory has one.
pub fn sibling_test_spec(spec: &DatasetSpec) -> Option<DatasetSpec> {
    let Source::IdxFiles { images, .. } = &spec.source else {
        return None;
    };
    let dir = images.parent()?;
    let (images, labels) = find_idx(dir, Split::Test)?;
    Some(DatasetSpec { normalize: spec.normalize, ..DatasetSpec::new(Source::IdxFiles { images, labels }) })
}
