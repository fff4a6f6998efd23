//! Synthetic data, dataset files and run orchestration.

pub mod dataset;
pub mod run;
pub mod synthetic;

use std::path::{Path, PathBuf};

use crate::error::Result;
use dataset::{save_dataset, save_truth};
use synthetic::{gen_synthetic, SyntheticSpec};

/// Generate `n` samples and write `<prefix>.data.txt` and
/// `<prefix>.truth.txt`; returns the two paths.
pub fn generate_files(
    spec: &SyntheticSpec,
    n: usize,
    seed: u64,
    prefix: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let (samples, truth) = gen_synthetic(spec, n, seed)?;
    let data = suffixed(prefix, ".data.txt");
    let truth_path = suffixed(prefix, ".truth.txt");
    save_dataset(&data, &samples)?;
    save_truth(&truth_path, &truth)?;
    Ok((data, truth_path))
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}
