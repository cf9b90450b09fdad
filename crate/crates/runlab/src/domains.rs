//! Resolves the `left` / `right` domain names of a config into image pools.

use std::path::PathBuf;

use xferlab_core::dataforge::{builtin_glyph_domain, load_idx, rescale_domain, Domain, NUM_CLASSES};

use crate::config::DataConfig;
use crate::error::RunError;

/// Train and test pools of both sides of a pairing.
#[derive(Debug, Clone)]
pub struct DomainSet {
    pub left: Domain,
    pub right: Domain,
    pub left_test: Domain,
    pub right_test: Domain,
}

fn is_builtin(spec: &str) -> bool {
    matches!(spec, "glyphA" | "glyphB")
}

/// `glyphA` / `glyphB` are generated at `shape` (`split` 0 is train, 1 is
/// test). Anything else is an IDX prefix, rescaled to `shape` if needed.
pub fn load_domain(spec: &str, split: u64, per_class: usize, shape: (usize, usize, usize)) -> Result<Domain, RunError> {
    let (h, w, c) = shape;
    if is_builtin(spec) {
        return Ok(builtin_glyph_domain(spec, split, per_class, h, w, c)?);
    }
    let images = PathBuf::from(format!("{spec}-images-idx3-ubyte"));
    let labels = PathBuf::from(format!("{spec}-labels-idx1-ubyte"));
    let mut d = load_idx(&images, &labels)?;
    if d.shape() != shape {
        d = rescale_domain(&d, h, w, c)?;
    }
    let mut keep = Vec::new();
    for class in 0..NUM_CLASSES as u8 {
        keep.extend(d.class_indices(class).iter().take(per_class));
    }
    keep.sort_unstable();
    Ok(d.select(&keep))
}

fn test_spec<'a>(train: &'a str, test: &'a Option<String>, field: &str) -> Result<&'a str, RunError> {
    match test {
        Some(t) => Ok(t),
        None if is_builtin(train) => Ok(train),
        None => Err(RunError::config(field, "an IDX training domain needs an explicit test domain")),
    }
}

pub fn load_domains(data: &DataConfig, train_per_class: usize, test_per_class: usize, shape: (usize, usize, usize)) -> Result<DomainSet, RunError> {
    let lt = test_spec(&data.left, &data.left_test, "data.left_test")?;
    let rt = test_spec(&data.right, &data.right_test, "data.right_test")?;
    Ok(DomainSet {
        left: load_domain(&data.left, 0, train_per_class, shape)?,
        right: load_domain(&data.right, 0, train_per_class, shape)?,
        left_test: load_domain(lt, 1, test_per_class, shape)?,
        right_test: load_domain(rt, 1, test_per_class, shape)?,
    })
}
