//! Paired-image datasets with a controlled correlation `beta` between the
//! left image's label and the right image's label.

mod container;
mod correlation;
mod domain;
mod glyph;
mod idx;
mod paired;
mod resize;

pub use container::{load_dataset, read_dataset, save_dataset, write_dataset, CONTAINER_MAGIC};
pub use correlation::{estimate_task_correlation, CorrelationAccumulator, CorrelationReport};
pub use domain::{Domain, NUM_CLASSES};
pub use glyph::{builtin_glyph_domain, synth_glyph_domain, GLYPH_A_SEED, GLYPH_B_SEED};
pub use idx::{
    load_idx, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels,
    IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC,
};
pub use paired::{draw_pairs, epoch_resample, sample_concat, PairIndex, PairSource, PairedDataset};
pub use resize::rescale_domain;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("class {class} has no samples in domain `{domain}`")]
    EmptyClass { class: u8, domain: String },
    #[error("label {0} outside 0..=9")]
    InvalidLabel(u8),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("every class is degenerate; correlation undefined")]
    Degenerate,
}

impl DataError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DataError::Io { path: path.as_ref().display().to_string(), source }
    }
}
