//! Integrated-gradients attribution from a black baseline, plus left/right
//! half summaries of the attribution maps.

mod histogram;
mod integrated;

pub use histogram::{overlap_coefficient, side_histograms, side_means, SideHistograms, SideSummary};
pub use integrated::{integrated_gradients, AttributionMap, AttributionTarget, Baseline, DEFAULT_STEPS};

use crate::nncore::NnError;

#[derive(Debug, thiserror::Error)]
pub enum AttribError {
    #[error("image width {0} is odd; halves are undefined")]
    OddWidth(usize),
    #[error("integration needs at least one step")]
    NoSteps,
    #[error("histograms need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("class {class} outside 0..{classes}")]
    BadClass { class: usize, classes: usize },
    #[error(transparent)]
    Network(#[from] NnError),
}
