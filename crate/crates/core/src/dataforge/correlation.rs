use serde::Serialize;

use super::{DataError, PairedDataset, NUM_CLASSES};

/// Per-class indicator correlations between the two label columns.
///
/// `per_class_corr[k]` is the Pearson correlation of `1[y_alice = k]` and
/// `1[y_bob = k]`, or `None` when either indicator is constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub per_class_corr: Vec<Option<f64>>,
    pub degenerate_classes: Vec<u8>,
    pub mean_corr: f64,
    pub sample_count: usize,
}

/// Running sums for the indicator correlations, so several datasets (or
/// shards) can be pooled before computing the report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationAccumulator {
    n: u64,
    sum_a: [u64; NUM_CLASSES],
    sum_b: [u64; NUM_CLASSES],
    sum_ab: [u64; NUM_CLASSES],
}

impl CorrelationAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, y_alice: u8, y_bob: u8) -> Result<(), DataError> {
        for y in [y_alice, y_bob] {
            if y as usize >= NUM_CLASSES {
                return Err(DataError::InvalidLabel(y));
            }
        }
        self.n += 1;
        self.sum_a[y_alice as usize] += 1;
        self.sum_b[y_bob as usize] += 1;
        if y_alice == y_bob {
            self.sum_ab[y_alice as usize] += 1;
        }
        Ok(())
    }

    pub fn extend(&mut self, y_alice: &[u8], y_bob: &[u8]) -> Result<(), DataError> {
        if y_alice.len() != y_bob.len() {
            return Err(DataError::CountMismatch { images: y_alice.len(), labels: y_bob.len() });
        }
        y_alice.iter().zip(y_bob).try_for_each(|(&a, &b)| self.push(a, b))
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        for k in 0..NUM_CLASSES {
            self.sum_a[k] += other.sum_a[k];
            self.sum_b[k] += other.sum_b[k];
            self.sum_ab[k] += other.sum_ab[k];
        }
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    /// Fails with [`DataError::Degenerate`] when no class has a defined
    /// correlation.
    pub fn report(&self) -> Result<CorrelationReport, DataError> {
        let n = self.n as f64;
        let mut per_class = Vec::with_capacity(NUM_CLASSES);
        let mut degenerate = Vec::new();
        for k in 0..NUM_CLASSES {
            // Indicators are 0/1, so E[x²] = E[x].
            let (pa, pb, pab) =
                (self.sum_a[k] as f64 / n, self.sum_b[k] as f64 / n, self.sum_ab[k] as f64 / n);
            let var = pa * (1.0 - pa) * pb * (1.0 - pb);
            if self.n == 0 || var <= 0.0 {
                per_class.push(None);
                degenerate.push(k as u8);
            } else {
                per_class.push(Some((pab - pa * pb) / var.sqrt()));
            }
        }
        let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
        if defined.is_empty() {
            return Err(DataError::Degenerate);
        }
        Ok(CorrelationReport {
            mean_corr: defined.iter().sum::<f64>() / defined.len() as f64,
            per_class_corr: per_class,
            degenerate_classes: degenerate,
            sample_count: self.n as usize,
        })
    }
}

pub fn estimate_task_correlation(ds: &PairedDataset) -> Result<CorrelationReport, DataError> {
    let mut acc = CorrelationAccumulator::new();
    acc.extend(&ds.y_alice, &ds.y_bob)?;
    acc.report()
}
