use serde::{Deserialize, Serialize};

use super::GlmError;
use crate::numkit::{Matrix, Scalar};

/// How Alice's `k` features couple to Bob's `k` features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Feature `i` of Alice correlates only with feature `i` of Bob:
    /// `(1 - alpha) I + alpha [[I, I], [I, I]]`.
    Pairwise,
    /// Every feature correlates with every other:
    /// `(1 - alpha) I + [[|alpha| 1, alpha 1], [alpha 1, |alpha| 1]]`.
    Global,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Pairwise => "pairwise",
            Scenario::Global => "global",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = GlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pairwise" | "1" | "s1" => Ok(Scenario::Pairwise),
            "global" | "2" | "s2" => Ok(Scenario::Global),
            other => Err(GlmError::InvalidSpec(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    alpha: f64,
    k: usize,
    scenario: Scenario,
}

impl CorrelationSpec {
    pub fn new(alpha: f64, k: usize, scenario: Scenario) -> Result<Self, GlmError> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(GlmError::InvalidSpec(format!("alpha {alpha} outside [-1, 1]")));
        }
        if k == 0 {
            return Err(GlmError::InvalidSpec("k must be at least 1".into()));
        }
        Ok(Self { alpha, k, scenario })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Feature dimension `2k`.
    pub fn dim(&self) -> usize {
        2 * self.k
    }
}

/// The `2k x 2k` feature covariance for `spec`.
pub fn build_covariance<T: Scalar>(spec: &CorrelationSpec) -> Matrix<T> {
    let k = spec.k;
    let a = spec.alpha;
    let same_side = |i: usize, j: usize| (i < k) == (j < k);
    let entry = |i: usize, j: usize| -> f64 {
        let ident = if i == j { 1.0 - a } else { 0.0 };
        let coupling = match spec.scenario {
            Scenario::Pairwise => {
                if i % k == j % k {
                    a
                } else {
                    0.0
                }
            }
            Scenario::Global => {
                if same_side(i, j) {
                    a.abs()
                } else {
                    a
                }
            }
        };
        ident + coupling
    };
    Matrix::from_fn(2 * k, 2 * k, |i, j| T::of(entry(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_zero_is_identity() {
        for k in 1..5 {
            let spec = CorrelationSpec::new(0.0, k, Scenario::Pairwise).unwrap();
            assert_eq!(build_covariance::<f64>(&spec), Matrix::identity(2 * k));
        }
    }

    #[test]
    fn pairwise_half_k1() {
        let spec = CorrelationSpec::new(0.5, 1, Scenario::Pairwise).unwrap();
        let m: Matrix<f64> = build_covariance(&spec);
        assert_eq!(m, Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]));
    }

    #[test]
    fn pairwise_couples_only_matching_indices() {
        let spec = CorrelationSpec::new(0.3, 3, Scenario::Pairwise).unwrap();
        let m: Matrix<f64> = build_covariance(&spec);
        assert_eq!(m[(0, 3)], 0.3);
        assert_eq!(m[(0, 4)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        assert_eq!(m[(2, 2)], 1.0);
    }

    #[test]
    fn global_negative_alpha_k2() {
        let spec = CorrelationSpec::new(-0.5, 2, Scenario::Global).unwrap();
        let m: Matrix<f64> = build_covariance(&spec);
        for i in 0..4 {
            assert_eq!(m[(i, i)], 2.0);
        }
        assert_eq!(m[(0, 1)], 0.5);
        assert_eq!(m[(2, 3)], 0.5);
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(m[(i, j)], -0.5);
            assert_eq!(m[(j, i)], -0.5);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(CorrelationSpec::new(1.01, 1, Scenario::Global).is_err());
        assert!(CorrelationSpec::new(0.0, 0, Scenario::Global).is_err());
    }
}
