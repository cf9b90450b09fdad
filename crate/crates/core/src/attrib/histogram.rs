use serde::Serialize;

use super::{AttribError, AttributionMap};

/// Mean attribution over the left and right image halves (all rows and
/// channels of columns `[0, W/2)` and `[W/2, W)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideSummary {
    pub left_mean: f64,
    pub right_mean: f64,
}

/// `absolute` averages `|value|` instead of the signed values.
pub fn side_means(map: &AttributionMap, absolute: bool) -> Result<SideSummary, AttribError> {
    let (h, w, c) = (map.height, map.width, map.channels);
    if w % 2 != 0 {
        return Err(AttribError::OddWidth(w));
    }
    let (mut left, mut right) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = map.get(y, x, ch);
                let v = if absolute { v.abs() } else { v };
                if x < w / 2 {
                    left += v;
                } else {
                    right += v;
                }
            }
        }
    }
    let count = (h * (w / 2) * c) as f64;
    Ok(SideSummary { left_mean: left / count, right_mean: right / count })
}

/// Density histograms (area 1) of left and right means over one shared
/// range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideHistograms {
    pub bin_edges: Vec<f64>,
    pub left_density: Vec<f64>,
    pub right_density: Vec<f64>,
}

/// Bins both sides over `[min, max]` of all values. When every value is the
/// same, the range is `[v, v + 1]`.
pub fn side_histograms(summaries: &[SideSummary], bins: usize) -> Result<SideHistograms, AttribError> {
    if bins < 2 {
        return Err(AttribError::TooFewBins(bins));
    }
    let all = summaries.iter().flat_map(|s| [s.left_mean, s.right_mean]);
    let lo = all.clone().fold(f64::INFINITY, f64::min);
    let hi = all.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if summaries.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    };
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let density = |vals: &mut dyn Iterator<Item = f64>| {
        let mut counts = vec![0usize; bins];
        for v in vals {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let n = summaries.len().max(1) as f64;
        counts.into_iter().map(|k| k as f64 / (n * width)).collect::<Vec<f64>>()
    };
    Ok(SideHistograms {
        left_density: density(&mut summaries.iter().map(|s| s.left_mean)),
        right_density: density(&mut summaries.iter().map(|s| s.right_mean)),
        bin_edges,
    })
}

/// Shared area of the two densities: 1 for identical histograms, 0 for
/// disjoint ones.
pub fn overlap_coefficient(h: &SideHistograms) -> f64 {
    h.left_density
        .iter()
        .zip(&h.right_density)
        .zip(h.bin_edges.windows(2))
        .map(|((l, r), e)| l.min(*r) * (e[1] - e[0]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrib::{AttributionTarget, Baseline};

    fn map(values: Vec<f64>, h: usize, w: usize) -> AttributionMap {
        AttributionMap {
            height: h,
            width: w,
            channels: 1,
            values,
            target_class: 0,
            target: AttributionTarget::Logit,
            baseline: Baseline::Black,
            steps: 1,
            output_delta: 0.0,
            completeness_gap: 0.0,
        }
    }

    #[test]
    fn halves() {
        let m = map(vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0], 2, 4);
        assert_eq!(side_means(&m, false).unwrap(), SideSummary { left_mean: 1.0, right_mean: 0.0 });
        assert!(matches!(side_means(&map(vec![0.0; 3], 1, 3), false), Err(AttribError::OddWidth(3))));
    }

    #[test]
    fn equal_values_fill_one_bin() {
        let s = vec![SideSummary { left_mean: 2.0, right_mean: 2.0 }; 5];
        let h = side_histograms(&s, 4).unwrap();
        assert_eq!(h.bin_edges.first(), Some(&2.0));
        assert_eq!(h.bin_edges.last(), Some(&3.0));
        assert_eq!(h.left_density[0], 4.0);
        assert!(h.left_density[1..].iter().all(|&d| d == 0.0));
        assert!((overlap_coefficient(&h) - 1.0).abs() < 1e-12);
        assert!(side_histograms(&s, 1).is_err());
    }

    #[test]
    fn disjoint_sides_do_not_overlap() {
        let s: Vec<_> = (0..10).map(|i| SideSummary { left_mean: i as f64 * 0.01, right_mean: 1.0 + i as f64 * 0.01 }).collect();
        let h = side_histograms(&s, 10).unwrap();
        let area: f64 = h.left_density.iter().zip(h.bin_edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert_eq!(overlap_coefficient(&h), 0.0);
    }
}
