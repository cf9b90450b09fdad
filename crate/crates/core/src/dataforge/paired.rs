use rand::Rng;

use super::{DataError, Domain};
use crate::numkit::RngStream;

/// Side-by-side images labelled for both tasks.
///
/// Image `i` is `height x width x channels` bytes (HWC); its left half came
/// from the left domain and carries `y_alice[i]`, its right half from the
/// right domain and carries `y_bob[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
    pub y_alice: Vec<u8>,
    pub y_bob: Vec<u8>,
    pub beta: f32,
    pub left_name: String,
    pub right_name: String,
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.y_alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_alice.is_empty()
    }

    pub fn image_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let per = self.image_len();
        &self.pixels[i * per..(i + 1) * per]
    }

    /// Labels for Alice's task (`true`) or Bob's task (`false`).
    pub fn labels(&self, alice: bool) -> &[u8] {
        if alice {
            &self.y_alice
        } else {
            &self.y_bob
        }
    }

    /// Concatenation of several datasets with matching geometry.
    pub fn concat(parts: &[&PairedDataset]) -> Result<PairedDataset, DataError> {
        let first = parts.first().ok_or_else(|| DataError::InvalidArgument("nothing to concatenate".into()))?;
        let mut out = PairedDataset { pixels: Vec::new(), y_alice: Vec::new(), y_bob: Vec::new(), ..(*first).clone() };
        for p in parts {
            if (p.height, p.width, p.channels) != (first.height, first.width, first.channels) {
                return Err(DataError::ShapeMismatch("datasets differ in image shape".into()));
            }
            out.pixels.extend_from_slice(&p.pixels);
            out.y_alice.extend_from_slice(&p.y_alice);
            out.y_bob.extend_from_slice(&p.y_bob);
        }
        Ok(out)
    }
}

/// Indices chosen for one paired sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub left: usize,
    pub right: usize,
}

fn check_domains(beta: f64, left: &Domain, right: &Domain) -> Result<(), DataError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(DataError::InvalidArgument(format!("beta {beta} outside [0, 1]")));
    }
    if left.is_empty() || right.is_empty() {
        return Err(DataError::InvalidArgument("both domains must be non-empty".into()));
    }
    if left.height() != right.height() || left.channels() != right.channels() {
        return Err(DataError::ShapeMismatch(format!(
            "left {:?} and right {:?} cannot be concatenated horizontally",
            left.shape(),
            right.shape()
        )));
    }
    if beta > 0.0 {
        for class in 0..super::NUM_CLASSES as u8 {
            if !left.class_indices(class).is_empty() && right.class_indices(class).is_empty() {
                return Err(DataError::EmptyClass { class, domain: right.name().to_string() });
            }
        }
    }
    Ok(())
}

/// Draws the index pairs of `n` samples from the task-correlated joint
/// distribution:
///
/// 1. pick a left sample uniformly; its label is Alice's label;
/// 2. draw `u ~ U[0, 1)`;
/// 3. if `u < beta`, pick a right sample uniformly among those whose label
///    equals Alice's label, otherwise uniformly among all right samples.
pub fn draw_pairs(
    beta: f64,
    left: &Domain,
    right: &Domain,
    n: usize,
    rng: &RngStream,
) -> Result<Vec<PairIndex>, DataError> {
    check_domains(beta, left, right)?;
    let mut g = rng.generator();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let i = g.random_range(0..left.len());
        let y_alice = left.label(i);
        let u: f64 = g.random();
        let j = if u < beta {
            let pool = right.class_indices(y_alice);
            pool[g.random_range(0..pool.len())]
        } else {
            g.random_range(0..right.len())
        };
        out.push(PairIndex { left: i, right: j });
    }
    Ok(out)
}

/// Materializes `n` samples: each image is the left image followed, column
/// by column, by the right image.
pub fn sample_concat(
    beta: f64,
    left: &Domain,
    right: &Domain,
    n: usize,
    rng: &RngStream,
) -> Result<PairedDataset, DataError> {
    let pairs = draw_pairs(beta, left, right, n, rng)?;
    let (h, c) = (left.height(), left.channels());
    let (lw, rw) = (left.width(), right.width());
    let width = lw + rw;
    let mut pixels = Vec::with_capacity(n * h * width * c);
    let mut y_alice = Vec::with_capacity(n);
    let mut y_bob = Vec::with_capacity(n);
    for p in &pairs {
        let (li, ri) = (left.image(p.left), right.image(p.right));
        for y in 0..h {
            pixels.extend_from_slice(&li[y * lw * c..(y + 1) * lw * c]);
            pixels.extend_from_slice(&ri[y * rw * c..(y + 1) * rw * c]);
        }
        y_alice.push(left.label(p.left));
        y_bob.push(right.label(p.right));
    }
    Ok(PairedDataset {
        height: h,
        width,
        channels: c,
        pixels,
        y_alice,
        y_bob,
        beta: beta as f32,
        left_name: left.name().to_string(),
        right_name: right.name().to_string(),
    })
}

/// A `beta` together with the two domains it pairs.
#[derive(Debug, Clone, Copy)]
pub struct PairSource<'a> {
    pub beta: f64,
    pub left: &'a Domain,
    pub right: &'a Domain,
}

/// Fresh draw for training epoch `epoch`, from the sub-stream
/// `base.derive(epoch)`.
pub fn epoch_resample(
    source: &PairSource<'_>,
    epoch: usize,
    base: &RngStream,
    n: usize,
) -> Result<PairedDataset, DataError> {
    sample_concat(source.beta, source.left, source.right, n, &base.derive(epoch as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(name: &str, offset: u8) -> Domain {
        // 2x2x1 images, 3 per class, pixel value encodes the index.
        let labels: Vec<u8> = (0..30).map(|i| (i % 10) as u8).collect();
        let pixels: Vec<u8> = (0..30u8).flat_map(|i| [i + offset; 4]).collect();
        Domain::new(name, 2, 2, 1, pixels, labels).unwrap()
    }

    #[test]
    fn beta_one_forces_equal_labels() {
        let (l, r) = (tiny("l", 0), tiny("r", 100));
        let ds = sample_concat(1.0, &l, &r, 500, &RngStream::root(1)).unwrap();
        assert_eq!(ds.y_alice, ds.y_bob);
        assert_eq!((ds.height, ds.width, ds.channels), (2, 4, 1));
    }

    #[test]
    fn halves_come_from_the_chosen_sources() {
        let (l, r) = (tiny("l", 0), tiny("r", 100));
        let rng = RngStream::root(2);
        let pairs = draw_pairs(0.5, &l, &r, 50, &rng).unwrap();
        let ds = sample_concat(0.5, &l, &r, 50, &rng).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            let img = ds.image(k);
            for y in 0..2 {
                assert_eq!(&img[y * 4..y * 4 + 2], &l.image(p.left)[y * 2..y * 2 + 2]);
                assert_eq!(&img[y * 4 + 2..y * 4 + 4], &r.image(p.right)[y * 2..y * 2 + 2]);
            }
        }
    }

    #[test]
    fn missing_right_class_is_an_error_only_when_beta_positive() {
        let l = tiny("l", 0);
        let keep: Vec<usize> = (0..30).filter(|i| i % 10 != 4).collect();
        let r = tiny("r", 0).select(&keep);
        match sample_concat(0.3, &l, &r, 10, &RngStream::root(3)) {
            Err(DataError::EmptyClass { class: 4, .. }) => {}
            other => panic!("expected EmptyClass, got {other:?}"),
        }
        assert!(sample_concat(0.0, &l, &r, 10, &RngStream::root(3)).is_ok());
    }

    #[test]
    fn epochs_differ_and_repeat() {
        let (l, r) = (tiny("l", 0), tiny("r", 100));
        let src = PairSource { beta: 0.5, left: &l, right: &r };
        let base = RngStream::root(4);
        let e0 = epoch_resample(&src, 0, &base, 100).unwrap();
        let e1 = epoch_resample(&src, 1, &base, 100).unwrap();
        assert_ne!(e0, e1);
        assert_eq!(e0, epoch_resample(&src, 0, &base, 100).unwrap());
    }

    #[test]
    fn rejects_bad_beta_and_shapes() {
        let l = tiny("l", 0);
        assert!(sample_concat(1.5, &l, &l, 1, &RngStream::root(0)).is_err());
        let tall = Domain::new("t", 3, 2, 1, vec![0; 6], vec![0]).unwrap();
        assert!(matches!(
            sample_concat(0.0, &l, &tall, 1, &RngStream::root(0)),
            Err(DataError::ShapeMismatch(_))
        ));
    }
}
