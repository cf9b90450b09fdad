use super::DataError;

pub const NUM_CLASSES: usize = 10;

/// A labelled image collection: `len` images of `height x width x channels`
/// bytes (HWC, row-major) with class ids `0..=9`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    name: String,
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
    by_class: Vec<Vec<usize>>,
}

impl Domain {
    pub fn new(
        name: impl Into<String>,
        height: usize,
        width: usize,
        channels: usize,
        pixels: Vec<u8>,
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(DataError::ShapeMismatch(format!(
                "image shape {height}x{width}x{channels} has a zero dimension"
            )));
        }
        let per = height * width * channels;
        if pixels.len() != labels.len() * per {
            return Err(DataError::ShapeMismatch(format!(
                "{} pixel bytes for {} images of {per} bytes",
                pixels.len(),
                labels.len()
            )));
        }
        let mut by_class = vec![Vec::new(); NUM_CLASSES];
        for (i, &l) in labels.iter().enumerate() {
            if l as usize >= NUM_CLASSES {
                return Err(DataError::InvalidLabel(l));
            }
            by_class[l as usize].push(i);
        }
        Ok(Self { name: name.into(), height, width, channels, pixels, labels, by_class })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn image_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let per = self.image_len();
        &self.pixels[i * per..(i + 1) * per]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Indices of every sample with label `class`.
    pub fn class_indices(&self, class: u8) -> &[usize] {
        &self.by_class[class as usize]
    }

    /// Classes with no samples, in increasing order.
    pub fn missing_classes(&self) -> Vec<u8> {
        (0..NUM_CLASSES as u8).filter(|&c| self.by_class[c as usize].is_empty()).collect()
    }

    /// Subset by sample indices, keeping the name.
    pub fn select(&self, indices: &[usize]) -> Domain {
        let mut pixels = Vec::with_capacity(indices.len() * self.image_len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        Domain::new(self.name.clone(), self.height, self.width, self.channels, pixels, labels)
            .expect("subset of a valid domain is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_label_and_length() {
        assert!(matches!(
            Domain::new("d", 1, 1, 1, vec![0], vec![10]),
            Err(DataError::InvalidLabel(10))
        ));
        assert!(matches!(
            Domain::new("d", 2, 2, 1, vec![0; 3], vec![1]),
            Err(DataError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn class_index_and_missing() {
        let d = Domain::new("d", 1, 1, 1, vec![5, 6, 7], vec![2, 0, 2]).unwrap();
        assert_eq!(d.class_indices(2), &[0, 2]);
        assert_eq!(d.missing_classes(), vec![1, 3, 4, 5, 6, 7, 8, 9]);
        assert_eq!(d.select(&[2]).image(0), &[7]);
    }
}
