use crate::numkit::Scalar;

/// Batch of activations in NCHW order. Feature vectors use `h = w = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self { n, c, h, w, data: vec![T::zero(); n * c * h * w] }
    }

    /// Panics if the buffer length does not match the shape.
    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * c * h * w, "tensor buffer length mismatch");
        Self { n, c, h, w, data }
    }

    /// Stacks HWC byte images into an NCHW tensor scaled to `[0, 1]`.
    pub fn from_hwc_images<'a>(
        images: impl IntoIterator<Item = &'a [u8]>,
        h: usize,
        w: usize,
        c: usize,
    ) -> Self {
        let scale = T::of(1.0 / 255.0);
        let mut data = Vec::new();
        let mut n = 0;
        for img in images {
            assert_eq!(img.len(), h * w * c, "image length mismatch");
            let base = data.len();
            data.resize(base + img.len(), T::zero());
            for (i, &px) in img.iter().enumerate() {
                let (pix, ch) = (i / c, i % c);
                data[base + ch * h * w + pix] = T::of(px as f64) * scale;
            }
            n += 1;
        }
        Self { n, c, h, w, data }
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    /// Per-sample shape `(c, h, w)`.
    pub fn sample_shape(&self) -> (usize, usize, usize) {
        (self.c, self.h, self.w)
    }

    pub fn batch(&self) -> usize {
        self.n
    }

    pub fn sample_len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn sample(&self, i: usize) -> &[T] {
        let s = self.sample_len();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        let s = self.sample_len();
        &mut self.data[i * s..(i + 1) * s]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Same buffer viewed under another shape of equal size.
    pub fn reshaped(self, c: usize, h: usize, w: usize) -> Self {
        assert_eq!(c * h * w, self.sample_len(), "reshape changes sample size");
        Self { c, h, w, ..self }
    }

    /// Converts the element type through `f64`.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// Copy of samples `idx` in that order.
    pub fn gather(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.sample_len());
        for &i in idx {
            data.extend_from_slice(self.sample(i));
        }
        Self { n: idx.len(), c: self.c, h: self.h, w: self.w, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hwc_to_nchw() {
        // 1x2 image with 3 channels: pixels (1,2,3) and (4,5,6).
        let img: [u8; 6] = [1, 2, 3, 4, 5, 6];
        let t = Tensor::<f64>::from_hwc_images([&img[..]], 1, 2, 3);
        let got: Vec<f64> = t.as_slice().iter().map(|v| v * 255.0).collect();
        let want = [1.0, 4.0, 2.0, 5.0, 3.0, 6.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
        assert_eq!(t.shape(), (1, 3, 1, 2));
    }
}
