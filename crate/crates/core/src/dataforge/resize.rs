use super::{DataError, Domain};

/// Source coordinate and blend weight along one axis for output index `o`
/// (half-pixel centres, clamped at the borders).
fn sample_axis(o: usize, src: usize, dst: usize) -> (usize, usize, f64) {
    let pos = ((o as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(src - 1);
    (lo, hi, pos - lo as f64)
}

/// Bilinear resize to `h x w`, with channel conversion: one channel is
/// replicated into many, many channels are averaged into one, and any other
/// pairing cycles through the source channels.
///
/// Output pixels are rounded to the nearest byte, so constant images and
/// same-size resizes come back unchanged.
pub fn rescale_domain(d: &Domain, h: usize, w: usize, c: usize) -> Result<Domain, DataError> {
    if h == 0 || w == 0 || c == 0 {
        return Err(DataError::InvalidArgument(format!("target shape {h}x{w}x{c}")));
    }
    let (sh, sw, sc) = d.shape();
    if (sh, sw, sc) == (h, w, c) {
        return Ok(d.clone());
    }
    let rows: Vec<_> = (0..h).map(|y| sample_axis(y, sh, h)).collect();
    let cols: Vec<_> = (0..w).map(|x| sample_axis(x, sw, w)).collect();
    let mut pixels = Vec::with_capacity(d.len() * h * w * c);
    let mut plane = vec![0.0f64; h * w * sc];
    for i in 0..d.len() {
        let img = d.image(i);
        let at = |y: usize, x: usize, ch: usize| img[(y * sw + x) * sc + ch] as f64;
        for (y, &(y0, y1, fy)) in rows.iter().enumerate() {
            for (x, &(x0, x1, fx)) in cols.iter().enumerate() {
                for ch in 0..sc {
                    let top = at(y0, x0, ch) * (1.0 - fx) + at(y0, x1, ch) * fx;
                    let bottom = at(y1, x0, ch) * (1.0 - fx) + at(y1, x1, ch) * fx;
                    plane[(y * w + x) * sc + ch] = top * (1.0 - fy) + bottom * fy;
                }
            }
        }
        for px in plane.chunks(sc) {
            for ch in 0..c {
                let v = if c == 1 && sc > 1 {
                    px.iter().sum::<f64>() / sc as f64
                } else {
                    px[ch % sc]
                };
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Domain::new(d.name().to_string(), h, w, c, pixels, d.labels().to_vec())
}
