//! Procedural ten-class glyph images.
//!
//! Each class is a fixed set of strokes loosely shaped like a digit. A style
//! seed perturbs the stroke geometry and picks stroke width, slant, colours
//! and noise level, so two seeds give two visually distinct domains with the
//! same label semantics. Samples add translation, stroke jitter, a random
//! distractor stroke and pixel noise.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DataError, Domain, NUM_CLASSES};
use crate::numkit::{RngStream, StreamRng};

/// Style seed of the built-in `glyphA` domain.
pub const GLYPH_A_SEED: u64 = 0x0A11_CE00;
/// Style seed of the built-in `glyphB` domain.
pub const GLYPH_B_SEED: u64 = 0x0B0B_0000;

type Stroke = Vec<(f64, f64)>;

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from_deg: f64, to_deg: f64, segs: usize) -> Stroke {
    (0..=segs)
        .map(|i| {
            let t = (from_deg + (to_deg - from_deg) * i as f64 / segs as f64).to_radians();
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

/// Unit-square templates, y pointing down.
fn templates() -> Vec<Vec<Stroke>> {
    vec![
        vec![arc(0.5, 0.5, 0.3, 0.4, 0.0, 360.0, 14)],
        vec![vec![(0.35, 0.25), (0.55, 0.1), (0.55, 0.9)], vec![(0.33, 0.9), (0.77, 0.9)]],
        vec![{
            let mut s = arc(0.5, 0.32, 0.27, 0.22, -180.0, 20.0, 8);
            s.extend([(0.2, 0.9), (0.82, 0.9)]);
            s
        }],
        vec![arc(0.5, 0.3, 0.25, 0.2, -160.0, 90.0, 8), arc(0.5, 0.7, 0.27, 0.2, -90.0, 160.0, 8)],
        vec![vec![(0.65, 0.9), (0.65, 0.1), (0.15, 0.65), (0.85, 0.65)]],
        vec![vec![(0.78, 0.1), (0.28, 0.1), (0.25, 0.45)], arc(0.5, 0.65, 0.28, 0.25, -130.0, 150.0, 9)],
        vec![vec![(0.7, 0.1), (0.35, 0.42), (0.27, 0.68)], arc(0.5, 0.68, 0.24, 0.22, 0.0, 360.0, 12)],
        vec![vec![(0.2, 0.1), (0.8, 0.1), (0.4, 0.9)]],
        vec![arc(0.5, 0.3, 0.2, 0.19, 0.0, 360.0, 10), arc(0.5, 0.7, 0.25, 0.21, 0.0, 360.0, 12)],
        vec![arc(0.5, 0.32, 0.24, 0.22, 0.0, 360.0, 12), vec![(0.74, 0.32), (0.7, 0.9)]],
    ]
}

#[derive(Debug, Clone)]
struct GlyphStyle {
    strokes: Vec<Vec<Stroke>>,
    thickness: f64,
    scale: f64,
    slant: f64,
    fg: [f64; 3],
    bg: [f64; 3],
    noise: f64,
}

impl GlyphStyle {
    fn from_seed(seed: u64) -> Self {
        let mut g = RngStream::root(seed).named("glyph-style").generator();
        let strokes = templates()
            .into_iter()
            .map(|class| {
                class
                    .into_iter()
                    .map(|s| {
                        s.into_iter()
                            .map(|(x, y)| {
                                (x + g.random_range(-0.07..0.07), y + g.random_range(-0.07..0.07))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            strokes,
            thickness: g.random_range(0.09..0.14),
            scale: g.random_range(0.7..0.85),
            slant: g.random_range(-0.2..0.2),
            fg: [0; 3].map(|_| g.random_range(150.0..255.0)),
            bg: [0; 3].map(|_| g.random_range(0.0..70.0)),
            noise: g.random_range(8.0..20.0),
        }
    }
}

fn segment_distance(px: f64, py: f64, (ax, ay): (f64, f64), (bx, by): (f64, f64)) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (ax + t * dx - px, ay + t * dy - py);
    (cx * cx + cy * cy).sqrt()
}

fn render(
    style: &GlyphStyle,
    class: usize,
    (h, w, c): (usize, usize, usize),
    g: &mut StreamRng,
    out: &mut Vec<u8>,
) {
    let size = style.scale * h.min(w) as f64;
    let tx = g.random_range(-2i32..=2) as f64;
    let ty = g.random_range(-2i32..=2) as f64;
    let slant = style.slant + g.random_range(-0.1..0.1);
    let radius = 0.5 * style.thickness * size * g.random_range(0.8..1.25);
    let intensity = g.random_range(0.75..1.0);
    let (cx, cy) = (w as f64 / 2.0 + tx, h as f64 / 2.0 + ty);
    let to_px = |(u, v): (f64, f64)| (cx + (u - 0.5 + slant * (0.5 - v)) * size, cy + (v - 0.5) * size);

    let mut segments = Vec::new();
    for stroke in &style.strokes[class] {
        let pts: Vec<(f64, f64)> = stroke
            .iter()
            .map(|&(u, v)| to_px((u + g.random_range(-0.05..0.05), v + g.random_range(-0.05..0.05))))
            .collect();
        segments.extend(pts.windows(2).map(|p| (p[0], p[1])));
    }
    // Distractor stroke, independent of the class.
    if g.random::<f64>() < 0.5 {
        let a = (g.random_range(0.0..1.0), g.random_range(0.0..1.0));
        let ang: f64 = g.random_range(0.0..std::f64::consts::TAU);
        let b = (a.0 + 0.3 * ang.cos(), a.1 + 0.3 * ang.sin());
        segments.push((to_px(a), to_px(b)));
    }

    let fg: Vec<f64> = (0..c)
        .map(|ch| if c == 1 { style.fg.iter().sum::<f64>() / 3.0 } else { style.fg[ch % 3] })
        .collect();
    let bg: Vec<f64> = (0..c)
        .map(|ch| if c == 1 { style.bg.iter().sum::<f64>() / 3.0 } else { style.bg[ch % 3] })
        .collect();
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let d = segments
                .iter()
                .map(|&(a, b)| segment_distance(px, py, a, b))
                .fold(f64::INFINITY, f64::min);
            let cover = (radius + 0.5 - d).clamp(0.0, 1.0);
            for ch in 0..c {
                let n: f64 = g.sample(StandardNormal);
                let v = bg[ch] + (fg[ch] * intensity - bg[ch]) * cover + style.noise * n;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
}

/// Generates `n_per_class` images per class (interleaved by class).
///
/// The look of the domain depends only on `style.seed`; `style.stream_id`
/// selects which samples are drawn, so e.g. `RngStream::new(seed, 0)` and
/// `RngStream::new(seed, 1)` give disjoint train/test draws of one domain.
pub fn synth_glyph_domain(
    n_per_class: usize,
    h: usize,
    w: usize,
    c: usize,
    style: &RngStream,
) -> Result<Domain, DataError> {
    if n_per_class == 0 {
        return Err(DataError::InvalidArgument("n_per_class must be at least 1".into()));
    }
    if h < 8 || w < 8 || c == 0 {
        return Err(DataError::InvalidArgument(format!("glyph canvas {h}x{w}x{c} too small")));
    }
    let look = GlyphStyle::from_seed(style.seed);
    let mut g = style.named("glyph-samples").generator();
    let mut pixels = Vec::with_capacity(n_per_class * NUM_CLASSES * h * w * c);
    let mut labels = Vec::with_capacity(n_per_class * NUM_CLASSES);
    for _ in 0..n_per_class {
        for class in 0..NUM_CLASSES {
            render(&look, class, (h, w, c), &mut g, &mut pixels);
            labels.push(class as u8);
        }
    }
    Domain::new(format!("glyph-{:x}", style.seed), h, w, c, pixels, labels)
}

/// `glyphA` / `glyphB` by name; `split` picks the sample draw.
pub fn builtin_glyph_domain(
    name: &str,
    split: u64,
    n_per_class: usize,
    h: usize,
    w: usize,
    c: usize,
) -> Result<Domain, DataError> {
    let seed = match name {
        "glyphA" => GLYPH_A_SEED,
        "glyphB" => GLYPH_B_SEED,
        other => return Err(DataError::InvalidArgument(format!("unknown glyph domain `{other}`"))),
    };
    Ok(synth_glyph_domain(n_per_class, h, w, c, &RngStream::new(seed, split))?.with_name(name))
}
