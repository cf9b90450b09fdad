//! `XFN1` network checkpoints.
//!
//! Layout (little-endian): magic `XFN1`, u32 version, u32 input h, w, c,
//! u32 layer count, then per layer a u8 kind code, u32 size (units, filters
//! or classes; 0 otherwise) and f32 dropout rate. Then, per layer, a u32
//! tensor count followed by each tensor as u32 rank, u32 dims and f32 data.
//! Last come the BatchNorm running statistics: per BatchNorm layer, u32
//! channel count, f32 means and f32 variances.

use std::io::Write;
use std::path::Path;

use super::{LayerSpec, Network, NnError};
use crate::numkit::Scalar;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"XFN1";
pub const CHECKPOINT_VERSION: u32 = 1;

fn kind_code(spec: &LayerSpec) -> (u8, u32, f32) {
    match *spec {
        LayerSpec::Dense { units } => (0, units as u32, 0.0),
        LayerSpec::Conv2d { filters } => (1, filters as u32, 0.0),
        LayerSpec::BatchNorm => (2, 0, 0.0),
        LayerSpec::Relu => (3, 0, 0.0),
        LayerSpec::Dropout { rate } => (4, 0, rate as f32),
        LayerSpec::MaxPool2x2 => (5, 0, 0.0),
        LayerSpec::Flatten => (6, 0, 0.0),
        LayerSpec::SoftmaxOutput { classes } => (7, classes as u32, 0.0),
    }
}

fn spec_from_code(code: u8, size: u32, rate: f32) -> Result<LayerSpec, NnError> {
    Ok(match code {
        0 => LayerSpec::Dense { units: size as usize },
        1 => LayerSpec::Conv2d { filters: size as usize },
        2 => LayerSpec::BatchNorm,
        3 => LayerSpec::Relu,
        4 => LayerSpec::Dropout { rate: rate as f64 },
        5 => LayerSpec::MaxPool2x2,
        6 => LayerSpec::Flatten,
        7 => LayerSpec::SoftmaxOutput { classes: size as usize },
        other => return Err(NnError::Checkpoint(format!("unknown layer code {other}"))),
    })
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f32s<T: Scalar>(out: &mut Vec<u8>, data: &[T]) {
    for v in data {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
}

/// Serializes a network. Parameters are stored as `f32`.
pub fn encode_checkpoint<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION as usize);
    let (h, w, c) = net.input_shape();
    for v in [h, w, c, net.layers().len()] {
        put_u32(&mut out, v);
    }
    for layer in net.layers() {
        let (code, size, rate) = kind_code(&layer.spec);
        out.push(code);
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
    }
    for layer in net.layers() {
        put_u32(&mut out, layer.params.len());
        for p in &layer.params {
            put_u32(&mut out, p.shape.len());
            p.shape.iter().for_each(|&d| put_u32(&mut out, d));
            put_f32s(&mut out, &p.data);
        }
    }
    for layer in net.layers().iter().filter(|l| l.spec == LayerSpec::BatchNorm) {
        put_u32(&mut out, layer.running[0].len());
        put_f32s(&mut out, &layer.running[0]);
        put_f32s(&mut out, &layer.running[1]);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn bytes(&mut self, n: usize) -> Result<&[u8], NnError> {
        if self.buf.len() - self.pos < n {
            return Err(NnError::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        self.pos += n;
        Ok(&self.buf[self.pos - n..self.pos])
    }

    fn u32(&mut self) -> Result<usize, NnError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()) as usize)
    }

    fn f32(&mut self) -> Result<f32, NnError> {
        Ok(f32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn f32s<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>, NnError> {
        (0..n).map(|_| self.f32().map(|v| T::of(v as f64))).collect()
    }
}

/// Rebuilds a network from [`encode_checkpoint`] output. The result is in
/// `Eval` mode with nothing frozen.
pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Network<T>, NnError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.bytes(4)? != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic, expected XFN1".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let (h, w, c, count) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    let mut specs = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let code = r.bytes(1)?[0];
        let (size, rate) = (r.u32()? as u32, r.f32()?);
        specs.push(spec_from_code(code, size, rate)?);
    }
    let mut net = Network::<T>::from_specs(&specs, (h, w, c))?;
    for (li, layer) in net.layers_mut().iter_mut().enumerate() {
        let tensors = r.u32()?;
        if tensors != layer.params.len() {
            return Err(NnError::Checkpoint(format!("layer {li} stores {tensors} tensors, expected {}", layer.params.len())));
        }
        for p in layer.params.iter_mut() {
            let rank = r.u32()?;
            let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            if shape != p.shape {
                return Err(NnError::Checkpoint(format!("layer {li}: tensor shape {shape:?}, expected {:?}", p.shape)));
            }
            p.data = r.f32s(p.data.len())?;
        }
    }
    for layer in net.layers_mut().iter_mut().filter(|l| l.spec == LayerSpec::BatchNorm) {
        let ch = r.u32()?;
        if ch != layer.running[0].len() {
            return Err(NnError::Checkpoint("BatchNorm statistics do not match the layer".into()));
        }
        layer.running[0] = r.f32s(ch)?;
        layer.running[1] = r.f32s(ch)?;
    }
    if r.pos != bytes.len() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(net)
}

pub fn save_checkpoint<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<(), NnError> {
    let path = path.as_ref();
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&encode_checkpoint(net)))
        .map_err(|e| NnError::Io { path: path.display().to_string(), source: e })
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>, NnError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| NnError::Io { path: path.display().to_string(), source: e })?;
    decode_checkpoint(&bytes)
}
