//! `XFL1` paired-dataset container.
//!
//! Layout (little-endian): magic `XFL1`, u32 n, h, w, c, f32 beta, two
//! u32-length-prefixed UTF-8 names (left, right), n·h·w·c pixel bytes, n
//! bytes of `y_alice`, n bytes of `y_bob`.

use std::io::{Read, Write};
use std::path::Path;

use super::{DataError, PairedDataset, NUM_CLASSES};

pub const CONTAINER_MAGIC: [u8; 4] = *b"XFL1";

pub fn write_dataset<W: Write>(ds: &PairedDataset, mut out: W) -> std::io::Result<()> {
    out.write_all(&CONTAINER_MAGIC)?;
    for v in [ds.len(), ds.height, ds.width, ds.channels] {
        out.write_all(&(v as u32).to_le_bytes())?;
    }
    out.write_all(&ds.beta.to_le_bytes())?;
    for name in [&ds.left_name, &ds.right_name] {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
    }
    out.write_all(&ds.pixels)?;
    out.write_all(&ds.y_alice)?;
    out.write_all(&ds.y_bob)?;
    out.flush()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(
            DataError::Truncated { expected: self.pos.saturating_add(n), found: self.buf.len() },
        )?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DataError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn name(&mut self) -> Result<String, DataError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| DataError::InvalidArgument("domain name is not UTF-8".into()))
    }
}

pub fn read_dataset(bytes: &[u8]) -> Result<PairedDataset, DataError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic = cur.take(4)?;
    if magic != CONTAINER_MAGIC {
        return Err(DataError::BadMagic {
            expected: u32::from_le_bytes(CONTAINER_MAGIC),
            found: u32::from_le_bytes(magic.try_into().unwrap()),
        });
    }
    let n = cur.u32()? as usize;
    let (height, width, channels) = (cur.u32()? as usize, cur.u32()? as usize, cur.u32()? as usize);
    let beta = f32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    let left_name = cur.name()?;
    let right_name = cur.name()?;
    let per = height
        .checked_mul(width)
        .and_then(|v| v.checked_mul(channels))
        .and_then(|v| v.checked_mul(n))
        .ok_or_else(|| DataError::ShapeMismatch("header dimensions overflow".into()))?;
    let pixels = cur.take(per)?.to_vec();
    let y_alice = cur.take(n)?.to_vec();
    let y_bob = cur.take(n)?.to_vec();
    if cur.pos != bytes.len() {
        return Err(DataError::ShapeMismatch(format!(
            "{} trailing bytes after payload",
            bytes.len() - cur.pos
        )));
    }
    if let Some(&bad) = y_alice.iter().chain(&y_bob).find(|&&y| y as usize >= NUM_CLASSES) {
        return Err(DataError::InvalidLabel(bad));
    }
    Ok(PairedDataset { height, width, channels, pixels, y_alice, y_bob, beta, left_name, right_name })
}

pub fn save_dataset(ds: &PairedDataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    write_dataset(ds, std::io::BufWriter::new(file)).map_err(|e| DataError::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<PairedDataset, DataError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| DataError::io(path, e))?;
    read_dataset(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PairedDataset {
        PairedDataset {
            height: 2,
            width: 4,
            channels: 1,
            pixels: (0..16).collect(),
            y_alice: vec![1, 9],
            y_bob: vec![1, 0],
            beta: 0.3,
            left_name: "glyphA".into(),
            right_name: "glyphB".into(),
        }
    }

    #[test]
    fn header_layout_is_exact() {
        let mut buf = Vec::new();
        write_dataset(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"XFL1");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[20..24], &0.3f32.to_le_bytes());
        assert_eq!(&buf[24..28], &6u32.to_le_bytes());
        assert_eq!(&buf[28..34], b"glyphA");
        assert_eq!(buf.len(), 24 + 4 + 6 + 4 + 6 + 16 + 2 + 2);
        assert_eq!(&buf[buf.len() - 4..], &[1, 9, 1, 0]);
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_dataset(&sample(), &mut buf).unwrap();
        assert_eq!(read_dataset(&buf).unwrap(), sample());
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let mut buf = Vec::new();
        write_dataset(&sample(), &mut buf).unwrap();
        assert!(matches!(read_dataset(&buf[..buf.len() - 1]), Err(DataError::Truncated { .. })));
        let mut bad = buf.clone();
        bad[0] = b'Y';
        assert!(matches!(read_dataset(&bad), Err(DataError::BadMagic { .. })));
        let mut bad = buf.clone();
        let last = bad.len() - 1;
        bad[last] = 12;
        assert!(matches!(read_dataset(&bad), Err(DataError::InvalidLabel(12))));
        let mut long = buf;
        long.push(0);
        assert!(matches!(read_dataset(&long), Err(DataError::ShapeMismatch(_))));
    }
}
