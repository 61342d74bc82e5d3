//! Binary field snapshots.
//!
//! Layout (little endian): magic `b"FNLS"`, `version: u32`, `dim: u32`,
//! `n: u32`, `half_width: f64`, `kind: u8` (0 real, 1 complex), then the
//! samples as `f64` (interleaved re/im for complex payloads).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FNLS";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    Real = 0,
    Complex = 1,
}

pub fn write_field<W: Write>(mut out: W, field: &Field, kind: PayloadKind) -> Result<()> {
    let g = field.grid();
    if kind == PayloadKind::Real && !field.is_real() {
        return Err(Error::NotReal(field.max_imaginary()));
    }
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    out.write_all(&(g.points_per_axis() as u32).to_le_bytes())?;
    out.write_all(&g.half_width().to_le_bytes())?;
    out.write_all(&[kind as u8])?;
    let mut buf = Vec::with_capacity(field.values().len() * 16);
    for c in field.values() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        if kind == PayloadKind::Complex {
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<(Field, PayloadKind)> {
    let mut header = [0u8; 25];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Snapshot("truncated header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let dim = u32_at(8) as usize;
    let n = u32_at(12) as usize;
    let half_width = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let kind = match header[24] {
        0 => PayloadKind::Real,
        1 => PayloadKind::Complex,
        k => return Err(Error::Snapshot(format!("unknown payload kind {k}"))),
    };
    let grid = Grid::new(dim, half_width, n).map_err(|e| Error::Snapshot(e.to_string()))?;
    let per = if kind == PayloadKind::Complex { 2 } else { 1 };
    let mut payload = vec![0u8; grid.len() * per * 8];
    input
        .read_exact(&mut payload)
        .map_err(|_| Error::Snapshot("truncated payload".into()))?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Snapshot("trailing bytes after payload".into()));
    }
    let nums: Vec<f64> =
        payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let values = match kind {
        PayloadKind::Real => nums.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        PayloadKind::Complex => nums.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(),
    };
    Ok((Field::from_values(&grid, values)?, kind))
}

pub fn save(path: impl AsRef<Path>, field: &Field, kind: PayloadKind) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, field, kind)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(Field, PayloadKind)> {
    let bytes = fs::read(path)?;
    read_field(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_bit_exact() {
        let g = Grid::new(1, 12.0, 16).unwrap();
        let f = Field::from_real_fn(&g, |x| x[0]);
        let mut buf = Vec::new();
        write_field(&mut buf, &f, PayloadKind::Real).unwrap();
        assert_eq!(&buf[0..4], b"FNLS");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &16u32.to_le_bytes());
        assert_eq!(&buf[16..24], &12.0f64.to_le_bytes());
        assert_eq!(buf[24], 0);
        assert_eq!(buf.len(), 25 + 16 * 8);
        assert_eq!(&buf[25..33], &(-12.0f64).to_le_bytes());
    }

    #[test]
    fn corrupted_inputs_are_rejected() {
        let g = Grid::new(1, 12.0, 16).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(&g), PayloadKind::Complex).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_field(bad.as_slice()), Err(Error::Snapshot(_))));
        assert!(read_field(&buf[..buf.len() - 3]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_field(long.as_slice()).is_err());
        let mut kind = buf;
        kind[24] = 7;
        assert!(read_field(kind.as_slice()).is_err());
    }

    #[test]
    fn real_payload_requires_real_field() {
        let g = Grid::new(1, 12.0, 16).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(0.0, x[0] + 20.0));
        assert!(write_field(Vec::new(), &f, PayloadKind::Real).is_err());
    }

    proptest! {
        #[test]
        fn complex_roundtrip(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 256)) {
            let g = Grid::new(2, 3.5, 16).unwrap();
            let f = Field::from_values(&g, values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &f, PayloadKind::Complex).unwrap();
            let (back, kind) = read_field(buf.as_slice()).unwrap();
            prop_assert_eq!(kind, PayloadKind::Complex);
            prop_assert_eq!(back.grid(), f.grid());
            prop_assert_eq!(back.values(), f.values());
        }
    }
}
