//! Binary cache of a [`BispectrumIndex`]; layout in `docs/formats.md`.

use std::io::{Read, Write};

use super::index::{build_phase_map, BispectrumIndex, FreqCoord, Triplet};
use crate::error::{Error, Result};
use crate::sparse::SparseCsr;

const MAGIC: &[u8; 4] = b"BIDX";
const VERSION: u32 = 1;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn to_u32(x: usize, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Format(format!("{what} {x} exceeds u32")))
}

pub fn write_index<W: Write>(index: &BispectrumIndex, mut w: W) -> Result<()> {
    let a = index.operator();
    w.write_all(MAGIC)?;
    for v in [
        VERSION,
        to_u32(index.image_side(), "image side")?,
        to_u32(index.n_unknowns(), "unknown count")?,
        to_u32(index.len(), "triplet count")?,
        to_u32(a.nnz(), "nonzero count")?,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&index.recovery_radius().to_le_bytes())?;
    w.write_all(&index.inner_radius().to_le_bytes())?;
    for t in index.triplets() {
        for c in [t.u.i, t.u.j, t.v.i, t.v.j] {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    for &p in a.row_ptr() {
        w.write_all(&to_u32(p, "row pointer")?.to_le_bytes())?;
    }
    for &c in a.col_idx() {
        w.write_all(&to_u32(c, "column index")?.to_le_bytes())?;
    }
    for &v in a.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut buf = [0u8; K];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated index file".into()),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_index<R: Read>(r: R) -> Result<BispectrumIndex> {
    let mut r = Reader { inner: r };
    if &r.bytes::<4>()? != MAGIC {
        return format_err("missing BIDX magic");
    }
    let version = r.u32()?;
    if version != VERSION {
        return format_err(format!("unsupported BIDX version {version}"));
    }
    let side = r.u32()? as usize;
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    let nnz = r.u32()? as usize;
    let radius = r.f64()?;
    let inner = r.f64()?;
    let map = build_phase_map(side, radius).map_err(|e| Error::Format(e.to_string()))?;
    if map.len() != n {
        return format_err(format!("header declares {n} unknowns, radius implies {}", map.len()));
    }
    if !(inner > 0.0 && inner <= radius) {
        return format_err(format!("inner radius {inner} out of range"));
    }
    let mut triplets = Vec::with_capacity(m.min(1 << 24));
    for _ in 0..m {
        let u = FreqCoord::new(r.i32()?, r.i32()?);
        let v = FreqCoord::new(r.i32()?, r.i32()?);
        triplets.push(Triplet { u, v });
    }
    let mut row_ptr = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        row_ptr.push(r.u32()? as usize);
    }
    let mut col_idx = Vec::with_capacity(nnz.min(1 << 26));
    for _ in 0..nnz {
        col_idx.push(r.u32()? as usize);
    }
    let mut values = Vec::with_capacity(nnz.min(1 << 26));
    for _ in 0..nnz {
        values.push(r.f64()?);
    }
    let a = SparseCsr::from_raw(m, n, row_ptr, col_idx, values).map_err(|e| Error::Format(e.to_string()))?;
    BispectrumIndex::from_parts(map, inner, triplets, a).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bispectrum::build_index;

    #[test]
    fn round_trip() {
        let idx = build_index(build_phase_map(32, 9.0).unwrap(), 4.0).unwrap();
        let mut buf = Vec::new();
        write_index(&idx, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"BIDX");
        let back = read_index(&buf[..]).unwrap();
        assert_eq!(back.triplets(), idx.triplets());
        assert_eq!(back.operator(), idx.operator());
        assert_eq!(back.positions(), idx.positions());
        assert_eq!(back.inner_radius(), 4.0);
    }

    #[test]
    fn rejects_corruption() {
        let idx = build_index(build_phase_map(16, 4.0).unwrap(), 2.0).unwrap();
        let mut buf = Vec::new();
        write_index(&idx, &mut buf).unwrap();
        assert!(matches!(read_index(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_index(&bad[..]), Err(Error::Format(_))));
        let mut bad = buf;
        bad[12..16].copy_from_slice(&999u32.to_le_bytes());
        assert!(matches!(read_index(&bad[..]), Err(Error::Format(_))));
    }
}
