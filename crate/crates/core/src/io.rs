//! Image files: raw little-endian `f64` dumps (BIMG) and 16-bit binary PGM.
//! Layouts are described in `docs/formats.md`.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Row-major real image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!("{} values for a {rows}x{cols} image", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn square(side: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(side, side, data)
    }
}

const BIMG_MAGIC: &[u8; 4] = b"BIMG";

pub fn write_bimg<W: Write>(img: &Image, mut w: W) -> Result<()> {
    w.write_all(BIMG_MAGIC)?;
    for v in [img.rows as u32, img.cols as u32, 0u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &img.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bimg<R: Read>(mut r: R) -> Result<Image> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|_| Error::Format("truncated BIMG header".into()))?;
    if &header[..4] != BIMG_MAGIC {
        return Err(Error::Format("missing BIMG magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().expect("4 bytes")) as usize;
    let (rows, cols) = (word(1), word(2));
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::Format(format!("BIMG payload is {} bytes, expected {}", bytes.len(), rows * cols * 8)));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Image { rows, cols, data })
}

/// Writes a 16-bit PGM with values linearly mapped so the maximum becomes
/// 65535 (negatives clip to 0). Returns the counts-per-unit scale used.
pub fn write_pgm<W: Write>(img: &Image, mut w: W) -> Result<f64> {
    let max = img.data.iter().cloned().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    write!(w, "P5\n{} {}\n65535\n", img.cols, img.rows)?;
    for &v in &img.data {
        let q = (v * scale).round().clamp(0.0, 65535.0) as u16;
        w.write_all(&q.to_be_bytes())?;
    }
    w.flush()?;
    Ok(scale)
}

/// Reads a binary PGM (8- or 16-bit) as raw sample values.
pub fn read_pgm<R: Read>(r: R) -> Result<Image> {
    let mut r = BufReader::new(r);
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("truncated PGM header".into()));
        }
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    if tokens[0] != "P5" || tokens.len() != 4 {
        return Err(Error::Format("expected a binary PGM (P5) with a line-terminated header".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM header field '{s}'")));
    let (cols, rows, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    let width = if maxval > 255 { 2 } else { 1 };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != rows * cols * width {
        return Err(Error::Format("PGM payload size mismatch".into()));
    }
    let data = if width == 2 {
        bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    } else {
        bytes.iter().map(|&b| b as f64).collect()
    };
    Ok(Image { rows, cols, data })
}
