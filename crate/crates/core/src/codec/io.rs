//! PGM (binary P5, maxval 255) and the QDCT coefficient container.
//!
//! QDCT layout:
//!
//! ```text
//! QDCT1\n
//! width <W>\n
//! height <H>\n
//! quality <Q>\n
//! <W*H little-endian i16 coefficients, block-major, row-major within a block>
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::image::{CoefficientImage, SpatialImage};
use super::quant::quant_table;
use crate::{Error, Result};

const QDCT_MAGIC: &[u8] = b"QDCT1\n";

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn read_all(mut r: impl Read) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    Ok(buf)
}

/// Next whitespace-delimited PGM header token, skipping `#` comments.
fn pgm_token(data: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(fmt_err("truncated PGM header"));
    }
    Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

fn pgm_number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    pgm_token(data, pos)?
        .parse()
        .map_err(|_| fmt_err(format!("bad PGM {what}")))
}

pub fn read_pgm_from(r: impl Read) -> Result<SpatialImage> {
    let data = read_all(r)?;
    let mut pos = 0;
    if pgm_token(&data, &mut pos)? != "P5" {
        return Err(fmt_err("not a binary (P5) PGM"));
    }
    let width = pgm_number(&data, &mut pos, "width")?;
    let height = pgm_number(&data, &mut pos, "height")?;
    let maxval = pgm_number(&data, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(fmt_err(format!("unsupported PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    if data.len() < pos + n {
        return Err(fmt_err("truncated PGM raster"));
    }
    SpatialImage::new(width, height, data[pos..pos + n].to_vec())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<SpatialImage> {
    read_pgm_from(BufReader::new(File::open(path)?))
}

pub fn write_pgm_to(img: &SpatialImage, mut w: impl Write) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.pixels())?;
    w.flush()?;
    Ok(())
}

pub fn write_pgm(img: &SpatialImage, path: impl AsRef<Path>) -> Result<()> {
    write_pgm_to(img, BufWriter::new(File::create(path)?))
}

fn qdct_field(data: &[u8], pos: &mut usize, key: &str) -> Result<usize> {
    let end = data[*pos..]
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| fmt_err("truncated QDCT header"))?;
    let line = std::str::from_utf8(&data[*pos..*pos + end]).map_err(|_| fmt_err("non-ASCII QDCT header"))?;
    *pos += end + 1;
    let value = line
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| fmt_err(format!("expected QDCT header field `{key}`, got `{line}`")))?;
    value
        .trim()
        .parse()
        .map_err(|_| fmt_err(format!("bad QDCT {key} `{value}`")))
}

pub fn read_qdct_from(r: impl Read) -> Result<CoefficientImage> {
    let data = read_all(r)?;
    if !data.starts_with(QDCT_MAGIC) {
        return Err(fmt_err("missing QDCT1 magic"));
    }
    let mut pos = QDCT_MAGIC.len();
    let width = qdct_field(&data, &mut pos, "width")?;
    let height = qdct_field(&data, &mut pos, "height")?;
    let quality = qdct_field(&data, &mut pos, "quality")?;
    let qtable = quant_table(quality as u32).map_err(|e| fmt_err(e.to_string()))?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| fmt_err("QDCT dimensions overflow"))?;
    let payload = &data[pos..];
    if payload.len() != 2 * n {
        return Err(fmt_err(format!(
            "QDCT payload has {} bytes, expected {}",
            payload.len(),
            2 * n
        )));
    }
    let coeffs = payload
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect();
    CoefficientImage::new(width, height, qtable, coeffs)
}

pub fn read_qdct(path: impl AsRef<Path>) -> Result<CoefficientImage> {
    read_qdct_from(BufReader::new(File::open(path)?))
}

pub fn write_qdct_to(ci: &CoefficientImage, mut w: impl Write) -> Result<()> {
    w.write_all(QDCT_MAGIC)?;
    write!(
        w,
        "width {}\nheight {}\nquality {}\n",
        ci.width(),
        ci.height(),
        ci.qtable().quality()
    )?;
    for c in ci.coeffs() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_qdct(ci: &CoefficientImage, path: impl AsRef<Path>) -> Result<()> {
    write_qdct_to(ci, BufWriter::new(File::create(path)?))
}
