//! Float32 binary grid format: a 16-byte little-endian header (4-byte magic,
//! u32 width, u32 height, u32 value-range code) followed by row-major f32
//! samples. Greyscale grids use magic "TSGF", height grids "TSHF" with
//! values in millimetres.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{GreyscaleField, ValueRange};
use crate::sfs::HeightField;

const GREY_MAGIC: &[u8; 4] = b"TSGF";
const HEIGHT_MAGIC: &[u8; 4] = b"TSHF";

fn write_grid(path: &Path, magic: &[u8; 4], width: usize, height: usize, code: u32, data: &[f64]) -> Result<()> {
    let mut out = Vec::with_capacity(16 + data.len() * 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&code.to_le_bytes());
    for &x in data {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_grid(path: &Path, magic: &[u8; 4]) -> Result<(usize, usize, u32, Vec<f64>)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::Format(format!("{}: header truncated", path.display())));
    }
    if &bytes[0..4] != magic {
        return Err(Error::Format(format!(
            "{}: expected magic {:?}, got {:?}",
            path.display(),
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let code = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let needed = 16 + width * height * 4;
    if bytes.len() != needed {
        return Err(Error::Format(format!(
            "{}: expected {needed} bytes for {width}x{height}, got {}",
            path.display(),
            bytes.len()
        )));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((width, height, code, data))
}

pub fn write_greyscale_grid(path: &Path, field: &GreyscaleField) -> Result<()> {
    write_grid(
        path,
        GREY_MAGIC,
        field.width(),
        field.height(),
        field.range().code(),
        field.data(),
    )
}

pub fn read_greyscale_grid(path: &Path) -> Result<GreyscaleField> {
    let (width, height, code, data) = read_grid(path, GREY_MAGIC)?;
    let range = ValueRange::from_code(code)
        .ok_or_else(|| Error::Format(format!("unknown value-range code {code}")))?;
    GreyscaleField::new(width, height, range, data)
}

pub fn write_height_grid(path: &Path, field: &HeightField) -> Result<()> {
    write_grid(
        path,
        HEIGHT_MAGIC,
        field.width(),
        field.height(),
        ValueRange::Millimeters.code(),
        field.data(),
    )
}

pub fn read_height_grid(path: &Path) -> Result<HeightField> {
    let (width, height, code, data) = read_grid(path, HEIGHT_MAGIC)?;
    if code != ValueRange::Millimeters.code() {
        return Err(Error::Format(format!(
            "height grid carries value-range code {code}, expected millimetres"
        )));
    }
    HeightField::new(width, height, data)
}
