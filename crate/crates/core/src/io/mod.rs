//! File formats: binary PGM (P5) and PNG frames, float32 binary grids for
//! greyscale/height fields, ASCII PLY and CSV point clouds, and the stitch
//! manifest.

mod csvio;
mod grid;
mod pgm;
mod ply;

pub use csvio::{read_cloud_csv, read_manifest, write_cloud_csv, write_manifest, ManifestRow};
pub use grid::{read_greyscale_grid, read_height_grid, write_greyscale_grid, write_height_grid};
pub use pgm::{read_pgm, write_pgm};
pub use ply::{read_ply, write_ply};

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::RasterImage;

/// Load an 8-bit grayscale image, dispatching on the file extension
/// (`.pgm` or `.png`).
pub fn read_image(path: &Path) -> Result<RasterImage> {
    match extension(path) {
        Some("pgm") => read_pgm(path),
        Some("png") => read_png(path),
        other => Err(Error::Format(format!(
            "unsupported image extension {other:?} for {}",
            path.display()
        ))),
    }
}

/// Write an 8-bit grayscale image, dispatching on the file extension.
pub fn write_image(path: &Path, img: &RasterImage) -> Result<()> {
    match extension(path) {
        Some("pgm") => write_pgm(path, img),
        Some("png") => write_png(path, img),
        other => Err(Error::Format(format!(
            "unsupported image extension {other:?} for {}",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

fn read_png(path: &Path) -> Result<RasterImage> {
    let img = image::open(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .into_luma8();
    RasterImage::new(img.width() as usize, img.height() as usize, img.into_raw())
}

fn write_png(path: &Path, img: &RasterImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.data().to_vec(),
    )
    .expect("raster dimensions match buffer");
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
