//! Binary PGM (P5), maxval 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::RasterImage;

pub fn write_pgm(path: &Path, img: &RasterImage) -> Result<()> {
    let mut out = Vec::with_capacity(img.data().len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.extend_from_slice(img.data());
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<RasterImage> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let mut token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token(&bytes)?;
    if magic != "P5" {
        return Err(Error::Format(format!("expected P5 magic, got {magic:?}")));
    }
    let width: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::Format("bad PGM width".into()))?;
    let height: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::Format("bad PGM height".into()))?;
    let maxval: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::Format("bad PGM maxval".into()))?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the samples
    pos += 1;
    let needed = width * height;
    if bytes.len() < pos + needed {
        return Err(Error::Format(format!(
            "PGM data truncated: need {needed} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    RasterImage::new(width, height, bytes[pos..pos + needed].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let mut img = RasterImage::filled(17, 9, 0).unwrap();
        for v in 0..9 {
            for u in 0..17 {
                img.set(u, v, ((u * 31 + v * 7) % 256) as u8);
            }
        }
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    #[test]
    fn reads_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut raw = b"P5\n# a comment\n2 2\n255\n".to_vec();
        raw.extend_from_slice(&[1, 2, 3, 4]);
        std::fs::write(&path, raw).unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img.data(), &[1, 2, 3, 4]);
    }

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P2\n2 2\n255\n1 2 3 4\n").unwrap();
        assert!(read_pgm(&path).is_err());
        std::fs::write(&path, b"P5\n4 4\n255\nab").unwrap();
        assert!(read_pgm(&path).is_err());
    }
}
