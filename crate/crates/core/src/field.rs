//! Image and field containers: 8-bit raster frames, binary marker masks,
//! real-valued greyscale fields and the circular sensor mask.
//!
//! All grids are row-major with `u` the column index and `v` the row index,
//! matching pixel coordinates `(u, v)`.

use crate::error::{Error, Result};

/// 8-bit grayscale camera frame or intermediate image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("image dimensions must be >= 1".into()));
        }
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} samples", width * height),
                format!("{}", data.len()),
            ));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u8 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: u8) {
        self.data[v * self.width + u] = value;
    }
}

/// Binarized marker image; every sample is 0 or 1 (1 = white marker pixel).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("image dimensions must be >= 1".into()));
        }
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} samples", width * height),
                format!("{}", data.len()),
            ));
        }
        if let Some(bad) = data.iter().find(|&&b| b > 1) {
            return Err(Error::Domain(format!(
                "binary image sample {bad} is neither 0 nor 1"
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u8 {
        self.data[v * self.width + u]
    }

    /// View the binary image as a 0/255 raster (white markers at 255).
    pub fn to_raster(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b == 1 { 255 } else { 0 }).collect(),
        }
    }
}

/// Declared bounds of a greyscale or height grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRange {
    /// Raw intensity ratios in [0, 255].
    Raw255,
    /// Normalized values in [0, 1].
    Unit,
    /// Heights in millimetres (nonnegative, unbounded above).
    Millimeters,
    /// Signed differences of raw intensities, in [-255, 255].
    Signed255,
}

impl ValueRange {
    pub fn bounds(self) -> (f64, Option<f64>) {
        match self {
            ValueRange::Raw255 => (0.0, Some(255.0)),
            ValueRange::Unit => (0.0, Some(1.0)),
            ValueRange::Millimeters => (0.0, None),
            ValueRange::Signed255 => (-255.0, Some(255.0)),
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            ValueRange::Raw255 => 0,
            ValueRange::Unit => 1,
            ValueRange::Millimeters => 2,
            ValueRange::Signed255 => 3,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(ValueRange::Raw255),
            1 => Some(ValueRange::Unit),
            2 => Some(ValueRange::Millimeters),
            3 => Some(ValueRange::Signed255),
            _ => None,
        }
    }
}

/// Real-valued 2D field with declared value bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyscaleField {
    width: usize,
    height: usize,
    range: ValueRange,
    data: Vec<f64>,
}

impl GreyscaleField {
    pub fn new(width: usize, height: usize, range: ValueRange, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("field dimensions must be >= 1".into()));
        }
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} samples", width * height),
                format!("{}", data.len()),
            ));
        }
        let (lo, hi) = range.bounds();
        for &x in &data {
            if !x.is_finite() || x < lo || hi.is_some_and(|h| x > h) {
                return Err(Error::Domain(format!(
                    "value {x} outside declared range {range:?}"
                )));
            }
        }
        Ok(Self { width, height, range, data })
    }

    pub fn zeros(width: usize, height: usize, range: ValueRange) -> Self {
        Self {
            width,
            height,
            range,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.data[v * self.width + u] = value;
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &self.data {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo, hi)
    }

    pub fn same_shape(&self, other: &GreyscaleField) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Circular region of valid sensor pixels; everything outside is noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularMask {
    pub center_u: f64,
    pub center_v: f64,
    pub radius: f64,
}

impl CircularMask {
    pub fn new(center_u: f64, center_v: f64, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidMask(format!("radius {radius} must be > 0")));
        }
        if !center_u.is_finite() || !center_v.is_finite() {
            return Err(Error::InvalidMask("center must be finite".into()));
        }
        Ok(Self { center_u, center_v, radius })
    }

    /// Whether the mask center lies inside a width x height image.
    pub fn center_inside(&self, width: usize, height: usize) -> bool {
        self.center_u >= 0.0
            && self.center_v >= 0.0
            && self.center_u <= (width - 1) as f64
            && self.center_v <= (height - 1) as f64
    }

    #[inline]
    pub fn contains(&self, u: usize, v: usize) -> bool {
        let du = u as f64 - self.center_u;
        let dv = v as f64 - self.center_v;
        du * du + dv * dv <= self.radius * self.radius
    }
}
