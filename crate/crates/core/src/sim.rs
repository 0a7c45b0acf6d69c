//! Synthetic tactile-frame generator with ground-truth height fields.
//!
//! A hexagonal lattice of black pins over a white marker layer mimics the
//! rest-state appearance; contact is simulated by intersecting a rigid
//! primitive with the hemisphere along camera rays, smoothing the depth with
//! a Gaussian skirt, and shrinking each pin by the local depth so the local
//! white ratio rises monotonically with deformation. Rendering is fully
//! deterministic: identical configurations produce bit-identical frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CircularMask, RasterImage};
use crate::sfs::{HeightField, SensorGeometry};

/// Hexagonal pin layout inside the circular sensor field.
#[derive(Debug, Clone)]
pub struct PinLattice {
    pub pitch_px: f64,
    pub pin_radius_px: f64,
    pub field: CircularMask,
    /// White marker layer behind black pins; `false` swaps the colors.
    pub marker_background: bool,
}

impl PinLattice {
    pub fn new(
        pitch_px: f64,
        pin_radius_px: f64,
        field: CircularMask,
        marker_background: bool,
    ) -> Result<Self> {
        if !pitch_px.is_finite() || pitch_px <= 0.0 {
            return Err(Error::Domain(format!("pitch {pitch_px} must be > 0")));
        }
        if !pin_radius_px.is_finite() || pin_radius_px < 0.0 || pin_radius_px >= pitch_px / 2.0 {
            return Err(Error::Domain(format!(
                "pin radius {pin_radius_px} must lie in [0, pitch/2) so pins never merge"
            )));
        }
        Ok(Self {
            pitch_px,
            pin_radius_px,
            field,
            marker_background,
        })
    }

    /// Pin centers covering the field (including pins cut by its edge).
    fn sites(&self) -> Vec<(f64, f64)> {
        let row_step = self.pitch_px * 3.0f64.sqrt() / 2.0;
        let reach = self.field.radius + self.pin_radius_px;
        let j_max = (reach / row_step).ceil() as i64 + 1;
        let i_max = (reach / self.pitch_px).ceil() as i64 + 1;
        let mut sites = Vec::new();
        for j in -j_max..=j_max {
            let y = self.field.center_v + j as f64 * row_step;
            let offset = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
            for i in -i_max..=i_max {
                let x = self.field.center_u + (i as f64 + offset) * self.pitch_px;
                let du = x - self.field.center_u;
                let dv = y - self.field.center_v;
                if (du * du + dv * dv).sqrt() <= reach {
                    sites.push((x, y));
                }
            }
        }
        sites
    }
}

/// Rigid contact shapes, modeled by their bottom surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveKind {
    Sphere {
        radius_mm: f64,
    },
    Box {
        len_x_mm: f64,
        len_y_mm: f64,
    },
    Cylinder {
        radius_mm: f64,
    },
    /// Boolean difference of two circles extruded along z: the inner circle,
    /// offset along the object's x axis, is carved out of the outer one.
    Crescent {
        outer_radius_mm: f64,
        inner_radius_mm: f64,
        inner_offset_mm: f64,
    },
}

impl PrimitiveKind {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PrimitiveKind::Sphere { radius_mm } => radius_mm > 0.0,
            PrimitiveKind::Box { len_x_mm, len_y_mm } => len_x_mm > 0.0 && len_y_mm > 0.0,
            PrimitiveKind::Cylinder { radius_mm } => radius_mm > 0.0,
            PrimitiveKind::Crescent {
                outer_radius_mm,
                inner_radius_mm,
                inner_offset_mm,
            } => {
                outer_radius_mm > 0.0
                    && inner_radius_mm > 0.0
                    && inner_offset_mm >= 0.0
                    && inner_offset_mm < outer_radius_mm + inner_radius_mm
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid primitive dimensions: {self:?}")))
        }
    }
}

/// A primitive pressed into the sensor at a lateral position and yaw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPrimitive {
    #[serde(flatten)]
    pub kind: PrimitiveKind,
    pub pose_x_mm: f64,
    pub pose_y_mm: f64,
    pub yaw_rad: f64,
    pub indent_depth_mm: f64,
}

impl ContactPrimitive {
    pub fn validate(&self, geom: &SensorGeometry) -> Result<()> {
        self.kind.validate()?;
        if !self.indent_depth_mm.is_finite()
            || self.indent_depth_mm < 0.0
            || self.indent_depth_mm >= geom.radius_mm
        {
            return Err(Error::Domain(format!(
                "indent depth {} must lie in [0, sensor radius {})",
                self.indent_depth_mm, geom.radius_mm
            )));
        }
        Ok(())
    }
}

/// Exposure behavior of the deformed render.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderParams {
    /// Maximum relative pin shrink at saturation depth.
    pub kappa: f64,
    /// Depth at which the white-ratio response saturates.
    pub saturation_depth_mm: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            kappa: 0.6,
            saturation_depth_mm: 4.0,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::Domain(format!("kappa {} must lie in [0, 1]", self.kappa)));
        }
        if !self.saturation_depth_mm.is_finite() || self.saturation_depth_mm <= 0.0 {
            return Err(Error::Domain("saturation depth must be > 0".into()));
        }
        Ok(())
    }
}

/// Sidecar metadata describing how a synthetic frame was produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameMeta {
    pub primitive: ContactPrimitive,
    pub lattice_pitch_px: f64,
    pub lattice_pin_radius_px: f64,
    pub field_center_u: f64,
    pub field_center_v: f64,
    pub field_radius_px: f64,
    pub kappa: f64,
    pub skirt_sigma_px: f64,
    pub saturation_depth_mm: f64,
    pub sensor_radius_mm: f64,
    pub pixel_pitch_mm: f64,
    pub alpha: f64,
    pub width: usize,
    pub height: usize,
}

/// Deformed frame paired with its ground-truth height field.
#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub image: RasterImage,
    pub truth_height: HeightField,
    pub meta: Option<FrameMeta>,
}

/// Render the undeformed sensor: white field, black pins at rest size.
pub fn render_rest_frame(
    lattice: &PinLattice,
    width: usize,
    height: usize,
) -> Result<RasterImage> {
    render_frame(lattice, width, height, |_, _| lattice.pin_radius_px)
}

fn render_frame(
    lattice: &PinLattice,
    width: usize,
    height: usize,
    pin_radius_at: impl Fn(f64, f64) -> f64,
) -> Result<RasterImage> {
    if !lattice.field.center_inside(width, height) {
        return Err(Error::InvalidMask(format!(
            "field center outside {width}x{height} frame"
        )));
    }
    let (bg, fg) = if lattice.marker_background {
        (255u8, 0u8)
    } else {
        (0u8, 255u8)
    };
    let mut img = RasterImage::filled(width, height, 0)?;
    for v in 0..height {
        for u in 0..width {
            if lattice.field.contains(u, v) {
                img.set(u, v, bg);
            }
        }
    }
    for (sx, sy) in lattice.sites() {
        let r = pin_radius_at(sx, sy);
        if r <= 0.0 {
            continue;
        }
        let u0 = ((sx - r).floor().max(0.0)) as usize;
        let v0 = ((sy - r).floor().max(0.0)) as usize;
        let u1 = ((sx + r).ceil() as usize).min(width - 1);
        let v1 = ((sy + r).ceil() as usize).min(height - 1);
        for v in v0..=v1 {
            for u in u0..=u1 {
                let du = u as f64 - sx;
                let dv = v as f64 - sy;
                if du * du + dv * dv <= r * r && lattice.field.contains(u, v) {
                    img.set(u, v, fg);
                }
            }
        }
    }
    Ok(img)
}

/// Ground-truth deformation of the skin under a rigid primitive: per pixel,
/// the intersection depth of the primitive with the rest hemisphere along
/// the radial camera ray, clamped to the indent depth and smoothed with a
/// Gaussian skirt. A primitive that never reaches the skin yields all zeros.
pub fn indent_height(
    primitive: &ContactPrimitive,
    geom: &SensorGeometry,
    width: usize,
    height: usize,
    skirt_sigma_px: f64,
) -> Result<HeightField> {
    primitive.validate(geom)?;
    if !skirt_sigma_px.is_finite() || skirt_sigma_px < 0.0 {
        return Err(Error::Domain("skirt sigma must be >= 0".into()));
    }
    let r = geom.radius_mm;
    let d = primitive.indent_depth_mm;
    let mut raw = HeightField::zeros(width, height);
    if d == 0.0 {
        return Ok(raw);
    }

    // rest skin height above the press point; no contact if the press point
    // is off the hemisphere
    let rho2_pose = primitive.pose_x_mm.powi(2) + primitive.pose_y_mm.powi(2);
    if rho2_pose >= r * r {
        return Ok(raw);
    }
    let z_ref = (r * r - rho2_pose).sqrt();
    let z_bottom = z_ref - d;
    if z_bottom <= 0.0 {
        return Err(Error::Domain(format!(
            "indent {d} swallows the hemisphere at the press point"
        )));
    }

    let (sin_yaw, cos_yaw) = primitive.yaw_rad.sin_cos();
    let to_object = |wx: f64, wy: f64| -> (f64, f64) {
        let dx = wx - primitive.pose_x_mm;
        let dy = wy - primitive.pose_y_mm;
        (cos_yaw * dx + sin_yaw * dy, -sin_yaw * dx + cos_yaw * dy)
    };

    for v in 0..height {
        for u in 0..width {
            if !geom.mask.contains(u, v) {
                continue;
            }
            let x = geom.pixel_pitch_mm * (u as f64 - geom.mask.center_u);
            let y = geom.pixel_pitch_mm * (v as f64 - geom.mask.center_v);
            let rho2 = x * x + y * y;
            if rho2 >= r * r {
                continue;
            }
            let z0 = (r * r - rho2).sqrt();
            // unit radial ray through the rest-skin point
            let (ux, uy, uz) = (x / r, y / r, z0 / r);
            let t_hit = match primitive.kind {
                PrimitiveKind::Sphere { radius_mm } => {
                    let cz = z_bottom + radius_mm;
                    let b = ux * primitive.pose_x_mm + uy * primitive.pose_y_mm + uz * cz;
                    let c2 = rho2_pose + cz * cz - radius_mm * radius_mm;
                    let disc = b * b - c2;
                    if disc < 0.0 {
                        None
                    } else {
                        Some(b - disc.sqrt())
                    }
                }
                PrimitiveKind::Box { len_x_mm, len_y_mm } => {
                    flat_bottom_hit(z_bottom, uz, ux, uy, |wx, wy| {
                        let (ox, oy) = to_object(wx, wy);
                        ox.abs() <= len_x_mm / 2.0 && oy.abs() <= len_y_mm / 2.0
                    })
                }
                PrimitiveKind::Cylinder { radius_mm } => {
                    flat_bottom_hit(z_bottom, uz, ux, uy, |wx, wy| {
                        let (ox, oy) = to_object(wx, wy);
                        ox * ox + oy * oy <= radius_mm * radius_mm
                    })
                }
                PrimitiveKind::Crescent {
                    outer_radius_mm,
                    inner_radius_mm,
                    inner_offset_mm,
                } => flat_bottom_hit(z_bottom, uz, ux, uy, |wx, wy| {
                    let (ox, oy) = to_object(wx, wy);
                    let in_outer = ox * ox + oy * oy <= outer_radius_mm * outer_radius_mm;
                    let ix = ox - inner_offset_mm;
                    let in_inner = ix * ix + oy * oy < inner_radius_mm * inner_radius_mm;
                    in_outer && !in_inner
                }),
            };
            if let Some(t) = t_hit {
                if t > 0.0 && t < r {
                    raw.set(u, v, (r - t).min(d));
                }
            }
        }
    }

    if skirt_sigma_px > 0.0 {
        Ok(gaussian_blur(&raw, skirt_sigma_px))
    } else {
        Ok(raw)
    }
}

/// Intersection parameter with a flat bottom surface at `z_bottom` whose
/// footprint contains the hit point.
fn flat_bottom_hit(
    z_bottom: f64,
    uz: f64,
    ux: f64,
    uy: f64,
    in_footprint: impl Fn(f64, f64) -> bool,
) -> Option<f64> {
    if uz <= 0.0 {
        return None;
    }
    let t = z_bottom / uz;
    let wx = ux * t;
    let wy = uy * t;
    if in_footprint(wx, wy) {
        Some(t)
    } else {
        None
    }
}

/// Separable Gaussian blur with a normalized kernel truncated at 3 sigma;
/// preserves nonnegativity and never raises the maximum.
fn gaussian_blur(h: &HeightField, sigma: f64) -> HeightField {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-((i * i) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let (w, hh) = (h.width(), h.height());
    let mut tmp = vec![0.0f64; w * hh];
    for v in 0..hh {
        for u in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let uu = u as isize + ki as isize - radius;
                if uu >= 0 && (uu as usize) < w {
                    acc += k * h.get(uu as usize, v);
                }
            }
            tmp[v * w + u] = acc;
        }
    }
    let mut out = HeightField::zeros(w, hh);
    for v in 0..hh {
        for u in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let vv = v as isize + ki as isize - radius;
                if vv >= 0 && (vv as usize) < hh {
                    acc += k * tmp[vv as usize * w + u];
                }
            }
            out.set(u, v, acc);
        }
    }
    out
}

/// Render the deformed frame: each pin shrinks by the saturating local
/// depth, exposing more of the white layer where contact is deeper.
pub fn render_deformed_frame(
    lattice: &PinLattice,
    truth: &HeightField,
    params: &RenderParams,
    meta: Option<FrameMeta>,
) -> Result<SyntheticFrame> {
    params.validate()?;
    if truth.data().iter().any(|&x| x < 0.0) {
        return Err(Error::Domain("height field must be nonnegative".into()));
    }
    let (width, height) = (truth.width(), truth.height());
    let image = render_frame(lattice, width, height, |sx, sy| {
        let u = (sx.round().max(0.0) as usize).min(width - 1);
        let v = (sy.round().max(0.0) as usize).min(height - 1);
        let exposure = (truth.get(u, v) / params.saturation_depth_mm).min(1.0);
        lattice.pin_radius_px * (1.0 - params.kappa * exposure)
    })?;
    Ok(SyntheticFrame {
        image,
        truth_height: truth.clone(),
        meta,
    })
}
