//! The full single-frame reconstruction chain: mask, binarize, white-ratio
//! convolution, TV smoothing, reference subtraction and shape weighting,
//! height recovery, scaling and hemisphere lift.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::field::{BinaryImage, CircularMask, GreyscaleField, RasterImage};
use crate::filter::{apply_circular_mask, binarize, estimate_mask, ratio_convolution, tvd_denoise};
use crate::sfs::{
    complement, delta_greyscale, hybrid_sfs, lift_to_hemisphere, normalize, scale_height,
    shape_weighted_greyscale, HeightField, Lifted, ReconstructionConfig, SensorGeometry,
};

/// Intermediate images of one preprocessing run, for inspection.
#[derive(Debug, Clone)]
pub struct GreyStages {
    pub masked: RasterImage,
    pub binary: BinaryImage,
    pub ratio: GreyscaleField,
    pub smoothed: GreyscaleField,
}

/// Everything one frame reconstruction produces.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub height_mm: HeightField,
    pub lifted: Lifted,
    pub geometry: SensorGeometry,
    pub alpha_used: f64,
    /// Greyscale variation, shape-weighted greyscale and the normalized
    /// solver input, kept for the inspection command.
    pub delta: GreyscaleField,
    pub shape_weighted: GreyscaleField,
    pub normalized: GreyscaleField,
    pub frame_stages: GreyStages,
    pub rest_stages: GreyStages,
}

impl Reconstruction {
    pub fn max_depth_mm(&self) -> f64 {
        self.height_mm.max_value()
    }
}

/// Mask, binarize, ratio-convolve and smooth one frame.
pub fn preprocess(
    frame: &RasterImage,
    mask: &CircularMask,
    cfg: &PipelineConfig,
) -> Result<GreyStages> {
    let masked = apply_circular_mask(frame, mask)?;
    let binary = binarize(&masked, cfg.threshold);
    let ratio = ratio_convolution(&binary, cfg.window, cfg.stride)?;
    let smoothed = tvd_denoise(&ratio, cfg.tvd_weight, cfg.tvd_iters)?;
    Ok(GreyStages {
        masked,
        binary,
        ratio,
        smoothed,
    })
}

fn solver_config(cfg: &PipelineConfig) -> ReconstructionConfig {
    ReconstructionConfig {
        iterations: cfg.iterations,
        derivative_guard_eps: cfg.guard_eps,
        clamp_negative_gd: cfg.clamp_gd,
        min_brightness: cfg.min_brightness,
        max_slope: cfg.max_slope,
    }
}

/// Reconstruct a frame against its rest-state reference.
pub fn reconstruct(
    frame: &RasterImage,
    rest: &RasterImage,
    cfg: &PipelineConfig,
) -> Result<Reconstruction> {
    cfg.validate()?;
    if frame.width() != rest.width() || frame.height() != rest.height() {
        return Err(Error::shape(
            format!("{}x{}", rest.width(), rest.height()),
            format!("{}x{}", frame.width(), frame.height()),
        ));
    }

    let mask = match cfg.mask {
        Some((cu, cv, r)) => CircularMask::new(cu, cv, r)?,
        None => estimate_mask(rest)?,
    };

    let rest_stages = preprocess(rest, &mask, cfg)?;
    let frame_stages = preprocess(frame, &mask, cfg)?;
    let g = &frame_stages.smoothed;
    let g0 = &rest_stages.smoothed;

    let delta = delta_greyscale(g, g0, cfg.clamp_gd)?;
    let delta_norm = normalize(&delta);
    let shape_weighted = shape_weighted_greyscale(&delta_norm, g0)?;
    let normalized = normalize(&shape_weighted);

    // the ratio greyscale is darkest at rest while the reflectance model is
    // brightest on flat ground; the solver sees the complemented map
    let solver_input = complement(&normalized)?;
    let raw_height = hybrid_sfs(&solver_input, &solver_config(cfg))?;

    let alpha_used = match cfg.alpha_from_depth {
        Some(depth) if raw_height.max_value() > 0.0 => depth / raw_height.max_value(),
        _ => cfg.alpha,
    };
    let geometry = SensorGeometry::new(cfg.radius_mm, mask, alpha_used, cfg.pixel_pitch)?;
    let height_mm = scale_height(&raw_height, &geometry);
    let lifted = lift_to_hemisphere(&height_mm, &geometry);

    Ok(Reconstruction {
        height_mm,
        lifted,
        geometry,
        alpha_used,
        delta,
        shape_weighted,
        normalized,
        frame_stages,
        rest_stages,
    })
}
