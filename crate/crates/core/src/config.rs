//! Pipeline configuration: every tunable of the reconstruction chain, with a
//! plain `key = value` file format that round-trips.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filter::Threshold;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Ratio-convolution window (columns, rows); both odd.
    pub window: (usize, usize),
    pub stride: usize,
    pub threshold: Threshold,
    pub tvd_weight: f64,
    pub tvd_iters: usize,
    /// Clamp negative greyscale variation to zero.
    pub clamp_gd: bool,
    /// Height-solver sweep count.
    pub iterations: usize,
    pub guard_eps: f64,
    pub min_brightness: f64,
    pub max_slope: f64,
    /// Fixed height scale factor.
    pub alpha: f64,
    /// When set, calibrate alpha per frame as depth / max(recovered height).
    pub alpha_from_depth: Option<f64>,
    pub radius_mm: f64,
    /// Millimetres per pixel; `None` derives radius_mm / mask radius.
    pub pixel_pitch: Option<f64>,
    /// Mask center and radius in pixels; `None` estimates from the rest frame.
    pub mask: Option<(f64, f64, f64)>,
    /// Lateral radius for point-cloud z smoothing.
    pub smooth_radius: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: (21, 21),
            stride: 1,
            threshold: Threshold::Auto,
            tvd_weight: 0.8,
            tvd_iters: 100,
            clamp_gd: true,
            iterations: 25,
            guard_eps: 1e-6,
            min_brightness: 0.05,
            max_slope: 1.0,
            alpha: 15.0,
            alpha_from_depth: None,
            radius_mm: 20.0,
            pixel_pitch: None,
            mask: None,
            smooth_radius: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "window = {}x{}", self.window.0, self.window.1);
        let _ = writeln!(s, "stride = {}", self.stride);
        match self.threshold {
            Threshold::Auto => {
                let _ = writeln!(s, "threshold = auto");
            }
            Threshold::Fixed(t) => {
                let _ = writeln!(s, "threshold = {t}");
            }
        }
        let _ = writeln!(s, "tvd_weight = {}", self.tvd_weight);
        let _ = writeln!(s, "tvd_iters = {}", self.tvd_iters);
        let _ = writeln!(s, "clamp_gd = {}", self.clamp_gd);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "guard_eps = {}", self.guard_eps);
        let _ = writeln!(s, "min_brightness = {}", self.min_brightness);
        let _ = writeln!(s, "max_slope = {}", self.max_slope);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        match self.alpha_from_depth {
            Some(d) => {
                let _ = writeln!(s, "alpha_from_depth = {d}");
            }
            None => {
                let _ = writeln!(s, "alpha_from_depth = none");
            }
        }
        let _ = writeln!(s, "radius_mm = {}", self.radius_mm);
        match self.pixel_pitch {
            Some(p) => {
                let _ = writeln!(s, "pixel_pitch = {p}");
            }
            None => {
                let _ = writeln!(s, "pixel_pitch = auto");
            }
        }
        match self.mask {
            Some((cu, cv, r)) => {
                let _ = writeln!(s, "mask = {cu},{cv},{r}");
            }
            None => {
                let _ = writeln!(s, "mask = auto");
            }
        }
        let _ = writeln!(s, "smooth_radius = {}", self.smooth_radius);
        s
    }

    /// Parse `key = value` lines; `#` starts a comment, unknown keys are
    /// rejected, omitted keys keep their defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value", ln + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad =
                |what: &str| Error::Format(format!("line {}: bad {what} {value:?}", ln + 1));
            match key {
                "window" => {
                    let (m, n) = match value.split_once('x') {
                        Some((m, n)) => (
                            m.trim().parse().map_err(|_| bad("window"))?,
                            n.trim().parse().map_err(|_| bad("window"))?,
                        ),
                        None => {
                            let m = value.parse().map_err(|_| bad("window"))?;
                            (m, m)
                        }
                    };
                    cfg.window = (m, n);
                }
                "stride" => cfg.stride = value.parse().map_err(|_| bad("stride"))?,
                "threshold" => {
                    cfg.threshold = if value == "auto" {
                        Threshold::Auto
                    } else {
                        Threshold::Fixed(value.parse().map_err(|_| bad("threshold"))?)
                    }
                }
                "tvd_weight" => cfg.tvd_weight = value.parse().map_err(|_| bad("tvd_weight"))?,
                "tvd_iters" => cfg.tvd_iters = value.parse().map_err(|_| bad("tvd_iters"))?,
                "clamp_gd" => cfg.clamp_gd = value.parse().map_err(|_| bad("clamp_gd"))?,
                "iterations" => cfg.iterations = value.parse().map_err(|_| bad("iterations"))?,
                "guard_eps" => cfg.guard_eps = value.parse().map_err(|_| bad("guard_eps"))?,
                "min_brightness" => {
                    cfg.min_brightness = value.parse().map_err(|_| bad("min_brightness"))?
                }
                "max_slope" => cfg.max_slope = value.parse().map_err(|_| bad("max_slope"))?,
                "alpha" => cfg.alpha = value.parse().map_err(|_| bad("alpha"))?,
                "alpha_from_depth" => {
                    cfg.alpha_from_depth = if value == "none" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad("alpha_from_depth"))?)
                    }
                }
                "radius_mm" => cfg.radius_mm = value.parse().map_err(|_| bad("radius_mm"))?,
                "pixel_pitch" => {
                    cfg.pixel_pitch = if value == "auto" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad("pixel_pitch"))?)
                    }
                }
                "mask" => {
                    cfg.mask = if value == "auto" {
                        None
                    } else {
                        let parts: Vec<f64> = value
                            .split(',')
                            .map(|p| p.trim().parse().map_err(|_| bad("mask")))
                            .collect::<Result<_>>()?;
                        if parts.len() != 3 {
                            return Err(bad("mask"));
                        }
                        Some((parts[0], parts[1], parts[2]))
                    }
                }
                "smooth_radius" => {
                    cfg.smooth_radius = value.parse().map_err(|_| bad("smooth_radius"))?
                }
                other => {
                    return Err(Error::Format(format!(
                        "line {}: unknown key {other:?}",
                        ln + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.0.is_multiple_of(2) || self.window.1.is_multiple_of(2) || self.window.0 == 0 {
            return Err(Error::InvalidWindow(format!(
                "window {}x{} must have odd dimensions",
                self.window.0, self.window.1
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidWindow("stride must be >= 1".into()));
        }
        if !self.radius_mm.is_finite() || self.radius_mm <= 0.0 {
            return Err(Error::Domain("radius_mm must be > 0".into()));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::Domain("alpha must be > 0".into()));
        }
        if !self.smooth_radius.is_finite() || self.smooth_radius <= 0.0 {
            return Err(Error::Domain("smooth_radius must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_text();
        let back = PipelineConfig::from_text(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn custom_round_trip() {
        let cfg = PipelineConfig {
            window: (9, 11),
            stride: 3,
            threshold: Threshold::Fixed(130),
            tvd_weight: 2.5,
            alpha_from_depth: Some(2.0),
            pixel_pitch: Some(0.18),
            mask: Some((320.0, 240.0, 200.0)),
            ..Default::default()
        };
        let back = PipelineConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_keep_defaults_and_comments_parse() {
        let cfg = PipelineConfig::from_text("# tuning\nalpha = 12.5\nwindow = 15\n").unwrap();
        assert_eq!(cfg.alpha, 12.5);
        assert_eq!(cfg.window, (15, 15));
        assert_eq!(cfg.stride, 1);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(PipelineConfig::from_text("frobnicate = 3\n").is_err());
        assert!(PipelineConfig::from_text("stride = fast\n").is_err());
        assert!(PipelineConfig::from_text("window = 4\n").is_err());
    }
}
