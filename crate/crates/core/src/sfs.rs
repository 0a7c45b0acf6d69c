//! Height reconstruction from the smoothed greyscale field.
//!
//! The greyscale algebra (reference subtraction, normalization, shape
//! weighting) turns a frame into a normalized brightness map; the solver
//! then recovers a per-pixel deformation depth from the Lambertian
//! brightness equation under the fixed downward camera axis L = (0, 0, -1),
//! and the height field is lifted onto the hemisphere to produce a point
//! cloud in sensor coordinates.
//!
//! Under the downward axis the reflectance is R'(p, q) = 1/sqrt(p^2+q^2+1):
//! brightness depends only on the slope magnitude, so the per-pixel
//! brightness equation f(h) = g - R' = 0 fixes |grad h| but not its sign.
//! A first-order Newton step on f stalls wherever p = q = 0 (the derivative
//! (p+q)/(p^2+q^2+1)^(3/2) vanishes), which includes the all-zero start.
//! The solver therefore takes the exact root of the same per-pixel equation
//! with upwind neighbor selection, swept monotonically from a large initial
//! value with rotating sweep directions. Flat maximal brightness is an exact
//! fixed point: g = 1 means zero slope, and the field stays identically
//! zero.

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::field::{CircularMask, GreyscaleField, ValueRange};

/// Sphere radius, pixel pitch, mask and height scale of one sensor.
///
/// The camera axis is fixed at (p_c, q_c, -1) with p_c = q_c = 0: the
/// camera looks straight along the sphere axis.
#[derive(Debug, Clone)]
pub struct SensorGeometry {
    pub radius_mm: f64,
    pub pixel_pitch_mm: f64,
    pub mask: CircularMask,
    pub alpha: f64,
}

impl SensorGeometry {
    /// `pixel_pitch_mm` defaults to `radius_mm / mask.radius`, i.e. the mask
    /// edge sits on the hemisphere equator.
    pub fn new(
        radius_mm: f64,
        mask: CircularMask,
        alpha: f64,
        pixel_pitch_mm: Option<f64>,
    ) -> Result<Self> {
        if !radius_mm.is_finite() || radius_mm <= 0.0 {
            return Err(Error::Domain(format!("radius {radius_mm} must be > 0")));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Domain(format!("alpha {alpha} must be > 0")));
        }
        let pitch = pixel_pitch_mm.unwrap_or(radius_mm / mask.radius);
        if !pitch.is_finite() || pitch <= 0.0 {
            return Err(Error::Domain(format!("pixel pitch {pitch} must be > 0")));
        }
        Ok(Self {
            radius_mm,
            pixel_pitch_mm: pitch,
            mask,
            alpha,
        })
    }
}

/// Per-pixel deformation depth, measured inward along the ray to the sphere
/// center. Units are millimetres after `scale_height`, solver units before.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl HeightField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("height field dimensions must be >= 1".into()));
        }
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} samples", width * height),
                format!("{}", data.len()),
            ));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("height field contains non-finite values".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
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

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x))
    }
}

/// Backward-difference gradients p = dh/du, q = dh/dv with zero padding at
/// the first row and column.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn backward_gradients(h: &HeightField) -> GradientField {
    let (w, hh) = (h.width(), h.height());
    let mut p = vec![0.0; w * hh];
    let mut q = vec![0.0; w * hh];
    for v in 0..hh {
        for u in 0..w {
            let i = v * w + u;
            let left = if u > 0 { h.get(u - 1, v) } else { 0.0 };
            let up = if v > 0 { h.get(u, v - 1) } else { 0.0 };
            p[i] = h.get(u, v) - left;
            q[i] = h.get(u, v) - up;
        }
    }
    GradientField { width: w, height: hh, p, q }
}

/// Parallel-illumination Lambertian reflector; only the forward-render
/// oracle uses it.
#[derive(Debug, Clone)]
pub struct LambertianModel {
    pub intensity: f64,
    pub reflectance: f64,
    /// Illumination direction (p_c, q_c, -1).
    pub light: [f64; 3],
}

impl Default for LambertianModel {
    fn default() -> Self {
        Self {
            intensity: 1.0,
            reflectance: 1.0,
            light: [0.0, 0.0, -1.0],
        }
    }
}

impl LambertianModel {
    pub fn new(intensity: f64, reflectance: f64, light: [f64; 3]) -> Result<Self> {
        let product = intensity * reflectance;
        if !product.is_finite() || product <= 0.0 {
            return Err(Error::Domain(
                "intensity * reflectance must be positive".into(),
            ));
        }
        if light[2] != -1.0 {
            return Err(Error::Domain(
                "light direction must have third component -1".into(),
            ));
        }
        Ok(Self { intensity, reflectance, light })
    }
}

/// Solver settings. `derivative_guard_eps` doubles as the flatness guard:
/// brightness within it of 1 is treated as exactly flat.
#[derive(Debug, Clone)]
pub struct ReconstructionConfig {
    pub iterations: usize,
    pub derivative_guard_eps: f64,
    pub clamp_negative_gd: bool,
    /// Brightness floor; darker pixels are clamped before slope inversion.
    pub min_brightness: f64,
    /// Cap on the recovered slope magnitude per pixel step.
    pub max_slope: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            iterations: 25,
            derivative_guard_eps: 1e-6,
            clamp_negative_gd: true,
            min_brightness: 0.05,
            max_slope: 1.0,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Domain("iterations must be >= 1".into()));
        }
        if !self.derivative_guard_eps.is_finite() || self.derivative_guard_eps <= 0.0 {
            return Err(Error::Domain("derivative_guard_eps must be > 0".into()));
        }
        if !self.min_brightness.is_finite() || self.min_brightness <= 0.0 || self.min_brightness >= 1.0 {
            return Err(Error::Domain("min_brightness must lie in (0, 1)".into()));
        }
        if !self.max_slope.is_finite() || self.max_slope <= 0.0 {
            return Err(Error::Domain("max_slope must be > 0".into()));
        }
        Ok(())
    }
}

/// Elementwise `g - g0`; with `clamp` on, negative differences become 0.
pub fn delta_greyscale(
    g: &GreyscaleField,
    g0: &GreyscaleField,
    clamp: bool,
) -> Result<GreyscaleField> {
    if !g.same_shape(g0) {
        return Err(Error::shape(
            format!("{}x{}", g.width(), g.height()),
            format!("{}x{}", g0.width(), g0.height()),
        ));
    }
    let data: Vec<f64> = g
        .data()
        .iter()
        .zip(g0.data())
        .map(|(&a, &b)| {
            let d = a - b;
            if clamp && d < 0.0 {
                0.0
            } else {
                d
            }
        })
        .collect();
    let range = if clamp { ValueRange::Raw255 } else { ValueRange::Signed255 };
    GreyscaleField::new(g.width(), g.height(), range, data)
}

/// Elementwise product of a [0,1] weight field with the reference greyscale.
pub fn shape_weighted_greyscale(
    g_dn: &GreyscaleField,
    g0: &GreyscaleField,
) -> Result<GreyscaleField> {
    if !g_dn.same_shape(g0) {
        return Err(Error::shape(
            format!("{}x{}", g_dn.width(), g_dn.height()),
            format!("{}x{}", g0.width(), g0.height()),
        ));
    }
    if g_dn.data().iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain("weight field must lie in [0, 1]".into()));
    }
    let data: Vec<f64> = g_dn
        .data()
        .iter()
        .zip(g0.data())
        .map(|(&w, &g)| w * g)
        .collect();
    GreyscaleField::new(g_dn.width(), g_dn.height(), g0.range(), data)
}

/// Min-max rescale to [0, 1]; a constant field maps to all zeros.
pub fn normalize(g: &GreyscaleField) -> GreyscaleField {
    let (lo, hi) = g.min_max();
    let span = hi - lo;
    let data: Vec<f64> = if span > 0.0 {
        g.data().iter().map(|&x| ((x - lo) / span).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; g.data().len()]
    };
    GreyscaleField::new(g.width(), g.height(), ValueRange::Unit, data)
        .expect("normalized values lie in [0,1]")
}

/// Complement of a normalized field: x -> 1 - x.
///
/// The white/black-ratio greyscale is darkest at rest while the reflectance
/// model is brightest on flat ground, so the reconstruction pipeline feeds
/// the solver this complemented map (the linear greyscale generation
/// constant is free to be negative).
pub fn complement(g: &GreyscaleField) -> Result<GreyscaleField> {
    if g.data().iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain("complement expects values in [0, 1]".into()));
    }
    let data: Vec<f64> = g.data().iter().map(|&x| 1.0 - x).collect();
    GreyscaleField::new(g.width(), g.height(), ValueRange::Unit, data)
}

/// Render the brightness of a height field under the Lambertian model,
/// using the solver's backward-difference gradients.
pub fn lambertian_render(h: &HeightField, model: &LambertianModel) -> GreyscaleField {
    let grads = backward_gradients(h);
    let (pc, qc) = (model.light[0], model.light[1]);
    let light_norm = (pc * pc + qc * qc + 1.0).sqrt();
    let scale = model.intensity * model.reflectance;
    let data: Vec<f64> = grads
        .p
        .iter()
        .zip(&grads.q)
        .map(|(&p, &q)| {
            let n = (p * p + q * q + 1.0).sqrt();
            scale * (p * pc + q * qc + 1.0) / (n * light_norm)
        })
        .collect();
    let unit = data.iter().all(|&x| (0.0..=1.0).contains(&x));
    let range = if unit { ValueRange::Unit } else { ValueRange::Signed255 };
    GreyscaleField::new(h.width(), h.height(), range, data)
        .expect("render values bounded by intensity * reflectance")
}

const UNSOLVED: f64 = 1e30;

/// Recover an unscaled height field from a normalized brightness map.
///
/// Each update solves the per-pixel brightness equation
/// `g(u,v) = 1/sqrt(p^2 + q^2 + 1)` exactly for h(u,v), taking the smaller
/// (upwind) neighbor along each axis and keeping the smaller of old and new
/// values, with the sweep direction rotating every iteration. The monotone
/// sweeps converge in a handful of iterations and are stationary afterwards;
/// a brightness of exactly 1 pins the pixel at zero height.
pub fn hybrid_sfs(g_hn: &GreyscaleField, cfg: &ReconstructionConfig) -> Result<HeightField> {
    cfg.validate()?;
    if g_hn.data().iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain(
            "solver input must be normalized to [0, 1]".into(),
        ));
    }
    let (w, h) = (g_hn.width(), g_hn.height());

    // target slope magnitude per pixel
    let slope: Vec<f64> = g_hn
        .data()
        .iter()
        .map(|&g| {
            if g >= 1.0 - cfg.derivative_guard_eps {
                0.0
            } else {
                let gc = g.max(cfg.min_brightness);
                (1.0 / (gc * gc) - 1.0).sqrt().min(cfg.max_slope)
            }
        })
        .collect();

    let mut field = vec![UNSOLVED; w * h];
    for it in 0..cfg.iterations {
        let (rev_v, rev_u) = match it % 4 {
            0 => (false, false),
            1 => (false, true),
            2 => (true, false),
            _ => (true, true),
        };
        for vi in 0..h {
            let v = if rev_v { h - 1 - vi } else { vi };
            for ui in 0..w {
                let u = if rev_u { w - 1 - ui } else { ui };
                let i = v * w + u;
                let left = if u > 0 { field[i - 1] } else { 0.0 };
                let right = if u + 1 < w { field[i + 1] } else { 0.0 };
                let up = if v > 0 { field[i - w] } else { 0.0 };
                let down = if v + 1 < h { field[i + w] } else { 0.0 };
                let a = left.min(right);
                let b = up.min(down);
                let s = slope[i];
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let candidate = if lo >= UNSOLVED {
                    UNSOLVED
                } else if hi >= UNSOLVED || s <= hi - lo {
                    // one-sided: only the lower neighbor constrains the root
                    lo + s
                } else {
                    // both neighbors constrain: root of (h-a)^2 + (h-b)^2 = s^2
                    0.5 * (a + b + (2.0 * s * s - (a - b) * (a - b)).sqrt())
                };
                if candidate < field[i] {
                    field[i] = candidate;
                }
            }
        }
    }
    for x in &mut field {
        if !x.is_finite() || *x >= UNSOLVED {
            *x = 0.0;
        }
    }
    HeightField::new(w, h, field)
}

/// Multiply heights by the sensor scale factor and clip to [0, radius].
pub fn scale_height(h: &HeightField, geom: &SensorGeometry) -> HeightField {
    let data: Vec<f64> = h
        .data()
        .iter()
        .map(|&x| (geom.alpha * x).clamp(0.0, geom.radius_mm))
        .collect();
    HeightField::new(h.width(), h.height(), data).expect("clipped values are finite")
}

/// Point cloud lifted from a height field, with per-point depths and the
/// number of pixels whose deformed radius could not reach their lateral
/// offset.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub cloud: PointCloud,
    pub depths: Vec<f64>,
    pub skipped: usize,
}

/// Map every in-mask pixel of a scaled height field onto the deformed
/// hemisphere: (x, y) from the pixel pitch, z so the point sits at distance
/// r - h from the sphere center.
pub fn lift_to_hemisphere(h: &HeightField, geom: &SensorGeometry) -> Lifted {
    let mut points = Vec::new();
    let mut depths = Vec::new();
    let mut skipped = 0usize;
    let r = geom.radius_mm;
    for v in 0..h.height() {
        for u in 0..h.width() {
            if !geom.mask.contains(u, v) {
                continue;
            }
            let x = geom.pixel_pitch_mm * (u as f64 - geom.mask.center_u);
            let y = geom.pixel_pitch_mm * (v as f64 - geom.mask.center_v);
            let depth = h.get(u, v);
            let rr = (r - depth) * (r - depth);
            let rho2 = x * x + y * y;
            if rr >= rho2 {
                points.push(Point3::new(x, y, (rr - rho2).sqrt()));
                depths.push(depth);
            } else {
                skipped += 1;
            }
        }
    }
    Lifted {
        cloud: PointCloud::new(points, "sensor"),
        depths,
        skipped,
    }
}

/// Intensity-weighted centroid of the top height band (values within
/// `band_fraction` of the maximum); `None` for an all-zero field.
pub fn peak_centroid(h: &HeightField, band_fraction: f64) -> Option<(f64, f64)> {
    let max = h.max_value();
    if max <= 0.0 {
        return None;
    }
    let cut = band_fraction * max;
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut sw = 0.0;
    for v in 0..h.height() {
        for u in 0..h.width() {
            let x = h.get(u, v);
            if x >= cut {
                su += u as f64 * x;
                sv += v as f64 * x;
                sw += x;
            }
        }
    }
    Some((su / sw, sv / sw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_field(w: usize, h: usize, data: Vec<f64>) -> GreyscaleField {
        GreyscaleField::new(w, h, ValueRange::Unit, data).unwrap()
    }

    fn raw_field(w: usize, h: usize, data: Vec<f64>) -> GreyscaleField {
        GreyscaleField::new(w, h, ValueRange::Raw255, data).unwrap()
    }

    fn gaussian_bump(w: usize, h: usize, cx: f64, cy: f64, amp: f64, sigma: f64) -> HeightField {
        let mut f = HeightField::zeros(w, h);
        for v in 0..h {
            for u in 0..w {
                let d2 = (u as f64 - cx).powi(2) + (v as f64 - cy).powi(2);
                f.set(u, v, amp * (-d2 / (2.0 * sigma * sigma)).exp());
            }
        }
        f
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            num += (x - ma) * (y - mb);
            da += (x - ma) * (x - ma);
            db += (y - mb) * (y - mb);
        }
        num / (da * db).sqrt()
    }

    #[test]
    fn delta_identity_and_zero_reference() {
        let g = raw_field(2, 2, vec![10.0, 20.0, 30.0, 40.0]);
        let zero = raw_field(2, 2, vec![0.0; 4]);
        let d = delta_greyscale(&g, &g, true).unwrap();
        assert!(d.data().iter().all(|&x| x == 0.0));
        let d = delta_greyscale(&g, &zero, true).unwrap();
        assert_eq!(d.data(), g.data());
    }

    #[test]
    fn delta_clamps_negatives() {
        let g = raw_field(1, 1, vec![10.0]);
        let g0 = raw_field(1, 1, vec![50.0]);
        assert_eq!(delta_greyscale(&g, &g0, true).unwrap().data(), &[0.0]);
        assert_eq!(delta_greyscale(&g, &g0, false).unwrap().data(), &[-40.0]);
    }

    #[test]
    fn delta_shape_mismatch() {
        let g = raw_field(2, 1, vec![1.0, 2.0]);
        let g0 = raw_field(1, 2, vec![1.0, 2.0]);
        assert!(delta_greyscale(&g, &g0, true).is_err());
    }

    #[test]
    fn shape_weighting_examples() {
        let g0 = raw_field(1, 3, vec![100.0, 100.0, 100.0]);
        let zero = unit_field(1, 3, vec![0.0; 3]);
        assert!(shape_weighted_greyscale(&zero, &g0)
            .unwrap()
            .data()
            .iter()
            .all(|&x| x == 0.0));
        let one = unit_field(1, 3, vec![1.0; 3]);
        assert_eq!(shape_weighted_greyscale(&one, &g0).unwrap().data(), g0.data());
        let half = unit_field(1, 3, vec![0.5; 3]);
        assert_eq!(shape_weighted_greyscale(&half, &g0).unwrap().data(), &[50.0; 3]);
    }

    #[test]
    fn normalize_rescales_and_handles_constant() {
        let g = raw_field(1, 3, vec![10.0, 60.0, 110.0]);
        let n = normalize(&g);
        assert_eq!(n.data(), &[0.0, 0.5, 1.0]);

        let c = raw_field(1, 3, vec![42.0; 3]);
        assert!(normalize(&c).data().iter().all(|&x| x == 0.0));

        let already = unit_field(1, 3, vec![0.0, 0.25, 1.0]);
        assert_eq!(normalize(&already).data(), already.data());
    }

    #[test]
    fn render_flat_is_one_and_plane_is_cosine() {
        let flat = HeightField::zeros(4, 4);
        let r = lambertian_render(&flat, &LambertianModel::default());
        assert!(r.data().iter().all(|&x| x == 1.0));

        // plane h = u has p = 1, q = 0 away from the padded first column
        let mut plane = HeightField::zeros(6, 4);
        for v in 0..4 {
            for u in 0..6 {
                plane.set(u, v, u as f64);
            }
        }
        let r = lambertian_render(&plane, &LambertianModel::default());
        let expected = 1.0 / 2.0f64.sqrt();
        assert!((r.get(3, 2) - expected).abs() < 1e-12);
    }

    #[test]
    fn render_matches_explicit_loop_oracle() {
        let bump = gaussian_bump(24, 20, 11.3, 9.2, 4.0, 5.0);
        let r = lambertian_render(&bump, &LambertianModel::default());
        for v in 0..20 {
            for u in 0..24 {
                let left = if u > 0 { bump.get(u - 1, v) } else { 0.0 };
                let up = if v > 0 { bump.get(u, v - 1) } else { 0.0 };
                let p = bump.get(u, v) - left;
                let q = bump.get(u, v) - up;
                let expect = 1.0 / (p * p + q * q + 1.0).sqrt();
                assert!((r.get(u, v) - expect).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn render_values_in_unit_interval_max_iff_flat() {
        let bump = gaussian_bump(16, 16, 8.0, 8.0, 3.0, 3.0);
        let r = lambertian_render(&bump, &LambertianModel::default());
        let grads = backward_gradients(&bump);
        for i in 0..r.data().len() {
            let x = r.data()[i];
            assert!(x > 0.0 && x <= 1.0);
            let flat = grads.p[i] == 0.0 && grads.q[i] == 0.0;
            assert_eq!(x == 1.0, flat);
        }
    }

    #[test]
    fn sfs_flat_brightness_is_exact_fixed_point() {
        let ones = unit_field(16, 12, vec![1.0; 192]);
        for iters in [1, 5, 25] {
            let cfg = ReconstructionConfig {
                iterations: iters,
                ..Default::default()
            };
            let h = hybrid_sfs(&ones, &cfg).unwrap();
            assert!(h.data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn sfs_rejects_non_normalized_input() {
        let bad = GreyscaleField::new(2, 1, ValueRange::Raw255, vec![0.5, 2.0]).unwrap();
        assert!(matches!(
            hybrid_sfs(&bad, &ReconstructionConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sfs_default_iteration_count_is_25() {
        assert_eq!(ReconstructionConfig::default().iterations, 25);
    }

    #[test]
    fn sfs_round_trip_recovers_gaussian_bump() {
        let truth = gaussian_bump(96, 96, 47.6, 48.9, 8.0, 9.0);
        let g = lambertian_render(&truth, &LambertianModel::default());
        let rec = hybrid_sfs(&g, &ReconstructionConfig::default()).unwrap();
        let corr = pearson(rec.data(), truth.data());
        assert!(corr > 0.9, "correlation {corr}");
        let (au, av) = peak_centroid(&rec, 0.9).unwrap();
        let err = (au - 47.6).hypot(av - 48.9);
        assert!(err <= 2.0, "apex error {err}");
    }

    #[test]
    fn sfs_radially_symmetric_apex_within_two_pixels() {
        let truth = gaussian_bump(80, 80, 40.0, 40.0, 6.0, 7.0);
        let g = lambertian_render(&truth, &LambertianModel::default());
        let rec = hybrid_sfs(&g, &ReconstructionConfig::default()).unwrap();
        let (au, av) = peak_centroid(&rec, 0.9).unwrap();
        assert!((au - 40.0).hypot(av - 40.0) <= 2.0);
    }

    #[test]
    fn sfs_rotation_consistency_on_symmetric_input() {
        // recovering a centered symmetric bump, then rotating the input by
        // 90 degrees, recovers the rotated field up to sweep asymmetry
        let truth = gaussian_bump(64, 64, 32.0, 32.0, 5.0, 6.0);
        let g = lambertian_render(&truth, &LambertianModel::default());
        let rec = hybrid_sfs(&g, &ReconstructionConfig::default()).unwrap();

        let mut rotated = GreyscaleField::zeros(64, 64, ValueRange::Unit);
        for v in 0..64 {
            for u in 0..64 {
                rotated.set(63 - v, u, g.get(u, v));
            }
        }
        let rec_rot = hybrid_sfs(&rotated, &ReconstructionConfig::default()).unwrap();
        let mut back = HeightField::zeros(64, 64);
        for v in 0..64 {
            for u in 0..64 {
                back.set(u, v, rec_rot.get(63 - v, u));
            }
        }
        let corr = pearson(rec.data(), back.data());
        assert!(corr > 0.95, "rotation consistency correlation {corr}");
    }

    #[test]
    fn scale_height_applies_alpha_and_clips() {
        let mask = CircularMask::new(2.0, 2.0, 2.0).unwrap();
        let geom = SensorGeometry::new(20.0, mask, 15.0, None).unwrap();
        let h = HeightField::new(1, 3, vec![0.1, 0.0, 5.0]).unwrap();
        let s = scale_height(&h, &geom);
        assert!((s.data()[0] - 1.5).abs() < 1e-12);
        assert_eq!(s.data()[1], 0.0);
        assert_eq!(s.data()[2], 20.0); // 75 clipped to radius

        let geom1 = SensorGeometry::new(20.0, mask, 1.0, None).unwrap();
        let s1 = scale_height(&h, &geom1);
        assert_eq!(s1.data(), &[0.1, 0.0, 5.0]);
    }

    #[test]
    fn lift_apex_and_known_point() {
        // r = 20, h = 0 at the apex pixel: z = 20
        let mask = CircularMask::new(10.0, 10.0, 10.0).unwrap();
        let geom = SensorGeometry::new(20.0, mask, 1.0, Some(2.0)).unwrap();
        let h = HeightField::zeros(21, 21);
        let lifted = lift_to_hemisphere(&h, &geom);
        let apex = lifted
            .cloud
            .points()
            .iter()
            .find(|p| p.x == 0.0 && p.y == 0.0)
            .unwrap();
        assert!((apex.z - 20.0).abs() < 1e-12);

        // r = 20, h = 2, x = 6, y = 0: z = sqrt(18^2 - 36) = sqrt(288)
        let mut h2 = HeightField::zeros(21, 21);
        for v in 0..21 {
            for u in 0..21 {
                h2.set(u, v, 2.0);
            }
        }
        let lifted2 = lift_to_hemisphere(&h2, &geom);
        let p = lifted2
            .cloud
            .points()
            .iter()
            .find(|p| p.x == 6.0 && p.y == 0.0)
            .unwrap();
        assert!((p.z - 288.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lift_zero_deformation_lies_on_sphere() {
        let mask = CircularMask::new(16.0, 16.0, 14.0).unwrap();
        let geom = SensorGeometry::new(25.0, mask, 1.0, None).unwrap();
        let h = HeightField::zeros(33, 33);
        let lifted = lift_to_hemisphere(&h, &geom);
        assert_eq!(lifted.skipped, 0);
        for p in lifted.cloud.points() {
            let norm = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
            assert!((norm - 25.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lift_points_satisfy_sphere_equation() {
        let mask = CircularMask::new(12.0, 12.0, 11.0).unwrap();
        let geom = SensorGeometry::new(18.0, mask, 1.0, None).unwrap();
        let mut h = HeightField::zeros(25, 25);
        for v in 0..25 {
            for u in 0..25 {
                h.set(u, v, ((u * 3 + v * 5) % 40) as f64 / 10.0);
            }
        }
        let lifted = lift_to_hemisphere(&h, &geom);
        assert!(!lifted.cloud.points().is_empty());
        for (p, &d) in lifted.cloud.points().iter().zip(&lifted.depths) {
            let lhs = p.x * p.x + p.y * p.y + p.z * p.z;
            let rhs = (18.0 - d) * (18.0 - d);
            assert!((lhs - rhs).abs() / rhs.max(1.0) < 1e-9);
        }
    }

    #[test]
    fn lift_skips_out_of_domain_pixels() {
        // deep deformation near the rim: (r-h)^2 < x^2+y^2 for far pixels
        let mask = CircularMask::new(10.0, 10.0, 10.0).unwrap();
        let geom = SensorGeometry::new(20.0, mask, 1.0, None).unwrap();
        let mut h = HeightField::zeros(21, 21);
        for v in 0..21 {
            for u in 0..21 {
                h.set(u, v, 15.0);
            }
        }
        let lifted = lift_to_hemisphere(&h, &geom);
        assert!(lifted.skipped > 0);
        assert_eq!(
            lifted.cloud.points().len() + lifted.skipped,
            (0..21 * 21)
                .filter(|i| geom.mask.contains(i % 21, i / 21))
                .count()
        );
    }
}
