//! Deterministic image transformations: circular masking, binarization,
//! white-ratio window convolution and total-variation smoothing.
//!
//! Together these turn a raw marker/pin camera frame into a smoothed
//! greyscale field whose value tracks the local white/black area ratio.

use crate::error::{Error, Result};
use crate::field::{BinaryImage, CircularMask, GreyscaleField, RasterImage, ValueRange};

/// Binarization threshold selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// Pixel >= value maps to 1.
    Fixed(u8),
    /// Pick the threshold maximizing between-class variance of the histogram.
    Auto,
}

/// Zero out every pixel farther than `mask.radius` from the mask center.
///
/// Pixels inside the mask are passed through unchanged, so the operation is
/// idempotent.
pub fn apply_circular_mask(img: &RasterImage, mask: &CircularMask) -> Result<RasterImage> {
    if !mask.center_inside(img.width(), img.height()) {
        return Err(Error::InvalidMask(format!(
            "center ({}, {}) outside {}x{} image",
            mask.center_u,
            mask.center_v,
            img.width(),
            img.height()
        )));
    }
    let mut out = img.clone();
    for v in 0..img.height() {
        for u in 0..img.width() {
            if !mask.contains(u, v) {
                out.set(u, v, 0);
            }
        }
    }
    Ok(out)
}

/// Threshold an image into a 0/1 marker mask.
///
/// In auto mode the threshold maximizes the between-class variance of the
/// intensity histogram; a constant image has no split and yields all zeros.
pub fn binarize(img: &RasterImage, threshold: Threshold) -> BinaryImage {
    let t = match threshold {
        Threshold::Fixed(t) => Some(t),
        Threshold::Auto => otsu_threshold(img),
    };
    let data = match t {
        Some(t) => img.data().iter().map(|&p| u8::from(p >= t)).collect(),
        None => vec![0u8; img.data().len()],
    };
    BinaryImage::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Between-class-variance maximizing threshold, or `None` for a constant image.
///
/// Scans all 256 candidate thresholds `t` splitting pixels into `< t` and
/// `>= t`; the first maximum wins, which makes the choice deterministic.
pub fn otsu_threshold(img: &RasterImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &p in img.data() {
        hist[p as usize] += 1;
    }
    let total = img.data().len() as f64;
    let total_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();

    let mut best: Option<(u8, f64)> = None;
    let mut count_below = 0u64;
    let mut sum_below = 0.0f64;
    for t in 0..=255u16 {
        // classes: pixels < t and pixels >= t
        let w0 = count_below as f64 / total;
        let w1 = 1.0 - w0;
        if w0 > 0.0 && w1 > 0.0 {
            let mu0 = sum_below / count_below as f64;
            let mu1 = (total_sum - sum_below) / (total - count_below as f64);
            let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
            if best.is_none_or(|(_, b)| var > b) {
                best = Some((t as u8, var));
            }
        }
        let c = hist[t as usize];
        count_below += c;
        sum_below += t as f64 * c as f64;
    }
    best.map(|(t, _)| t)
}

/// Summed-area table with one extra zero row/column, so any window sum is
/// four lookups.
struct IntegralTable {
    width: usize,
    data: Vec<u64>,
}

impl IntegralTable {
    fn build(img: &BinaryImage) -> Self {
        let w = img.width() + 1;
        let h = img.height() + 1;
        let mut data = vec![0u64; w * h];
        for v in 1..h {
            let mut row_sum = 0u64;
            for u in 1..w {
                row_sum += img.get(u - 1, v - 1) as u64;
                data[v * w + u] = data[(v - 1) * w + u] + row_sum;
            }
        }
        Self { width: w, data }
    }

    /// Sum over the inclusive pixel rectangle [u0, u1] x [v0, v1].
    #[inline]
    fn sum(&self, u0: usize, v0: usize, u1: usize, v1: usize) -> u64 {
        let w = self.width;
        self.data[(v1 + 1) * w + (u1 + 1)] + self.data[v0 * w + u0]
            - self.data[v0 * w + (u1 + 1)]
            - self.data[(v1 + 1) * w + u0]
    }
}

/// White-ratio convolution: each output sample is `255 * s_w / s_t` where
/// `s_w` counts white pixels and `s_t` all pixels of the m x n window
/// centered there, with the window shrunk at the image border.
///
/// With stride 1 the output matches the source dimensions; with stride k the
/// ratios are computed on a k-subsampled grid and bilinearly upsampled back.
pub fn ratio_convolution(
    b: &BinaryImage,
    window: (usize, usize),
    stride: usize,
) -> Result<GreyscaleField> {
    let (m, n) = window;
    if m == 0 || n == 0 || m % 2 == 0 || n % 2 == 0 {
        return Err(Error::InvalidWindow(format!(
            "window {m}x{n} must have odd dimensions >= 1"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidWindow("stride must be >= 1".into()));
    }

    let table = IntegralTable::build(b);
    let (w, h) = (b.width(), b.height());
    let half_u = m / 2;
    let half_v = n / 2;
    let ratio_at = |u: usize, v: usize| -> f64 {
        let u0 = u.saturating_sub(half_u);
        let v0 = v.saturating_sub(half_v);
        let u1 = (u + half_u).min(w - 1);
        let v1 = (v + half_v).min(h - 1);
        let s_w = table.sum(u0, v0, u1, v1);
        let s_t = ((u1 - u0 + 1) * (v1 - v0 + 1)) as u64;
        255.0 * s_w as f64 / s_t as f64
    };

    if stride == 1 {
        let mut data = Vec::with_capacity(w * h);
        for v in 0..h {
            for u in 0..w {
                data.push(ratio_at(u, v));
            }
        }
        return GreyscaleField::new(w, h, ValueRange::Raw255, data);
    }

    // sample on the strided grid, then bilinearly upsample back
    let su: Vec<usize> = (0..w).step_by(stride).collect();
    let sv: Vec<usize> = (0..h).step_by(stride).collect();
    let mut grid = vec![0.0f64; su.len() * sv.len()];
    for (j, &v) in sv.iter().enumerate() {
        for (i, &u) in su.iter().enumerate() {
            grid[j * su.len() + i] = ratio_at(u, v);
        }
    }
    let sample = |x: f64, samples: &[usize]| -> (usize, usize, f64) {
        // fractional index into the sample grid, clamped to its extent
        let pos = x / stride as f64;
        let last = samples.len() - 1;
        if pos >= last as f64 {
            (last, last, 0.0)
        } else {
            let i = pos.floor() as usize;
            (i, i + 1, pos - i as f64)
        }
    };
    let mut data = Vec::with_capacity(w * h);
    for v in 0..h {
        let (j0, j1, fv) = sample(v as f64, &sv);
        for u in 0..w {
            let (i0, i1, fu) = sample(u as f64, &su);
            let g00 = grid[j0 * su.len() + i0];
            let g01 = grid[j0 * su.len() + i1];
            let g10 = grid[j1 * su.len() + i0];
            let g11 = grid[j1 * su.len() + i1];
            let top = g00 + (g01 - g00) * fu;
            let bottom = g10 + (g11 - g10) * fu;
            data.push(top + (bottom - top) * fv);
        }
    }
    GreyscaleField::new(w, h, ValueRange::Raw255, data)
}

/// The objective `tvd_denoise` minimizes: sum of squared deviation from
/// `reference` plus `weight` times anisotropic total variation.
pub fn tv_objective(x: &GreyscaleField, reference: &GreyscaleField, weight: f64) -> f64 {
    let (w, h) = (x.width(), x.height());
    let mut quad = 0.0;
    for (a, b) in x.data().iter().zip(reference.data()) {
        let d = a - b;
        quad += d * d;
    }
    let mut tv = 0.0;
    for v in 0..h {
        for u in 0..w {
            if u + 1 < w {
                tv += (x.get(u + 1, v) - x.get(u, v)).abs();
            }
            if v + 1 < h {
                tv += (x.get(u, v + 1) - x.get(u, v)).abs();
            }
        }
    }
    quad + weight * tv
}

/// Total-variation denoising via a first-order primal-dual iteration with
/// anisotropic TV.
///
/// The result never has a larger TV-regularized objective than the input and
/// stays inside the input's value range. `weight == 0` returns the input.
pub fn tvd_denoise(g: &GreyscaleField, weight: f64, max_iters: usize) -> Result<GreyscaleField> {
    if !weight.is_finite() || weight < 0.0 {
        return Err(Error::Domain(format!("tvd weight {weight} must be >= 0")));
    }
    if max_iters == 0 {
        return Err(Error::Domain("tvd max_iters must be >= 1".into()));
    }
    if weight == 0.0 {
        return Ok(g.clone());
    }

    let (w, h) = (g.width(), g.height());
    let n = w * h;
    let data = g.data();
    let (in_lo, in_hi) = g.min_max();

    // Chambolle-Pock with step sizes tau = sigma = 1/sqrt(8) <= 1/||grad||.
    let tau = 1.0 / (8.0f64).sqrt();
    let sigma = tau;

    let mut x: Vec<f64> = data.to_vec();
    let mut x_bar = x.clone();
    let mut pu = vec![0.0f64; n]; // dual for horizontal differences
    let mut pv = vec![0.0f64; n]; // dual for vertical differences

    for _ in 0..max_iters {
        // dual ascent + projection onto |p| <= weight (anisotropic)
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                if u + 1 < w {
                    let grad = x_bar[i + 1] - x_bar[i];
                    pu[i] = (pu[i] + sigma * grad).clamp(-weight, weight);
                }
                if v + 1 < h {
                    let grad = x_bar[i + w] - x_bar[i];
                    pv[i] = (pv[i] + sigma * grad).clamp(-weight, weight);
                }
            }
        }
        // primal descent with exact prox of the quadratic data term
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                let mut div = 0.0;
                if u + 1 < w {
                    div += pu[i];
                }
                if u > 0 {
                    div -= pu[i - 1];
                }
                if v + 1 < h {
                    div += pv[i];
                }
                if v > 0 {
                    div -= pv[i - w];
                }
                let old = x[i];
                let candidate = (old + tau * div + 2.0 * tau * data[i]) / (1.0 + 2.0 * tau);
                x[i] = candidate;
                x_bar[i] = 2.0 * candidate - old;
            }
        }
    }

    // clamping to the input range never increases either objective term
    for xi in &mut x {
        *xi = xi.clamp(in_lo, in_hi);
    }

    let out = GreyscaleField::new(w, h, g.range(), x)?;
    if tv_objective(&out, g, weight) <= tv_objective(g, g, weight) {
        Ok(out)
    } else {
        Ok(g.clone())
    }
}

/// Estimate the sensor mask as the centroid of nonzero pixels and the 99th
/// percentile of their radii.
pub fn estimate_mask(img: &RasterImage) -> Result<CircularMask> {
    let mut sum_u = 0.0;
    let mut sum_v = 0.0;
    let mut count = 0usize;
    for v in 0..img.height() {
        for u in 0..img.width() {
            if img.get(u, v) > 0 {
                sum_u += u as f64;
                sum_v += v as f64;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidMask(
            "cannot estimate mask from an all-zero image".into(),
        ));
    }
    let cu = sum_u / count as f64;
    let cv = sum_v / count as f64;
    let mut radii = Vec::with_capacity(count);
    for v in 0..img.height() {
        for u in 0..img.width() {
            if img.get(u, v) > 0 {
                radii.push((u as f64 - cu).hypot(v as f64 - cv));
            }
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((radii.len() as f64 * 0.99).ceil() as usize).clamp(1, radii.len()) - 1;
    CircularMask::new(cu, cv, radii[idx].max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(w: usize, h: usize) -> BinaryImage {
        let data = (0..w * h).map(|i| ((i / w + i % w) % 2) as u8).collect();
        BinaryImage::new(w, h, data).unwrap()
    }

    /// Independent window counter used as the oracle for the integral table.
    fn brute_force_ratio(b: &BinaryImage, m: usize, n: usize, u: usize, v: usize) -> f64 {
        let mut s_w = 0u64;
        let mut s_t = 0u64;
        for dv in -(n as isize / 2)..=(n as isize / 2) {
            for du in -(m as isize / 2)..=(m as isize / 2) {
                let uu = u as isize + du;
                let vv = v as isize + dv;
                if uu >= 0 && vv >= 0 && (uu as usize) < b.width() && (vv as usize) < b.height() {
                    s_t += 1;
                    s_w += b.get(uu as usize, vv as usize) as u64;
                }
            }
        }
        255.0 * s_w as f64 / s_t as f64
    }

    #[test]
    fn mask_inside_unchanged_outside_zero() {
        let img = RasterImage::filled(9, 9, 200).unwrap();
        let mask = CircularMask::new(4.0, 4.0, 3.0).unwrap();
        let out = apply_circular_mask(&img, &mask).unwrap();
        assert_eq!(out.get(4, 4), 200);
        assert_eq!(out.get(0, 0), 0);
    }

    #[test]
    fn mask_covering_whole_image_is_identity() {
        let mut img = RasterImage::filled(6, 5, 0).unwrap();
        for v in 0..5 {
            for u in 0..6 {
                img.set(u, v, (u * 37 + v * 11) as u8);
            }
        }
        let mask = CircularMask::new(2.5, 2.0, 100.0).unwrap();
        assert_eq!(apply_circular_mask(&img, &mask).unwrap(), img);
    }

    #[test]
    fn mask_center_outside_errors() {
        let img = RasterImage::filled(4, 4, 1).unwrap();
        let mask = CircularMask::new(10.0, 1.0, 2.0).unwrap();
        assert!(matches!(
            apply_circular_mask(&img, &mask),
            Err(Error::InvalidMask(_))
        ));
    }

    #[test]
    fn mask_is_idempotent() {
        let mut img = RasterImage::filled(16, 16, 0).unwrap();
        for v in 0..16 {
            for u in 0..16 {
                img.set(u, v, ((u * v) % 251) as u8);
            }
        }
        let mask = CircularMask::new(7.3, 8.1, 5.0).unwrap();
        let once = apply_circular_mask(&img, &mask).unwrap();
        let twice = apply_circular_mask(&once, &mask).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn fixed_threshold_semantics() {
        let img = RasterImage::new(3, 1, vec![200, 100, 128]).unwrap();
        let b = binarize(&img, Threshold::Fixed(128));
        assert_eq!(b.data(), &[1, 0, 1]);
    }

    #[test]
    fn binarize_idempotent_through_raster() {
        let img = RasterImage::new(4, 1, vec![0, 90, 128, 255]).unwrap();
        let b1 = binarize(&img, Threshold::Fixed(100));
        let b2 = binarize(&b1.to_raster(), Threshold::Fixed(100));
        assert_eq!(b1, b2);
    }

    #[test]
    fn otsu_splits_bimodal_image() {
        // two modes at 40 and 210
        let mut data = vec![40u8; 600];
        data.extend(vec![210u8; 400]);
        for (i, d) in data.iter_mut().enumerate() {
            *d = d.wrapping_add((i % 7) as u8); // slight spread
        }
        let img = RasterImage::new(50, 20, data).unwrap();
        let t = otsu_threshold(&img).unwrap();
        assert!(t > 40 && t < 210, "threshold {t} not between the modes");

        // oracle: direct exhaustive scan computing class stats from pixels
        let mut best_t = 0u16;
        let mut best_var = -1.0;
        for cand in 0..=255u16 {
            let below: Vec<f64> = img
                .data()
                .iter()
                .filter(|&&p| (p as u16) < cand)
                .map(|&p| p as f64)
                .collect();
            let above: Vec<f64> = img
                .data()
                .iter()
                .filter(|&&p| (p as u16) >= cand)
                .map(|&p| p as f64)
                .collect();
            if below.is_empty() || above.is_empty() {
                continue;
            }
            let w0 = below.len() as f64 / img.data().len() as f64;
            let w1 = 1.0 - w0;
            let mu0 = below.iter().sum::<f64>() / below.len() as f64;
            let mu1 = above.iter().sum::<f64>() / above.len() as f64;
            let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
            if var > best_var {
                best_var = var;
                best_t = cand;
            }
        }
        assert_eq!(t as u16, best_t);
    }

    #[test]
    fn otsu_constant_image_is_all_zero() {
        let img = RasterImage::filled(8, 8, 77).unwrap();
        assert_eq!(otsu_threshold(&img), None);
        let b = binarize(&img, Threshold::Auto);
        assert!(b.data().iter().all(|&x| x == 0));
    }

    #[test]
    fn ratio_all_white_and_all_black() {
        let white = BinaryImage::new(8, 8, vec![1; 64]).unwrap();
        let g = ratio_convolution(&white, (3, 3), 1).unwrap();
        assert!(g.data().iter().all(|&x| x == 255.0));

        let black = BinaryImage::new(8, 8, vec![0; 64]).unwrap();
        let g = ratio_convolution(&black, (3, 3), 1).unwrap();
        assert!(g.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ratio_interior_window_counts() {
        // hand-built 8x8 patch; window centered at (3,3) holds 4 of 9 whites
        let mut data = vec![0u8; 64];
        for &(u, v) in &[(2usize, 2usize), (3, 2), (4, 3), (3, 4)] {
            data[v * 8 + u] = 1;
        }
        let b = BinaryImage::new(8, 8, data).unwrap();
        let g = ratio_convolution(&b, (3, 3), 1).unwrap();
        assert_eq!(g.get(3, 3), 255.0 * 4.0 / 9.0);
        assert_eq!(g.get(3, 3), brute_force_ratio(&b, 3, 3, 3, 3));
    }

    #[test]
    fn ratio_matches_brute_force_at_borders() {
        let b = checker(11, 7);
        for &(m, n) in &[(3usize, 3usize), (5, 3), (9, 5)] {
            let g = ratio_convolution(&b, (m, n), 1).unwrap();
            for v in 0..7 {
                for u in 0..11 {
                    assert_eq!(
                        g.get(u, v),
                        brute_force_ratio(&b, m, n, u, v),
                        "window {m}x{n} at ({u},{v})"
                    );
                }
            }
        }
    }

    #[test]
    fn ratio_rejects_even_window_and_zero_stride() {
        let b = checker(4, 4);
        assert!(matches!(
            ratio_convolution(&b, (4, 3), 1),
            Err(Error::InvalidWindow(_))
        ));
        assert!(matches!(
            ratio_convolution(&b, (3, 3), 0),
            Err(Error::InvalidWindow(_))
        ));
    }

    #[test]
    fn ratio_stride_keeps_dimensions_and_samples() {
        let b = checker(17, 13);
        let g = ratio_convolution(&b, (5, 5), 3).unwrap();
        assert_eq!((g.width(), g.height()), (17, 13));
        // on-grid samples are exact
        for v in (0..13).step_by(3) {
            for u in (0..17).step_by(3) {
                assert_eq!(g.get(u, v), brute_force_ratio(&b, 5, 5, u, v));
            }
        }
        // off-grid values stay within the raw range
        assert!(g.data().iter().all(|&x| (0.0..=255.0).contains(&x)));
    }

    #[test]
    fn tvd_constant_field_unchanged() {
        let g = GreyscaleField::new(8, 8, ValueRange::Raw255, vec![120.0; 64]).unwrap();
        let out = tvd_denoise(&g, 5.0, 50).unwrap();
        assert_eq!(out.data(), g.data());
    }

    #[test]
    fn tvd_zero_weight_is_identity() {
        let data: Vec<f64> = (0..64).map(|i| (i * 3 % 250) as f64).collect();
        let g = GreyscaleField::new(8, 8, ValueRange::Raw255, data).unwrap();
        let out = tvd_denoise(&g, 0.0, 50).unwrap();
        assert_eq!(out.data(), g.data());
    }

    #[test]
    fn tvd_step_edge_descends_and_flattens() {
        // two plateaus 50/200 with +-10 deterministic ripple
        let w = 24;
        let h = 12;
        let mut data = vec![0.0f64; w * h];
        for v in 0..h {
            for u in 0..w {
                let base = if u < w / 2 { 50.0 } else { 200.0 };
                let ripple = 10.0 * (((u * 7 + v * 13) % 5) as f64 - 2.0) / 2.0;
                data[v * w + u] = base + ripple;
            }
        }
        let g = GreyscaleField::new(w, h, ValueRange::Raw255, data).unwrap();
        let weight = 8.0;
        let out = tvd_denoise(&g, weight, 200).unwrap();
        assert!(tv_objective(&out, &g, weight) < tv_objective(&g, &g, weight));

        let plateau_var = |f: &GreyscaleField, range: std::ops::Range<usize>| {
            let vals: Vec<f64> = (0..h)
                .flat_map(|v| range.clone().map(move |u| (u, v)))
                .map(|(u, v)| f.get(u, v))
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / vals.len() as f64
        };
        // interiors, away from the edge and the border
        assert!(plateau_var(&out, 2..w / 2 - 2) < plateau_var(&g, 2..w / 2 - 2));
        assert!(plateau_var(&out, w / 2 + 2..w - 2) < plateau_var(&g, w / 2 + 2..w - 2));
    }

    #[test]
    fn tvd_output_within_input_range() {
        let data: Vec<f64> = (0..100).map(|i| 40.0 + ((i * 17) % 160) as f64).collect();
        let g = GreyscaleField::new(10, 10, ValueRange::Raw255, data).unwrap();
        let (lo, hi) = g.min_max();
        let out = tvd_denoise(&g, 25.0, 120).unwrap();
        let (olo, ohi) = out.min_max();
        assert!(olo >= lo && ohi <= hi);
    }

    #[test]
    fn estimate_mask_centroid_and_radius() {
        let mut img = RasterImage::filled(64, 64, 0).unwrap();
        for v in 0..64 {
            for u in 0..64 {
                let d = ((u as f64 - 30.0).powi(2) + (v as f64 - 33.0).powi(2)).sqrt();
                if d <= 20.0 {
                    img.set(u, v, 80);
                }
            }
        }
        let mask = estimate_mask(&img).unwrap();
        assert!((mask.center_u - 30.0).abs() < 0.5);
        assert!((mask.center_v - 33.0).abs() < 0.5);
        assert!((mask.radius - 20.0).abs() < 1.0);
    }

    #[test]
    fn estimate_mask_all_zero_errors() {
        let img = RasterImage::filled(8, 8, 0).unwrap();
        assert!(estimate_mask(&img).is_err());
    }
}
