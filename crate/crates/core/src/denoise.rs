//! Non-local means filtering.
//!
//! Used for the initial denoising of the visible image and for splitting planes
//! into base and detail layers. Each output pixel is a weighted mean of the
//! center pixels of every candidate in the search window, with weights
//!
//! ```text
//! w = exp(-max(d2 - 2 sigma^2, 0) / h^2)
//! ```
//!
//! where `d2` is the mean squared difference between the two patches (replicate
//! padding at the borders). The pixel itself always gets weight 1, so as
//! `h -> 0` with `sigma = 0` the filter tends to the identity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::raster::{ColorImage, Plane};

/// Lower bound applied to an automatically chosen `h`.
pub const MIN_AUTO_H: f64 = 0.02;
/// `h = AUTO_H_FACTOR * sigma_est` when `h` is left automatic.
pub const AUTO_H_FACTOR: f64 = 0.75;

const MAD_TO_SIGMA: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NlmParams {
    /// Patch side is `2 * patch_radius + 1`.
    pub patch_radius: usize,
    /// Search window side is `2 * search_radius + 1`.
    pub search_radius: usize,
    /// Filtering strength in sample units; `None` derives it from the
    /// estimated noise level.
    pub h: Option<f64>,
    /// Noise level subtracted from patch distances. `None` means the estimate
    /// when `h` is automatic and zero when `h` is given.
    pub sigma: Option<f64>,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            patch_radius: 3,
            search_radius: 10,
            h: None,
            sigma: None,
        }
    }
}

impl NlmParams {
    pub fn with_h(patch_radius: usize, search_radius: usize, h: f64) -> Self {
        Self {
            patch_radius,
            search_radius,
            h: Some(h),
            sigma: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_radius < 1 {
            return Err(FusionError::invalid("NLM patch_radius must be >= 1"));
        }
        if self.search_radius < self.patch_radius {
            return Err(FusionError::invalid(
                "NLM search_radius must be >= patch_radius",
            ));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(FusionError::invalid(format!("NLM h must be > 0, got {h}")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(FusionError::invalid(format!(
                    "NLM sigma must be >= 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Concrete `(h, sigma)` given a noise estimate for the input.
    pub fn resolve(&self, sigma_est: f64) -> (f64, f64) {
        match self.h {
            Some(h) => (h, self.sigma.unwrap_or(0.0)),
            None => (
                (AUTO_H_FACTOR * sigma_est).max(MIN_AUTO_H),
                self.sigma.unwrap_or(sigma_est),
            ),
        }
    }

    fn needs_estimate(&self) -> bool {
        self.h.is_none() && self.sigma.is_none()
    }
}

/// Robust noise standard deviation from the median absolute deviation of the
/// 4-neighbour Laplacian over interior pixels.
pub fn estimate_sigma(plane: &Plane) -> Result<f64> {
    let (w, h) = (plane.width(), plane.height());
    if w < 3 || h < 3 {
        return Err(FusionError::invalid(format!(
            "noise estimate needs at least 3x3, got {w}x{h}"
        )));
    }
    let mut lap = Vec::with_capacity((w - 2) * (h - 2));
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            lap.push(
                plane.get(r - 1, c)
                    + plane.get(r + 1, c)
                    + plane.get(r, c - 1)
                    + plane.get(r, c + 1)
                    - 4.0 * plane.get(r, c),
            );
        }
    }
    let med = median(&mut lap);
    let mut dev: Vec<f64> = lap.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev);
    Ok(mad / MAD_TO_SIGMA / 20f64.sqrt())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Plane with a replicate border of `pad` pixels on every side.
struct Padded {
    stride: usize,
    pad: usize,
    data: Vec<f64>,
}

impl Padded {
    fn new(plane: &Plane, pad: usize) -> Self {
        let stride = plane.width() + 2 * pad;
        let rows = plane.height() + 2 * pad;
        let mut data = Vec::with_capacity(stride * rows);
        for r in 0..rows {
            let src_r = r as isize - pad as isize;
            for c in 0..stride {
                data.push(plane.get_clamped(src_r, c as isize - pad as isize));
            }
        }
        Self { stride, pad, data }
    }

    /// Sum of squared differences between the patches centered at two
    /// in-image pixels.
    #[inline]
    fn ssd(&self, a: (usize, usize), b: (usize, usize), radius: usize) -> f64 {
        let side = 2 * radius + 1;
        let off = self.pad - radius;
        let mut acc = 0.0;
        for dr in 0..side {
            let ra = (a.0 + off + dr) * self.stride + a.1 + off;
            let rb = (b.0 + off + dr) * self.stride + b.1 + off;
            let pa = &self.data[ra..ra + side];
            let pb = &self.data[rb..rb + side];
            for (x, y) in pa.iter().zip(pb) {
                let d = x - y;
                acc += d * d;
            }
        }
        acc
    }
}

struct Kernel {
    patch_radius: usize,
    search_radius: usize,
    inv_h2: f64,
    offset: f64,
}

impl Kernel {
    #[inline]
    fn weight(&self, d2: f64) -> f64 {
        (-(d2 - self.offset).max(0.0) * self.inv_h2).exp()
    }
}

fn kernel(params: &NlmParams, sigma_est: f64) -> Kernel {
    let (h, sigma) = params.resolve(sigma_est);
    Kernel {
        patch_radius: params.patch_radius,
        search_radius: params.search_radius,
        inv_h2: 1.0 / (h * h),
        offset: 2.0 * sigma * sigma,
    }
}

/// Runs the filter over `channels` with one weight per candidate computed from
/// the channel-averaged patch distance.
fn filter_joint(channels: &[&Plane], k: &Kernel) -> Vec<Vec<f64>> {
    let (w, h) = (channels[0].width(), channels[0].height());
    let padded: Vec<Padded> = channels
        .iter()
        .map(|p| Padded::new(p, k.patch_radius))
        .collect();
    let side = 2 * k.patch_radius + 1;
    let norm = 1.0 / (side * side * channels.len()) as f64;
    let nch = channels.len();
    let sr = k.search_radius;

    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut row_out = vec![0.0; w * nch];
            let r_lo = r.saturating_sub(sr);
            let r_hi = (r + sr).min(h - 1);
            let mut acc = vec![0.0; nch];
            for c in 0..w {
                let c_lo = c.saturating_sub(sr);
                let c_hi = (c + sr).min(w - 1);
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut wsum = 0.0;
                for r2 in r_lo..=r_hi {
                    for c2 in c_lo..=c_hi {
                        let weight = if r2 == r && c2 == c {
                            1.0
                        } else {
                            let d2: f64 = padded
                                .iter()
                                .map(|p| p.ssd((r, c), (r2, c2), k.patch_radius))
                                .sum::<f64>()
                                * norm;
                            k.weight(d2)
                        };
                        wsum += weight;
                        for (a, ch) in acc.iter_mut().zip(channels) {
                            *a += weight * (ch.get(r2, c2) - ch.get(r, c));
                        }
                    }
                }
                // Accumulating offsets from the center keeps constants exact.
                for (ci, (a, ch)) in acc.iter().zip(channels).enumerate() {
                    row_out[ci * w + c] = ch.get(r, c) + a / wsum;
                }
            }
            row_out
        })
        .collect();

    let mut out = vec![Vec::with_capacity(w * h); nch];
    for row in rows {
        for (ci, o) in out.iter_mut().enumerate() {
            o.extend_from_slice(&row[ci * w..(ci + 1) * w]);
        }
    }
    out
}

pub fn nlm_denoise_plane(plane: &Plane, params: &NlmParams) -> Result<Plane> {
    params.validate()?;
    let sigma_est = if params.needs_estimate() && plane.width() >= 3 && plane.height() >= 3 {
        estimate_sigma(plane)?
    } else {
        0.0
    };
    let k = kernel(params, sigma_est);
    let mut out = filter_joint(&[plane], &k);
    Ok(Plane::from_raw(
        plane.width(),
        plane.height(),
        out.pop().expect("one channel"),
    ))
}

/// Noise estimate of a color image: mean of the per-channel estimates.
pub fn estimate_sigma_color(img: &ColorImage) -> Result<f64> {
    let mut total = 0.0;
    for p in img.planes() {
        total += estimate_sigma(p)?;
    }
    Ok(total / 3.0)
}

pub fn nlm_denoise_color(img: &ColorImage, params: &NlmParams) -> Result<ColorImage> {
    params.validate()?;
    let sigma_est = if params.needs_estimate() && img.width() >= 3 && img.height() >= 3 {
        estimate_sigma_color(img)?
    } else {
        0.0
    };
    let k = kernel(params, sigma_est);
    let [r, g, b] = img.planes();
    let mut out = filter_joint(&[r, g, b], &k).into_iter();
    let (w, h) = (img.width(), img.height());
    let mut next = || Plane::from_raw(w, h, out.next().expect("three channels"));
    ColorImage::new(next(), next(), next())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_ramp(w: usize, h: usize, sigma: f64, seed: u64) -> (Plane, Plane) {
        let clean = Plane::from_fn(w, h, |_, c| 0.2 + 0.6 * c as f64 / (w - 1) as f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        let noisy = clean.map(|v| v + n.sample(&mut rng));
        (clean, noisy)
    }

    fn rmse(a: &Plane, b: &Plane) -> f64 {
        let s: f64 = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        (s / a.len() as f64).sqrt()
    }

    #[test]
    fn sigma_of_constant_plane_is_zero() {
        let p = Plane::filled(10, 10, 0.4).unwrap();
        assert_eq!(estimate_sigma(&p).unwrap(), 0.0);
    }

    #[test]
    fn sigma_of_ramp_is_tiny() {
        let p = Plane::from_fn(40, 30, |r, c| 0.01 * c as f64 + 0.005 * r as f64).unwrap();
        assert!(estimate_sigma(&p).unwrap() < 0.005);
    }

    #[test]
    fn sigma_of_gaussian_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, 0.1).unwrap();
        let p = Plane::from_fn(256, 256, |_, _| n.sample(&mut rng)).unwrap();
        let s = estimate_sigma(&p).unwrap();
        assert!((0.085..=0.115).contains(&s), "{s}");
    }

    #[test]
    fn sigma_needs_three_by_three() {
        let p = Plane::filled(2, 5, 0.0).unwrap();
        assert!(matches!(
            estimate_sigma(&p),
            Err(FusionError::InvalidArgument(_))
        ));
    }

    #[test]
    fn params_are_validated() {
        assert!(NlmParams::with_h(0, 3, 0.1).validate().is_err());
        assert!(NlmParams::with_h(3, 2, 0.1).validate().is_err());
        assert!(NlmParams::with_h(1, 2, 0.0).validate().is_err());
        assert!(NlmParams::default().validate().is_ok());
    }

    #[test]
    fn auto_h_has_a_floor() {
        let p = NlmParams::default();
        assert_eq!(p.resolve(0.0), (MIN_AUTO_H, 0.0));
        let (h, s) = p.resolve(0.1);
        assert!((h - 0.075).abs() < 1e-15 && s == 0.1);
        assert_eq!(NlmParams::with_h(1, 2, 0.3).resolve(0.1), (0.3, 0.0));
    }

    #[test]
    fn constant_plane_is_a_fixed_point() {
        let p = Plane::filled(12, 9, 0.37).unwrap();
        assert_eq!(nlm_denoise_plane(&p, &NlmParams::default()).unwrap(), p);
        assert_eq!(
            nlm_denoise_plane(&p, &NlmParams::with_h(1, 3, 0.1)).unwrap(),
            p
        );
    }

    #[test]
    fn vanishing_h_is_identity() {
        let (_, noisy) = noisy_ramp(16, 12, 0.1, 3);
        let out = nlm_denoise_plane(&noisy, &NlmParams::with_h(1, 3, 1e-6)).unwrap();
        for (a, b) in out.data().iter().zip(noisy.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn noisy_ramp_rmse_halves() {
        let (clean, noisy) = noisy_ramp(32, 32, 0.1, 5);
        let out = nlm_denoise_plane(&noisy, &NlmParams::with_h(2, 5, 0.3)).unwrap();
        assert!(rmse(&out, &clean) <= 0.5 * rmse(&noisy, &clean));
    }

    #[test]
    fn constant_color_image_is_a_fixed_point() {
        let img = ColorImage::from_fn(8, 8, |_, _| [0.1, 0.5, 0.9]).unwrap();
        assert_eq!(nlm_denoise_color(&img, &NlmParams::default()).unwrap(), img);
    }

    #[test]
    fn replicated_gray_matches_plane_filter() {
        let (_, noisy) = noisy_ramp(14, 11, 0.05, 9);
        let params = NlmParams::with_h(1, 4, 0.2);
        let plane = nlm_denoise_plane(&noisy, &params).unwrap();
        let color = nlm_denoise_color(&ColorImage::from_gray(&noisy), &params).unwrap();
        for ch in color.planes() {
            for (a, b) in ch.data().iter().zip(plane.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noisy_color_ramp_rmse_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = Normal::new(0.0, 0.1).unwrap();
        let clean = ColorImage::from_fn(32, 32, |_, c| {
            let t = c as f64 / 31.0;
            [0.2 + 0.6 * t, 0.7 - 0.4 * t, 0.5]
        })
        .unwrap();
        let noisy = ColorImage::new(
            clean.r().map(|v| v + n.sample(&mut rng)),
            clean.g().map(|v| v + n.sample(&mut rng)),
            clean.b().map(|v| v + n.sample(&mut rng)),
        )
        .unwrap();
        let out = nlm_denoise_color(&noisy, &NlmParams::with_h(2, 5, 0.3)).unwrap();
        for ((o, c), n) in out.planes().iter().zip(clean.planes()).zip(noisy.planes()) {
            assert!(rmse(o, c) <= 0.5 * rmse(n, c));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn plane_strategy() -> impl Strategy<Value = Plane> {
            (3usize..9, 3usize..9).prop_flat_map(|(w, h)| {
                proptest::collection::vec(0.0..1.0f64, w * h)
                    .prop_map(move |d| Plane::new(w, h, d).unwrap())
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn output_is_a_convex_combination(p in plane_strategy(), h in 0.01..1.0f64) {
                let (lo, hi) = p.min_max();
                let out = nlm_denoise_plane(&p, &NlmParams::with_h(1, 2, h)).unwrap();
                for v in out.data() {
                    prop_assert!(*v >= lo - 1e-15 && *v <= hi + 1e-15);
                }
                let twice = nlm_denoise_plane(&out, &NlmParams::with_h(1, 2, h)).unwrap();
                let (lo2, hi2) = twice.min_max();
                let (lo1, hi1) = out.min_max();
                prop_assert!(lo2 >= lo1 - 1e-15 && hi2 <= hi1 + 1e-15);
            }

            #[test]
            fn interior_is_shift_equivariant(
                data in proptest::collection::vec(0.0..1.0f64, 14 * 14),
                dr in 0usize..3, dc in 0usize..3,
            ) {
                // The window of a shifted copy sees the same neighbourhood as
                // long as every patch and candidate stays inside both planes.
                let big = Plane::new(14, 14, data).unwrap();
                let params = NlmParams::with_h(1, 1, 0.2);
                let a = Plane::from_fn(10, 10, |r, c| big.get(r, c)).unwrap();
                let b = Plane::from_fn(10, 10, |r, c| big.get(r + dr, c + dc)).unwrap();
                let fa = nlm_denoise_plane(&a, &params).unwrap();
                let fb = nlm_denoise_plane(&b, &params).unwrap();
                let margin = 2;
                for r in margin + dr..10 - margin {
                    for c in margin + dc..10 - margin {
                        prop_assert!((fa.get(r, c) - fb.get(r - dr, c - dc)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
