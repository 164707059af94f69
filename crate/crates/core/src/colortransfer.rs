//! Color transfer: chrominance of the denoised visible image divided by the
//! contrast-transfer slope, recombined with the new luminance.

use serde::{Deserialize, Serialize};

use crate::colorspace::{lab_to_rgb, LabConversionConstants};
use crate::contrast::AffineMapField;
use crate::error::{FusionError, Result};
use crate::raster::{ColorImage, LabImage, Plane};

/// Guards on the slope division.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlopeClamp {
    /// Slopes below this are raised to it before dividing.
    pub eps_slope: f64,
    /// Upper bound on the chroma gain.
    pub max_gain: f64,
}

impl Default for SlopeClamp {
    fn default() -> Self {
        Self {
            eps_slope: 0.2,
            max_gain: 5.0,
        }
    }
}

impl SlopeClamp {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_slope > 0.0 && self.eps_slope <= 1.0) {
            return Err(FusionError::Config(format!(
                "eps_slope must lie in (0, 1], got {}",
                self.eps_slope
            )));
        }
        if !(self.max_gain >= 1.0 && self.max_gain.is_finite()) {
            return Err(FusionError::Config(format!(
                "max_gain must be >= 1, got {}",
                self.max_gain
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn gain(&self, slope: f64) -> f64 {
        (1.0 / slope.max(self.eps_slope)).min(self.max_gain)
    }
}

/// Scales both chrominance planes by the per-pixel gain `1 / slope`.
pub fn transfer_chroma(
    vci_lab: &LabImage,
    field: &AffineMapField,
    clamp: &SlopeClamp,
) -> Result<(Plane, Plane)> {
    clamp.validate()?;
    vci_lab.l().ensure_same_size(&field.slope)?;
    let gains = field.slope.map(|s| clamp.gain(s));
    let alpha = vci_lab.alpha().zip_map(&gains, |a, g| a * g)?;
    let beta = vci_lab.beta().zip_map(&gains, |b, g| b * g)?;
    Ok((alpha, beta))
}

/// Stacks luminance and chrominance and converts back to RGB.
pub fn assemble_fused(
    lum: &Plane,
    alpha: &Plane,
    beta: &Plane,
    k: &LabConversionConstants,
) -> Result<ColorImage> {
    let lab = LabImage::new(lum.clone(), alpha.clone(), beta.clone())?;
    Ok(lab_to_rgb(&lab, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::rgb_to_lab;
    use crate::contrast::AffineMap;

    fn sample_image() -> ColorImage {
        ColorImage::from_fn(6, 5, |r, c| {
            [
                0.1 + 0.15 * r as f64,
                0.8 - 0.1 * c as f64,
                0.3 + 0.05 * (r + c) as f64,
            ]
        })
        .unwrap()
    }

    #[test]
    fn unit_slope_keeps_chroma() {
        let lab = rgb_to_lab(&sample_image(), &LabConversionConstants::default());
        let field = AffineMapField::uniform(6, 5, AffineMap::new(1.0, 0.0)).unwrap();
        let (a, b) = transfer_chroma(&lab, &field, &SlopeClamp::default()).unwrap();
        assert_eq!(&a, lab.alpha());
        assert_eq!(&b, lab.beta());
    }

    #[test]
    fn slope_two_halves_chroma() {
        let lab = rgb_to_lab(&sample_image(), &LabConversionConstants::default());
        let mut field = AffineMapField::uniform(6, 5, AffineMap::new(1.0, 0.0)).unwrap();
        let mut slope = field.slope.clone().into_data();
        slope[7] = 2.0;
        field.slope = Plane::new(6, 5, slope).unwrap();
        let (a, b) = transfer_chroma(&lab, &field, &SlopeClamp::default()).unwrap();
        assert_eq!(a.data()[7], lab.alpha().data()[7] * 0.5);
        assert_eq!(b.data()[7], lab.beta().data()[7] * 0.5);
        assert_eq!(a.data()[6], lab.alpha().data()[6]);
    }

    #[test]
    fn tiny_slope_hits_gain_ceiling() {
        let clamp = SlopeClamp {
            eps_slope: 0.2,
            max_gain: 5.0,
        };
        assert_eq!(clamp.gain(0.001), 5.0);
        assert_eq!(clamp.gain(-3.0), 5.0);
        let tight = SlopeClamp {
            eps_slope: 0.5,
            max_gain: 5.0,
        };
        assert_eq!(tight.gain(0.001), 2.0);
    }

    #[test]
    fn invalid_clamp_rejected() {
        assert!(SlopeClamp {
            eps_slope: 0.0,
            max_gain: 5.0
        }
        .validate()
        .is_err());
        assert!(SlopeClamp {
            eps_slope: 0.2,
            max_gain: 0.9
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_chroma_is_achromatic() {
        let k = LabConversionConstants::default();
        let lum = Plane::from_fn(8, 8, |r, c| {
            k.gray_luminance(0.05 + 0.11 * (r + c) as f64 / 2.0)
        })
        .unwrap();
        let zero = Plane::filled(8, 8, 0.0).unwrap();
        let rgb = assemble_fused(&lum, &zero, &zero, &k).unwrap();
        for i in 0..64 {
            let [r, g, b] = [rgb.r().data()[i], rgb.g().data()[i], rgb.b().data()[i]];
            assert!((r - g).abs() < 5e-3 && (g - b).abs() < 5e-3);
        }
    }

    #[test]
    fn unmodified_decomposition_reassembles() {
        let k = LabConversionConstants::default();
        let img = sample_image();
        let lab = rgb_to_lab(&img, &k);
        let out = assemble_fused(lab.l(), lab.alpha(), lab.beta(), &k).unwrap();
        for (o, i) in out.planes().iter().zip(img.planes()) {
            for (a, b) in o.data().iter().zip(i.data()) {
                assert!((a - b).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn chroma_gain_does_not_reduce_saturation() {
        use rand::{Rng, SeedableRng};
        let k = LabConversionConstants::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let px: [f64; 3] = [
                rng.random_range(0.1..0.9),
                rng.random_range(0.1..0.9),
                rng.random_range(0.1..0.9),
            ];
            let gain = rng.random_range(1.0..3.0);
            let [l, a, b] = k.pixel_to_lab(px);
            let base = k.pixel_to_rgb_unclamped([l, a, b]);
            let boosted = k.pixel_to_rgb_unclamped([l, a * gain, b * gain]);
            let sat = |p: [f64; 3]| {
                p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - p.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            assert!(sat(boosted) >= sat(base) - 1e-12, "{px:?} x{gain}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gains_are_bounded_and_finite(slope in -10.0..10.0f64, eps in 0.01..1.0f64, max_gain in 1.0..50.0f64) {
                let c = SlopeClamp { eps_slope: eps, max_gain };
                let g = c.gain(slope);
                prop_assert!(g.is_finite());
                prop_assert!(g <= max_gain);
                prop_assert!(g >= (1.0 / slope.max(eps)).min(max_gain) - 1e-15);
                prop_assert!(g > 0.0);
            }
        }
    }
}
