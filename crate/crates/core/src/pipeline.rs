//! End-to-end fusion: initial denoising, contrast transfer, detail transfer,
//! color transfer.
//!
//! Luminance work happens on the decorrelated-space luminance axis, rescaled
//! so that black maps to 0 and white to 1. The near-infrared plane is lifted
//! onto the same axis by reading each intensity as a gray pixel.

use std::path::{Path, PathBuf};

use crate::colorspace::{rgb_to_lab, GrayLift, LabConversionConstants};
use crate::colortransfer::{assemble_fused, transfer_chroma};
use crate::config::FusionConfig;
use crate::contrast::{contrast_transfer_image, AffineMapField};
use crate::denoise::nlm_denoise_color;
use crate::detail::detail_transfer_image;
use crate::error::Result;
use crate::io;
use crate::raster::{ColorImage, Plane};

/// File names of the intermediate dump, in stage order.
pub const INTERMEDIATE_NAMES: [&str; 4] = [
    "01_denoised_vci.png",
    "02_contrast_ngi.png",
    "03_detail_ngi.png",
    "04_slope_field.png",
];

/// Output of a fusion run with every stage kept.
#[derive(Debug, Clone)]
pub struct FusionResult {
    pub fused: ColorImage,
    pub denoised_vci: ColorImage,
    /// Near-infrared luminance after the contrast transfer, unit-scaled.
    pub contrast_lum: Plane,
    /// Near-infrared luminance after the detail transfer, unit-scaled.
    pub detail_lum: Plane,
    pub field: AffineMapField,
    lift: GrayLift,
}

impl FusionResult {
    fn lum_to_gray(&self, unit: &Plane) -> Plane {
        let scale = self.lift.unit_scale();
        unit.map(|u| self.lift.unlift(scale.from_unit(u)))
    }

    /// Contrast-transferred near-infrared image as gray intensities.
    pub fn contrast_ngi(&self) -> Plane {
        self.lum_to_gray(&self.contrast_lum)
    }

    /// Detail-transferred near-infrared image as gray intensities.
    pub fn detail_ngi(&self) -> Plane {
        self.lum_to_gray(&self.detail_lum)
    }

    /// Slope field linearly stretched to `[0, 1]` by its min and max.
    pub fn slope_visualization(&self) -> Plane {
        let (lo, hi) = self.field.slope.min_max();
        let span = hi - lo;
        if span > 0.0 {
            self.field.slope.map(|s| (s - lo) / span)
        } else {
            self.field.slope.map(|_| 0.5)
        }
    }

    /// Writes the four intermediate PNGs into `dir` and returns their paths.
    pub fn write_intermediates(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let paths: Vec<PathBuf> = INTERMEDIATE_NAMES.iter().map(|n| dir.join(n)).collect();
        io::save_color(&self.denoised_vci, &paths[0])?;
        io::save_gray(&self.contrast_ngi(), &paths[1])?;
        io::save_gray(&self.detail_ngi(), &paths[2])?;
        io::save_gray(&self.slope_visualization(), &paths[3])?;
        Ok(paths)
    }
}

/// Full pipeline from the noisy visible image.
pub fn run_pipeline(vci: &ColorImage, ngi: &Plane, cfg: &FusionConfig) -> Result<FusionResult> {
    cfg.validate()?;
    vci.r().ensure_same_size(ngi)?;
    let denoised = nlm_denoise_color(vci, &cfg.nlm_initial)?;
    run_from_denoised(denoised, ngi, cfg)
}

/// Every stage after the initial denoising. The visible image is used only
/// through `denoised_vci`.
pub fn run_from_denoised(
    denoised_vci: ColorImage,
    ngi: &Plane,
    cfg: &FusionConfig,
) -> Result<FusionResult> {
    cfg.validate()?;
    denoised_vci.r().ensure_same_size(ngi)?;
    let k = LabConversionConstants::default();
    let lift = GrayLift::new(&k);
    let scale = lift.unit_scale();

    let lab = rgb_to_lab(&denoised_vci, &k);
    let vci_lum = lab.l().map(|l| scale.to_unit(l));
    let ngi_lum = ngi.map(|g| scale.to_unit(lift.lift(g)));

    let (contrast_lum, field) = contrast_transfer_image(&vci_lum, &ngi_lum, cfg)?;
    let detail_lum = detail_transfer_image(&contrast_lum, &ngi_lum, cfg)?;
    let (alpha, beta) = transfer_chroma(&lab, &field, &cfg.slope_clamp)?;
    let fused = assemble_fused(&detail_lum.map(|u| scale.from_unit(u)), &alpha, &beta, &k)?;

    Ok(FusionResult {
        fused,
        denoised_vci,
        contrast_lum,
        detail_lum,
        field,
        lift,
    })
}
