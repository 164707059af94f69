//! Fusion of a noisy visible color image with a noise-free near-infrared gray
//! image of the same scene.
//!
//! The visible image is first denoised with non-local means. A per-pixel
//! affine regression then re-renders the near-infrared image with the local
//! contrast and brightness of the visible luminance ([`contrast`]), its detail
//! layer is re-estimated to follow the near-infrared gradients under an L1
//! penalty ([`detail`]), and the visible chrominance, rescaled by the local
//! slope, is attached to the result ([`colortransfer`]).
//!
//! ```no_run
//! use nirfuse::{io, run_pipeline, FusionConfig};
//!
//! let vci = io::load_color("visible.png")?;
//! let ngi = io::load_gray("nir.png")?;
//! let result = run_pipeline(&vci, &ngi, &FusionConfig::default())?;
//! io::save_color(&result.fused, "fused.png")?;
//! # Ok::<(), nirfuse::FusionError>(())
//! ```

pub mod colorspace;
pub mod colortransfer;
pub mod config;
pub mod contrast;
pub mod denoise;
pub mod detail;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod synth;

pub use colorspace::{lab_to_rgb, rgb_to_lab, GrayLift, LabConversionConstants};
pub use colortransfer::{assemble_fused, transfer_chroma, SlopeClamp};
pub use config::{FusionConfig, SolverSchedule};
pub use contrast::{
    compute_prior, contrast_transfer_image, distance_weights, solve_affine, AffineMap,
    AffineMapField, PatchSystem,
};
pub use denoise::{estimate_sigma, nlm_denoise_color, nlm_denoise_plane, NlmParams};
pub use detail::{
    decompose_layers, detail_transfer_image, soft_threshold, solve_detail, DetailSolverParams,
    LayerPair,
};
pub use error::{FusionError, Result};
pub use metrics::psnr;
pub use pipeline::{run_from_denoised, run_pipeline, FusionResult};
pub use raster::{extract_patch, ColorImage, LabImage, Patch, Plane};
pub use synth::{synthesize_pair, Rect, SyntheticPair, SyntheticSpec};
