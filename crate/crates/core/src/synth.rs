//! Synthetic visible / near-infrared pairs from a clean color image.
//!
//! The visible image gets i.i.d. Gaussian noise. The near-infrared image is the
//! noise-free channel-average luminance under a smooth multiplicative
//! brightness field, with all structure removed inside an optional rectangle,
//! so the pair carries both brightness and edge discrepancies.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{FusionError, Result};
use crate::raster::{ColorImage, Plane};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub const fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Self {
            row,
            col,
            height,
            width,
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row
            && row < self.row + self.height
            && col >= self.col
            && col < self.col + self.width
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.width == 0
            || self.height == 0
            || self.row + self.height > height
            || self.col + self.width > width
        {
            return Err(FusionError::invalid(format!(
                "rectangle {self} does not fit a {width}x{height} image"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.row, self.col, self.height, self.width
        )
    }
}

/// Parses `row,col,height,width`.
impl FromStr for Rect {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FusionError::invalid(format!("bad rectangle {s:?}: {e}")))?;
        match parts[..] {
            [row, col, height, width] => Ok(Rect::new(row, col, height, width)),
            _ => Err(FusionError::invalid(format!(
                "rectangle needs row,col,height,width; got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Standard deviation of the visible-image noise.
    pub noise_sigma: f64,
    /// Amplitude `a` of the brightness field `1 + a * sin(...)`.
    pub brightness_amplitude: f64,
    /// Region where the near-infrared image is flattened to its mean.
    pub erase_rect: Option<Rect>,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            noise_sigma: 0.1,
            brightness_amplitude: 0.0,
            erase_rect: None,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub vci: ColorImage,
    pub ngi: Plane,
    pub clean: ColorImage,
}

/// Smooth multiplicative field, one period along the anti-diagonal.
pub fn brightness_field(width: usize, height: usize, amplitude: f64) -> Plane {
    let tau = std::f64::consts::TAU;
    Plane::from_fn(width, height, |r, c| {
        let phase = (c as f64 + 0.5) / width as f64 + 0.5 * (r as f64 + 0.5) / height as f64;
        1.0 + amplitude * (tau * phase).sin()
    })
    .expect("finite field")
}

pub fn synthesize_pair(clean: &ColorImage, spec: &SyntheticSpec) -> Result<SyntheticPair> {
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(FusionError::invalid(format!(
            "noise_sigma must be >= 0, got {}",
            spec.noise_sigma
        )));
    }
    if !(spec.brightness_amplitude >= 0.0 && spec.brightness_amplitude < 1.0) {
        return Err(FusionError::invalid(format!(
            "brightness amplitude must lie in [0, 1), got {}",
            spec.brightness_amplitude
        )));
    }
    let (w, h) = (clean.width(), clean.height());
    if let Some(rect) = &spec.erase_rect {
        rect.check_within(w, h)?;
    }

    let vci = if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        let noise =
            Normal::new(0.0, spec.noise_sigma).map_err(|e| FusionError::invalid(e.to_string()))?;
        clean.map_planes(|p| p.map(|v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0)))?
    } else {
        clean.clone()
    };

    let lum = clean.channel_mean();
    let ngi = if spec.brightness_amplitude > 0.0 {
        let field = brightness_field(w, h, spec.brightness_amplitude);
        lum.zip_map(&field, |l, f| (l * f).clamp(0.0, 1.0))?
    } else {
        lum
    };
    let ngi = match &spec.erase_rect {
        Some(rect) => flatten_region(&ngi, rect),
        None => ngi,
    };

    Ok(SyntheticPair {
        vci,
        ngi,
        clean: clean.clone(),
    })
}

fn flatten_region(plane: &Plane, rect: &Rect) -> Plane {
    let mut sum = 0.0;
    for r in rect.row..rect.row + rect.height {
        for c in rect.col..rect.col + rect.width {
            sum += plane.get(r, c);
        }
    }
    let mean = sum / (rect.height * rect.width) as f64;
    Plane::from_fn(plane.width(), plane.height(), |r, c| {
        if rect.contains(r, c) {
            mean
        } else {
            plane.get(r, c)
        }
    })
    .expect("finite samples")
}
