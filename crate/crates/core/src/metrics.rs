//! Fidelity and sharpness measures.

use crate::error::{FusionError, Result};
use crate::raster::{ColorImage, Plane};
use crate::synth::Rect;

/// Returned by [`psnr`] for identical inputs.
pub const PSNR_CAP: f64 = 99.0;

/// Anything made of aligned planes with samples in `[0, 1]`.
pub trait Samples {
    fn sample_planes(&self) -> Vec<&Plane>;
}

impl Samples for Plane {
    fn sample_planes(&self) -> Vec<&Plane> {
        vec![self]
    }
}

impl Samples for ColorImage {
    fn sample_planes(&self) -> Vec<&Plane> {
        self.planes().iter().collect()
    }
}

pub fn mse<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    let (pa, pb) = (a.sample_planes(), b.sample_planes());
    if pa.len() != pb.len() {
        return Err(FusionError::invalid("channel counts differ"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y) in pa.iter().zip(&pb) {
        x.ensure_same_size(y)?;
        sum += x
            .data()
            .iter()
            .zip(y.data())
            .map(|(u, v)| (u - v).powi(2))
            .sum::<f64>();
        n += x.len();
    }
    Ok(sum / n as f64)
}

/// Peak signal-to-noise ratio in dB for unit peak, capped at [`PSNR_CAP`].
pub fn psnr<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP))
}

/// Mean of `sqrt(dx^2 + dy^2)` (forward differences) over pixels of `rect`
/// whose right and lower neighbours are also inside it.
pub fn mean_gradient_magnitude(plane: &Plane, rect: &Rect) -> Result<f64> {
    rect.check_within(plane.width(), plane.height())?;
    if rect.height < 2 || rect.width < 2 {
        return Err(FusionError::invalid("gradient region must be at least 2x2"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in rect.row..rect.row + rect.height - 1 {
        for c in rect.col..rect.col + rect.width - 1 {
            let v = plane.get(r, c);
            let dx = plane.get(r, c + 1) - v;
            let dy = plane.get(r + 1, c) - v;
            sum += (dx * dx + dy * dy).sqrt();
            n += 1;
        }
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(v: f64) -> Plane {
        Plane::filled(4, 3, v).unwrap()
    }

    #[test]
    fn identical_images_hit_the_cap() {
        let img = ColorImage::from_gray(&gray(0.3));
        assert_eq!(psnr(&img, &img).unwrap(), 99.0);
    }

    #[test]
    fn closed_form_values() {
        assert!((psnr(&gray(0.2), &gray(0.3)).unwrap() - 20.0).abs() < 1e-9);
        let a = ColorImage::from_gray(&gray(0.0));
        let b = ColorImage::from_gray(&gray(0.5));
        assert!((psnr(&a, &b).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = gray(0.1);
        let b = Plane::filled(3, 3, 0.1).unwrap();
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn gradient_of_vertical_step() {
        let p = Plane::from_fn(6, 6, |_, c| if c < 3 { 0.0 } else { 1.0 }).unwrap();
        let all = Rect::new(0, 0, 6, 6);
        // one of five columns of differences crosses the step
        assert!((mean_gradient_magnitude(&p, &all).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(
            mean_gradient_magnitude(&gray(0.4), &Rect::new(0, 0, 3, 4)).unwrap(),
            0.0
        );
        assert!(mean_gradient_magnitude(&p, &Rect::new(4, 4, 3, 3)).is_err());
    }
}
