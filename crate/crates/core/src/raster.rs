//! Image containers and patch extraction.
//!
//! A [`Plane`] is a single channel of `f64` samples stored row-major. Pixel
//! index `i` maps to `(row, col) = (i / width, i % width)`. Samples are nominally
//! in `[0, 1]` but planes also carry log-domain luminance, chrominance, slope
//! fields and detail layers, so the range is not enforced. Finiteness is.

use crate::error::{FusionError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FusionError::invalid(format!(
                "plane must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(FusionError::invalid(format!(
                "plane {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(FusionError::invalid(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a plane without validation. Callers guarantee the length and
    /// finiteness invariants.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Sample at `(row, col)` with coordinates clamped to the plane.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn same_size(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn ensure_same_size(&self, other: &Plane) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(FusionError::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            })
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Plane {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        Plane::new(self.width, self.height, data).expect("map produced a non-finite sample")
    }

    /// Elementwise combination of two planes of identical size.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        self.ensure_same_size(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Plane::new(self.width, self.height, data)
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> Plane {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Three aligned planes. Used for both RGB and the decorrelated
/// luminance/chrominance space; the wrappers below name the channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Channels3 {
    planes: [Plane; 3],
}

impl Channels3 {
    fn new(a: Plane, b: Plane, c: Plane) -> Result<Self> {
        a.ensure_same_size(&b)?;
        a.ensure_same_size(&c)?;
        Ok(Self { planes: [a, b, c] })
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn planes(&self) -> &[Plane; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Plane; 3] {
        self.planes
    }
}

/// Linear RGB color image, channels nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage(Channels3);

impl ColorImage {
    pub fn new(r: Plane, g: Plane, b: Plane) -> Result<Self> {
        Channels3::new(r, g, b).map(Self)
    }

    /// Gray image replicated into the three channels.
    pub fn from_gray(gray: &Plane) -> Self {
        Self(Channels3 {
            planes: [gray.clone(), gray.clone(), gray.clone()],
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut chans = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for row in 0..height {
            for col in 0..width {
                let px = f(row, col);
                for (ch, v) in chans.iter_mut().zip(px) {
                    ch.push(v);
                }
            }
        }
        let [r, g, b] = chans;
        Self::new(
            Plane::new(width, height, r)?,
            Plane::new(width, height, g)?,
            Plane::new(width, height, b)?,
        )
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn r(&self) -> &Plane {
        &self.0.planes[0]
    }

    pub fn g(&self) -> &Plane {
        &self.0.planes[1]
    }

    pub fn b(&self) -> &Plane {
        &self.0.planes[2]
    }

    pub fn planes(&self) -> &[Plane; 3] {
        self.0.planes()
    }

    pub fn into_planes(self) -> [Plane; 3] {
        self.0.into_planes()
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let p = self.0.planes();
        [p[0].get(row, col), p[1].get(row, col), p[2].get(row, col)]
    }

    /// Per-pixel channel average.
    pub fn channel_mean(&self) -> Plane {
        let [r, g, b] = self.planes();
        let data = r
            .data()
            .iter()
            .zip(g.data())
            .zip(b.data())
            .map(|((&r, &g), &b)| (r + g + b) / 3.0)
            .collect();
        Plane::from_raw(self.width(), self.height(), data)
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> ColorImage {
        let [r, g, b] = self.planes();
        Self(Channels3 {
            planes: [r.clamped(lo, hi), g.clamped(lo, hi), b.clamped(lo, hi)],
        })
    }

    pub fn map_planes(&self, mut f: impl FnMut(&Plane) -> Plane) -> Result<ColorImage> {
        let [r, g, b] = self.planes();
        let (r, g, b) = (f(r), f(g), f(b));
        Self::new(r, g, b)
    }
}

/// Image in the decorrelated log-LMS space: luminance `l` and the two
/// chrominance axes `alpha`, `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage(Channels3);

impl LabImage {
    pub fn new(l: Plane, alpha: Plane, beta: Plane) -> Result<Self> {
        Channels3::new(l, alpha, beta).map(Self)
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn l(&self) -> &Plane {
        &self.0.planes[0]
    }

    pub fn alpha(&self) -> &Plane {
        &self.0.planes[1]
    }

    pub fn beta(&self) -> &Plane {
        &self.0.planes[2]
    }

    pub fn planes(&self) -> &[Plane; 3] {
        self.0.planes()
    }

    pub fn into_planes(self) -> [Plane; 3] {
        self.0.into_planes()
    }
}

/// Square window of odd side `m`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    m: usize,
    values: Vec<f64>,
}

impl Patch {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        check_odd_side(m)?;
        if values.len() != m * m {
            return Err(FusionError::invalid(format!(
                "patch of side {m} needs {} values, got {}",
                m * m,
                values.len()
            )));
        }
        Ok(Self { m, values })
    }

    pub fn side(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn center_value(&self) -> f64 {
        self.values[self.values.len() / 2]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.values.len() as f64
    }
}

pub(crate) fn check_odd_side(m: usize) -> Result<()> {
    if m == 0 || m.is_multiple_of(2) {
        return Err(FusionError::invalid(format!(
            "patch side must be odd and positive, got {m}"
        )));
    }
    Ok(())
}

/// Copies the `m`x`m` window centered at `(row, col)` with replicate padding.
pub fn extract_patch(plane: &Plane, row: usize, col: usize, m: usize) -> Result<Patch> {
    check_odd_side(m)?;
    if row >= plane.height() || col >= plane.width() {
        return Err(FusionError::invalid(format!(
            "pixel ({row}, {col}) outside {}x{} plane",
            plane.width(),
            plane.height()
        )));
    }
    let mut values = vec![0.0; m * m];
    fill_patch(plane, row, col, m, &mut values);
    Ok(Patch { m, values })
}

/// Writes the clamp-to-edge window around `(row, col)` into `out` (length `m*m`).
pub(crate) fn fill_patch(plane: &Plane, row: usize, col: usize, m: usize, out: &mut [f64]) {
    let half = (m / 2) as isize;
    let (r0, c0) = (row as isize, col as isize);
    let interior =
        row >= m / 2 && col >= m / 2 && row + m / 2 < plane.height() && col + m / 2 < plane.width();
    if interior {
        let w = plane.width();
        let data = plane.data();
        for (dr, chunk) in out.chunks_exact_mut(m).enumerate() {
            let start = (row + dr - m / 2) * w + col - m / 2;
            chunk.copy_from_slice(&data[start..start + m]);
        }
        return;
    }
    let mut k = 0;
    for dr in -half..=half {
        for dc in -half..=half {
            out[k] = plane.get_clamped(r0 + dr, c0 + dc);
            k += 1;
        }
    }
}
