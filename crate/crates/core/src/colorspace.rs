//! RGB to decorrelated log-LMS (`l`, `alpha`, `beta`) conversion.
//!
//! Pixels go RGB -> LMS through a 3x3 cone-response matrix, each LMS component
//! is floored at `log_floor` and mapped by `log10`, then an orthonormal mixing
//! matrix separates luminance from the two opponent chrominance axes.

use crate::raster::{ColorImage, LabImage, Plane};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct LabConversionConstants {
    pub rgb_to_lms: Mat3,
    pub lms_to_rgb: Mat3,
    pub lab_mixing: Mat3,
    pub log_floor: f64,
}

/// Cone-response matrix of the classic decorrelated color-transfer space.
pub const RGB_TO_LMS: Mat3 = [
    [0.3811, 0.5783, 0.0402],
    [0.1967, 0.7244, 0.0782],
    [0.0241, 0.1288, 0.8444],
];

/// Half an 8-bit quantization step.
pub const DEFAULT_LOG_FLOOR: f64 = 1.0 / 510.0;

impl Default for LabConversionConstants {
    fn default() -> Self {
        Self::new(RGB_TO_LMS, DEFAULT_LOG_FLOOR)
    }
}

impl LabConversionConstants {
    pub fn new(rgb_to_lms: Mat3, log_floor: f64) -> Self {
        let s3 = 1.0 / 3f64.sqrt();
        let s6 = 1.0 / 6f64.sqrt();
        let s2 = 1.0 / 2f64.sqrt();
        Self {
            rgb_to_lms,
            lms_to_rgb: invert3(&rgb_to_lms).expect("RGB->LMS matrix must be invertible"),
            lab_mixing: [[s3, s3, s3], [s6, s6, -2.0 * s6], [s2, -s2, 0.0]],
            log_floor,
        }
    }

    #[inline]
    pub fn pixel_to_lab(&self, rgb: [f64; 3]) -> [f64; 3] {
        let lms = mul3(&self.rgb_to_lms, rgb);
        let log = lms.map(|v| v.max(self.log_floor).log10());
        mul3(&self.lab_mixing, log)
    }

    /// Inverse of [`pixel_to_lab`](Self::pixel_to_lab) without gamut clamping.
    #[inline]
    pub fn pixel_to_rgb_unclamped(&self, lab: [f64; 3]) -> [f64; 3] {
        let log = mul3_transposed(&self.lab_mixing, lab);
        let lms = log.map(|v| 10f64.powf(v));
        mul3(&self.lms_to_rgb, lms)
    }

    #[inline]
    pub fn pixel_to_rgb(&self, lab: [f64; 3]) -> [f64; 3] {
        self.pixel_to_rgb_unclamped(lab).map(|v| v.clamp(0.0, 1.0))
    }

    /// Luminance of the gray pixel `(g, g, g)`.
    #[inline]
    pub fn gray_luminance(&self, g: f64) -> f64 {
        self.pixel_to_lab([g, g, g])[0]
    }
}

#[inline]
pub fn mul3(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
fn mul3_transposed(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

pub fn invert3(m: &Mat3) -> Option<Mat3> {
    let cof =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let c00 = cof(1, 2, 1, 2);
    let c01 = -cof(1, 2, 0, 2);
    let c02 = cof(1, 2, 0, 1);
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    // adjugate = transpose of the cofactor matrix
    Some([
        [
            c00 * inv_det,
            -cof(0, 2, 1, 2) * inv_det,
            cof(0, 1, 1, 2) * inv_det,
        ],
        [
            c01 * inv_det,
            cof(0, 2, 0, 2) * inv_det,
            -cof(0, 1, 0, 2) * inv_det,
        ],
        [
            c02 * inv_det,
            -cof(0, 2, 0, 1) * inv_det,
            cof(0, 1, 0, 1) * inv_det,
        ],
    ])
}

pub fn rgb_to_lab(img: &ColorImage, k: &LabConversionConstants) -> LabImage {
    let (w, h) = (img.width(), img.height());
    let mut out = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    let [r, g, b] = img.planes();
    for i in 0..w * h {
        let lab = k.pixel_to_lab([r.data()[i], g.data()[i], b.data()[i]]);
        for (ch, v) in out.iter_mut().zip(lab) {
            ch.push(v);
        }
    }
    let [l, a, bb] = out;
    LabImage::new(
        Plane::from_raw(w, h, l),
        Plane::from_raw(w, h, a),
        Plane::from_raw(w, h, bb),
    )
    .expect("aligned planes")
}

/// Inverse conversion, clamped to `[0, 1]` per channel.
pub fn lab_to_rgb(img: &LabImage, k: &LabConversionConstants) -> ColorImage {
    let (w, h) = (img.width(), img.height());
    let mut out = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    let [l, a, b] = img.planes();
    for i in 0..w * h {
        let rgb = k.pixel_to_rgb([l.data()[i], a.data()[i], b.data()[i]]);
        for (ch, v) in out.iter_mut().zip(rgb) {
            ch.push(v);
        }
    }
    let [r, g, bb] = out;
    ColorImage::new(
        Plane::from_raw(w, h, r),
        Plane::from_raw(w, h, g),
        Plane::from_raw(w, h, bb),
    )
    .expect("aligned planes")
}

/// Maps gray intensities onto the luminance axis.
///
/// Each intensity `g` is read as the gray pixel `(g, g, g)`; its luminance is
/// tabulated at the 256 8-bit levels and linearly interpolated in between.
#[derive(Debug, Clone)]
pub struct GrayLift {
    table: [f64; 256],
}

impl GrayLift {
    pub fn new(k: &LabConversionConstants) -> Self {
        let mut table = [0.0; 256];
        for (i, t) in table.iter_mut().enumerate() {
            *t = k.gray_luminance(i as f64 / 255.0);
        }
        Self { table }
    }

    #[inline]
    pub fn lift(&self, g: f64) -> f64 {
        let x = g.clamp(0.0, 1.0) * 255.0;
        let i = (x.floor() as usize).min(254);
        let t = x - i as f64;
        self.table[i] * (1.0 - t) + self.table[i + 1] * t
    }

    pub fn lift_plane(&self, plane: &Plane) -> Plane {
        plane.map(|g| self.lift(g))
    }

    /// Inverse of [`lift`](Self::lift), clamped to `[0, 1]`.
    pub fn unlift(&self, l: f64) -> f64 {
        if l <= self.table[0] {
            return 0.0;
        }
        if l >= self.table[255] {
            return 1.0;
        }
        let i = self.table.partition_point(|&t| t <= l).clamp(1, 255) - 1;
        let (a, b) = (self.table[i], self.table[i + 1]);
        (i as f64 + (l - a) / (b - a)) / 255.0
    }

    /// Luminance of black and white.
    pub fn range(&self) -> (f64, f64) {
        (self.table[0], self.table[255])
    }

    /// Affine map of the luminance axis onto `[0, 1]`, black to 0 and white to 1.
    pub fn unit_scale(&self) -> UnitScale {
        let (lo, hi) = self.range();
        UnitScale { lo, span: hi - lo }
    }
}

/// Affine rescaling between luminance and `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale {
    lo: f64,
    span: f64,
}

impl UnitScale {
    #[inline]
    pub fn to_unit(&self, l: f64) -> f64 {
        (l - self.lo) / self.span
    }

    #[inline]
    pub fn from_unit(&self, u: f64) -> f64 {
        self.lo + u * self.span
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn lms_matrices_are_inverse() {
        let k = LabConversionConstants::default();
        let p = matmul(&k.rgb_to_lms, &k.lms_to_rgb);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-10, "{p:?}");
            }
        }
    }

    #[test]
    fn mixing_matrix_is_orthogonal() {
        let k = LabConversionConstants::default();
        let m = k.lab_mixing;
        let mt = [
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ];
        let p = matmul(&m, &mt);
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mid_gray_is_nearly_achromatic() {
        let k = LabConversionConstants::default();
        let [_, a, b] = k.pixel_to_lab([0.5, 0.5, 0.5]);
        assert!(a.abs() < 2e-3 && b.abs() < 2e-3, "{a} {b}");
    }

    #[test]
    fn pure_red_matches_hand_evaluation() {
        // LMS of (1,0,0) is the first column of the cone matrix.
        let l = 0.3811f64.log10();
        let m = 0.1967f64.log10();
        let s = 0.0241f64.log10();
        let expected = [
            (l + m + s) / 3f64.sqrt(),
            (l + m - 2.0 * s) / 6f64.sqrt(),
            (l - m) / 2f64.sqrt(),
        ];
        let got = LabConversionConstants::default().pixel_to_lab([1.0, 0.0, 0.0]);
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_lab_maps_to_unit_lms() {
        let k = LabConversionConstants::default();
        let expected = mul3(&k.lms_to_rgb, [1.0, 1.0, 1.0]).map(|v| v.clamp(0.0, 1.0));
        assert_eq!(k.pixel_to_rgb([0.0, 0.0, 0.0]), expected);
    }

    #[test]
    fn large_alpha_saturates_red_exactly() {
        let k = LabConversionConstants::default();
        let l = k.gray_luminance(0.5);
        let unclamped = k.pixel_to_rgb_unclamped([l, 0.0, 3.0]);
        assert!(unclamped[0] > 1.0);
        assert_eq!(k.pixel_to_rgb([l, 0.0, 3.0])[0], 1.0);
    }

    #[test]
    fn gray_luminance_inverts_to_gray() {
        let k = LabConversionConstants::default();
        for g in [0.05, 0.3, 0.5, 0.9] {
            let rgb = k.pixel_to_rgb([k.gray_luminance(g), 0.0, 0.0]);
            for c in rgb {
                assert!((c - g).abs() < 2e-3, "{g}: {rgb:?}");
            }
        }
    }

    #[test]
    fn gray_lift_matches_direct_luminance_on_levels_and_is_monotone() {
        let k = LabConversionConstants::default();
        let lift = GrayLift::new(&k);
        for i in 0..=255u8 {
            let g = f64::from(i) / 255.0;
            assert!((lift.lift(g) - k.gray_luminance(g)).abs() < 1e-12);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let v = lift.lift(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
        let (lo, hi) = lift.range();
        assert!(lo < hi);
        for i in 0..=200 {
            let g = i as f64 / 200.0;
            assert!((lift.unlift(lift.lift(g)) - g).abs() < 1e-12);
        }
        let s = lift.unit_scale();
        assert!(s.to_unit(lo).abs() < 1e-15 && (s.to_unit(hi) - 1.0).abs() < 1e-15);
        assert!((s.from_unit(s.to_unit(-1.3)) + 1.3).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_is_identity(
                r in DEFAULT_LOG_FLOOR..1.0f64,
                g in DEFAULT_LOG_FLOOR..1.0f64,
                b in DEFAULT_LOG_FLOOR..1.0f64,
            ) {
                let k = LabConversionConstants::default();
                // LMS stays above the floor for RGB above it: the rows are positive.
                let back = k.pixel_to_rgb(k.pixel_to_lab([r, g, b]));
                prop_assert!((back[0] - r).abs() < 1e-4);
                prop_assert!((back[1] - g).abs() < 1e-4);
                prop_assert!((back[2] - b).abs() < 1e-4);
            }

            #[test]
            fn achromatic_pixels_have_small_chroma(g in 0.0..=1.0f64) {
                let [_, a, b] = LabConversionConstants::default().pixel_to_lab([g, g, g]);
                prop_assert!(a.abs() < 2e-3 && b.abs() < 2e-3);
            }

            #[test]
            fn gray_luminance_is_strictly_increasing(g in DEFAULT_LOG_FLOOR..0.999f64, dg in 1e-4..1e-3f64) {
                let k = LabConversionConstants::default();
                prop_assert!(k.gray_luminance(g + dg) > k.gray_luminance(g));
            }
        }
    }
}
