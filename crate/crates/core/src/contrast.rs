//! Contrast transfer.
//!
//! For every pixel a local affine map `v ~ slope * n + bias` is fitted from the
//! near-infrared patch `n` to the denoised visible luminance patch `v`, by
//! weighted least squares with a ridge pull toward a contrast prior `s0`:
//!
//! ```text
//! min_s  sum_k w_k (p_k - slope q_k - bias)^2 + mu_c |s - s0|^2
//! ```
//!
//! The new near-infrared luminance is the map applied to the center pixel of the
//! near-infrared patch. The slope field is kept for the color transfer.

use rayon::prelude::*;

use crate::config::FusionConfig;
use crate::error::{FusionError, Result};
use crate::raster::{check_odd_side, fill_patch, Patch, Plane};

/// Floor on patch averages in the contrast ratios.
pub const EPS_AVG: f64 = 1e-4;

/// Slope and bias of a local affine map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub slope: f64,
    pub bias: f64,
}

impl AffineMap {
    pub const fn new(slope: f64, bias: f64) -> Self {
        Self { slope, bias }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.bias
    }
}

/// Per-pixel affine maps over the image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMapField {
    pub slope: Plane,
    pub bias: Plane,
}

impl AffineMapField {
    pub fn width(&self) -> usize {
        self.slope.width()
    }

    pub fn height(&self) -> usize {
        self.slope.height()
    }

    pub fn at(&self, row: usize, col: usize) -> AffineMap {
        AffineMap::new(self.slope.get(row, col), self.bias.get(row, col))
    }

    /// Field with the same map at every pixel.
    pub fn uniform(width: usize, height: usize, map: AffineMap) -> Result<Self> {
        Ok(Self {
            slope: Plane::filled(width, height, map.slope)?,
            bias: Plane::filled(width, height, map.bias)?,
        })
    }
}

/// Regression data of one pixel. The all-ones bias column of the design
/// matrix is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSystem {
    /// Visible luminance patch (regression target).
    pub p: Vec<f64>,
    /// Near-infrared patch (slope column of the design matrix).
    pub q: Vec<f64>,
    /// Diagonal weights.
    pub w: Vec<f64>,
    pub s0: AffineMap,
    pub mu_c: f64,
}

/// `w(dr, dc) = 1 / (1 + sqrt(dr^2 + dc^2))` over an `m`x`m` window, row-major.
pub fn distance_weights(m: usize) -> Result<Vec<f64>> {
    check_odd_side(m)?;
    let half = (m / 2) as isize;
    let mut w = Vec::with_capacity(m * m);
    for dr in -half..=half {
        for dc in -half..=half {
            w.push(1.0 / (1.0 + ((dr * dr + dc * dc) as f64).sqrt()));
        }
    }
    Ok(w)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    // shifted by the first sample so constant patches give their value exactly
    let mean = v[0] + v.iter().map(|x| x - v[0]).sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

fn prior_from_slices(ngi: &[f64], vci: &[f64]) -> AffineMap {
    let c = ngi.len() / 2;
    let (avg_n, var_n) = mean_var(ngi);
    let (avg_v, var_v) = mean_var(vci);
    let ratio_n = ngi[c] / avg_n.max(EPS_AVG);
    let ratio_v = vci[c] / avg_v.max(EPS_AVG);
    let total = var_n + var_v;
    let omega_n = if total > 0.0 { var_n / total } else { 0.5 };
    AffineMap::new(omega_n * ratio_n + (1.0 - omega_n) * ratio_v, 0.0)
}

/// Local contrast prior: a variance-weighted blend of the center-to-mean
/// ratios of the two patches. The bias prior is zero.
pub fn compute_prior(ngi_patch: &Patch, vci_lum_patch: &Patch) -> Result<AffineMap> {
    if ngi_patch.side() != vci_lum_patch.side() {
        return Err(FusionError::invalid(format!(
            "patch sides differ: {} vs {}",
            ngi_patch.side(),
            vci_lum_patch.side()
        )));
    }
    Ok(prior_from_slices(
        ngi_patch.values(),
        vci_lum_patch.values(),
    ))
}

fn solve_slices(p: &[f64], q: &[f64], w: &[f64], s0: AffineMap, mu: f64) -> AffineMap {
    let mut sw = 0.0;
    let mut swq = 0.0;
    let mut swp = 0.0;
    let mut swqq = 0.0;
    for ((&pk, &qk), &wk) in p.iter().zip(q).zip(w) {
        sw += wk;
        swq += wk * qk;
        swp += wk * pk;
        swqq += wk * qk * qk;
    }
    let q_bar = swq / sw;
    let p_bar = swp / sw;
    // Centered second moments keep the determinant accurate for flat patches.
    let mut cqq = 0.0;
    let mut cqp = 0.0;
    for ((&pk, &qk), &wk) in p.iter().zip(q).zip(w) {
        let dq = qk - q_bar;
        cqq += wk * dq * dq;
        cqp += wk * dq * (pk - p_bar);
    }

    // A = [[swqq + mu, swq], [swq, sw + mu]], b = [swqp + mu s0.slope, swp + mu s0.bias]
    let det = sw * cqq + mu * (swqq + sw) + mu * mu;
    let slope_num = sw * cqp + mu * (cqp + q_bar * p_bar * sw + sw * s0.slope) + mu * mu * s0.slope
        - mu * swq * s0.bias;
    let bias_num = swp * cqq - swq * cqp + mu * swqq * s0.bias + mu * swp + mu * mu * s0.bias
        - mu * swq * s0.slope;
    AffineMap::new(slope_num / det, bias_num / det)
}

/// Closed-form ridge solution `(Q^T W Q + mu I)^-1 (Q^T W p + mu s0)`.
pub fn solve_affine(sys: &PatchSystem) -> Result<AffineMap> {
    let n = sys.p.len();
    if n == 0 || sys.q.len() != n || sys.w.len() != n {
        return Err(FusionError::invalid(format!(
            "patch system lengths differ: p={}, q={}, w={}",
            n,
            sys.q.len(),
            sys.w.len()
        )));
    }
    if sys.mu_c.is_nan() || sys.mu_c <= 0.0 {
        return Err(FusionError::invalid(format!(
            "mu_c must be > 0, got {}",
            sys.mu_c
        )));
    }
    if sys.w.iter().any(|&w| w < 0.0) {
        return Err(FusionError::invalid("weights must be non-negative"));
    }
    Ok(solve_slices(&sys.p, &sys.q, &sys.w, sys.s0, sys.mu_c))
}

/// Fits the per-pixel affine maps and applies each to its center
/// near-infrared pixel. Output is clamped to `[0, 1]`.
pub fn contrast_transfer_image(
    vci_lum_denoised: &Plane,
    ngi: &Plane,
    cfg: &FusionConfig,
) -> Result<(Plane, AffineMapField)> {
    vci_lum_denoised.ensure_same_size(ngi)?;
    let m = cfg.patch_m;
    let weights = distance_weights(m)?;
    if cfg.mu_c.is_nan() || cfg.mu_c <= 0.0 {
        return Err(FusionError::invalid(format!(
            "mu_c must be > 0, got {}",
            cfg.mu_c
        )));
    }
    let (w, h) = (ngi.width(), ngi.height());

    let rows: Vec<Vec<(f64, AffineMap)>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut p = vec![0.0; m * m];
            let mut q = vec![0.0; m * m];
            (0..w)
                .map(|c| {
                    fill_patch(vci_lum_denoised, r, c, m, &mut p);
                    fill_patch(ngi, r, c, m, &mut q);
                    let s0 = prior_from_slices(&q, &p);
                    let s = solve_slices(&p, &q, &weights, s0, cfg.mu_c);
                    (s.apply(ngi.get(r, c)).clamp(0.0, 1.0), s)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(w * h);
    let mut slope = Vec::with_capacity(w * h);
    let mut bias = Vec::with_capacity(w * h);
    for (v, s) in rows.into_iter().flatten() {
        out.push(v);
        slope.push(s.slope);
        bias.push(s.bias);
    }
    Ok((
        Plane::new(w, h, out)?,
        AffineMapField {
            slope: Plane::new(w, h, slope)?,
            bias: Plane::new(w, h, bias)?,
        },
    ))
}
