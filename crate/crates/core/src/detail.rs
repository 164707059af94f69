//! Detail transfer.
//!
//! Both the contrast-transferred luminance and the captured near-infrared
//! luminance are split into an NLM base layer and a residual detail layer. The
//! detail layer of the former is then re-estimated by
//!
//! ```text
//! min_x  mu_d |x - d_o|^2 + sum_j |D_j x - D_j d_n|_1
//! ```
//!
//! with `D_1`, `D_2` the horizontal and vertical forward differences under
//! periodic boundaries, and added back onto its base layer.
//!
//! The solver is half-quadratic splitting with continuation: auxiliary
//! variables `y_j ~ D_j x - g_j` decouple the L1 term, the `y` step is a soft
//! threshold and the `x` step is a diagonal solve in the Fourier domain.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::config::FusionConfig;
use crate::denoise::{nlm_denoise_plane, NlmParams};
use crate::error::{FusionError, Result};
use crate::raster::Plane;

/// Base and detail layers of a plane; `base + detail` reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPair {
    pub base: Plane,
    pub detail: Plane,
}

impl LayerPair {
    pub fn recompose(&self) -> Plane {
        self.base
            .zip_map(&self.detail, |b, d| b + d)
            .expect("layers share dimensions")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailSolverParams {
    pub mu_d: f64,
    pub beta0: f64,
    pub beta_growth: f64,
    pub outer_iters: usize,
    /// Maximum `(y, x)` sweeps per penalty level.
    pub inner_iters: usize,
    /// Sweeps at a level stop once the relative change of `x` drops below this.
    pub inner_tol: f64,
}

impl DetailSolverParams {
    /// Schedule with `beta0 = 2 mu_d`, doubling, twenty levels, up to ten sweeps each.
    pub fn with_mu_d(mu_d: f64) -> Self {
        Self {
            mu_d,
            beta0: 2.0 * mu_d,
            beta_growth: 2.0,
            outer_iters: 20,
            inner_iters: 10,
            inner_tol: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(FusionError::Config(what.to_string()));
        if !(self.mu_d > 0.0 && self.mu_d.is_finite()) {
            return bad("mu_d must be > 0");
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return bad("beta0 must be > 0");
        }
        if !(self.beta_growth > 1.0 && self.beta_growth.is_finite()) {
            return bad("beta_growth must be > 1");
        }
        if self.outer_iters < 1 {
            return bad("outer_iters must be >= 1");
        }
        if self.inner_iters < 1 {
            return bad("inner_iters must be >= 1");
        }
        if self.inner_tol.is_nan() || self.inner_tol < 0.0 {
            return bad("inner_tol must be >= 0");
        }
        Ok(())
    }
}

/// Objective values of a detail solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Objective at the initial point followed by one value per outer
    /// iteration.
    pub objectives: Vec<f64>,
    /// Total number of `(y, x)` sweeps.
    pub sweeps: usize,
}

/// Splits `plane` into an NLM base layer and the residual.
pub fn decompose_layers(plane: &Plane, params: &NlmParams) -> Result<LayerPair> {
    let base = nlm_denoise_plane(plane, params)?;
    let detail = plane.zip_map(&base, |p, b| p - b)?;
    Ok(LayerPair { base, detail })
}

#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

/// Horizontal forward difference with wrap-around.
pub fn diff_h(x: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &x[r * w..(r + 1) * w];
        for c in 0..w {
            out[r * w + c] = row[(c + 1) % w] - row[c];
        }
    }
    out
}

/// Vertical forward difference with wrap-around.
pub fn diff_v(x: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let down = ((r + 1) % h) * w;
        for c in 0..w {
            out[r * w + c] = x[down + c] - x[r * w + c];
        }
    }
    out
}

/// Adjoint of [`diff_h`].
pub fn diff_h_adjoint(z: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &z[r * w..(r + 1) * w];
        for c in 0..w {
            out[r * w + c] = row[(c + w - 1) % w] - row[c];
        }
    }
    out
}

/// Adjoint of [`diff_v`].
pub fn diff_v_adjoint(z: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let up = ((r + h - 1) % h) * w;
        for c in 0..w {
            out[r * w + c] = z[up + c] - z[r * w + c];
        }
    }
    out
}

/// `mu_d |x - d_o|^2 + |D_h x - D_h d_n|_1 + |D_v x - D_v d_n|_1`.
pub fn detail_objective(x: &Plane, detail_o: &Plane, detail_n: &Plane, mu_d: f64) -> f64 {
    let (w, h) = (x.width(), x.height());
    let fid: f64 = x
        .data()
        .iter()
        .zip(detail_o.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let l1 = |dx: Vec<f64>, dn: Vec<f64>| -> f64 {
        dx.iter().zip(&dn).map(|(a, b)| (a - b).abs()).sum()
    };
    mu_d * fid
        + l1(diff_h(x.data(), w, h), diff_h(detail_n.data(), w, h))
        + l1(diff_v(x.data(), w, h), diff_v(detail_n.data(), w, h))
}

/// Exact solver of `(mu I + beta (D_h^T D_h + D_v^T D_v)) x = rhs` on a
/// periodic grid.
pub struct PeriodicPoisson {
    w: usize,
    h: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Eigenvalues of `D_h^T D_h + D_v^T D_v`, row-major.
    laplacian_eig: Vec<f64>,
}

impl PeriodicPoisson {
    pub fn new(w: usize, h: usize) -> Self {
        let mut planner = FftPlanner::new();
        let eig = |k: usize, n: usize| {
            let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
            4.0 * s * s
        };
        let mut laplacian_eig = Vec::with_capacity(w * h);
        for r in 0..h {
            for c in 0..w {
                laplacian_eig.push(eig(c, w) + eig(r, h));
            }
        }
        Self {
            w,
            h,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
            laplacian_eig,
        }
    }

    fn transform(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.w, self.h);
        row.process(buf);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = buf[r * w + c];
            }
            col.process(&mut column);
            for r in 0..h {
                buf[r * w + c] = column[r];
            }
        }
    }

    pub fn solve(&self, rhs: &[f64], mu: f64, beta: f64) -> Vec<f64> {
        let mut buf: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.row_fwd, &self.col_fwd);
        let scale = 1.0 / (self.w * self.h) as f64;
        for (z, &lam) in buf.iter_mut().zip(&self.laplacian_eig) {
            *z *= scale / (mu + beta * lam);
        }
        self.transform(&mut buf, &self.row_inv, &self.col_inv);
        buf.iter().map(|z| z.re).collect()
    }
}

/// Re-estimates the detail layer `detail_o` so that its gradients follow
/// those of `detail_n`.
pub fn solve_detail(
    detail_o: &Plane,
    detail_n: &Plane,
    params: &DetailSolverParams,
) -> Result<Plane> {
    solve_detail_with_report(detail_o, detail_n, params).map(|(x, _)| x)
}

pub fn solve_detail_with_report(
    detail_o: &Plane,
    detail_n: &Plane,
    params: &DetailSolverParams,
) -> Result<(Plane, SolveReport)> {
    detail_o.ensure_same_size(detail_n)?;
    params.validate()?;
    let (w, h) = (detail_o.width(), detail_o.height());
    let mu = params.mu_d;
    let poisson = PeriodicPoisson::new(w, h);
    let gh = diff_h(detail_n.data(), w, h);
    let gv = diff_v(detail_n.data(), w, h);

    let mut x = detail_o.data().to_vec();
    let objective =
        |x: &[f64]| detail_objective(&Plane::from_raw(w, h, x.to_vec()), detail_o, detail_n, mu);
    let mut objectives = vec![objective(&x)];
    let mut sweeps = 0;
    let mut beta = params.beta0;

    for _ in 0..params.outer_iters {
        let tau = 1.0 / (2.0 * beta);
        for _ in 0..params.inner_iters {
            let dh = diff_h(&x, w, h);
            let dv = diff_v(&x, w, h);
            // target of D_j x in the quadratic step: g_j + y_j
            let th: Vec<f64> = dh
                .iter()
                .zip(&gh)
                .map(|(d, g)| g + soft_threshold(d - g, tau))
                .collect();
            let tv: Vec<f64> = dv
                .iter()
                .zip(&gv)
                .map(|(d, g)| g + soft_threshold(d - g, tau))
                .collect();
            let ah = diff_h_adjoint(&th, w, h);
            let av = diff_v_adjoint(&tv, w, h);
            let rhs: Vec<f64> = detail_o
                .data()
                .iter()
                .zip(ah.iter().zip(&av))
                .map(|(o, (a, b))| mu * o + beta * (a + b))
                .collect();
            let next = poisson.solve(&rhs, mu, beta);
            sweeps += 1;
            let change: f64 = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            x = next;
            if change / norm < params.inner_tol {
                break;
            }
        }
        objectives.push(objective(&x));
        beta *= params.beta_growth;
    }

    Ok((Plane::new(w, h, x)?, SolveReport { objectives, sweeps }))
}

/// Decomposes both planes, re-estimates the detail layer of `new_ngi_lum`
/// against that of `ngi`, and adds it back onto the base. Output is clamped to
/// `[0, 1]`.
pub fn detail_transfer_image(
    new_ngi_lum: &Plane,
    ngi: &Plane,
    cfg: &FusionConfig,
) -> Result<Plane> {
    new_ngi_lum.ensure_same_size(ngi)?;
    let new_layers = decompose_layers(new_ngi_lum, &cfg.nlm_base)?;
    let ngi_layers = decompose_layers(ngi, &cfg.nlm_base)?;
    let detail = solve_detail(&new_layers.detail, &ngi_layers.detail, &cfg.detail_params())?;
    new_layers
        .base
        .zip_map(&detail, |b, d| (b + d).clamp(0.0, 1.0))
}
