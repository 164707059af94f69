//! Fusion configuration and its TOML file format.
//!
//! Every key is optional; missing keys take the defaults below and unknown keys
//! are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::colortransfer::SlopeClamp;
use crate::denoise::NlmParams;
use crate::detail::DetailSolverParams;
use crate::error::{FusionError, Result};

/// Continuation schedule of the detail solver. `beta0 = None` means
/// `2 * mu_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSchedule {
    pub beta0: Option<f64>,
    pub beta_growth: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub inner_tol: f64,
}

impl Default for SolverSchedule {
    fn default() -> Self {
        Self {
            beta0: None,
            beta_growth: 2.0,
            outer_iters: 20,
            inner_iters: 10,
            inner_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Odd side of the regression patches.
    pub patch_m: usize,
    /// Weight of the contrast prior.
    pub mu_c: f64,
    /// Weight of the detail fidelity term.
    pub mu_d: f64,
    pub nlm_initial: NlmParams,
    pub nlm_base: NlmParams,
    pub detail_solver: SolverSchedule,
    pub slope_clamp: SlopeClamp,
    pub dump_intermediates: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            patch_m: 5,
            mu_c: 0.2,
            mu_d: 0.1,
            nlm_initial: NlmParams::default(),
            nlm_base: NlmParams::default(),
            detail_solver: SolverSchedule::default(),
            slope_clamp: SlopeClamp::default(),
            dump_intermediates: false,
        }
    }
}

impl FusionConfig {
    pub fn detail_params(&self) -> DetailSolverParams {
        let s = &self.detail_solver;
        DetailSolverParams {
            mu_d: self.mu_d,
            beta0: s.beta0.unwrap_or(2.0 * self.mu_d),
            beta_growth: s.beta_growth,
            outer_iters: s.outer_iters,
            inner_iters: s.inner_iters,
            inner_tol: s.inner_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_m < 3 || self.patch_m.is_multiple_of(2) {
            return Err(FusionError::Config(format!(
                "patch_m must be odd and >= 3, got {}",
                self.patch_m
            )));
        }
        if !(self.mu_c > 0.0 && self.mu_c.is_finite()) {
            return Err(FusionError::Config(format!(
                "mu_c must be > 0, got {}",
                self.mu_c
            )));
        }
        self.nlm_initial.validate()?;
        self.nlm_base.validate()?;
        self.detail_params().validate()?;
        self.slope_clamp.validate()?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: FusionConfig =
            toml::from_str(text).map_err(|e| FusionError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
            .map_err(|e| FusionError::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = FusionConfig::default();
        cfg.validate().unwrap();
        let d = cfg.detail_params();
        assert_eq!(d.beta0, 0.2);
        assert_eq!(d.outer_iters, 20);
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(
            FusionConfig::from_toml_str("").unwrap(),
            FusionConfig::default()
        );
    }

    #[test]
    fn partial_document_overrides_only_named_keys() {
        let cfg = FusionConfig::from_toml_str(
            "mu_c = 0.5\nnlm_initial.h = 0.07\n[detail_solver]\nouter_iters = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.mu_c, 0.5);
        assert_eq!(cfg.nlm_initial.h, Some(0.07));
        assert_eq!(cfg.nlm_initial.patch_radius, 3);
        assert_eq!(cfg.detail_solver.outer_iters, 3);
        assert_eq!(cfg.mu_d, 0.1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FusionConfig::from_toml_str("mu_x = 1.0").is_err());
        assert!(FusionConfig::from_toml_str("[nlm_base]\nradius = 2").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(FusionConfig::from_toml_str("patch_m = 4").is_err());
        assert!(FusionConfig::from_toml_str("mu_c = 0.0").is_err());
        assert!(FusionConfig::from_toml_str("mu_d = -1.0").is_err());
        assert!(FusionConfig::from_toml_str("[slope_clamp]\nmax_gain = 0.5").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn toml_round_trip(
                half in 1usize..5,
                mu_c in 1e-6..10.0f64,
                mu_d in 1e-6..10.0f64,
                h in proptest::option::of(1e-3..1.0f64),
                sigma in proptest::option::of(0.0..1.0f64),
                beta0 in proptest::option::of(1e-3..10.0f64),
                outer in 1usize..50,
                eps in 1e-3..1.0f64,
                gain in 1.0..20.0f64,
                dump in any::<bool>(),
            ) {
                let mut cfg = FusionConfig {
                    patch_m: 2 * half + 1,
                    mu_c,
                    mu_d,
                    dump_intermediates: dump,
                    ..FusionConfig::default()
                };
                cfg.nlm_initial.h = h;
                cfg.nlm_base.sigma = sigma;
                cfg.detail_solver.beta0 = beta0;
                cfg.detail_solver.outer_iters = outer;
                cfg.slope_clamp.eps_slope = eps;
                cfg.slope_clamp.max_gain = gain;
                let back = FusionConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
                prop_assert_eq!(back, cfg);
            }
        }
    }
}
