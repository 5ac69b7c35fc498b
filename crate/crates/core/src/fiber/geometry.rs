use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Step-free description of a graded-index fiber. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberGeometry {
    pub core_radius: f64,
    pub numerical_aperture: f64,
    pub core_index: f64,
    pub wavelength: f64,
    pub length: f64,
    /// Nonlinear index, m²/W.
    pub n2: f64,
    /// Effective core area, m².
    pub core_area: f64,
}

impl Default for FiberGeometry {
    fn default() -> Self {
        let core_radius = 25e-6;
        Self {
            core_radius,
            numerical_aperture: 0.20,
            core_index: 1.47,
            wavelength: 1030e-9,
            length: 5.0,
            n2: 2.7e-20,
            core_area: PI * core_radius * core_radius,
        }
    }
}

impl FiberGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.core_radius,
            self.numerical_aperture,
            self.core_index,
            self.wavelength,
            self.length,
            self.n2,
            self.core_area,
        ];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Config("fiber geometry values must be positive and finite".into()));
        }
        if self.numerical_aperture >= self.core_index {
            return Err(Error::Config("numerical aperture must be below the core index".into()));
        }
        Ok(())
    }

    /// Relative index difference Δ = NA² / (2 n²).
    pub fn index_contrast(&self) -> f64 {
        self.numerical_aperture.powi(2) / (2.0 * self.core_index.powi(2))
    }

    /// Propagation-constant spacing between adjacent mode groups, rad/m.
    pub fn group_spacing(&self) -> f64 {
        (2.0 * self.index_contrast()).sqrt() / self.core_radius
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    /// 1/e field radius of the fundamental mode of the parabolic profile.
    pub fn mode_waist(&self) -> f64 {
        let w2 = 2.0 * self.core_radius / (self.wavenumber() * self.core_index * (2.0 * self.index_contrast()).sqrt());
        w2.sqrt()
    }

    /// n2·ω0/(c·A), the physical nonlinear prefactor in 1/(W·m).
    pub fn physical_gamma(&self) -> f64 {
        self.n2 * self.angular_frequency() / (SPEED_OF_LIGHT * self.core_area)
    }

    pub(crate) fn hash_into(&self, h: &mut crate::hashing::Hasher) {
        h.f64s(&[
            self.core_radius,
            self.numerical_aperture,
            self.core_index,
            self.wavelength,
            self.length,
            self.n2,
            self.core_area,
        ]);
    }
}

/// Numerical and encoding parameters of the simulated optics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    /// Grid points per side; must be a multiple of 32.
    pub grid: usize,
    pub dz: f64,
    /// Nonlinear coefficient folded into one real, in units where
    /// Σ|A|² = power_scale.
    pub gamma_tilde: f64,
    /// Input beam waist.
    pub w0: f64,
    pub mode_count: usize,
    pub seed: u64,
    /// Disorder strength in units of the group spacing.
    pub coupling_strength: f64,
    pub power_scale: f64,
    pub prune_threshold: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self::calibrated(&FiberGeometry::default(), std::f64::consts::PI)
    }
}

impl OpticsConfig {
    /// Defaults with γ̃ chosen so a lone fundamental mode at unit power picks up
    /// `phase` radians of self-phase over the fiber length.
    pub fn calibrated(geom: &FiberGeometry, phase: f64) -> Self {
        let w = geom.mode_waist();
        let eta0 = 1.0 / (PI * w * w);
        Self {
            grid: 64,
            dz: 1e-3,
            gamma_tilde: phase / (eta0 * geom.length),
            w0: 2.0 * w,
            mode_count: 45,
            seed: 1,
            coupling_strength: 0.5,
            power_scale: 1.0,
            prune_threshold: 1e-3,
        }
    }

    pub fn validate(&self, geom: &FiberGeometry) -> Result<()> {
        geom.validate()?;
        if self.grid < 32 || self.grid % 32 != 0 {
            return Err(Error::Config(format!("grid must be a positive multiple of 32, got {}", self.grid)));
        }
        if !(self.dz > 0.0 && self.dz <= geom.length) {
            return Err(Error::Config(format!("dz must lie in (0, L], got {}", self.dz)));
        }
        for (name, v) in [
            ("gamma_tilde", self.gamma_tilde),
            ("coupling_strength", self.coupling_strength),
            ("prune_threshold", self.prune_threshold),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and non-negative")));
            }
        }
        if !(self.w0 > 0.0 && self.w0.is_finite()) || !(self.power_scale > 0.0 && self.power_scale.is_finite()) {
            return Err(Error::Config("w0 and power_scale must be positive".into()));
        }
        super::modes::groups_for(self.mode_count)?;
        Ok(())
    }

    pub(crate) fn hash_into(&self, h: &mut crate::hashing::Hasher) {
        h.u64(self.grid as u64);
        h.u64(self.mode_count as u64);
        h.u64(self.seed);
        h.f64s(&[
            self.dz,
            self.gamma_tilde,
            self.w0,
            self.coupling_strength,
            self.power_scale,
            self.prune_threshold,
        ]);
    }
}
