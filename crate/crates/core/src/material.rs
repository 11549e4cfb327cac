use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{SymTensor, SymTensor2};

/// Lamé parameters `(λ, μ)` from Young's modulus and Poisson's ratio.
pub fn lame_parameters(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(Error::param("young_modulus", format!("must be positive, got {young}")));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(Error::param(
            "poisson_ratio",
            format!("must lie in (-1, 0.5), got {poisson}"),
        ));
    }
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    Ok((lambda, mu))
}

/// Elastic, fracture and loading parameters of the rock mass (SI units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub young: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Energy density dissipated by a complete homogeneous damage process.
    pub w1: f64,
    /// Internal length controlling the width of damage bands.
    pub ell: f64,
    /// Ratio between shear and normal stress in the shear-compression criterion.
    pub kappa: f64,
    pub density: f64,
    pub gravity: [f64; 2],
}

impl MaterialParams {
    pub fn new(
        young: f64,
        poisson: f64,
        w1: f64,
        ell: f64,
        kappa: f64,
        density: f64,
        gravity: [f64; 2],
    ) -> Result<Self> {
        let (lambda, mu) = lame_parameters(young, poisson)?;
        if !(w1 > 0.0) {
            return Err(Error::param("w1", format!("must be positive, got {w1}")));
        }
        if !(ell > 0.0) {
            return Err(Error::param("internal_length", format!("must be positive, got {ell}")));
        }
        if !(kappa >= 0.0) {
            return Err(Error::param("kappa", format!("must be non-negative, got {kappa}")));
        }
        if !(density >= 0.0) {
            return Err(Error::param("density", format!("must be non-negative, got {density}")));
        }
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::param("gravity", "must be finite"));
        }
        Ok(Self {
            young,
            poisson,
            lambda,
            mu,
            w1,
            ell,
            kappa,
            density,
            gravity,
        })
    }

    /// Parameters of the block-caving experiments: `E = 2.9e10 Pa`, `ν = 0.3`,
    /// `κ = 1`, `ρ = 2.7e3 kg/m³`, `g = (0, −9.8) m/s²`.
    pub fn rock(w1: f64, ell: f64) -> Self {
        Self::new(2.9e10, 0.3, w1, ell, 1.0, 2.7e3, [0.0, -9.8])
            .expect("reference rock parameters are valid")
    }

    /// Body force per unit volume `f = ρ g`.
    pub fn body_force(&self) -> [f64; 2] {
        [self.density * self.gravity[0], self.density * self.gravity[1]]
    }

    /// Undamaged plane-strain Hooke law `A₀ε = 2με + λ tr(ε) I`.
    pub fn hooke(&self, eps: &SymTensor2) -> SymTensor2 {
        *eps * (2.0 * self.mu) + SymTensor2::scaled_identity(self.lambda * eps.trace())
    }
}
