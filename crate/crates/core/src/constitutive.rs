//! Pointwise constitutive laws of the three damage models.
//!
//! All models use the quadratic degradation `a(α) = (1 − α)²` and the
//! quadratic dissipation `w(α) = w₁ α²`. The "bulk density" of a model is the
//! α-dependent integrand minimized in the damage step, without `w(α)` and
//! without the gradient term.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::tensor::{sph_dev_split, SymTensor, SymTensor2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DamageModel {
    /// Whole stiffness degraded by `a(α)`.
    Isotropic,
    /// Only the deviatoric stiffness is degraded; the spherical part survives.
    Shear,
    /// Stress degraded isotropically, damage driven by `σᵈ:σᵈ − c σˢ:σˢ`.
    ShearCompression,
}

impl DamageModel {
    pub const ALL: [DamageModel; 3] = [
        DamageModel::Isotropic,
        DamageModel::Shear,
        DamageModel::ShearCompression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DamageModel::Isotropic => "isotropic",
            DamageModel::Shear => "shear",
            DamageModel::ShearCompression => "shear-compression",
        }
    }
}

impl fmt::Display for DamageModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DamageModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isotropic" => Ok(DamageModel::Isotropic),
            "shear" => Ok(DamageModel::Shear),
            "shear-compression" | "shear_compression" => Ok(DamageModel::ShearCompression),
            other => Err(format!(
                "unknown model `{other}` (expected isotropic, shear or shear-compression)"
            )),
        }
    }
}

fn check_unit(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::DamageOutOfRange(alpha))
    }
}

/// `(a, a′, a″)` for `a(α) = (1 − α)²`, without range checks.
#[inline]
pub(crate) fn degradation_poly(alpha: f64) -> (f64, f64, f64) {
    let s = 1.0 - alpha;
    (s * s, -2.0 * s, 2.0)
}

/// `(a², (a²)′, (a²)″)` for `a(α) = (1 − α)²`.
#[inline]
fn degradation_squared_poly(alpha: f64) -> (f64, f64, f64) {
    let s = 1.0 - alpha;
    let s2 = s * s;
    (s2 * s2, -4.0 * s2 * s, 12.0 * s2)
}

/// `(w, w′, w″)` for `w(α) = w₁ α²`.
#[inline]
pub(crate) fn dissipation_poly(alpha: f64, w1: f64) -> (f64, f64, f64) {
    (w1 * alpha * alpha, 2.0 * w1 * alpha, 2.0 * w1)
}

/// Degradation `a(α) = (1 − α)²` and its derivative.
pub fn degradation(alpha: f64) -> Result<(f64, f64)> {
    check_unit(alpha)?;
    let (a, da, _) = degradation_poly(alpha);
    Ok((a, da))
}

/// Local dissipation `w(α) = w₁ α²` and its derivative.
pub fn dissipation(alpha: f64, w1: f64) -> Result<(f64, f64)> {
    check_unit(alpha)?;
    let (w, dw, _) = dissipation_poly(alpha, w1);
    Ok((w, dw))
}

/// α-independent strain measures of one material point.
///
/// The damage step re-evaluates the bulk density many times at frozen strain,
/// so these are computed once per element and sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StrainBrackets {
    /// `A₀ε:ε`
    pub hooke: f64,
    /// `(λ + μ) tr(ε)² / 2`, the damage-free spherical energy of the shear model.
    pub spherical_energy: f64,
    /// `μ εᵈ:εᵈ`
    pub deviatoric_energy: f64,
    /// `(A₀ε)ᵈ:(A₀ε)ᵈ`
    pub dev_stress_sq: f64,
    /// `(A₀ε)ˢ:(A₀ε)ˢ`
    pub sph_stress_sq: f64,
}

impl StrainBrackets {
    pub fn new(eps: &SymTensor2, mat: &MaterialParams) -> Self {
        let sigma0 = mat.hooke(eps);
        let (_, eps_dev) = sph_dev_split(eps);
        let (s_sph, s_dev) = sph_dev_split(&sigma0);
        let tr = eps.trace();
        Self {
            hooke: sigma0.ddot(eps),
            spherical_energy: (mat.lambda + mat.mu) * tr * tr / 2.0,
            deviatoric_energy: mat.mu * eps_dev.ddot(&eps_dev),
            dev_stress_sq: s_dev.ddot(&s_dev),
            sph_stress_sq: s_sph.ddot(&s_sph),
        }
    }
}

impl DamageModel {
    /// Bulk density and its first two α-derivatives at frozen strain.
    #[inline]
    pub fn bulk_density(self, b: &StrainBrackets, alpha: f64, mat: &MaterialParams) -> (f64, f64, f64) {
        match self {
            DamageModel::Isotropic => {
                let (a, da, dda) = degradation_poly(alpha);
                (0.5 * a * b.hooke, 0.5 * da * b.hooke, 0.5 * dda * b.hooke)
            }
            DamageModel::Shear => {
                let (a, da, dda) = degradation_poly(alpha);
                (
                    b.spherical_energy + a * b.deviatoric_energy,
                    da * b.deviatoric_energy,
                    dda * b.deviatoric_energy,
                )
            }
            DamageModel::ShearCompression => {
                let (a2, da2, dda2) = degradation_squared_poly(alpha);
                let c = SymTensor2::criterion_factor(mat.kappa);
                let bracket = (b.dev_stress_sq - c * b.sph_stress_sq) / (2.0 * mat.young);
                (a2 * bracket, da2 * bracket, dda2 * bracket)
            }
        }
    }

    /// Plane-strain stiffness in Voigt form `[ε_xx, ε_yy, γ_xy] → [σ_xx, σ_yy, σ_xy]`
    /// for a given degradation value `a`.
    pub fn voigt_stiffness(self, a: f64, mat: &MaterialParams) -> [[f64; 3]; 3] {
        let (l, m) = (mat.lambda, mat.mu);
        match self {
            DamageModel::Isotropic | DamageModel::ShearCompression => [
                [a * (l + 2.0 * m), a * l, 0.0],
                [a * l, a * (l + 2.0 * m), 0.0],
                [0.0, 0.0, a * m],
            ],
            DamageModel::Shear => [
                [l + m + a * m, l + m - a * m, 0.0],
                [l + m - a * m, l + m + a * m, 0.0],
                [0.0, 0.0, a * m],
            ],
        }
    }
}

/// Stress of the model at strain `ε` and damage `α`.
pub fn stress(model: DamageModel, eps: &SymTensor2, alpha: f64, mat: &MaterialParams) -> SymTensor2 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let (a, _, _) = degradation_poly(alpha);
    match model {
        DamageModel::Isotropic | DamageModel::ShearCompression => mat.hooke(eps) * a,
        DamageModel::Shear => {
            let (sph, dev) = sph_dev_split(eps);
            let n = SymTensor2::DIM as f64;
            sph * (2.0 * mat.mu + n * mat.lambda) + dev * (2.0 * a * mat.mu)
        }
    }
}

/// α-dependent bulk energy density of the damage functional.
///
/// For the shear-compression model this is the criterion-generating potential
/// `a²/(2E) ((A₀ε)ᵈ:(A₀ε)ᵈ − κ (A₀ε)ˢ:(A₀ε)ˢ)`, which is negative when the
/// spherical term dominates.
pub fn elastic_energy_density(model: DamageModel, eps: &SymTensor2, alpha: f64, mat: &MaterialParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    model.bulk_density(&StrainBrackets::new(eps, mat), alpha, mat).0
}

/// `∂/∂α` of [`elastic_energy_density`] at fixed strain.
pub fn damage_driving_derivative(model: DamageModel, eps: &SymTensor2, alpha: f64, mat: &MaterialParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    model.bulk_density(&StrainBrackets::new(eps, mat), alpha, mat).1
}
