//! Symmetric second-order tensors in packed (Voigt-ordered) storage and the
//! pointwise stress measures used by the damage criteria.
//!
//! Only the independent components are stored, so every value of these types
//! is symmetric by construction.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Operations shared by the 2D and 3D symmetric tensors.
pub trait SymTensor: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    /// Spatial dimension `n`.
    const DIM: usize;

    fn trace(&self) -> f64;

    /// Full contraction `a : b = Σ_ij a_ij b_ij`.
    fn ddot(&self, other: &Self) -> f64;

    /// `s · I`.
    fn scaled_identity(s: f64) -> Self;

    /// Ratio `c` between the spherical and deviatoric terms of the
    /// shear-compression criterion for a given `κ`.
    fn criterion_factor(kappa: f64) -> f64;

    /// Largest shear stress on Mohr's circle, `(λ_max − λ_min) / 2`.
    fn max_shear(&self) -> f64;

    fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }
}

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

/// Symmetric 3×3 tensor, Voigt order `(xx, yy, zz, yz, xz, xy)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub yz: f64,
    pub xz: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Builds the tensor from a full matrix, symmetrizing the off-diagonal.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Self {
        Self::new(m[0][0], m[1][1], 0.5 * (m[0][1] + m[1][0]))
    }

    pub fn to_matrix(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }
}

impl SymTensor3 {
    pub const fn new(xx: f64, yy: f64, zz: f64, yz: f64, xz: f64, xy: f64) -> Self {
        Self { xx, yy, zz, yz, xz, xy }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, c, 0.0, 0.0, 0.0)
    }

    pub fn det(&self) -> f64 {
        self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Self {
        Self::new(
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[1][2] + m[2][1]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[0][1] + m[1][0]),
        )
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.xx * s, self.yy * s, self.xy * s)
    }
}

impl Neg for SymTensor2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Add for SymTensor3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.xx + o.xx,
            self.yy + o.yy,
            self.zz + o.zz,
            self.yz + o.yz,
            self.xz + o.xz,
            self.xy + o.xy,
        )
    }
}

impl Sub for SymTensor3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.xx - o.xx,
            self.yy - o.yy,
            self.zz - o.zz,
            self.yz - o.yz,
            self.xz - o.xz,
            self.xy - o.xy,
        )
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(
            self.xx * s,
            self.yy * s,
            self.zz * s,
            self.yz * s,
            self.xz * s,
            self.xy * s,
        )
    }
}

impl Neg for SymTensor3 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl SymTensor for SymTensor2 {
    const DIM: usize = 2;

    fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    fn ddot(&self, o: &Self) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    fn scaled_identity(s: f64) -> Self {
        Self::new(s, s, 0.0)
    }

    fn criterion_factor(kappa: f64) -> f64 {
        kappa
    }

    fn max_shear(&self) -> f64 {
        0.5 * discriminant_2d(self).sqrt()
    }
}

impl SymTensor for SymTensor3 {
    const DIM: usize = 3;

    fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    fn ddot(&self, o: &Self) -> f64 {
        self.xx * o.xx
            + self.yy * o.yy
            + self.zz * o.zz
            + 2.0 * (self.yz * o.yz + self.xz * o.xz + self.xy * o.xy)
    }

    fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s, s)
    }

    fn criterion_factor(kappa: f64) -> f64 {
        2.0 * kappa / 3.0
    }

    fn max_shear(&self) -> f64 {
        let inv = CardanoInvariants::of(self);
        if inv.is_hydrostatic() {
            return 0.0;
        }
        // λ_max − λ_min = 2√(3p) cos(θ − π/6)
        (3.0 * inv.p).sqrt() * (inv.theta() - std::f64::consts::FRAC_PI_6).cos()
    }
}

/// Spherical/deviatoric split `ε = εˢ + εᵈ` with `εˢ = (tr ε / n) I`.
pub fn sph_dev_split<T: SymTensor>(t: &T) -> (T, T) {
    let sph = T::scaled_identity(t.trace() / T::DIM as f64);
    (sph, *t - sph)
}

pub fn spherical<T: SymTensor>(t: &T) -> T {
    T::scaled_identity(t.trace() / T::DIM as f64)
}

pub fn deviatoric<T: SymTensor>(t: &T) -> T {
    *t - spherical(t)
}

/// `tr(σ)² − 4 det σ`, clamped at zero. Mathematically non-negative for a
/// symmetric tensor; roundoff can push it slightly below.
fn discriminant_2d(s: &SymTensor2) -> f64 {
    // Written as a sum of squares so cancellation cannot make it negative.
    let half_diff = 0.5 * (s.xx - s.yy);
    (4.0 * (half_diff * half_diff + s.xy * s.xy)).max(0.0)
}

/// Principal values of a 2D tensor, `λ₁ ≥ λ₂`.
pub fn principal_stresses_2d(s: &SymTensor2) -> (f64, f64) {
    let tr = s.trace();
    let root = discriminant_2d(s).sqrt();
    (0.5 * (tr + root), 0.5 * (tr - root))
}

/// Invariants entering the trigonometric solution of the 3D characteristic
/// cubic.
#[derive(Clone, Copy, Debug)]
pub struct CardanoInvariants {
    /// `tr(σ)/3`
    pub m: f64,
    /// `(1/6) Σ (σ − mI)²_ij`
    pub p: f64,
    /// `(1/2) det(σ − mI)`
    pub q: f64,
}

impl CardanoInvariants {
    pub fn of(s: &SymTensor3) -> Self {
        let m = s.trace() / 3.0;
        let dev = *s - SymTensor3::scaled_identity(m);
        Self {
            m,
            p: dev.ddot(&dev) / 6.0,
            q: 0.5 * dev.det(),
        }
    }

    fn is_hydrostatic(&self) -> bool {
        // p is a variance of the eigenvalues; below this the spread is lost in
        // the rounding of m anyway.
        self.p <= (f64::EPSILON * self.m).powi(2)
    }

    /// `θ = atan2(√(p³ − q²), q) / 3`, in `[0, π/3]`.
    pub fn theta(&self) -> f64 {
        let radicand = (self.p * self.p * self.p - self.q * self.q).max(0.0);
        radicand.sqrt().atan2(self.q) / 3.0
    }
}

/// Principal values of a 3D tensor by Cardano's trigonometric formula.
///
/// Returned as `(λ₁, λ₂, λ₃)` with `λ₁ = m + 2√p cos θ` the largest,
/// `λ₂ = m − 2√p cos(θ − π/3)` the smallest and
/// `λ₃ = m − 2√p cos(θ + π/3)` the intermediate value.
pub fn principal_stresses_3d(s: &SymTensor3) -> (f64, f64, f64) {
    use std::f64::consts::FRAC_PI_3;

    let inv = CardanoInvariants::of(s);
    if inv.is_hydrostatic() {
        return (inv.m, inv.m, inv.m);
    }
    let theta = inv.theta();
    let r = 2.0 * inv.p.sqrt();
    (
        inv.m + r * theta.cos(),
        inv.m - r * (theta - FRAC_PI_3).cos(),
        inv.m - r * (theta + FRAC_PI_3).cos(),
    )
}

/// `√(½ σᵈ:σᵈ)`, which equals `√(3p)` in 3D.
///
/// In 2D this coincides with [`SymTensor::max_shear`]; in 3D it is the upper
/// bound of the Mohr's-circle shear, attained when the intermediate
/// principal value equals the mean stress.
pub fn deviatoric_shear_intensity<T: SymTensor>(s: &T) -> f64 {
    let d = deviatoric(s);
    (0.5 * d.ddot(&d)).sqrt()
}

/// `σᵈ:σᵈ − c σˢ:σˢ` with `c = κ` in 2D and `c = 2κ/3` in 3D.
///
/// Positive values mean the shear-compression damage condition holds.
pub fn shear_compression_measure<T: SymTensor>(s: &T, kappa: f64) -> f64 {
    let (sph, dev) = sph_dev_split(s);
    dev.ddot(&dev) - T::criterion_factor(kappa) * sph.ddot(&sph)
}
