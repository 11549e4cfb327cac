//! Quasi-static gradient-damage simulation of a rock mass undergoing
//! block-caving extraction.
//!
//! Three damage models are available ([`DamageModel`]): isotropic stiffness
//! degradation, deviatoric-only (shear) degradation, and a shear-compression
//! model whose damage is driven by `σᵈ:σᵈ − κ σˢ:σˢ`. The displacement and
//! damage fields are discretized with P1 triangles and evolved step by step by
//! alternate minimization while a cavity is carved out of the mesh.
//!
//! The main entry points are [`evolution::Simulation`] for programmatic use
//! and [`config::Config`] for file-driven runs.

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod evolution;
pub mod material;
pub mod mesh;
pub mod output;
pub mod solvers;
pub mod sparse;
pub mod tensor;

pub use constitutive::DamageModel;
pub use error::{Error, Result};
pub use material::MaterialParams;
pub use mesh::{CavitySpec, Mesh, Rect, Split};
