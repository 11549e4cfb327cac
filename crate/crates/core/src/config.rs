//! Flat `key = value` run configuration.
//!
//! The file is a TOML document without tables. Every key is optional and
//! falls back to the value of [`Config::default`]:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `model` | `"shear-compression"` | `isotropic`, `shear` or `shear-compression` |
//! | `young_modulus` | `2.9e10` | Pa |
//! | `poisson_ratio` | `0.3` | |
//! | `density` | `2700.0` | kg/m³ |
//! | `gravity_x`, `gravity_y` | `0.0`, `-9.8` | m/s² |
//! | `w1` | `1e4` | J/m³ |
//! | `internal_length` | `75.0` | m |
//! | `kappa` | `1.0` | |
//! | `domain_x_min` … `domain_y_max` | `-1500, 1500, -500, 500` | m |
//! | `mesh_size` | `25.0` | m |
//! | `mesh_split` | `"diagonal"` | `diagonal` or `crossed` |
//! | `cavity` | `true` | carve the growing cavity |
//! | `cavity_x_start`, `cavity_growth` | `-500.0`, `40.0` | m, m/step |
//! | `cavity_half_height`, `cavity_y_center` | `20.0`, `0.0` | m |
//! | `final_step` | `15` | last step `T` |
//! | `am_tolerance`, `am_max_iter` | `1e-3`, `200` | stop on `‖Δα‖∞` |
//! | `damage_tolerance`, `damage_max_iter` | `1e-6`, `500` | KKT tolerance relative to `w1` |
//! | `linear_solver`, `linear_tolerance` | `"cholesky"`, `1e-10` | `cholesky` or `cg` |
//! | `bc_lateral`, `bc_up`, `bc_down`, `bc_cavity` | `roller-x`, `free`, `clamped`, `free` | |
//! | `output_dir` | `"output"` | |
//! | `continue_on_unconverged` | `false` | |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryConditions, EdgeCondition};
use crate::constitutive::DamageModel;
use crate::error::{Error, Result};
use crate::evolution::{AmSettings, Simulation};
use crate::material::MaterialParams;
use crate::mesh::{build_mesh, CavitySpec, Mesh, Rect, Split};
use crate::solvers::LinearSolverKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: DamageModel,
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub gravity_x: f64,
    pub gravity_y: f64,
    pub w1: f64,
    pub internal_length: f64,
    pub kappa: f64,
    pub domain_x_min: f64,
    pub domain_x_max: f64,
    pub domain_y_min: f64,
    pub domain_y_max: f64,
    pub mesh_size: f64,
    pub mesh_split: Split,
    pub cavity: bool,
    pub cavity_x_start: f64,
    pub cavity_growth: f64,
    pub cavity_half_height: f64,
    pub cavity_y_center: f64,
    pub final_step: usize,
    pub am_tolerance: f64,
    pub am_max_iter: usize,
    pub damage_tolerance: f64,
    pub damage_max_iter: usize,
    pub linear_solver: LinearSolverKind,
    pub linear_tolerance: f64,
    pub bc_lateral: EdgeCondition,
    pub bc_up: EdgeCondition,
    pub bc_down: EdgeCondition,
    pub bc_cavity: EdgeCondition,
    pub output_dir: PathBuf,
    pub continue_on_unconverged: bool,
}

impl Default for Config {
    fn default() -> Self {
        let rock = MaterialParams::rock(1e4, 75.0);
        let cavity = CavitySpec::BLOCK_CAVING;
        let settings = AmSettings::default();
        let bc = BoundaryConditions::default();
        Self {
            model: DamageModel::ShearCompression,
            young_modulus: rock.young,
            poisson_ratio: rock.poisson,
            density: rock.density,
            gravity_x: rock.gravity[0],
            gravity_y: rock.gravity[1],
            w1: rock.w1,
            internal_length: rock.ell,
            kappa: rock.kappa,
            domain_x_min: -1500.0,
            domain_x_max: 1500.0,
            domain_y_min: -500.0,
            domain_y_max: 500.0,
            mesh_size: 25.0,
            mesh_split: Split::Diagonal,
            cavity: true,
            cavity_x_start: cavity.x_start,
            cavity_growth: cavity.growth,
            cavity_half_height: cavity.half_height,
            cavity_y_center: cavity.y_center,
            final_step: 15,
            am_tolerance: settings.tol,
            am_max_iter: settings.max_iter,
            damage_tolerance: settings.damage_tol,
            damage_max_iter: settings.damage_max_iter,
            linear_solver: settings.linear_solver,
            linear_tolerance: settings.linear_tol,
            bc_lateral: bc.lateral,
            bc_up: bc.up,
            bc_down: bc.down,
            bc_cavity: bc.cavity,
            output_dir: PathBuf::from("output"),
            continue_on_unconverged: false,
        }
    }
}

/// A rejected key and the reason.
type Violation = (&'static str, String);

fn positive(key: &'static str, v: f64) -> Result<(), Violation> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err((key, format!("must be positive, got {v}")))
    }
}

fn finite(key: &'static str, v: f64) -> Result<(), Violation> {
    if v.is_finite() {
        Ok(())
    } else {
        Err((key, format!("must be finite, got {v}")))
    }
}

impl Config {
    /// Reads and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses configuration text; `origin` names the source in errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let (line, key) = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    let content = text.lines().nth(line - 1).unwrap_or("");
                    let key = content.split('=').next().unwrap_or("").trim().to_string();
                    (line, key)
                }
                None => (0, String::new()),
            };
            Error::Config {
                path: origin.to_string(),
                line,
                key,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.check().map_err(|(key, message)| Error::Config {
            path: origin.to_string(),
            line: key_line(text, key),
            key: key.to_string(),
            message,
        })?;
        cfg.warn_resolution();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat configuration serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    /// Checks every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(name, reason)| Error::InvalidParameter { name, reason })
    }

    /// Logs a warning when the mesh is too coarse to resolve a damage band.
    pub fn warn_resolution(&self) {
        if self.mesh_size > self.internal_length / 3.0 {
            log::warn!(
                "mesh_size {} exceeds internal_length / 3 = {}; damage bands will be under-resolved",
                self.mesh_size,
                self.internal_length / 3.0
            );
        }
    }

    fn check(&self) -> Result<(), Violation> {
        positive("young_modulus", self.young_modulus)?;
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(("poisson_ratio", format!("must lie in (-1, 0.5), got {}", self.poisson_ratio)));
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(("density", format!("must be non-negative, got {}", self.density)));
        }
        finite("gravity_x", self.gravity_x)?;
        finite("gravity_y", self.gravity_y)?;
        positive("w1", self.w1)?;
        positive("internal_length", self.internal_length)?;
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(("kappa", format!("must be non-negative, got {}", self.kappa)));
        }
        finite("domain_x_min", self.domain_x_min)?;
        finite("domain_y_min", self.domain_y_min)?;
        if !(self.domain_x_max > self.domain_x_min) {
            return Err(("domain_x_max", "must exceed domain_x_min".into()));
        }
        if !(self.domain_y_max > self.domain_y_min) {
            return Err(("domain_y_max", "must exceed domain_y_min".into()));
        }
        positive("mesh_size", self.mesh_size)?;
        let short = (self.domain_x_max - self.domain_x_min).min(self.domain_y_max - self.domain_y_min);
        if self.mesh_size > short / 2.0 {
            return Err(("mesh_size", format!("must allow two cells across the domain (at most {})", short / 2.0)));
        }
        if self.cavity {
            finite("cavity_x_start", self.cavity_x_start)?;
            finite("cavity_y_center", self.cavity_y_center)?;
            if !(self.cavity_growth >= 0.0 && self.cavity_growth.is_finite()) {
                return Err(("cavity_growth", format!("must be non-negative, got {}", self.cavity_growth)));
            }
            positive("cavity_half_height", self.cavity_half_height)?;
            self.cavity_spec()
                .validate(&self.domain(), self.final_step)
                .map_err(|e| ("final_step", e.to_string()))?;
        }
        positive("am_tolerance", self.am_tolerance)?;
        if self.am_max_iter == 0 {
            return Err(("am_max_iter", "must be at least 1".into()));
        }
        positive("damage_tolerance", self.damage_tolerance)?;
        if self.damage_max_iter == 0 {
            return Err(("damage_max_iter", "must be at least 1".into()));
        }
        positive("linear_tolerance", self.linear_tolerance)?;
        Ok(())
    }

    pub fn domain(&self) -> Rect {
        Rect::new(self.domain_x_min, self.domain_x_max, self.domain_y_min, self.domain_y_max)
    }

    fn cavity_spec(&self) -> CavitySpec {
        CavitySpec {
            x_start: self.cavity_x_start,
            growth: self.cavity_growth,
            half_height: self.cavity_half_height,
            y_center: self.cavity_y_center,
        }
    }

    pub fn cavity(&self) -> Option<CavitySpec> {
        self.cavity.then(|| self.cavity_spec())
    }

    pub fn material(&self) -> Result<MaterialParams> {
        MaterialParams::new(
            self.young_modulus,
            self.poisson_ratio,
            self.w1,
            self.internal_length,
            self.kappa,
            self.density,
            [self.gravity_x, self.gravity_y],
        )
    }

    pub fn boundary(&self) -> BoundaryConditions {
        BoundaryConditions {
            lateral: self.bc_lateral,
            up: self.bc_up,
            down: self.bc_down,
            cavity: self.bc_cavity,
            prescribed: Vec::new(),
        }
    }

    pub fn settings(&self) -> AmSettings {
        AmSettings {
            tol: self.am_tolerance,
            max_iter: self.am_max_iter,
            damage_tol: self.damage_tolerance,
            damage_max_iter: self.damage_max_iter,
            linear_solver: self.linear_solver,
            linear_tol: self.linear_tolerance,
        }
    }

    /// Intact mesh of the domain.
    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.domain(), self.mesh_size, self.mesh_split)
    }

    pub fn simulation(&self) -> Result<Simulation> {
        self.validate()?;
        Ok(Simulation {
            model: self.model,
            material: self.material()?,
            mesh: self.mesh()?,
            cavity: self.cavity(),
            boundary: self.boundary(),
            settings: self.settings(),
            continue_on_unconverged: self.continue_on_unconverged,
        })
    }
}

/// 1-based line assigning `key`, or 0 when the key is not in the text.
fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}
