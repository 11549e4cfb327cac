//! Writers for field snapshots, energy traces and restart checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::DamageModel;
use crate::error::{Error, Result};
use crate::evolution::{Simulation, State, StepRecord};
use crate::mesh::Mesh;

/// Columns of the trace written by [`write_trace_csv`].
pub const TRACE_HEADER: &str = "t_i,am_iterations,elastic,local_dissipation,gradient_dissipation,external_work,total,max_alpha,damaged_area_fraction";

pub fn vtk_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("damage_{step:04}.vtk"))
}

pub fn checkpoint_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("checkpoint_{step:04}.json"))
}

/// Legacy ASCII unstructured grid with every mesh node as a point, the
/// active triangles as cells, and nodal damage and displacement.
pub fn vtk_string(mesh: &Mesh, alpha: &[f64], u: &[f64]) -> Result<String> {
    let n = mesh.node_count();
    if alpha.len() != n || u.len() != 2 * n {
        return Err(Error::Mesh(format!(
            "fields have {} damage and {} displacement entries for {n} nodes",
            alpha.len(),
            u.len()
        )));
    }
    let cells: Vec<usize> = mesh.active_elements().collect();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ngradient damage field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {n} double").unwrap();
    for p in mesh.nodes() {
        writeln!(s, "{:?} {:?} 0", p[0], p[1]).unwrap();
    }
    writeln!(s, "CELLS {} {}", cells.len(), 4 * cells.len()).unwrap();
    for &e in &cells {
        let [a, b, c] = mesh.triangles()[e];
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    writeln!(s, "CELL_TYPES {}", cells.len()).unwrap();
    for _ in &cells {
        s.push_str("5\n");
    }
    writeln!(s, "POINT_DATA {n}").unwrap();
    s.push_str("SCALARS alpha double 1\nLOOKUP_TABLE default\n");
    for a in alpha {
        writeln!(s, "{a:?}").unwrap();
    }
    s.push_str("VECTORS displacement double\n");
    for d in u.chunks_exact(2) {
        writeln!(s, "{:?} {:?} 0", d[0], d[1]).unwrap();
    }
    Ok(s)
}

pub fn write_vtk(mesh: &Mesh, alpha: &[f64], u: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, vtk_string(mesh, alpha, u)?).map_err(|e| Error::io(path, e))
}

pub fn trace_row(rec: &StepRecord) -> String {
    let e = &rec.energy;
    format!(
        "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
        rec.state.step,
        rec.outcome.iterations,
        e.elastic,
        e.local_dissipation,
        e.gradient_dissipation,
        e.external_work,
        e.total,
        rec.max_alpha(),
        rec.damaged_area_fraction()
    )
}

/// One row per step under [`TRACE_HEADER`].
pub fn trace_csv(steps: &[StepRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for rec in steps {
        s.push_str(&trace_row(rec));
        s.push('\n');
    }
    s
}

pub fn write_trace_csv(steps: &[StepRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if steps.is_empty() {
        return Err(Error::param("trajectory", "no steps to write"));
    }
    std::fs::write(path, trace_csv(steps)).map_err(|e| Error::io(path, e))
}

/// Converged fields of one step, enough to resume the evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub model: DamageModel,
    pub node_count: usize,
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_prev: Vec<f64>,
}

impl Checkpoint {
    pub fn of(state: &State, model: DamageModel) -> Self {
        Self {
            step: state.step,
            model,
            node_count: state.mesh.node_count(),
            u: state.u.clone(),
            alpha: state.alpha.clone(),
            alpha_prev: state.alpha_prev.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Rebuilds the state on the simulation's mesh carved to this step.
    pub fn restore(self, sim: &Simulation) -> Result<State> {
        let mesh = sim.mesh_at(self.step)?;
        let n = mesh.node_count();
        if self.node_count != n || self.u.len() != 2 * n || self.alpha.len() != n || self.alpha_prev.len() != n {
            return Err(Error::Checkpoint {
                path: PathBuf::new(),
                message: format!("fields do not match the {n}-node mesh"),
            });
        }
        if self.model != sim.model {
            log::warn!("checkpoint was written by the {} model, resuming with {}", self.model, sim.model);
        }
        Ok(State {
            step: self.step,
            mesh,
            u: self.u,
            alpha: self.alpha,
            alpha_prev: self.alpha_prev,
        })
    }
}

/// Writes the snapshot and checkpoint of one step into `dir`.
pub fn write_step(dir: &Path, rec: &StepRecord, model: DamageModel) -> Result<()> {
    let s = &rec.state;
    write_vtk(&s.mesh, &s.alpha, &s.u, vtk_path(dir, s.step))?;
    Checkpoint::of(s, model).save(checkpoint_path(dir, s.step))
}
