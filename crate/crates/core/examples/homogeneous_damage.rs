//! Homogeneous uniaxial-strain test of the isotropic model: every node is
//! displaced as `u = (ε₀ x, 0)`, and the converged damage is compared with
//! the closed form `α* = S / (S + 2 w₁)`, `S = A₀ε:ε`.

use caving_damage::assembly::{BoundaryConditions, Constraint};
use caving_damage::evolution::Simulation;
use caving_damage::mesh::{build_mesh, Rect, Split};
use caving_damage::tensor::SymTensor2;
use caving_damage::{DamageModel, MaterialParams};

fn main() -> caving_damage::Result<()> {
    let mut mat = MaterialParams::rock(1e4, 0.5);
    mat.density = 0.0;
    let mesh = build_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.5, Split::Diagonal)?;
    for eps0 in [1e-4, 5e-4, 1e-3, 2e-3] {
        let mut bc = BoundaryConditions::free();
        for (i, p) in mesh.nodes().iter().enumerate() {
            bc.prescribed.push(Constraint { dof: 2 * i, value: eps0 * p[0] });
            bc.prescribed.push(Constraint { dof: 2 * i + 1, value: 0.0 });
        }
        let mut sim = Simulation::new(DamageModel::Isotropic, mat.clone(), mesh.clone());
        sim.cavity = None;
        sim.boundary = bc;
        let rec = sim.first_step()?;

        let eps = SymTensor2::new(eps0, 0.0, 0.0);
        let s = mat.hooke(&eps).xx * eps0;
        let exact = s / (s + 2.0 * mat.w1);
        let err = rec.state.alpha.iter().fold(0.0f64, |m, a| m.max((a - exact).abs()));
        println!("ε₀ = {eps0:.0e}: α* = {exact:.10}, max |α − α*| = {err:.2e}");
    }
    Ok(())
}
