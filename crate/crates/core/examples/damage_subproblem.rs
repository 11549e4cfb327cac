//! One damage step in isolation: the elastic solution of the loaded, carved
//! domain is frozen and the damage functional is minimized over
//! `{0 ≤ α ≤ 1}` by the projected Newton solver, with its KKT report.

use caving_damage::assembly::{apply_dirichlet, assemble_elasticity, build_damage_functional, BoundaryConditions};
use caving_damage::mesh::{build_mesh, carve_cavity, CavitySpec, Rect, Split};
use caving_damage::solvers::{minimize_box, BoxConstraints, BoxObjective, BoxSolverOptions, LinearSolverKind};
use caving_damage::{DamageModel, MaterialParams};

fn main() -> caving_damage::Result<()> {
    let mut mat = MaterialParams::rock(1e4, 75.0);
    mat.kappa = 0.5;
    let model = DamageModel::ShearCompression;
    let base = build_mesh(Rect::new(-1500.0, 1500.0, -500.0, 500.0), 25.0, Split::Diagonal)?;
    let mesh = carve_cavity(&base, 15, &CavitySpec::BLOCK_CAVING)?;

    let zero = vec![0.0; mesh.node_count()];
    let (k, load) = assemble_elasticity(&mesh, &zero, model, &mat);
    let constraints = BoundaryConditions::default().constraints(&mesh)?;
    let reduced = apply_dirichlet(&k, &load, &constraints, Some(&mesh.active_nodes()))?;
    let x = LinearSolverKind::Cholesky.solve(&reduced.matrix, &reduced.rhs, 1e-10)?;
    let u = reduced.expand(&x);

    let f = build_damage_functional(&mesh, &u, model, &mat, &zero);
    let bounds = BoxConstraints::damage(f.lower_bound())?;
    let x0 = f.restrict(&zero);
    let opts = BoxSolverOptions {
        tol: 1e-6 * mat.w1,
        weights: Some(f.node_weights().to_vec()),
        ..BoxSolverOptions::default()
    };
    let (alpha, report) = minimize_box(&f, &bounds, &x0, &opts);
    println!("{} damage unknowns", f.dim());
    println!("objective: {:.6e} -> {:.6e}", f.value(&x0), f.value(&alpha));
    println!(
        "converged: {} in {} iterations; KKT interior {:.2e}, bound violation {:.2e} (tol {:.1e})",
        report.converged, report.iterations, report.max_interior_gradient, report.max_bound_violation, opts.tol
    );
    let parts = f.parts(&alpha);
    println!(
        "bulk {:.4e}, local dissipation {:.4e}, gradient dissipation {:.4e}",
        parts.bulk, parts.local, parts.gradient
    );
    let damaged = alpha.iter().filter(|&&a| a > 1e-2).count();
    let max = alpha.iter().fold(0.0f64, |m, &a| m.max(a));
    println!("max α = {max:.4}, {damaged} nodes above 0.01");
    Ok(())
}
