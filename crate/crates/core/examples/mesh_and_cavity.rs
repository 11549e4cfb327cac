//! Structured mesh of the rock mass, the cavity carved at a few steps, and a
//! VTK snapshot of the carved mesh.
//!
//! Usage: `cargo run --example mesh_and_cavity [out.vtk]`

use caving_damage::mesh::{build_mesh, carve_cavity, CavitySpec, Rect, Split};
use caving_damage::output::write_vtk;

fn main() -> caving_damage::Result<()> {
    let domain = Rect::new(-1500.0, 1500.0, -500.0, 500.0);
    let mesh = build_mesh(domain, 25.0, Split::Diagonal)?;
    let [nx, ny] = mesh.cells();
    println!("{nx} x {ny} cells, {} nodes, {} triangles", mesh.node_count(), mesh.element_count());
    for (tag, count) in mesh.edge_counts() {
        println!("  {tag:?}: {count} edges");
    }

    let cavity = CavitySpec::BLOCK_CAVING;
    let mut carved = mesh.clone();
    for step in [0, 1, 5, 10, 15] {
        carved = carve_cavity(&carved, step, &cavity)?;
        let r = cavity.rect(step);
        println!(
            "step {step:>2}: cavity ({}, {}) x ({}, {}), {} active triangles, {} cavity edges, area {:.0} m²",
            r.x_min,
            r.x_max,
            r.y_min,
            r.y_max,
            carved.active_element_count(),
            carved.edge_counts().get(&caving_damage::mesh::BoundaryTag::Cav).copied().unwrap_or(0),
            carved.active_area()
        );
    }

    let out = std::env::args().nth(1).unwrap_or_else(|| "mesh_step15.vtk".into());
    let n = carved.node_count();
    write_vtk(&carved, &vec![0.0; n], &vec![0.0; 2 * n], &out)?;
    println!("wrote {out}");
    Ok(())
}
