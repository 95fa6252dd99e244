//! Builds a reference cell, tiles it and writes the mesh as VTK.

use tridomain::geometry::{build_unit_cell, interface_measures, tile, TilingSpec, UnitCellSpec};
use tridomain::io::write_vtk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cell = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8))?;
    let m = interface_measures(&cell);
    println!("cell: {} vertices, {} triangles", cell.vertices.len(), cell.triangles.len());
    println!("|Γ1| = {}, |Γ2| = {}, |Γ12| = {}", m.gamma1, m.gamma2, m.gamma12);
    println!("|Ω_i1| = {}, |Ω_i2| = {}, |Ω_e| = {}", m.omega_i1, m.omega_i2, m.omega_e);

    let mesh = tile(&cell, &TilingSpec { counts: (4, 2), epsilon: 0.25 })?;
    let path = std::env::temp_dir().join("tridomain_tiling.vtk");
    write_vtk(&path, &mesh, &[])?;
    println!("4x2 tiling at eps = 0.25: {} cells, written to {}", mesh.n_cells(), path.display());
    Ok(())
}
