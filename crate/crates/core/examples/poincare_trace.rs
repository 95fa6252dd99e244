//! Largest Poincaré–trace ratio over random smooth states, per mesh density.

use tridomain::assembly::{assemble, ConductivitySpec};
use tridomain::diagnostics::poincare::sample_max_ratio;
use tridomain::geometry::{build_unit_cell, tile, TilingSpec, UnitCellSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for d in [8, 16, 32] {
        let cell = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, d))?;
        let mesh = tile(&cell, &TilingSpec { counts: (2, 2), epsilon: 0.5 })?;
        let op = assemble(&mesh, &ConductivitySpec::default())?;
        let s = sample_max_ratio(&mesh, &op, 0.5, 200, 7);
        println!("density {d:2}: max ratio {:.5} over {} samples ({} undefined)", s.max_ratio, s.samples, s.undefined);
    }
    Ok(())
}
