//! Distance between trajectories at δ and δ/2 as δ shrinks.

use tridomain::assembly::{assemble, ConductivitySpec};
use tridomain::diagnostics::delta_limit;
use tridomain::geometry::{build_unit_cell, UnitCellSpec};
use tridomain::ionics::{GapModel, IonicModel};
use tridomain::stepper::{initialize, FieldSpec, InitialData, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8))?;
    let op = assemble(&mesh, &ConductivitySpec::default())?;
    let cfg = SolverConfig { dt: 0.01, t_end: 1.0, ..Default::default() };
    let init = InitialData {
        v1: FieldSpec::Bump { amplitude: 0.8, center: [0.4, 0.5], radius: 0.2 },
        ..Default::default()
    };
    let s0 = initialize(&mesh, &op, &init)?;
    let rep = delta_limit(&op, &IonicModel::default(), &GapModel::default(), &cfg, &s0, &[1e-1, 1e-2, 1e-3, 1e-4])?;
    print!("{}", rep.summary());
    Ok(())
}
