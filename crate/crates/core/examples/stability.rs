//! Amplification of small perturbations of the initial data.

use tridomain::assembly::{assemble, ConductivitySpec};
use tridomain::diagnostics::stability_experiment;
use tridomain::geometry::{build_unit_cell, UnitCellSpec};
use tridomain::ionics::{GapModel, IonicModel};
use tridomain::stepper::{FieldSpec, InitialData, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8))?;
    let op = assemble(&mesh, &ConductivitySpec::default())?;
    let cfg = SolverConfig { dt: 0.01, t_end: 1.0, ..Default::default() };
    let init = InitialData {
        v1: FieldSpec::Bump { amplitude: 0.8, center: [0.4, 0.5], radius: 0.2 },
        ..Default::default()
    };
    let profile = FieldSpec::Bump { amplitude: 1.0, center: [0.3, 0.5], radius: 0.3 };
    let rep = stability_experiment(&mesh, &op, &IonicModel::default(), &GapModel::default(), &cfg, &init, &profile, &[1e-1, 1e-2, 1e-3])?;
    print!("{}", rep.summary());
    Ok(())
}
