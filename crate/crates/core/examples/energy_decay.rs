//! With the linear ionic model and no stimulus the discrete energy can
//! only decrease; this prints it step by step.

use tridomain::assembly::{assemble, ConductivitySpec};
use tridomain::diagnostics::energy;
use tridomain::geometry::{build_unit_cell, UnitCellSpec};
use tridomain::ionics::{GapModel, IonicMode, IonicModel};
use tridomain::stepper::{initialize, run, FieldSpec, InitialData, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8))?;
    let op = assemble(&mesh, &ConductivitySpec::default())?;
    let model = IonicModel { mode: IonicMode::Linear, ..IonicModel::default() };
    let gap = GapModel::default();
    let cfg = SolverConfig { dt: 0.05, t_end: 1.0, ..Default::default() };
    let init = InitialData {
        v1: FieldSpec::Bump { amplitude: 1.0, center: [0.3, 0.5], radius: 0.3 },
        s: FieldSpec::Constant { value: 0.4 },
        w2: FieldSpec::Constant { value: -0.2 },
        ..Default::default()
    };
    let (_, traj) = run(&op, &model, &gap, &cfg, initialize(&mesh, &op, &init)?, 1)?;
    let mut last = f64::INFINITY;
    for s in &traj.snapshots {
        let e = energy::energy(&op, &model, &gap, cfg.eps, cfg.delta, s, None).total;
        println!("t = {:5.2}  E = {e:.10e}  {}", s.t, if e <= last { "" } else { "increase!" });
        last = e;
    }
    Ok(())
}
