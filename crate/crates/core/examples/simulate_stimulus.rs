//! A pulse on Γ¹ in the FitzHugh–Nagumo model; prints the time series.

use tridomain::assembly::{assemble, ConductivitySpec};
use tridomain::diagnostics::energy;
use tridomain::geometry::{build_unit_cell, tile, TilingSpec, UnitCellSpec};
use tridomain::ionics::{GapModel, IonicModel};
use tridomain::stepper::{initialize, AppliedCurrent, InitialData, SolverConfig, Stepper, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cell = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8))?;
    let mesh = tile(&cell, &TilingSpec { counts: (3, 1), epsilon: 1.0 })?;
    let op = assemble(&mesh, &ConductivitySpec::default())?;
    let (model, gap) = (IonicModel::default(), GapModel::default());
    let cfg = SolverConfig {
        dt: 0.02,
        t_end: 4.0,
        iapp: AppliedCurrent::Pulse { amplitude: 2.0, t_on: 0.0, t_off: 0.5, target: Target::Gamma1 },
        ..Default::default()
    };
    let stepper = Stepper::new(&op, &model, &gap, &cfg)?;
    let s0 = initialize(&mesh, &op, &InitialData::default())?;
    let mut k = 0;
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "energy", "max v1", "max v2");
    stepper.run(s0, |s, _| {
        if k % 20 == 0 {
            let e = energy::energy(&op, &model, &gap, cfg.eps, cfg.delta, s, None);
            let max = |v: Vec<f64>| v.into_iter().fold(f64::MIN, f64::max);
            println!("{:6.2} {:12.5e} {:12.5} {:12.5}", s.t, e.total, max(s.v1(&op)), max(s.v2(&op)));
        }
        k += 1;
        Ok(())
    })?;
    Ok(())
}
