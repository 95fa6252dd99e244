//! Definiteness of the step matrix and of the bare interface operator.

use tridomain::assembly::{assemble, build_system_matrix, check_spd, interface_operator, ConductivitySpec, SpdMode, StepCoefficients};
use tridomain::geometry::{build_unit_cell, tile, TilingSpec, UnitCellSpec};
use tridomain::ionics::{GapModel, IonicModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gap = GapModel::default();
    let cell = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8))?;
    for eps in [1.0, 0.1] {
        let mesh = tile(&cell, &TilingSpec { counts: (2, 2), epsilon: eps })?;
        let op = assemble(&mesh, &ConductivitySpec::default())?;
        let sys = build_system_matrix(
            &op,
            StepCoefficients { eps, delta: 1e-3, dt: 0.01, beta1: IonicModel::default().beta1, g_gap: gap.g_gap, c_ratio: gap.c_ratio },
        );
        let strict = check_spd(&sys.matrix, SpdMode::Strict)?;
        let semi = check_spd(&interface_operator(&op, eps, gap.c_ratio), SpdMode::Semidefinite)?;
        println!(
            "eps = {eps}: step matrix strict {} (min pivot {:?}); interface operator semidefinite {} (min Ritz {:?})",
            strict.pass, strict.min_pivot, semi.pass, semi.min_ritz
        );
    }
    Ok(())
}
