//! Manufactured-solution study: L² error of the potentials under refinement.

use tridomain::diagnostics::{mms_convergence, MmsCase};
use tridomain::geometry::UnitCellSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cell = UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8);
    for case in [
        MmsCase::Constant { values: [1.0, -2.0, 0.5] },
        MmsCase::Linear { gradient: [0.7, -0.4], offsets: [0.3, -0.2] },
        MmsCase::default(),
    ] {
        let rep = mms_convergence(&cell, &case, &[8, 16, 32])?;
        println!("{case:?}");
        for r in &rep.rows {
            println!("  density {:3}  h {:.4}  |u - u_h| {:.3e}  |v - v_h| {:.3e}", r.density, r.h, r.err_u, r.err_v);
        }
        println!("  slope {:.3}", rep.slope_u);
    }
    Ok(())
}
