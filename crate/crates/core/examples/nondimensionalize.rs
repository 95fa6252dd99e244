//! Physical membrane and tissue parameters to ε and the time scale.

use tridomain::diagnostics::{nondimensionalize, PhysicalUnits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", nondimensionalize(&PhysicalUnits::default())?.to_text());
    let finer = PhysicalUnits { ell_mic: 0.0025, ..PhysicalUnits::default() };
    println!("\nell = 25 µm:");
    print!("{}", nondimensionalize(&finer)?.to_text());
    Ok(())
}
