//! Checks the FitzHugh–Nagumo model against the structural assumptions,
//! with the default shift and with the shift switched off.

use tridomain::ionics::{certify_assumptions, IonicModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = IonicModel::default();
    let rep = certify_assumptions(&model, (-10.0, 10.0), (-10.0, 10.0), 401)?;
    println!("beta1 = {:.6}", model.beta1);
    print!("{}", rep.to_table());

    let unshifted = IonicModel { beta1: 0.0, ..model };
    let rep = certify_assumptions(&unshifted, (-10.0, 10.0), (-10.0, 10.0), 401)?;
    println!("\nbeta1 = 0");
    print!("{}", rep.to_table());
    Ok(())
}
