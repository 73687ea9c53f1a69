//! Heralding by projecting the herald onto one Schmidt mode instead of filtering it.
//! The heralded photon is then pure and the success probability is that mode's weight.

use std::f64::consts::FRAC_PI_4;

use biphoton::analytic::{schmidt_number, thermal_schmidt_coefficients};
use biphoton::jsa::discretize_resolving;
use biphoton::schmidt::{decompose, mode_projection_herald};
use biphoton::DoubleGaussianJsa;

fn main() -> biphoton::Result<()> {
    let source = DoubleGaussianJsa::new(1.0, 5.0, FRAC_PI_4, -FRAC_PI_4)?;
    let k = schmidt_number(&source);
    let d = decompose(&discretize_resolving(&source, None, None, 2048)?, 1e-12)?;
    let thermal = thermal_schmidt_coefficients(k, 4)?;
    println!("K = {k:.3}");
    println!(
        "{:>5} {:>10} {:>10} {:>14}",
        "mode", "success", "thermal", "purity"
    );
    for (a, p) in thermal.iter().enumerate() {
        let m = mode_projection_herald(&d, a)?;
        println!("{a:>5} {:>10.6} {p:>10.6} {:>14.12}", m.success, m.purity);
    }
    Ok(())
}
