//! SVD Schmidt decomposition of the KTP source: coefficients against the thermal law,
//! the fundamental mode against its Hermite–Gaussian form, and how many modes it
//! takes to rebuild the amplitude.

use biphoton::analytic::{
    schmidt_mode_analytic, schmidt_number, schmidt_scales, thermal_schmidt_coefficients,
};
use biphoton::jsa::discretize_resolving;
use biphoton::schmidt::decompose;
use biphoton::{DoubleGaussianJsa, Side};

fn main() -> biphoton::Result<()> {
    let ktp = DoubleGaussianJsa::ktp_waveguide();
    let grid = discretize_resolving(&ktp, None, None, 2048)?;
    let d = decompose(&grid, 1e-15)?;
    let k = schmidt_number(&ktp);
    println!(
        "grid {}×{}, {} modes kept",
        grid.signal_grid().len(),
        grid.idler_grid().len(),
        d.n_modes()
    );
    println!("K from SVD {:.6}, closed form {k:.6}", d.schmidt_number());

    println!("\n{:>3} {:>12} {:>12}", "μ", "p_μ (SVD)", "thermal");
    let thermal = thermal_schmidt_coefficients(k, 8)?;
    for (mu, (p, t)) in d.coefficients().iter().zip(&thermal).enumerate() {
        println!("{mu:>3} {p:>12.6} {t:>12.6}");
    }

    let (o1, o2) = schmidt_scales(&ktp);
    let step = d.signal_grid()[1] - d.signal_grid()[0];
    let l2: f64 = d
        .signal_grid()
        .iter()
        .zip(d.signal_mode(0))
        .map(|(&w, z)| (z - schmidt_mode_analytic(&ktp, 0, Side::Signal, w)).norm_sqr() * step)
        .sum();
    println!(
        "\nmode scales Ω₁ = {o1:.4}, Ω₂ = {o2:.4}; fundamental signal mode L² error {:.1e}",
        l2.sqrt()
    );

    println!("\n{:>6} {:>14}", "modes", "recon. error");
    for n in [1, 5, 20, 60, 120] {
        println!(
            "{n:>6} {:>14.2e}",
            d.reconstruction_error(&grid, n.min(d.n_modes()))
        );
    }
    Ok(())
}
