//! Purity against heralding rate: the best rate at 90% purity over source aspect
//! ratio and orientation, then one full trade-off curve written as CSV.

use std::f64::consts::FRAC_PI_4;

use biphoton::sweep::{
    default_filter_widths, logspace, sweep_aspect_ratio, sweep_orientation, tradeoff_curve,
    write_tradeoff_csv,
};
use biphoton::{DoubleGaussianJsa, QuadratureSpec};

fn main() -> biphoton::Result<()> {
    let widths = default_filter_widths();
    let aspect = sweep_aspect_ratio(FRAC_PI_4, -FRAC_PI_4, &[1.0, 2.0, 4.0, 6.0, 10.0], &widths)?;
    println!("θ₁ = π/4, θ₂ = −π/4");
    for (i, r) in aspect.axis1.iter().enumerate() {
        let best = aspect.best_success_above(i, 0.9).unwrap_or(0.0);
        println!("  aspect ratio {r:>4}: best success with purity ≥ 0.9 is {best:.3}");
    }

    let angles: Vec<f64> = (0..=6).map(|i| i as f64 * FRAC_PI_4 / 3.0).collect();
    let orient = sweep_orientation(4.0, &angles, &widths)?;
    println!("\naspect ratio 4, θ₂ = θ₁ − π/2");
    for (i, t) in orient.axis1.iter().enumerate() {
        let best = orient.best_success_above(i, 0.9).unwrap_or(0.0);
        println!("  θ₁ = {t:.3}: best success with purity ≥ 0.9 is {best:.3}");
    }

    let source = DoubleGaussianJsa::new(4.0, 1.0, FRAC_PI_4, -FRAC_PI_4)?;
    let curve = tradeoff_curve(
        &source,
        &logspace(0.05, 10.0, 12),
        false,
        &QuadratureSpec::default(),
    )?;
    println!("\ntrade-off for aspect ratio 4:");
    write_tradeoff_csv(&curve, std::io::stdout())
}
