//! The widest (highest-rate) herald filter that reaches a target purity or HOM
//! visibility, for the KTP waveguide.

use biphoton::sweep::{solve_filter_for_target, Target};
use biphoton::DoubleGaussianJsa;

fn main() -> biphoton::Result<()> {
    let ktp = DoubleGaussianJsa::ktp_waveguide();
    let targets = [
        Target::Visibility(0.5),
        Target::Visibility(0.8),
        Target::Purity(0.9),
        Target::Purity(0.99),
    ];
    println!(
        "{:>16} {:>10} {:>10} {:>10} {:>10}",
        "target", "σ_f/σ_p", "purity", "success", "V"
    );
    for target in targets {
        let s = solve_filter_for_target(&ktp, target, 1e-6)?;
        let label = match target {
            Target::Purity(p) => format!("purity {p}"),
            Target::Visibility(v) => format!("visibility {v}"),
        };
        println!(
            "{label:>16} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            s.sigma_f / ktp.sigma1,
            s.purity,
            s.success,
            s.visibility
        );
    }
    match solve_filter_for_target(&ktp, Target::Purity(0.9999999), 1e-6) {
        Ok(s) => println!("purity 0.9999999 needs σ_f = {:.2e}", s.sigma_f),
        Err(e) => println!("purity 0.9999999: {e}"),
    }
    Ok(())
}
