//! Measured data: a tabulated filter transmission and a tabulated JSA read from CSV.
//! Both go through the same quadrature and Schmidt routes as the analytic inputs.

use std::f64::consts::FRAC_PI_4;

use biphoton::config::{read_tabulated_jsa, write_tabulated_jsa};
use biphoton::jsa::{discretize, GridSpec};
use biphoton::quadrature::heralding;
use biphoton::schmidt::{decompose, overlap_matrix, schmidt_quantities};
use biphoton::{DoubleGaussianJsa, QuadratureSpec, Side, SpectralFilter};

fn main() -> biphoton::Result<()> {
    // A flat-topped band pass 1.6 ps⁻¹ wide, as a spectrometer might record it. The
    // transmission is zero outside the table, so the profile should fall to zero at its ends.
    let grid: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
    let t: Vec<f64> = grid
        .iter()
        .map(|&w| 0.95 / (1.0 + (w / 0.8).powi(8)))
        .collect();
    let filter = SpectralFilter::tabulated(grid, t)?;

    let source = DoubleGaussianJsa::new(1.0, 5.0, FRAC_PI_4, -FRAC_PI_4)?;
    let q = heralding(&source, &filter, &QuadratureSpec::default())?;
    println!(
        "analytic source, tabulated filter: success {:.6}, purity {:.6}",
        q.success, q.purity
    );

    // Round-trip the source through the CSV format, as if it came from a measurement.
    let mut csv = Vec::new();
    write_tabulated_jsa(
        &discretize(
            &source,
            GridSpec {
                half_extent: 5.0,
                n_points: 801,
            },
        )?,
        &mut csv,
    )?;
    let measured = read_tabulated_jsa(csv.as_slice())?;
    let spec = QuadratureSpec {
        check_convergence: false,
        ..QuadratureSpec::default()
    };
    let g = heralding(&measured, &filter, &spec)?;
    println!(
        "tabulated source, same filter:     success {:.6}, purity {:.6}",
        g.success, g.purity
    );

    let d = decompose(&measured, 1e-12)?;
    let s = schmidt_quantities(&d, &overlap_matrix(&d, &filter, Side::Idler))?;
    println!(
        "Schmidt route on the tabulated source: success {:.6}, purity {:.6}",
        s.success, s.purity
    );
    Ok(())
}
