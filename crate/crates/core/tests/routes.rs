//! Cross-checks between the quadrature and Schmidt routes on sources with no closed
//! form: a complex, asymmetric tabulated amplitude and tabulated filters.

use std::f64::consts::FRAC_PI_4;

use biphoton::analytic::{purity_for_visibility, visibility};
use biphoton::jsa::GriddedJsa;
use biphoton::quadrature::{heralding, hom_dip, two_filter_quantities};
use biphoton::schmidt::{
    decompose, hom_dip_schmidt, overlap_matrix, schmidt_quantities, two_filter_schmidt,
};
use biphoton::{BeamSplitter, DoubleGaussianJsa, QuadratureSpec, Side, SpectralFilter};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

/// Two displaced, differently shaped lobes with a chirp-like phase.
fn lopsided_source() -> GriddedJsa {
    let n = 241;
    let axis: Vec<f64> = (0..n)
        .map(|i| -6.0 + 12.0 * i as f64 / (n - 1) as f64)
        .collect();
    let amplitudes = DMatrix::from_fn(n, n, |i, j| {
        let (w, v) = (axis[i], axis[j]);
        let main = (-(w + v).powi(2) / 4.0 - (w - v).powi(2)).exp();
        let side = 0.6 * (-(w + v - 0.5).powi(2) / 2.0 - (w - v - 1.5).powi(2) / 0.5).exp();
        Complex64::from_polar(main + side, 0.3 * w * w - 0.2 * w * v)
    });
    GriddedJsa::new(axis.clone(), axis, amplitudes)
        .unwrap()
        .normalized()
        .unwrap()
}

/// Flat-topped band pass, finely tabulated.
fn notch() -> SpectralFilter {
    let grid: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
    let t = grid
        .iter()
        .map(|&w| 0.05 + 0.9 / (1.0 + ((w - 0.4) / 0.8).powi(4)))
        .collect();
    SpectralFilter::tabulated(grid, t).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn heralding_routes_agree_on_a_complex_source() {
    let g = lopsided_source();
    let d = decompose(&g, 1e-14).unwrap();
    for filter in [SpectralFilter::gaussian(0.3, 0.7).unwrap(), notch()] {
        let q = heralding(&g, &filter, &QuadratureSpec::default()).unwrap();
        let s = schmidt_quantities(&d, &overlap_matrix(&d, &filter, Side::Idler)).unwrap();
        assert!(rel(q.success, s.success) < 1e-9, "{q:?} {s:?}");
        assert!(rel(q.purity, s.purity) < 1e-9, "{q:?} {s:?}");
    }
}

#[test]
fn two_filter_routes_agree_on_a_complex_source() {
    let g = lopsided_source();
    let d = decompose(&g, 1e-14).unwrap();
    let herald = SpectralFilter::gaussian(-0.2, 0.9).unwrap();
    let heralded = notch();
    let q = two_filter_quantities(&g, &herald, &heralded, &QuadratureSpec::default()).unwrap();
    let s = two_filter_schmidt(
        &d,
        &overlap_matrix(&d, &herald, Side::Idler),
        &overlap_matrix(&d, &heralded, Side::Signal),
    )
    .unwrap();
    assert!(rel(q.success, s.success) < 1e-9, "{q:?} {s:?}");
    assert!(rel(q.purity, s.purity) < 1e-9, "{q:?} {s:?}");
}

#[test]
fn hom_routes_agree_on_a_complex_source() {
    let g = lopsided_source();
    let d = decompose(&g, 1e-14).unwrap();
    let fx = SpectralFilter::gaussian(0.0, 0.8).unwrap();
    let fy = notch();
    let bs = BeamSplitter::with_reflectance(0.3).unwrap();
    let delays: Vec<f64> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect();
    let q = hom_dip(&g, &fx, &fy, bs, &delays, &QuadratureSpec::default()).unwrap();
    let s = hom_dip_schmidt(
        &d,
        &overlap_matrix(&d, &fx, Side::Idler),
        &overlap_matrix(&d, &fy, Side::Idler),
        bs,
        &delays,
    )
    .unwrap();
    for (a, b) in q.coincidences.iter().zip(&s.coincidences) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn dip_width_invariance_is_a_double_gaussian_property() {
    let delays: Vec<f64> = (0..=800).map(|i| -8.0 + 0.02 * i as f64).collect();
    let bs = BeamSplitter::balanced();
    let spec = QuadratureSpec::default();
    let spread = |widths: &[f64]| {
        let (lo, hi) = widths
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &w| (l.min(w), h.max(w)));
        (hi - lo) / lo
    };
    let fwhms = |source: &dyn Fn(&SpectralFilter) -> biphoton::HomCurve| -> Vec<f64> {
        [0.3, 1.0, 3.0, 10.0]
            .iter()
            .map(|&w| {
                source(&SpectralFilter::gaussian(0.0, w).unwrap())
                    .fwhm()
                    .unwrap()
            })
            .collect()
    };

    let jsa = DoubleGaussianJsa::new(1.5, 3.0, FRAC_PI_4, -0.4).unwrap();
    let gaussian = fwhms(&|f| hom_dip(&jsa, f, f, bs, &delays, &spec).unwrap());
    assert!(spread(&gaussian) < 1e-6, "{gaussian:?}");

    // For a non-Gaussian amplitude the filter reshapes the heralded spectrum, and with
    // it the dip; the effect is small but well above the integration error.
    let g = lopsided_source();
    let lopsided = fwhms(&|f| hom_dip(&g, f, f, bs, &delays, &spec).unwrap());
    assert!(spread(&lopsided) > 1e-3, "{lopsided:?}");
    assert!(spread(&lopsided) < 0.05, "{lopsided:?}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn visibility_and_purity_are_inverse(p in 0.0f64..=1.0) {
        let v = visibility(p, BeamSplitter::balanced());
        prop_assert!((purity_for_visibility(v) - p).abs() < 1e-12);
    }

    #[test]
    fn gridded_and_analytic_sources_agree(
        l1 in -0.5f64..1.0, l2 in -0.5f64..1.0, t1 in 0.0f64..3.1, gap in 0.5f64..2.6, w in 0.3f64..5.0,
    ) {
        let jsa = DoubleGaussianJsa::new(l1.exp(), l2.exp(), t1, t1 - gap).unwrap();
        let f = SpectralFilter::gaussian(0.0, w).unwrap();
        let Ok(g) = biphoton::jsa::discretize_resolving(&jsa, Some(&f), None, 700) else { return Ok(()) };
        let a = heralding(&jsa, &f, &QuadratureSpec::default()).unwrap();
        // The resolving grid is sized for the full step only; halving it is too coarse
        // for the built-in convergence check.
        let b = heralding(&g, &f, &QuadratureSpec { check_convergence: false, ..QuadratureSpec::default() }).unwrap();
        prop_assert!(rel(a.success, b.success) < 1e-6 && rel(a.purity, b.purity) < 1e-6, "{:?} {:?}", a, b);
    }
}
