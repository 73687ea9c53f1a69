//! Parameter sweeps over source shape and filter width, and filter selection for a
//! target purity or visibility.
//!
//! Surfaces and single-filter curves use the closed forms; two-filter curves use the
//! quadrature engine with identical filters on both arms. Points are evaluated in
//! parallel and collected in input order.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{closed_form_purity, closed_form_success, purity_for_visibility, visibility};
use crate::error::{invalid, Error, Result};
use crate::filter::{GaussianFilter, SpectralFilter};
use crate::jsa::{linspace, DoubleGaussianJsa};
use crate::quadrature::{two_filter_quantities, BeamSplitter, QuadratureSpec};

pub const DEFAULT_POINTS: usize = 101;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const MAX_ITERATIONS: usize = 60;

/// Bracket for the filter solver, in units of max(σ₁, σ₂).
const BRACKET: (f64, f64) = (1e-3, 1e2);
const MONOTONICITY_SAMPLES: usize = 64;

/// One filter width on a purity/rate trade-off curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub sigma_f: f64,
    pub success: f64,
    pub purity: f64,
    /// Visibility on a balanced beamsplitter, 𝒫/(2 − 𝒫).
    pub visibility: f64,
}

/// 𝒫 and 𝒮 over a two-parameter family of sources and filter widths.
///
/// `purity[i][j]` belongs to `axis1[i]` and `axis2[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis1_name: String,
    pub axis1: Vec<f64>,
    pub axis2_name: String,
    pub axis2: Vec<f64>,
    pub purity: Vec<Vec<f64>>,
    pub success: Vec<Vec<f64>>,
}

impl SweepGrid {
    /// Among filter widths with 𝒫 above `min_purity`, the largest 𝒮 in row `i`.
    pub fn best_success_above(&self, i: usize, min_purity: f64) -> Option<f64> {
        self.purity[i]
            .iter()
            .zip(&self.success[i])
            .filter(|(p, _)| **p > min_purity)
            .map(|(_, s)| *s)
            .fold(None, |best, s| Some(best.map_or(s, |b: f64| b.max(s))))
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

/// σ_f/σ₁ from 10⁻² to 10¹, log-spaced.
pub fn default_filter_widths() -> Vec<f64> {
    logspace(1e-2, 1e1, DEFAULT_POINTS)
}

/// σ₂/σ₁ from 1 to 10.
pub fn default_aspect_ratios() -> Vec<f64> {
    linspace(1.0, 10.0, DEFAULT_POINTS)
}

/// θ₁ from 0 to π/2.
pub fn default_orientations() -> Vec<f64> {
    linspace(0.0, FRAC_PI_2, DEFAULT_POINTS)
}

fn surface(
    sources: Vec<DoubleGaussianJsa>,
    axis1_name: &str,
    axis1: &[f64],
    filter_widths: &[f64],
) -> Result<SweepGrid> {
    if filter_widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(invalid("filter widths must be positive and finite"));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_iter()
        .map(|jsa| {
            filter_widths
                .iter()
                .map(|&w| {
                    let f = GaussianFilter {
                        center: 0.0,
                        width: w * jsa.sigma1,
                    };
                    (closed_form_purity(jsa, &f), closed_form_success(jsa, &f))
                })
                .unzip()
        })
        .collect();
    let (purity, success) = rows.into_iter().unzip();
    Ok(SweepGrid {
        axis1_name: axis1_name.into(),
        axis1: axis1.to_vec(),
        axis2_name: "sigma_f_over_sigma1".into(),
        axis2: filter_widths.to_vec(),
        purity,
        success,
    })
}

/// 𝒫 and 𝒮 against aspect ratio σ₂/σ₁ (σ₁ = 1) and centred filter width σ_f/σ₁.
pub fn sweep_aspect_ratio(
    theta1: f64,
    theta2: f64,
    ratios: &[f64],
    filter_widths: &[f64],
) -> Result<SweepGrid> {
    let sources = ratios
        .iter()
        .map(|&r| DoubleGaussianJsa::new(1.0, r, theta1, theta2))
        .collect::<Result<_>>()?;
    surface(sources, "aspect_ratio", ratios, filter_widths)
}

/// 𝒫 and 𝒮 against orientation θ₁ (with θ₂ = θ₁ − π/2, σ₁ = 1, σ₂ = `ratio`) and
/// centred filter width σ_f/σ₁.
pub fn sweep_orientation(ratio: f64, theta1: &[f64], filter_widths: &[f64]) -> Result<SweepGrid> {
    let sources = theta1
        .iter()
        .map(|&t| DoubleGaussianJsa::new(1.0, ratio, t, t - FRAC_PI_2))
        .collect::<Result<_>>()?;
    surface(sources, "theta1", theta1, filter_widths)
}

/// Figure-style defaults: θ = ±π/4 for the aspect sweep, σ₂/σ₁ = 5 for orientation.
pub fn default_aspect_sweep() -> Result<SweepGrid> {
    sweep_aspect_ratio(
        FRAC_PI_4,
        -FRAC_PI_4,
        &default_aspect_ratios(),
        &default_filter_widths(),
    )
}

pub fn default_orientation_sweep() -> Result<SweepGrid> {
    sweep_orientation(5.0, &default_orientations(), &default_filter_widths())
}

/// (𝒮, 𝒫, V) along absolute filter widths `sigma_f` (centred filters).
///
/// With `two_filter` the heralded photon passes an identical filter and the values
/// come from quadrature; otherwise from the closed forms. A purity that rises with
/// σ_f is logged as a warning.
pub fn tradeoff_curve(
    jsa: &DoubleGaussianJsa,
    sigma_f: &[f64],
    two_filter: bool,
    spec: &QuadratureSpec,
) -> Result<Vec<TradeoffPoint>> {
    let bs = BeamSplitter::balanced();
    let points = sigma_f
        .par_iter()
        .map(|&w| {
            let g = GaussianFilter::centered(w)?;
            let (success, purity) = if two_filter {
                let f = SpectralFilter::Gaussian(g);
                let h = two_filter_quantities(jsa, &f, &f, spec)?;
                (h.success, h.purity)
            } else {
                (closed_form_success(jsa, &g), closed_form_purity(jsa, &g))
            };
            Ok(TradeoffPoint {
                sigma_f: w,
                success,
                purity,
                visibility: visibility(purity, bs),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for v in monotonicity_violations(&points) {
        log::warn!(
            "purity rises from σ_f = {:.6} to {:.6}",
            points[v.0].sigma_f,
            points[v.1].sigma_f
        );
    }
    Ok(points)
}

/// Pairs of indices, adjacent in σ_f, where 𝒫 increases with σ_f by more than 1e-12.
pub fn monotonicity_violations(points: &[TradeoffPoint]) -> Vec<(usize, usize)> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].sigma_f.total_cmp(&points[b].sigma_f));
    idx.windows(2)
        .filter(|w| points[w[1]].purity > points[w[0]].purity + 1e-12)
        .map(|w| (w[0], w[1]))
        .collect()
}

/// What the filter solver aims for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Purity(f64),
    /// Balanced-beamsplitter HOM visibility, converted to purity via 𝒫 = 2V/(1+V).
    Visibility(f64),
}

impl Target {
    pub fn purity(&self) -> f64 {
        match *self {
            Target::Purity(p) => p,
            Target::Visibility(v) => purity_for_visibility(v),
        }
    }
}

/// The widest centred Gaussian filter that reaches the target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSolution {
    pub sigma_f: f64,
    pub purity: f64,
    pub success: f64,
    pub visibility: f64,
    /// False when 𝒫(σ_f) was not monotone on the bracket and a scan was used.
    pub monotone: bool,
}

/// Largest σ_f with 𝒫(σ_f) ≥ target, located to |𝒫 − target| < `tol`.
///
/// 𝒮 grows with σ_f, so this is the filter with the highest heralding rate that meets
/// the target. The bracket is [10⁻³, 10²]·max(σ₁, σ₂). If even the widest filter meets
/// the target the upper bound is returned; if the narrowest does not, the target is
/// unachievable.
pub fn solve_filter_for_target(
    jsa: &DoubleGaussianJsa,
    target: Target,
    tol: f64,
) -> Result<FilterSolution> {
    let goal = target.purity();
    if !(goal > 0.0 && goal < 1.0) {
        return Err(Error::Unachievable {
            target: goal,
            reason: "target purity must lie in (0, 1)".into(),
        });
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let purity = |w: f64| {
        closed_form_purity(
            jsa,
            &GaussianFilter {
                center: 0.0,
                width: w,
            },
        )
    };
    let (lo, hi) = (BRACKET.0 * jsa.sigma_max(), BRACKET.1 * jsa.sigma_max());

    let scan = logspace(lo, hi, MONOTONICITY_SAMPLES);
    let values: Vec<f64> = scan.iter().map(|&w| purity(w)).collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if !monotone {
        log::warn!("purity is not monotone in the filter width on [{lo:.3e}, {hi:.3e}]; falling back to a scan");
    }

    let (mut a, mut b) = if monotone {
        (lo, hi)
    } else {
        // Last scan point meeting the target, refined between it and its neighbour.
        let k = values.iter().rposition(|&p| p >= goal);
        match k {
            Some(k) if k + 1 < scan.len() => (scan[k], scan[k + 1]),
            Some(_) => (hi, hi),
            None => (lo, lo),
        }
    };
    let solution = |w: f64| {
        let g = GaussianFilter {
            center: 0.0,
            width: w,
        };
        let p = purity(w);
        FilterSolution {
            sigma_f: w,
            purity: p,
            success: closed_form_success(jsa, &g),
            visibility: visibility(p, BeamSplitter::balanced()),
            monotone,
        }
    };
    if purity(b) >= goal {
        return Ok(solution(b));
    }
    if purity(a) < goal {
        return Err(Error::Unachievable {
            target: goal,
            reason: format!(
                "purity at the narrowest filter σ_f = {a:.3e} is only {:.6}",
                purity(a)
            ),
        });
    }
    // Invariant: 𝒫(a) ≥ goal > 𝒫(b).
    for _ in 0..MAX_ITERATIONS {
        if purity(a) - goal < tol {
            return Ok(solution(a));
        }
        let mid = (a * b).sqrt();
        if purity(mid) >= goal {
            a = mid;
        } else {
            b = mid;
        }
    }
    let change = purity(a) - goal;
    if change < tol {
        Ok(solution(a))
    } else {
        Err(Error::NonConvergence {
            quantity: "filter width",
            change,
        })
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

/// Long-format CSV: `<axis1>, <axis2>, purity, success, visibility`, one row per point.
pub fn write_grid_csv<W: Write>(grid: &SweepGrid, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        grid.axis1_name.as_str(),
        grid.axis2_name.as_str(),
        "purity",
        "success",
        "visibility",
    ])?;
    let bs = BeamSplitter::balanced();
    for (i, x) in grid.axis1.iter().enumerate() {
        for (j, y) in grid.axis2.iter().enumerate() {
            let p = grid.purity[i][j];
            w.write_record([
                fmt(*x),
                fmt(*y),
                fmt(p),
                fmt(grid.success[i][j]),
                fmt(visibility(p, bs)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `sigma_f, success, purity, visibility`.
pub fn write_tradeoff_csv<W: Write>(points: &[TradeoffPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sigma_f", "success", "purity", "visibility"])?;
    for p in points {
        w.write_record([
            fmt(p.sigma_f),
            fmt(p.success),
            fmt(p.purity),
            fmt(p.visibility),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::heralding;
    use proptest::prelude::*;

    #[test]
    fn unit_aspect_ratio_is_pure() {
        let g = sweep_aspect_ratio(FRAC_PI_4, -FRAC_PI_4, &[1.0, 2.0], &default_filter_widths())
            .unwrap();
        assert!(g.purity[0].iter().all(|&p| (p - 1.0).abs() < 1e-12));
        assert!(g.purity[1].iter().any(|&p| p < 0.9));
    }

    #[test]
    fn narrowband_row_is_pure_and_dark() {
        let g =
            sweep_aspect_ratio(FRAC_PI_4, -FRAC_PI_4, &linspace(1.0, 10.0, 10), &[1e-6]).unwrap();
        for i in 0..10 {
            assert!(g.purity[i][0] > 0.999999);
            assert!(g.success[i][0] < 1e-5);
        }
    }

    #[test]
    fn aligned_orientations_are_pure() {
        let g = sweep_orientation(5.0, &[0.0, FRAC_PI_2], &default_filter_widths()).unwrap();
        assert!(g.purity.iter().flatten().all(|&p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn near_axis_orientation_has_higher_success() {
        let g = sweep_orientation(5.0, &[0.05, FRAC_PI_4], &[0.3, 1.0, 3.0]).unwrap();
        for j in 0..3 {
            assert!(g.success[0][j] > g.success[1][j]);
        }
    }

    #[test]
    fn orientation_window_reaches_ninety_percent() {
        let thetas = linspace(0.25 * std::f64::consts::PI, 0.42 * std::f64::consts::PI, 8);
        let g = sweep_orientation(5.0, &thetas, &logspace(1e-2, 1e1, 1001)).unwrap();
        for i in 0..thetas.len() {
            let s = g.best_success_above(i, 0.9).unwrap();
            assert!(s > 0.15, "θ₁={}: {s}", thetas[i]);
        }
    }

    #[test]
    fn surfaces_match_direct_evaluation_and_ignore_order() {
        let ratios = [1.5, 3.0, 7.0];
        let widths = [0.05, 0.5, 5.0];
        let g = sweep_aspect_ratio(0.6, -0.8, &ratios, &widths).unwrap();
        let rev = sweep_aspect_ratio(0.6, -0.8, &[7.0, 3.0, 1.5], &[5.0, 0.5, 0.05]).unwrap();
        for i in 0..3 {
            let jsa = DoubleGaussianJsa::new(1.0, ratios[i], 0.6, -0.8).unwrap();
            for j in 0..3 {
                let f = GaussianFilter::centered(widths[j]).unwrap();
                assert_eq!(g.purity[i][j], closed_form_purity(&jsa, &f));
                assert_eq!(g.success[i][j], closed_form_success(&jsa, &f));
                assert_eq!(g.purity[i][j], rev.purity[2 - i][2 - j]);
                assert_eq!(g.success[i][j], rev.success[2 - i][2 - j]);
            }
        }
    }

    #[test]
    fn ktp_tradeoff_values() {
        let ktp = DoubleGaussianJsa::ktp_waveguide();
        let pts = tradeoff_curve(&ktp, &[0.12 * 6.0], false, &QuadratureSpec::default()).unwrap();
        assert!((pts[0].purity - 0.78).abs() < 0.02);
        assert!((pts[0].visibility - 0.64).abs() < 0.02);
        assert!((pts[0].visibility - pts[0].purity / (2.0 - pts[0].purity)).abs() < 1e-15);
    }

    #[test]
    fn two_filters_trade_rate_for_purity() {
        let ktp = DoubleGaussianJsa::ktp_waveguide();
        let widths = [0.5, 1.5, 6.0];
        let spec = QuadratureSpec::default();
        let one = tradeoff_curve(&ktp, &widths, false, &spec).unwrap();
        let two = tradeoff_curve(&ktp, &widths, true, &spec).unwrap();
        for (a, b) in one.iter().zip(&two) {
            assert!(b.purity > a.purity && b.success < a.success, "{a:?} {b:?}");
        }
    }

    #[test]
    fn success_increases_and_purity_decreases_along_curves() {
        let spec = QuadratureSpec::default();
        for jsa in [
            DoubleGaussianJsa::ktp_waveguide(),
            DoubleGaussianJsa::new(1.0, 5.0, 0.3, -1.0).unwrap(),
        ] {
            let pts = tradeoff_curve(&jsa, &logspace(1e-2, 1e2, 200), false, &spec).unwrap();
            assert!(pts.windows(2).all(|w| w[1].success > w[0].success));
            assert!(monotonicity_violations(&pts).is_empty());
        }
        let bumpy = [
            TradeoffPoint {
                sigma_f: 2.0,
                success: 0.5,
                purity: 0.8,
                visibility: 0.0,
            },
            TradeoffPoint {
                sigma_f: 1.0,
                success: 0.4,
                purity: 0.7,
                visibility: 0.0,
            },
        ];
        assert_eq!(monotonicity_violations(&bumpy), vec![(1, 0)]);
    }

    #[test]
    fn ktp_half_visibility_filter() {
        let ktp = DoubleGaussianJsa::ktp_waveguide();
        let s = solve_filter_for_target(&ktp, Target::Visibility(0.5), DEFAULT_TOLERANCE).unwrap();
        assert!((s.sigma_f / 6.0 - 0.16).abs() < 0.02, "{}", s.sigma_f / 6.0);
        assert!(s.visibility >= 0.5 && s.monotone);
    }

    #[test]
    fn solver_cross_checks_with_quadrature() {
        let jsa = DoubleGaussianJsa::new(1.0, 5.0, FRAC_PI_4, -FRAC_PI_4).unwrap();
        let s = solve_filter_for_target(&jsa, Target::Purity(0.9), DEFAULT_TOLERANCE).unwrap();
        assert!(s.purity >= 0.9 && s.purity - 0.9 < DEFAULT_TOLERANCE);
        let f = SpectralFilter::gaussian(0.0, s.sigma_f).unwrap();
        let h = heralding(&jsa, &f, &QuadratureSpec::default()).unwrap();
        assert!((h.purity - s.purity).abs() < 1e-6);
        assert!((h.success - s.success).abs() < 1e-6);
    }

    #[test]
    fn separable_source_takes_widest_filter() {
        let sep = DoubleGaussianJsa::new(1.0, 1.0, FRAC_PI_4, -FRAC_PI_4).unwrap();
        let s = solve_filter_for_target(&sep, Target::Purity(0.9), DEFAULT_TOLERANCE).unwrap();
        assert!((s.sigma_f - BRACKET.1).abs() < 1e-12);
        assert_eq!(s.purity, 1.0);
    }

    #[test]
    fn unachievable_targets_are_reported() {
        let ktp = DoubleGaussianJsa::ktp_waveguide();
        for t in [
            Target::Purity(1.0),
            Target::Purity(1.2),
            Target::Visibility(1.0),
            Target::Purity(0.0),
        ] {
            assert!(matches!(
                solve_filter_for_target(&ktp, t, 1e-4),
                Err(Error::Unachievable { .. })
            ));
        }
        assert!(matches!(
            solve_filter_for_target(&ktp, Target::Purity(0.999999999999), 1e-4),
            Err(Error::Unachievable { .. })
        ));
    }

    #[test]
    fn csv_layouts() {
        let g = sweep_aspect_ratio(FRAC_PI_4, -FRAC_PI_4, &[1.0, 2.0], &[0.1, 1.0, 10.0]).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "aspect_ratio,sigma_f_over_sigma1,purity,success,visibility"
        );
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("1.00000000000e0,1.00000000000e-1,1.00000000000e0,"));
        let mut buf = Vec::new();
        let pts = tradeoff_curve(
            &DoubleGaussianJsa::ktp_waveguide(),
            &[1.0],
            false,
            &QuadratureSpec::default(),
        )
        .unwrap();
        write_tradeoff_csv(&pts, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("sigma_f,success,purity,visibility\n"));
    }

    proptest! {
        #[test]
        fn success_strictly_increases_with_width(
            s1 in 0.2f64..5.0, s2 in 0.2f64..5.0, t1 in -1.5f64..1.5, d in 0.1f64..3.0,
            w in 0.01f64..10.0, k in 1.01f64..3.0,
        ) {
            let jsa = DoubleGaussianJsa::new(s1, s2, t1, t1 - d).unwrap();
            let p = tradeoff_curve(&jsa, &[w, k * w], false, &QuadratureSpec::default()).unwrap();
            prop_assert!(p[1].success > p[0].success);
            prop_assert!(p[1].purity <= p[0].purity + 1e-12);
        }
    }
}
