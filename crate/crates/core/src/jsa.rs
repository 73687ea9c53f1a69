//! Joint spectral amplitudes: the analytic double-Gaussian and its gridded form.
//!
//! Frequencies are detunings from the central signal/idler frequencies in rad/ps,
//! times are in ps. The first argument ω belongs to the heralded (signal) photon and
//! the second argument ω′ to the herald (idler) photon.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filter::SpectralFilter;

/// Product of two rotated Gaussians,
///
/// Φ(ω,ω′) = √(|sin(θ₁−θ₂)|/(πσ₁σ₂)) · exp[−((ω sinθ₁ + ω′ cosθ₁)/(√2σ₁))²]
///                                   · exp[−((ω sinθ₂ + ω′ cosθ₂)/(√2σ₂))²],
///
/// which is square-normalized over the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleGaussianJsa {
    pub sigma1: f64,
    pub sigma2: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Quadratic form of the joint spectral intensity: |Φ|² ∝ exp(−(a ω² + 2b ωω′ + c ω′²)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensityPrecision {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl IntensityPrecision {
    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }
}

impl DoubleGaussianJsa {
    pub fn new(sigma1: f64, sigma2: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma1.is_finite() && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!(
                "widths must be positive, got σ₁={sigma1}, σ₂={sigma2}"
            )));
        }
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(invalid("orientation angles must be finite"));
        }
        if (theta1 - theta2).sin().abs() < 1e-9 {
            return Err(invalid(format!(
                "orientations θ₁={theta1} and θ₂={theta2} are parallel; the amplitude is not normalizable"
            )));
        }
        Ok(Self {
            sigma1,
            sigma2,
            theta1,
            theta2,
        })
    }

    /// The periodically poled KTP waveguide source used as the worked example
    /// throughout: (σ₁, σ₂, θ₁, θ₂) = (6.0 ps⁻¹, 0.70 ps⁻¹, π/4, 0.97).
    pub fn ktp_waveguide() -> Self {
        Self {
            sigma1: 6.0,
            sigma2: 0.70,
            theta1: FRAC_PI_4,
            theta2: 0.97,
        }
    }

    pub fn amplitude(&self, signal: f64, idler: f64) -> f64 {
        let (s1, c1) = self.theta1.sin_cos();
        let (s2, c2) = self.theta2.sin_cos();
        let u = (signal * s1 + idler * c1) / (2f64.sqrt() * self.sigma1);
        let v = (signal * s2 + idler * c2) / (2f64.sqrt() * self.sigma2);
        self.prefactor() * (-(u * u) - v * v).exp()
    }

    fn prefactor(&self) -> f64 {
        ((self.theta1 - self.theta2).sin().abs() / (PI * self.sigma1 * self.sigma2)).sqrt()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma1.max(self.sigma2)
    }

    pub fn intensity_precision(&self) -> IntensityPrecision {
        let (s1, c1) = self.theta1.sin_cos();
        let (s2, c2) = self.theta2.sin_cos();
        let w1 = 1.0 / (self.sigma1 * self.sigma1);
        let w2 = 1.0 / (self.sigma2 * self.sigma2);
        IntensityPrecision {
            a: s1 * s1 * w1 + s2 * s2 * w2,
            b: s1 * c1 * w1 + s2 * c2 * w2,
            c: c1 * c1 * w1 + c2 * c2 * w2,
        }
    }

    /// Gaussian envelope of the filtered joint spectral intensity. Only Gaussian
    /// filters reshape it; other filters are ignored here.
    pub(crate) fn envelope(
        &self,
        herald: Option<&SpectralFilter>,
        heralded: Option<&SpectralFilter>,
    ) -> Envelope {
        let p = self.intensity_precision();
        let (mut a, b, mut c) = (p.a, p.b, p.c);
        let (mut gs, mut gi) = (0.0, 0.0);
        if let Some(g) = heralded.and_then(SpectralFilter::as_gaussian) {
            let gamma = 1.0 / (2.0 * g.width * g.width);
            a += gamma;
            gs = gamma * g.center;
        }
        if let Some(g) = herald.and_then(SpectralFilter::as_gaussian) {
            let gamma = 1.0 / (2.0 * g.width * g.width);
            c += gamma;
            gi = gamma * g.center;
        }
        let det = a * c - b * b;
        Envelope {
            mean: [(c * gs - b * gi) / det, (a * gi - b * gs) / det],
            marginal_std: [(c / (2.0 * det)).sqrt(), (a / (2.0 * det)).sqrt()],
            conditional_std: [(1.0 / (2.0 * a)).sqrt(), (1.0 / (2.0 * c)).sqrt()],
        }
    }
}

/// Mean, marginal and conditional standard deviations of a 2-D Gaussian intensity,
/// indexed `[signal, idler]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Envelope {
    pub mean: [f64; 2],
    pub marginal_std: [f64; 2],
    pub conditional_std: [f64; 2],
}

/// Physical description of a pulsed, phasematched source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcePhysicalParams {
    /// Pump pulse duration τ in ps; the pump bandwidth is Δω_p = 1/τ.
    pub pulse_duration: f64,
    pub pump_angle: f64,
    /// Phasematching bandwidth Δω_pm in rad/ps.
    pub pm_bandwidth: f64,
    pub pm_angle: f64,
}

impl SourcePhysicalParams {
    /// Maps to (σ₁, σ₂, θ₁, θ₂) = (Δω_p/√ln2, Δω_pm/√ln2, θ_p, θ_pm).
    pub fn to_jsa(&self) -> Result<DoubleGaussianJsa> {
        if !(self.pulse_duration > 0.0 && self.pm_bandwidth > 0.0) {
            return Err(invalid(
                "pulse duration and phasematching bandwidth must be positive",
            ));
        }
        let root_ln2 = 2f64.ln().sqrt();
        DoubleGaussianJsa::new(
            1.0 / self.pulse_duration / root_ln2,
            self.pm_bandwidth / root_ln2,
            self.pump_angle,
            self.pm_angle,
        )
    }
}

/// A complex amplitude sampled on a uniform rectangular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedJsa {
    signal: Vec<f64>,
    idler: Vec<f64>,
    amplitudes: DMatrix<Complex64>,
}

fn uniform_step(grid: &[f64], name: &str) -> Result<f64> {
    if grid.len() < 2 {
        return Err(invalid(format!("{name} grid needs at least two points")));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) || grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!(
            "{name} grid must be finite and increasing"
        )));
    }
    // Tabulated inputs carry ~12 significant digits, so allow a little more than round-off.
    if grid
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step)
    {
        return Err(invalid(format!("{name} grid is not uniformly spaced")));
    }
    Ok(step)
}

impl GriddedJsa {
    pub fn new(signal: Vec<f64>, idler: Vec<f64>, amplitudes: DMatrix<Complex64>) -> Result<Self> {
        uniform_step(&signal, "signal")?;
        uniform_step(&idler, "idler")?;
        if amplitudes.shape() != (signal.len(), idler.len()) {
            return Err(invalid(format!(
                "amplitude matrix is {:?}, grids are {}×{}",
                amplitudes.shape(),
                signal.len(),
                idler.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(invalid("amplitudes must be finite"));
        }
        Ok(Self {
            signal,
            idler,
            amplitudes,
        })
    }

    /// Samples `jsa` on the given grids without normalizing.
    pub fn sample(jsa: &DoubleGaussianJsa, signal: Vec<f64>, idler: Vec<f64>) -> Result<Self> {
        let amplitudes = DMatrix::from_fn(signal.len(), idler.len(), |i, j| {
            Complex64::new(jsa.amplitude(signal[i], idler[j]), 0.0)
        });
        Self::new(signal, idler, amplitudes)
    }

    pub fn signal_grid(&self) -> &[f64] {
        &self.signal
    }

    pub fn idler_grid(&self) -> &[f64] {
        &self.idler
    }

    pub fn amplitudes(&self) -> &DMatrix<Complex64> {
        &self.amplitudes
    }

    pub fn signal_step(&self) -> f64 {
        (self.signal[self.signal.len() - 1] - self.signal[0]) / (self.signal.len() - 1) as f64
    }

    pub fn idler_step(&self) -> f64 {
        (self.idler[self.idler.len() - 1] - self.idler[0]) / (self.idler.len() - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.signal_step() * self.idler_step()
    }

    /// Discrete norm Σ|Φᵢⱼ|²·ΔωΔω′.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0) {
            return Err(invalid("cannot normalize an all-zero amplitude"));
        }
        let scale = 1.0 / norm.sqrt();
        self.amplitudes.iter_mut().for_each(|z| *z *= scale);
        Ok(self)
    }

    /// True when no sample carries an imaginary part.
    pub fn is_real(&self) -> bool {
        self.amplitudes.iter().all(|z| z.im == 0.0)
    }
}

/// Symmetric square grid: `[−L, L]²` with `L = half_extent·max(σ₁, σ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_extent: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_extent: 6.0,
            n_points: 512,
        }
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

fn checked_normalize(raw: GriddedJsa) -> Result<GriddedJsa> {
    let norm = raw.norm();
    if !((norm - 1.0).abs() <= 0.05) {
        return Err(Error::CoarseGrid { norm });
    }
    raw.normalized()
}

/// Samples the analytic amplitude on a symmetric grid and renormalizes it.
///
/// Fails with [`Error::CoarseGrid`] if the discrete norm before renormalization is off
/// by more than 5%, which signals a grid that is too coarse or too small.
pub fn discretize(jsa: &DoubleGaussianJsa, spec: GridSpec) -> Result<GriddedJsa> {
    if spec.n_points < 64 {
        return Err(invalid(format!(
            "grid needs at least 64 points per axis, got {}",
            spec.n_points
        )));
    }
    if !(spec.half_extent >= 4.0) {
        return Err(invalid(format!(
            "grid half extent must be >= 4, got {}",
            spec.half_extent
        )));
    }
    let half = spec.half_extent * jsa.sigma_max();
    let grid = linspace(-half, half, spec.n_points);
    let step = grid[1] - grid[0];
    let env = jsa.envelope(None, None);
    let narrowest = env.conditional_std[0].min(env.conditional_std[1]);
    if step > narrowest / 4.0 {
        log::warn!(
            "grid step {step:.4} exceeds a quarter of the narrowest conditional width {narrowest:.4}; results may be under-resolved"
        );
    }
    checked_normalize(GriddedJsa::sample(jsa, grid.clone(), grid)?)
}

/// Samples the analytic amplitude on a grid sized to the source and the filters that
/// will be applied to it.
///
/// Each axis spans ±8 marginal standard deviations of the joint spectral intensity;
/// the step resolves the narrowest conditional width, including the narrowing from
/// Gaussian filters and the knot spacing of tabulated ones. Fails if an axis would need
/// more than `max_points` samples.
pub fn discretize_resolving(
    jsa: &DoubleGaussianJsa,
    herald: Option<&SpectralFilter>,
    heralded: Option<&SpectralFilter>,
    max_points: usize,
) -> Result<GriddedJsa> {
    let open = jsa.envelope(None, None);
    let filtered = jsa.envelope(herald, heralded);
    let knot_step = |f: Option<&SpectralFilter>| match f {
        Some(SpectralFilter::Tabulated { grid, .. }) => {
            grid.windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min)
                / 2.0
        }
        _ => f64::INFINITY,
    };
    let knots = [knot_step(heralded), knot_step(herald)];
    let mut axes = Vec::with_capacity(2);
    for k in 0..2 {
        let half = 8.0 * open.marginal_std[k];
        let step = (0.8 * open.conditional_std[k].min(filtered.conditional_std[k])).min(knots[k]);
        let mut n = (2.0 * half / step).ceil() as usize + 1;
        n = n.max(64) | 1;
        if n > max_points {
            return Err(invalid(format!(
                "resolving this source and filter needs {n} points per axis, more than the limit {max_points}"
            )));
        }
        axes.push(linspace(-half, half, n));
    }
    let idler = axes.pop().unwrap();
    let signal = axes.pop().unwrap();
    checked_normalize(GriddedJsa::sample(jsa, signal, idler)?)
}
