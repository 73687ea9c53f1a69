//! Reference engine: every heralding and interference quantity as a multi-dimensional
//! integral over the joint spectral amplitude.
//!
//! Integrals use tensor-product Gauss–Legendre rules on a truncated window. The 4-fold
//! integrals never run in O(N⁴): the herald frequency is contracted first into the
//! filtered reduced density matrix
//!
//! M(ω, ω″) = ∫ |t(ω′)|² Φ(ω, ω′) Φ*(ω″, ω′) dω′,
//!
//! after which purity and the HOM overlap are O(N²) sums over M. Building M is a
//! single O(N³) matrix product.
//!
//! For analytic sources each axis window is centred on the filtered joint spectral
//! intensity and spans `half_extent` marginal standard deviations. The node count is
//! the larger of `n_nodes` and what the narrowest conditional width needs, so strongly
//! correlated sources get proportionally more nodes. Every result is checked against
//! the same computation with half the nodes.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filter::SpectralFilter;
use crate::jsa::{DoubleGaussianJsa, GriddedJsa};
use crate::linalg::Split;

/// Largest change tolerated between the full rule and the half-size rule.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

/// Heralding probabilities below this leave the heralded state unnormalizable.
pub const MIN_SUCCESS: f64 = 1e-12;

// Interference terms below e^{-41.5} ≈ 1e-18 are dropped.
const INTERFERENCE_CUTOFF_EXPONENT: f64 = 41.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Minimum nodes per axis.
    pub n_nodes: usize,
    /// Window half-width in marginal standard deviations of the filtered intensity.
    pub half_extent: f64,
    /// Upper bound on nodes per axis.
    pub max_nodes: usize,
    pub check_convergence: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_nodes: 200,
            half_extent: 8.0,
            max_nodes: 4096,
            check_convergence: true,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 32 {
            return Err(invalid(format!(
                "quadrature needs at least 32 nodes, got {}",
                self.n_nodes
            )));
        }
        if !(self.half_extent >= 4.0) {
            return Err(invalid(format!(
                "quadrature half extent must be >= 4, got {}",
                self.half_extent
            )));
        }
        if self.max_nodes < self.n_nodes {
            return Err(invalid("max_nodes must be at least n_nodes"));
        }
        Ok(())
    }
}

/// A biphoton amplitude the quadrature engine can integrate.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Analytic(&'a DoubleGaussianJsa),
    /// Integrated with the rectangle rule on its own grid.
    Gridded(&'a GriddedJsa),
}

impl<'a> From<&'a DoubleGaussianJsa> for Source<'a> {
    fn from(j: &'a DoubleGaussianJsa) -> Self {
        Source::Analytic(j)
    }
}

impl<'a> From<&'a GriddedJsa> for Source<'a> {
    fn from(j: &'a GriddedJsa) -> Self {
        Source::Gridded(j)
    }
}

/// Heralding success probability 𝒮 and heralded-photon purity 𝒫.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heralding {
    pub success: f64,
    pub purity: f64,
}

/// Lossless, frequency-independent beamsplitter with R + T = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    pub reflectance: f64,
    pub transmittance: f64,
}

impl BeamSplitter {
    pub fn new(reflectance: f64, transmittance: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&reflectance)
            && (0.0..=1.0).contains(&transmittance)
            && (reflectance + transmittance - 1.0).abs() < 1e-12;
        if !ok {
            return Err(invalid(format!("beamsplitter needs R, T in [0, 1] with R + T = 1, got R={reflectance}, T={transmittance}")));
        }
        Ok(Self {
            reflectance,
            transmittance,
        })
    }

    pub fn with_reflectance(reflectance: f64) -> Result<Self> {
        Self::new(reflectance, 1.0 - reflectance)
    }

    pub fn balanced() -> Self {
        Self {
            reflectance: 0.5,
            transmittance: 0.5,
        }
    }

    pub(crate) fn rt(&self) -> f64 {
        self.reflectance * self.transmittance
    }
}

/// Coincidence probability ⟨n_Z n_W⟩ against relative delay Δτ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomCurve {
    pub delays: Vec<f64>,
    pub coincidences: Vec<f64>,
    pub beamsplitter: BeamSplitter,
}

impl HomCurve {
    /// Coincidence level far from the dip, 1 − 2RT.
    pub fn baseline(&self) -> f64 {
        1.0 - 2.0 * self.beamsplitter.rt()
    }

    pub fn minimum(&self) -> f64 {
        self.coincidences
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// (baseline − min)/(baseline + min) over the sampled delays.
    pub fn visibility(&self) -> f64 {
        let (b, m) = (self.baseline(), self.minimum());
        if b + m == 0.0 {
            0.0
        } else {
            (b - m) / (b + m)
        }
    }

    /// Full width at half depth, by linear interpolation between samples. `None` when
    /// the curve has no dip or the samples do not bracket both half-depth crossings.
    pub fn fwhm(&self) -> Option<f64> {
        let (b, m) = (self.baseline(), self.minimum());
        if !(b - m > 1e-12) {
            return None;
        }
        let level = 0.5 * (b + m);
        let c = &self.coincidences;
        let t = &self.delays;
        let k = c.iter().position(|&v| v == m)?;
        let cross = |i: usize, j: usize| t[i] + (level - c[i]) * (t[j] - t[i]) / (c[j] - c[i]);
        let left = (1..=k)
            .rev()
            .find(|&i| c[i - 1] >= level)
            .map(|i| cross(i - 1, i))?;
        let right = (k..c.len() - 1)
            .find(|&i| c[i + 1] >= level)
            .map(|i| cross(i, i + 1))?;
        Some(right - left)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// three-term Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[derive(Clone, Debug, Default)]
struct AxisRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AxisRule {
    fn gauss(lo: f64, hi: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        Self {
            nodes: x.iter().map(|x| mid + half * x).collect(),
            weights: w.iter().map(|w| half * w).collect(),
        }
    }

    /// Gauss–Legendre on each panel between consecutive breakpoints, with nodes shared
    /// out in proportion to panel length.
    fn composite(breaks: &[f64], total: usize) -> Self {
        let span = breaks[breaks.len() - 1] - breaks[0];
        let mut rule = AxisRule::default();
        for w in breaks.windows(2) {
            let n = ((total as f64 * (w[1] - w[0]) / span).ceil() as usize).max(4);
            let panel = AxisRule::gauss(w[0], w[1], n);
            rule.nodes.extend(panel.nodes);
            rule.weights.extend(panel.weights);
        }
        rule
    }

    fn uniform(grid: &[f64], step: f64, stride: usize) -> Self {
        let nodes: Vec<f64> = grid.iter().step_by(stride).copied().collect();
        let weights = vec![step * stride as f64; nodes.len()];
        Self { nodes, weights }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn filtered_weights(&self, filter: Option<&SpectralFilter>) -> Vec<f64> {
        match filter {
            None | Some(SpectralFilter::Open) => self.weights.clone(),
            Some(f) => self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f.transmission(x))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Level {
    Full,
    Half,
}

/// Window and node count along one axis of an analytic source.
#[derive(Clone, Copy, Debug)]
struct Window {
    lo: f64,
    hi: f64,
    nodes: usize,
}

impl Window {
    fn union(self, other: Window) -> Window {
        let (lo, hi) = (self.lo.min(other.lo), self.hi.max(other.hi));
        let density = (self.nodes as f64 / (self.hi - self.lo))
            .max(other.nodes as f64 / (other.hi - other.lo));
        Window {
            lo,
            hi,
            nodes: (density * (hi - lo)).ceil() as usize,
        }
    }

    fn rule(
        &self,
        filter: Option<&SpectralFilter>,
        spec: &QuadratureSpec,
        level: Level,
    ) -> AxisRule {
        let mut n = self.nodes.max(spec.n_nodes).min(spec.max_nodes);
        if level == Level::Half {
            n = (n / 2).max(16);
        }
        match filter.and_then(SpectralFilter::support) {
            None => AxisRule::gauss(self.lo, self.hi, n),
            Some((a, b)) => {
                let (lo, hi) = (self.lo.max(a), self.hi.min(b));
                if !(hi > lo) {
                    return AxisRule::default();
                }
                let mut breaks = vec![lo];
                if let Some(SpectralFilter::Tabulated { grid, .. }) = filter {
                    breaks.extend(grid.iter().copied().filter(|&g| g > lo && g < hi));
                }
                breaks.push(hi);
                let share = (n as f64 * (hi - lo) / (self.hi - self.lo)).ceil() as usize;
                AxisRule::composite(&breaks, share.max(16))
            }
        }
    }
}

fn analytic_window(
    jsa: &DoubleGaussianJsa,
    herald: Option<&SpectralFilter>,
    heralded: Option<&SpectralFilter>,
    axis: usize,
    resolution: f64,
    spec: &QuadratureSpec,
) -> Window {
    let env = jsa.envelope(herald, heralded);
    let half = spec.half_extent * env.marginal_std[axis];
    let nodes = (resolution * half / env.conditional_std[axis]).ceil() as usize;
    Window {
        lo: env.mean[axis] - half,
        hi: env.mean[axis] + half,
        nodes,
    }
}

const RESOLUTION: f64 = 5.0;

struct Sampled {
    signal: AxisRule,
    idler: AxisRule,
    amp: Split,
}

fn sample_analytic(jsa: &DoubleGaussianJsa, signal: AxisRule, idler: AxisRule) -> Sampled {
    let re = DMatrix::from_fn(signal.len(), idler.len(), |i, j| {
        jsa.amplitude(signal.nodes[i], idler.nodes[j])
    });
    Sampled {
        signal,
        idler,
        amp: Split::real(re),
    }
}

fn sample_gridded(g: &GriddedJsa, level: Level) -> Sampled {
    let stride = if level == Level::Full { 1 } else { 2 };
    let signal = AxisRule::uniform(g.signal_grid(), g.signal_step(), stride);
    let idler = AxisRule::uniform(g.idler_grid(), g.idler_step(), stride);
    let sub = if stride == 1 {
        g.amplitudes().clone()
    } else {
        DMatrix::from_fn(signal.len(), idler.len(), |i, j| {
            g.amplitudes()[(2 * i, 2 * j)]
        })
    };
    Sampled {
        signal,
        idler,
        amp: Split::from_complex(&sub),
    }
}

/// Sampled amplitude for single- or two-filter heralding.
fn sample_heralding(
    source: Source<'_>,
    herald: &SpectralFilter,
    heralded: Option<&SpectralFilter>,
    spec: &QuadratureSpec,
    level: Level,
) -> Sampled {
    match source {
        Source::Gridded(g) => sample_gridded(g, level),
        Source::Analytic(jsa) => {
            let sw = analytic_window(jsa, Some(herald), heralded, 0, RESOLUTION, spec);
            let iw = analytic_window(jsa, Some(herald), heralded, 1, RESOLUTION, spec);
            sample_analytic(
                jsa,
                sw.rule(heralded, spec, level),
                iw.rule(Some(herald), spec, level),
            )
        }
    }
}

/// Filtered reduced density matrix of the heralded photon on the signal nodes.
fn reduced(s: &Sampled, herald: &SpectralFilter) -> Split {
    let d: Vec<f64> = s
        .idler
        .filtered_weights(Some(herald))
        .iter()
        .map(|w| w.sqrt())
        .collect();
    let mut x = s.amp.clone();
    x.scale_columns(&d);
    x.gram()
}

fn heralding_from(m: &Split, weights: &[f64]) -> (f64, f64) {
    let n = weights.len();
    let success: f64 = (0..n).map(|i| weights[i] * m.re[(i, i)]).sum();
    let mut overlap = 0.0;
    for k in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += weights[i] * m.norm_sqr(i, k);
        }
        overlap += weights[k] * col;
    }
    (success, overlap)
}

fn evaluate_heralding(
    source: Source<'_>,
    herald: &SpectralFilter,
    heralded: Option<&SpectralFilter>,
    spec: &QuadratureSpec,
    level: Level,
) -> (f64, f64) {
    let s = sample_heralding(source, herald, heralded, spec, level);
    if s.signal.len() == 0 || s.idler.len() == 0 {
        return (0.0, 0.0);
    }
    let m = reduced(&s, herald);
    let w = s.signal.filtered_weights(heralded);
    heralding_from(&m, &w)
}

fn check(quantity: &'static str, fine: f64, coarse: f64) -> Result<()> {
    let change = (fine - coarse).abs();
    if change > CONVERGENCE_TOLERANCE || !fine.is_finite() {
        return Err(Error::NonConvergence { quantity, change });
    }
    Ok(())
}

fn heralding_checked(
    source: Source<'_>,
    herald: &SpectralFilter,
    heralded: Option<&SpectralFilter>,
    spec: &QuadratureSpec,
    need_purity: bool,
) -> Result<Heralding> {
    spec.validate()?;
    let purity_of = |(s, o): (f64, f64)| -> Result<f64> {
        if s < MIN_SUCCESS {
            return Err(Error::Unnormalizable(s));
        }
        Ok((o / (s * s)).clamp(0.0, 1.0))
    };
    let fine = evaluate_heralding(source, herald, heralded, spec, Level::Full);
    let purity = if need_purity {
        purity_of(fine)?
    } else {
        f64::NAN
    };
    if spec.check_convergence {
        let coarse = evaluate_heralding(source, herald, heralded, spec, Level::Half);
        check("heralding success probability", fine.0, coarse.0)?;
        if need_purity {
            check("purity", purity, purity_of(coarse)?)?;
        }
    }
    Ok(Heralding {
        success: fine.0.max(0.0),
        purity,
    })
}

/// Purity of the heralded photon without any filtering, P = Tr[ρ²].
pub fn unfiltered_purity<'a>(jsa: impl Into<Source<'a>>, spec: &QuadratureSpec) -> Result<f64> {
    heralding_checked(jsa.into(), &SpectralFilter::Open, None, spec, true).map(|h| h.purity)
}

/// Probability 𝒮 = ∬ |t(ω′)|² |Φ(ω,ω′)|² that the herald passes its filter.
pub fn herald_success<'a>(
    jsa: impl Into<Source<'a>>,
    herald: &SpectralFilter,
    spec: &QuadratureSpec,
) -> Result<f64> {
    heralding_checked(jsa.into(), herald, None, spec, false).map(|h| h.success)
}

/// 𝒮 and the purity 𝒫 of the photon heralded through `herald`.
pub fn heralding<'a>(
    jsa: impl Into<Source<'a>>,
    herald: &SpectralFilter,
    spec: &QuadratureSpec,
) -> Result<Heralding> {
    heralding_checked(jsa.into(), herald, None, spec, true)
}

pub fn filtered_purity<'a>(
    jsa: impl Into<Source<'a>>,
    herald: &SpectralFilter,
    spec: &QuadratureSpec,
) -> Result<f64> {
    heralding(jsa, herald, spec).map(|h| h.purity)
}

/// (𝒫₂, 𝒮₂) with a second filter on the heralded photon: 𝒮₂ is the probability that
/// both photons pass their filters.
pub fn two_filter_quantities<'a>(
    jsa: impl Into<Source<'a>>,
    herald: &SpectralFilter,
    heralded: &SpectralFilter,
    spec: &QuadratureSpec,
) -> Result<Heralding> {
    heralding_checked(jsa.into(), herald, Some(heralded), spec, true)
}

struct DipSamples {
    interference: Vec<f64>,
}

fn evaluate_dip(
    source: Source<'_>,
    filter_x: &SpectralFilter,
    filter_y: &SpectralFilter,
    delays: &[f64],
    spec: &QuadratureSpec,
    level: Level,
) -> Result<DipSamples> {
    match source {
        Source::Gridded(g) => {
            let s = sample_gridded(g, level);
            let step = s.signal.weights[0];
            // Delays past the grid's Nyquist limit alias.
            if let Some(&t) = delays
                .iter()
                .find(|t| t.abs() * step > std::f64::consts::PI)
            {
                return Err(invalid(format!(
                    "delay {t} exceeds the range resolvable on this grid"
                )));
            }
            dip_overlaps(&s, &s, filter_x, filter_y, delays, f64::INFINITY)
        }
        Source::Analytic(jsa) => {
            // For a double-Gaussian the overlap falls off as exp(−Δτ²/2a) whatever the
            // herald filters are, so delays past the cutoff contribute nothing.
            let a = jsa.intensity_precision().a;
            let cutoff = (2.0 * a * INTERFERENCE_CUTOFF_EXPONENT).sqrt();
            let tau_max = delays
                .iter()
                .map(|t| t.abs())
                .filter(|&t| t <= cutoff)
                .fold(0.0, f64::max);
            let mut window = analytic_window(jsa, Some(filter_x), None, 0, RESOLUTION, spec).union(
                analytic_window(jsa, Some(filter_y), None, 0, RESOLUTION, spec),
            );
            // Resolve the delay phase e^{iωΔτ} across the window.
            let phase_nodes =
                ((window.hi - window.lo) * (tau_max + 12.8 * a.sqrt()) / 4.0).ceil() as usize;
            window.nodes = window.nodes.max(phase_nodes);
            let signal = window.rule(None, spec, level);
            let idler_x = analytic_window(jsa, Some(filter_x), None, 1, RESOLUTION, spec).rule(
                Some(filter_x),
                spec,
                level,
            );
            let idler_y = analytic_window(jsa, Some(filter_y), None, 1, RESOLUTION, spec).rule(
                Some(filter_y),
                spec,
                level,
            );
            let sx = sample_analytic(jsa, signal.clone(), idler_x);
            let sy = sample_analytic(jsa, signal, idler_y);
            dip_overlaps(&sx, &sy, filter_x, filter_y, delays, cutoff)
        }
    }
}

/// Normalized interference term S_X⁻¹S_Y⁻¹ ∬ M_X(ω,ω″) M_Y*(ω,ω″) e^{i(ω−ω″)Δτ} per delay.
/// Both samplings share the signal rule.
fn dip_overlaps(
    sx: &Sampled,
    sy: &Sampled,
    filter_x: &SpectralFilter,
    filter_y: &SpectralFilter,
    delays: &[f64],
    cutoff: f64,
) -> Result<DipSamples> {
    if sx.idler.len() == 0 || sy.idler.len() == 0 {
        return Err(Error::Unnormalizable(0.0));
    }
    let mx = reduced(sx, filter_x);
    let my = reduced(sy, filter_y);
    let w = &sx.signal.weights;
    let n = w.len();
    let success_x: f64 = (0..n).map(|i| w[i] * mx.re[(i, i)]).sum();
    let success_y: f64 = (0..n).map(|i| w[i] * my.re[(i, i)]).sum();
    if !(success_x >= MIN_SUCCESS && success_y >= MIN_SUCCESS) {
        return Err(Error::Unnormalizable(success_x.min(success_y)));
    }
    let norm = success_x * success_y;
    // F = w_i w_k M_X(i,k) conj(M_Y(i,k)) is Hermitian, so the overlap is real.
    let mut f_re = DMatrix::zeros(n, n);
    let mut f_im = DMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            let z = mx.get(i, k) * my.get(i, k).conj() * (w[i] * w[k]);
            f_re[(i, k)] = z.re;
            f_im[(i, k)] = z.im;
        }
    }
    let has_im = f_im.iter().any(|&v| v != 0.0);
    let nodes = DVector::from_column_slice(&sx.signal.nodes);
    let interference = delays
        .par_iter()
        .map(|&tau| {
            if tau.abs() > cutoff {
                return 0.0;
            }
            let c = nodes.map(|x| (x * tau).cos());
            let s = nodes.map(|x| (x * tau).sin());
            let mut v = c.dot(&(&f_re * &c)) + s.dot(&(&f_re * &s));
            if has_im {
                v += c.dot(&(&f_im * &s)) - s.dot(&(&f_im * &c));
            }
            v / norm
        })
        .collect();
    Ok(DipSamples { interference })
}

/// HOM coincidence probability for two sources heralded through `filter_x` and
/// `filter_y`, interfered on `beamsplitter` with relative delays `delays` (ps).
pub fn hom_dip<'a>(
    jsa: impl Into<Source<'a>>,
    filter_x: &SpectralFilter,
    filter_y: &SpectralFilter,
    beamsplitter: BeamSplitter,
    delays: &[f64],
    spec: &QuadratureSpec,
) -> Result<HomCurve> {
    spec.validate()?;
    let source = jsa.into();
    let fine = evaluate_dip(source, filter_x, filter_y, delays, spec, Level::Full)?;
    if spec.check_convergence {
        let coarse = evaluate_dip(source, filter_x, filter_y, delays, spec, Level::Half)?;
        for (a, b) in fine.interference.iter().zip(&coarse.interference) {
            check("HOM coincidence probability", *a, *b)?;
        }
    }
    let rt = beamsplitter.rt();
    let coincidences = fine
        .interference
        .iter()
        .map(|x| (1.0 - 2.0 * rt * (1.0 + x)).clamp(0.0, 1.0))
        .collect();
    Ok(HomCurve {
        delays: delays.to_vec(),
        coincidences,
        beamsplitter,
    })
}
