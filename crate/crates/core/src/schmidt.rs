//! Schmidt decomposition of gridded amplitudes and the filter calculus in the
//! Schmidt basis.
//!
//! A grid amplitude Φᵢⱼ scaled by √(ΔωΔω′) has the SVD U·diag(√p)·Vᴴ. The Schmidt
//! functions are Γ_μ = U_{·μ}/√Δω and Θ_μ = Vᴴ_{μ·}/√Δω′, so that
//! Φ(ω, ω′) = Σ √p_μ Γ_μ(ω) Θ_μ(ω′) with ⟨Γ_μ, Γ_ν⟩ = ⟨Θ_μ, Θ_ν⟩ = δ_μν.
//!
//! A filter |t|² on the idler enters only through
//! Q_μν = Σ |t(ω′)|² Θ_μ(ω′) Θ*_ν(ω′) Δω′, and with Q̃ = √p Q √p:
//!
//! 𝒮 = Tr Q̃,  𝒫 = Σ|Q̃_μν|² / 𝒮².

use std::io::Write;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filter::{Side, SpectralFilter};
use crate::jsa::GriddedJsa;
use crate::quadrature::{BeamSplitter, Heralding, HomCurve, MIN_SUCCESS};

/// Default truncation: modes with p_μ < 1e-10·p₀ are dropped.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-10;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// Ordered Schmidt coefficients with the signal and idler mode functions.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    coefficients: Vec<f64>,
    /// Γ_μ in column μ, sampled on the signal grid.
    signal_modes: DMatrix<Complex64>,
    /// Θ_μ in column μ, sampled on the idler grid.
    idler_modes: DMatrix<Complex64>,
    signal_grid: Vec<f64>,
    idler_grid: Vec<f64>,
    signal_step: f64,
    idler_step: f64,
}

impl SchmidtDecomposition {
    /// p_μ, descending.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn n_modes(&self) -> usize {
        self.coefficients.len()
    }

    pub fn signal_modes(&self) -> &DMatrix<Complex64> {
        &self.signal_modes
    }

    pub fn idler_modes(&self) -> &DMatrix<Complex64> {
        &self.idler_modes
    }

    pub fn signal_grid(&self) -> &[f64] {
        &self.signal_grid
    }

    pub fn idler_grid(&self) -> &[f64] {
        &self.idler_grid
    }

    /// Signal mode Γ_μ as grid samples.
    pub fn signal_mode(&self, mu: usize) -> Vec<Complex64> {
        self.signal_modes.column(mu).iter().copied().collect()
    }

    /// Idler mode Θ_μ as grid samples.
    pub fn idler_mode(&self, mu: usize) -> Vec<Complex64> {
        self.idler_modes.column(mu).iter().copied().collect()
    }

    /// K = 1/Σp_μ².
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.purity()
    }

    /// Unfiltered heralded purity Σp_μ².
    pub fn purity(&self) -> f64 {
        self.coefficients.iter().map(|p| p * p).sum()
    }

    /// Σ_{μ<n} √p_μ Γ_μ(ω) Θ_μ(ω′) on the grid.
    pub fn reconstruct(&self, n_modes: usize) -> DMatrix<Complex64> {
        let n = n_modes.min(self.n_modes());
        let mut gamma = self.signal_modes.columns(0, n).into_owned();
        for (mu, mut col) in gamma.column_iter_mut().enumerate() {
            col *= Complex64::from(self.coefficients[mu].sqrt());
        }
        gamma * self.idler_modes.columns(0, n).transpose()
    }

    /// Frobenius error of the n-mode reconstruction relative to ‖g‖.
    pub fn reconstruction_error(&self, g: &GriddedJsa, n_modes: usize) -> f64 {
        let r = self.reconstruct(n_modes);
        (r - g.amplitudes()).norm() / g.amplitudes().norm()
    }
}

/// Filter overlap matrix Q_μν in the Schmidt basis of one side.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapMatrix {
    pub matrix: DMatrix<Complex64>,
    pub side: Side,
}

/// Heralding by an ideal phase-sensitive projection of the idler onto Θ_a.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeProjection {
    pub mode_index: usize,
    pub success: f64,
    pub purity: f64,
    /// Spectral amplitude of the heralded photon, Γ_a on the signal grid.
    pub heralded_mode: Vec<Complex64>,
}

/// Schmidt decomposition by SVD of the gridded amplitude.
///
/// Each mode pair is phase-fixed so that the first signal sample within 1e-9 of the
/// largest magnitude is real and positive. Modes whose coefficients tie to 1e-12 are
/// ordered by the position of their first significant signal sample.
pub fn decompose(g: &GriddedJsa, rel_threshold: f64) -> Result<SchmidtDecomposition> {
    if !(0.0..1.0).contains(&rel_threshold) {
        return Err(invalid(format!(
            "relative threshold must be in [0, 1), got {rel_threshold}"
        )));
    }
    let (ds, di) = (g.signal_step(), g.idler_step());
    let scale = g.cell_area().sqrt();
    let (u, sv, v_t) = if g.is_real() {
        let m = g.amplitudes().map(|z| z.re * scale);
        let svd = SVD::try_new(m, true, true, SVD_EPS, SVD_MAX_ITER).ok_or(Error::SvdFailed)?;
        let to_c = |m: DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
        (
            to_c(svd.u.ok_or(Error::SvdFailed)?),
            svd.singular_values,
            to_c(svd.v_t.ok_or(Error::SvdFailed)?),
        )
    } else {
        let m = g.amplitudes() * Complex64::from(scale);
        let svd = SVD::try_new(m, true, true, SVD_EPS, SVD_MAX_ITER).ok_or(Error::SvdFailed)?;
        (
            svd.u.ok_or(Error::SvdFailed)?,
            svd.singular_values,
            svd.v_t.ok_or(Error::SvdFailed)?,
        )
    };
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdFailed);
    }

    let first_significant = |k: usize| {
        let col = u.column(k);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        col.iter().position(|z| z.norm() >= max * 1e-6).unwrap_or(0)
    };
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && sv[order[end - 1]].powi(2) - sv[order[end]].powi(2) <= 1e-12 {
            end += 1;
        }
        if end - start > 1 && sv[order[start]].powi(2) > 1e-12 {
            order[start..end].sort_by_key(|&k| first_significant(k));
        }
        start = end;
    }

    let p0 = order.first().map(|&k| sv[k] * sv[k]).unwrap_or(0.0);
    if !(p0 > 0.0) {
        return Err(invalid("cannot decompose an all-zero amplitude"));
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| sv[k] * sv[k] >= rel_threshold * p0)
        .collect();

    let (ns, ni) = (u.nrows(), v_t.ncols());
    let mut signal_modes = DMatrix::zeros(ns, kept.len());
    let mut idler_modes = DMatrix::zeros(ni, kept.len());
    let mut coefficients = Vec::with_capacity(kept.len());
    let (gs, gi) = (1.0 / ds.sqrt(), 1.0 / di.sqrt());
    for (mu, &k) in kept.iter().enumerate() {
        let col = u.column(k);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let anchor = col
            .iter()
            .find(|z| z.norm() >= max * (1.0 - 1e-9))
            .copied()
            .unwrap_or(Complex64::from(1.0));
        let phase = anchor.conj() / anchor.norm();
        for i in 0..ns {
            signal_modes[(i, mu)] = col[i] * phase * gs;
        }
        for j in 0..ni {
            idler_modes[(j, mu)] = v_t[(k, j)] * phase.conj() * gi;
        }
        coefficients.push(sv[k] * sv[k]);
    }
    Ok(SchmidtDecomposition {
        coefficients,
        signal_modes,
        idler_modes,
        signal_grid: g.signal_grid().to_vec(),
        idler_grid: g.idler_grid().to_vec(),
        signal_step: ds,
        idler_step: di,
    })
}

/// Q_μν = Σ |t(ω)|² X_μ(ω) X*_ν(ω) Δω with X = Θ (idler) or Γ (signal).
pub fn overlap_matrix(
    d: &SchmidtDecomposition,
    filter: &SpectralFilter,
    side: Side,
) -> OverlapMatrix {
    let (modes, grid, step) = match side {
        Side::Signal => (&d.signal_modes, &d.signal_grid, d.signal_step),
        Side::Idler => (&d.idler_modes, &d.idler_grid, d.idler_step),
    };
    let mut weighted = modes.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= Complex64::from(step * filter.transmission(grid[i]));
    }
    let mut matrix = weighted.transpose() * modes.conjugate();
    // Exact Hermitian symmetry; the product above is Hermitian only to round-off.
    let n = matrix.nrows();
    for i in 0..n {
        matrix[(i, i)] = Complex64::from(matrix[(i, i)].re);
        for j in 0..i {
            let z = 0.5 * (matrix[(i, j)] + matrix[(j, i)].conj());
            matrix[(i, j)] = z;
            matrix[(j, i)] = z.conj();
        }
    }
    OverlapMatrix { matrix, side }
}

fn expect_side(q: &OverlapMatrix, side: Side, d: &SchmidtDecomposition) -> Result<()> {
    if q.side != side {
        return Err(invalid(format!(
            "expected a {side:?} overlap matrix, got {:?}",
            q.side
        )));
    }
    if q.matrix.nrows() != d.n_modes() {
        return Err(invalid(format!(
            "overlap matrix has {} modes, the decomposition {}",
            q.matrix.nrows(),
            d.n_modes()
        )));
    }
    Ok(())
}

/// Q̃ = √p Q √p.
fn weighted(d: &SchmidtDecomposition, q: &OverlapMatrix) -> DMatrix<Complex64> {
    let s: Vec<f64> = d.coefficients.iter().map(|p| p.sqrt()).collect();
    DMatrix::from_fn(q.matrix.nrows(), q.matrix.ncols(), |i, j| {
        q.matrix[(i, j)] * (s[i] * s[j])
    })
}

/// 𝒮 = Σ Q_μμ p_μ and 𝒫 = 𝒮⁻² Σ |Q_μν|² p_μ p_ν for an idler-side filter.
pub fn schmidt_quantities(d: &SchmidtDecomposition, q: &OverlapMatrix) -> Result<Heralding> {
    expect_side(q, Side::Idler, d)?;
    let qt = weighted(d, q);
    let success = qt.diagonal().iter().map(|z| z.re).sum::<f64>();
    if success < MIN_SUCCESS {
        return Err(Error::Unnormalizable(success));
    }
    let overlap = qt.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok(Heralding {
        success,
        purity: (overlap / (success * success)).min(1.0),
    })
}

/// (𝒫₂, 𝒮₂) with `q_idler` from the herald filter and `q_signal` from a filter on the
/// heralded photon:
///
/// 𝒮₂ = Σ √(p_μ p_ν) Q_μν Q′_μν,
/// 𝒫₂ = 𝒮₂⁻² Σ √(p_μ p_ν p_μ′ p_ν′) Q_μν Q_μ′ν′ Q′_μν′ Q′_μ′ν.
pub fn two_filter_schmidt(
    d: &SchmidtDecomposition,
    q_idler: &OverlapMatrix,
    q_signal: &OverlapMatrix,
) -> Result<Heralding> {
    expect_side(q_idler, Side::Idler, d)?;
    expect_side(q_signal, Side::Signal, d)?;
    let qt = weighted(d, q_idler);
    let qs = &q_signal.matrix;
    let success = qt.zip_map(qs, |a, b| a * b).iter().sum::<Complex64>().re;
    if success < MIN_SUCCESS {
        return Err(Error::Unnormalizable(success));
    }
    // With Q, Q′ Hermitian the quadruple sum is Σ Q̃ ∘ (Q′ Q̃ᵀ Q′).
    let inner = qs * qt.transpose() * qs;
    let overlap = qt
        .zip_map(&inner, |a, b| a * b)
        .iter()
        .sum::<Complex64>()
        .re;
    Ok(Heralding {
        success,
        purity: (overlap / (success * success)).clamp(0.0, 1.0),
    })
}

/// HOM coincidence probability for two copies of the source heralded through the
/// idler filters behind `q_x` and `q_y`.
///
/// The heralded states ρ = Σ Q̃_μν Γ_μ Γ*_ν are assembled on the signal grid and the
/// interference term Σ ρ_X(ω,ω″) ρ*_Y(ω,ω″) e^{i(ω−ω″)Δτ} Δω² is summed per delay.
pub fn hom_dip_schmidt(
    d: &SchmidtDecomposition,
    q_x: &OverlapMatrix,
    q_y: &OverlapMatrix,
    beamsplitter: BeamSplitter,
    delays: &[f64],
) -> Result<HomCurve> {
    expect_side(q_x, Side::Idler, d)?;
    expect_side(q_y, Side::Idler, d)?;
    let step = d.signal_step;
    if let Some(&t) = delays
        .iter()
        .find(|t| t.abs() * step > std::f64::consts::PI)
    {
        return Err(invalid(format!(
            "delay {t} exceeds the range resolvable on this grid"
        )));
    }
    let state = |q: &OverlapMatrix| -> Result<(DMatrix<Complex64>, f64)> {
        let qt = weighted(d, q);
        let success = qt.diagonal().iter().map(|z| z.re).sum::<f64>();
        if success < MIN_SUCCESS {
            return Err(Error::Unnormalizable(success));
        }
        let g = &d.signal_modes;
        Ok((g * qt * g.adjoint(), success))
    };
    let (rx, sx) = state(q_x)?;
    let (ry, sy) = state(q_y)?;
    let scale = step * step / (sx * sy);
    let f = rx.zip_map(&ry, |a, b| a * b.conj() * scale);
    let (f_re, f_im) = (f.map(|z| z.re), f.map(|z| z.im));
    let nodes = DVector::from_column_slice(&d.signal_grid);
    let rt = beamsplitter.rt();
    let coincidences = delays
        .par_iter()
        .map(|&tau| {
            let c = nodes.map(|x| (x * tau).cos());
            let s = nodes.map(|x| (x * tau).sin());
            let v = c.dot(&(&f_re * &c)) + s.dot(&(&f_re * &s)) + c.dot(&(&f_im * &s))
                - s.dot(&(&f_im * &c));
            (1.0 - 2.0 * rt * (1.0 + v)).clamp(0.0, 1.0)
        })
        .collect();
    Ok(HomCurve {
        delays: delays.to_vec(),
        coincidences,
        beamsplitter,
    })
}

/// Heralds on the idler being found in Schmidt mode Θ_a. The heralded photon is in the
/// pure state Γ_a and arrives with probability p_a.
pub fn mode_projection_herald(d: &SchmidtDecomposition, a: usize) -> Result<ModeProjection> {
    if a >= d.n_modes() {
        return Err(invalid(format!(
            "mode index {a} out of range, {} modes retained",
            d.n_modes()
        )));
    }
    Ok(ModeProjection {
        mode_index: a,
        success: d.coefficients[a],
        purity: 1.0,
        heralded_mode: d.signal_mode(a),
    })
}

/// Writes p_μ and the first `n_modes` mode functions as CSV.
///
/// Columns are `mu, p_mu, side, component` followed by one column per grid frequency;
/// every mode gives four rows (signal and idler, real and imaginary parts).
pub fn write_modes_csv<W: Write>(
    d: &SchmidtDecomposition,
    n_modes: usize,
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    let fmt = |x: f64| format!("{x:.11e}");
    let head = |grid: &[f64], side: &str| {
        let mut r = vec![
            "mu".to_string(),
            "p_mu".into(),
            "side".into(),
            "component".into(),
        ];
        r.extend(grid.iter().map(|&x| format!("{side}:{}", fmt(x))));
        r
    };
    w.write_record(head(&d.signal_grid, "signal"))?;
    if d.idler_grid != d.signal_grid {
        w.write_record(head(&d.idler_grid, "idler"))?;
    }
    for mu in 0..n_modes.min(d.n_modes()) {
        for (side, modes) in [("signal", &d.signal_modes), ("idler", &d.idler_modes)] {
            for (component, part) in [("re", 0), ("im", 1)] {
                let mut r = vec![
                    mu.to_string(),
                    fmt(d.coefficients[mu]),
                    side.into(),
                    component.into(),
                ];
                r.extend(
                    modes
                        .column(mu)
                        .iter()
                        .map(|z| fmt(if part == 0 { z.re } else { z.im })),
                );
                w.write_record(r)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Coefficient table in JSON form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchmidtSummary {
    pub n_modes: usize,
    pub schmidt_number: f64,
    pub coefficients: Vec<f64>,
}

impl From<&SchmidtDecomposition> for SchmidtSummary {
    fn from(d: &SchmidtDecomposition) -> Self {
        Self {
            n_modes: d.n_modes(),
            schmidt_number: d.schmidt_number(),
            coefficients: d.coefficients.clone(),
        }
    }
}
