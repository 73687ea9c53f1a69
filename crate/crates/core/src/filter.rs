//! Spectral filters, described by their intensity transmission |t(ω)|².

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which photon of the pair a filter or mode function refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// First JSA argument ω, the heralded photon.
    Signal,
    /// Second JSA argument ω′, the herald photon.
    Idler,
}

/// Gaussian intensity transmission `exp[-(ω-ω₀)²/(2σ_f²)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFilter {
    pub center: f64,
    pub width: f64,
}

impl GaussianFilter {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!(
                "filter width must be positive, got {width}"
            )));
        }
        if !center.is_finite() {
            return Err(invalid("filter center must be finite"));
        }
        Ok(Self { center, width })
    }

    pub fn centered(width: f64) -> Result<Self> {
        Self::new(0.0, width)
    }

    pub fn transmission(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        (-d * d / (2.0 * self.width * self.width)).exp()
    }

    /// Zero-phase amplitude `exp[-(ω-ω₀)²/(4σ_f²)]`, the square root of the transmission.
    pub fn amplitude(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        (-d * d / (4.0 * self.width * self.width)).exp()
    }
}

/// Intensity transmission profile of a filter.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralFilter {
    /// All-pass: |t|² ≡ 1.
    Open,
    Gaussian(GaussianFilter),
    /// Piecewise-linear profile on `grid`, zero outside it.
    Tabulated {
        grid: Vec<f64>,
        transmission: Vec<f64>,
    },
}

impl SpectralFilter {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        GaussianFilter::new(center, width).map(SpectralFilter::Gaussian)
    }

    pub fn tabulated(grid: Vec<f64>, transmission: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != transmission.len() {
            return Err(invalid(format!(
                "tabulated filter needs matching grid/transmission of length >= 2 (got {} and {})",
                grid.len(),
                transmission.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(invalid(
                "tabulated filter grid must be finite and strictly increasing",
            ));
        }
        if transmission.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(invalid("tabulated transmission must lie in [0, 1]"));
        }
        Ok(SpectralFilter::Tabulated { grid, transmission })
    }

    /// Intensity transmission |t(ω)|², always in [0, 1].
    pub fn transmission(&self, omega: f64) -> f64 {
        match self {
            SpectralFilter::Open => 1.0,
            SpectralFilter::Gaussian(g) => g.transmission(omega),
            SpectralFilter::Tabulated { grid, transmission } => {
                interpolate(grid, transmission, omega)
            }
        }
    }

    /// Zero-phase field amplitude t(ω) with |t|² equal to [`transmission`](Self::transmission).
    pub fn amplitude(&self, omega: f64) -> f64 {
        match self {
            SpectralFilter::Gaussian(g) => g.amplitude(omega),
            _ => self.transmission(omega).sqrt(),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianFilter> {
        match self {
            SpectralFilter::Gaussian(g) => Some(g),
            _ => None,
        }
    }

    /// Interval outside which the transmission vanishes, if finite.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            SpectralFilter::Tabulated { grid, .. } => Some((grid[0], grid[grid.len() - 1])),
            _ => None,
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if !(x >= grid[0] && x <= grid[n - 1]) {
        return 0.0;
    }
    let k = grid.partition_point(|&g| g <= x);
    if k >= n {
        return values[n - 1];
    }
    let (x0, x1) = (grid[k - 1], grid[k]);
    let u = (x - x0) / (x1 - x0);
    values[k - 1] + u * (values[k] - values[k - 1])
}
