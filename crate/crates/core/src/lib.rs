//! Heralded single photons from spectrally filtered photon-pair sources.
//!
//! The crate computes the heralding success probability 𝒮, the heralded-photon
//! purity 𝒫, the Schmidt structure of the joint spectral amplitude and
//! Hong–Ou–Mandel interference between two heralded photons. Every quantity is
//! available from three routes that cross-check each other:
//!
//! - [`analytic`]: closed forms for double-Gaussian sources and Gaussian filters;
//! - [`quadrature`]: direct Gauss–Legendre integration, for any filter shape;
//! - [`schmidt`]: SVD of a gridded amplitude and the filter overlap matrices.
//!
//! [`sweep`] explores filter width against source shape and picks filters for a
//! target purity or visibility. [`cli`] is the `biphoton` binary.
//!
//! ## Examples
//!
//! ```text
//! examples/
//! ├── ktp_source.rs        # the KTP waveguide: purity, rate and visibility vs filter
//! ├── schmidt_modes.rs     # SVD coefficients against the thermal law, mode shapes
//! ├── hom_dip.rs           # dip curves from quadrature, Schmidt basis and closed form
//! ├── tradeoff.rs          # purity/rate surfaces over aspect ratio and orientation
//! ├── two_filters.rs       # filtering the heralded photon as well
//! ├── mode_projection.rs   # heralding on a single Schmidt mode
//! ├── tabulated_filter.rs  # measured filter profiles and tabulated JSAs
//! └── solve_filter.rs      # widest filter for a target visibility
//! ```
//!
//! ```bash
//! cargo run --release --example ktp_source
//! ```
//!
//! ```
//! use biphoton::analytic::{closed_form_purity, closed_form_success};
//! use biphoton::filter::GaussianFilter;
//! use biphoton::jsa::DoubleGaussianJsa;
//!
//! let ktp = DoubleGaussianJsa::ktp_waveguide();
//! let filter = GaussianFilter::centered(0.12 * ktp.sigma1).unwrap();
//! let purity = closed_form_purity(&ktp, &filter);
//! assert!((purity - 0.78).abs() < 0.02);
//! assert!(closed_form_success(&ktp, &filter) < 0.5);
//! ```

// `!(x > 0.0)` style guards are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod filter;
pub mod jsa;
mod linalg;
pub mod quadrature;
pub mod schmidt;
pub mod sweep;

pub use error::{Error, Result};
pub use filter::{GaussianFilter, Side, SpectralFilter};
pub use jsa::{DoubleGaussianJsa, GridSpec, GriddedJsa};
pub use quadrature::{BeamSplitter, Heralding, HomCurve, QuadratureSpec};
pub use schmidt::SchmidtDecomposition;
