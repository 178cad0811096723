//! Exact lattice computations for heavy-tailed random walks and renewal
//! processes in the domain of attraction of a stable law with index
//! `alpha in (0, 1)`.
//!
//! Layers, bottom-up:
//! - [`rv_kernel`]: the tail scale `A`, norming values `a_n`, rates `b_k`, `b~_k`.
//! - [`dist_factory`]: lattice step laws (baselines, spiky laws, counterexamples).
//! - [`conv_engine`]: FFT convolution, walk marginals, renewal mass, SRT ratios.
//! - [`functionals`]: the large-jump functionals and negligibility profiles.
//! - [`lld_mc`]: local large-deviation ratios, stable sampling, local limit checks.
//! - [`report`]: run configs, scenario runner and export.

pub mod conv_engine;
pub mod dist_factory;
pub mod error;
pub mod functionals;
pub mod lld_mc;
pub mod quad;
pub mod report;
pub mod rv_kernel;
pub mod stats;

pub use error::{Error, Result};
