//! Free-probability predictions for the deformed single ring model
//! `A_n + U_n Σ_n V_n` and their Monte-Carlo validation.
//!
//! | module | contents |
//! |--------|----------|
//! | [`measures`] | atomic laws on ℝ, Cauchy/F/R transforms, moments |
//! | [`subordination`] | ⊞ subordination solver, `h₁/h₂`, support-gap certificates, ⊞-infinitely divisible helpers |
//! | [`domains`] | outer/inner outlier domains `Θ_out`, `Θ_in` |
//! | [`rmt`] | Haar sampling, model assembly, spectra, determinant functions, spectral radii |
//! | [`outliers`] | seeded outlier experiments |
//! | [`weingarten`] | exact and Monte-Carlo Haar moments |
//! | [`cli`] | config parsing and CSV/JSON/SVG emission |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod domains;
pub mod error;
pub mod measures;
pub mod outliers;
pub mod rmt;
pub mod subordination;
pub mod weingarten;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, FiniteMeasure, C64};
