//! Fuzzy multiphase image segmentation with total-variation regularization
//! and an L1 data fidelity, solved by ADMM.
//!
//! The segmentation energy over `N` classes is
//!
//! ```text
//! E(U, C) = sum_i { sum_x ||grad u_i(x)|| + lambda * sum_x |I(x) - c_i| * u_i(x) }
//! ```
//!
//! where the membership fields `u_1..u_N` live on the probability simplex at
//! every pixel and `c_1..c_N` are per-class intensities. The L1 fidelity makes
//! the class centers weighted medians of the image, which is what buys
//! robustness to impulse noise and preserves contrast; the L2 variant
//! (weighted means) is provided for comparison.
//!
//! Crate layout:
//! - [`grid`]: images, membership fields, vector fields, solver configuration
//! - [`ops`]: discrete gradient/adjoint, shrinkage, simplex projection,
//!   weighted median, FFT screened-Poisson solver
//! - [`solver`]: the ADMM loop, energy and KKT diagnostics
//! - [`baselines`]: fuzzy c-means and its median-filter variant, initializers
//! - [`noise`]: synthetic phantoms and seeded noise models
//! - [`metrics`]: defuzzification, segmentation accuracy, contrast reporting

pub mod baselines;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod noise;
pub mod ops;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{AdmmState, ClassCenters, Image, MembershipField, ScalarField, SolverConfig, VectorField};
pub use metrics::LabelMap;
