//! Kähler metrics with cone angle `2πβ` along a divisor.
//!
//! The crate has two halves. The pointwise half works on the model space
//! `ℂⁿ` with the flat cone metric: cone/complex charts, the cone distance,
//! Hölder seminorms, the adapted-frame components of the standard reference
//! metric and its Sturm embedding, and the Gaussian curvature of the
//! one-parameter family `g_a`. The discrete half is a flat torus carrying one
//! cone point, on which the linear theory (index-0 Laplacian), the Ricci
//! flattening of the reference metric, and the Aubin–Yau continuity path to a
//! Kähler–Einstein cone metric with `λ = −1` are solved numerically.
//!
//! Module map:
//!
//! - [`cone_geometry`]: model metric, charts, distance, Hölder calculus, form decomposition.
//! - [`local_models`]: reference-metric components, Sturm pull-back, `K_a`, coordinate change.
//! - [`surface`]: the periodic grid testbed, section norm, metrics, Laplacian, curvature.
//! - [`linear_solver`]: Poisson and shifted solves, Fredholm diagnostics.
//! - [`ricci_bound`]: Monge–Ampère functional, Ricci potential split, Ricci flattening.
//! - [`ke_continuity`]: Ricci potential, smooth start, continuity path, a priori monitors.

pub mod cone_geometry;
mod error;
pub mod ke_continuity;
pub mod linear_solver;
pub mod local_models;
pub mod ricci_bound;
pub mod surface;

pub use error::{Error, Result};
