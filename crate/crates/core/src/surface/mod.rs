//! A flat unit torus with one cone point of angle `2πβ`, discretized on a
//! periodic `N × N` grid.
//!
//! Metrics are conformal, `ρ(dx² + dy²)`, and `i∂∂̄u` is represented by the
//! density `½Δ₅u` against `dx dy`, so that `Ric(ω) = −ω` reads `K = −1`.
//! The cone enters only through the density: near `p` the reference density
//! behaves like `|z − p|^{2β−2}`.

mod grid;
mod metric;
pub mod ops;
mod section;
mod spectral;

pub use grid::{read_grid, write_grid, GridFunction, GridHeader, NodeClass, SurfaceSpec};
pub use metric::{build_reference_metric, SurfaceMetric};
pub use ops::{gauss_bonnet_defect, gauss_curvature, half_laplacian, integrate, laplacian};
pub use section::{build_section_norm, DivisorSection, GlueProfile};
pub use spectral::Spectral;
