use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, SurfaceSpec};
use super::ops::half_laplacian;
use super::section::DivisorSection;
use crate::{Error, Result};

/// A conformal metric `ρ(dx² + dy²)` on the testbed, stored by its area density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMetric {
    pub spec: SurfaceSpec,
    pub density: Vec<f64>,
}

impl SurfaceMetric {
    pub fn from_density(spec: &SurfaceSpec, density: Vec<f64>) -> Result<Self> {
        if density.len() != spec.len() {
            return Err(Error::InvalidParameter("density has the wrong size".into()));
        }
        if let Some((k, d)) = density.iter().enumerate().find(|(_, d)| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::NotAdmissible(format!("density {d} at node {k}")));
        }
        Ok(Self { spec: *spec, density })
    }

    /// The flat metric of total area `area`.
    pub fn flat(spec: &SurfaceSpec, area: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::InvalidParameter(format!("area = {area} must be positive")));
        }
        Self::from_density(spec, vec![area; spec.len()])
    }

    /// `ω + i∂∂̄φ`, or an error if the density stops being positive.
    pub fn with_potential(&self, phi: &[f64]) -> Result<Self> {
        let lap = half_laplacian(&self.spec, phi);
        let density: Vec<f64> = self.density.iter().zip(&lap).map(|(d, l)| d + l).collect();
        Self::from_density(&self.spec, density)
    }

    pub fn area(&self) -> f64 {
        let mut acc = 0.0;
        for d in &self.density {
            acc += d;
        }
        acc * self.spec.cell_area()
    }

    pub fn cone_factor_exponent(&self) -> f64 {
        2.0 * self.spec.beta - 2.0
    }

    /// `log ρ − (2β−2)ℓ`, the smooth factor once the cone factor `|s|^{2β−2}` is split off.
    pub fn conformal_log_factor(&self, section: &DivisorSection) -> GridFunction {
        let e = self.cone_factor_exponent();
        GridFunction::new(
            self.spec.n,
            self.density
                .iter()
                .zip(&section.log_values.values)
                .map(|(d, l)| d.ln() - e * l)
                .collect(),
        )
    }

    /// `C` with `1/C ≤ ρ / (2δβ²r^{2β−2}) ≤ C` on the annulus `r0/4 < r < r0`.
    pub fn quasi_isometry_constant(&self, delta: f64) -> f64 {
        let b = self.spec.beta;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 0..self.spec.len() {
            let r = self.spec.dist_to_apex(k);
            if r > self.spec.r0 / 4.0 && r < self.spec.r0 {
                let q = self.density[k] / (2.0 * delta * b * b * r.powf(2.0 * b - 2.0));
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        hi.max(1.0 / lo)
    }
}

/// `ω = Ω + δ i∂∂̄|s|^{2β}` with `Ω` flat of area `omega_area`.
pub fn build_reference_metric(section: &DivisorSection, delta: f64, omega_area: f64) -> Result<SurfaceMetric> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be non-negative")));
    }
    let spec = &section.spec;
    let omega = SurfaceMetric::flat(spec, omega_area)?;
    if delta == 0.0 {
        return Ok(omega);
    }
    let lap = half_laplacian(spec, &section.sigma.values);
    let density: Vec<f64> = omega.density.iter().zip(&lap).map(|(a, l)| a + delta * l).collect();
    let min_density = density.iter().copied().fold(f64::INFINITY, f64::min);
    if min_density <= 0.0 {
        return Err(Error::NonPositiveReference { delta, min_density });
    }
    SurfaceMetric::from_density(spec, density)
}
