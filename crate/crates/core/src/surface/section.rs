use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, NodeClass, SurfaceSpec};
use crate::{Error, Result};

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for (x, wt) in GL8 {
            acc += wt * f(mid + 0.5 * w * x);
        }
    }
    0.5 * w * acc
}

/// Radial profile of `σ = |s|^{2β}`: `r^{2β}` up to `r0`, `1` from `2r0` on.
///
/// In between `σ` is defined through its radial flux `q = rσ'`, which
/// interpolates the flux of `r^{2β}` down to zero and carries an extra
/// bump sized so that `σ(2r0) = 1`. The flux is `C³` across both ends of the
/// band, so the curvature of `Ω + δ i∂∂̄σ` is continuous there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueProfile {
    pub beta: f64,
    pub r0: f64,
    bump_weight: f64,
}

/// `C³` step from 0 to 1 on `[0, 1]`.
fn smoothstep(t: f64) -> f64 {
    t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
}

fn bump(t: f64) -> f64 {
    t.powi(4) * (1.0 - t).powi(4) / (t + 0.1)
}

impl GlueProfile {
    pub fn new(beta: f64, r0: f64) -> Self {
        let mut g = Self { beta, r0, bump_weight: 0.0 };
        let base = gauss_legendre(|r| g.flux(r) / r, r0, 2.0 * r0, 32);
        let b = gauss_legendre(|r| bump((r - r0) / r0) / r, r0, 2.0 * r0, 32);
        g.bump_weight = (1.0 - r0.powf(2.0 * beta) - base) / b;
        g
    }

    /// `q(r) = rσ'(r)`.
    pub fn flux(&self, r: f64) -> f64 {
        let tb = 2.0 * self.beta;
        if r <= self.r0 {
            return tb * r.powf(tb);
        }
        if r >= 2.0 * self.r0 {
            return 0.0;
        }
        let t = (r - self.r0) / self.r0;
        (1.0 - smoothstep(t)) * tb * r.powf(tb) + self.bump_weight * bump(t)
    }

    pub fn sigma(&self, r: f64) -> f64 {
        let tb = 2.0 * self.beta;
        if r <= self.r0 {
            return r.powf(tb);
        }
        if r >= 2.0 * self.r0 {
            return 1.0;
        }
        self.r0.powf(tb) + gauss_legendre(|x| self.flux(x) / x, self.r0, r, 16)
    }

    pub fn s(&self, r: f64) -> f64 {
        self.sigma(r).powf(0.5 / self.beta)
    }
}

/// The stand-in for `|s|_h`: a norm vanishing exactly at the cone point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorSection {
    pub spec: SurfaceSpec,
    /// `|s|` at every node; zero at the cone point only.
    pub values: GridFunction,
    /// `|s|^{2β}`.
    pub sigma: GridFunction,
    /// Regularized `log|s|`: equal to `log|s|` outside the disc `|z − p| ≤ r0`,
    /// discrete-harmonic inside it except at `p`, where `Δ₅ℓ · h² = 2π`.
    pub log_values: GridFunction,
}

pub fn build_section_norm(spec: &SurfaceSpec) -> Result<DivisorSection> {
    spec.validate()?;
    let cells = spec.r0 * spec.n as f64;
    if cells < 8.0 {
        return Err(Error::InvalidParameter(format!(
            "glue band of width r0 = {} spans {cells:.1} cells, at least 8 are needed",
            spec.r0
        )));
    }
    let glue = GlueProfile::new(spec.beta, spec.r0);
    let len = spec.len();
    let mut s = vec![0.0; len];
    let mut sigma = vec![0.0; len];
    for k in 0..len {
        let r = spec.dist_to_apex(k);
        sigma[k] = glue.sigma(r);
        s[k] = if r <= spec.r0 { r } else { glue.s(r) };
    }
    let log_values = regularized_log(spec, &s)?;
    Ok(DivisorSection {
        spec: *spec,
        values: GridFunction::new(spec.n, s),
        sigma: GridFunction::new(spec.n, sigma),
        log_values: GridFunction::new(spec.n, log_values).with_class(NodeClass::LogSingular),
    })
}

/// Solve the Dirichlet problem for `ℓ` on the collar disc by conjugate gradients.
fn regularized_log(spec: &SurfaceSpec, s: &[f64]) -> Result<Vec<f64>> {
    let len = spec.len();
    let inside: Vec<bool> = (0..len).map(|k| spec.dist_to_apex(k) <= spec.r0).collect();
    let unknowns: Vec<usize> = (0..len).filter(|&k| inside[k]).collect();
    let mut slot = vec![usize::MAX; len];
    for (a, &k) in unknowns.iter().enumerate() {
        slot[k] = a;
    }
    let apex = spec.apex();
    let m = unknowns.len();

    // A x = b with A = 4I − (interior adjacency), i.e. −h²Δ₅ with Dirichlet data
    let mut b = vec![0.0; m];
    for (a, &k) in unknowns.iter().enumerate() {
        for nb in spec.neighbours(k) {
            if !inside[nb] {
                b[a] += s[nb].ln();
            }
        }
        if k == apex {
            b[a] -= TAU;
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (a, &k) in unknowns.iter().enumerate() {
            let mut v = 4.0 * x[a];
            for nb in spec.neighbours(k) {
                if inside[nb] {
                    v -= x[slot[nb]];
                }
            }
            out[a] = v;
        }
    };

    let mut x: Vec<f64> = unknowns.iter().map(|&k| if k == apex { spec.h().ln() } else { s[k].ln() }).collect();
    let mut ax = vec![0.0; m];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut d = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut ad = vec![0.0; m];
    let mut history = Vec::new();
    for _ in 0..20 * m.max(50) {
        if rr.sqrt() <= 1e-14 * bnorm {
            break;
        }
        apply(&d, &mut ad);
        let alpha = rr / d.iter().zip(&ad).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..m {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        history.push(rr_new.sqrt());
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            d[i] = r[i] + beta * d[i];
        }
    }
    if rr.sqrt() > 1e-12 * bnorm {
        return Err(Error::NoConvergence {
            what: "collar Dirichlet solve",
            iterations: history.len(),
            last: rr.sqrt(),
            history,
        });
    }

    let mut ell: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    for (a, &k) in unknowns.iter().enumerate() {
        ell[k] = x[a];
    }
    Ok(ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::ops::half_laplacian;

    #[test]
    fn profile_endpoints_and_monotonicity() {
        for beta in [0.5, 0.75] {
            let g = GlueProfile::new(beta, 0.24);
            assert!((g.sigma(0.24) - 0.24f64.powf(2.0 * beta)).abs() < 1e-15);
            assert!((g.sigma(0.48 - 1e-12) - 1.0).abs() < 1e-9);
            let mut last = 0.0;
            for k in 0..=400 {
                let r = 0.24 + 0.24 * k as f64 / 400.0;
                let v = g.sigma(r);
                assert!(v >= last - 1e-15);
                last = v;
            }
        }
    }

    #[test]
    fn section_values() {
        let spec = SurfaceSpec::centered(64, 0.5, 0.2).unwrap();
        let s = build_section_norm(&spec).unwrap();
        assert_eq!(s.values.values[spec.apex()], 0.0);
        for k in 0..spec.len() {
            let r = spec.dist_to_apex(k);
            if r >= 0.4 {
                assert_eq!(s.values.values[k], 1.0);
            }
            if r <= 0.2 {
                assert!((s.values.values[k] - r).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn under_resolved_glue_rejected() {
        let spec = SurfaceSpec::centered(32, 0.5, 0.2).unwrap();
        assert!(build_section_norm(&spec).is_err());
    }

    #[test]
    fn log_is_harmonic_with_apex_mass() {
        let spec = SurfaceSpec::centered(64, 0.5, 0.2).unwrap();
        let s = build_section_norm(&spec).unwrap();
        let lap = half_laplacian(&spec, &s.log_values.values);
        let h2 = spec.cell_area();
        assert!((2.0 * lap[spec.apex()] * h2 - TAU).abs() < 1e-10);
        let total: f64 = lap.iter().sum::<f64>() * h2;
        assert!(total.abs() < 1e-10);
        for k in 0..spec.len() {
            if k != spec.apex() && spec.dist_to_apex(k) < 0.2 - 1.5 * spec.h() {
                assert!(lap[k].abs() * h2 < 1e-11);
            }
        }
    }
}
