//! Making the Ricci curvature of the reference metric bounded.
//!
//! With `ω_φ = ω + i∂∂̄φ`, the Monge–Ampère functional is
//! `H(φ) = log(ω_φ/ω)`. It preserves volume, `∫e^{H(φ)}ω = ∫ω`, and its
//! derivative at `0` is `Δ_g`. Writing `|s|^{2β−2}Ω = e^F ω`, the potential `F`
//! is only Hölder at the apex. Splitting `F = (F − h) + h` with `F − h`
//! smooth and `h` small, and solving `H(φ) = h`, gives
//!
//! `Ric(ω_φ) = Ric(Ω) + (1−β)i∂∂̄log|s|² + i∂∂̄(F − h)`,
//!
//! which is bounded away from the apex node.

use serde::{Deserialize, Serialize};

use crate::surface::ops::{cone_holder_seminorm, integrate_values, max_second_difference};
use crate::surface::{half_laplacian, DivisorSection, GridFunction, Spectral, SurfaceMetric};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MAFunctionalContext {
    pub metric: SurfaceMetric,
    /// `v = ∫ω`.
    pub volume: f64,
    /// Largest allowed value of the potential-size proxy.
    pub admissible_bound: f64,
}

impl MAFunctionalContext {
    pub fn new(metric: SurfaceMetric, admissible_bound: f64) -> Self {
        let volume = metric.area();
        Self { metric, volume, admissible_bound }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub alpha_prime: f64,
    pub eps: f64,
    pub mu: f64,
    pub mollifier_scale: f64,
}

impl SmoothingParams {
    pub fn new(beta: f64, alpha_prime: f64, eps: f64, mu: f64, mollifier_scale: f64) -> Result<Self> {
        let top = 1.0 / beta - 1.0;
        if !(alpha_prime > 0.0 && alpha_prime < top) {
            return Err(Error::InvalidParameter(format!("alpha' = {alpha_prime} not in (0, {top})")));
        }
        if !(eps > 0.0 && mu > 0.0 && mollifier_scale > 0.0) {
            return Err(Error::InvalidParameter("eps, mu and mollifier_scale must be positive".into()));
        }
        Ok(Self { alpha_prime, eps, mu, mollifier_scale })
    }

    /// `α' = 0.9(1/β − 1)` capped at `0.9`, `ε = 25`, `μ = 1.5`, scale `1/32`.
    pub fn defaults(beta: f64) -> Self {
        Self { alpha_prime: (0.9 * (1.0 / beta - 1.0)).min(0.9), eps: 25.0, mu: 1.5, mollifier_scale: 1.0 / 32.0 }
    }
}

/// `H(φ) = log(ω_φ/ω)`.
pub fn ma_functional(ctx: &MAFunctionalContext, phi: &GridFunction) -> Result<GridFunction> {
    let spec = &ctx.metric.spec;
    let lap = half_laplacian(spec, &phi.values);
    let mut out = Vec::with_capacity(spec.len());
    for (k, (d, l)) in ctx.metric.density.iter().zip(&lap).enumerate() {
        let dp = d + l;
        if !(dp > 0.0) {
            return Err(Error::NotAdmissible(format!("density of ω_φ is {dp:e} at node {k}")));
        }
        out.push((dp / d).ln());
    }
    Ok(GridFunction::new(spec.n, out))
}

/// The derivative of `H` at `φ` in direction `ψ`: `Δ_{ω_φ}ψ`.
pub fn ma_jacobian_apply(ctx: &MAFunctionalContext, phi: &GridFunction, psi: &GridFunction) -> Result<GridFunction> {
    let spec = &ctx.metric.spec;
    let dens = ctx.metric.with_potential(&phi.values)?.density;
    let lap = half_laplacian(spec, &psi.values);
    Ok(GridFunction::new(spec.n, lap.iter().zip(&dens).map(|(l, d)| l / d).collect()))
}

/// `F = log(|s|^{2β−2}Ω/ω)` using the regularized `log|s|`, finite at every node.
pub fn ricci_potential_big_f(omega: &SurfaceMetric, big_omega: &SurfaceMetric, s: &DivisorSection) -> GridFunction {
    let e = 2.0 * omega.spec.beta - 2.0;
    let vals = s
        .log_values
        .values
        .iter()
        .zip(&big_omega.density)
        .zip(&omega.density)
        .map(|((l, o), w)| e * l + o.ln() - w.ln())
        .collect();
    GridFunction::new(omega.spec.n, vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothApproximation {
    /// Target `h` after the volume shift, `∫e^h ω = v`.
    pub h: GridFunction,
    /// `F − h`, a band-limited field.
    pub f_minus_h: GridFunction,
    /// `‖h̃‖_∞` before the shift.
    pub raw_sup: f64,
    /// `∫e^{h̃}ω / v` before the shift.
    pub volume_ratio: f64,
    pub shift: f64,
    /// Largest second difference of `F − h`.
    pub second_difference_bound: f64,
}

/// Split `F` into a band-limited part and a small remainder `h`, then shift
/// `h` by a constant so that `∫e^h ω = v`.
pub fn smooth_approximation(ctx: &MAFunctionalContext, f: &GridFunction, sp: &SmoothingParams) -> Result<SmoothApproximation> {
    let spec = &ctx.metric.spec;
    let smooth = Spectral::new(spec.n).mollify(&f.values, sp.mollifier_scale);
    let h_raw: Vec<f64> = f.values.iter().zip(&smooth).map(|(a, b)| a - b).collect();
    let raw_sup = h_raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if raw_sup > sp.mu {
        return Err(Error::Smoothing(format!(
            "‖F − smooth part‖ = {raw_sup:.3e} exceeds mu = {}; decrease mollifier_scale below {}",
            sp.mu, sp.mollifier_scale
        )));
    }
    let mass = integrate_values(&ctx.metric, &h_raw.iter().map(|v| v.exp()).collect::<Vec<_>>());
    let volume_ratio = mass / ctx.volume;
    let shift = -volume_ratio.ln();
    let h: Vec<f64> = h_raw.iter().map(|v| v + shift).collect();
    let f_minus_h: Vec<f64> = smooth.iter().map(|v| v - shift).collect();
    let second_difference_bound = max_second_difference(spec, &f_minus_h);
    Ok(SmoothApproximation {
        h: GridFunction::new(spec.n, h),
        f_minus_h: GridFunction::new(spec.n, f_minus_h),
        raw_sup,
        volume_ratio,
        shift,
        second_difference_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlattenResult {
    pub phi: GridFunction,
    pub residual_history: Vec<f64>,
    /// Step length accepted at each Newton iteration.
    pub damping: Vec<f64>,
    pub iterations: usize,
    /// `‖φ‖_∞ + ‖Δ_g φ‖_∞ + [Δ_g φ]_{α'}`.
    pub potential_norm: f64,
    /// `∫e^{H(φ)}ω − v`.
    pub volume_defect: f64,
}

/// `‖φ‖_∞ + ‖Δ_g φ‖_∞ + [Δ_g φ]_{α'}` with the seminorm taken near the apex.
pub fn potential_norm(metric: &SurfaceMetric, phi: &GridFunction, alpha: f64) -> Result<f64> {
    let lap = half_laplacian(&metric.spec, &phi.values);
    let dphi: Vec<f64> = lap.iter().zip(&metric.density).map(|(l, d)| l / d).collect();
    let sup_lap = dphi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let holder = cone_holder_seminorm(&metric.spec, &dphi, alpha, 1.0 / 64.0, 0.2)?;
    Ok(phi.sup_norm() + sup_lap + holder)
}

/// Solve `H(φ) = h` by damped Newton with `∫φ ω = 0`.
///
/// Each step solves `Δ_{ω_φ}v = −(H(φ) − h)` exactly in Fourier space, after
/// removing the `ω_φ`-mean of the residual. Steps are halved (at most 30
/// times) until `ω_φ` stays positive and the residual decreases.
pub fn flatten_ricci(ctx: &MAFunctionalContext, h: &GridFunction, sp: &SmoothingParams, tol: f64, max_iter: usize) -> Result<FlattenResult> {
    let spec = &ctx.metric.spec;
    let n = spec.n;
    let spectral = Spectral::new(n);
    let mut phi = GridFunction::zeros(n);
    let mut residual_history = Vec::new();
    let mut damping = Vec::new();

    let residual_of = |phi: &GridFunction| -> Result<Vec<f64>> {
        let hv = ma_functional(ctx, phi)?;
        Ok(hv.values.iter().zip(&h.values).map(|(a, b)| a - b).collect())
    };
    let mut r = residual_of(&phi)?;
    let mut rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    residual_history.push(rn);
    let mut iterations = 0;
    while rn >= tol {
        if iterations == max_iter {
            return Err(Error::NoConvergence { what: "Ricci flattening Newton", iterations, last: rn, history: residual_history });
        }
        iterations += 1;
        let dens = ctx.metric.with_potential(&phi.values)?.density;
        let mass: f64 = dens.iter().sum();
        let mean = r.iter().zip(&dens).map(|(a, d)| a * d).sum::<f64>() / mass;
        let rhs: Vec<f64> = r.iter().zip(&dens).map(|(a, d)| d * (a - mean)).collect();
        let v = spectral.solve(&rhs, 0.0);

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let trial: Vec<f64> = phi.values.iter().zip(&v).map(|(a, b)| a + lambda * b).collect();
            let trial = GridFunction::new(n, trial);
            if let Ok(rt) = residual_of(&trial) {
                let rtn = rt.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if rtn < rn {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((mut trial, rt, rtn)) = accepted else {
            return Err(Error::NoConvergence {
                what: "Ricci flattening line search",
                iterations,
                last: rn,
                history: residual_history,
            });
        };
        let c = integrate_values(&ctx.metric, &trial.values) / ctx.volume;
        trial.values.iter_mut().for_each(|x| *x -= c);
        phi = trial;
        r = rt;
        rn = rtn;
        residual_history.push(rn);
        damping.push(lambda);
    }

    let pn = potential_norm(&ctx.metric, &phi, sp.alpha_prime)?;
    if pn > sp.eps {
        return Err(Error::Smoothing(format!(
            "potential size {pn:.3e} exceeds eps = {}; decrease mollifier_scale",
            sp.eps
        )));
    }
    let hv = ma_functional(ctx, &phi)?;
    let volume_defect = integrate_values(&ctx.metric, &hv.values.iter().map(|v| v.exp()).collect::<Vec<_>>()) - ctx.volume;
    Ok(FlattenResult { phi, residual_history, damping, iterations, potential_norm: pn, volume_defect })
}

/// Largest `|Ric(ω_φ) − [(1−β)i∂∂̄log|s|² + i∂∂̄(F − h)]|` in curvature units,
/// over nodes other than the apex. `Ω` is flat, so `Ric(Ω) = 0`.
pub fn ricci_identity_residual(omega_phi: &SurfaceMetric, s: &DivisorSection, f_minus_h: &GridFunction) -> f64 {
    let spec = &omega_phi.spec;
    let logd: Vec<f64> = omega_phi.density.iter().map(|d| d.ln()).collect();
    let ric = half_laplacian(spec, &logd);
    let ll = half_laplacian(spec, &s.log_values.values);
    let lf = half_laplacian(spec, &f_minus_h.values);
    let b = spec.beta;
    let apex = spec.apex();
    let mut worst = 0.0f64;
    for k in 0..spec.len() {
        if k == apex {
            continue;
        }
        let target = 2.0 * (1.0 - b) * ll[k] + lf[k];
        worst = worst.max((-ric[k] - target).abs() / omega_phi.density[k]);
    }
    worst
}

/// `ω_φ = ω + i∂∂̄φ`.
pub fn flattened_metric(ctx: &MAFunctionalContext, phi: &GridFunction) -> Result<SurfaceMetric> {
    ctx.metric.with_potential(&phi.values)
}
