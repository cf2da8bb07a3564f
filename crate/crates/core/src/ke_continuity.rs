//! The Aubin–Yau continuity path to a Kähler–Einstein cone metric, `λ = −1`.
//!
//! On the surface testbed the path `(ω₀ + i∂∂̄u)ⁿ = e^{tf₀+u}ω₀ⁿ` reads
//! `1 + Δ₀u = e^{tf₀+u}`. The start `ω₀ = ω + i∂∂̄φ` is not the reference
//! metric: `φ` solves `log(ω_φ/ω) − φ = f − f₀` with `f₀` a band-limited
//! copy of the Ricci potential `f`, so that `Ric(ω₀) = −ω₀ + i∂∂̄f₀` with a
//! smooth `f₀`. At `t = 1`, `u = φ + u₁` solves `(ω + i∂∂̄u) = e^{f+u}ω`.
//!
//! Each accepted step carries a [`MonitorReport`] with the discrete forms of
//! the `C⁰` bound, the Chern–Lu inequality at the maximum of
//! `tr_{ω_t}ω − Aũ_t`, the metric equivalence constants and a Hölder proxy.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::linear_solver::{pcg_screened, solve_shifted, LinearProblem};
use crate::surface::ops::{cone_holder_seminorm, max_second_difference, median_abs_outside};
use crate::surface::{
    build_reference_metric, build_section_norm, gauss_bonnet_defect, gauss_curvature, half_laplacian, read_grid,
    write_grid, DivisorSection, GridFunction, Spectral, SurfaceMetric, SurfaceSpec,
};
use crate::{Error, Result};

/// Tolerance on `|∫Ω − 2π(1−β)|`.
pub const TOL_COHOMOLOGY: f64 = 1e-8;
const MAX_BISECTIONS: usize = 6;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KEProblem {
    pub spec: SurfaceSpec,
    pub delta: f64,
    /// Area of the flat background `Ω`; must equal `2π(1−β)`.
    pub omega_area: f64,
    /// Einstein constant; only `−1` is supported.
    pub lambda: f64,
    /// `0 = t₀ < … < t_K = 1`.
    pub schedule: Vec<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Cutoff scale of the low-pass filter producing `f₀`.
    pub mollifier_scale: f64,
    /// Bound on `‖f − f₀‖_∞`.
    pub eps: f64,
    /// Hölder exponent for the Step 3 diagnostic.
    pub alpha: f64,
}

impl KEProblem {
    /// Defaults: 11 uniform steps, `newton_tol = 1e−9`, `Ω` of area `2π(1−β)`.
    pub fn new(spec: SurfaceSpec, delta: f64) -> Self {
        let beta = spec.beta;
        Self {
            spec,
            delta,
            omega_area: TAU * (1.0 - beta),
            lambda: -1.0,
            schedule: uniform_schedule(11),
            newton_tol: 1e-9,
            newton_max_iter: 25,
            mollifier_scale: 1.0 / 32.0,
            eps: 2.0,
            alpha: (0.9 * (1.0 / beta - 1.0)).min(0.9),
        }
    }

    pub fn beta(&self) -> f64 {
        self.spec.beta
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.lambda != -1.0 {
            return Err(Error::InvalidParameter(format!("lambda = {} is not supported, only -1", self.lambda)));
        }
        let s = &self.schedule;
        if s.len() < 2 || s[0] != 0.0 || *s.last().unwrap() != 1.0 || s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("schedule must increase strictly from 0 to 1".into()));
        }
        if !(self.delta > 0.0 && self.omega_area > 0.0) {
            return Err(Error::InvalidParameter("delta and omega_area must be positive".into()));
        }
        if !(self.newton_tol > 0.0 && self.newton_max_iter > 0) {
            return Err(Error::InvalidParameter("newton_tol and newton_max_iter must be positive".into()));
        }
        if !(self.mollifier_scale > 0.0 && self.eps > 0.0) {
            return Err(Error::InvalidParameter("mollifier_scale and eps must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// `steps` equally spaced values from `0` to `1`.
pub fn uniform_schedule(steps: usize) -> Vec<f64> {
    let k = steps.max(2) - 1;
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciPotential {
    pub f: GridFunction,
    /// `F_Ω` with `i∂∂̄F_Ω = Ω + (1−β)i∂∂̄log|s|²` away from the apex.
    pub big_f: GridFunction,
    pub compatibility_defect: f64,
    /// `max |Ric(ω) + ω − i∂∂̄f| / ω` over nodes other than the apex.
    pub identity_residual: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn ricci_defect(m: &SurfaceMetric, f: &[f64]) -> f64 {
    let spec = &m.spec;
    let logd: Vec<f64> = m.density.iter().map(|d| d.ln()).collect();
    let ric = half_laplacian(spec, &logd);
    let lf = half_laplacian(spec, f);
    let apex = spec.apex();
    (0..spec.len())
        .filter(|&k| k != apex)
        .map(|k| (-ric[k] + m.density[k] - lf[k]).abs() / m.density[k])
        .fold(0.0, f64::max)
}

/// `f = F_Ω + δ|s|^{2β} − log(|s|^{2−2β}ω/Ω)`.
pub fn ricci_potential_f(omega: &SurfaceMetric, big_omega: &SurfaceMetric, s: &DivisorSection, prob: &KEProblem) -> Result<RicciPotential> {
    let spec = &omega.spec;
    let beta = spec.beta;
    let compatibility_defect = (big_omega.area() - TAU * (1.0 - beta)).abs();
    if !(compatibility_defect < TOL_COHOMOLOGY) {
        return Err(Error::Cohomology { defect: compatibility_defect });
    }
    let ll = half_laplacian(spec, &s.log_values.values);
    let apex = spec.apex();
    let rhs: Vec<f64> = (0..spec.len())
        .map(|k| {
            let a = big_omega.density[k];
            if k == apex {
                a
            } else {
                a + 2.0 * (1.0 - beta) * ll[k]
            }
        })
        .collect();
    let neg: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let big_f = Spectral::new(spec.n).solve(&neg, 0.0);
    let f: Vec<f64> = (0..spec.len())
        .map(|k| {
            big_f[k] + prob.delta * s.sigma.values[k]
                - (2.0 - 2.0 * beta) * s.log_values.values[k]
                - (omega.density[k] / big_omega.density[k]).ln()
        })
        .collect();
    let identity_residual = ricci_defect(omega, &f);
    Ok(RicciPotential {
        f: GridFunction::new(spec.n, f),
        big_f: GridFunction::new(spec.n, big_f),
        compatibility_defect,
        identity_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialMetric {
    pub omega0: SurfaceMetric,
    pub f0: GridFunction,
    pub phi: GridFunction,
    pub residual_history: Vec<f64>,
    /// `‖f − f₀‖_∞`.
    pub smoothing_gap: f64,
    /// Largest second difference of `f₀`.
    pub second_difference_bound: f64,
    /// `max |Ric(ω₀) + ω₀ − i∂∂̄f₀| / ω₀` off the apex.
    pub ricci_residual: f64,
}

/// `𝓕(φ) = log(ω_φ/ω) − φ`.
pub fn start_functional(omega: &SurfaceMetric, phi: &[f64]) -> Result<Vec<f64>> {
    let m = omega.with_potential(phi)?;
    Ok(m.density.iter().zip(&omega.density).zip(phi).map(|((a, b), p)| (a / b).ln() - p).collect())
}

/// Mollify `f` and solve `𝓕(φ) = f − f₀` by damped Newton. The derivative
/// `Δ_φ − 1` has no kernel, so each step is a shifted solve with `c = 1`.
pub fn initial_metric(omega: &SurfaceMetric, f: &GridFunction, prob: &KEProblem) -> Result<InitialMetric> {
    let spec = &omega.spec;
    let n = spec.n;
    let f0 = Spectral::new(n).mollify(&f.values, prob.mollifier_scale);
    let target: Vec<f64> = f.values.iter().zip(&f0).map(|(a, b)| a - b).collect();
    let smoothing_gap = sup(&target);
    if smoothing_gap > prob.eps {
        return Err(Error::Smoothing(format!(
            "‖f − f₀‖ = {smoothing_gap:.3e} exceeds eps = {}; decrease mollifier_scale",
            prob.eps
        )));
    }
    let residual = |phi: &[f64]| -> Result<Vec<f64>> {
        Ok(start_functional(omega, phi)?.iter().zip(&target).map(|(a, b)| a - b).collect())
    };
    let mut phi = vec![0.0; spec.len()];
    let mut r = residual(&phi)?;
    let mut rn = sup(&r);
    let mut history = vec![rn];
    while rn >= prob.newton_tol {
        if history.len() > prob.newton_max_iter {
            return Err(Error::NoConvergence { what: "initial metric Newton", iterations: history.len() - 1, last: rn, history });
        }
        let m = omega.with_potential(&phi)?;
        let rhs = GridFunction::new(n, r.iter().map(|v| -v).collect());
        let mut lp = LinearProblem::new(&m, 1.0, &rhs);
        lp.tol = Some((1e-3 * rn * rn.min(1.0)).max(1e-2 * prob.newton_tol));
        let v = solve_shifted(&lp, None)?.u.values;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = phi.iter().zip(&v).map(|(a, b)| a + lambda * b).collect();
            if let Ok(rt) = residual(&trial) {
                let rtn = sup(&rt);
                if rtn < rn {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt, rtn)) = accepted else {
            return Err(Error::NoConvergence { what: "initial metric line search", iterations: history.len(), last: rn, history });
        };
        phi = trial;
        r = rt;
        rn = rtn;
        history.push(rn);
    }
    let omega0 = omega.with_potential(&phi)?;
    let ricci_residual = ricci_defect(&omega0, &f0);
    Ok(InitialMetric {
        second_difference_bound: max_second_difference(spec, &f0),
        omega0,
        f0: GridFunction::new(n, f0),
        phi: GridFunction::new(n, phi),
        residual_history: history,
        smoothing_gap,
        ricci_residual,
    })
}

/// Constants of the a priori estimates, fixed once per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConstants {
    pub c1: f64,
    /// `i∂∂̄f₀ ≥ −C₂ω`.
    pub c2: f64,
    /// Sampled upper curvature bound of `ω` away from the apex node, with a 20% margin.
    pub c3: f64,
    /// `C₂ + 2C₃ + 1`.
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Monitor {
    pub sup_u: f64,
    /// `max{−inf f₀, 0}`.
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernLuMonitor {
    pub a: f64,
    pub trace_max: f64,
    pub trace_min: f64,
    /// Node where `tr_{ω_t}ω − Aũ_t` is largest (apex excluded).
    pub argmax: usize,
    /// `Δ_{ω_t}Q − (−C₁ − An + tr)` at `argmax`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceMonitor {
    /// `max ω/ω_t`.
    pub c_lower: f64,
    /// `max ω_t/ω`.
    pub c_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderMonitor {
    pub alpha: f64,
    /// Seminorm of `Δ₀u_t` on sample lattices of spacing `1/64` and `1/32`.
    pub fine: f64,
    pub coarse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub c0: C0Monitor,
    pub chernlu: ChernLuMonitor,
    pub equivalence: EquivalenceMonitor,
    pub holder: HolderMonitor,
}

impl MonitorReport {
    pub fn is_finite(&self) -> bool {
        [
            self.c0.sup_u,
            self.c0.bound,
            self.chernlu.a,
            self.chernlu.trace_max,
            self.chernlu.residual,
            self.equivalence.c_lower,
            self.equivalence.c_upper,
            self.holder.fine,
            self.holder.coarse,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityState {
    pub t: f64,
    pub u: GridFunction,
    /// `‖1 + Δ₀u − e^{tf₀+u}‖_∞`.
    pub residual: f64,
    pub newton_history: Vec<f64>,
    pub monitors: MonitorReport,
}

impl ContinuityState {
    pub fn newton_iterations(&self) -> usize {
        self.newton_history.len() - 1
    }
}

/// Everything the path needs that does not depend on `t`.
#[derive(Debug)]
pub struct PathSetup {
    pub prob: KEProblem,
    pub section: DivisorSection,
    pub omega: SurfaceMetric,
    pub big_omega: SurfaceMetric,
    pub potential: RicciPotential,
    pub start: InitialMetric,
    pub constants: MonitorConstants,
    spectral: Spectral,
}

impl PathSetup {
    pub fn new(prob: &KEProblem) -> Result<Self> {
        prob.validate()?;
        let spec = prob.spec;
        let section = build_section_norm(&spec)?;
        let omega = build_reference_metric(&section, prob.delta, prob.omega_area)?;
        let big_omega = SurfaceMetric::flat(&spec, prob.omega_area)?;
        let potential = ricci_potential_f(&omega, &big_omega, &section, prob)?;
        let start = initial_metric(&omega, &potential.f, prob)?;
        let constants = monitor_constants(&omega, &start.f0);
        Ok(Self { prob: prob.clone(), section, omega, big_omega, potential, start, constants, spectral: Spectral::new(spec.n) })
    }

    pub fn spec(&self) -> &SurfaceSpec {
        &self.omega.spec
    }

    /// `1 + Δ₀u − e^{tf₀+u}`.
    pub fn path_residual(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let rho0 = &self.start.omega0.density;
        let lap = half_laplacian(self.spec(), u);
        (0..u.len()).map(|k| 1.0 + lap[k] / rho0[k] - (t * self.start.f0.values[k] + u[k]).exp()).collect()
    }

    /// Density of `ω_t = ω₀ + i∂∂̄u`.
    pub fn path_density(&self, u: &[f64]) -> Vec<f64> {
        let lap = half_laplacian(self.spec(), u);
        self.start.omega0.density.iter().zip(&lap).map(|(d, l)| d + l).collect()
    }
}

fn monitor_constants(omega: &SurfaceMetric, f0: &GridFunction) -> MonitorConstants {
    let spec = &omega.spec;
    let lf = half_laplacian(spec, &f0.values);
    let c2 = lf.iter().zip(&omega.density).map(|(l, d)| -l / d).fold(0.0f64, f64::max);
    let kmax = gauss_curvature(omega).values.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let c3 = 1.2 * kmax;
    MonitorConstants { c1: 1.0, c2, c3, a: c2 + 2.0 * c3 + 1.0 }
}

/// Evaluate the Step 1–3 monitors on the path solution `u` at time `t`.
pub fn monitors(setup: &PathSetup, u: &GridFunction) -> Result<MonitorReport> {
    let spec = setup.spec();
    let n = spec.n;
    let rho = &setup.omega.density;
    let rho_t = setup.path_density(&u.values);
    if let Some(d) = rho_t.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::NotAdmissible(format!("path density {d}")));
    }

    let bound = (-setup.start.f0.min()).max(0.0);
    let slack = 10.0 / n as f64;
    let sup_u = u.max();
    let c0 = C0Monitor { sup_u, bound, slack, holds: sup_u <= bound + slack };

    let MonitorConstants { c1, a, .. } = setup.constants;
    let tr: Vec<f64> = rho.iter().zip(&rho_t).map(|(r, rt)| r / rt).collect();
    let q: Vec<f64> = (0..spec.len()).map(|k| tr[k] - a * (setup.start.phi.values[k] + u.values[k])).collect();
    let apex = spec.apex();
    let argmax = (0..spec.len()).filter(|&k| k != apex).fold(usize::MAX, |best, k| {
        if best == usize::MAX || q[k] > q[best] {
            k
        } else {
            best
        }
    });
    let lq = half_laplacian(spec, &q);
    let lhs = lq[argmax] / rho_t[argmax];
    let rhs = -c1 - a + tr[argmax];
    let chernlu = ChernLuMonitor {
        a,
        trace_max: tr.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        trace_min: tr.iter().copied().fold(f64::INFINITY, f64::min),
        argmax,
        residual: lhs - rhs,
    };

    let equivalence = EquivalenceMonitor {
        c_lower: tr.iter().copied().fold(0.0, f64::max),
        c_upper: tr.iter().map(|v| 1.0 / v).fold(0.0, f64::max),
    };

    let rho0 = &setup.start.omega0.density;
    let lap = half_laplacian(spec, &u.values);
    let du: Vec<f64> = lap.iter().zip(rho0).map(|(l, d)| l / d).collect();
    let alpha = setup.prob.alpha;
    let holder = HolderMonitor {
        alpha,
        fine: cone_holder_seminorm(spec, &du, alpha, 1.0 / 64.0, 0.2)?,
        coarse: cone_holder_seminorm(spec, &du, alpha, 1.0 / 32.0, 0.2)?,
    };
    Ok(MonitorReport { c0, chernlu, equivalence, holder })
}

/// Newton's method for `1 + Δ₀u = e^{tf₀+u}` from the warm start `u`.
fn newton_at(setup: &PathSetup, t: f64, warm: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = setup.spec();
    let prob = &setup.prob;
    let rho0 = &setup.start.omega0.density;
    let f0 = &setup.start.f0.values;
    let admissible = |u: &[f64]| setup.path_density(u).iter().all(|d| *d > 0.0);

    let mut u = warm.to_vec();
    let mut r = setup.path_residual(t, &u);
    let mut rn = sup(&r);
    let mut history = vec![rn];
    while rn >= prob.newton_tol {
        if history.len() > prob.newton_max_iter {
            return Err(Error::NoConvergence { what: "continuity Newton", iterations: history.len() - 1, last: rn, history });
        }
        let diag: Vec<f64> = (0..u.len()).map(|k| rho0[k] * (t * f0[k] + u[k]).exp()).collect();
        let b: Vec<f64> = r.iter().zip(rho0).map(|(ri, d)| ri * d).collect();
        let tol = (1e-3 * rn * rn.min(1.0)).max(1e-2 * prob.newton_tol);
        let v = pcg_screened(spec, &setup.spectral, &diag, &b, None, rho0, tol, 4000)?.x;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + lambda * b).collect();
            if admissible(&trial) {
                let rt = setup.path_residual(t, &trial);
                let rtn = sup(&rt);
                if rtn < rn {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt, rtn)) = accepted else {
            return Err(Error::NoConvergence { what: "continuity line search", iterations: history.len() - 1, last: rn, history });
        };
        u = trial;
        r = rt;
        rn = rtn;
        history.push(rn);
    }
    Ok((u, history))
}

/// The solved state at `t = 0`: `u = 0`, no Newton iterations.
pub fn initial_state(setup: &PathSetup) -> Result<ContinuityState> {
    let n = setup.spec().n;
    let u = GridFunction::zeros(n);
    let residual = sup(&setup.path_residual(0.0, &u.values));
    let monitors = monitors(setup, &u)?;
    Ok(ContinuityState { t: 0.0, u, residual, newton_history: vec![residual], monitors })
}

/// Advance from `prev` to `t_next`. A failed corrector halves the
/// increment, at most six times in a row; every intermediate state that
/// converges is returned, in order, ending at `t_next`.
pub fn continuity_step(setup: &PathSetup, prev: &ContinuityState, t_next: f64) -> Result<Vec<ContinuityState>> {
    if !(t_next > prev.t && t_next <= 1.0) {
        return Err(Error::InvalidParameter(format!("cannot step from t = {} to {t_next}", prev.t)));
    }
    let n = setup.spec().n;
    let mut out: Vec<ContinuityState> = Vec::new();
    let mut trace = Vec::new();
    let mut bisections = 0;
    let mut dt = t_next - prev.t;
    loop {
        let cur = out.last().unwrap_or(prev);
        if cur.t >= t_next {
            return Ok(out);
        }
        let t = if cur.t + dt >= t_next { t_next } else { cur.t + dt };
        match newton_at(setup, t, &cur.u.values) {
            Ok((u, history)) => {
                let u = GridFunction::new(n, u);
                let residual = *history.last().unwrap();
                let monitors = monitors(setup, &u)?;
                out.push(ContinuityState { t, u, residual, newton_history: history, monitors });
                bisections = 0;
            }
            Err(e) => {
                trace.push(format!("t = {t}: {e}"));
                if bisections == MAX_BISECTIONS {
                    return Err(Error::PathStalled { t: cur.t, bisections, trace });
                }
                bisections += 1;
                dt *= 0.5;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KESolution {
    /// `ω_KE = ω + i∂∂̄u`.
    pub omega_ke: SurfaceMetric,
    /// `u = φ + u₁`.
    pub u: GridFunction,
    pub states: Vec<ContinuityState>,
    pub constants: MonitorConstants,
    pub diagnostics: KEDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEDiagnostics {
    pub compatibility_defect: f64,
    pub f_sup: f64,
    pub f_identity_residual: f64,
    pub start_newton_history: Vec<f64>,
    pub start_ricci_residual: f64,
    pub smoothing_gap: f64,
    pub f0_second_difference_bound: f64,
    pub accepted_steps: usize,
    /// `‖1 + Δ₀u₁ − e^{f₀+u₁}‖_∞` at `t = 1`.
    pub final_path_residual: f64,
    /// `‖log(ω_KE/ω) − f − u‖_∞`.
    pub ke_residual: f64,
    /// Median of `|K(ω_KE) + 1|` outside the collar of radius `r0/2`.
    pub median_curvature_defect: f64,
    pub max_curvature_defect: f64,
    pub area: f64,
    /// `|area(ω_KE) − 2π(1−β)| / 2π(1−β)`.
    pub area_defect: f64,
    /// `∫K(ω_KE) dA + 2π(1−β)` with the apex node removed.
    pub gauss_bonnet_defect: f64,
}

fn finish(setup: &PathSetup, states: Vec<ContinuityState>) -> Result<KESolution> {
    let spec = *setup.spec();
    let last = states.last().expect("path has a state");
    let u: Vec<f64> = setup.start.phi.values.iter().zip(&last.u.values).map(|(a, b)| a + b).collect();
    let omega_ke = setup.omega.with_potential(&u)?;
    let ke_residual = (0..spec.len())
        .map(|k| ((omega_ke.density[k] / setup.omega.density[k]).ln() - setup.potential.f.values[k] - u[k]).abs())
        .fold(0.0, f64::max);
    let k = gauss_curvature(&omega_ke);
    let defect: Vec<f64> = k.values.iter().map(|v| v + 1.0).collect();
    let keep = spec.outside(spec.r0 / 2.0);
    let max_curvature_defect = (0..spec.len())
        .filter(|&i| keep[i] && i != spec.apex())
        .map(|i| defect[i].abs())
        .fold(0.0, f64::max);
    let target = TAU * (1.0 - spec.beta);
    let area = omega_ke.area();
    let diagnostics = KEDiagnostics {
        compatibility_defect: setup.potential.compatibility_defect,
        f_sup: setup.potential.f.sup_norm(),
        f_identity_residual: setup.potential.identity_residual,
        start_newton_history: setup.start.residual_history.clone(),
        start_ricci_residual: setup.start.ricci_residual,
        smoothing_gap: setup.start.smoothing_gap,
        f0_second_difference_bound: setup.start.second_difference_bound,
        accepted_steps: states.len() - 1,
        final_path_residual: last.residual,
        ke_residual,
        median_curvature_defect: median_abs_outside(&spec, &defect, spec.r0 / 2.0),
        max_curvature_defect,
        area,
        area_defect: (area - target).abs() / target,
        gauss_bonnet_defect: gauss_bonnet_defect(&omega_ke, 0.0),
    };
    Ok(KESolution { omega_ke, u: GridFunction::new(spec.n, u), states, constants: setup.constants, diagnostics })
}

/// Reference metric → Ricci potential → smooth start → continuity path.
pub fn ke_solve(prob: &KEProblem) -> Result<KESolution> {
    let setup = PathSetup::new(prob)?;
    run_path(&setup, vec![initial_state(&setup)?], None)
}

/// As [`ke_solve`], writing a checkpoint after every accepted step.
pub fn ke_solve_checkpointed(prob: &KEProblem, dir: &Path) -> Result<KESolution> {
    let setup = PathSetup::new(prob)?;
    fs::create_dir_all(dir)?;
    let mut ck = Checkpoint::create(dir, prob);
    let s0 = initial_state(&setup)?;
    ck.record(&setup, &s0)?;
    run_path(&setup, vec![s0], Some(&mut ck))
}

/// Continue a checkpointed run. The stored residual of the last accepted
/// state must be reproduced bit for bit before the path is resumed.
pub fn ke_resume(dir: &Path) -> Result<KESolution> {
    let mut ck = Checkpoint::open(dir)?;
    let setup = PathSetup::new(&ck.manifest.problem)?;
    let mut states = Vec::new();
    for entry in &ck.manifest.accepted {
        let (_, u) = read_grid(&dir.join(&entry.file))?;
        let residual = sup(&setup.path_residual(entry.t, &u.values));
        if residual.to_bits() != entry.residual.to_bits() {
            return Err(Error::Format(format!(
                "checkpoint at t = {} re-evaluates to residual {residual:e}, stored {:e}",
                entry.t, entry.residual
            )));
        }
        let monitors = monitors(&setup, &u)?;
        states.push(ContinuityState { t: entry.t, u, residual, newton_history: entry.newton_history.clone(), monitors });
    }
    if states.is_empty() {
        return Err(Error::Format("checkpoint has no accepted states".into()));
    }
    run_path(&setup, states, Some(&mut ck))
}

fn run_path(setup: &PathSetup, mut states: Vec<ContinuityState>, mut ck: Option<&mut Checkpoint>) -> Result<KESolution> {
    let t_start = states.last().unwrap().t;
    for &t in setup.prob.schedule.iter().filter(|&&t| t > t_start) {
        let new = continuity_step(setup, states.last().unwrap(), t)?;
        for s in new {
            if let Some(ck) = ck.as_deref_mut() {
                ck.record(setup, &s)?;
            }
            states.push(s);
        }
    }
    finish(setup, states)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub t: f64,
    pub file: String,
    pub residual: f64,
    pub newton_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub problem: KEProblem,
    pub accepted: Vec<CheckpointEntry>,
}

struct Checkpoint {
    dir: PathBuf,
    manifest: CheckpointManifest,
}

impl Checkpoint {
    const MANIFEST: &'static str = "manifest.json";

    fn create(dir: &Path, prob: &KEProblem) -> Self {
        Self { dir: dir.to_path_buf(), manifest: CheckpointManifest { version: 1, problem: prob.clone(), accepted: vec![] } }
    }

    fn open(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(Self::MANIFEST))?;
        let manifest: CheckpointManifest = serde_json::from_str(&text)?;
        if manifest.version != 1 {
            return Err(Error::Format(format!("unknown checkpoint version {}", manifest.version)));
        }
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    fn record(&mut self, setup: &PathSetup, s: &ContinuityState) -> Result<()> {
        let file = format!("u_{:03}.csv", self.manifest.accepted.len());
        write_grid(&self.dir.join(&file), setup.spec(), &s.u)?;
        self.manifest.accepted.push(CheckpointEntry { t: s.t, file, residual: s.residual, newton_history: s.newton_history.clone() });
        let tmp = self.dir.join("manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&self.manifest)?)?;
        fs::rename(tmp, self.dir.join(Self::MANIFEST))?;
        Ok(())
    }
}
