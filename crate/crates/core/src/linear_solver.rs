//! Linear theory on the testbed: `Δ_g u = h` and `(Δ_g − c)u = h`.
//!
//! `Δ_g` has the constants as kernel and, being self-adjoint for the pairing
//! `∫uv dA_g`, the constants as cokernel: it is Fredholm of index 0. The
//! Poisson solve therefore rejects right-hand sides with non-zero mean,
//! while the shifted operator is invertible.
//!
//! Poisson problems are solved directly in Fourier space after rewriting
//! them as `½Δ₅u = ρh`. Shifted problems `(−½Δ₅ + cρ)u = −ρh` use conjugate
//! gradients preconditioned by the constant-coefficient Fourier inverse.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::surface::{half_laplacian, GridFunction, Spectral, SurfaceMetric, SurfaceSpec};
use crate::{Error, Result};

/// Default compatibility threshold for `|∫h dA| / (area·‖h‖_∞)`.
pub const TOL_COMPAT: f64 = 1e-8;
/// Default residual tolerance relative to `‖h‖_∞`.
pub const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LinearProblem<'a> {
    pub metric: &'a SurfaceMetric,
    pub shift: f64,
    pub rhs: &'a GridFunction,
    /// Absolute residual tolerance; `None` means `1e−10·‖h‖_∞`.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl<'a> LinearProblem<'a> {
    pub fn new(metric: &'a SurfaceMetric, shift: f64, rhs: &'a GridFunction) -> Self {
        Self { metric, shift, rhs, tol: None, max_iter: 2000 }
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(REL_TOL * self.rhs.sup_norm())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSolution {
    pub u: GridFunction,
    /// `max |Δ_g u − c u − h|` with `h` replaced by its range component for `c = 0`.
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// The mean of `h` removed before solving (zero for shifted problems).
    pub removed_mean: f64,
}

/// `|∫h dA| / (area·‖h‖_∞)`, zero for `h = 0`.
pub fn compatibility_defect(metric: &SurfaceMetric, h: &[f64]) -> f64 {
    let sup = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (v, d) in h.iter().zip(&metric.density) {
        acc += v * d;
    }
    let mut area = 0.0;
    for d in &metric.density {
        area += d;
    }
    (acc / area).abs() / sup
}

fn weighted_mean(metric: &SurfaceMetric, u: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, d) in u.iter().zip(&metric.density) {
        num += v * d;
        den += d;
    }
    num / den
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Solve `Δ_g u = h` for mean-zero `u`. Fails with a cokernel obstruction when
/// `h` has non-negligible mean.
pub fn solve_poisson(p: &LinearProblem) -> Result<LinearSolution> {
    if p.shift != 0.0 {
        return Err(Error::InvalidParameter("solve_poisson needs shift = 0".into()));
    }
    solve_poisson_with(p, TOL_COMPAT)
}

pub fn solve_poisson_with(p: &LinearProblem, tol_compat: f64) -> Result<LinearSolution> {
    let m = p.metric;
    let spec = &m.spec;
    let h = &p.rhs.values;
    let defect = compatibility_defect(m, h);
    if defect >= tol_compat {
        return Err(Error::CokernelObstruction { defect, tol: tol_compat });
    }
    let n = spec.n;
    if p.rhs.sup_norm() == 0.0 {
        return Ok(LinearSolution { u: GridFunction::zeros(n), residual: 0.0, iterations: 0, history: vec![], removed_mean: 0.0 });
    }
    let mean = weighted_mean(m, h);
    let target: Vec<f64> = h.iter().map(|v| v - mean).collect();
    let tol = p.tol();
    let spectral = Spectral::new(n);

    let mut u = vec![0.0; spec.len()];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    for _ in 0..p.max_iter.clamp(1, 6) {
        // r = ρ(target − Δ_g u) in density units; its sum vanishes up to roundoff
        let lap = half_laplacian(spec, &u);
        let r: Vec<f64> = target.iter().zip(&m.density).zip(&lap).map(|((t, d), l)| d * t - l).collect();
        let du = spectral.solve(&r.iter().map(|v| -v).collect::<Vec<_>>(), 0.0);
        for (a, b) in u.iter_mut().zip(&du) {
            *a += b;
        }
        let c = weighted_mean(m, &u);
        u.iter_mut().for_each(|v| *v -= c);
        let lap = half_laplacian(spec, &u);
        residual = lap.iter().zip(&m.density).zip(&target).fold(0.0f64, |acc, ((l, d), t)| acc.max((l / d - t).abs()));
        history.push(residual);
        if residual < tol {
            break;
        }
    }
    if residual >= tol {
        return Err(Error::NoConvergence { what: "Poisson solve", iterations: history.len(), last: residual, history });
    }
    Ok(LinearSolution { u: GridFunction::new(n, u), residual, iterations: history.len(), history, removed_mean: mean })
}

/// Solve `(Δ_g − c)u = h` with `c > 0`, starting from `x0` (zero by default).
pub fn solve_shifted(p: &LinearProblem, x0: Option<&[f64]>) -> Result<LinearSolution> {
    if !(p.shift > 0.0) {
        return Err(Error::InvalidParameter(format!("shift = {} must be positive", p.shift)));
    }
    let m = p.metric;
    let spec = &m.spec;
    let n = spec.n;
    if p.rhs.sup_norm() == 0.0 && x0.is_none() {
        return Ok(LinearSolution { u: GridFunction::zeros(n), residual: 0.0, iterations: 0, history: vec![], removed_mean: 0.0 });
    }
    let diag: Vec<f64> = m.density.iter().map(|d| p.shift * d).collect();
    let rhs: Vec<f64> = p.rhs.values.iter().zip(&m.density).map(|(h, d)| -h * d).collect();
    let spectral = Spectral::new(n);
    let out = pcg_screened(spec, &spectral, &diag, &rhs, x0, &m.density, p.tol(), p.max_iter)?;
    Ok(LinearSolution {
        u: GridFunction::new(n, out.x),
        residual: out.residual,
        iterations: out.iterations,
        history: out.history,
        removed_mean: 0.0,
    })
}

pub(crate) struct PcgOutput {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Conjugate gradients for `(−½Δ₅ + D)x = b` with `D ≥ 0` diagonal and not identically zero.
///
/// Stops when `max |b − Ax|_i / weight_i < tol`; the true residual is
/// recomputed on exit and the iteration restarted if recurrence drift hides it.
pub(crate) fn pcg_screened(
    spec: &SurfaceSpec,
    spectral: &Spectral,
    diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    weight: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<PcgOutput> {
    let len = spec.len();
    let shift = diag.iter().sum::<f64>() / len as f64;
    if !(shift > 0.0) {
        return Err(Error::InvalidParameter("screened operator needs a positive diagonal".into()));
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        let lap = half_laplacian(spec, x);
        x.iter().zip(&lap).zip(diag).map(|((xi, l), d)| d * xi - l).collect()
    };
    let scaled_sup = |r: &[f64]| r.iter().zip(weight).fold(0.0f64, |m, (ri, w)| m.max((ri / w).abs()));
    let dot = |a: &[f64], c: &[f64]| -> f64 { a.iter().zip(c).map(|(x, y)| x * y).sum() };

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; len]);
    let mut history = Vec::new();
    let mut total = 0;
    for _restart in 0..4 {
        let ax = apply(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let res = scaled_sup(&r);
        history.push(res);
        if res < tol {
            return Ok(PcgOutput { x, residual: res, iterations: total, history });
        }
        let mut z = spectral.solve(&r, shift);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        while total < max_iter {
            total += 1;
            let ad = apply(&d);
            let alpha = rz / dot(&d, &ad);
            for i in 0..len {
                x[i] += alpha * d[i];
                r[i] -= alpha * ad[i];
            }
            let res = scaled_sup(&r);
            history.push(res);
            if res < 0.5 * tol {
                break;
            }
            z = spectral.solve(&r, shift);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..len {
                d[i] = z[i] + beta * d[i];
            }
        }
        if total >= max_iter {
            break;
        }
    }
    let ax = apply(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let res = scaled_sup(&r);
    // attainable accuracy: rounding in A x alone is about ε·‖A‖·‖x‖
    let norm_a = 2.0 * (spec.n * spec.n) as f64 + diag.iter().fold(0.0f64, |m, d| m.max(*d));
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let wmin = weight.iter().fold(f64::INFINITY, |m, w| m.min(*w));
    let floor = 64.0 * f64::EPSILON * norm_a * xmax / wmin;
    if res < tol.max(floor) {
        return Ok(PcgOutput { x, residual: res, iterations: total, history });
    }
    Err(Error::NoConvergence { what: "preconditioned conjugate gradients", iterations: total, last: res, history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmReport {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub index: i64,
    /// Smallest eigenvalues of `−Δ_g`, ascending.
    pub eigenvalues: Vec<f64>,
    pub smallest_nonzero_eigenvalue: f64,
    /// `max |⟨Δu,v⟩ − ⟨u,Δv⟩| / (‖Δu‖‖v‖)` over a few deterministic pairs.
    pub symmetry_defect: f64,
    pub iterations: usize,
}

fn pseudo_random(len: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Kernel and cokernel dimensions of `Δ_g` by shift-invert subspace iteration.
///
/// The eigenproblem `−½Δ₅u = λρu` is iterated with `(−½Δ₅ + σρ)⁻¹ρ` on a
/// block of six vectors with Rayleigh–Ritz in the `ρ`-inner product. The
/// kernel counts Ritz values below `1e−8` times the largest one. The
/// cokernel is the `dA_g`-orthogonal complement of the range, which
/// equals the kernel when `Δ_g` is self-adjoint for that pairing; the
/// measured symmetry defect is reported alongside.
pub fn fredholm_diagnostics(metric: &SurfaceMetric) -> Result<FredholmReport> {
    let spec = &metric.spec;
    let len = spec.len();
    let rho = &metric.density;
    let k = 6;
    let area = metric.area();
    let sigma = 1.0 / area;
    let spectral = Spectral::new(spec.n);
    let diag: Vec<f64> = rho.iter().map(|d| sigma * d).collect();

    let bdot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(rho).map(|((x, y), d)| x * y * d).sum() };
    let mut block: Vec<Vec<f64>> = (0..k).map(|i| pseudo_random(len, 17 + i as u64)).collect();
    let mut ritz = vec![0.0; k];
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        // shift-invert step
        let mut next = Vec::with_capacity(k);
        for x in &block {
            let rhs: Vec<f64> = x.iter().zip(rho).map(|(v, d)| v * d).collect();
            let out = pcg_screened(spec, &spectral, &diag, &rhs, None, rho, 1e-11 * x.iter().fold(0.0f64, |m, v| m.max(v.abs())), 5000)?;
            next.push(out.x);
        }
        // ρ-orthonormalize (two passes of modified Gram–Schmidt)
        for _ in 0..2 {
            for i in 0..k {
                for j in 0..i {
                    let c = bdot(&next[i], &next[j]);
                    let (head, tail) = next.split_at_mut(i);
                    for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                        *a -= c * b;
                    }
                }
                let nrm = bdot(&next[i], &next[i]).sqrt();
                next[i].iter_mut().for_each(|v| *v /= nrm);
            }
        }
        // Rayleigh–Ritz with A = −½Δ₅
        let ax: Vec<Vec<f64>> = next.iter().map(|x| half_laplacian(spec, x).iter().map(|v| -v).collect()).collect();
        let small = DMatrix::from_fn(k, k, |i, j| {
            let a: f64 = next[i].iter().zip(&ax[j]).map(|(x, y)| x * y).sum();
            let b: f64 = next[j].iter().zip(&ax[i]).map(|(x, y)| x * y).sum();
            0.5 * (a + b)
        });
        let eig = small.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let new_ritz: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        block = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; len];
                for (r, x) in next.iter().enumerate() {
                    let w = eig.eigenvectors[(r, c)];
                    for (a, b) in v.iter_mut().zip(x) {
                        *a += w * b;
                    }
                }
                v
            })
            .collect();
        let scale = new_ritz[k - 1].abs().max(1e-300);
        let change = new_ritz.iter().zip(&ritz).take(k - 1).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        ritz = new_ritz;
        if it > 3 && change < 1e-11 {
            break;
        }
    }

    let threshold = 1e-8 * ritz[k - 1].abs();
    let kernel_dim = ritz.iter().filter(|l| l.abs() < threshold).count();
    let smallest_nonzero_eigenvalue = ritz.iter().copied().find(|l| l.abs() >= threshold).unwrap_or(f64::NAN);

    let mut symmetry_defect = 0.0f64;
    for s in 0..3u64 {
        let u = pseudo_random(len, 1000 + s);
        let v = pseudo_random(len, 2000 + s);
        let lu = half_laplacian(spec, &u);
        let lv = half_laplacian(spec, &v);
        // ⟨Δ_g u, v⟩_{dA_g} = Σ ½Δ₅u · v · h²
        let a: f64 = lu.iter().zip(&v).map(|(x, y)| x * y).sum();
        let b: f64 = lv.iter().zip(&u).map(|(x, y)| x * y).sum();
        let scale = lu.iter().map(|x| x * x).sum::<f64>().sqrt() * v.iter().map(|x| x * x).sum::<f64>().sqrt();
        symmetry_defect = symmetry_defect.max((a - b).abs() / scale);
    }
    let cokernel_dim = if symmetry_defect < 1e-10 { kernel_dim } else { cokernel_dim_direct(metric, &spectral)? };
    Ok(FredholmReport {
        kernel_dim,
        cokernel_dim,
        index: kernel_dim as i64 - cokernel_dim as i64,
        eigenvalues: ritz,
        smallest_nonzero_eigenvalue,
        symmetry_defect,
        iterations,
    })
}

/// Count independent directions `e` for which `Δ_g u = e` is unsolvable,
/// probing with point sources at a few nodes.
fn cokernel_dim_direct(metric: &SurfaceMetric, spectral: &Spectral) -> Result<usize> {
    let spec = &metric.spec;
    let mut fails = Vec::new();
    for node in [0, spec.len() / 3, spec.len() / 2 + 7] {
        let mut e = vec![0.0; spec.len()];
        e[node] = 1.0;
        let u = spectral.solve(&e.iter().zip(&metric.density).map(|(v, d)| -v * d).collect::<Vec<_>>(), 0.0);
        let lap = half_laplacian(spec, &u);
        let r: Vec<f64> = lap.iter().zip(&metric.density).map(|(l, d)| l / d).collect();
        fails.push(sup_diff(&r, &e) > 1e-8);
    }
    Ok(usize::from(fails.iter().any(|f| *f)))
}
