use std::f64::consts::TAU;

use num_complex::Complex64;

use super::grid::{GridFunction, SurfaceSpec};
use super::metric::SurfaceMetric;
use crate::cone_geometry::{holder_seminorm, ConeParams, ModelPoint};
use crate::Result;

/// `½Δ₅u`: the density of `i∂∂̄u` against `dx dy`.
pub fn half_laplacian(spec: &SurfaceSpec, u: &[f64]) -> Vec<f64> {
    let n = spec.n;
    let c = 0.5 * (n * n) as f64;
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let k = j * n + i;
            out[k] = c * (u[j * n + im] + u[j * n + ip] + u[jm * n + i] + u[jp * n + i] - 4.0 * u[k]);
        }
    }
    out
}

/// `Δ_g u = (i∂∂̄u)/ω`, the analyst's (non-positive) Laplacian of the metric.
pub fn laplacian(m: &SurfaceMetric, u: &GridFunction) -> GridFunction {
    let lap = half_laplacian(&m.spec, &u.values);
    GridFunction::new(m.spec.n, lap.iter().zip(&m.density).map(|(l, d)| l / d).collect())
}

/// `∫u dA` with cell weights `h²·density`, summed in index order.
pub fn integrate(m: &SurfaceMetric, u: &GridFunction) -> f64 {
    integrate_values(m, &u.values)
}

pub fn integrate_values(m: &SurfaceMetric, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (v, d) in u.iter().zip(&m.density) {
        acc += v * d;
    }
    acc * m.spec.cell_area()
}

/// Gaussian curvature `K = −Δ₅(log ρ)/(2ρ)`; the cone node is excluded.
pub fn gauss_curvature(m: &SurfaceMetric) -> GridFunction {
    let logd: Vec<f64> = m.density.iter().map(|d| d.ln()).collect();
    let lap = half_laplacian(&m.spec, &logd);
    let mut k = GridFunction::new(m.spec.n, lap.iter().zip(&m.density).map(|(l, d)| -l / d).collect());
    k.exclude_apex(&m.spec);
    k
}

/// `∫_{|z−p|>R} K dA + 2π(1−β)`: zero for a metric with an exact cone of angle `2πβ` at `p`.
pub fn gauss_bonnet_defect(m: &SurfaceMetric, collar_radius: f64) -> f64 {
    let k = gauss_curvature(m);
    let keep = m.spec.outside(collar_radius);
    let h2 = m.spec.cell_area();
    let mut acc = 0.0;
    for idx in 0..m.spec.len() {
        if keep[idx] && idx != m.spec.apex() {
            acc += k.values[idx] * m.density[idx] * h2;
        }
    }
    acc + TAU * (1.0 - m.spec.beta)
}

/// `c_β = ∫_{[−½,½]²}|x|^{2β−2}dx`, so that `c_β h^{2β}` is the mass of the cone cell.
pub fn cone_cell_constant(beta: f64) -> f64 {
    // polar integral over one eighth of the square: ∫₀^{π/4} (2cos θ)^{−2β} / (2β) dθ
    let m = 2000;
    let a = std::f64::consts::FRAC_PI_4;
    let f = |t: f64| (2.0 * t.cos()).powf(-2.0 * beta) / (2.0 * beta);
    let w = a / m as f64;
    let mut acc = f(0.0) + f(a);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * w);
    }
    8.0 * acc * w / 3.0
}

/// `|z − p|^{2β−2}` off the cone node and its cell average `c_β h^{2β−2}` at it.
pub fn model_cone_density(spec: &SurfaceSpec) -> Vec<f64> {
    let e = 2.0 * spec.beta - 2.0;
    (0..spec.len())
        .map(|k| {
            if k == spec.apex() {
                cone_cell_constant(spec.beta) * spec.h().powf(e)
            } else {
                spec.dist_to_apex(k).powf(e)
            }
        })
        .collect()
}

/// Second differences `max |u(x+he) − 2u(x) + u(x−he)| / h²` over both axes.
pub fn max_second_difference(spec: &SurfaceSpec, u: &[f64]) -> f64 {
    let n = spec.n;
    let inv = (n * n) as f64;
    let mut worst = 0.0f64;
    for k in 0..spec.len() {
        let [l, r, d, up] = spec.neighbours(k);
        worst = worst.max((u[l] - 2.0 * u[k] + u[r]).abs() * inv);
        worst = worst.max((u[d] - 2.0 * u[k] + u[up]).abs() * inv);
    }
    worst
}

/// Largest `|u|` at nodes with `|z − p| > radius`.
pub fn sup_outside(spec: &SurfaceSpec, u: &GridFunction, radius: f64) -> f64 {
    let keep = spec.outside(radius);
    u.values
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
}

/// Largest `|u|` over all nodes except the cone node.
pub fn sup_off_apex(spec: &SurfaceSpec, u: &GridFunction) -> f64 {
    let a = spec.apex();
    u.values
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != a)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
}

/// Median of `|u|` at nodes with `|z − p| > radius`.
pub fn median_abs_outside(spec: &SurfaceSpec, u: &[f64], radius: f64) -> f64 {
    let keep = spec.outside(radius);
    let mut v: Vec<f64> = u.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x.abs()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Discrete `C^α` seminorm near the apex, measured with the cone distance.
///
/// Samples sit on a sublattice of physical spacing `spacing` within `radius`
/// of `p`, so that runs at different `N` see the same sample positions.
pub fn cone_holder_seminorm(spec: &SurfaceSpec, u: &[f64], alpha: f64, spacing: f64, radius: f64) -> Result<f64> {
    let params = ConeParams::for_measurement(spec.beta, alpha)?;
    let stride = ((spacing * spec.n as f64).round() as usize).max(1);
    let n = spec.n as i64;
    let reach = (radius * spec.n as f64 / stride as f64).floor() as i64;
    let mut samples = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let i = (spec.p.0 as i64 + di * stride as i64).rem_euclid(n) as usize;
            let j = (spec.p.1 as i64 + dj * stride as i64).rem_euclid(n) as usize;
            let k = spec.index(i, j);
            let (dx, dy) = spec.offset(k);
            if dx.hypot(dy) <= radius {
                samples.push((ModelPoint::complex(Complex64::new(dx, dy), vec![]), u[k]));
            }
        }
    }
    holder_seminorm(&samples, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n: usize) -> SurfaceSpec {
        SurfaceSpec::centered(n, 0.5, 0.2).unwrap()
    }

    #[test]
    fn constants_have_zero_laplacian() {
        let s = spec(32);
        let m = SurfaceMetric::flat(&s, 1.0).unwrap();
        let l = laplacian(&m, &GridFunction::constant(32, 3.0));
        assert!(l.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fourier_mode_eigenvalue() {
        for n in [64usize, 128] {
            let s = spec(n);
            let m = SurfaceMetric::flat(&s, 2.0).unwrap();
            let u = GridFunction::from_fn(&s, |x, _| (2.0 * PI * x).sin());
            let l = laplacian(&m, &u);
            let mut err = 0.0f64;
            for (k, v) in l.values.iter().enumerate() {
                // ½Δ sin(2πx) = −2π² sin(2πx), divided by the density 2
                let want = -PI * PI * u.values[k];
                err = err.max((v - want).abs());
            }
            assert!(err < 40.0 / (n * n) as f64, "n = {n}: {err}");
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let s = spec(32);
        let m = SurfaceMetric::flat(&s, 1.0).unwrap();
        assert!(gauss_curvature(&m).sup_norm() == 0.0);
    }

    #[test]
    fn cone_constant_at_beta_one_is_cell_area() {
        assert!((cone_cell_constant(1.0) - 1.0).abs() < 1e-12);
        // β = ½: ∫|x|^{-1} over the unit square = 4 asinh(1)
        assert!((cone_cell_constant(0.5) - 4.0 * 1f64.asinh()).abs() < 1e-10);
    }

    #[test]
    fn median_of_even_count() {
        let s = spec(32);
        let mut u = vec![0.0; s.len()];
        u[0] = 1.0;
        assert!(median_abs_outside(&s, &u, 10.0).is_nan());
        assert_eq!(median_abs_outside(&s, &u, 0.0), 0.0);
    }
}
