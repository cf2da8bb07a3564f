use std::f64::consts::PI;

use conekahler::cone_geometry::FrameHermitian;
use conekahler::local_models::{curvature_unboundedness_scan, gaussian_curvature_ka, reference_components, sturm_pullback, DivergenceVerdict, Jet2, LocalData};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RunContext, RunError};
use crate::config::LocalParams;
use crate::report::{Comparison, Report};

/// `K = −Δ log λ / 2λ` for `λ = a + r^{2β−2}` by fourth-order central differences.
pub fn ka_finite_difference(x: f64, y: f64, a: f64, beta: f64) -> f64 {
    let lam = |x: f64, y: f64| a + (x * x + y * y).powf(beta - 1.0);
    let l = |x: f64, y: f64| lam(x, y).ln();
    let h = 0.01 * x.hypot(y);
    let d2 = |f: &dyn Fn(f64) -> f64| (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
    let dxx = d2(&|s| l(x + s, y));
    let dyy = d2(&|s| l(x, y + s));
    -(dxx + dyy) / (2.0 * lam(x, y))
}

fn random_complex(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex64> {
    let c: Vec<Complex64> = (0..n * n).map(|_| random_complex(rng, scale)).collect();
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (c[i * n + j] + c[j * n + i].conj()) * 0.5;
        }
    }
    h
}

/// Random admissible data: `Ω = I + BB*`, `F ∈ [0.5, 2]`, `δ ∈ [0.05, 0.3]`.
fn random_local_data(rng: &mut ChaCha8Rng, beta: f64) -> LocalData {
    let n = rng.gen_range(2..=3);
    let b: Vec<Complex64> = (0..n * n).map(|_| random_complex(rng, 0.3)).collect();
    let mut omega = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            for k in 0..n {
                v += b[i * n + k] * b[j * n + k].conj();
            }
            omega[i * n + j] = v;
        }
    }
    let m = 10f64.powf(rng.gen_range(-4.0..-0.3));
    let arg = rng.gen_range(-PI..PI);
    let mut z = vec![Complex64::from_polar(m, arg)];
    z.extend((1..n).map(|_| random_complex(rng, 0.5)));
    LocalData {
        f: Jet2 {
            value: rng.gen_range(0.5..2.0),
            grad: (0..n).map(|_| random_complex(rng, 0.5)).collect(),
            hess: random_hermitian(rng, n, 0.5),
        },
        omega,
        z,
        beta,
        delta: rng.gen_range(0.05..0.3),
    }
}

fn max_entry(g: &FrameHermitian) -> f64 {
    g.entries.iter().fold(0.0f64, |m, v| m.max(v.norm()))
}

pub fn run(ctx: &RunContext, p: &LocalParams, config: serde_json::Value) -> Result<Report, RunError> {
    let mut report = Report::new("verify-local", ctx.invocation.clone(), vec![1, 2], config);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let mut rows = Vec::new();
    let mut worst_ka = 0.0f64;
    for &beta in &p.betas {
        for &a in &p.a_values {
            let mut worst = 0.0f64;
            for _ in 0..p.points {
                let r = rng.gen_range(0.05..0.95);
                let th = rng.gen_range(-PI..PI);
                let (x, y) = (r * th.cos(), r * th.sin());
                let exact = gaussian_curvature_ka(Complex64::new(x, y), a, beta)?;
                let fd = ka_finite_difference(x, y, a, beta);
                let rel = (fd - exact).abs() / exact.abs();
                worst = worst.max(rel);
                rows.push(vec![beta, a, x, y, exact, fd, rel]);
            }
            report.quantity(&format!("ka_max_rel_error_beta{beta}_a{a}"), worst);
            worst_ka = worst_ka.max(worst);
        }
    }
    report.check("ka_fd_max_rel_error", worst_ka, Comparison::Below, p.tol_ka);
    ctx.csv(&mut report, "ka_samples.csv", &["beta", "a", "x", "y", "k_exact", "k_fd", "rel_error"], rows)?;

    let radii: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
    for &beta in &p.betas {
        if beta > 0.5 {
            let scan = curvature_unboundedness_scan(0.5, beta, &radii)?;
            report.check_flag(&format!("ka_unbounded_below_beta{beta}"), scan.verdict == DivergenceVerdict::DivergesToMinusInfinity);
        }
    }

    let mut worst_sturm = 0.0f64;
    let mut worst_branch = 0.0f64;
    let mut rejected = 0usize;
    let mut rows = Vec::new();
    let mut accepted = 0usize;
    while accepted < p.sturm_points {
        let beta = p.betas[accepted % p.betas.len()];
        let d = random_local_data(&mut rng, beta);
        let reference = reference_components(&d)?;
        if !reference.positive_definite {
            rejected += 1;
            if rejected > 100 * p.sturm_points {
                return Err(RunError::Config("random local data is almost never admissible".into()));
            }
            continue;
        }
        accepted += 1;
        let g = sturm_pullback(&d, PI)?;
        let diff = g.max_abs_diff(&reference.metric);
        let branch = [PI / 2.0, -PI / 2.0, 0.0]
            .iter()
            .filter(|&&cut| (d.z[0].arg() - cut).abs() > 1e-6)
            .map(|&cut| sturm_pullback(&d, cut).map(|h| h.max_abs_diff(&g)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        worst_sturm = worst_sturm.max(diff);
        worst_branch = worst_branch.max(branch);
        rows.push(vec![beta, d.n() as f64, d.z[0].norm(), max_entry(&reference.metric), diff, branch]);
    }
    report.check("sturm_vs_reference_max_abs", worst_sturm, Comparison::Below, p.tol_sturm);
    report.check("sturm_branch_independence", worst_branch, Comparison::Below, p.tol_branch);
    report.quantity("sturm_rejected_samples", rejected as f64);
    ctx.csv(&mut report, "sturm_samples.csv", &["beta", "n", "abs_z1", "max_entry", "diff_reference", "diff_branch"], rows)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_oracle_reproduces_flat_case() {
        // a = 0: λ = r^{2β−2} is flat, K = 0
        assert!(ka_finite_difference(0.3, 0.4, 0.0, 0.7).abs() < 1e-6);
    }

    #[test]
    fn random_data_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            random_local_data(&mut rng, 0.6).validate().unwrap();
        }
    }
}
