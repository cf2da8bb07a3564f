use std::f64::consts::TAU;

use conekahler::linear_solver::{compatibility_defect, fredholm_diagnostics, solve_poisson, LinearProblem};
use conekahler::surface::{build_reference_metric, build_section_norm, laplacian, GridFunction, SurfaceMetric, SurfaceSpec};
use conekahler::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RunContext, RunError};
use crate::config::{LinearParams, SurfaceParams};
use crate::report::{Comparison, Report};

pub fn reference_metric(s: &SurfaceParams) -> Result<SurfaceMetric, RunError> {
    let spec = SurfaceSpec::centered(s.n, s.beta, s.r0)?;
    let section = build_section_norm(&spec)?;
    Ok(build_reference_metric(&section, s.delta, TAU * (1.0 - s.beta))?)
}

/// Uniform noise with its `dA_g`-mean removed.
fn mean_zero_noise(rng: &mut ChaCha8Rng, m: &SurfaceMetric) -> GridFunction {
    let mut v: Vec<f64> = (0..m.spec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = v.iter().zip(&m.density).map(|(a, d)| a * d).sum::<f64>() / m.density.iter().sum::<f64>();
    v.iter_mut().for_each(|x| *x -= mean);
    GridFunction::new(m.spec.n, v)
}

pub fn run(ctx: &RunContext, p: &LinearParams, config: serde_json::Value) -> Result<Report, RunError> {
    let mut report = Report::new("solve-linear", ctx.invocation.clone(), vec![3], config);
    let metric = reference_metric(&p.surface())?;
    let fred = fredholm_diagnostics(&metric)?;
    report.check("kernel_dim", fred.kernel_dim as f64, Comparison::AtMost, 1.0);
    report.check("kernel_dim_nonzero", fred.kernel_dim as f64, Comparison::AtLeast, 1.0);
    report.check("cokernel_dim", fred.cokernel_dim as f64, Comparison::AtMost, 1.0);
    report.check("cokernel_dim_nonzero", fred.cokernel_dim as f64, Comparison::AtLeast, 1.0);
    report.quantity("index", fred.index as f64);
    report.quantity("smallest_nonzero_eigenvalue", fred.smallest_nonzero_eigenvalue);
    report.quantity("symmetry_defect", fred.symmetry_defect);
    report.quantity("area", metric.area());
    ctx.csv(&mut report, "eigenvalues.csv", &["index", "eigenvalue"], fred.eigenvalues.iter().enumerate().map(|(i, v)| vec![i as f64, *v]))?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    let mut last = None;
    for i in 0..p.samples {
        let h = mean_zero_noise(&mut rng, &metric);
        let sol = solve_poisson(&LinearProblem::new(&metric, 0.0, &h))?;
        let lap = laplacian(&metric, &sol.u);
        let res = lap.values.iter().zip(&h.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let rel = res / h.sup_norm();
        worst = worst.max(rel);
        rows.push(vec![i as f64, h.sup_norm(), res, rel, sol.iterations as f64]);
        last = Some(sol.u);
    }
    report.check("poisson_max_rel_residual", worst, Comparison::Below, p.tol_rel);
    ctx.csv(&mut report, "poisson_samples.csv", &["sample", "h_sup", "residual", "rel_residual", "iterations"], rows)?;
    if let Some(u) = last {
        ctx.grid(&mut report, "poisson_solution.csv", &metric.spec, &u)?;
    }

    let mut h = mean_zero_noise(&mut rng, &metric);
    h.values.iter_mut().for_each(|v| *v += 1.0);
    let defect = compatibility_defect(&metric, &h.values);
    report.quantity("obstructed_rhs_defect", defect);
    let rejected = matches!(solve_poisson(&LinearProblem::new(&metric, 0.0, &h)), Err(Error::CokernelObstruction { .. }));
    report.check_flag("non_mean_zero_rejected", rejected);
    Ok(report)
}
