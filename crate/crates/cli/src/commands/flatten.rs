use conekahler::ricci_bound::{flatten_ricci, flattened_metric, ricci_identity_residual, ricci_potential_big_f, smooth_approximation, MAFunctionalContext, SmoothingParams};
use conekahler::surface::ops::sup_off_apex;
use conekahler::surface::{build_reference_metric, build_section_norm, gauss_curvature, GridFunction, SurfaceMetric, SurfaceSpec};

use super::{RunContext, RunError};
use crate::config::FlattenParams;
use crate::plot::Series;
use crate::report::{Comparison, Expectation, Report};

/// Largest admissible potential-size proxy for the Newton iterates.
const ADMISSIBLE_BOUND: f64 = 10.0;

pub struct FlattenRun {
    pub n: usize,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub volume: f64,
    pub volume_defect: f64,
    pub sup_curvature_raw: f64,
    pub sup_curvature_flattened: f64,
    pub potential_norm: f64,
    pub identity_residual: f64,
    pub big_f_sup: f64,
    pub h_sup: f64,
    pub spec: SurfaceSpec,
    pub phi: GridFunction,
    pub k_raw: GridFunction,
    pub k_flat: GridFunction,
}

pub fn flatten_at(p: &FlattenParams, n: usize) -> Result<FlattenRun, RunError> {
    let spec = SurfaceSpec::centered(n, p.beta, p.r0)?;
    let section = build_section_norm(&spec)?;
    let area = std::f64::consts::TAU * (1.0 - p.beta);
    let omega = build_reference_metric(&section, p.delta, area)?;
    let big_omega = SurfaceMetric::flat(&spec, area)?;
    let ctx = MAFunctionalContext::new(omega.clone(), ADMISSIBLE_BOUND);
    let alpha_prime = (0.9 * (1.0 / p.beta - 1.0)).min(0.9);
    let sp = SmoothingParams::new(p.beta, alpha_prime, p.eps, p.mu, p.mollifier_scale)?;
    let big_f = ricci_potential_big_f(&omega, &big_omega, &section);
    let approx = smooth_approximation(&ctx, &big_f, &sp)?;
    let res = flatten_ricci(&ctx, &approx.h, &sp, p.newton_tol, p.max_iter)?;
    let omega_phi = flattened_metric(&ctx, &res.phi)?;
    let k_raw = gauss_curvature(&omega);
    let k_flat = gauss_curvature(&omega_phi);
    Ok(FlattenRun {
        n,
        iterations: res.iterations,
        residual_history: res.residual_history,
        volume: ctx.volume,
        volume_defect: res.volume_defect,
        sup_curvature_raw: sup_off_apex(&spec, &k_raw),
        sup_curvature_flattened: sup_off_apex(&spec, &k_flat),
        potential_norm: res.potential_norm,
        identity_residual: ricci_identity_residual(&omega_phi, &section, &approx.f_minus_h),
        big_f_sup: big_f.sup_norm(),
        h_sup: approx.h.sup_norm(),
        spec,
        phi: res.phi,
        k_raw,
        k_flat,
    })
}

fn record(ctx: &RunContext, report: &mut Report, run: &FlattenRun, prefix: &str, tol: f64) -> Result<(), RunError> {
    let q = |s: &str| format!("{prefix}{s}");
    report.check(&q("newton_iterations"), run.iterations as f64, Comparison::AtMost, 8.0);
    report.check(&q("final_residual"), *run.residual_history.last().unwrap(), Comparison::Below, tol);
    report.check(&q("volume_defect_rel"), run.volume_defect.abs() / run.volume, Comparison::AtMost, 1e-8);
    let hist = &run.residual_history;
    if hist.len() >= 3 {
        let m = hist.len();
        report.check(&q("newton_tail_ratio"), hist[m - 1] / hist[m - 2], Comparison::Below, 0.3);
    }
    report.quantity(&q("sup_curvature_raw"), run.sup_curvature_raw);
    report.quantity(&q("sup_curvature_flattened"), run.sup_curvature_flattened);
    report.quantity(&q("potential_norm"), run.potential_norm);
    report.quantity(&q("ricci_identity_residual"), run.identity_residual);
    report.quantity(&q("big_f_sup"), run.big_f_sup);
    report.quantity(&q("h_sup"), run.h_sup);
    report.quantity(&q("newton_iterations"), run.iterations as f64);

    ctx.csv(report, &q("newton_history.csv"), &["iteration", "residual"], hist.iter().enumerate().map(|(i, r)| vec![i as f64, *r]))?;
    ctx.grid(report, &q("phi.csv"), &run.spec, &run.phi)?;
    let (pi, pj) = run.spec.p;
    let row: Vec<Vec<f64>> = (0..run.spec.n)
        .filter(|&i| i != pi)
        .map(|i| {
            let k = run.spec.index(i, pj);
            vec![run.spec.offset(k).0, run.k_raw.values[k], run.k_flat.values[k]]
        })
        .collect();
    let series = [
        Series { name: "raw", points: row.iter().map(|r| (r[0], r[1].abs())).collect() },
        Series { name: "flattened", points: row.iter().map(|r| (r[0], r[2].abs())).collect() },
    ];
    ctx.csv(report, &q("curvature_profile.csv"), &["x_offset", "k_raw", "k_flattened"], row)?;
    ctx.svg(report, &q("curvature_profile.svg"), &format!("|K| through the cone point, N = {}", run.n), "x - x_p", &series, true)?;
    let hs = [Series { name: "residual", points: hist.iter().enumerate().map(|(i, r)| (i as f64, *r)).collect() }];
    ctx.svg(report, &q("newton_history.svg"), "Newton residual", "iteration", &hs, true)?;
    Ok(())
}

pub fn run(ctx: &RunContext, p: &FlattenParams, config: serde_json::Value) -> Result<Report, RunError> {
    let mut report = Report::new("flatten-ricci", ctx.invocation.clone(), vec![4], config);
    report.expectations.push(Expectation::new("sup_curvature_flattened", 0.9, 1.1));
    report.expectations.push(Expectation::new("sup_curvature_raw", 1.5, f64::MAX));
    let coarse = flatten_at(p, p.n)?;
    if !p.refine {
        record(ctx, &mut report, &coarse, "", p.newton_tol)?;
        return Ok(report);
    }
    record(ctx, &mut report, &coarse, &format!("n{}_", p.n), p.newton_tol)?;
    let fine = flatten_at(p, 2 * p.n)?;
    record(ctx, &mut report, &fine, &format!("n{}_", 2 * p.n), p.newton_tol)?;
    let flat_change = (fine.sup_curvature_flattened / coarse.sup_curvature_flattened - 1.0).abs();
    report.check("refinement_flattened_curvature_change", flat_change, Comparison::Below, 0.1);
    report.check("refinement_raw_curvature_growth", fine.sup_curvature_raw / coarse.sup_curvature_raw, Comparison::Above, 1.5);
    Ok(report)
}
