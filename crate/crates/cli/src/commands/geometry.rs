use std::f64::consts::PI;

use conekahler::cone_geometry::{chart_convert, cone_distance, holder_exponent_fit, Chart, ConeParams, FrameHermitian, ModelPoint};
use conekahler::local_models::coordinate_change_components;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RunContext, RunError};
use crate::config::GeometryParams;
use crate::plot::Series;
use crate::report::{Comparison, Report};

/// Cone radii `r = 2^{−k}/2`, `k = 0..=16`.
pub fn fit_radii() -> Vec<f64> {
    (0..=16).map(|k| 0.5 * 0.5f64.powi(k)).collect()
}

pub fn run(ctx: &RunContext, p: &GeometryParams, config: serde_json::Value) -> Result<Report, RunError> {
    let mut report = Report::new("verify-geometry", ctx.invocation.clone(), vec![6], config);
    let radii = fit_radii();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &beta in &p.betas {
        let expected = 1.0 / beta - 1.0;
        let mut factor = Vec::new();
        let mut g12 = Vec::new();
        let g12_apex = coordinate_change_components(&FrameHermitian::identity(2), Complex64::new(0.0, 0.0), beta)?.get(0, 1).re;
        for &r in &radii {
            let z1 = ModelPoint::cone(r, 0.7, vec![Complex64::new(0.0, 0.0)]).z1(beta);
            let v = z1.norm().powf(1.0 - beta);
            let g = coordinate_change_components(&FrameHermitian::identity(2), z1, beta)?.get(0, 1).re;
            factor.push((r, v));
            g12.push((r, g - g12_apex));
            rows.push(vec![beta, r, v, g]);
        }
        let f1 = holder_exponent_fit(&factor)?;
        let f2 = holder_exponent_fit(&g12)?;
        report.quantity(&format!("exponent_factor_beta{beta}"), f1.raw_slope);
        report.quantity(&format!("exponent_g12_beta{beta}"), f2.raw_slope);
        report.check(&format!("exponent_factor_error_beta{beta}"), (f1.exponent - expected).abs(), Comparison::AtMost, p.exponent_tol);
        report.check(&format!("exponent_g12_error_beta{beta}"), (f2.exponent - expected).abs(), Comparison::AtMost, p.exponent_tol);
        series.push((format!("beta={beta}"), g12));
    }
    ctx.csv(&mut report, "exponent_samples.csv", &["beta", "r", "abs_z1_pow", "g12"], rows)?;
    let named: Vec<Series> = series.iter().map(|(n, pts)| Series { name: n, points: pts.iter().map(|(r, v)| (r.log10(), *v)).collect() }).collect();
    ctx.svg(&mut report, "g12_profile.svg", "g12 against log10 r", "log10 r", &named, true)?;

    // metric axioms and chart round trips on random points
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut roundtrip = 0.0f64;
    let mut asym = 0.0f64;
    let mut triangle = 0.0f64;
    for i in 0..p.points {
        let beta = p.betas[i % p.betas.len()];
        let params = ConeParams::for_measurement(beta, (1.0 / beta - 1.0).min(1.0))?;
        let mut pt = || ModelPoint::cone(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0 * PI), vec![Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))]);
        let (x, y, z) = (pt(), pt(), pt());
        let back = chart_convert(&chart_convert(&x, Chart::Complex, &params), Chart::Cone, &params);
        let (r0, t0) = x.cone_coords(beta);
        let (r1, t1) = back.cone_coords(beta);
        let dt = (t0 - t1).abs().min(2.0 * PI - (t0 - t1).abs());
        roundtrip = roundtrip.max((r0 - r1).abs() + r0 * dt);
        let dxy = cone_distance(&x, &y, &params);
        asym = asym.max((dxy - cone_distance(&y, &x, &params)).abs());
        triangle = triangle.max(dxy - cone_distance(&x, &z, &params) - cone_distance(&z, &y, &params));
    }
    report.check("chart_roundtrip_error", roundtrip, Comparison::Below, 1e-12);
    report.check("distance_asymmetry", asym, Comparison::Below, 1e-12);
    report.check("triangle_inequality_excess", triangle, Comparison::AtMost, 1e-12);
    Ok(report)
}
