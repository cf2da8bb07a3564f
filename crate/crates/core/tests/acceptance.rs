//! Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL
//! line per criterion with the measured values underneath.

mod common;

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use conekahler::cone_geometry::{holder_exponent_fit, FrameHermitian, ModelPoint};
use conekahler::ke_continuity::{ke_solve, uniform_schedule, KEProblem, KESolution};
use conekahler::linear_solver::{fredholm_diagnostics, solve_poisson, LinearProblem};
use conekahler::local_models::{coordinate_change_components, gaussian_curvature_ka, reference_components, sturm_pullback};
use conekahler::ricci_bound::{flatten_ricci, flattened_metric, ricci_potential_big_f, smooth_approximation, MAFunctionalContext, SmoothingParams};
use conekahler::surface::{build_reference_metric, build_section_norm, GridFunction, SurfaceMetric, SurfaceSpec};
use conekahler::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{conformal_curvature_fd, curvature, five_point, median, random_local_data, torus_dist};

struct Criterion {
    lines: Vec<String>,
    passed: bool,
}

impl Criterion {
    fn new() -> Self {
        Self { lines: vec![], passed: true }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines.push(format!("    [{}] {name}: {detail}", if ok { "ok" } else { "FAIL" }));
    }

    fn runtime(&mut self, t: Duration, limit: Duration) {
        self.check("runtime", t < limit, format!("{:.2}s < {}s", t.as_secs_f64(), limit.as_secs()));
    }
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for beta in [0.6, 0.75, 0.9] {
        for a in [-0.5, 0.5] {
            for _ in 0..100 {
                let r = rng.gen_range(0.05..0.95);
                let th = rng.gen_range(-PI..PI);
                let z = Complex64::from_polar(r, th);
                let k = gaussian_curvature_ka(z, a, beta).unwrap();
                let fd = conformal_curvature_fd(z.re, z.im, a, beta);
                worst = worst.max((k - fd).abs() / k.abs());
            }
        }
    }
    c.check("K_a vs finite-difference oracle", worst < 1e-4, format!("max rel error {worst:.3e} < 1e-4"));
    c.runtime(t.elapsed(), Duration::from_secs(1));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut branch, mut accepted) = (0.0f64, 0.0f64, 0);
    while accepted < 1000 {
        let beta = [0.3, 0.5, 0.6, 0.75, 0.9][accepted % 5];
        let d = random_local_data(&mut rng, 2 + accepted % 2, beta);
        let refc = reference_components(&d).unwrap();
        if !refc.positive_definite {
            continue;
        }
        accepted += 1;
        let g = sturm_pullback(&d, PI).unwrap();
        worst = worst.max(g.max_abs_diff(&refc.metric));
        for cut in [PI / 2.0, -PI / 2.0, 0.0] {
            if (d.z[0].arg() - cut).abs() > 1e-6 {
                branch = branch.max(sturm_pullback(&d, cut).unwrap().max_abs_diff(&g));
            }
        }
    }
    c.check("pull-back equals reference components", worst < 1e-9, format!("max |diff| {worst:.3e} < 1e-9"));
    c.check("branch independence", branch < 1e-12, format!("max |diff| {branch:.3e} < 1e-12"));
    c.runtime(t.elapsed(), Duration::from_secs(1));
    c
}

fn reference(n: usize, delta: f64) -> SurfaceMetric {
    let spec = SurfaceSpec::centered(n, 0.5, 0.24).unwrap();
    build_reference_metric(&build_section_norm(&spec).unwrap(), delta, PI).unwrap()
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    let m = reference(128, 0.03);
    let fred = fredholm_diagnostics(&m).unwrap();
    c.check("kernel and cokernel", fred.kernel_dim == 1 && fred.cokernel_dim == 1, format!("kernel {} cokernel {}", fred.kernel_dim, fred.cokernel_dim));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut h: Vec<f64> = (0..m.spec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = h.iter().zip(&m.density).map(|(a, d)| a * d).sum::<f64>() / m.density.iter().sum::<f64>();
        h.iter_mut().for_each(|v| *v -= mean);
        let hg = GridFunction::new(128, h);
        let sol = solve_poisson(&LinearProblem::new(&m, 0.0, &hg)).unwrap();
        let lap = five_point(128, &sol.u.values);
        let res = lap.iter().zip(&m.density).zip(&hg.values).fold(0.0f64, |a, ((l, d), h)| a.max((0.5 * l / d - h).abs()));
        worst = worst.max(res / hg.sup_norm());
    }
    c.check("Poisson residual", worst < 1e-10, format!("max residual/‖h‖ {worst:.3e} < 1e-10"));
    let h = GridFunction::constant(128, 1.0);
    let rejected = matches!(solve_poisson(&LinearProblem::new(&m, 0.0, &h)), Err(Error::CokernelObstruction { .. }));
    c.check("non-mean-zero rejected", rejected, format!("{rejected}"));
    c.runtime(t.elapsed(), Duration::from_secs(30));
    c
}

struct Flattened {
    sup_flat: f64,
    sup_raw: f64,
    volume_rel: f64,
    iterations: usize,
}

fn flatten(n: usize) -> Flattened {
    let spec = SurfaceSpec::centered(n, 0.5, 0.24).unwrap();
    let s = build_section_norm(&spec).unwrap();
    let w = build_reference_metric(&s, 0.03, PI).unwrap();
    let big = SurfaceMetric::flat(&spec, PI).unwrap();
    let ctx = MAFunctionalContext::new(w.clone(), 10.0);
    let sp = SmoothingParams::defaults(0.5);
    let a = smooth_approximation(&ctx, &ricci_potential_big_f(&w, &big, &s), &sp).unwrap();
    let r = flatten_ricci(&ctx, &a.h, &sp, 1e-10, 30).unwrap();
    let wp = flattened_metric(&ctx, &r.phi).unwrap();
    let apex = spec.apex();
    let sup = |d: &[f64]| curvature(n, d).iter().enumerate().filter(|(k, _)| *k != apex).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    // volume of e^{H(φ)}ω is the area of ω_φ
    let vol: f64 = wp.density.iter().sum::<f64>() / (n * n) as f64;
    Flattened { sup_flat: sup(&wp.density), sup_raw: sup(&w.density), volume_rel: (vol - PI).abs() / PI, iterations: r.iterations }
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    let a = flatten(128);
    let b = flatten(256);
    let change = (b.sup_flat / a.sup_flat - 1.0).abs();
    c.check("sup|K(ω_φ)| change", change < 0.1, format!("{:.4} → {:.4}, change {change:.3} < 0.1", a.sup_flat, b.sup_flat));
    let growth = b.sup_raw / a.sup_raw;
    c.check("sup|K(ω)| growth", growth > 1.5, format!("{:.2} → {:.2}, ratio {growth:.3} > 1.5", a.sup_raw, b.sup_raw));
    let vol = a.volume_rel.max(b.volume_rel);
    c.check("volume conservation", vol < 1e-8, format!("max rel defect {vol:.3e} < 1e-8"));
    c.check("Newton iterations", a.iterations <= 8 && b.iterations <= 8, format!("{} and {} ≤ 8", a.iterations, b.iterations));
    c.runtime(t.elapsed(), Duration::from_secs(120));
    c
}

fn ke(n: usize, steps: usize) -> KESolution {
    let mut prob = KEProblem::new(SurfaceSpec::centered(n, 0.5, 0.24).unwrap(), 0.03);
    prob.schedule = uniform_schedule(steps);
    ke_solve(&prob).unwrap()
}

/// Median `|K + 1|` over nodes with `|z − p| > r0/2`, by the independent stencil.
fn median_defect(sol: &KESolution) -> f64 {
    let spec = sol.omega_ke.spec;
    let k = curvature(spec.n, &sol.omega_ke.density);
    let apex = spec.apex();
    median((0..spec.len()).filter(|&i| torus_dist(spec.n, i, apex) > spec.r0 / 2.0).map(|i| (k[i] + 1.0).abs()).collect())
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    let sol = ke(256, 11);
    let elapsed = t.elapsed();
    let d = &sol.diagnostics;
    c.check("accepted steps", d.accepted_steps <= 20, format!("{} ≤ 20", d.accepted_steps));
    let spec = sol.omega_ke.spec;
    c.check("final path residual", d.final_path_residual < 1e-8, format!("{:.3e} < 1e-8", d.final_path_residual));
    let med = median_defect(&sol);
    c.check("median |K+1| off the collar", med < 0.02, format!("{med:.3e} < 0.02"));
    let area = sol.omega_ke.density.iter().sum::<f64>() / (spec.n * spec.n) as f64;
    let target = TAU * 0.5;
    c.check("area identity", (area - target).abs() / target < 0.02, format!("area {area:.6} vs {target:.6}"));
    let c0 = sol.states.iter().all(|s| s.monitors.c0.sup_u <= s.monitors.c0.bound + 10.0 / spec.n as f64);
    let c0_worst = sol.states.iter().map(|s| s.monitors.c0.sup_u - s.monitors.c0.bound - 10.0 / spec.n as f64).fold(f64::NEG_INFINITY, f64::max);
    c.check("C0 monitor", c0, format!("max(sup u − bound − 10/N) {c0_worst:.3e} ≤ 0"));
    let cl = sol.states.iter().map(|s| s.monitors.chernlu.residual).fold(f64::INFINITY, f64::min);
    c.check("Chern–Lu residual", cl >= -1e-3, format!("min {cl:.3e} ≥ -1e-3"));
    c.runtime(elapsed, Duration::from_secs(600));
    let fine = ke(512, 11);
    let med_fine = median_defect(&fine);
    let ratio = med_fine / med;
    c.check("median |K+1| halves at N=512", (0.35..=0.65).contains(&ratio), format!("{med:.3e} → {med_fine:.3e}, ratio {ratio:.3} in [0.35, 0.65]"));
    c
}

fn fit_radii() -> Vec<f64> {
    (0..=16).map(|k| 0.5 * 0.5f64.powi(k)).collect()
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    for beta in [0.6, 0.75, 0.9] {
        let expected = 1.0 / beta - 1.0;
        let mut v = Vec::new();
        let mut g = Vec::new();
        for r in fit_radii() {
            let z1 = ModelPoint::cone(r, 1.1, vec![Complex64::new(0.0, 0.0)]).z1(beta);
            v.push((r, z1.norm().powf(1.0 - beta)));
            let g12 = coordinate_change_components(&FrameHermitian::identity(2), z1, beta).unwrap().get(0, 1).re;
            g.push((r, g12));
        }
        let e1 = holder_exponent_fit(&v).unwrap().exponent;
        let e2 = holder_exponent_fit(&g).unwrap().exponent;
        c.check(&format!("β = {beta}"), (e1 - expected).abs() <= 0.05 && (e2 - expected).abs() <= 0.05, format!("|z1|^(1-β): {e1:.4}, g12: {e2:.4}, expected {expected:.4} ± 0.05"));
    }
    c.runtime(t.elapsed(), Duration::from_secs(1));
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new();
    let t = Instant::now();
    let a = ke(256, 11);
    let b = ke(256, 21);
    let diff = a.u.values.iter().zip(&b.u.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    c.check("final u agreement (11 vs 21 steps)", diff < 1e-6, format!("max |Δu| {diff:.3e} < 1e-6"));
    c.runtime(t.elapsed(), Duration::from_secs(1200));
    c
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Criterion); 7] = [
        (1, "curvature formula oracle", criterion_1),
        (2, "Sturm identity", criterion_2),
        (3, "discrete index-0 behavior", criterion_3),
        (4, "Ricci flattening under refinement", criterion_4),
        (5, "Kähler–Einstein continuity path", criterion_5),
        (6, "Hölder threshold exponents", criterion_6),
        (7, "schedule independence", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str()) || s == &id.to_string()) {
            continue;
        }
        let c = f();
        println!("{} criterion {id}: {name}", if c.passed { "PASS" } else { "FAIL" });
        for l in &c.lines {
            println!("{l}");
        }
        if !c.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
