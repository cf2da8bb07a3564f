mod common;

use std::f64::consts::{PI, TAU};

use conekahler::linear_solver::{fredholm_diagnostics, solve_poisson, solve_shifted, LinearProblem};
use conekahler::surface::{
    build_reference_metric, build_section_norm, gauss_bonnet_defect, gauss_curvature, laplacian, GridFunction, SurfaceMetric, SurfaceSpec,
};
use conekahler::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference(n: usize) -> SurfaceMetric {
    let spec = SurfaceSpec::centered(n, 0.5, 0.24).unwrap();
    build_reference_metric(&build_section_norm(&spec).unwrap(), 0.03, PI).unwrap()
}

fn weighted_dot(m: &SurfaceMetric, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).zip(&m.density).map(|((x, y), d)| x * y * d).sum::<f64>() * m.spec.cell_area()
}

fn smooth_rhs(spec: &SurfaceSpec) -> GridFunction {
    GridFunction::from_fn(spec, |x, y| (TAU * x).sin() + 0.5 * (2.0 * TAU * y).cos() + 0.2 * (TAU * (x + y)).sin())
}

fn project_mean_zero(m: &SurfaceMetric, h: &mut GridFunction) {
    let mean: f64 = h.values.iter().zip(&m.density).map(|(v, d)| v * d).sum::<f64>() / m.density.iter().sum::<f64>();
    h.values.iter_mut().for_each(|v| *v -= mean);
}

#[test]
fn curvature_of_exponential_density_converges_at_second_order() {
    let psi = |x: f64| 0.1 * (TAU * x).sin();
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let spec = SurfaceSpec::centered(n, 0.5, 0.24).unwrap();
        let density = GridFunction::from_fn(&spec, |x, _| (2.0 * psi(x)).exp()).values;
        let m = SurfaceMetric::from_density(&spec, density).unwrap();
        let k = gauss_curvature(&m);
        let exact = GridFunction::from_fn(&spec, |x, _| 0.1 * TAU * TAU * (TAU * x).sin() * (-2.0 * psi(x)).exp());
        let err = (0..spec.len()).filter(|&i| i != spec.apex()).fold(0.0f64, |e, i| e.max((k.values[i] - exact.values[i]).abs()));
        errs.push(err);
    }
    for w in errs.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.2..0.3).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn curvature_agrees_with_independent_stencil() {
    let m = reference(64);
    let k = gauss_curvature(&m);
    let oracle = common::curvature(64, &m.density);
    for i in (0..m.spec.len()).filter(|&i| i != m.spec.apex()) {
        assert!((k.values[i] - oracle[i]).abs() <= 1e-9 * (1.0 + oracle[i].abs()));
    }
}

#[test]
fn gauss_bonnet_for_model_densities_is_within_five_over_n() {
    for n in [64, 128, 256] {
        for beta in [0.3, 0.5, 0.8] {
            let spec = SurfaceSpec::centered(n, beta, 0.24).unwrap();
            let ell = build_section_norm(&spec).unwrap().log_values.values;
            for amp in [0.0, 0.2] {
                let density: Vec<f64> = (0..spec.len())
                    .map(|k| {
                        let (x, y) = ((k % n) as f64 / n as f64, (k / n) as f64 / n as f64);
                        ((2.0 * beta - 2.0) * ell[k] + 2.0 * amp * (TAU * x).sin() * (TAU * y).cos()).exp()
                    })
                    .collect();
                let m = SurfaceMetric::from_density(&spec, density).unwrap();
                let gb = gauss_bonnet_defect(&m, 0.0);
                assert!(gb.abs() < 5.0 / n as f64, "N = {n}, beta = {beta}: {gb}");
            }
        }
    }
}

#[test]
fn laplacian_is_self_adjoint_for_the_area_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = reference(64);
    for _ in 0..5 {
        let u: Vec<f64> = (0..m.spec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..m.spec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lu = laplacian(&m, &GridFunction::new(64, u.clone()));
        let lv = laplacian(&m, &GridFunction::new(64, v.clone()));
        let a = weighted_dot(&m, &lu.values, &v);
        let b = weighted_dot(&m, &u, &lv.values);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }
}

#[test]
fn flat_metric_has_one_dimensional_kernel_and_cokernel() {
    let spec = SurfaceSpec::centered(32, 0.5, 0.24).unwrap();
    let r = fredholm_diagnostics(&SurfaceMetric::flat(&spec, 1.0).unwrap()).unwrap();
    assert_eq!((r.kernel_dim, r.cokernel_dim, r.index), (1, 1, 0));
    // first nonzero eigenvalue of −½Δ₅ on the unit discrete torus
    let exact = 2.0 * (PI / 32.0).sin().powi(2) * 1024.0;
    assert!((r.smallest_nonzero_eigenvalue - exact).abs() < 1e-6 * exact);
}

#[test]
fn smallest_nonzero_eigenvalue_is_stable_under_refinement() {
    let a = fredholm_diagnostics(&reference(64)).unwrap();
    let b = fredholm_diagnostics(&reference(128)).unwrap();
    assert_eq!((a.kernel_dim, b.kernel_dim), (1, 1));
    let ratio = b.smallest_nonzero_eigenvalue / a.smallest_nonzero_eigenvalue;
    assert!((0.8..1.2).contains(&ratio), "{ratio}");
}

#[test]
fn poisson_solution_satisfies_an_independent_residual() {
    let m = reference(128);
    let mut h = smooth_rhs(&m.spec);
    project_mean_zero(&m, &mut h);
    let sol = solve_poisson(&LinearProblem::new(&m, 0.0, &h)).unwrap();
    let lap = common::five_point(128, &sol.u.values);
    let res = lap.iter().zip(&m.density).zip(&h.values).fold(0.0f64, |r, ((l, d), t)| r.max((0.5 * l / d - t).abs()));
    assert!(res < 1e-10 * h.sup_norm(), "{res}");
    assert!(weighted_dot(&m, &sol.u.values, &vec![1.0; m.spec.len()]).abs() < 1e-12);
}

#[test]
fn fredholm_alternative_on_a_constant_family() {
    let m = reference(64);
    let mut h0 = smooth_rhs(&m.spec);
    project_mean_zero(&m, &mut h0);
    for s in [0.0, 1e-6, 1e-3, 0.1, 1.0] {
        let h = GridFunction::new(64, h0.values.iter().map(|v| v + s).collect());
        match solve_poisson(&LinearProblem::new(&m, 0.0, &h)) {
            Ok(sol) => {
                assert_eq!(s, 0.0);
                assert!(sol.residual < 1e-10 * h.sup_norm());
            }
            Err(Error::CokernelObstruction { defect, .. }) => {
                assert!(s > 0.0);
                assert!(defect > 0.0);
            }
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn poisson_solve_is_linear() {
    let m = reference(64);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut h1 = GridFunction::new(64, (0..m.spec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut h2 = smooth_rhs(&m.spec);
    project_mean_zero(&m, &mut h1);
    project_mean_zero(&m, &mut h2);
    let h3 = GridFunction::new(64, h1.values.iter().zip(&h2.values).map(|(a, b)| a - 2.5 * b).collect());
    let u1 = solve_poisson(&LinearProblem::new(&m, 0.0, &h1)).unwrap().u;
    let u2 = solve_poisson(&LinearProblem::new(&m, 0.0, &h2)).unwrap().u;
    let u3 = solve_poisson(&LinearProblem::new(&m, 0.0, &h3)).unwrap().u;
    let scale = u3.sup_norm();
    for k in 0..m.spec.len() {
        assert!((u3.values[k] - (u1.values[k] - 2.5 * u2.values[k])).abs() < 1e-8 * scale);
    }
}

#[test]
fn shifted_solve_satisfies_an_independent_residual() {
    let m = reference(64);
    let h = smooth_rhs(&m.spec);
    let c = 1.0;
    let sol = solve_shifted(&LinearProblem::new(&m, c, &h), None).unwrap();
    let lap = common::five_point(64, &sol.u.values);
    let res = (0..m.spec.len()).fold(0.0f64, |r, k| r.max((0.5 * lap[k] / m.density[k] - c * sol.u.values[k] - h.values[k]).abs()));
    assert!(res < 1e-9 * h.sup_norm(), "{res}");
}
