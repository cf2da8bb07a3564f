use std::fs;

use conekahler::ke_continuity::{ke_resume, ke_solve, ke_solve_checkpointed, uniform_schedule, KEProblem, KESolution};
use conekahler::surface::{gauss_curvature, GridFunction, SurfaceSpec};

use super::{RunContext, RunError};
use crate::config::KeParams;
use crate::plot::Series;
use crate::report::{Comparison, Expectation, Report};

pub fn problem(p: &KeParams, n: usize, steps: Option<usize>) -> Result<KEProblem, RunError> {
    let spec = SurfaceSpec::centered(n, p.beta, p.r0)?;
    let mut prob = KEProblem::new(spec, p.delta);
    prob.lambda = p.lambda;
    prob.schedule = match (steps, &p.schedule) {
        (Some(k), _) => uniform_schedule(k),
        (None, Some(s)) => s.clone(),
        (None, None) => uniform_schedule(p.steps),
    };
    prob.newton_tol = p.newton_tol;
    prob.newton_max_iter = p.newton_max_iter;
    prob.mollifier_scale = p.mollifier_scale;
    prob.eps = p.eps;
    prob.validate()?;
    Ok(prob)
}

fn solve(ctx: &RunContext, p: &KeParams, prob: &KEProblem) -> Result<KESolution, RunError> {
    let dir = ctx.path("checkpoints");
    if p.resume {
        let text = fs::read_to_string(dir.join("manifest.json")).map_err(|e| RunError::Config(format!("cannot resume: {e}")))?;
        let stored: serde_json::Value = serde_json::from_str(&text).map_err(|e| RunError::Config(format!("cannot resume: {e}")))?;
        let ours = serde_json::to_value(prob).map_err(std::io::Error::from)?;
        if stored.get("problem") != Some(&ours) {
            return Err(RunError::Config("checkpoint was written for a different problem".into()));
        }
        return Ok(ke_resume(&dir)?);
    }
    if p.checkpoint {
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        return Ok(ke_solve_checkpointed(prob, &dir)?);
    }
    Ok(ke_solve(prob)?)
}

fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn run(ctx: &RunContext, p: &KeParams, config: serde_json::Value) -> Result<Report, RunError> {
    let mut criteria = vec![5];
    if p.alt_steps.is_some() {
        criteria.push(7);
    }
    let mut report = Report::new("solve-ke", ctx.invocation.clone(), criteria, config);
    report.expectations.push(Expectation::new("median_curvature_defect", 0.35, 0.65));
    report.expectations.push(Expectation::new("area", 0.98, 1.02));
    report.expectations.push(Expectation::new("f_sup", 0.95, 1.05));
    report.expectations.push(Expectation::new("holder_fine", 1.0 / 1.5, 1.5));

    let prob = problem(p, p.n, None)?;
    let sol = solve(ctx, p, &prob)?;
    let d = &sol.diagnostics;
    let spec = sol.omega_ke.spec;

    report.check("accepted_steps", d.accepted_steps as f64, Comparison::AtMost, 20.0);
    report.check("final_path_residual", d.final_path_residual, Comparison::Below, 1e-8);
    report.check("median_curvature_defect", d.median_curvature_defect, Comparison::Below, 0.02);
    report.check("area_defect_rel", d.area_defect, Comparison::Below, 0.02);
    report.check("gauss_bonnet_defect_rel", d.gauss_bonnet_defect.abs() / (std::f64::consts::TAU * (1.0 - p.beta)), Comparison::Below, 0.02);

    let states = &sol.states;
    let c0_slack = states.iter().map(|s| s.monitors.c0.bound + s.monitors.c0.slack - s.monitors.c0.sup_u).fold(f64::INFINITY, f64::min);
    let chernlu = states.iter().map(|s| s.monitors.chernlu.residual).fold(f64::INFINITY, f64::min);
    let equiv = states.iter().map(|s| s.monitors.equivalence.c_lower.max(s.monitors.equivalence.c_upper)).fold(0.0f64, f64::max);
    report.check("c0_min_slack", c0_slack, Comparison::AtLeast, 0.0);
    report.check_flag("c0_holds", states.iter().all(|s| s.monitors.c0.holds));
    report.check("chern_lu_min_residual", chernlu, Comparison::AtLeast, -1e-3);
    report.check("equivalence_max_constant", equiv, Comparison::Below, 50.0);
    report.check_flag("monitors_finite", states.iter().all(|s| s.monitors.is_finite()));
    let iters: Vec<usize> = states.iter().map(|s| s.newton_iterations()).collect();
    let warm = iters.windows(2).skip(1).map(|w| w[1] as f64 - w[0] as f64).fold(f64::NEG_INFINITY, f64::max);
    if warm.is_finite() {
        report.check("warm_start_iteration_increase", warm, Comparison::AtMost, 2.0);
    }
    let tail = states
        .iter()
        .filter(|s| s.newton_history.len() >= 3)
        .map(|s| {
            let h = &s.newton_history;
            h[h.len() - 1] / h[h.len() - 2]
        })
        .fold(0.0f64, f64::max);
    report.check("newton_tail_ratio", tail, Comparison::Below, 0.1);

    let last = &states.last().unwrap().monitors;
    for (name, v) in [
        ("median_curvature_defect", d.median_curvature_defect),
        ("max_curvature_defect", d.max_curvature_defect),
        ("area", d.area),
        ("f_sup", d.f_sup),
        ("f_identity_residual", d.f_identity_residual),
        ("compatibility_defect", d.compatibility_defect),
        ("ke_residual", d.ke_residual),
        ("final_path_residual", d.final_path_residual),
        ("gauss_bonnet_defect", d.gauss_bonnet_defect),
        ("smoothing_gap", d.smoothing_gap),
        ("start_ricci_residual", d.start_ricci_residual),
        ("f0_second_difference_bound", d.f0_second_difference_bound),
        ("accepted_steps", d.accepted_steps as f64),
        ("holder_fine", last.holder.fine),
        ("holder_coarse", last.holder.coarse),
        ("monitor_a", sol.constants.a),
        ("monitor_c3", sol.constants.c3),
    ] {
        report.quantity(name, v);
    }

    let rows = states.iter().map(|s| {
        let m = &s.monitors;
        vec![s.t, s.newton_iterations() as f64, s.residual, m.c0.sup_u, m.c0.bound, m.chernlu.residual, m.equivalence.c_lower, m.equivalence.c_upper, m.holder.fine, m.holder.coarse]
    });
    ctx.csv(&mut report, "monitors.csv", &["t", "newton_iterations", "residual", "sup_u", "c0_bound", "chern_lu_residual", "c_lower", "c_upper", "holder_fine", "holder_coarse"], rows)?;
    ctx.grid(&mut report, "u.csv", &spec, &sol.u)?;
    ctx.grid(&mut report, "omega_ke_density.csv", &spec, &GridFunction::new(spec.n, sol.omega_ke.density.clone()))?;
    let k = gauss_curvature(&sol.omega_ke);
    ctx.grid(&mut report, "curvature.csv", &spec, &k)?;

    let ts: Vec<(f64, f64, f64, f64)> = states.iter().map(|s| (s.t, s.monitors.c0.sup_u, s.monitors.c0.bound, s.monitors.chernlu.residual)).collect();
    let c0 = [
        Series { name: "sup u", points: ts.iter().map(|r| (r.0, r.1)).collect() },
        Series { name: "bound", points: ts.iter().map(|r| (r.0, r.2)).collect() },
        Series { name: "Chern-Lu residual", points: ts.iter().map(|r| (r.0, r.3)).collect() },
    ];
    ctx.svg(&mut report, "monitors.svg", "A priori monitors along the path", "t", &c0, false)?;
    let (pi, pj) = spec.p;
    let profile: Vec<(f64, f64)> = (0..spec.n)
        .filter(|&i| i != pi)
        .map(|i| {
            let idx = spec.index(i, pj);
            (spec.offset(idx).0, (k.values[idx] + 1.0).abs())
        })
        .collect();
    ctx.svg(&mut report, "curvature_defect.svg", "|K + 1| through the cone point", "x - x_p", &[Series { name: "|K+1|", points: profile }], true)?;

    if p.refine {
        let fine = ke_solve(&problem(p, 2 * p.n, None)?)?;
        let ratio = fine.diagnostics.median_curvature_defect / d.median_curvature_defect;
        report.quantity("refined_median_curvature_defect", fine.diagnostics.median_curvature_defect);
        report.check("refinement_median_defect_ratio_min", ratio, Comparison::AtLeast, 0.35);
        report.check("refinement_median_defect_ratio_max", ratio, Comparison::AtMost, 0.65);
        let hratio = fine.states.last().unwrap().monitors.holder.fine / last.holder.fine;
        report.check("refinement_holder_ratio", hratio.max(1.0 / hratio), Comparison::AtMost, 1.5);
        let fratio = fine.diagnostics.f_sup / d.f_sup;
        report.check("refinement_f_sup_change", (fratio - 1.0).abs(), Comparison::Below, 0.05);
    }
    if let Some(k) = p.alt_steps {
        let alt = ke_solve(&problem(p, p.n, Some(k))?)?;
        report.check("schedule_independence", max_diff(&alt.u, &sol.u), Comparison::Below, 1e-6);
    }
    Ok(report)
}
