//! Config-driven experiment scenarios behind the `driftfb` CLI.
//!
//! Each scenario is a deterministic pipeline from an [`ExperimentConfig`] to
//! CSV/JSON artifacts plus an in-memory [`RunReport`] with named pass/fail
//! verdicts. Sweep members run on a small thread pool (each member owns its
//! solver instance); results merge in sweep order.

use crate::barrier::{barrier_sign_report, threshold_scan, BandSign, BarrierDomain};
use crate::config::{ExperimentConfig, Scenario, MAX_NODES};
use crate::error::{Error, Result};
use crate::free_boundary::{
    self, analyze_with, nondegeneracy_check, sum_rule_pairs, FreeBoundaryPoint,
    NondegeneracyVerdict, PointClass,
};
use crate::grid::Grid;
use crate::kernel::{
    chi, defining_integral, gamma_exponent, min_gamma, normalization_constant, tilde_gamma,
    AngularDensity,
};
use crate::obstacle::{Obstacle, ProblemSpec};
use crate::operator::{DiscreteOperator, DriftScheme};
use crate::profile::{
    drifted_power_coefficient, extension_identity_check, half_laplacian_power_oracle,
    power_multiplier, solve_exponent_root,
};
use crate::report::{fmt_f64, write_csv, write_manifest, RunReport, Verdict};
use crate::solver::{a_priori_checks, residuals, solve, InitialGuess, SolutionField, SolverParams};
use crate::svg;
use crate::util::{dot, norm, SplitMix64};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Outcome of one solve+analysis pipeline (shared by `solve`, `sweep-drift`
/// and `convergence`).
pub struct SolveOutcome {
    pub problem: ProblemSpec,
    pub operator: DiscreteOperator,
    pub solution: SolutionField,
    pub points: Vec<FreeBoundaryPoint>,
}

/// Coarse-to-fine continuation: solve on `4h` and `2h` grids first (when the
/// axis node count allows halving) and warm-start each finer level.
pub fn solve_with_continuation(
    problem: &ProblemSpec,
    params: &SolverParams,
    continuation: bool,
) -> Result<(DiscreteOperator, SolutionField)> {
    let grid = problem.grid;
    let mut spacings = vec![grid.spacing];
    if continuation {
        let mut m = (grid.half_extent / grid.spacing).round() as usize;
        let mut h = grid.spacing;
        while spacings.len() < 3 && m % 2 == 0 && m / 2 >= 16 {
            m /= 2;
            h *= 2.0;
            spacings.push(h);
        }
    }
    spacings.reverse();

    let mut warm: Option<crate::grid::Field> = None;
    let mut last: Option<(DiscreteOperator, SolutionField)> = None;
    for (level, &h) in spacings.iter().enumerate() {
        let level_grid = Grid::new(grid.dimension, h, grid.half_extent)?;
        let level_problem = ProblemSpec::new(
            level_grid,
            problem.kernel.clone(),
            problem.drift.clone(),
            problem.obstacle.clone(),
        )?;
        let op = DiscreteOperator::build(
            level_grid,
            problem.kernel.clone(),
            problem.drift.clone(),
            DriftScheme::Upwind,
        )?;
        let is_final = level + 1 == spacings.len();
        let mut level_params = params.clone();
        if !is_final {
            // coarse levels only need to seed the next grid
            level_params.tol = (params.tol * 1e4).min(1e-6);
        }
        level_params.initial_guess = match warm.take() {
            Some(w) => InitialGuess::Warm(w),
            None => params.initial_guess.clone(),
        };
        let solution = solve(&level_problem, &op, &level_params)?;
        if !is_final {
            warm = Some(solution.u.prolong()?);
            last = Some((op, solution));
        } else {
            return Ok((op, solution));
        }
    }
    // unreachable in practice: the final level always returns above
    last.ok_or_else(|| Error::Analysis("continuation produced no levels".into()))
}

/// Solve + free-boundary analysis for one problem instance.
pub fn run_solve_pipeline(
    problem: &ProblemSpec,
    params: &SolverParams,
    continuation: bool,
    fit_r_min_cells: usize,
) -> Result<SolveOutcome> {
    let (operator, solution) = solve_with_continuation(problem, params, continuation)?;
    let points = if solution.contact_mask.iter().any(|&c| c) {
        let mut pts = analyze_with(&solution, problem, fit_r_min_cells)?;
        if problem.grid.dimension == 2 {
            pts = subsample_by_angle(pts, problem.obstacle.center(), 64);
        }
        pts
    } else {
        Vec::new()
    };
    Ok(SolveOutcome {
        problem: problem.clone(),
        operator,
        solution,
        points,
    })
}

/// Keeps at most `max_count` points, spread evenly in polar angle around the
/// obstacle center (2-D boundary cells arrive densely along the contour).
fn subsample_by_angle(
    mut points: Vec<FreeBoundaryPoint>,
    center: &[f64],
    max_count: usize,
) -> Vec<FreeBoundaryPoint> {
    if points.len() <= max_count || center.len() != 2 {
        return points;
    }
    points.sort_by(|a, b| {
        let ta = (a.location[1] - center[1]).atan2(a.location[0] - center[0]);
        let tb = (b.location[1] - center[1]).atan2(b.location[0] - center[0]);
        ta.partial_cmp(&tb).unwrap()
    });
    let stride = points.len() as f64 / max_count as f64;
    (0..max_count)
        .map(|i| points[(i as f64 * stride) as usize].clone())
        .collect()
}

/// Entry point used by the CLI: dispatches on the configured scenario,
/// writes artifacts into `out_dir`, and returns the report.
pub fn run_scenario(cfg: &ExperimentConfig, out_dir: &Path, plots: bool) -> Result<RunReport> {
    std::fs::create_dir_all(out_dir)?;
    let mut report = match cfg.scenario {
        Scenario::Solve => scenario_solve(cfg, out_dir, plots)?,
        Scenario::SweepDrift => scenario_sweep(cfg, out_dir, plots)?,
        Scenario::VerifyIdentity => scenario_identity(cfg, out_dir)?,
        Scenario::Chi => scenario_chi(cfg, out_dir)?,
        Scenario::Barrier => scenario_barrier(cfg, out_dir)?,
        Scenario::Convergence => scenario_convergence(cfg, out_dir)?,
    };
    write_manifest(out_dir, &report, &cfg.raw)?;
    report.artifacts.push("manifest.json".into());
    Ok(report)
}

fn scenario_solve(cfg: &ExperimentConfig, out_dir: &Path, plots: bool) -> Result<RunReport> {
    let mut report = RunReport::new("solve");
    let grid = cfg.grid()?;
    let problem = ProblemSpec::new(grid, cfg.kernel.clone(), cfg.drift.clone(), cfg.obstacle.clone())?;

    let t0 = Instant::now();
    let outcome = run_solve_pipeline(&problem, &cfg.solver, cfg.continuation, cfg.fit_r_min_cells)?;
    report.timings.push(("solve+analyze".into(), t0.elapsed().as_secs_f64()));

    write_solution_csv(out_dir, &outcome)?;
    write_fb_csv(out_dir, &outcome.points)?;
    report.artifacts.push("solution.csv".into());
    report.artifacts.push("free_boundary.csv".into());

    append_solve_verdicts(&mut report, cfg, &outcome)?;

    if plots {
        let phi = outcome.problem.obstacle_field();
        if grid.dimension == 1 {
            svg::plot_profile(
                &out_dir.join("profile.svg"),
                &outcome.solution.u,
                &phi,
                &outcome.solution.contact_mask,
            )?;
            report.artifacts.push("profile.svg".into());
        } else {
            svg::plot_contact_map(
                &out_dir.join("contact_map.svg"),
                grid,
                &outcome.solution.contact_mask,
            )?;
            report.artifacts.push("contact_map.svg".into());
        }
        if let Some(p) = outcome.points.first() {
            if p.fitted_exponent.is_finite() {
                let gap = outcome.solution.gap(&outcome.problem);
                if let Ok(fit) = free_boundary::fit_growth_exponent(
                    &gap,
                    &p.location,
                    free_boundary::FitWindow {
                        r_min: p.fit_window.0,
                        r_max: p.fit_window.1,
                    },
                ) {
                    svg::plot_loglog(&out_dir.join("fit.svg"), &fit.samples, fit.exponent, fit.c0)?;
                    report.artifacts.push("fit.svg".into());
                }
            }
        }
    }
    Ok(report)
}

fn append_solve_verdicts(
    report: &mut RunReport,
    cfg: &ExperimentConfig,
    outcome: &SolveOutcome,
) -> Result<()> {
    let solution = &outcome.solution;
    let problem = &outcome.problem;

    report.solver_converged &= solution.converged;
    report.push(Verdict::new(
        "solver-converged",
        solution.converged,
        format!(
            "residual {:.3e} after {} sweeps (tol {:.1e})",
            solution.complementarity_residual, solution.iterations, cfg.solver.tol
        ),
    ));
    report.note("iterations", json!(solution.iterations));
    report.note(
        "complementarity_residual",
        json!(solution.complementarity_residual),
    );

    let res = residuals(solution, &outcome.operator, problem)?;
    report.push(Verdict::new(
        "obstacle-bound",
        res.max_obstacle_violation <= 1e-12,
        format!("max(phi - u) = {:.3e}", res.max_obstacle_violation),
    ));
    report.push(Verdict::new(
        "complementarity-residual",
        solution.complementarity_residual <= cfg.solver.tol || !solution.converged,
        format!("{:.3e}", solution.complementarity_residual),
    ));

    let apriori = a_priori_checks(solution, problem);
    report.push(Verdict::new(
        "apriori-linf",
        apriori.linf_ok,
        format!("max u = {:.6e}, max phi = {:.6e}", apriori.max_u, apriori.max_phi),
    ));
    report.push(Verdict::new(
        "apriori-lipschitz",
        apriori.lip_ok,
        format!("Lip(u) = {:.6e}, Lip(phi) = {:.6e}", apriori.lip_u, apriori.lip_phi),
    ));
    report.push(Verdict::new(
        "apriori-semiconvexity",
        apriori.semiconvex_ok,
        format!(
            "min D2 u = {:.6e}, |phi|_C11 = {:.6e}",
            apriori.min_second_difference, apriori.phi_c11
        ),
    ));
    report.note("apriori", serde_json::to_value(&apriori).unwrap());

    if matches!(problem.obstacle, Obstacle::None) || outcome.points.is_empty() {
        report.push(Verdict::new(
            "free-boundary",
            !solution.contact_mask.iter().any(|&c| c),
            "no positive obstacle region: u = 0, zero free-boundary points",
        ));
        return Ok(());
    }

    let regular: Vec<&FreeBoundaryPoint> = outcome
        .points
        .iter()
        .filter(|p| p.classification == PointClass::Regular)
        .collect();
    let worst_dev = regular
        .iter()
        .map(|p| p.deviation.abs())
        .fold(0.0f64, f64::max);
    report.push(Verdict::new(
        "exponent-deviation",
        !regular.is_empty() && worst_dev <= cfg.fit_tolerance,
        format!(
            "{} regular points, worst |fitted - predicted| = {:.4} (tol {})",
            regular.len(),
            worst_dev,
            cfg.fit_tolerance
        ),
    ));

    let pairs = sum_rule_pairs(&outcome.points);
    if !pairs.is_empty() {
        let worst = pairs
            .iter()
            .map(|(_, _, s)| (s - 1.0).abs())
            .fold(0.0f64, f64::max);
        report.push(Verdict::new(
            "sum-rule",
            worst <= cfg.sum_rule_tolerance,
            format!("worst |sum - 1| = {:.4} over {} pair(s)", worst, pairs.len()),
        ));
    }

    if matches!(problem.obstacle, Obstacle::ConcaveCore { .. }) {
        let verdicts = nondegeneracy_check(solution, problem, &outcome.points)?;
        let all_pass = verdicts
            .iter()
            .all(|v| matches!(v, NondegeneracyVerdict::Pass { .. }));
        let detail = verdicts
            .iter()
            .map(|v| match v {
                NondegeneracyVerdict::Pass { min_ratio, .. } => format!("pass({min_ratio:.3e})"),
                NondegeneracyVerdict::Fail { reason, .. } => format!("FAIL({reason})"),
                NondegeneracyVerdict::HypothesisNotMet => "hypothesis-not-met".into(),
            })
            .collect::<Vec<_>>()
            .join(", ");
        report.push(Verdict::new("nondegeneracy", all_pass, detail));
    }

    report.note(
        "free_boundary_points",
        serde_json::to_value(&outcome.points).unwrap(),
    );
    Ok(())
}

fn write_solution_csv(out_dir: &Path, outcome: &SolveOutcome) -> Result<()> {
    let grid = outcome.problem.grid;
    let phi = outcome.problem.obstacle_field();
    let mut rows = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        let pos = grid.position(i);
        let mut row: Vec<String> = pos.iter().map(|c| fmt_f64(*c)).collect();
        row.push(fmt_f64(phi.values[i]));
        row.push(fmt_f64(outcome.solution.u.values[i]));
        row.push(if outcome.solution.contact_mask[i] { "1" } else { "0" }.into());
        rows.push(row);
    }
    let header: &[&str] = if grid.dimension == 1 {
        &["x", "phi", "u", "contact"]
    } else {
        &["x", "y", "phi", "u", "contact"]
    };
    write_csv(&out_dir.join("solution.csv"), header, &rows)
}

fn write_fb_csv(out_dir: &Path, points: &[FreeBoundaryPoint]) -> Result<()> {
    let mut rows = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let dim2 = p.location.len() == 2;
        let mut row = vec![k.to_string(), fmt_f64(p.location[0])];
        if dim2 {
            row.push(fmt_f64(p.location[1]));
        }
        row.push(fmt_f64(p.normal[0]));
        if dim2 {
            row.push(fmt_f64(p.normal[1]));
        }
        row.extend([
            fmt_f64(p.fitted_exponent),
            fmt_f64(p.fitted_c0),
            fmt_f64(p.fit_quality),
            fmt_f64(p.predicted_exponent),
            fmt_f64(p.deviation),
            match p.classification {
                PointClass::Regular => "regular".into(),
                PointClass::DegenerateSuspect => "degenerate-suspect".into(),
                PointClass::Unfitted => "unfitted".into(),
            },
        ]);
        rows.push(row);
    }
    let header: &[&str] = if points.first().map_or(1, |p| p.location.len()) == 2 {
        &[
            "point_id",
            "x",
            "y",
            "nu_x",
            "nu_y",
            "fitted_exponent",
            "fitted_c0",
            "r2",
            "predicted_exponent",
            "deviation",
            "classification",
        ]
    } else {
        &[
            "point_id",
            "x",
            "nu_x",
            "fitted_exponent",
            "fitted_c0",
            "r2",
            "predicted_exponent",
            "deviation",
            "classification",
        ]
    };
    write_csv(&out_dir.join("free_boundary.csv"), header, &rows)
}

fn scenario_sweep(cfg: &ExperimentConfig, out_dir: &Path, plots: bool) -> Result<RunReport> {
    let mut report = RunReport::new("sweep-drift");
    if cfg.dimension != 1 {
        return Err(Error::Config("sweep-drift is a 1-D scenario".into()));
    }
    if cfg.drift_values.is_empty() {
        return Err(Error::Config("sweep-drift needs drift.values".into()));
    }

    let t0 = Instant::now();
    let members: Vec<(usize, f64)> = cfg.drift_values.iter().copied().enumerate().collect();
    let workers = cfg.workers.max(1).min(members.len());
    let results: Vec<Option<Result<SolveOutcome>>> = {
        let mut slots: Vec<Option<Result<SolveOutcome>>> = Vec::new();
        slots.resize_with(members.len(), || None);
        let slots = std::sync::Mutex::new(slots);
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if k >= members.len() {
                        break;
                    }
                    let (_, b) = members[k];
                    let run = (|| -> Result<SolveOutcome> {
                        let grid = cfg.grid()?;
                        let problem = ProblemSpec::new(
                            grid,
                            cfg.kernel.clone(),
                            vec![b],
                            cfg.obstacle.clone(),
                        )?;
                        run_solve_pipeline(
                            &problem,
                            &cfg.solver,
                            cfg.continuation,
                            cfg.fit_r_min_cells,
                        )
                    })();
                    slots.lock().unwrap()[k] = Some(run);
                });
            }
        });
        slots.into_inner().unwrap()
    };
    report
        .timings
        .push(("sweep-members".into(), t0.elapsed().as_secs_f64()));

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut failures = Vec::new();
    let mut side_series: Vec<(f64, Option<f64>, Option<f64>)> = Vec::new();
    for (k, slot) in results.into_iter().enumerate() {
        let b = members[k].1;
        match slot.expect("every member slot filled") {
            Ok(outcome) => {
                report.solver_converged &= outcome.solution.converged;
                let mut left = None;
                let mut right = None;
                for p in &outcome.points {
                    let side = if p.normal[0] < 0.0 { "left" } else { "right" };
                    if p.normal[0] < 0.0 {
                        left = Some(p.fitted_exponent);
                    } else {
                        right = Some(p.fitted_exponent);
                    }
                    rows.push(vec![
                        fmt_f64(b),
                        side.into(),
                        fmt_f64(p.fitted_exponent),
                        fmt_f64(p.predicted_exponent),
                        fmt_f64(p.deviation),
                    ]);
                }
                side_series.push((b, left, right));
                let member_dir = out_dir.join(format!("member_{k}"));
                write_solution_csv(&member_dir, &outcome)?;
                write_fb_csv(&member_dir, &outcome.points)?;
                if plots {
                    let phi = outcome.problem.obstacle_field();
                    svg::plot_profile(
                        &member_dir.join("profile.svg"),
                        &outcome.solution.u,
                        &phi,
                        &outcome.solution.contact_mask,
                    )?;
                }
            }
            Err(e) => failures.push(format!("b = {b}: {e}")),
        }
    }
    write_csv(
        &out_dir.join("sweep.csv"),
        &["b", "side", "fitted", "predicted", "deviation"],
        &rows,
    )?;
    report.artifacts.push("sweep.csv".into());

    report.push(Verdict::new(
        "sweep-members",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} member(s) completed", members.len())
        } else {
            format!("partial failure: {}", failures.join("; "))
        },
    ));

    let worst_dev = rows
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap_or(f64::NAN).abs())
        .fold(0.0f64, f64::max);
    report.push(Verdict::new(
        "sweep-deviation",
        worst_dev <= cfg.fit_tolerance,
        format!("worst |deviation| = {worst_dev:.4} (tol {})", cfg.fit_tolerance),
    ));

    // monotonicity in drift per side: right side grows with b, left side falls
    side_series.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut monotone = true;
    for w in side_series.windows(2) {
        if let (Some(r0), Some(r1)) = (w[0].2, w[1].2) {
            monotone &= r1 >= r0 - 0.02;
        }
        if let (Some(l0), Some(l1)) = (w[0].1, w[1].1) {
            monotone &= l1 <= l0 + 0.02;
        }
    }
    report.push(Verdict::new(
        "sweep-monotonicity",
        monotone,
        "fitted exponents ordered with the drift per side",
    ));
    Ok(report)
}

fn scenario_identity(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut report = RunReport::new("verify-identity");
    let mut rows = Vec::new();
    let mut worst_root = 0.0f64;
    let mut worst_mult_at_root = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut worst_extension = 0.0f64;

    for &b in &cfg.identity_drifts {
        let gamma = gamma_exponent(b)?;
        let root = solve_exponent_root(b)?;
        worst_root = worst_root.max((gamma - root).abs());
        worst_mult_at_root = worst_mult_at_root.max(power_multiplier(gamma, b)?.multiplier.abs());
    }

    for &beta in &cfg.identity_betas {
        let ext = extension_identity_check(beta, 1.0, 10_000)?;
        worst_extension = worst_extension.max(ext);
        for &b in &cfg.identity_drifts {
            let p = power_multiplier(beta, b)?;
            rows.push(vec![
                fmt_f64(beta),
                fmt_f64(b),
                "multiplier".into(),
                fmt_f64(p.multiplier),
                format!("{:?}", p.classification),
            ]);
        }
        for &x in &cfg.identity_xs {
            let oracle = half_laplacian_power_oracle(beta, x, cfg.identity_precision)?;
            let coeff = drifted_power_coefficient(beta, 0.0)? * x.powf(beta - 1.0);
            worst_oracle = worst_oracle.max((oracle.value - coeff).abs());
            rows.push(vec![
                fmt_f64(beta),
                fmt_f64(x),
                "oracle-vs-coefficient".into(),
                fmt_f64(oracle.value),
                fmt_f64(coeff),
            ]);
        }
    }

    write_csv(
        &out_dir.join("identity.csv"),
        &["beta", "b_or_x", "kind", "value", "reference"],
        &rows,
    )?;
    report.artifacts.push("identity.csv".into());

    // discrete-operator consistency on the annihilated profiles
    // (x_+)^{gamma(b)}: enabled by identity.operator_check
    if cfg
        .raw
        .get("identity.operator_check")
        .map(|v| v == "true" || v == "1" || v == "yes")
        .unwrap_or(false)
    {
        let window = cfg
            .raw
            .get("identity.window")
            .map(|s| {
                let parts: Vec<f64> = s
                    .split(',')
                    .filter_map(|p| p.trim().parse().ok())
                    .collect();
                (parts[0], parts[1])
            })
            .unwrap_or((0.25, 1.0));
        let mut worst_rel = 0.0f64;
        let mut all_decreasing = true;
        let mut op_rows = Vec::new();
        for &b in &cfg.identity_drifts {
            let beta = gamma_exponent(b)?;
            let grid = cfg.grid()?;
            let op = DiscreteOperator::build(
                grid,
                cfg.kernel.clone(),
                vec![b],
                DriftScheme::Upwind,
            )?;
            let rep = crate::operator::consistency_report(&op, beta, b, window, 2)?;
            worst_rel = worst_rel.max(rep.max_rel_error);
            all_decreasing &= rep.refinement[1].1 < rep.refinement[0].1;
            op_rows.push(vec![
                fmt_f64(b),
                fmt_f64(beta),
                fmt_f64(rep.max_rel_error),
                fmt_f64(rep.refinement[1].1 / rep.refinement[0].1.max(1e-300)),
                fmt_f64(rep.observed_order),
            ]);
        }
        write_csv(
            &out_dir.join("consistency.csv"),
            &["b", "beta", "max_rel_error", "refinement_ratio", "observed_order"],
            &op_rows,
        )?;
        report.artifacts.push("consistency.csv".into());
        report.push(Verdict::new(
            "operator-consistency",
            worst_rel <= 5e-2 && all_decreasing,
            format!(
                "worst relative error {worst_rel:.3e} on annihilated profiles; errors {} under h -> h/2",
                if all_decreasing { "decrease" } else { "DO NOT decrease" }
            ),
        ));
    }

    report.push(Verdict::new(
        "root-vs-arctan",
        worst_root <= 1e-10,
        format!("worst |root - gamma| = {worst_root:.3e}"),
    ));
    report.push(Verdict::new(
        "multiplier-zero-at-gamma",
        worst_mult_at_root <= 1e-12,
        format!("worst |c(gamma(b), b)| = {worst_mult_at_root:.3e}"),
    ));
    report.push(Verdict::new(
        "oracle-vs-exact-coefficient",
        worst_oracle <= 10.0 * cfg.identity_precision,
        format!(
            "worst |oracle - beta(b + cot(beta pi)) x^(beta-1)| = {worst_oracle:.3e}"
        ),
    ));
    report.push(Verdict::new(
        "extension-identities",
        worst_extension <= 1e-6,
        format!("worst residual = {worst_extension:.3e}"),
    ));
    Ok(report)
}

fn scenario_chi(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut report = RunReport::new("chi");
    let kernel = &cfg.kernel;
    let dim = cfg.dimension;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut rows = Vec::new();

    let unit = crate::kernel::chi_unit(dim)?;
    let mut worst_even = 0.0f64;
    let mut bounds_ok = true;
    let is_fractional = matches!(kernel.density, AngularDensity::Constant(c)
        if (c - normalization_constant(dim)?).abs() < 1e-12);
    let mut worst_unity = 0.0f64;

    for _ in 0..cfg.chi_directions.max(4) {
        let e = rng.unit_vector(dim);
        let me: Vec<f64> = e.iter().map(|c| -c).collect();
        let c_e = chi(kernel, &e)?;
        let c_me = chi(kernel, &me)?;
        worst_even = worst_even.max((c_e.value - c_me.value).abs());
        bounds_ok &= c_e.value >= kernel.lambda_min * unit - 1e-9
            && c_e.value <= kernel.lambda_max * unit + 1e-9;
        if is_fractional {
            worst_unity = worst_unity.max((c_e.value - 1.0).abs());
        }
        rows.push(vec![
            e.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(";"),
            fmt_f64(c_e.value),
            fmt_f64(c_e.quadrature_error),
        ]);
    }
    write_csv(
        &out_dir.join("chi.csv"),
        &["direction", "chi", "quadrature_error"],
        &rows,
    )?;
    report.artifacts.push("chi.csv".into());

    report.push(Verdict::new(
        "chi-evenness",
        worst_even <= 1e-10,
        format!("worst |chi(e) - chi(-e)| = {worst_even:.3e}"),
    ));
    report.push(Verdict::new(
        "chi-ellipticity-sandwich",
        bounds_ok,
        format!("lambda {} <= chi/chi_unit <= Lambda {}", kernel.lambda_min, kernel.lambda_max),
    ));
    if is_fractional {
        report.push(Verdict::new(
            "chi-is-one-for-fractional",
            worst_unity <= 1e-8,
            format!("worst |chi - 1| = {worst_unity:.3e}"),
        ));
    }

    let c_n = normalization_constant(dim)?;
    let defining = defining_integral(dim, 1e-10)?;
    let diff = (c_n - 1.0 / defining).abs();
    report.push(Verdict::new(
        "normalization-cross-check",
        diff <= if dim == 1 { 1e-10 } else { 1e-8 },
        format!("c = {c_n:.12e}, 1/defining-integral = {:.12e}", 1.0 / defining),
    ));
    report.note("normalization_constant", json!(c_n));

    let prediction = min_gamma(kernel, &cfg.drift)?;
    report.note("exponent_prediction", serde_json::to_value(&prediction).unwrap());
    Ok(report)
}

fn scenario_barrier(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut report = RunReport::new("barrier");
    let grid = cfg.grid()?;
    let op = DiscreteOperator::build(grid, cfg.kernel.clone(), cfg.drift.clone(), DriftScheme::Upwind)?;

    let domain = match cfg.barrier.shape.as_str() {
        "half-space" => {
            let mut normal = cfg.barrier.normal.clone();
            let len = norm(&normal);
            if len == 0.0 {
                return Err(Error::Config("barrier.normal must be nonzero".into()));
            }
            normal.iter_mut().for_each(|c| *c /= len);
            BarrierDomain::half_space(normal, cfg.barrier.delta)?
        }
        _ => BarrierDomain::ball(cfg.barrier.center.clone(), cfg.barrier.radius, cfg.barrier.delta)?,
    };

    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut clear_slope_worst = 0.0f64;
    let mut threshold_pred = f64::NAN;
    if let crate::barrier::BarrierShape::HalfSpace { normal } = &domain.shape {
        threshold_pred = tilde_gamma(&cfg.kernel, &cfg.drift, normal)?;
    }
    for &kappa in &cfg.barrier.kappas {
        let rep = barrier_sign_report(&op, &domain, kappa)?;
        if threshold_pred.is_finite()
            && (kappa - threshold_pred).abs() > 0.1
            && rep.band_sign != BandSign::Mixed
        {
            clear_slope_worst = clear_slope_worst.max((rep.decay_slope - (kappa - 1.0)).abs());
        }
        rows.push(vec![
            fmt_f64(kappa),
            format!("{:?}", rep.verdict),
            format!("{:?}", rep.band_sign),
            fmt_f64(rep.min_value),
            fmt_f64(rep.max_value),
            fmt_f64(rep.decay_slope),
            rep.nodes_tested.to_string(),
        ]);
    }
    write_csv(
        &out_dir.join("barrier.csv"),
        &["kappa", "verdict", "band_sign", "min_value", "max_value", "decay_slope", "nodes"],
        &rows,
    )?;
    report.artifacts.push("barrier.csv".into());

    if threshold_pred.is_finite() {
        let found = threshold_scan(&op, &domain, &cfg.barrier.kappas)?;
        let tol = if cfg.dimension == 1 { 0.02 } else { 0.03 };
        report.push(Verdict::new(
            "threshold-vs-prediction",
            (found - threshold_pred).abs() <= tol,
            format!("scan {found:.4} vs gamma(b.nu/chi) = {threshold_pred:.4} (tol {tol})"),
        ));
        report.note("threshold_found", json!(found));
        report.note("threshold_predicted", json!(threshold_pred));
    }
    report.push(Verdict::new(
        "band-decay-rate",
        clear_slope_worst <= 0.1,
        format!("worst |slope - (kappa-1)| = {clear_slope_worst:.3} in clear zones"),
    ));
    report
        .timings
        .push(("barrier-scan".into(), t0.elapsed().as_secs_f64()));
    Ok(report)
}

fn scenario_convergence(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut report = RunReport::new("convergence");
    let levels = cfg.convergence_levels.max(1).min(if cfg.dimension == 1 { 4 } else { 2 });

    // Hoelder budget for the gradient: exponent from the config, defaulting
    // to gamma_minus - 0.05 (the almost-optimal regularity level)
    let theta = match cfg.raw.get("regularity.theta") {
        Some(s) => s
            .parse::<f64>()
            .map_err(|_| Error::Config("regularity.theta: expected a number".into()))?,
        None => (min_gamma(&cfg.kernel, &cfg.drift)?.gamma_minus - 0.05).max(0.05),
    };

    let mut rows = Vec::new();
    let mut fitted_per_level: Vec<(f64, Option<f64>, Option<f64>)> = Vec::new();
    let mut seminorms: Vec<f64> = Vec::new();
    let mut h = cfg.grid_h;
    for level in 0..levels {
        let grid = Grid::new(cfg.dimension, h, cfg.grid_r)
            .map_err(|e| Error::Config(format!("level {level}: {e}")))?;
        if grid.node_count() > MAX_NODES {
            return Err(Error::Config(format!(
                "refinement level {level} exceeds the node budget"
            )));
        }
        let problem = ProblemSpec::new(grid, cfg.kernel.clone(), cfg.drift.clone(), cfg.obstacle.clone())?;
        let outcome = run_solve_pipeline(&problem, &cfg.solver, cfg.continuation, cfg.fit_r_min_cells)?;
        report.solver_converged &= outcome.solution.converged;
        let (mut left, mut right) = (None, None);
        for p in &outcome.points {
            if p.normal[0] < 0.0 {
                left = Some(p.fitted_exponent);
            } else {
                right = Some(p.fitted_exponent);
            }
        }
        fitted_per_level.push((h, left, right));
        let seminorm = free_boundary::regularity_budget(&outcome.solution, &problem, theta);
        seminorms.push(seminorm);
        rows.push(vec![
            fmt_f64(h),
            left.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            right.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            fmt_f64(outcome.solution.complementarity_residual),
            outcome.solution.iterations.to_string(),
            fmt_f64(seminorm),
        ]);
        h /= 2.0;
    }

    // truncation sensitivity: R vs 2R at the coarsest level
    if cfg.convergence_check_r && !matches!(cfg.obstacle, Obstacle::None) {
        let grid2 = Grid::new(cfg.dimension, cfg.grid_h, 2.0 * cfg.grid_r)?;
        if grid2.node_count() <= MAX_NODES {
            let problem2 =
                ProblemSpec::new(grid2, cfg.kernel.clone(), cfg.drift.clone(), cfg.obstacle.clone())?;
            let outcome2 =
                run_solve_pipeline(&problem2, &cfg.solver, cfg.continuation, cfg.fit_r_min_cells)?;
            let (mut left2, mut right2) = (None, None);
            for p in &outcome2.points {
                if p.normal[0] < 0.0 {
                    left2 = Some(p.fitted_exponent);
                } else {
                    right2 = Some(p.fitted_exponent);
                }
            }
            let base = &fitted_per_level[0];
            let drift_r = match (base.2, right2, base.1, left2) {
                (Some(a), Some(b), Some(c), Some(d)) => (a - b).abs().max((c - d).abs()),
                _ => f64::NAN,
            };
            report.push(Verdict::new(
                "truncation-sensitivity",
                drift_r.is_nan() || drift_r <= 0.01,
                format!("fitted change under R -> 2R: {drift_r:.4}"),
            ));
        }
    }

    write_csv(
        &out_dir.join("convergence.csv"),
        &[
            "h",
            "fitted_left",
            "fitted_right",
            "residual",
            "iterations",
            "grad_hoelder_seminorm",
        ],
        &rows,
    )?;
    report.artifacts.push("convergence.csv".into());

    if seminorms.len() >= 2 && !matches!(cfg.obstacle, Obstacle::None) {
        let ratio = seminorms[1] / seminorms[0].max(1e-300);
        report.push(Verdict::new(
            "regularity-budget",
            ratio <= 1.5,
            format!(
                "C^(1,{theta:.2}) seminorm {:.4e} -> {:.4e} under refinement (ratio {ratio:.3})",
                seminorms[0], seminorms[1]
            ),
        ));
        report.note("regularity_theta", json!(theta));
        report.note("regularity_seminorms", json!(seminorms));
    }

    let mut worst_drift = 0.0f64;
    for w in fitted_per_level.windows(2) {
        if let (Some(a), Some(b)) = (w[0].1, w[1].1) {
            worst_drift = worst_drift.max((a - b).abs());
        }
        if let (Some(a), Some(b)) = (w[0].2, w[1].2) {
            worst_drift = worst_drift.max((a - b).abs());
        }
    }
    report.push(Verdict::new(
        "refinement-consistency",
        worst_drift <= 0.03 || matches!(cfg.obstacle, Obstacle::None),
        format!("worst |fitted(h) - fitted(h/2)| = {worst_drift:.4}"),
    ));
    Ok(report)
}

/// Default output directory: `--out`, else `DRIFTFB_OUT`, else `driftfb-out`.
pub fn resolve_out_dir(cli_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or_else(|| std::env::var_os("DRIFTFB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("driftfb-out"))
}

/// `dot` re-exported for the acceptance suite's convenience checks.
pub fn direction_cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}
