//! Acceptance suite: one test per quantitative claim the laboratory is built
//! to reproduce, each printing a single PASS/FAIL line.
//!
//! Run with:
//!   cargo test --test acceptance -- --test-threads=1 --nocapture
//!
//! The heavy solves (criteria 5-8, 11) share cached runs; the whole suite is
//! sized for a desk machine.

mod common;

use driftfb::barrier::{barrier_sign_report, threshold_scan, BandSign, BarrierDomain};
use driftfb::free_boundary::{nondegeneracy_check, sum_rule_pairs, NondegeneracyVerdict};
use driftfb::grid::{Field, Grid};
use driftfb::kernel::{chi, defining_integral, gamma_exponent, normalization_constant, KernelSpec};
use driftfb::obstacle::{Obstacle, ProblemSpec};
use driftfb::operator::{consistency_report, DiscreteOperator, DriftScheme};
use driftfb::profile::{
    drifted_power_coefficient, half_laplacian_power_oracle, power_multiplier, solve_exponent_root,
};
use driftfb::scenario::{run_solve_pipeline, SolveOutcome};
use driftfb::solver::{a_priori_checks, solve, SolverParams};
use driftfb::util::SplitMix64;
use std::sync::OnceLock;
use std::time::Instant;

fn verdict(number: usize, name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "ACCEPTANCE {number:2} ({name}): {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn fractional_1d() -> KernelSpec {
    KernelSpec::fractional(1).unwrap()
}

/// Solver settings for the acceptance solves.
fn acceptance_params() -> SolverParams {
    SolverParams {
        omega: 1.8,
        tol: 1e-10,
        ..SolverParams::default_for_dimension(1)
    }
}

/// Cached 1-D dichotomy runs: smooth bump (a = 1, rho = 1), h = 2^-10, R = 8,
/// drifts 0 and 1. Shared by criteria 5, 7, 8.
fn dichotomy_runs() -> &'static Vec<(f64, SolveOutcome)> {
    static RUNS: OnceLock<Vec<(f64, SolveOutcome)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        [0.0, 1.0]
            .iter()
            .map(|&b| {
                let grid = Grid::new(1, 2f64.powi(-10), 8.0).unwrap();
                let problem = ProblemSpec::new(
                    grid,
                    fractional_1d(),
                    vec![b],
                    Obstacle::bump(1.0, 1.0, vec![0.0]),
                )
                .unwrap();
                let outcome =
                    run_solve_pipeline(&problem, &acceptance_params(), true, 8).unwrap();
                (b, outcome)
            })
            .collect()
    })
}

#[test]
fn acceptance_01_closed_form_consistency() {
    let t0 = Instant::now();
    let mut worst_root = 0.0f64;
    let mut worst_mult = 0.0f64;
    for i in 0..=100 {
        let b = -10.0 + 0.2 * i as f64;
        let gamma = gamma_exponent(b).unwrap();
        let root = solve_exponent_root(b).unwrap();
        worst_root = worst_root.max((gamma - root).abs());
        worst_mult = worst_mult.max(power_multiplier(gamma, b).unwrap().multiplier.abs());
    }
    let pass = worst_root <= 1e-10 && worst_mult <= 1e-12;
    let ok = verdict(
        1,
        "closed-form consistency",
        pass,
        &format!(
            "|root - gamma| <= {worst_root:.2e} over 101 drifts, |c(gamma(b), b)| <= {worst_mult:.2e} ({:.2}s)",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_02_oracle_identity() {
    let t0 = Instant::now();
    // Stated target: beta cos(beta pi) x^{beta-1} at 1e-7 relative. The
    // principal-value quadrature reproduces beta cot(beta pi) x^{beta-1}
    // instead (the stated magnitude misses the 1/sin(beta pi) normalization
    // of the power identity; the two agree only at beta = 1/2). The companion
    // check pins the oracle to the correct identity at the same tolerance, so
    // a failure here isolates the stated target, not the oracle.
    let mut worst_stated = 0.0f64;
    let mut worst_exact = 0.0f64;
    let mut stated_witness = String::new();
    for &beta in &[0.25, 0.5, 0.75] {
        for &x in &[0.5, 1.0, 2.0, 4.0] {
            let oracle = half_laplacian_power_oracle(beta, x, 1e-9).unwrap().value;
            let stated = beta * (beta * std::f64::consts::PI).cos() * x.powf(beta - 1.0);
            let exact = drifted_power_coefficient(beta, 0.0).unwrap() * x.powf(beta - 1.0);
            let rel_stated = (oracle - stated).abs() / stated.abs().max(1.0);
            let rel_exact = (oracle - exact).abs() / exact.abs().max(1.0);
            if rel_stated > worst_stated {
                worst_stated = rel_stated;
                stated_witness = format!("beta={beta}, x={x}: oracle {oracle:.9} vs stated {stated:.9}");
            }
            worst_exact = worst_exact.max(rel_exact);
        }
    }
    let stated_ok = worst_stated <= 1e-7;
    let exact_ok = worst_exact <= 1e-7;
    let ok = verdict(
        2,
        "oracle identity",
        stated_ok,
        &format!(
            "stated target beta*cos(beta*pi)*x^(beta-1): worst rel dev {worst_stated:.3e} ({stated_witness}); \
             companion beta*cot(beta*pi)*x^(beta-1): worst rel dev {worst_exact:.3e} ({}) ({:.2}s)",
            if exact_ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(exact_ok, "the oracle itself must match the exact identity");
    assert!(
        ok,
        "stated oracle target not met: the power identity carries a 1/sin(beta*pi) factor \
         relative to beta*cos(beta*pi) away from beta = 1/2"
    );
}

#[test]
fn acceptance_03_chi_normalization() {
    let t0 = Instant::now();
    let mut worst_unity = 0.0f64;
    let mut rng = SplitMix64::new(2026);
    for dim in [1usize, 2] {
        let kernel = KernelSpec::fractional(dim).unwrap();
        for _ in 0..16 {
            let e = rng.unit_vector(dim);
            let c = chi(&kernel, &e).unwrap();
            worst_unity = worst_unity.max((c.value - 1.0).abs());
        }
    }
    let c1 = normalization_constant(1).unwrap();
    let by_quadrature = 1.0 / defining_integral(1, 1e-11).unwrap();
    let norm_dev = (c1 - by_quadrature).abs();
    let pi_dev = (c1 - 1.0 / std::f64::consts::PI).abs();
    let pass = worst_unity <= 1e-8 && norm_dev <= 1e-10 && pi_dev <= 1e-10;
    let ok = verdict(
        3,
        "chi normalization",
        pass,
        &format!(
            "|chi - 1| <= {worst_unity:.2e} over 16 random directions in n = 1, 2; \
             c_(1,1/2) vs adaptive quadrature: {norm_dev:.2e}, vs 1/pi: {pi_dev:.2e} ({:.2}s)",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_04_operator_consistency() {
    let t0 = Instant::now();
    let mut worst_rel = 0.0f64;
    let mut all_decreasing = true;
    let mut details = Vec::new();
    for &b in &[0.0, 0.5, 1.0] {
        let beta = gamma_exponent(b).unwrap();
        let grid = Grid::new(1, 2f64.powi(-10), 8.0).unwrap();
        let op = DiscreteOperator::build(grid, fractional_1d(), vec![b], DriftScheme::Upwind)
            .unwrap();
        let rep = consistency_report(&op, beta, b, (0.25, 1.0), 2).unwrap();
        worst_rel = worst_rel.max(rep.max_rel_error);
        all_decreasing &= rep.refinement[1].1 < rep.refinement[0].1;
        details.push(format!(
            "b={b}: rel {:.2e}, abs {:.2e} -> {:.2e}",
            rep.max_rel_error, rep.refinement[0].1, rep.refinement[1].1
        ));
    }
    let pass = worst_rel <= 5e-2 && all_decreasing;
    let ok = verdict(
        4,
        "operator consistency",
        pass,
        &format!("{} ({:.1}s)", details.join("; "), t0.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_05_dichotomy_1d() {
    let t0 = Instant::now();
    let runs = dichotomy_runs();
    let mut pass = true;
    let mut details = Vec::new();
    for (b, outcome) in runs.iter() {
        let mut left = f64::NAN;
        let mut right = f64::NAN;
        for p in &outcome.points {
            if p.normal[0] < 0.0 {
                left = p.fitted_exponent;
            } else {
                right = p.fitted_exponent;
            }
        }
        let (target_left, target_right, tol) = if *b == 0.0 {
            (1.5, 1.5, 0.03)
        } else {
            // nu = -1 side has gamma(-b), nu = +1 side gamma(+b)
            (1.0 + gamma_exponent(-b).unwrap(), 1.0 + gamma_exponent(*b).unwrap(), 0.05)
        };
        let sum = sum_rule_pairs(&outcome.points)
            .first()
            .map(|(_, _, s)| *s)
            .unwrap_or(f64::NAN);
        let ok_b = (left - target_left).abs() <= tol
            && (right - target_right).abs() <= tol
            && (sum - 1.0).abs() <= 0.08;
        pass &= ok_b;
        details.push(format!(
            "b={b}: left {left:.4} (target {target_left:.4}), right {right:.4} (target {target_right:.4}), sum {sum:.4}"
        ));
    }
    let ok = verdict(
        5,
        "exponent dichotomy 1-D",
        pass,
        &format!("{} ({:.1}s)", details.join("; "), t0.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_06_anisotropy_2d() {
    let t0 = Instant::now();
    let grid = Grid::new(2, 2f64.powi(-7), 4.0).unwrap();
    let kernel = KernelSpec::fractional(2).unwrap();
    let problem = ProblemSpec::new(
        grid,
        kernel,
        vec![0.5, 0.0],
        Obstacle::bump(1.0, 1.0, vec![0.0, 0.0]),
    )
    .unwrap();
    let params = SolverParams {
        omega: 1.8,
        tol: 1e-10,
        ..SolverParams::default_for_dimension(2)
    };
    let outcome = run_solve_pipeline(&problem, &params, true, 8).unwrap();
    let fitted: Vec<&driftfb::free_boundary::FreeBoundaryPoint> = outcome
        .points
        .iter()
        .filter(|p| p.fitted_exponent.is_finite() && p.predicted_exponent.is_finite())
        .collect();
    let worst = fitted
        .iter()
        .map(|p| p.deviation.abs())
        .fold(0.0f64, f64::max);
    let pass = fitted.len() >= 12 && worst <= 0.10 && outcome.solution.converged;
    let ok = verdict(
        6,
        "anisotropy 2-D",
        pass,
        &format!(
            "{} sampled normals, worst |fitted - (1 + gamma(0.5 cos theta))| = {worst:.4}, \
             residual {:.2e}, {} sweeps ({:.0}s)",
            fitted.len(),
            outcome.solution.complementarity_residual,
            outcome.solution.iterations,
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_07_solver_properties() {
    let t0 = Instant::now();
    // properties on the cached acceptance runs
    let mut worst_violation = 0.0f64;
    let mut worst_residual = 0.0f64;
    for (_, outcome) in dichotomy_runs() {
        let phi = outcome.problem.obstacle_field();
        for (u, p) in outcome.solution.u.values.iter().zip(&phi.values) {
            worst_violation = worst_violation.max(p - u);
        }
        worst_residual = worst_residual.max(outcome.solution.complementarity_residual);
    }

    // coarse-grid contact mask against the direct active-set oracle
    let grid = Grid::new(1, 2f64.powi(-5), 8.0).unwrap();
    let problem = ProblemSpec::new(
        grid,
        fractional_1d(),
        vec![0.5],
        Obstacle::bump(1.0, 1.0, vec![0.0]),
    )
    .unwrap();
    let op = DiscreteOperator::build(grid, fractional_1d(), vec![0.5], DriftScheme::Upwind)
        .unwrap();
    let sol = solve(&problem, &op, &acceptance_params()).unwrap();
    let phi = problem.obstacle_field();
    let (_, oracle_mask) = common::dense_lcp_active_set(&op, &phi);
    let mask_agrees = sol.contact_mask == oracle_mask;
    let differing = sol
        .contact_mask
        .iter()
        .zip(&oracle_mask)
        .filter(|(a, b)| a != b)
        .count();

    let pass = worst_violation <= 1e-12 && worst_residual <= 1e-10 && mask_agrees;
    let ok = verdict(
        7,
        "solver properties",
        pass,
        &format!(
            "max(phi - u) = {worst_violation:.2e}, worst residual {worst_residual:.2e}, \
             PSOR vs active-set oracle: {} differing node(s) of {} ({:.1}s)",
            differing,
            oracle_mask.len(),
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_08_apriori_bounds() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (b, outcome) in dichotomy_runs() {
        let rep = a_priori_checks(&outcome.solution, &outcome.problem);
        pass &= rep.linf_ok && rep.lip_ok && rep.semiconvex_ok;
        details.push(format!(
            "b={b}: max u - max phi = {:.2e}, Lip(u)/Lip(phi) = {:.4}, min D2 u = {:.3} >= -(1+slack)|phi|C11 = {:.3}",
            rep.max_u - rep.max_phi,
            rep.lip_u / rep.lip_phi,
            rep.min_second_difference,
            -(1.05 * rep.phi_c11)
        ));
    }
    let ok = verdict(
        8,
        "a-priori bounds",
        pass,
        &format!("{} ({:.1}s)", details.join("; "), t0.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_09_nondegeneracy() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for &b in &[0.0, 1.0, 2.0] {
        let grid = Grid::new(1, 2f64.powi(-9), 8.0).unwrap();
        let problem = ProblemSpec::new(
            grid,
            fractional_1d(),
            vec![b],
            Obstacle::ConcaveCore {
                height: 1.0,
                curvature: 1.0,
                center: vec![0.0],
            },
        )
        .unwrap();
        let outcome = run_solve_pipeline(&problem, &acceptance_params(), true, 8).unwrap();
        let verdicts =
            nondegeneracy_check(&outcome.solution, &outcome.problem, &outcome.points).unwrap();
        let mut min_ratio_all = f64::INFINITY;
        let mut max_fit = f64::NEG_INFINITY;
        let mut ok_b = !verdicts.is_empty();
        for v in &verdicts {
            match v {
                NondegeneracyVerdict::Pass {
                    min_ratio,
                    fitted_exponent,
                } => {
                    min_ratio_all = min_ratio_all.min(*min_ratio);
                    max_fit = max_fit.max(*fitted_exponent);
                }
                _ => ok_b = false,
            }
        }
        pass &= ok_b && max_fit <= 2.05;
        details.push(format!(
            "b={b}: min d_r/r^2 = {min_ratio_all:.3e}, max fitted = {max_fit:.3}"
        ));
    }
    let ok = verdict(
        9,
        "nondegeneracy",
        pass,
        &format!("{} ({:.1}s)", details.join("; "), t0.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_10_barrier_thresholds() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();

    // 1-D: five drifts, threshold within 0.02
    let kappas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    for &b in &[-2.0, -1.0, 0.0, 1.0, 2.0] {
        let grid = Grid::new(1, 2f64.powi(-8), 8.0).unwrap();
        let op = DiscreteOperator::build(grid, fractional_1d(), vec![b], DriftScheme::Upwind)
            .unwrap();
        let domain = BarrierDomain::half_space(vec![1.0], 0.5).unwrap();
        let found = threshold_scan(&op, &domain, &kappas).unwrap();
        let expected = gamma_exponent(b).unwrap();
        let ok_b = (found - expected).abs() <= 0.02;
        pass &= ok_b;
        details.push(format!("1-D b={b}: {found:.3} vs {expected:.3}"));
    }

    // band decay rate in a clear zone
    {
        let grid = Grid::new(1, 2f64.powi(-8), 8.0).unwrap();
        let op = DiscreteOperator::build(grid, fractional_1d(), vec![0.0], DriftScheme::Upwind)
            .unwrap();
        let domain = BarrierDomain::half_space(vec![1.0], 0.5).unwrap();
        let rep = barrier_sign_report(&op, &domain, 0.3).unwrap();
        let ok_rate =
            rep.band_sign == BandSign::Positive && (rep.decay_slope - (0.3 - 1.0)).abs() <= 0.1;
        pass &= ok_rate;
        details.push(format!("decay slope {:.3} vs {:.3}", rep.decay_slope, -0.7));
    }

    // one rotated 2-D case: nu = (0.6, 0.8), b = (1, 0), threshold gamma(0.6)
    {
        let grid = Grid::new(2, 2f64.powi(-6), 4.0).unwrap();
        let kernel = KernelSpec::fractional(2).unwrap();
        let op =
            DiscreteOperator::build(grid, kernel, vec![1.0, 0.0], DriftScheme::Upwind).unwrap();
        let domain = BarrierDomain::half_space(vec![0.6, 0.8], 0.5).unwrap();
        let found = threshold_scan(&op, &domain, &kappas).unwrap();
        let expected = gamma_exponent(0.6).unwrap();
        let ok_2d = (found - expected).abs() <= 0.03;
        pass &= ok_2d;
        details.push(format!("2-D rotated: {found:.3} vs {expected:.3}"));
    }

    let ok = verdict(
        10,
        "barrier thresholds",
        pass,
        &format!("{} ({:.0}s)", details.join("; "), t0.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_11_regularity_budget() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for &b in &[0.0, 1.0] {
        let theta = gamma_exponent(-b.abs()).unwrap() - 0.05; // gamma_b - 0.05
        let mut seminorms = Vec::new();
        for exp in [-8, -9] {
            let grid = Grid::new(1, 2f64.powi(exp), 8.0).unwrap();
            let problem = ProblemSpec::new(
                grid,
                fractional_1d(),
                vec![b],
                Obstacle::bump(1.0, 1.0, vec![0.0]),
            )
            .unwrap();
            let outcome = run_solve_pipeline(&problem, &acceptance_params(), true, 8).unwrap();
            seminorms.push(driftfb::free_boundary::regularity_budget(
                &outcome.solution,
                &problem,
                theta,
            ));
        }
        let ratio = seminorms[1] / seminorms[0];
        let ok_b = ratio <= 1.5;
        pass &= ok_b;
        details.push(format!(
            "b={b}, theta={theta:.2}: {:.4e} -> {:.4e} (ratio {ratio:.3})",
            seminorms[0], seminorms[1]
        ));
    }
    let ok = verdict(
        11,
        "regularity budget",
        pass,
        &format!("{} ({:.0}s)", details.join("; "), t0.elapsed().as_secs_f64()),
    );
    assert!(ok);
}

/// Planted-violation detector: a synthetic cubic profile must trip the
/// nondegeneracy check (sensitivity control for criterion 9).
#[test]
fn acceptance_09b_nondegeneracy_detector_sensitivity() {
    let grid = Grid::new(1, 2f64.powi(-9), 8.0).unwrap();
    let gap = Field::from_fn(grid, |x| x[0].abs().powi(3));
    let fit = driftfb::free_boundary::fit_growth_exponent(
        &gap,
        &[0.0],
        driftfb::free_boundary::FitWindow {
            r_min: 8.0 * grid.spacing,
            r_max: 0.5,
        },
    )
    .unwrap();
    assert!(
        fit.exponent > 2.05,
        "planted r^3 profile must exceed the quadratic-growth gate, got {}",
        fit.exponent
    );
}
