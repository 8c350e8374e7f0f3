//! Projected SOR for the discrete complementarity problem
//! `min{ (A u)_i, u_i - phi_i } = 0` with zero exterior data.
//!
//! The sweep is plain lexicographic projected SOR. For large grids the
//! off-diagonal sum is split into a near-field part (within
//! `near_radius` cells, always evaluated with current values) and a far-field
//! part that is refreshed from a full FFT application every
//! `far_refresh_every` sweeps — a regular splitting of the M-matrix, so the
//! projected iteration still converges, and every convergence claim is backed
//! by the complementarity residual of the *full* operator. Setting
//! `near_radius` large enough recovers the textbook projected SOR exactly
//! (that exact variant is what the monotone-decrease property is about).

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::obstacle::ProblemSpec;
use crate::operator::{DiscreteOperator, DriftScheme};
use serde::Serialize;

#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// `max(phi, 0)`: admissible start above the obstacle on its support.
    ObstaclePositivePart,
    /// The constant `max phi` everywhere: a certified supersolution
    /// (constants map to the nonnegative exterior mass), from which projected
    /// Gauss-Seidel decreases monotonically.
    SupersolutionConstant,
    /// Warm start, e.g. a prolonged coarse solution.
    Warm(Field),
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    /// SOR relaxation factor in (0, 2).
    pub omega: f64,
    /// Complementarity residual target.
    pub tol: f64,
    /// Sweep budget.
    pub max_sweeps: usize,
    /// Near-field radius in cells; `usize::MAX` for exact projected SOR.
    pub near_radius: usize,
    /// Refresh the lagged far field (and the residual) every this many sweeps.
    pub far_refresh_every: usize,
    /// Abort after this many consecutive residual increases.
    pub divergence_patience: usize,
    pub initial_guess: InitialGuess,
}

impl SolverParams {
    pub fn default_for_dimension(dimension: usize) -> Self {
        match dimension {
            1 => Self {
                omega: 1.5,
                tol: 1e-10,
                max_sweeps: 1_000_000,
                near_radius: 64,
                far_refresh_every: 1,
                divergence_patience: 100,
                initial_guess: InitialGuess::ObstaclePositivePart,
            },
            _ => Self {
                omega: 1.5,
                tol: 1e-10,
                max_sweeps: 200_000,
                near_radius: 10,
                far_refresh_every: 6,
                divergence_patience: 100,
                initial_guess: InitialGuess::ObstaclePositivePart,
            },
        }
    }
}

/// Solver output: the solution field with contact mask and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionField {
    pub u: Field,
    pub contact_mask: Vec<bool>,
    /// `A u` at every node (the PDE residual off the contact set).
    pub pde_residual: Field,
    /// `max_i | min((A u)_i, u_i - phi_i) |` of the full operator.
    pub complementarity_residual: f64,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Tolerance used to extract the contact mask, `max(10 tol, h^2)`.
    pub contact_tol: f64,
    /// `(sweep, residual)` checkpoints.
    pub residual_history: Vec<(usize, f64)>,
}

impl SolutionField {
    /// Gap `u - phi` as a field.
    pub fn gap(&self, problem: &ProblemSpec) -> Field {
        let phi = problem.obstacle_field();
        Field {
            grid: self.u.grid,
            values: self
                .u
                .values
                .iter()
                .zip(&phi.values)
                .map(|(u, p)| u - p)
                .collect(),
        }
    }
}

/// Projected SOR on `min{A u, u - phi} = 0`.
///
/// Requires an upwind-built (M-matrix certified) operator matching the
/// problem. Terminates when the complementarity residual of the full
/// operator drops below `tol`, or the sweep budget runs out (the diagnostics
/// are returned either way with `converged` set accordingly); a sustained
/// residual increase aborts with a trace.
pub fn solve(
    problem: &ProblemSpec,
    op: &DiscreteOperator,
    params: &SolverParams,
) -> Result<SolutionField> {
    if op.grid != problem.grid {
        return Err(Error::GridMismatch("operator grid differs from problem grid".into()));
    }
    if op.kernel != problem.kernel || op.drift != problem.drift {
        return Err(Error::GridMismatch(
            "operator kernel/drift differ from the problem".into(),
        ));
    }
    if op.scheme != DriftScheme::Upwind {
        return Err(Error::MMatrixViolation(
            "the solver requires the upwind (M-matrix certified) scheme".into(),
        ));
    }
    if !(params.omega > 0.0 && params.omega < 2.0) {
        return Err(Error::InvalidInput(format!(
            "relaxation factor must lie in (0, 2), got {}",
            params.omega
        )));
    }

    let grid = problem.grid;
    let n_axis = grid.nodes_per_axis;
    let total = grid.node_count();
    let phi = problem.obstacle_field();
    let diag = op.diagonal_value();
    let omega = params.omega;

    let mut u = match &params.initial_guess {
        InitialGuess::ObstaclePositivePart => Field {
            grid,
            values: phi.values.iter().map(|p| p.max(0.0)).collect(),
        },
        InitialGuess::SupersolutionConstant => Field {
            grid,
            values: vec![phi.max().max(0.0); total],
        },
        InitialGuess::Warm(w) => {
            if w.grid != grid {
                return Err(Error::GridMismatch("warm start grid mismatch".into()));
            }
            let mut w = w.clone();
            for (v, p) in w.values.iter_mut().zip(&phi.values) {
                *v = v.max(*p);
            }
            w
        }
    };

    let near = op.near_stencil(params.near_radius);
    let near_flat: Vec<(isize, f64)> = near
        .iter()
        .map(|&(ox, oy, c)| (oy * n_axis as isize + ox, c))
        .collect();
    let radius = near
        .iter()
        .map(|&(ox, oy, _)| ox.abs().max(oy.abs()))
        .max()
        .unwrap_or(0) as usize;

    // far-field values lagged between refreshes; conv = full off-diagonal sum
    let mut conv = vec![0.0f64; total];
    let mut far = vec![0.0f64; total];

    let near_sum = |u: &[f64], idx: usize| -> f64 {
        let mut s = 0.0;
        match grid.dimension {
            1 => {
                let i = idx as isize;
                for &(ox, _, c) in &near {
                    let j = i + ox;
                    if j >= 0 && (j as usize) < n_axis {
                        s += c * u[j as usize];
                    }
                }
            }
            _ => {
                let ix = (idx % n_axis) as isize;
                let iy = (idx / n_axis) as isize;
                let nn = n_axis as isize;
                if ix >= radius as isize
                    && ix < nn - radius as isize
                    && iy >= radius as isize
                    && iy < nn - radius as isize
                {
                    let i = idx as isize;
                    for &(delta, c) in &near_flat {
                        // interior fast path: the offset stays inside the box
                        s += c * unsafe { *u.get_unchecked((i + delta) as usize) };
                    }
                } else {
                    for &(ox, oy, c) in &near {
                        let jx = ix + ox;
                        let jy = iy + oy;
                        if jx >= 0 && jx < nn && jy >= 0 && jy < nn {
                            s += c * u[(jy * nn + jx) as usize];
                        }
                    }
                }
            }
        }
        s
    };

    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut residual;
    let mut increases = 0usize;
    let mut sweeps = 0usize;
    let mut converged = false;

    loop {
        // refresh the lagged far field and the residual certificate
        op.convolve_into(&u.values, &mut conv);
        let mut res = 0.0f64;
        for i in 0..total {
            far[i] = conv[i] - near_sum(&u.values, i);
            let au = conv[i] + diag * u.values[i];
            let slack = u.values[i] - phi.values[i];
            res = res.max(au.min(slack).abs());
        }
        if let Some(&(_, prev)) = history.last() {
            if res > prev {
                increases += 1;
                if increases >= params.divergence_patience {
                    return Err(Error::SolverDiverged(format!(
                        "residual rose {increases} consecutive checkpoints (last {:e} at sweep {sweeps}); trace: {:?}",
                        res,
                        &history[history.len().saturating_sub(6)..]
                    )));
                }
            } else {
                increases = 0;
            }
        }
        history.push((sweeps, res));
        residual = res;
        if res <= params.tol {
            converged = true;
            break;
        }
        if sweeps >= params.max_sweeps {
            break;
        }

        for _ in 0..params.far_refresh_every {
            if sweeps >= params.max_sweeps {
                break;
            }
            for i in 0..total {
                let s = far[i] + near_sum(&u.values, i);
                let gs = -s / diag;
                let cand = (1.0 - omega) * u.values[i] + omega * gs;
                u.values[i] = cand.max(phi.values[i]);
            }
            sweeps += 1;
        }
    }

    // final diagnostics on the full operator
    let pde_residual = op.apply(&u)?;
    let contact_tol = (10.0 * params.tol).max(grid.spacing * grid.spacing);
    let contact_mask: Vec<bool> = u
        .values
        .iter()
        .zip(&phi.values)
        .map(|(u, p)| u - p <= contact_tol)
        .collect();

    Ok(SolutionField {
        u,
        contact_mask,
        pde_residual,
        complementarity_residual: residual,
        iterations: sweeps,
        converged,
        contact_tol,
        residual_history: history,
    })
}

/// Residual report: how far the solution is from exact complementarity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    /// `max_i ((A u)_i)_-` : negative part of the PDE residual anywhere.
    pub max_negative_pde: f64,
    /// `max |A u|` over non-contact nodes.
    pub max_noncontact_pde: f64,
    /// `max_i (phi_i - u_i)_+` : obstacle violation.
    pub max_obstacle_violation: f64,
}

/// Post-hoc residuals of a (possibly hand-constructed) solution field.
pub fn residuals(
    solution: &SolutionField,
    op: &DiscreteOperator,
    problem: &ProblemSpec,
) -> Result<ResidualReport> {
    let au = op.apply(&solution.u)?;
    let phi = problem.obstacle_field();
    let mut neg = 0.0f64;
    let mut noncontact = 0.0f64;
    let mut violation = 0.0f64;
    for i in 0..solution.u.values.len() {
        neg = neg.max(-au.values[i]);
        if !solution.contact_mask[i] {
            noncontact = noncontact.max(au.values[i].abs());
        }
        violation = violation.max(phi.values[i] - solution.u.values[i]);
    }
    Ok(ResidualReport {
        max_negative_pde: neg.max(0.0),
        max_noncontact_pde: noncontact,
        max_obstacle_violation: violation.max(0.0),
    })
}

/// A-priori bound checks: boundedness by the obstacle maximum, Lipschitz
/// transfer, and semiconvexity against the obstacle's discrete C^{1,1} norm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AprioriReport {
    pub max_u: f64,
    pub max_phi: f64,
    /// `max u <= max phi + 1e-8`.
    pub linf_ok: bool,
    pub lip_u: f64,
    pub lip_phi: f64,
    /// `Lip(u) <= 1.05 Lip(phi)`.
    pub lip_ok: bool,
    /// Smallest directional second difference of `u` (axes and diagonals).
    pub min_second_difference: f64,
    /// Discrete `|phi|_{C^{1,1}}`: largest |second difference| of `phi`.
    pub phi_c11: f64,
    /// `D^2 u >= -|phi|_{C11} - slack` with a 5% slack.
    pub semiconvex_ok: bool,
    pub min_u: f64,
}

pub fn a_priori_checks(solution: &SolutionField, problem: &ProblemSpec) -> AprioriReport {
    let phi = problem.obstacle_field();
    let u = &solution.u;
    let max_u = u.max();
    let max_phi = phi.max();
    let lip_u = discrete_lipschitz(u);
    let lip_phi = discrete_lipschitz(&phi);
    let min_d2_u = min_second_difference(u);
    let phi_c11 = max_abs_second_difference(&phi);
    let slack = 0.05 * phi_c11;
    AprioriReport {
        max_u,
        max_phi,
        linf_ok: max_u <= max_phi + 1e-8,
        lip_u,
        lip_phi,
        lip_ok: lip_u <= 1.05 * lip_phi + 1e-12,
        min_second_difference: min_d2_u,
        phi_c11,
        semiconvex_ok: min_d2_u >= -phi_c11 - slack - 1e-12,
        min_u: u.min(),
    }
}

fn directions(dimension: usize) -> Vec<(isize, isize, f64)> {
    // (dx, dy, step length in units of h)
    match dimension {
        1 => vec![(1, 0, 1.0)],
        _ => vec![
            (1, 0, 1.0),
            (0, 1, 1.0),
            (1, 1, std::f64::consts::SQRT_2),
            (1, -1, std::f64::consts::SQRT_2),
        ],
    }
}

/// Largest |u(x+e) - u(x)| / |e| over axis and diagonal neighbor pairs.
pub fn discrete_lipschitz(f: &Field) -> f64 {
    let g = f.grid;
    let n = g.nodes_per_axis as isize;
    let h = g.spacing;
    let mut lip = 0.0f64;
    for (dx, dy, len) in directions(g.dimension) {
        let step = len * h;
        for idx in 0..g.node_count() {
            let (ix, iy) = split(idx, g.dimension, n);
            let (jx, jy) = (ix + dx, iy + dy);
            if jx < 0 || jx >= n || jy < 0 || jy >= n {
                continue;
            }
            let j = (jy * n + jx) as usize;
            lip = lip.max((f.values[j] - f.values[idx]).abs() / step);
        }
    }
    lip
}

fn second_differences<F: FnMut(f64)>(f: &Field, mut visit: F) {
    let g = f.grid;
    let n = g.nodes_per_axis as isize;
    let h = g.spacing;
    for (dx, dy, len) in directions(g.dimension) {
        let denom = (len * h) * (len * h);
        for idx in 0..g.node_count() {
            let (ix, iy) = split(idx, g.dimension, n);
            let (px, py) = (ix + dx, iy + dy);
            let (mx, my) = (ix - dx, iy - dy);
            if px < 0 || px >= n || py < 0 || py >= n || mx < 0 || mx >= n || my < 0 || my >= n {
                continue;
            }
            let p = (py * n + px) as usize;
            let m = (my * n + mx) as usize;
            visit((f.values[p] + f.values[m] - 2.0 * f.values[idx]) / denom);
        }
    }
}

pub fn min_second_difference(f: &Field) -> f64 {
    let mut min = f64::INFINITY;
    second_differences(f, |d2| min = min.min(d2));
    min
}

pub fn max_abs_second_difference(f: &Field) -> f64 {
    let mut max = 0.0f64;
    second_differences(f, |d2| max = max.max(d2.abs()));
    max
}

fn split(idx: usize, dimension: usize, n: isize) -> (isize, isize) {
    match dimension {
        1 => (idx as isize, 0),
        _ => ((idx as isize) % n, (idx as isize) / n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::KernelSpec;
    use crate::obstacle::Obstacle;
    use crate::util::SplitMix64;

    fn problem_1d(h: f64, r: f64, b: f64, obstacle: Obstacle) -> (ProblemSpec, DiscreteOperator) {
        let grid = Grid::new(1, h, r).unwrap();
        let kernel = KernelSpec::fractional(1).unwrap();
        let problem = ProblemSpec::new(grid, kernel.clone(), vec![b], obstacle).unwrap();
        let op = DiscreteOperator::build(grid, kernel, vec![b], DriftScheme::Upwind).unwrap();
        (problem, op)
    }

    fn quick_params() -> SolverParams {
        SolverParams {
            tol: 1e-11,
            ..SolverParams::default_for_dimension(1)
        }
    }

    #[test]
    fn nonpositive_obstacle_gives_zero_solution() {
        let (problem, op) = problem_1d(1.0 / 16.0, 6.0, 0.5, Obstacle::None);
        let sol = solve(&problem, &op, &quick_params()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.u.linf(), 0.0);
        // contact where u = phi never happens for phi = -1
        assert!(sol.contact_mask.iter().all(|&c| !c));
    }

    #[test]
    fn symmetric_bump_gives_symmetric_solution_and_contact() {
        let (problem, op) = problem_1d(1.0 / 32.0, 6.0, 0.0, Obstacle::bump(1.0, 1.0, vec![0.0]));
        let sol = solve(&problem, &op, &quick_params()).unwrap();
        assert!(sol.converged);
        let n = sol.u.values.len();
        for i in 0..n {
            let j = n - 1 - i;
            assert!(
                (sol.u.values[i] - sol.u.values[j]).abs() < 1e-8,
                "asymmetry at {i}"
            );
            assert_eq!(sol.contact_mask[i], sol.contact_mask[j]);
        }
        // non-empty contact strictly inside the support
        let grid = problem.grid;
        let touched: Vec<usize> = (0..n).filter(|&i| sol.contact_mask[i]).collect();
        assert!(!touched.is_empty());
        for &i in &touched {
            assert!(grid.position(i)[0].abs() < 1.0);
        }
        // u >= phi and u >= 0
        let phi = problem.obstacle_field();
        for i in 0..n {
            assert!(sol.u.values[i] >= phi.values[i] - 1e-12);
            assert!(sol.u.values[i] >= -1e-12);
        }
    }

    #[test]
    fn exact_psor_decreases_monotonically_from_supersolution() {
        // run with full near field (exact projected Gauss-Seidel, omega = 1)
        // from the constant supersolution; iterates must never increase
        let mut rng = SplitMix64::new(123);
        for trial in 0..10 {
            let b = rng.uniform(-1.5, 1.5);
            let a = rng.uniform(0.5, 2.0);
            let rho = rng.uniform(0.5, 1.5);
            let (problem, op) = problem_1d(1.0 / 16.0, 6.0, b, Obstacle::bump(a, rho, vec![0.0]));
            let phi = problem.obstacle_field();
            let grid = problem.grid;
            let n = grid.node_count();
            let diag = op.diagonal_value();
            let mut u = vec![phi.values.iter().cloned().fold(0.0, f64::max); n];
            let near = op.near_stencil(usize::MAX);
            let mut prev = u.clone();
            for sweep in 0..30 {
                for i in 0..n {
                    let mut s = 0.0;
                    for &(ox, _, c) in &near {
                        let j = i as isize + ox;
                        if j >= 0 && (j as usize) < n {
                            s += c * u[j as usize];
                        }
                    }
                    u[i] = (-s / diag).max(phi.values[i]);
                }
                if sweep >= 1 {
                    for i in 0..n {
                        assert!(
                            u[i] <= prev[i] + 1e-13,
                            "trial {trial} sweep {sweep} node {i}: {} -> {}",
                            prev[i],
                            u[i]
                        );
                    }
                }
                prev.copy_from_slice(&u);
            }
        }
    }

    #[test]
    fn raising_the_obstacle_raises_the_solution() {
        let (p1, op) = problem_1d(1.0 / 32.0, 6.0, 0.5, Obstacle::bump(1.0, 1.0, vec![0.0]));
        let (p2, _) = problem_1d(1.0 / 32.0, 6.0, 0.5, Obstacle::bump(1.1, 1.0, vec![0.0]));
        let s1 = solve(&p1, &op, &quick_params()).unwrap();
        let s2 = solve(&p2, &op, &quick_params()).unwrap();
        for i in 0..s1.u.values.len() {
            assert!(s2.u.values[i] >= s1.u.values[i] - 1e-10, "node {i}");
        }
    }

    #[test]
    fn inverse_positivity_of_the_m_matrix() {
        // solve A f = g >= 0 via the unconstrained limit (obstacle -inf is
        // emulated by phi = 0 and g >= 0 forcing: use PSOR with phi = None
        // and rhs through a shifted complementarity trick is overkill; assert
        // instead through the solver: solution above zero obstacle with
        // Au = 0 off contact is nonnegative, checked in the bump test). Here:
        // direct check that constants map to positive exterior mass.
        let (_, op) = problem_1d(1.0 / 16.0, 6.0, 1.0, Obstacle::None);
        let mass = op.exterior_mass();
        assert!(mass.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn translation_equivariance_within_truncation_error() {
        let shift_cells = 8usize;
        let h = 1.0 / 32.0;
        let (p1, op) = problem_1d(h, 6.0, 0.7, Obstacle::bump(1.0, 1.0, vec![0.0]));
        let shift = shift_cells as f64 * h;
        let (p2, _) = problem_1d(h, 6.0, 0.7, Obstacle::bump(1.0, 1.0, vec![shift]));
        let s1 = solve(&p1, &op, &quick_params()).unwrap();
        let s2 = solve(&p2, &op, &quick_params()).unwrap();
        // compare away from the box edges: the truncation box did not move
        // with the bump, so the equivariance is exact only on the infinite
        // lattice; interior nodes agree up to the (tiny) change in the
        // exterior-tail geometry
        let grid = p1.grid;
        for i in 0..grid.node_count() - shift_cells {
            if grid.position(i)[0].abs() > 4.0 {
                continue;
            }
            let d = (s2.u.values[i + shift_cells] - s1.u.values[i]).abs();
            assert!(d < 1e-3, "node {i}: {d}");
        }
    }

    #[test]
    fn stencil_translation_invariance_is_exact() {
        // the convolution weights are translation invariant: applying to a
        // shifted compact field returns the shifted image, bit for bit
        // (direct summation path)
        let (_, op) = problem_1d(1.0 / 8.0, 6.0, 0.5, Obstacle::None);
        let grid = op.grid;
        let bump = |x: f64| {
            let s = x * x;
            if s < 1.0 { (1.0 - 1.0 / (1.0 - s)).exp() } else { 0.0 }
        };
        let f1 = Field::from_fn(grid, |x| bump(x[0]));
        let f2 = Field::from_fn(grid, |x| bump(x[0] - 2.0 * grid.spacing));
        let a1 = op.apply_direct(&f1).unwrap();
        let a2 = op.apply_direct(&f2).unwrap();
        let n = grid.node_count();
        // compare away from the box edge, where both stencils see the same
        // zero-padded data pattern
        for i in 8..n - 10 {
            assert_eq!(a1.values[i], a2.values[i + 2], "node {i}");
        }
    }

    #[test]
    fn residual_report_flags_planted_violations() {
        let (problem, op) = problem_1d(1.0 / 32.0, 6.0, 0.0, Obstacle::bump(1.0, 1.0, vec![0.0]));
        let sol = solve(&problem, &op, &quick_params()).unwrap();
        let rep = residuals(&sol, &op, &problem).unwrap();
        assert!(rep.max_negative_pde <= 1e-9);
        assert!(rep.max_noncontact_pde <= 1e-9);
        assert!(rep.max_obstacle_violation <= 1e-12);

        // u := phi forced: A phi < 0 somewhere inside the contact region
        let phi = problem.obstacle_field();
        let forced = SolutionField {
            u: phi.clone(),
            contact_mask: vec![true; phi.values.len()],
            pde_residual: op.apply(&phi).unwrap(),
            complementarity_residual: f64::NAN,
            iterations: 0,
            converged: false,
            contact_tol: 0.0,
            residual_history: vec![],
        };
        let rep = residuals(&forced, &op, &problem).unwrap();
        assert!(rep.max_negative_pde > 1e-2, "{rep:?}");

        // u := large constant violates complementarity off the obstacle
        let big = SolutionField {
            u: Field {
                grid: problem.grid,
                values: vec![5.0; phi.values.len()],
            },
            contact_mask: vec![false; phi.values.len()],
            pde_residual: op
                .apply(&Field {
                    grid: problem.grid,
                    values: vec![5.0; phi.values.len()],
                })
                .unwrap(),
            complementarity_residual: f64::NAN,
            iterations: 0,
            converged: false,
            contact_tol: 0.0,
            residual_history: vec![],
        };
        let rep = residuals(&big, &op, &problem).unwrap();
        // Au = 5 * exterior mass > 0 and u - phi > 0 everywhere: the
        // complementarity product is positive, surfacing as nonzero
        // off-contact PDE residual
        assert!(rep.max_noncontact_pde > 1e-3);
    }

    #[test]
    fn apriori_bounds_hold_for_converged_runs() {
        for b in [0.0, 1.0] {
            let (problem, op) =
                problem_1d(1.0 / 64.0, 6.0, b, Obstacle::bump(1.0, 1.0, vec![0.0]));
            let sol = solve(&problem, &op, &quick_params()).unwrap();
            let rep = a_priori_checks(&sol, &problem);
            assert!(rep.linf_ok, "{rep:?}");
            assert!(rep.lip_ok, "{rep:?}");
            assert!(rep.semiconvex_ok, "{rep:?}");
            assert!(rep.min_u >= -1e-12);
        }
    }

    #[test]
    fn lagged_far_field_matches_exact_psor_solution() {
        let (problem, op) = problem_1d(1.0 / 32.0, 6.0, 1.0, Obstacle::bump(1.0, 1.0, vec![0.0]));
        let exact = solve(
            &problem,
            &op,
            &SolverParams {
                near_radius: usize::MAX,
                ..quick_params()
            },
        )
        .unwrap();
        let lagged = solve(
            &problem,
            &op,
            &SolverParams {
                near_radius: 16,
                far_refresh_every: 3,
                ..quick_params()
            },
        )
        .unwrap();
        assert!(exact.converged && lagged.converged);
        for i in 0..exact.u.values.len() {
            assert!(
                (exact.u.values[i] - lagged.u.values[i]).abs() < 1e-8,
                "node {i}"
            );
        }
        // identical contact sets
        assert_eq!(exact.contact_mask, lagged.contact_mask);
    }
}
