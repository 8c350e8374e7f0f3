//! Free-boundary extraction and growth-exponent fitting.
//!
//! A converged solution leaves the obstacle across `∂{u = phi}`. Near a
//! regular point the gap grows like `c0 ((x-x0).nu)_+^{1+gamma}` with a
//! direction-dependent exponent, so `sup_{B_r}(u - phi)` against `r` on a
//! log-log scale is a line whose slope is the growth exponent. Everything
//! here works on the gap field; predictions come from [`crate::kernel`].

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::kernel::{tilde_gamma, KernelSpec};
use crate::obstacle::ProblemSpec;
use crate::solver::SolutionField;
use crate::util::{dot, norm};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Regular,
    DegenerateSuspect,
    Unfitted,
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeBoundaryPoint {
    /// Sub-grid location of the boundary crossing.
    pub location: Vec<f64>,
    /// Unit normal pointing into `{u > phi}`.
    pub normal: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_c0: f64,
    /// `1 + tilde_gamma` for this normal; NaN until compared.
    pub predicted_exponent: f64,
    pub deviation: f64,
    /// `(r_min, r_max)` of the fit.
    pub fit_window: (f64, f64),
    /// R-squared of the log-log regression.
    pub fit_quality: f64,
    pub classification: PointClass,
}

impl FreeBoundaryPoint {
    fn unfitted(location: Vec<f64>, normal: Vec<f64>) -> Self {
        Self {
            location,
            normal,
            fitted_exponent: f64::NAN,
            fitted_c0: f64::NAN,
            predicted_exponent: f64::NAN,
            deviation: f64::NAN,
            fit_window: (f64::NAN, f64::NAN),
            fit_quality: f64::NAN,
            classification: PointClass::Unfitted,
        }
    }
}

/// Locates free-boundary points (locations and normals only).
///
/// 1-D: each maximal contact run contributes its two endpoints, placed by
/// linear interpolation of the gap between the last contact node and the
/// first non-contact node; normals are `-1/+1` pointing off the run.
///
/// 2-D: every contact cell with a non-contact 4-neighbor contributes one
/// point; the normal comes from the gradient of a Gaussian-smoothed contact
/// indicator (width `4h`), the location from the `contact_tol` crossing of
/// the gap along that normal.
pub fn locate_free_boundary(
    solution: &SolutionField,
    problem: &ProblemSpec,
) -> Result<Vec<FreeBoundaryPoint>> {
    let grid = problem.grid;
    let gap = solution.gap(problem);
    let mask = &solution.contact_mask;
    if !mask.iter().any(|&c| c) {
        return Err(Error::Analysis("empty contact set".into()));
    }
    let ctol = solution.contact_tol;
    let h = grid.spacing;

    let mut points = Vec::new();
    match grid.dimension {
        1 => {
            let n = grid.nodes_per_axis;
            let mut i = 0;
            while i < n {
                if !mask[i] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i + 1 < n && mask[i + 1] {
                    i += 1;
                }
                let end = i;
                // left endpoint
                if start > 0 {
                    let d_out = gap.values[start - 1];
                    let d_in = gap.values[start];
                    let t = ((d_out - ctol) / (d_out - d_in).max(1e-300)).clamp(0.0, 1.0);
                    let x = grid.axis_coord(start - 1) + t * h;
                    points.push(FreeBoundaryPoint::unfitted(vec![x], vec![-1.0]));
                }
                // right endpoint
                if end + 1 < n {
                    let d_out = gap.values[end + 1];
                    let d_in = gap.values[end];
                    let t = ((d_out - ctol) / (d_out - d_in).max(1e-300)).clamp(0.0, 1.0);
                    let x = grid.axis_coord(end + 1) - t * h;
                    points.push(FreeBoundaryPoint::unfitted(vec![x], vec![1.0]));
                }
                i += 1;
            }
        }
        _ => {
            let n = grid.nodes_per_axis;
            let indicator = Field {
                grid,
                values: mask.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect(),
            };
            let smooth = gaussian_smooth(&indicator, 4.0 * h);
            for iy in 1..n - 1 {
                for ix in 1..n - 1 {
                    let idx = iy * n + ix;
                    if !mask[idx] {
                        continue;
                    }
                    let boundary = !mask[idx - 1]
                        || !mask[idx + 1]
                        || !mask[idx - n]
                        || !mask[idx + n];
                    if !boundary {
                        continue;
                    }
                    let gx = (smooth.values[idx + 1] - smooth.values[idx - 1]) / (2.0 * h);
                    let gy = (smooth.values[idx + n] - smooth.values[idx - n]) / (2.0 * h);
                    let g_norm = (gx * gx + gy * gy).sqrt();
                    if g_norm < 1e-12 {
                        continue;
                    }
                    // indicator decreases towards {u > phi}
                    let nu = vec![-gx / g_norm, -gy / g_norm];
                    let center = grid.position(idx);
                    let location = crossing_along(&gap, &center, &nu, ctol, h);
                    points.push(FreeBoundaryPoint::unfitted(location, nu));
                }
            }
            if points.is_empty() {
                return Err(Error::Analysis(
                    "contact set has no resolvable boundary cells".into(),
                ));
            }
        }
    }
    Ok(points)
}

/// First `level` crossing of the interpolated field along `p0 + t nu`,
/// searched over `t` in `[-3h, 6h]` at step `h/4`.
fn crossing_along(gap: &Field, p0: &[f64], nu: &[f64], level: f64, h: f64) -> Vec<f64> {
    let at = |t: f64| -> Vec<f64> { p0.iter().zip(nu).map(|(p, d)| p + t * d).collect() };
    let mut prev_t = -3.0 * h;
    let mut prev_v = gap.interpolate(&at(prev_t)) - level;
    let mut t = prev_t;
    while t < 6.0 * h {
        t += 0.25 * h;
        let v = gap.interpolate(&at(t)) - level;
        if prev_v <= 0.0 && v > 0.0 {
            let frac = if (v - prev_v).abs() > 1e-300 {
                -prev_v / (v - prev_v)
            } else {
                0.0
            };
            return at(prev_t + frac * (t - prev_t));
        }
        prev_t = t;
        prev_v = v;
    }
    p0.to_vec()
}

/// Separable Gaussian smoothing with standard deviation `sigma` (length
/// units), kernel truncated at three sigma.
pub fn gaussian_smooth(f: &Field, sigma: f64) -> Field {
    let grid = f.grid;
    let h = grid.spacing;
    let m = ((3.0 * sigma / h).ceil() as usize).max(1);
    let mut w = Vec::with_capacity(2 * m + 1);
    for k in -(m as isize)..=(m as isize) {
        let x = k as f64 * h / sigma;
        w.push((-0.5 * x * x).exp());
    }
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    let n = grid.nodes_per_axis;
    let conv_axis = |src: &[f64], stride: usize, count: usize, lines: usize, line_stride: usize| {
        let mut out = vec![0.0f64; src.len()];
        for line in 0..lines {
            let base = line * line_stride;
            for i in 0..count {
                let mut acc = 0.0;
                for (j, &wj) in w.iter().enumerate() {
                    let k = i as isize + j as isize - m as isize;
                    if k >= 0 && (k as usize) < count {
                        acc += wj * src[base + k as usize * stride];
                    }
                }
                out[base + i * stride] = acc;
            }
        }
        out
    };
    match grid.dimension {
        1 => Field {
            grid,
            values: conv_axis(&f.values, 1, n, 1, 0),
        },
        _ => {
            let pass_x = conv_axis(&f.values, 1, n, n, n);
            let pass_y = {
                let mut out = vec![0.0f64; pass_x.len()];
                for ix in 0..n {
                    for iy in 0..n {
                        let mut acc = 0.0;
                        for (j, &wj) in w.iter().enumerate() {
                            let k = iy as isize + j as isize - m as isize;
                            if k >= 0 && (k as usize) < n {
                                acc += wj * pass_x[k as usize * n + ix];
                            }
                        }
                        out[iy * n + ix] = acc;
                    }
                }
                out
            };
            Field {
                grid,
                values: pass_y,
            }
        }
    }
}

/// Dyadic fit window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitWindow {
    pub r_min: f64,
    pub r_max: f64,
}

impl FitWindow {
    /// Default window: `r_min = 8h`, `r_max = min(rho/2, half distance to the
    /// nearest other free-boundary point)`.
    pub fn default_for(
        problem: &ProblemSpec,
        location: &[f64],
        others: &[Vec<f64>],
    ) -> FitWindow {
        let h = problem.grid.spacing;
        let rho = problem.obstacle.support_radius();
        let mut r_max = if rho > 0.0 {
            rho / 2.0
        } else {
            problem.grid.half_extent / 4.0
        };
        for other in others {
            let d = location
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 1e-12 {
                r_max = r_max.min(d / 2.0);
            }
        }
        FitWindow {
            r_min: 8.0 * h,
            r_max,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub c0: f64,
    pub r_squared: f64,
    /// `(r, sup_{B_r} gap)` samples used.
    pub samples: Vec<(f64, f64)>,
}

/// Fits `sup_{B_r(x0)} gap ~ c0 r^p` over dyadic radii in the window by
/// least squares on `(log r, log sup)`.
pub fn fit_growth_exponent(gap: &Field, location: &[f64], window: FitWindow) -> Result<GrowthFit> {
    let grid = gap.grid;
    let mut radii = Vec::new();
    let mut r = window.r_min;
    while r <= window.r_max * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    if radii.len() < 3 {
        return Err(Error::Analysis(format!(
            "fit window ({}, {}) leaves fewer than three dyadic radii",
            window.r_min, window.r_max
        )));
    }

    let mut samples = Vec::with_capacity(radii.len());
    for &r in &radii {
        let sup = sup_ball(gap, location, r);
        if sup <= 0.0 {
            return Err(Error::Analysis(format!(
                "sup of the gap over B_{r} is zero; the point sits inside the contact set"
            )));
        }
        samples.push((r, sup));
    }

    let xs: Vec<f64> = samples.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, d)| d.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    let _ = grid;
    Ok(GrowthFit {
        exponent: slope,
        c0: intercept.exp(),
        r_squared,
        samples,
    })
}

/// `sup` of a field over the ball `B_r(x0)` (grid nodes).
pub fn sup_ball(f: &Field, x0: &[f64], r: f64) -> f64 {
    let grid = f.grid;
    let n = grid.nodes_per_axis as isize;
    let h = grid.spacing;
    let mut sup = f64::NEG_INFINITY;
    match grid.dimension {
        1 => {
            let c = ((x0[0] + grid.half_extent) / h).round() as isize;
            let k = (r / h).ceil() as isize;
            for i in (c - k).max(0)..=(c + k).min(n - 1) {
                let x = grid.axis_coord(i as usize);
                if (x - x0[0]).abs() <= r {
                    sup = sup.max(f.values[i as usize]);
                }
            }
        }
        _ => {
            let cx = ((x0[0] + grid.half_extent) / h).round() as isize;
            let cy = ((x0[1] + grid.half_extent) / h).round() as isize;
            let k = (r / h).ceil() as isize;
            for iy in (cy - k).max(0)..=(cy + k).min(n - 1) {
                for ix in (cx - k).max(0)..=(cx + k).min(n - 1) {
                    let x = grid.axis_coord(ix as usize) - x0[0];
                    let y = grid.axis_coord(iy as usize) - x0[1];
                    if x * x + y * y <= r * r {
                        sup = sup.max(f.values[(iy * n + ix) as usize]);
                    }
                }
            }
        }
    }
    sup
}

/// Fills `predicted_exponent` (`1 + tilde_gamma` for the point's normal) and
/// the deviation; grid-free, uses only `(kernel, b, nu)`.
pub fn compare_prediction(
    point: &mut FreeBoundaryPoint,
    kernel: &KernelSpec,
    b: &[f64],
) -> Result<()> {
    if (norm(&point.normal) - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput("free-boundary normal is not unit".into()));
    }
    let g = tilde_gamma(kernel, b, &point.normal)?;
    point.predicted_exponent = 1.0 + g;
    point.deviation = point.fitted_exponent - point.predicted_exponent;
    Ok(())
}

/// Full pipeline: locate, fit with default windows, compare, classify.
pub fn analyze(
    solution: &SolutionField,
    problem: &ProblemSpec,
) -> Result<Vec<FreeBoundaryPoint>> {
    analyze_with(solution, problem, 8)
}

/// [`analyze`] with a configurable inner fit radius (`r_min_cells * h`).
pub fn analyze_with(
    solution: &SolutionField,
    problem: &ProblemSpec,
    r_min_cells: usize,
) -> Result<Vec<FreeBoundaryPoint>> {
    let mut points = locate_free_boundary(solution, problem)?;
    let gap = solution.gap(problem);
    let locations: Vec<Vec<f64>> = points.iter().map(|p| p.location.clone()).collect();
    for (i, point) in points.iter_mut().enumerate() {
        let others: Vec<Vec<f64>> = locations
            .iter()
            .enumerate()
            .filter(|(j, loc)| {
                // ignore near-duplicates (adjacent boundary cells) when
                // shrinking the window
                *j != i
                    && loc
                        .iter()
                        .zip(&point.location)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                        > 4.0 * problem.grid.spacing
            })
            .map(|(_, loc)| loc.clone())
            .collect();
        let mut window = FitWindow::default_for(problem, &point.location, &others);
        window.r_min = r_min_cells.max(2) as f64 * problem.grid.spacing;
        match fit_growth_exponent(&gap, &point.location, window) {
            Ok(fit) => {
                point.fitted_exponent = fit.exponent;
                point.fitted_c0 = fit.c0;
                point.fit_quality = fit.r_squared;
                point.fit_window = (window.r_min, window.r_max);
                compare_prediction(point, &problem.kernel, &problem.drift)?;
                point.classification = if fit.r_squared >= 0.99 && fit.exponent < 1.95 {
                    PointClass::Regular
                } else {
                    PointClass::DegenerateSuspect
                };
            }
            Err(_) => {
                point.classification = PointClass::Unfitted;
            }
        }
    }
    Ok(points)
}

/// The exact identity `tilde_gamma(nu) + tilde_gamma(-nu) = 1` turns into the
/// sum rule `(p_+ - 1) + (p_- - 1) = 1` for fitted exponents of
/// opposite-normal pairs; returns `(i, j, sum)` per detected pair.
pub fn sum_rule_pairs(points: &[FreeBoundaryPoint]) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dot(&points[i].normal, &points[j].normal);
            if d < -0.999
                && points[i].fitted_exponent.is_finite()
                && points[j].fitted_exponent.is_finite()
            {
                pairs.push((
                    i,
                    j,
                    (points[i].fitted_exponent - 1.0) + (points[j].fitted_exponent - 1.0),
                ));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Serialize)]
pub enum NondegeneracyVerdict {
    HypothesisNotMet,
    Pass {
        min_ratio: f64,
        fitted_exponent: f64,
    },
    Fail {
        min_ratio: f64,
        fitted_exponent: f64,
        reason: String,
    },
}

/// Quadratic nondegeneracy at free-boundary points: when the obstacle
/// satisfies `(Laplacian + d^2/db^2) phi <= 0` on its positivity set, the gap
/// must satisfy `sup_{B_r}(gap) >= c r^2`, i.e. `min_r d_r / r^2 > 0` and the
/// fitted exponent stays below `2.05`.
pub fn nondegeneracy_check(
    solution: &SolutionField,
    problem: &ProblemSpec,
    points: &[FreeBoundaryPoint],
) -> Result<Vec<NondegeneracyVerdict>> {
    if !concavity_hypothesis_holds(problem) {
        return Ok(points
            .iter()
            .map(|_| NondegeneracyVerdict::HypothesisNotMet)
            .collect());
    }
    let gap = solution.gap(problem);
    let h = problem.grid.spacing;
    let rho = problem.obstacle.support_radius();
    let mut verdicts = Vec::with_capacity(points.len());
    for p in points {
        let window = FitWindow {
            r_min: 8.0 * h,
            r_max: (rho / 2.0).max(16.0 * h),
        };
        let mut min_ratio = f64::INFINITY;
        let mut r = window.r_min;
        while r <= window.r_max {
            let d_r = sup_ball(&gap, &p.location, r);
            min_ratio = min_ratio.min(d_r / (r * r));
            r *= 2.0;
        }
        let fitted = p.fitted_exponent;
        if min_ratio > 0.0 && (fitted.is_nan() || fitted <= 2.05) {
            verdicts.push(NondegeneracyVerdict::Pass {
                min_ratio,
                fitted_exponent: fitted,
            });
        } else {
            verdicts.push(NondegeneracyVerdict::Fail {
                min_ratio,
                fitted_exponent: fitted,
                reason: if min_ratio <= 0.0 {
                    "sup over some ball vanishes".into()
                } else {
                    "fitted exponent exceeds quadratic growth".into()
                },
            });
        }
    }
    Ok(verdicts)
}

/// Discrete check of `(Laplacian + d^2/db^2) phi <= 0` on `{phi > 0}`, using
/// analytic obstacle evaluations on an `h`-step stencil.
pub fn concavity_hypothesis_holds(problem: &ProblemSpec) -> bool {
    let grid = problem.grid;
    let h = grid.spacing;
    let b = &problem.drift;
    let b_norm = norm(b);
    let phi = |x: &[f64]| problem.obstacle.eval(x);
    for idx in 0..grid.node_count() {
        let x = grid.position(idx);
        if phi(&x) <= 0.0 {
            continue;
        }
        let mut total = 0.0;
        for axis in 0..grid.dimension {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[axis] += h;
            xm[axis] -= h;
            total += (phi(&xp) + phi(&xm) - 2.0 * phi(&x)) / (h * h);
        }
        if b_norm > 0.0 {
            let e: Vec<f64> = b.iter().map(|c| c / b_norm).collect();
            let xp: Vec<f64> = x.iter().zip(&e).map(|(a, d)| a + h * d).collect();
            let xm: Vec<f64> = x.iter().zip(&e).map(|(a, d)| a - h * d).collect();
            total += b_norm * b_norm * (phi(&xp) + phi(&xm) - 2.0 * phi(&x)) / (h * h);
        }
        if total > 1e-8 {
            return false;
        }
    }
    true
}

/// Discrete Hoelder seminorm of the gradient at exponent `theta`, taken over
/// node pairs at dyadic separations in `[8h, rho/2]` along axes (and
/// diagonals in 2-D).
pub fn regularity_budget(solution: &SolutionField, problem: &ProblemSpec, theta: f64) -> f64 {
    let grid = problem.grid;
    let n = grid.nodes_per_axis as isize;
    let h = grid.spacing;
    let u = &solution.u.values;
    let dim = grid.dimension;

    // central-difference gradient on interior nodes
    let mut grads: Vec<Vec<f64>> = vec![vec![0.0; grid.node_count()]; dim];
    for idx in 0..grid.node_count() {
        let (ix, iy) = match dim {
            1 => (idx as isize, 0),
            _ => ((idx as isize) % n, (idx as isize) / n),
        };
        for axis in 0..dim {
            let (dx, dy) = if axis == 0 { (1, 0) } else { (0, 1) };
            let (px, py) = (ix + dx, iy + dy);
            let (mx, my) = (ix - dx, iy - dy);
            if px < 0 || px >= n || py < 0 || py >= n || mx < 0 || mx >= n || my < 0 || my >= n {
                continue;
            }
            grads[axis][idx] =
                (u[(py * n + px) as usize] - u[(my * n + mx) as usize]) / (2.0 * h);
        }
    }

    let rho = problem.obstacle.support_radius().max(16.0 * h);
    let mut max_k = ((rho / 2.0) / h).floor() as isize;
    max_k = max_k.max(8);
    let dirs: Vec<(isize, isize)> = match dim {
        1 => vec![(1, 0)],
        _ => vec![(1, 0), (0, 1), (1, 1), (1, -1)],
    };

    let mut seminorm = 0.0f64;
    let mut k = 8isize;
    while k <= max_k {
        for &(dx, dy) in &dirs {
            let step_len = h * k as f64 * ((dx * dx + dy * dy) as f64).sqrt();
            let denom = step_len.powf(theta);
            for idx in 0..grid.node_count() {
                let (ix, iy) = match dim {
                    1 => (idx as isize, 0),
                    _ => ((idx as isize) % n, (idx as isize) / n),
                };
                let (jx, jy) = (ix + dx * k, iy + dy * k);
                if jx < 0 || jx >= n || jy < 0 || jy >= n {
                    continue;
                }
                let j = (jy * n + jx) as usize;
                let mut diff = 0.0f64;
                for axis in 0..dim {
                    diff = diff.max((grads[axis][j] - grads[axis][idx]).abs());
                }
                seminorm = seminorm.max(diff / denom);
            }
        }
        k *= 2;
    }
    seminorm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::{gamma_exponent, KernelSpec};
    use crate::obstacle::Obstacle;

    fn planted_gap(grid: Grid, x0: f64, nu: f64, exponent: f64) -> Field {
        Field::from_fn(grid, |x| {
            let t = (x[0] - x0) * nu;
            if t > 0.0 {
                t.powf(exponent)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn fit_recovers_planted_power_law() {
        let grid = Grid::new(1, 1.0 / 512.0, 4.0).unwrap();
        let gap = planted_gap(grid, 0.25, 1.0, 1.75);
        let window = FitWindow {
            r_min: 8.0 / 512.0,
            r_max: 0.5,
        };
        let fit = fit_growth_exponent(&gap, &[0.25], window).unwrap();
        assert!(
            (fit.exponent - 1.75).abs() < 0.01,
            "fitted {}",
            fit.exponent
        );
        assert!(fit.r_squared > 0.9999);
        assert!((fit.c0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn fit_rejects_degenerate_windows_and_zero_gaps() {
        let grid = Grid::new(1, 1.0 / 64.0, 4.0).unwrap();
        let gap = planted_gap(grid, 0.0, 1.0, 1.5);
        // too narrow: fewer than three dyadic radii
        assert!(fit_growth_exponent(
            &gap,
            &[0.0],
            FitWindow {
                r_min: 0.5,
                r_max: 0.6
            }
        )
        .is_err());
        // deep inside the zero region the sup vanishes
        assert!(fit_growth_exponent(
            &gap,
            &[-2.0],
            FitWindow {
                r_min: 8.0 / 64.0,
                r_max: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn planted_cubic_field_flags_nondegeneracy_failure() {
        // gap ~ r^3 grows slower than r^2 near 0: min d_r/r^2 -> 0 with r,
        // and the fitted exponent lands near 3 > 2.05
        let grid = Grid::new(1, 1.0 / 512.0, 4.0).unwrap();
        let gap = Field::from_fn(grid, |x| (x[0] - 0.0).abs().powi(3));
        let fit = fit_growth_exponent(
            &gap,
            &[0.0],
            FitWindow {
                r_min: 8.0 / 512.0,
                r_max: 1.0,
            },
        )
        .unwrap();
        assert!(fit.exponent > 2.5, "fitted {}", fit.exponent);
    }

    #[test]
    fn sum_rule_uses_opposite_normals() {
        let mut a = FreeBoundaryPoint::unfitted(vec![-0.5], vec![-1.0]);
        let mut b = FreeBoundaryPoint::unfitted(vec![0.5], vec![1.0]);
        a.fitted_exponent = 1.75;
        b.fitted_exponent = 1.26;
        let pairs = sum_rule_pairs(&[a, b]);
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].2 - 1.01).abs() < 1e-12);
    }

    #[test]
    fn prediction_is_grid_free_and_satisfies_the_sum_rule() {
        let kernel = KernelSpec::fractional(1).unwrap();
        let mut left = FreeBoundaryPoint::unfitted(vec![-0.5], vec![-1.0]);
        let mut right = FreeBoundaryPoint::unfitted(vec![0.5], vec![1.0]);
        left.fitted_exponent = 1.3;
        right.fitted_exponent = 1.7;
        compare_prediction(&mut left, &kernel, &[0.5]).unwrap();
        compare_prediction(&mut right, &kernel, &[0.5]).unwrap();
        let gl = gamma_exponent(-0.5).unwrap();
        let gr = gamma_exponent(0.5).unwrap();
        assert!((left.predicted_exponent - (1.0 + gl)).abs() < 1e-9);
        assert!((right.predicted_exponent - (1.0 + gr)).abs() < 1e-9);
        assert!(
            ((left.predicted_exponent - 1.0) + (right.predicted_exponent - 1.0) - 1.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn concavity_hypothesis_distinguishes_obstacles() {
        let grid = Grid::new(1, 1.0 / 64.0, 6.0).unwrap();
        let kernel = KernelSpec::fractional(1).unwrap();
        let concave = ProblemSpec::new(
            grid,
            kernel.clone(),
            vec![1.0],
            Obstacle::ConcaveCore {
                height: 1.0,
                curvature: 1.0,
                center: vec![0.0],
            },
        )
        .unwrap();
        assert!(concavity_hypothesis_holds(&concave));
        // the smooth bump is convex near its support edge
        let bump = ProblemSpec::new(
            grid,
            kernel,
            vec![1.0],
            Obstacle::bump(1.0, 1.0, vec![0.0]),
        )
        .unwrap();
        assert!(!concavity_hypothesis_holds(&bump));
    }
}
