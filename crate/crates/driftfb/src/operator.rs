//! Monotone finite-difference discretization of `A = -L + b.grad` on a
//! uniform grid with zero exterior condition.
//!
//! The nonlocal part is assembled as translation-invariant convolution
//! weights over integer offsets. Radially, the kernel `r^{-2}` (after polar
//! reduction; the same power appears in 1-D directly) is integrated exactly
//! against the piecewise-linear interpolant of the second-difference profile;
//! the singular first cell uses the interpolant's second-difference form
//! (quadratic model through the origin), which keeps every weight nonnegative
//! and makes the scheme exact on affine functions. The far field beyond the
//! assembled support is aggregated analytically into the diagonal through
//! `int_rho^inf r^{-2} dr = 1/rho`.
//!
//! Drift is upwinded by the sign of each component by default, which together
//! with the sign structure above yields an M-matrix (positive diagonal,
//! nonpositive off-diagonal, nonnegative row sums). The centered scheme is
//! accepted only while it keeps the M-matrix property and exists for
//! diagnostics.
//!
//! `apply` evaluates the convolution through cached FFT plans; this is an
//! implementation detail verified against direct summation
//! ([`DiscreteOperator::apply_direct`]) on small grids.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::{AngularDensity, KernelSpec};
use crate::profile::drifted_power_coefficient;
use crate::quad;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriftScheme {
    Upwind,
    Central,
}

/// Assembly knobs for the 2-D stencil. The defaults match the lab setup:
/// 256 angular sectors, every radial cell resolved out to 128 cells, then a
/// 5% geometric coarsening of the radial quadrature nodes (the per-segment
/// integrals stay exact for the piecewise-linear interpolant, so this only
/// coarsens where `r^{-2}` has little mass left).
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub angular_sectors: usize,
    pub dense_radial_cells: usize,
    pub radial_growth: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            angular_sectors: 256,
            dense_radial_cells: 128,
            radial_growth: 1.05,
        }
    }
}

struct Convolver {
    dimension: usize,
    n: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
    scratch: Mutex<Vec<Complex<f64>>>,
}

/// Smallest 5-smooth number >= n (rustfft is fast for 2^a 3^b 5^c lengths).
fn next_fast_size(n: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * n {
        let mut p23 = p2;
        while p23 < 2 * n {
            let mut p235 = p23;
            while p235 < n {
                p235 *= 5;
            }
            if p235 < best {
                best = p235;
            }
            p23 *= 3;
        }
        p2 *= 2;
    }
    best.max(n)
}

impl Convolver {
    /// `weights` is the dense offset array of the convolution part of `A`
    /// (length `2n-1` in 1-D, `(2n-1)^2` in 2-D, centered).
    fn new(dimension: usize, n: usize, weights: &[f64]) -> Self {
        let len = next_fast_size(2 * n - 1);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);

        let wrap = |off: isize| -> usize {
            if off >= 0 {
                off as usize
            } else {
                (len as isize + off) as usize
            }
        };
        let span = 2 * n - 1;
        let total = if dimension == 1 { len } else { len * len };
        let mut karr = vec![Complex::new(0.0, 0.0); total];
        match dimension {
            1 => {
                for (m, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        let off = m as isize - (n as isize - 1);
                        karr[wrap(-off)].re = w;
                    }
                }
            }
            _ => {
                for my in 0..span {
                    let oy = my as isize - (n as isize - 1);
                    for mx in 0..span {
                        let w = weights[my * span + mx];
                        if w != 0.0 {
                            let ox = mx as isize - (n as isize - 1);
                            karr[wrap(-oy) * len + wrap(-ox)].re = w;
                        }
                    }
                }
            }
        }
        let mut kernel_hat = karr;
        match dimension {
            1 => fwd.process(&mut kernel_hat),
            _ => fft2(&fwd, &mut kernel_hat, len),
        }
        Self {
            dimension,
            n,
            len,
            fwd,
            inv,
            kernel_hat,
            scratch: Mutex::new(Vec::new()),
        }
    }

    /// Convolution part of `A u` (diagonal excluded); zero exterior.
    fn convolve(&self, u: &[f64], out: &mut [f64]) {
        let len = self.len;
        let n = self.n;
        let total = if self.dimension == 1 { len } else { len * len };
        let mut buf = {
            let mut guard = self.scratch.lock().unwrap();
            std::mem::take(&mut *guard)
        };
        buf.clear();
        buf.resize(total, Complex::new(0.0, 0.0));

        match self.dimension {
            1 => {
                for (j, &v) in u.iter().enumerate() {
                    buf[j].re = v;
                }
                self.fwd.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
                    *b *= *k;
                }
                self.inv.process(&mut buf);
                let scale = 1.0 / len as f64;
                for i in 0..n {
                    out[i] = buf[i].re * scale;
                }
            }
            _ => {
                for jy in 0..n {
                    for jx in 0..n {
                        buf[jy * len + jx].re = u[jy * n + jx];
                    }
                }
                fft2(&self.fwd, &mut buf, len);
                for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
                    *b *= *k;
                }
                fft2(&self.inv, &mut buf, len);
                let scale = 1.0 / (len as f64 * len as f64);
                for iy in 0..n {
                    for ix in 0..n {
                        out[iy * n + ix] = buf[iy * len + ix].re * scale;
                    }
                }
            }
        }
        *self.scratch.lock().unwrap() = buf;
    }
}

/// In-place 2-D FFT as rows then columns of a `len x len` buffer.
fn fft2(plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex<f64>], len: usize) {
    for row in buf.chunks_exact_mut(len) {
        plan.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); len];
    for x in 0..len {
        for y in 0..len {
            col[y] = buf[y * len + x];
        }
        plan.process(&mut col);
        for y in 0..len {
            buf[y * len + x] = col[y];
        }
    }
}

/// Discrete `A = -L_h + (b.grad)_h` with zero exterior condition.
pub struct DiscreteOperator {
    pub grid: Grid,
    pub kernel: KernelSpec,
    pub drift: Vec<f64>,
    pub scheme: DriftScheme,
    /// Dense offset array of the off-diagonal part (all entries <= 0);
    /// length `2N-1` (1-D) or `(2N-1)^2` (2-D), centered at offset zero.
    offdiag: Vec<f64>,
    /// Constant diagonal of `A` (nonlocal mass + far tail + upwind mass).
    diag: f64,
    /// Per-node diagonal (constant-valued; kept as a field for reporting).
    pub diagonal: Vec<f64>,
    /// Estimated relative angular quadrature error of the 2-D stencil.
    pub stencil_error_estimate: f64,
    conv: Convolver,
}

impl DiscreteOperator {
    pub fn build(
        grid: Grid,
        kernel: KernelSpec,
        drift: Vec<f64>,
        scheme: DriftScheme,
    ) -> Result<Self> {
        Self::build_with_options(grid, kernel, drift, scheme, BuildOptions::default())
    }

    pub fn build_with_options(
        grid: Grid,
        kernel: KernelSpec,
        drift: Vec<f64>,
        scheme: DriftScheme,
        opts: BuildOptions,
    ) -> Result<Self> {
        kernel.validate()?;
        if kernel.dimension != grid.dimension {
            return Err(Error::GridMismatch(format!(
                "kernel dimension {} vs grid dimension {}",
                kernel.dimension, grid.dimension
            )));
        }
        if drift.len() != grid.dimension {
            return Err(Error::GridMismatch(format!(
                "drift dimension {} vs grid dimension {}",
                drift.len(),
                grid.dimension
            )));
        }
        if drift.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("drift components must be finite".into()));
        }

        let n = grid.nodes_per_axis;
        let h = grid.spacing;
        let span = 2 * n - 1;
        let center = n - 1;

        let (mut offdiag, nonlocal_diag, stencil_error_estimate) = match grid.dimension {
            1 => {
                let (mu_p, _) = kernel.density_1d();
                let m = mu_p;
                let kmax = n - 1;
                let mut w = vec![0.0f64; span];
                let mut sum_w = 0.0;
                for k in 1..=kmax {
                    let wk = if k == 1 {
                        m * (2.0 - std::f64::consts::LN_2) / h
                    } else {
                        let kf = k as f64;
                        m * (kf * kf / (kf * kf - 1.0)).ln() / h
                    };
                    w[center + k] = -wk;
                    w[center - k] = -wk;
                    sum_w += wk;
                }
                let tail = m * ((kmax as f64 + 1.0) / kmax as f64).ln() / h;
                (w, 2.0 * sum_w + 2.0 * tail, 0.0)
            }
            _ => {
                let n_theta = opts.angular_sectors;
                if n_theta % 4 != 0 || n_theta < 16 {
                    return Err(Error::InvalidInput(
                        "angular sector count must be a multiple of 4, >= 16".into(),
                    ));
                }
                let dtheta = TAU / n_theta as f64;
                let r_max = 2.0 * 2.0f64.sqrt() * grid.half_extent;

                // radial quadrature nodes: every cell out to `dense` cells,
                // then geometric growth
                let mut radii: Vec<f64> = Vec::new();
                let dense = opts.dense_radial_cells.max(4);
                let mut l = 1usize;
                while l <= dense && (l as f64) * h < r_max {
                    radii.push(l as f64 * h);
                    l += 1;
                }
                let mut r = *radii.last().unwrap_or(&h);
                while r < r_max {
                    r = (r * opts.radial_growth).min(r_max);
                    radii.push(r);
                }
                let n_r = radii.len();

                // per-node radial coefficients gamma_l (independent of angle)
                let mut gamma = vec![0.0f64; n_r];
                gamma[0] += 1.0 / radii[0]; // singular cell, quadratic model
                for seg in 0..n_r - 1 {
                    let (ra, rb) = (radii[seg], radii[seg + 1]);
                    let t = (rb - ra) / ra;
                    let ln_ratio = t.ln_1p();
                    gamma[seg] += (t - ln_ratio) / (rb - ra);
                    gamma[seg + 1] += (ln_ratio - t / (1.0 + t)) / (rb - ra);
                }

                let mut w = vec![0.0f64; span * span];
                let mut diag_mass = 0.0f64;
                let max_off = (n - 1) as isize;
                for j in 0..n_theta {
                    let theta = dtheta * j as f64;
                    let mu_j = kernel.density_at_angle(theta);
                    let wfac = mu_j * dtheta;
                    let (dir_x, dir_y) = (theta.cos(), theta.sin());
                    for (rl, gl) in radii.iter().zip(&gamma) {
                        let g = wfac * gl;
                        diag_mass += g;
                        // bilinear deposit at p = r * dir / h, symmetrized
                        let px = rl * dir_x / h;
                        let py = rl * dir_y / h;
                        let ix = px.floor();
                        let iy = py.floor();
                        let fx = px - ix;
                        let fy = py - iy;
                        let corners = [
                            (ix as isize, iy as isize, (1.0 - fx) * (1.0 - fy)),
                            (ix as isize + 1, iy as isize, fx * (1.0 - fy)),
                            (ix as isize, iy as isize + 1, (1.0 - fx) * fy),
                            (ix as isize + 1, iy as isize + 1, fx * fy),
                        ];
                        for (qx, qy, bw) in corners {
                            if bw == 0.0 || qx.abs() > max_off || qy.abs() > max_off {
                                // offsets outside the box pair interior nodes
                                // with exterior zeros only
                                continue;
                            }
                            let half = 0.5 * g * bw;
                            let mp = (qy + max_off) as usize * span + (qx + max_off) as usize;
                            let mm = (-qy + max_off) as usize * span + (-qx + max_off) as usize;
                            w[mp] -= half;
                            w[mm] -= half;
                        }
                    }
                }
                let tail_mass: f64 = (0..n_theta)
                    .map(|j| kernel.density_at_angle(dtheta * j as f64) * dtheta / r_max)
                    .sum();

                // the dihedral symmetrization is exact for rotation-invariant
                // densities and removes rounding asymmetry of the ray sweep
                if matches!(kernel.density, AngularDensity::Constant(_)) {
                    symmetrize_dihedral(&mut w, span);
                }

                let est = angular_error_estimate(&kernel, n_theta);
                if est > 1e-3 * kernel.lambda_min {
                    return Err(Error::InvalidInput(format!(
                        "2-D stencil angular quadrature error estimate {est:.3e} exceeds 1e-3 * lambda = {:.3e}; increase angular sectors or sample the kernel more finely",
                        1e-3 * kernel.lambda_min
                    )));
                }
                (w, diag_mass + tail_mass, est)
            }
        };

        // fold the drift into the convolution offsets (it is translation
        // invariant too) and accumulate its diagonal mass
        let mut drift_diag = 0.0f64;
        {
            let idx = |ox: isize, oy: isize| -> usize {
                match grid.dimension {
                    1 => (ox + center as isize) as usize,
                    _ => (oy + center as isize) as usize * span + (ox + center as isize) as usize,
                }
            };
            for (axis, &b) in drift.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let (ex, ey): (isize, isize) = if axis == 0 { (1, 0) } else { (0, 1) };
                match scheme {
                    DriftScheme::Upwind => {
                        if b > 0.0 {
                            // backward difference: b (u_i - u_{i-1})/h
                            offdiag[idx(-ex, -ey)] -= b / h;
                            drift_diag += b / h;
                        } else {
                            // forward difference: b (u_{i+1} - u_i)/h
                            offdiag[idx(ex, ey)] += b / h;
                            drift_diag += -b / h;
                        }
                    }
                    DriftScheme::Central => {
                        offdiag[idx(ex, ey)] += b / (2.0 * h);
                        offdiag[idx(-ex, -ey)] -= b / (2.0 * h);
                    }
                }
            }
        }

        let diag = nonlocal_diag + drift_diag;
        if !(diag > 0.0) {
            return Err(Error::MMatrixViolation(format!(
                "diagonal {diag} is not positive"
            )));
        }
        // off-diagonal entries of an M-matrix must be <= 0
        if let Some((m, &v)) = offdiag
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            let off = describe_offset(m, grid.dimension, center, span);
            return Err(Error::MMatrixViolation(format!(
                "positive off-diagonal entry {v:.6e} at offset {off} (centered drift too strong for the stencil; use the upwind scheme)"
            )));
        }

        let conv = Convolver::new(grid.dimension, n, &offdiag);
        let diagonal = vec![diag; grid.node_count()];
        Ok(Self {
            grid,
            kernel,
            drift,
            scheme,
            offdiag,
            diag,
            diagonal,
            stencil_error_estimate,
            conv,
        })
    }

    pub fn diagonal_value(&self) -> f64 {
        self.diag
    }

    /// Off-diagonal convolution coefficient at an integer offset.
    pub fn offset_coefficient(&self, offset: &[isize]) -> f64 {
        let n = self.grid.nodes_per_axis;
        let center = (n - 1) as isize;
        let span = 2 * n - 1;
        match self.grid.dimension {
            1 => {
                let ox = offset[0];
                if ox.abs() > center {
                    0.0
                } else {
                    self.offdiag[(ox + center) as usize]
                }
            }
            _ => {
                let (ox, oy) = (offset[0], offset[1]);
                if ox.abs() > center || oy.abs() > center {
                    0.0
                } else {
                    self.offdiag[(oy + center) as usize * span + (ox + center) as usize]
                }
            }
        }
    }

    /// Off-diagonal entries within `||off||_inf <= radius`, as
    /// `(ox, oy, coefficient)` triples (`oy = 0` in 1-D).
    pub(crate) fn near_stencil(&self, radius: usize) -> Vec<(isize, isize, f64)> {
        let c_max = self.grid.nodes_per_axis - 1;
        let r = radius.min(c_max) as isize;
        let mut out = Vec::new();
        match self.grid.dimension {
            1 => {
                for ox in -r..=r {
                    if ox == 0 {
                        continue;
                    }
                    let c = self.offset_coefficient(&[ox]);
                    if c != 0.0 {
                        out.push((ox, 0, c));
                    }
                }
            }
            _ => {
                for oy in -r..=r {
                    for ox in -r..=r {
                        if ox == 0 && oy == 0 {
                            continue;
                        }
                        let c = self.offset_coefficient(&[ox, oy]);
                        if c != 0.0 {
                            out.push((ox, oy, c));
                        }
                    }
                }
            }
        }
        out
    }

    /// `A u` via the cached FFT convolution plus the diagonal.
    pub fn apply(&self, field: &Field) -> Result<Field> {
        self.check_field(field)?;
        let mut out = Field::zeros(self.grid);
        self.conv.convolve(&field.values, &mut out.values);
        for (o, &u) in out.values.iter_mut().zip(&field.values) {
            *o += self.diag * u;
        }
        Ok(out)
    }

    /// Convolution part only (off-diagonal sum), FFT path.
    pub(crate) fn convolve_into(&self, values: &[f64], out: &mut [f64]) {
        self.conv.convolve(values, out);
    }

    /// `A u` by direct summation over the dense offset array. Reference
    /// implementation for tests; quadratic cost, keep to small grids.
    pub fn apply_direct(&self, field: &Field) -> Result<Field> {
        self.check_field(field)?;
        let n = self.grid.nodes_per_axis as isize;
        let center = n - 1;
        let span = 2 * n - 1;
        let mut out = Field::zeros(self.grid);
        match self.grid.dimension {
            1 => {
                for i in 0..n {
                    let mut acc = self.diag * field.values[i as usize];
                    for ox in -center..=center {
                        let j = i + ox;
                        if j < 0 || j >= n {
                            continue;
                        }
                        acc += self.offdiag[(ox + center) as usize] * field.values[j as usize];
                    }
                    out.values[i as usize] = acc;
                }
            }
            _ => {
                for iy in 0..n {
                    for ix in 0..n {
                        let mut acc = self.diag * field.values[(iy * n + ix) as usize];
                        for oy in -center..=center {
                            let jy = iy + oy;
                            if jy < 0 || jy >= n {
                                continue;
                            }
                            for ox in -center..=center {
                                let jx = ix + ox;
                                if jx < 0 || jx >= n {
                                    continue;
                                }
                                let w = self.offdiag
                                    [(oy + center) as usize * span as usize + (ox + center) as usize];
                                if w != 0.0 {
                                    acc += w * field.values[(jy * n + jx) as usize];
                                }
                            }
                        }
                        out.values[(iy * n + ix) as usize] = acc;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A` applied to the all-ones field: the per-node exterior-coupling mass.
    pub fn exterior_mass(&self) -> Field {
        let ones = Field {
            grid: self.grid,
            values: vec![1.0; self.grid.node_count()],
        };
        self.apply(&ones).expect("ones field always matches the grid")
    }

    fn check_field(&self, field: &Field) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch(
                "field grid differs from operator grid".into(),
            ));
        }
        Ok(())
    }

    /// Drift term alone at a node (used to split scales in consistency
    /// reports).
    fn drift_term(&self, field: &Field, idx: usize) -> f64 {
        let n = self.grid.nodes_per_axis;
        let h = self.grid.spacing;
        let u = &field.values;
        let mut acc = 0.0;
        let coords = match self.grid.dimension {
            1 => vec![idx],
            _ => vec![idx % n, idx / n],
        };
        for (axis, &b) in self.drift.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let stride = if axis == 0 { 1usize } else { n };
            let i = coords[axis];
            let at = |j: usize| -> f64 {
                u[idx + j * stride - i * stride]
            };
            let val = match self.scheme {
                DriftScheme::Upwind => {
                    if b > 0.0 {
                        if i == 0 {
                            b * (at(i)) / h
                        } else {
                            b * (at(i) - at(i - 1)) / h
                        }
                    } else if i + 1 == n {
                        -b * at(i) / h
                    } else {
                        b * (at(i + 1) - at(i)) / h
                    }
                }
                DriftScheme::Central => {
                    let up = if i + 1 == n { 0.0 } else { at(i + 1) };
                    let down = if i == 0 { 0.0 } else { at(i - 1) };
                    b * (up - down) / (2.0 * h)
                }
            };
            acc += val;
        }
        acc
    }
}

fn describe_offset(m: usize, dimension: usize, center: usize, span: usize) -> String {
    match dimension {
        1 => format!("{}", m as isize - center as isize),
        _ => format!(
            "({}, {})",
            (m % span) as isize - center as isize,
            (m / span) as isize - center as isize
        ),
    }
}

/// Average the offset array over the dihedral group of the grid (rotations by
/// 90 degrees and reflections). Exact for rotation-invariant densities.
fn symmetrize_dihedral(w: &mut [f64], span: usize) {
    let c = ((span - 1) / 2) as isize;
    let idx = |x: isize, y: isize| -> usize { (y + c) as usize * span + (x + c) as usize };
    let half = c;
    let mut out = vec![0.0f64; w.len()];
    for oy in -half..=half {
        for ox in -half..=half {
            let images = [
                (ox, oy),
                (-oy, ox),
                (-ox, -oy),
                (oy, -ox),
                (ox, -oy),
                (-ox, oy),
                (oy, ox),
                (-oy, -ox),
            ];
            let mut s = 0.0;
            for (x, y) in images {
                s += w[idx(x, y)];
            }
            out[idx(ox, oy)] = s / 8.0;
        }
    }
    w.copy_from_slice(&out);
}

/// Estimated relative error of the equispaced angular rule on the kernel's
/// `chi`-type integrand (the angular factor the stencil integrates), taken as
/// the worst over a few probe directions of `|S_N - S_2N|`.
fn angular_error_estimate(kernel: &KernelSpec, n_theta: usize) -> f64 {
    let mut worst = 0.0f64;
    for probe in 0..4 {
        let phi = probe as f64 * 0.37;
        let sum = |m: usize| -> f64 {
            let dt = TAU / m as f64;
            (0..m)
                .map(|j| {
                    let t = dt * j as f64;
                    kernel.density_at_angle(t) * (t - phi).cos().abs() * dt
                })
                .sum()
        };
        worst = worst.max((sum(n_theta) - sum(2 * n_theta)).abs());
    }
    worst
}

/// One row of a consistency table: the corrected discrete operator applied to
/// a power profile against the exact coefficient.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConsistencyRow {
    pub x: f64,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub beta: f64,
    pub drift: f64,
    pub rows: Vec<ConsistencyRow>,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `(h, max_abs_error, max_rel_error)` per refinement level.
    pub refinement: Vec<(f64, f64, f64)>,
    /// Observed order from the last refinement pair (absolute errors).
    pub observed_order: f64,
}

/// Tail of `int_Y^inf (x + y)^beta / y^2 dy` for the zero-exterior truncation
/// correction of power profiles: adaptive on `[Y, 100 Y]` plus a binomial
/// series beyond.
pub(crate) fn power_tail_integral(x: f64, y0: f64, beta: f64) -> f64 {
    debug_assert!(y0 > 0.0 && x.abs() < y0 * 0.99);
    let t_cut = 100.0 * y0;
    let body = quad::adaptive_with_budget(
        |y| (x + y).max(0.0).powf(beta) / (y * y),
        y0,
        t_cut,
        1e-12,
        4000,
    );
    // int_T^inf (x+y)^beta y^-2 dy = sum_k C(beta,k) x^k T^{beta-1-k}/(k+1-beta)
    let mut tail = 0.0;
    let mut coeff = 1.0f64;
    let mut xk = 1.0f64;
    for k in 0..40 {
        let kf = k as f64;
        if k > 0 {
            coeff *= (beta - (kf - 1.0)) / kf;
            xk *= x;
        }
        let term = coeff * xk * t_cut.powf(beta - 1.0 - kf) / (kf + 1.0 - beta);
        tail += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    body.value + tail
}

/// Applies the operator to samples of `(x_+)^beta` (zero exterior, with the
/// truncation corrected analytically from the tail formula) and tabulates the
/// error against the exact coefficient `beta (b sin + cos)/sin * x^{beta-1}`
/// on `window`. Rebuilds at `h/2, h/4, ...` for `levels > 1` and reports the
/// observed convergence order.
///
/// The relative error is measured against the absolute-difference mass the
/// stencil applies to the profile plus the drift magnitude, so it stays
/// meaningful at `beta = gamma(b)` where the exact value is zero.
pub fn consistency_report(
    op: &DiscreteOperator,
    beta: f64,
    b: f64,
    window: (f64, f64),
    levels: usize,
) -> Result<ConsistencyReport> {
    if op.grid.dimension != 1 {
        return Err(Error::InvalidInput(
            "consistency report is defined for 1-D operators".into(),
        ));
    }
    if op.drift[0] != b {
        return Err(Error::InvalidInput(format!(
            "operator drift {} does not match requested b = {b}",
            op.drift[0]
        )));
    }
    let r_box = op.grid.half_extent;
    if window.0 >= window.1 || window.1 > r_box - op.grid.spacing {
        return Err(Error::InvalidInput(format!(
            "evaluation window ({}, {}) must sit strictly inside the box (R = {r_box})",
            window.0, window.1
        )));
    }

    let reference_coeff = drifted_power_coefficient(beta, b)?;
    let mut refinement = Vec::new();
    let mut rows_out = Vec::new();

    let mut grid = op.grid;
    for level in 0..levels.max(1) {
        let level_op = if level == 0 {
            None
        } else {
            grid = grid.refine()?;
            Some(DiscreteOperator::build(
                grid,
                op.kernel.clone(),
                op.drift.clone(),
                op.scheme,
            )?)
        };
        let the_op = level_op.as_ref().unwrap_or(op);
        let (rows, max_abs, max_rel) = consistency_rows(the_op, beta, reference_coeff, window);
        refinement.push((grid.spacing, max_abs, max_rel));
        if level == 0 {
            rows_out = rows;
        }
    }

    let observed_order = if refinement.len() >= 2 {
        let (_, e_prev, _) = refinement[refinement.len() - 2];
        let (_, e_last, _) = refinement[refinement.len() - 1];
        (e_prev / e_last).log2()
    } else {
        f64::NAN
    };

    let (max_abs_error, max_rel_error) = (refinement[0].1, refinement[0].2);
    Ok(ConsistencyReport {
        beta,
        drift: b,
        rows: rows_out,
        max_rel_error,
        max_abs_error,
        refinement,
        observed_order,
    })
}

fn consistency_rows(
    op: &DiscreteOperator,
    beta: f64,
    reference_coeff: f64,
    window: (f64, f64),
) -> (Vec<ConsistencyRow>, f64, f64) {
    let grid = op.grid;
    let n = grid.nodes_per_axis;
    let r_box = grid.half_extent;
    let profile = Field::from_fn(grid, |x| if x[0] > 0.0 { x[0].powf(beta) } else { 0.0 });
    let applied = op.apply(&profile).expect("grids match by construction");
    let (mu, _) = op.kernel.density_1d();

    let mut rows = Vec::new();
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    for i in 0..n {
        let x = grid.axis_coord(i);
        if x < window.0 || x > window.1 {
            continue;
        }
        // zero-exterior truncation correction: the profile continues beyond
        // +R, the left exterior is genuinely zero
        let corr = mu * power_tail_integral(x, r_box - x, beta);
        let value = applied.values[i] - corr;
        let reference = reference_coeff * x.powf(beta - 1.0);

        // scale: absolute-difference mass of the stencil + drift magnitude
        let mut scale = 0.0;
        let center = (n - 1) as isize;
        let ui = profile.values[i];
        for off in -center..=center {
            let j = i as isize + off;
            let uj = if (0..n as isize).contains(&j) {
                profile.values[j as usize]
            } else {
                0.0
            };
            let w = op.offset_coefficient(&[off]);
            if w != 0.0 {
                scale += w.abs() * (uj - ui).abs();
            }
        }
        scale += op.drift_term(&profile, i).abs() + corr.abs();
        let abs_error = (value - reference).abs();
        let rel_error = abs_error / scale.max(1e-300);
        max_abs = max_abs.max(abs_error);
        max_rel = max_rel.max(rel_error);
        rows.push(ConsistencyRow {
            x,
            value,
            reference,
            abs_error,
            rel_error,
        });
    }
    (rows, max_abs, max_rel)
}
