//! Kernel geometry: the exponent map `gamma`, the kernel functional `chi`,
//! direction-dependent exponents, normalization constants, and worst-case
//! exponents over directions.
//!
//! Everything here is closed-form or quadrature of smooth one-dimensional
//! integrands; no grid is involved. These values act as references for the
//! discretized operator and the free-boundary fits.

use crate::error::{Error, Result};
use crate::quad;
use crate::util::{dot, is_unit, norm};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Angular density `mu` on the unit sphere.
///
/// `Sampled` values live at `N` equispaced angles `theta_i = 2 pi i / N`
/// (dimension 2) or at `{+1, -1}` (dimension 1) and are interpreted as
/// piecewise linear in the angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AngularDensity {
    Constant(f64),
    Sampled(Vec<f64>),
}

/// Specification of an order-one kernel `mu(y/|y|)/|y|^{n+1}` together with
/// its ellipticity bounds `0 < lambda_min <= mu <= lambda_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dimension: usize,
    pub density: AngularDensity,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Relative tolerance used when checking the evenness `mu(theta) = mu(-theta)`
/// of sampled densities.
const EVENNESS_TOL: f64 = 1e-12;

/// Default number of quadrature samples on the circle (split into panels at
/// the kinks of `|theta . e|` and at the sample angles of `mu`).
pub const CHI_QUADRATURE_SAMPLES: usize = 4096;

impl KernelSpec {
    /// The fractional-Laplacian kernel: constant density `c_{n,1/2}`,
    /// normalized so that `chi` is identically one.
    pub fn fractional(dimension: usize) -> Result<Self> {
        let c = normalization_constant(dimension)?;
        Self::constant(dimension, c)
    }

    pub fn constant(dimension: usize, value: f64) -> Result<Self> {
        let spec = Self {
            dimension,
            density: AngularDensity::Constant(value),
            lambda_min: value,
            lambda_max: value,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sampled(
        dimension: usize,
        values: Vec<f64>,
        lambda_min: f64,
        lambda_max: f64,
    ) -> Result<Self> {
        let spec = Self {
            dimension,
            density: AngularDensity::Sampled(values),
            lambda_min,
            lambda_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        if !(self.lambda_min > 0.0) || !self.lambda_min.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {}",
                self.lambda_min
            )));
        }
        if self.lambda_max < self.lambda_min || !self.lambda_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Lambda = {} must be finite and >= lambda = {}",
                self.lambda_max, self.lambda_min
            )));
        }
        match &self.density {
            AngularDensity::Constant(c) => {
                if !c.is_finite() || *c < self.lambda_min || *c > self.lambda_max {
                    return Err(Error::InvalidInput(format!(
                        "constant density {} outside [{}, {}]",
                        c, self.lambda_min, self.lambda_max
                    )));
                }
            }
            AngularDensity::Sampled(values) => {
                let n = values.len();
                if n < 2 || n % 2 != 0 {
                    return Err(Error::InvalidInput(format!(
                        "sampled density needs an even number (>= 2) of samples, got {n}"
                    )));
                }
                if self.dimension == 1 && n != 2 {
                    return Err(Error::InvalidInput(
                        "dimension 1 admits exactly two samples (theta = +1, -1)".into(),
                    ));
                }
                for (i, v) in values.iter().enumerate() {
                    if !v.is_finite() || *v < self.lambda_min || *v > self.lambda_max {
                        return Err(Error::InvalidInput(format!(
                            "sample mu[{i}] = {v} outside [{}, {}]",
                            self.lambda_min, self.lambda_max
                        )));
                    }
                    let j = (i + n / 2) % n;
                    let (a, b) = (values[i], values[j]);
                    if (a - b).abs() > EVENNESS_TOL * a.abs().max(1.0) {
                        return Err(Error::InvalidInput(format!(
                            "density not even: mu[{i}] = {a} vs mu[{j}] = {b}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Piecewise-linear evaluation of `mu` at angle `theta` (dimension 2).
    pub fn density_at_angle(&self, theta: f64) -> f64 {
        match &self.density {
            AngularDensity::Constant(c) => *c,
            AngularDensity::Sampled(values) => {
                let n = values.len();
                let step = TAU / n as f64;
                let t = theta.rem_euclid(TAU) / step;
                let i = (t.floor() as usize).min(n - 1);
                let frac = t - i as f64;
                values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
            }
        }
    }

    /// Density on the two-point sphere in dimension 1: `(mu(+1), mu(-1))`.
    pub fn density_1d(&self) -> (f64, f64) {
        match &self.density {
            AngularDensity::Constant(c) => (*c, *c),
            AngularDensity::Sampled(values) => (values[0], values[1]),
        }
    }
}

/// The exponent map `gamma(t) = 1/2 + arctan(t)/pi`, strictly increasing from
/// 0 to 1.
pub fn gamma_exponent(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("gamma argument not finite: {t}")));
    }
    Ok(0.5 + t.atan() / PI)
}

/// Result of a `chi` quadrature: value and estimated quadrature error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiEstimate {
    pub value: f64,
    pub quadrature_error: f64,
}

/// The kernel functional `chi(e) = (pi/2) int_{S^{n-1}} |theta . e| mu(theta) dtheta`.
///
/// Dimension 1 is the exact two-point sum; dimension 2 splits the circle at
/// the two kinks of `|theta . e|` and at the sample angles of `mu`, applies
/// the composite trapezoid at `N` and `2N` points per panel and Richardson
/// extrapolation, and reports `|T_{2N} - T_N| / 3` as the quadrature error.
pub fn chi(kernel: &KernelSpec, e: &[f64]) -> Result<ChiEstimate> {
    chi_with_samples(kernel, e, CHI_QUADRATURE_SAMPLES)
}

pub fn chi_with_samples(kernel: &KernelSpec, e: &[f64], samples: usize) -> Result<ChiEstimate> {
    kernel.validate()?;
    if e.len() != kernel.dimension {
        return Err(Error::GridMismatch(format!(
            "direction has dimension {}, kernel has {}",
            e.len(),
            kernel.dimension
        )));
    }
    if !is_unit(e, 1e-12) {
        return Err(Error::InvalidInput(format!(
            "direction must be a unit vector, |e| = {}",
            norm(e)
        )));
    }
    match kernel.dimension {
        1 => {
            let (mp, mm) = kernel.density_1d();
            Ok(ChiEstimate {
                value: FRAC_PI_2 * (mp + mm),
                quadrature_error: 0.0,
            })
        }
        2 => {
            let phi = e[1].atan2(e[0]);
            let g = |theta: f64| kernel.density_at_angle(theta) * (theta - phi).cos().abs();
            let mut breaks: Vec<f64> = vec![
                (phi + FRAC_PI_2).rem_euclid(TAU),
                (phi - FRAC_PI_2).rem_euclid(TAU),
            ];
            if let AngularDensity::Sampled(values) = &kernel.density {
                let n = values.len();
                for i in 0..n {
                    breaks.push(TAU * i as f64 / n as f64);
                }
            } else {
                breaks.push(0.0);
            }
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

            let mut value = 0.0;
            let mut err = 0.0;
            let m = breaks.len();
            for i in 0..m {
                let a = breaks[i];
                let b = if i + 1 < m { breaks[i + 1] } else { breaks[0] + TAU };
                let len = b - a;
                if len < 1e-14 {
                    continue;
                }
                let sub = ((len / TAU * samples as f64).ceil() as usize).max(2);
                let t1 = trapezoid(&g, a, b, sub);
                let t2 = trapezoid(&g, a, b, 2 * sub);
                value += t2 + (t2 - t1) / 3.0;
                err += (t2 - t1).abs() / 3.0;
            }
            Ok(ChiEstimate {
                value: FRAC_PI_2 * value,
                quadrature_error: FRAC_PI_2 * err + 1e-14 * value.abs(),
            })
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn trapezoid<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + h * i as f64);
    }
    s * h
}

/// `chi` of the unit density (`mu = 1`): `pi` in dimension 1, `2 pi` in
/// dimension 2. Used for the ellipticity sandwich
/// `lambda * chi_unit <= chi(e) <= Lambda * chi_unit`.
pub fn chi_unit(dimension: usize) -> Result<f64> {
    match dimension {
        1 => Ok(PI),
        2 => Ok(2.0 * PI),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Direction-dependent free-boundary exponent
/// `1/2 + arctan( b.nu / chi(nu) ) / pi` for a unit normal `nu`.
pub fn tilde_gamma(kernel: &KernelSpec, b: &[f64], nu: &[f64]) -> Result<f64> {
    if b.len() != kernel.dimension {
        return Err(Error::GridMismatch(format!(
            "drift has dimension {}, kernel has {}",
            b.len(),
            kernel.dimension
        )));
    }
    let chi_nu = chi(kernel, nu)?;
    gamma_exponent(dot(b, nu) / chi_nu.value)
}

/// Normalization constant `c_{n,1/2}` of the half-Laplacian, computed through
/// the polar-coordinates identity `c_{n,1/2}^{-1} = (pi/2) int_{S^{n-1}} |theta_1| dtheta`.
///
/// With this constant, the kernel `c_{n,1/2}/|y|^{n+1}` has Fourier symbol
/// `|xi|` and `chi` is identically one. See [`defining_integral`] for the
/// independent cross-check by direct quadrature of `int (1-cos x_1)/|x|^{n+1} dx`.
pub fn normalization_constant(dimension: usize) -> Result<f64> {
    match dimension {
        1 => Ok(1.0 / PI),
        2 => {
            // (pi/2) * int_0^{2pi} |cos theta| dtheta, by the same panel rule
            // chi uses (kinks at pi/2 and 3pi/2); the integral is 4 up to
            // rounding, giving c = 1/(2 pi).
            let g = |theta: f64| theta.cos().abs();
            let mut total = 0.0;
            for (a, b) in [
                (0.0, FRAC_PI_2),
                (FRAC_PI_2, 3.0 * FRAC_PI_2),
                (3.0 * FRAC_PI_2, TAU),
            ] {
                let sub = ((b - a) / TAU * CHI_QUADRATURE_SAMPLES as f64).ceil() as usize;
                let t1 = trapezoid(&g, a, b, sub);
                let t2 = trapezoid(&g, a, b, 2 * sub);
                total += t2 + (t2 - t1) / 3.0;
            }
            Ok(1.0 / (FRAC_PI_2 * total))
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Direct adaptive quadrature of the defining integral
/// `int_{R^n} (1 - cos x_1) / |x|^{n+1} dx`, the reciprocal of `c_{n,1/2}`.
///
/// Kept independent of [`normalization_constant`]: the radial factor is
/// integrated numerically (plus an integration-by-parts tail), never through
/// the closed-form value `pi/2`.
pub fn defining_integral(dimension: usize, tol: f64) -> Result<f64> {
    match dimension {
        1 => {
            // int_R (1-cos x)/x^2 dx = 2 int_0^inf
            Ok(2.0 * quad::one_minus_cos_integral(1.0, tol)?.value)
        }
        2 => {
            // polar: int_0^{2pi} [ int_0^inf (1-cos(r cos theta))/r^2 dr ] dtheta.
            // The radial factor scales linearly in |cos theta| by the
            // substitution r -> r/|cos theta|; the base integral is evaluated
            // once by quadrature plus an integration-by-parts tail, never
            // through its closed-form value.
            let base = quad::one_minus_cos_integral(1.0, tol * 0.1)?.value;
            let inner = |theta: f64| theta.cos().abs() * base;
            let mut total = 0.0;
            for (a, b) in [
                (0.0, FRAC_PI_2),
                (FRAC_PI_2, 3.0 * FRAC_PI_2),
                (3.0 * FRAC_PI_2, TAU),
            ] {
                let r = quad::adaptive_checked(inner, a, b, tol)?;
                total += r.value;
            }
            Ok(total)
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Bundle of exponent predictions for one kernel and drift; produced by
/// [`min_gamma`]. `gamma_value`, `chi_value` and `tilde_gamma` describe the
/// minimizing direction.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentPrediction {
    /// `gamma(b.e / chi(e))` at the minimizing direction (equals `gamma_minus`).
    pub gamma_value: f64,
    /// `chi` at the minimizing direction.
    pub chi_value: f64,
    /// Predicted free-boundary exponent for a normal along the minimizing
    /// direction.
    pub tilde_gamma: f64,
    /// `1/2 - arctan(|b|)/pi`, the fractional-Laplacian worst case.
    pub gamma_b: f64,
    /// `inf_e gamma(b.e / chi(e))` over unit directions.
    pub gamma_minus: f64,
    /// Direction achieving the infimum.
    pub min_direction: Vec<f64>,
}

/// Worst-case exponents over directions: dense directional scan (two
/// directions in dimension 1, `>= 4096` angles in dimension 2) refined by
/// golden-section search to 1e-10 in angle.
pub fn min_gamma(kernel: &KernelSpec, b: &[f64]) -> Result<ExponentPrediction> {
    kernel.validate()?;
    if b.len() != kernel.dimension {
        return Err(Error::GridMismatch(format!(
            "drift has dimension {}, kernel has {}",
            b.len(),
            kernel.dimension
        )));
    }
    let gamma_b = gamma_exponent(-norm(b))?;

    let (t_min, e_min) = match kernel.dimension {
        1 => {
            let mut best = (f64::INFINITY, vec![1.0]);
            for e in [[1.0], [-1.0]] {
                let t = dot(b, &e) / chi(kernel, &e)?.value;
                if t < best.0 {
                    best = (t, e.to_vec());
                }
            }
            best
        }
        _ => {
            let ratio = |phi: f64| -> Result<f64> {
                let e = [phi.cos(), phi.sin()];
                Ok(dot(b, &e) / chi(kernel, &e)?.value)
            };
            let n_scan = 4096;
            let mut best_phi = 0.0;
            let mut best_t = f64::INFINITY;
            for i in 0..n_scan {
                let phi = TAU * i as f64 / n_scan as f64;
                let t = ratio(phi)?;
                if t < best_t {
                    best_t = t;
                    best_phi = phi;
                }
            }
            // golden-section refinement inside the bracketing scan cell
            let dphi = TAU / n_scan as f64;
            let (mut a, mut c) = (best_phi - dphi, best_phi + dphi);
            let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
            let mut x1 = c - inv_phi * (c - a);
            let mut x2 = a + inv_phi * (c - a);
            let mut f1 = ratio(x1)?;
            let mut f2 = ratio(x2)?;
            while c - a > 1e-10 {
                if f1 < f2 {
                    c = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = c - inv_phi * (c - a);
                    f1 = ratio(x1)?;
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + inv_phi * (c - a);
                    f2 = ratio(x2)?;
                }
            }
            let phi = 0.5 * (a + c);
            let t = ratio(phi)?.min(best_t);
            (t, vec![phi.cos(), phi.sin()])
        }
    };

    let chi_min = chi(kernel, &e_min)?.value;
    let gamma_min = gamma_exponent(t_min)?;
    Ok(ExponentPrediction {
        gamma_value: gamma_min,
        chi_value: chi_min,
        tilde_gamma: gamma_min,
        gamma_b,
        gamma_minus: gamma_min,
        min_direction: e_min,
    })
}
