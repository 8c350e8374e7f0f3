//! Adaptive Gauss–Kronrod quadrature.
//!
//! A small worst-interval-first refinement loop around the classical 15-point
//! Kronrod / 7-point Gauss pair. This is the workhorse behind the
//! principal-value oracle in [`crate::profile`] and the normalization-constant
//! cross-checks in [`crate::kernel`]; those modules deliberately avoid the grid
//! discretization so their values can serve as independent references.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Nodes and weights of the 15-point Kronrod rule (positive abscissae) and the
// embedded 7-point Gauss rule, as tabulated in QUADPACK's dqk15.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of one quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod evaluation on `[a, b]`; returns (value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    // the embedded 7-point Gauss rule also uses the center node
    let mut gauss = WG[3] * fc;
    let mut res_abs = kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd-index Kronrod nodes coincide with the Gauss nodes
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();

    // QUADPACK error rescaling
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    let min_err = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && min_err > err {
        err = min_err;
    }
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
///
/// Splits the worst interval until the summed error estimate drops below
/// `tol` (absolute) or the interval budget is exhausted; never fails, the
/// caller inspects `QuadResult::error`. Use [`adaptive_checked`] to turn an
/// unmet tolerance into an error.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    adaptive_with_budget(f, a, b, tol, 4000)
}

pub fn adaptive_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_segments: usize,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total_value = v;
    let mut total_error = e;
    let mut evaluations = 15;
    let mut segments = 1;

    while total_error > tol && segments < max_segments {
        let worst = heap.pop().expect("heap never empty while refining");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; put it back and stop
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        segments += 1;
    }

    // Re-sum from the heap for a less pessimistic error (the incremental
    // update accumulates rounding when many segments are processed).
    let mut value = 0.0;
    let mut error = 0.0;
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    let _ = total_value;
    QuadResult {
        value,
        error,
        evaluations,
    }
}

/// Like [`adaptive`] but errors out when the tolerance was not met.
pub fn adaptive_checked<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    let r = adaptive(f, a, b, tol);
    if r.error > tol {
        Err(Error::QuadraturePrecision {
            requested: tol,
            achieved: r.error,
        })
    } else {
        Ok(r)
    }
}

/// Tail `int_T^inf (1 - cos t) / t^2 dt` by repeated integration by parts.
///
/// The constant part integrates exactly to `1/T`; the oscillatory part is
/// expanded as `int_T^inf cos(t)/t^2 dt = -sin(T)/T^2 + 2 cos(T)/T^3
/// + 6 sin(T)/T^4 - 24 cos(T)/T^5 + O(T^-5)`; with `T >= 1e3` the remainder
/// is below 1e-13.
pub fn one_minus_cos_tail(t0: f64) -> f64 {
    debug_assert!(t0 > 1.0);
    let (s, c) = t0.sin_cos();
    let inv = 1.0 / t0;
    let osc = -s * inv * inv + 2.0 * c * inv.powi(3) + 6.0 * s * inv.powi(4)
        - 24.0 * c * inv.powi(5);
    inv - osc
}

/// `int_0^inf (1 - cos(c t)) / t^2 dt`, computed by quadrature (no closed-form
/// shortcut). Scaling reduces it to the unit-frequency case.
pub fn one_minus_cos_integral(c: f64, tol: f64) -> Result<QuadResult> {
    let c = c.abs();
    if c == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    // substitute t -> t/c: integral = c * int_0^inf (1-cos s)/s^2 ds
    let t_cut = 500.0;
    let body = adaptive_with_budget(
        |s| {
            if s.abs() < 1e-4 {
                // series for (1-cos s)/s^2 near 0
                0.5 - s * s / 24.0 + s.powi(4) / 720.0
            } else {
                (1.0 - s.cos()) / (s * s)
            }
        },
        0.0,
        t_cut,
        tol / (2.0 * c),
        20_000,
    );
    let tail = one_minus_cos_tail(t_cut);
    Ok(QuadResult {
        value: c * (body.value + tail),
        error: c * body.error + 1e-13 * c,
        evaluations: body.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk15_exact_on_low_degree_polynomials() {
        // 7-point Gauss is exact to degree 13, Kronrod beyond; x^8 over [0,1]
        let r = adaptive(|x: f64| x.powi(8), 0.0, 1.0, 1e-14);
        assert!((r.value - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_power_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let r = adaptive_with_budget(|x: f64| 1.0 / x.sqrt().max(1e-300), 0.0, 1.0, 1e-10, 20_000);
        assert!((r.value - 2.0).abs() < 1e-8, "value {}", r.value);
    }

    #[test]
    fn one_minus_cos_integral_is_pi_over_two() {
        // int_0^inf (1-cos t)/t^2 dt = pi/2
        let r = one_minus_cos_integral(1.0, 1e-12).unwrap();
        assert!(
            (r.value - PI / 2.0).abs() < 1e-10,
            "value {} vs {}",
            r.value,
            PI / 2.0
        );
    }

    #[test]
    fn one_minus_cos_integral_scales_linearly() {
        let r1 = one_minus_cos_integral(1.0, 1e-12).unwrap();
        let r3 = one_minus_cos_integral(3.0, 1e-12).unwrap();
        assert!((r3.value - 3.0 * r1.value).abs() < 1e-9);
    }

    #[test]
    fn checked_quadrature_reports_achieved_error() {
        // absurd tolerance on a nasty integrand must error out with the
        // achieved error attached
        let res = adaptive_checked(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-30);
        match res {
            Err(crate::Error::QuadraturePrecision { achieved, .. }) => {
                assert!(achieved > 1e-30)
            }
            other => panic!("expected precision error, got {:?}", other.map(|r| r.value)),
        }
    }
}
