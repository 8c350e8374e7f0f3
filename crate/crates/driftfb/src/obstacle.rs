//! Synthetic obstacle families and problem instances.
//!
//! Obstacles are bounded, compactly supported in the positive part, and at
//! least C^{1,1}. The smooth bump family is C-infinity; the concave-core
//! family is a downward paraboloid smoothly saturated below zero, so that
//! `(Laplacian + d^2/db^2) phi <= 0` holds wherever `phi > 0` (the
//! nondegeneracy hypothesis).

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::KernelSpec;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Obstacle {
    /// `a exp(1 - 1/(1 - |x-c|^2/rho^2))` on `|x-c| < rho`, zero outside.
    Bump {
        height: f64,
        radius: f64,
        center: Vec<f64>,
    },
    /// `a - kappa |x-c|^2` where positive, smoothly clamped to `-2a` below;
    /// concave on its positivity set.
    ConcaveCore {
        height: f64,
        curvature: f64,
        center: Vec<f64>,
    },
    /// No positive obstacle region (the solution is identically zero).
    None,
}

impl Obstacle {
    pub fn bump(height: f64, radius: f64, center: Vec<f64>) -> Self {
        Obstacle::Bump {
            height,
            radius,
            center,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Obstacle::Bump {
                height,
                radius,
                center,
            } => {
                let s = dist_sq(x, center) / (radius * radius);
                if s < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
            Obstacle::ConcaveCore {
                height,
                curvature,
                center,
            } => {
                let t = height - curvature * dist_sq(x, center);
                let a = *height;
                if t >= -a {
                    t
                } else {
                    // C^{1,1} saturation toward -2a
                    -a - a * (1.0 - (-(-t - a) / a).exp())
                }
            }
            Obstacle::None => -1.0,
        }
    }

    /// Radius of the positivity set around the center (`rho`).
    pub fn support_radius(&self) -> f64 {
        match self {
            Obstacle::Bump { radius, .. } => *radius,
            Obstacle::ConcaveCore {
                height, curvature, ..
            } => (height / curvature).sqrt(),
            Obstacle::None => 0.0,
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Obstacle::Bump { center, .. } | Obstacle::ConcaveCore { center, .. } => center,
            Obstacle::None => &[],
        }
    }

    pub fn max_height(&self) -> f64 {
        match self {
            Obstacle::Bump { height, .. } | Obstacle::ConcaveCore { height, .. } => *height,
            Obstacle::None => 0.0,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            Obstacle::None => Ok(()),
            Obstacle::Bump {
                height,
                radius,
                center,
            } => {
                if !(*height > 0.0) || !(*radius > 0.0) {
                    return Err(Error::InvalidInput(
                        "bump height and radius must be positive".into(),
                    ));
                }
                check_support(grid, center, *radius)
            }
            Obstacle::ConcaveCore {
                height,
                curvature,
                center,
            } => {
                if !(*height > 0.0) || !(*curvature > 0.0) {
                    return Err(Error::InvalidInput(
                        "concave-core height and curvature must be positive".into(),
                    ));
                }
                check_support(grid, center, (height / curvature).sqrt())
            }
        }
    }
}

fn dist_sq(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
}

fn check_support(grid: &Grid, center: &[f64], rho: f64) -> Result<()> {
    if center.len() != grid.dimension {
        return Err(Error::GridMismatch(format!(
            "obstacle center dimension {} vs grid dimension {}",
            center.len(),
            grid.dimension
        )));
    }
    let r = grid.half_extent;
    if rho > r / 3.0 {
        return Err(Error::InvalidInput(format!(
            "obstacle support radius {rho} exceeds R/3 = {} (truncation box too small)",
            r / 3.0
        )));
    }
    for &c in center {
        if c.abs() + rho > 2.0 * r / 3.0 {
            return Err(Error::InvalidInput(format!(
                "obstacle positivity set must stay within two thirds of the box (center {c}, rho {rho}, R {r})"
            )));
        }
    }
    Ok(())
}

/// One obstacle-problem instance.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub kernel: KernelSpec,
    pub drift: Vec<f64>,
    pub obstacle: Obstacle,
}

impl ProblemSpec {
    pub fn new(grid: Grid, kernel: KernelSpec, drift: Vec<f64>, obstacle: Obstacle) -> Result<Self> {
        kernel.validate()?;
        if kernel.dimension != grid.dimension || drift.len() != grid.dimension {
            return Err(Error::GridMismatch(
                "kernel/drift dimension must match the grid".into(),
            ));
        }
        obstacle.validate(&grid)?;
        Ok(Self {
            grid,
            kernel,
            drift,
            obstacle,
        })
    }

    /// Obstacle sampled on the grid.
    pub fn obstacle_field(&self) -> Field {
        Field::from_fn(self.grid, |x| self.obstacle.eval(x))
    }

    /// Same problem on the once-refined grid.
    pub fn refine(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(
            self.grid.refine()?,
            self.kernel.clone(),
            self.drift.clone(),
            self.obstacle.clone(),
        )
    }
}
