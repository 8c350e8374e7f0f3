//! Flat `key = value` experiment configuration with dotted sections.
//!
//! The format is line-based and diff-friendly: `#` starts a comment, values
//! are scalars or comma-separated lists, keys use dotted sections
//! (`grid.h`, `kernel.kind`, ...). Everything is validated eagerly against
//! the module invariants before any compute starts; the raw key/value map is
//! echoed into the JSON run manifest.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::KernelSpec;
use crate::obstacle::Obstacle;
use crate::operator::DriftScheme;
use crate::solver::{InitialGuess, SolverParams};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Solve,
    SweepDrift,
    VerifyIdentity,
    Chi,
    Barrier,
    Convergence,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Self::Solve),
            "sweep-drift" => Ok(Self::SweepDrift),
            "verify-identity" => Ok(Self::VerifyIdentity),
            "chi" => Ok(Self::Chi),
            "barrier" => Ok(Self::Barrier),
            "convergence" => Ok(Self::Convergence),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::SweepDrift => "sweep-drift",
            Self::VerifyIdentity => "verify-identity",
            Self::Chi => "chi",
            Self::Barrier => "barrier",
            Self::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierConfig {
    /// "half-space" or "ball".
    pub shape: String,
    pub normal: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub delta: f64,
    pub kappas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub dimension: usize,
    pub grid_h: f64,
    pub grid_r: f64,
    pub kernel: KernelSpec,
    pub drift: Vec<f64>,
    pub drift_values: Vec<f64>,
    pub scheme: DriftScheme,
    pub obstacle: Obstacle,
    pub solver: SolverParams,
    pub continuation: bool,
    pub fit_r_min_cells: usize,
    pub fit_tolerance: f64,
    pub sum_rule_tolerance: f64,
    pub identity_betas: Vec<f64>,
    pub identity_drifts: Vec<f64>,
    pub identity_xs: Vec<f64>,
    pub identity_precision: f64,
    pub chi_directions: usize,
    pub barrier: BarrierConfig,
    pub convergence_levels: usize,
    pub convergence_check_r: bool,
    pub workers: usize,
    /// Raw key/value pairs, echoed into the manifest.
    pub raw: BTreeMap<String, String>,
}

/// Hard node budget: grids beyond this are refused up front.
pub const MAX_NODES: usize = 1 << 22;

struct Map {
    entries: BTreeMap<String, String>,
}

impl Map {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: expected a number, got '{s}'"))),
        }
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))?
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: expected a number")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: expected an integer, got '{s}'"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(s) => Err(Error::Config(format!("{key}: expected a boolean, got '{s}'"))),
        }
    }

    fn list_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => parse_list(key, s),
        }
    }
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: bad list element '{}'", p.trim())))
        })
        .collect()
}

/// Parses and validates a config from text. `scenario_override` comes from
/// the CLI subcommand; when the file also declares a scenario they must
/// agree.
pub fn parse_config(text: &str, scenario_override: Option<Scenario>) -> Result<ExperimentConfig> {
    let mut entries = BTreeMap::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if entries.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("duplicate key '{key}'")));
        }
    }
    let map = Map { entries };

    let scenario = match (map.get("scenario"), scenario_override) {
        (Some(s), Some(over)) => {
            let declared = Scenario::parse(s)?;
            if declared != over {
                return Err(Error::Config(format!(
                    "config declares scenario '{}' but the subcommand is '{}'",
                    declared.name(),
                    over.name()
                )));
            }
            declared
        }
        (Some(s), None) => Scenario::parse(s)?,
        (None, Some(over)) => over,
        (None, None) => return Err(Error::Config("no scenario given".into())),
    };

    let dimension = map.usize_or("kernel.dimension", 1)?;
    if dimension != 1 && dimension != 2 {
        return Err(Error::Config(format!("kernel.dimension must be 1 or 2, got {dimension}")));
    }

    let kernel = match map.get("kernel.kind").unwrap_or("fractional") {
        "fractional" => KernelSpec::fractional(dimension),
        "constant" => {
            let v = map.f64_req("kernel.value")?;
            KernelSpec::constant(dimension, v)
        }
        "sampled" => {
            let values = map.list_or("kernel.values", vec![])?;
            let lo = map.f64_req("kernel.lambda")?;
            let hi = map.f64_req("kernel.Lambda")?;
            KernelSpec::sampled(dimension, values, lo, hi)
        }
        other => Err(Error::Config(format!("kernel.kind: unknown kind '{other}'"))),
    }
    .map_err(|e| Error::Config(format!("kernel: {e}")))?;

    let grid_h = map.f64_or("grid.h", 1.0 / 256.0)?;
    let grid_r = map.f64_or("grid.R", 8.0)?;
    let grid = Grid::new(dimension, grid_h, grid_r).map_err(|e| Error::Config(format!("grid: {e}")))?;
    if grid.node_count() > MAX_NODES {
        return Err(Error::Config(format!(
            "grid has {} nodes, beyond the {} budget",
            grid.node_count(),
            MAX_NODES
        )));
    }

    let drift = map.list_or("drift.b", vec![0.0; dimension])?;
    if drift.len() != dimension {
        return Err(Error::Config(format!(
            "drift.b needs {dimension} component(s), got {}",
            drift.len()
        )));
    }
    let drift_values = map.list_or("drift.values", vec![])?;
    let scheme = match map.get("drift.scheme").unwrap_or("upwind") {
        "upwind" => DriftScheme::Upwind,
        "central" => DriftScheme::Central,
        other => return Err(Error::Config(format!("drift.scheme: unknown '{other}'"))),
    };

    let center = map.list_or("obstacle.center", vec![0.0; dimension])?;
    if center.len() != dimension {
        return Err(Error::Config("obstacle.center dimension mismatch".into()));
    }
    let obstacle = match map.get("obstacle.family").unwrap_or("bump") {
        "bump" => Obstacle::Bump {
            height: map.f64_or("obstacle.height", 1.0)?,
            radius: map.f64_or("obstacle.radius", 1.0)?,
            center,
        },
        "concave-core" => Obstacle::ConcaveCore {
            height: map.f64_or("obstacle.height", 1.0)?,
            curvature: map.f64_or("obstacle.curvature", 1.0)?,
            center,
        },
        "none" => Obstacle::None,
        other => return Err(Error::Config(format!("obstacle.family: unknown '{other}'"))),
    };
    // fail fast on the obstacle/grid interplay
    crate::obstacle::ProblemSpec::new(grid, kernel.clone(), drift.clone(), obstacle.clone())
        .map_err(|e| Error::Config(format!("problem: {e}")))?;

    let defaults = SolverParams::default_for_dimension(dimension);
    let solver = SolverParams {
        omega: map.f64_or("solver.omega", 1.5)?,
        tol: map.f64_or("solver.tol", 1e-10)?,
        max_sweeps: map.usize_or("solver.max_iter", defaults.max_sweeps)?,
        near_radius: map.usize_or("solver.near_radius", defaults.near_radius)?,
        far_refresh_every: map.usize_or("solver.far_refresh", defaults.far_refresh_every)?,
        divergence_patience: map.usize_or("solver.divergence_patience", 100)?,
        initial_guess: InitialGuess::ObstaclePositivePart,
    };
    if !(solver.omega > 0.0 && solver.omega < 2.0) {
        return Err(Error::Config(format!(
            "solver.omega must lie in (0,2), got {}",
            solver.omega
        )));
    }

    let barrier = BarrierConfig {
        shape: map.get("barrier.shape").unwrap_or("half-space").to_string(),
        normal: map.list_or("barrier.normal", {
            let mut v = vec![0.0; dimension];
            v[0] = 1.0;
            v
        })?,
        center: map.list_or("barrier.center", vec![0.0; dimension])?,
        radius: map.f64_or("barrier.radius", grid_r / 4.0)?,
        delta: map.f64_or("barrier.delta", 32.0 * grid_h)?,
        kappas: map.list_or(
            "barrier.kappas",
            (1..=9).map(|i| i as f64 / 10.0).collect(),
        )?,
    };
    if barrier.shape != "half-space" && barrier.shape != "ball" {
        return Err(Error::Config(format!(
            "barrier.shape: unknown '{}'",
            barrier.shape
        )));
    }

    Ok(ExperimentConfig {
        scenario,
        barrier,
        seed: map.usize_or("seed", 42)? as u64,
        out_dir: map.get("out_dir").map(PathBuf::from),
        dimension,
        grid_h,
        grid_r,
        kernel,
        drift,
        drift_values,
        scheme,
        obstacle,
        solver,
        continuation: map.bool_or("solver.continuation", true)?,
        fit_r_min_cells: map.usize_or("fit.r_min_cells", 8)?,
        fit_tolerance: map.f64_or("fit.tolerance", 0.05)?,
        sum_rule_tolerance: map.f64_or("sum_rule.tolerance", 0.08)?,
        identity_betas: map.list_or("identity.betas", vec![0.25, 0.5, 0.75])?,
        identity_drifts: map.list_or("identity.drifts", vec![-1.0, 0.0, 1.0])?,
        identity_xs: map.list_or("identity.xs", vec![0.5, 1.0, 2.0, 4.0])?,
        identity_precision: map.f64_or("identity.precision", 1e-9)?,
        chi_directions: map.usize_or("chi.directions", 16)?,
        convergence_levels: map.usize_or("convergence.levels", if dimension == 1 { 3 } else { 2 })?,
        convergence_check_r: map.bool_or("convergence.check_R", true)?,
        workers: map.usize_or("workers", 1)?,
        raw: map.entries,
    })
}

pub fn load_config(path: &Path, scenario_override: Option<Scenario>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, scenario_override)
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dimension, self.grid_h, self.grid_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_solve_config() {
        let cfg = parse_config(
            "scenario = solve\ngrid.h = 0.03125\ngrid.R = 8\ndrift.b = 1.0\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::Solve);
        assert_eq!(cfg.dimension, 1);
        assert_eq!(cfg.drift, vec![1.0]);
        assert_eq!(cfg.grid().unwrap().nodes_per_axis, 513);
    }

    #[test]
    fn comments_lists_and_sections() {
        let cfg = parse_config(
            "# full line comment\nscenario = sweep-drift\ndrift.values = 0, 0.5, 1 # trailing\ngrid.h = 0.0625\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.drift_values, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_invalid_kernels_before_compute() {
        // odd sampled count fails fast
        let err = parse_config(
            "scenario = chi\nkernel.kind = sampled\nkernel.dimension = 2\nkernel.values = 1, 2, 1\nkernel.lambda = 0.5\nkernel.Lambda = 3\ngrid.h = 0.125\ngrid.R = 4\n",
            None,
        );
        assert!(matches!(err, Err(Error::Config(_))), "{err:?}");
    }

    #[test]
    fn scenario_override_must_agree() {
        let err = parse_config("scenario = solve\ngrid.h = 0.125\n", Some(Scenario::Chi));
        assert!(matches!(err, Err(Error::Config(_))));
        let ok = parse_config("grid.h = 0.125\n", Some(Scenario::Chi)).unwrap();
        assert_eq!(ok.scenario, Scenario::Chi);
    }

    #[test]
    fn node_budget_guardrail() {
        // 2-D grid with ~16.8M nodes is refused
        let err = parse_config(
            "scenario = solve\nkernel.dimension = 2\ngrid.h = 0.001953125\ngrid.R = 4\ndrift.b = 0, 0\nobstacle.center = 0, 0\n",
            None,
        );
        assert!(matches!(err, Err(Error::Config(_))), "{err:?}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config("scenario = solve\ngrid.h = 0.5\ngrid.h = 0.25\n", None);
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
