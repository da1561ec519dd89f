//! Solver configuration: a strict TOML document with documented defaults.
//!
//! ```toml
//! statistics = "boson"
//! tau = 100.0
//!
//! [grid]
//! nx = 64
//! p_max = 32.0
//!
//! [boundary]
//! kind = "slab_example"
//! c_left = 1.0
//! c_right = 1.0
//! r1 = 10.0
//! r2 = 11.0
//! ```

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::boundary::BoundaryData;
use crate::equilibrium::{EquilibriumParams, Vec3};
use crate::error::{validation, Error, Result};
use crate::fixed_point::{InitialGuess, LambdaPolicy, ProbeOptions, SolverOptions};
use crate::grid::{GridSpec, PhaseGrid};
use crate::stats::{QuadratureSpec, Statistics};

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "QBGK_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    /// Number of dyadic `p₁` levels below `p_max`.
    #[serde(default = "default_p1_levels")]
    pub p1_levels: usize,
    #[serde(default = "default_order")]
    pub p1_order: usize,
    /// Transverse panel ends as fractions of `p_max`, ascending, ending at 1.
    #[serde(default = "default_fractions")]
    pub transverse_fractions: Vec<f64>,
    #[serde(default = "default_order")]
    pub transverse_order: usize,
}

fn default_nx() -> usize {
    64
}
fn default_p_max() -> f64 {
    8.0
}
fn default_p1_levels() -> usize {
    6
}
fn default_order() -> usize {
    7
}
fn default_fractions() -> Vec<f64> {
    vec![0.0625, 0.125, 0.25, 0.5, 1.0]
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_seed() -> u64 {
    42
}
fn default_probe_count() -> usize {
    6
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: default_nx(),
            p_max: default_p_max(),
            p1_levels: default_p1_levels(),
            p1_order: default_order(),
            transverse_fractions: default_fractions(),
            transverse_order: default_order(),
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        if self.transverse_fractions.is_empty() {
            return Err(validation("grid.transverse_fractions", "must not be empty"));
        }
        let f = &self.transverse_fractions;
        if f.iter().any(|v| !(*v > 0.0)) || f.windows(2).any(|w| w[1] <= w[0]) {
            return Err(validation(
                "grid.transverse_fractions",
                "must be positive and strictly ascending",
            ));
        }
        if (f[f.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(validation("grid.transverse_fractions", "must end at 1"));
        }
        if self.p1_order == 0 {
            return Err(validation("grid.p1_order", "must be positive"));
        }
        if self.transverse_order == 0 {
            return Err(validation("grid.transverse_order", "must be positive"));
        }
        let spec = GridSpec::dyadic(
            self.nx,
            self.p_max,
            self.p1_levels,
            self.p1_order,
            f,
            self.transverse_order,
        );
        spec.validate()?;
        Ok(spec)
    }
}

/// Inflow data as written in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    SlabExample {
        c_left: f64,
        c_right: f64,
        r1: f64,
        r2: f64,
    },
    /// Traces of the global equilibrium `1/(e^{a|p-u|²+c} ± 1)`.
    Equilibrium {
        a: f64,
        c: f64,
        #[serde(default)]
        drift: Vec3,
    },
    /// CSV with header `p1,p2,p3,f`, one row per momentum node of the
    /// configured grid in index order.
    Gridded { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    statistics: Statistics,
    tau: f64,
    boundary: BoundaryConfig,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    #[serde(default = "default_max_iters")]
    max_iters: usize,
    #[serde(default)]
    lambda_policy: LambdaPolicy,
    #[serde(default)]
    initial_guess: InitialGuess,
    #[serde(default = "default_true")]
    check_assumptions: bool,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_probe_count")]
    probe_count: usize,
    #[serde(default)]
    quadrature: Option<QuadratureSpec>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub statistics: Statistics,
    pub tau: f64,
    pub grid: GridConfig,
    pub tolerance: f64,
    pub max_iters: usize,
    pub boundary: BoundaryConfig,
    pub lambda_policy: LambdaPolicy,
    pub initial_guess: InitialGuess,
    /// Refuse to solve when the boundary data fails a hypothesis check.
    pub check_assumptions: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub probe_count: usize,
    pub quadrature: QuadratureSpec,
    /// Directory relative paths in the config are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let config = SolverConfig {
        statistics: raw.statistics,
        tau: raw.tau,
        grid: raw.grid,
        tolerance: raw.tolerance,
        max_iters: raw.max_iters,
        boundary: raw.boundary,
        lambda_policy: raw.lambda_policy,
        initial_guess: raw.initial_guess,
        check_assumptions: raw.check_assumptions,
        output_dir: raw.output_dir,
        seed: raw.seed,
        probe_count: raw.probe_count,
        quadrature: raw.quadrature.unwrap_or_default(),
        base_dir: PathBuf::from("."),
    };
    config.validate()?;
    Ok(config)
}

/// Reads a config file; relative paths inside it resolve against its
/// directory.
pub fn load_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(config)
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(validation(field, format!("must be a positive finite number, got {v}")));
    }
    Ok(())
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        positive("tau", self.tau)?;
        positive("tolerance", self.tolerance)?;
        if self.max_iters == 0 {
            return Err(validation("max_iters", "must be positive"));
        }
        if self.probe_count == 0 {
            return Err(validation("probe_count", "must be positive"));
        }
        self.quadrature.validate()?;
        self.grid.spec()?;
        match &self.boundary {
            BoundaryConfig::SlabExample {
                c_left,
                c_right,
                r1,
                r2,
            } => {
                BoundaryData::slab_example(*c_left, *c_right, *r1, *r2)?;
                if *r2 > self.grid.p_max {
                    return Err(validation(
                        "grid.p_max",
                        format!("must be at least the boundary support r2 = {r2}"),
                    ));
                }
            }
            BoundaryConfig::Equilibrium { a, c, drift } => {
                positive("boundary.a", *a)?;
                if !c.is_finite() || drift.iter().any(|d| !d.is_finite()) {
                    return Err(validation("boundary", "c and drift must be finite"));
                }
                EquilibriumParams::regular(self.statistics, *a, *c, *drift)?;
            }
            BoundaryConfig::Gridded { .. } => {}
        }
        Ok(())
    }

    /// The grid spec, with `p₁` breakpoints at jumps of the boundary data.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let spec = self.grid.spec()?;
        Ok(match &self.boundary {
            BoundaryConfig::SlabExample { r1, r2, .. } => spec.with_p1_breakpoints(&[*r1, *r2]),
            _ => spec,
        })
    }

    pub fn build_grid(&self) -> Result<Arc<PhaseGrid>> {
        PhaseGrid::build(self.grid_spec()?)
    }

    pub fn build_boundary(&self, grid: &Arc<PhaseGrid>) -> Result<Arc<BoundaryData>> {
        let data = match &self.boundary {
            BoundaryConfig::SlabExample {
                c_left,
                c_right,
                r1,
                r2,
            } => BoundaryData::slab_example(*c_left, *c_right, *r1, *r2)?,
            BoundaryConfig::Equilibrium { a, c, drift } => {
                let params = EquilibriumParams::regular(self.statistics, *a, *c, *drift)?;
                BoundaryData::equilibrium_traces(&params, grid.clone())?
            }
            BoundaryConfig::Gridded { path } => read_gridded(&self.base_dir.join(path), grid)?,
        };
        Ok(Arc::new(data))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            max_iters: self.max_iters,
            lambda_policy: self.lambda_policy,
            initial_guess: self.initial_guess,
            quadrature: self.quadrature,
        }
    }

    pub fn probe_options(&self) -> ProbeOptions {
        ProbeOptions {
            count: self.probe_count,
            seed: self.seed,
        }
    }

    /// `output_dir`, unless overridden by [`OUTPUT_DIR_ENV`].
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct GriddedRow {
    p1: f64,
    p2: f64,
    p3: f64,
    f: f64,
}

fn read_gridded(path: &Path, grid: &Arc<PhaseGrid>) -> Result<BoundaryData> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut values = Vec::with_capacity(grid.p_count());
    for (ip, row) in reader.deserialize::<GriddedRow>().enumerate() {
        let row = row?;
        if ip >= grid.p_count() {
            return Err(Error::GridMismatch(format!(
                "{} has more rows than grid nodes",
                path.display()
            )));
        }
        let p = grid.p_from_index(ip);
        let scale = 1e-9 * (1.0 + p.iter().map(|v| v.abs()).fold(0.0, f64::max));
        if (p[0] - row.p1).abs() > scale || (p[1] - row.p2).abs() > scale || (p[2] - row.p3).abs() > scale {
            return Err(Error::GridMismatch(format!(
                "row {} of {} is at ({}, {}, {}), grid node is ({}, {}, {})",
                ip + 1,
                path.display(),
                row.p1,
                row.p2,
                row.p3,
                p[0],
                p[1],
                p[2]
            )));
        }
        values.push(row.f);
    }
    BoundaryData::gridded(grid.clone(), values)
}
