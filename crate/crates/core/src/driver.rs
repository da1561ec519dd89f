//! The `solve`, `sweep`, `check` and `constants` drivers and their output
//! files.

use log::info;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::SolverConfig;
use crate::error::{validation, Result};
use crate::fixed_point::{self, ConditionMargins, ContractionEstimate, IterationRecord, ProfileRow, SolutionReport};
use crate::grid::transverse_momentum;
use crate::theorem::{self, AssumptionReport, TheoremConstants};

pub const EXIT_OK: i32 = 0;
/// Configuration, input or output failure.
pub const EXIT_ERROR: i32 = 1;
/// The boundary data fails a hypothesis check; nothing was solved.
pub const EXIT_ASSUMPTIONS: i32 = 2;
/// The iteration stopped without converging, or left the solution set.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// The solution operator failed, e.g. on a non-regular equilibrium.
pub const EXIT_SOLVER: i32 = 4;

pub const PROFILES_HEADER: [&str; 8] = ["x", "N", "P1", "P2", "P3", "E", "a", "c"];
pub const CONVERGENCE_HEADER: [&str; 6] = [
    "iteration",
    "distance",
    "margin_nonnegative",
    "margin_mass",
    "margin_energy",
    "margin_gram",
];
pub const SWEEP_HEADER: [&str; 8] = [
    "tau",
    "contraction_estimate",
    "converged",
    "iterations",
    "transverse_momentum",
    "transverse_response",
    "scaled_contraction",
    "error",
];

/// Floats in output files: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Everything `solve` knows at the point it stopped; written as
/// `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub statistics: String,
    pub tau: f64,
    pub momentum_nodes: usize,
    pub nx: usize,
    /// `complete`, or the stage that failed.
    pub stage: String,
    pub error: Option<String>,
    pub exit_code: i32,
    pub assumptions: Option<AssumptionReport>,
    /// Constants of the inflow data in closed form or on its own grid.
    pub constants: Option<TheoremConstants>,
    /// The same constants integrated on the solver grid; used for the
    /// solution-set checks.
    pub grid_constants: Option<TheoremConstants>,
    pub converged: bool,
    pub iterations: usize,
    pub final_distance: Option<f64>,
    pub lambda_violations: Vec<(usize, String)>,
    pub initial_margins: Option<ConditionMargins>,
    pub final_margins: Option<ConditionMargins>,
    pub contraction: Option<ContractionEstimate>,
    /// `sup_x (|P₂| + |P₃|)` of the final iterate.
    pub transverse_momentum: Option<f64>,
    /// Failures after convergence; they do not change the exit code.
    pub warnings: Vec<String>,
}

impl SolveSummary {
    fn new(config: &SolverConfig) -> Self {
        let nodes = config.build_grid().map(|g| g.p_count()).unwrap_or(0);
        Self {
            statistics: config.statistics.to_string(),
            tau: config.tau,
            momentum_nodes: nodes,
            nx: config.grid.nx,
            stage: "complete".into(),
            error: None,
            exit_code: EXIT_OK,
            assumptions: None,
            constants: None,
            grid_constants: None,
            converged: false,
            iterations: 0,
            final_distance: None,
            lambda_violations: Vec::new(),
            initial_margins: None,
            final_margins: None,
            contraction: None,
            transverse_momentum: None,
            warnings: Vec::new(),
        }
    }

    fn fail(&mut self, stage: &str, exit_code: i32, message: String) {
        self.stage = stage.into();
        self.exit_code = exit_code;
        self.error = Some(message);
    }
}

/// Result of a driver run: the exit status and where its files went.
#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub exit_code: i32,
    pub output_dir: PathBuf,
    pub summary: T,
}

/// Checks the hypotheses, runs the Picard iteration and the contraction
/// estimate, and writes `profiles.csv`, `convergence.csv` and
/// `report.json`.
///
/// Exit code 0 exactly when the iteration converged with no iterate outside
/// the solution set.
pub fn run_solve(config: &SolverConfig) -> Result<RunOutcome<SolveSummary>> {
    let out_dir = config.resolved_output_dir();
    fs::create_dir_all(&out_dir)?;
    let mut summary = SolveSummary::new(config);
    let solution = solve_into(config, &mut summary)?;

    if let Some((report, _)) = &solution {
        write_profiles(&out_dir.join("profiles.csv"), &report.profiles)?;
        write_convergence(&out_dir.join("convergence.csv"), &report.records)?;
    }
    write_json(&out_dir.join("report.json"), &summary)?;
    info!(
        "solve finished with exit code {} in {}",
        summary.exit_code,
        out_dir.display()
    );
    Ok(RunOutcome {
        exit_code: summary.exit_code,
        output_dir: out_dir,
        summary,
    })
}

/// Runs the stages of `solve`, recording them in `summary`. Returns the
/// report when the iteration ran.
fn solve_into(config: &SolverConfig, summary: &mut SolveSummary) -> Result<Option<(SolutionReport, f64)>> {
    let stat = config.statistics;
    let grid = config.build_grid()?;
    let boundary = config.build_boundary(&grid)?;

    let assumptions = theorem::check_main_assumptions(&boundary, config.tau, stat);
    summary.constants = assumptions.constants;
    let failures: Vec<String> = assumptions
        .failures()
        .iter()
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    summary.assumptions = Some(assumptions);
    if config.check_assumptions && !failures.is_empty() {
        summary.fail("assumptions", EXIT_ASSUMPTIONS, failures.join("; "));
        return Ok(None);
    }

    let solution = match fixed_point::picard_solve(
        boundary.clone(),
        grid.clone(),
        config.tau,
        stat,
        &config.solver_options(),
    ) {
        Ok(s) => s,
        Err(e) => {
            summary.fail("solve", EXIT_SOLVER, e.to_string());
            return Ok(None);
        }
    };
    let report = solution.report.clone();
    summary.grid_constants = Some(solution.constants);
    summary.converged = report.converged;
    summary.iterations = report.iterations;
    summary.final_distance = Some(report.final_distance);
    summary.lambda_violations = report.lambda_violations.clone();
    summary.initial_margins = Some(report.initial_margins);
    summary.final_margins = report.records.last().map(|r| r.margins);
    let transverse = transverse_momentum(&solution.field);
    summary.transverse_momentum = Some(transverse);
    drop(solution);
    if let Err(e) = report.ensure_converged() {
        summary.fail("solve", EXIT_NOT_CONVERGED, e.to_string());
        return Ok(Some((report, transverse)));
    }

    match fixed_point::contraction_estimate(
        boundary,
        grid,
        config.tau,
        stat,
        &config.probe_options(),
        &config.quadrature,
    ) {
        Ok(est) => summary.contraction = Some(est),
        Err(e) => summary.warnings.push(format!("contraction estimate failed: {e}")),
    }
    Ok(Some((report, transverse)))
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub contraction_estimate: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `sup_x (|P₂| + |P₃|)` of the converged solution.
    pub transverse_momentum: f64,
    /// `sup_x (|P₂| + |P₃|)` of `Φ` applied to a member of the solution set
    /// with transverse drift.
    pub transverse_response: f64,
    /// `contraction_estimate · τ / (ln τ + 1)`.
    pub scaled_contraction: f64,
    pub error: Option<String>,
}

/// Solves at every `τ` in `taus` and writes `sweep.csv`; a failure at one
/// `τ` is recorded in its row and the sweep continues.
pub fn run_sweep(config: &SolverConfig, taus: &[f64]) -> Result<RunOutcome<Vec<SweepRow>>> {
    if taus.is_empty() {
        return Err(validation("tau", "the sweep needs at least one value"));
    }
    if taus.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(validation("tau", "sweep values must be positive and finite"));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(validation("tau", "sweep values must be strictly ascending"));
    }
    let out_dir = config.resolved_output_dir();
    fs::create_dir_all(&out_dir)?;

    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut cfg = config.clone();
        cfg.tau = tau;
        rows.push(sweep_row(&cfg)?);
    }

    let mut w = csv::Writer::from_path(out_dir.join("sweep.csv"))?;
    w.write_record(SWEEP_HEADER)?;
    for r in &rows {
        w.write_record([
            format_float(r.tau),
            format_float(r.contraction_estimate),
            r.converged.to_string(),
            r.iterations.to_string(),
            format_float(r.transverse_momentum),
            format_float(r.transverse_response),
            format_float(r.scaled_contraction),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let ok = rows.iter().all(|r| r.converged && r.error.is_none());
    Ok(RunOutcome {
        exit_code: if ok { EXIT_OK } else { EXIT_NOT_CONVERGED },
        output_dir: out_dir,
        summary: rows,
    })
}

/// Smallest swept `τ` whose contraction estimate is below one.
pub fn empirical_tau0(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.contraction_estimate < 1.0)
        .map(|r| r.tau)
        .reduce(f64::min)
}

fn sweep_row(config: &SolverConfig) -> Result<SweepRow> {
    let tau = config.tau;
    let mut summary = SolveSummary::new(config);
    let solved = solve_into(config, &mut summary)?;
    let mut row = SweepRow {
        tau,
        contraction_estimate: f64::NAN,
        converged: summary.converged && summary.exit_code == EXIT_OK,
        iterations: summary.iterations,
        transverse_momentum: solved.map_or(f64::NAN, |(_, t)| t),
        transverse_response: f64::NAN,
        scaled_contraction: f64::NAN,
        error: summary.error.as_ref().map(|e| format!("{}: {e}", summary.stage)),
    };
    if let Some(w) = summary.warnings.first() {
        row.error.get_or_insert_with(|| w.clone());
    }
    if let Some(est) = &summary.contraction {
        row.contraction_estimate = est.estimate;
        row.scaled_contraction = est.estimate * tau / (tau.ln() + 1.0);
    }
    if summary.stage != "assumptions" {
        let grid = config.build_grid()?;
        let boundary = config.build_boundary(&grid)?;
        match fixed_point::transverse_response(boundary, grid, tau, config.statistics, config.seed, &config.quadrature)
        {
            Ok(v) => row.transverse_response = v,
            Err(e) => {
                if row.error.is_none() {
                    row.error = Some(format!("transverse: {e}"));
                }
            }
        }
    }
    info!(
        "sweep tau={tau}: converged={} contraction={:e}",
        row.converged, row.contraction_estimate
    );
    Ok(row)
}

/// The hypothesis checks alone.
pub fn run_check(config: &SolverConfig) -> Result<(i32, AssumptionReport)> {
    let grid = config.build_grid()?;
    let boundary = config.build_boundary(&grid)?;
    let report = theorem::check_main_assumptions(&boundary, config.tau, config.statistics);
    let code = if report.all_passed() { EXIT_OK } else { EXIT_ASSUMPTIONS };
    Ok((code, report))
}

/// The boundary constants of the configured inflow data.
pub fn run_constants(config: &SolverConfig) -> Result<TheoremConstants> {
    let grid = config.build_grid()?;
    let boundary = config.build_boundary(&grid)?;
    theorem::boundary_constants(&boundary, config.tau, config.statistics)
}

pub fn write_profiles(path: &Path, rows: &[ProfileRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PROFILES_HEADER)?;
    for r in rows {
        let values = [
            r.x,
            r.mass,
            r.momentum[0],
            r.momentum[1],
            r.momentum[2],
            r.energy,
            r.a,
            r.c,
        ];
        w.write_record(values.map(format_float))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CONVERGENCE_HEADER)?;
    for r in records {
        let m = r.margins;
        w.write_record([
            r.iteration.to_string(),
            format_float(r.distance),
            format_float(m.nonnegative),
            format_float(m.mass),
            format_float(m.energy),
            format_float(m.gram),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
