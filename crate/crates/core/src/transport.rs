//! The mild-solution operator: exponential attenuation of the inflow data
//! along characteristics plus the relaxation gain toward the local
//! equilibrium.
//!
//! Between slab nodes the mass density is linear, so the cumulative density
//! `A(x) = ∫₀^x N` is piecewise linear, and the equilibrium is frozen at its
//! cell-midpoint value. Under those two approximations the gain integral is
//! exact: each cell contributes `(1 - e^{-ΔA/(τ|p₁|)})·K_mid` attenuated by
//! the cells downstream of it. The sweep below applies that recursion node
//! by node, which is the same sum evaluated in `O(nx)` per momentum node.

use log::warn;
use std::sync::Arc;

use crate::boundary::BoundaryData;
use crate::equilibrium::{self, EquilibriumParams, MomentTriple};
use crate::error::{Error, Result};
use crate::grid::{compute_moments, DistributionField, PhaseGrid};
use crate::stats::{self, QuadratureSpec};

/// Roundoff allowance below zero before a negative output is an error.
pub const NEGATIVE_CLIP: f64 = -1e-14;

/// Prefix integral `A(x_i) = ∫₀^{x_i} N(y) dy` by the trapezoidal rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeDensity {
    pub values: Vec<f64>,
}

impl CumulativeDensity {
    /// Increment `A(x_{i+1}) - A(x_i)` over cell `i`.
    pub fn increment(&self, cell: usize) -> f64 {
        self.values[cell + 1] - self.values[cell]
    }

    pub fn total(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }
}

/// Trapezoidal prefix integral of the node masses on a uniform grid of
/// spacing `dx`.
pub fn cumulative_density(masses: &[f64], dx: f64) -> Result<CumulativeDensity> {
    if let Some((i, m)) = masses.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
        return Err(Error::Invariant(format!("mass {m} at x-index {i} is not positive")));
    }
    let mut values = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    values.push(0.0);
    for pair in masses.windows(2) {
        acc += 0.5 * dx * (pair[0] + pair[1]);
        values.push(acc);
    }
    Ok(CumulativeDensity { values })
}

/// Everything computed while applying the operator once.
#[derive(Debug, Clone)]
pub struct TransportStep {
    pub field: DistributionField,
    /// Moments of the input field at the slab nodes.
    pub moments: Vec<MomentTriple>,
    /// Equilibrium parameters at the cell midpoints.
    pub cell_params: Vec<EquilibriumParams>,
    pub density: CumulativeDensity,
}

/// `Φ(f)`: transports the boundary data attached to `f` through the slab,
/// relaxing toward the local equilibrium built from the moments of `f`.
pub fn apply_solution_operator(f: &DistributionField, tau: f64) -> Result<DistributionField> {
    Ok(apply_solution_operator_with(f, tau, &QuadratureSpec::default())?.field)
}

/// [`apply_solution_operator`] with explicit radial quadrature, returning
/// the intermediate moments and equilibrium parameters as well.
pub fn apply_solution_operator_with(f: &DistributionField, tau: f64, q: &QuadratureSpec) -> Result<TransportStep> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(crate::error::validation("tau", "must be a positive finite number"));
    }
    let boundary = f
        .boundary
        .as_ref()
        .ok_or_else(|| Error::Invariant("field carries no boundary data".into()))?;
    let grid = f.grid.clone();
    let inflow = boundary.sample_on(&grid)?;

    let moments = compute_moments(f)?;
    let masses: Vec<f64> = moments.iter().map(|m| m.mass).collect();
    let density = cumulative_density(&masses, grid.dx())?;

    let stat = boundary_stat(f)?;
    let threshold = stats::threshold(stat, q)?;
    let mut cell_params = Vec::with_capacity(grid.nx());
    for cell in 0..grid.nx() {
        let mid = moments[cell].lerp(&moments[cell + 1], 0.5);
        let params = equilibrium::solve_parameters_with_threshold(&mid, stat, q, threshold).map_err(|e| match e {
            Error::Regime(msg) => Error::Regime(format!("cell {cell}: {msg}")),
            other => other,
        })?;
        cell_params.push(params);
    }

    let mut out = DistributionField::zeros(grid.clone());
    out.boundary = f.boundary.clone();
    out.statistics = f.statistics;
    sweep(&grid, &inflow, &density, &cell_params, tau, &mut out.values);
    clip_negative(&mut out.values)?;
    Ok(TransportStep {
        field: out,
        moments,
        cell_params,
        density,
    })
}

fn boundary_stat(f: &DistributionField) -> Result<stats::Statistics> {
    f.statistics
        .ok_or_else(|| Error::Invariant("field carries no statistics tag".into()))
}

fn sweep(
    grid: &PhaseGrid,
    inflow: &[f64],
    density: &CumulativeDensity,
    cell_params: &[EquilibriumParams],
    tau: f64,
    out: &mut [f64],
) {
    let np = grid.p_count();
    let nx = grid.nx();
    let n23 = grid.transverse_count();
    let n3 = grid.p3.len();
    let n_neg = grid.p1_negative_count();

    // p₁ > 0 enters at x = 0, p₁ < 0 at x = 1.
    for i1 in 0..grid.p1.len() {
        let ix = if i1 >= n_neg { 0 } else { nx };
        let row = i1 * n23;
        out[ix * np + row..ix * np + row + n23].copy_from_slice(&inflow[row..row + n23]);
    }

    let mut equilibrium_row = vec![0.0; n23];
    let forward: Vec<usize> = (0..nx).collect();
    let backward: Vec<usize> = (0..nx).rev().collect();
    for (cells, positive) in [(forward, true), (backward, false)] {
        for cell in cells {
            let params = &cell_params[cell];
            let g1 = params.axis_factors(0, &grid.p1.nodes);
            let g2 = params.axis_factors(1, &grid.p2.nodes);
            let g3 = params.axis_factors(2, &grid.p3.nodes);
            let scale = (-params.c).exp();
            let d_a = density.increment(cell);
            let (src, dst) = if positive { (cell, cell + 1) } else { (cell + 1, cell) };
            let rows = if positive { n_neg..grid.p1.len() } else { 0..n_neg };
            for i1 in rows {
                let s = d_a / (tau * grid.p1.nodes[i1].abs());
                let keep = (-s).exp();
                let gain = -(-s).exp_m1();
                let z1 = scale * g1[i1];
                for i2 in 0..grid.p2.len() {
                    let z12 = z1 * g2[i2];
                    for i3 in 0..n3 {
                        equilibrium_row[i2 * n3 + i3] =
                            EquilibriumParams::occupation_from_product(params.stat, z12 * g3[i3]);
                    }
                }
                let row = i1 * n23;
                let (src_off, dst_off) = (src * np + row, dst * np + row);
                for j in 0..n23 {
                    out[dst_off + j] = keep * out[src_off + j] + gain * equilibrium_row[j];
                }
            }
        }
    }
}

fn clip_negative(values: &mut [f64]) -> Result<()> {
    let mut clipped = 0usize;
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < NEGATIVE_CLIP {
                return Err(Error::Invariant(format!("transport produced a negative value {v:e}")));
            }
            *v = 0.0;
            clipped += 1;
        }
    }
    if clipped > 0 {
        warn!("clipped {clipped} roundoff-negative values after transport");
    }
    Ok(())
}

/// Inflow data attenuated with the worst-case density `a_u`:
/// `e^{-a_u x/(τ|p₁|)} f_L` for `p₁ > 0` and `e^{-a_u (1-x)/(τ|p₁|)} f_R` for
/// `p₁ < 0`. With `uniform = true` the full `e^{-a_u/(τ|p₁|)}` is used at
/// every node instead.
pub fn attenuated_boundary(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    stat: stats::Statistics,
    a_u: f64,
    tau: f64,
    uniform: bool,
) -> Result<DistributionField> {
    let inflow = boundary.sample_on(&grid)?;
    let np = grid.p_count();
    let n23 = grid.transverse_count();
    let mut values = Vec::with_capacity(grid.x_count() * np);
    for &x in &grid.x {
        for (i1, &p1) in grid.p1.nodes.iter().enumerate() {
            let path = match (uniform, p1 > 0.0) {
                (true, _) => 1.0,
                (false, true) => x,
                (false, false) => 1.0 - x,
            };
            let factor = (-a_u * path / (tau * p1.abs())).exp();
            values.extend(inflow[i1 * n23..(i1 + 1) * n23].iter().map(|v| factor * v));
        }
    }
    Ok(DistributionField {
        grid,
        values,
        boundary: Some(boundary),
        statistics: Some(stat),
    })
}

/// Inflow data extended unattenuated to every slab node.
pub fn extended_boundary(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    stat: stats::Statistics,
) -> Result<DistributionField> {
    let inflow = boundary.sample_on(&grid)?;
    let mut f = DistributionField::uniform_in_x(grid, &inflow);
    f.boundary = Some(boundary);
    f.statistics = Some(stat);
    Ok(f)
}

/// Discrete form of `sup_x ∫₀^x ∫₀^∞ (τp₁)^{-1} e^{-a_l(x-y)/(τp₁)}
/// e^{-C p₁²} dp₁ dy` on the `p₁ > 0` nodes and slab cells of `grid`.
///
/// The `y` integral is accumulated with the same exponential increments as
/// the transport sweep.
pub fn kernel_integral(grid: &PhaseGrid, a_l: f64, decay: f64, tau: f64) -> f64 {
    let n_neg = grid.p1_negative_count();
    let dx = grid.dx();
    let mut best: f64 = 0.0;
    let mut acc = vec![0.0; grid.p1.len() - n_neg];
    for _cell in 0..grid.nx() {
        let mut total = 0.0;
        for (j, i1) in (n_neg..grid.p1.len()).enumerate() {
            let p1 = grid.p1.nodes[i1];
            let s = a_l * dx / (tau * p1);
            acc[j] = (-s).exp() * acc[j] + (-(-s).exp_m1()) / a_l;
            total += grid.p1.weights[i1] * acc[j] * (-decay * p1 * p1).exp();
        }
        best = best.max(total);
    }
    best
}
