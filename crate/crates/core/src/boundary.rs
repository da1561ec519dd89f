//! Inflow boundary data `f_L` (on `p₁ > 0`, entering at `x = 0`) and `f_R`
//! (on `p₁ < 0`, entering at `x = 1`), stored together as `f_LR`.

use std::sync::Arc;

use crate::equilibrium::{self, EquilibriumParams, Vec3};
use crate::error::{validation, Error, Result};
use crate::grid::PhaseGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// `f_L = C_L·1{r₁ <= p₁ <= r₂}·e^{-(p₂²+p₃²)/2}` and its mirror
    /// `f_R = C_R·1{-r₂ <= p₁ <= -r₁}·e^{-(p₂²+p₃²)/2}`.
    SlabExample {
        c_left: f64,
        c_right: f64,
        r1: f64,
        r2: f64,
    },
    /// `f_LR` sampled on the momentum nodes of a grid.
    Gridded { grid: Arc<PhaseGrid>, values: Vec<f64> },
}

impl BoundaryData {
    pub fn slab_example(c_left: f64, c_right: f64, r1: f64, r2: f64) -> Result<Self> {
        for (name, v) in [("c_left", c_left), ("c_right", c_right), ("r1", r1), ("r2", r2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(validation(name, "must be a positive finite number"));
            }
        }
        if r1 >= r2 {
            return Err(validation("r2", "must exceed r1"));
        }
        Ok(Self::SlabExample {
            c_left,
            c_right,
            r1,
            r2,
        })
    }

    /// Gridded data; values must be nonnegative and finite.
    pub fn gridded(grid: Arc<PhaseGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.p_count() {
            return Err(Error::GridMismatch(format!(
                "boundary has {} values, grid has {} momentum nodes",
                values.len(),
                grid.p_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(validation("boundary", "values must be finite"));
        }
        Ok(Self::Gridded { grid, values })
    }

    /// Traces of a global equilibrium: `f_L = M` on `p₁ > 0`, `f_R = M` on `p₁ < 0`.
    pub fn equilibrium_traces(params: &EquilibriumParams, grid: Arc<PhaseGrid>) -> Result<Self> {
        if !params.regime.is_regular() {
            return Err(Error::Regime("equilibrium traces need a regular equilibrium".into()));
        }
        let values = grid.sample(|p| equilibrium::evaluate(params, p).unwrap_or(0.0));
        Self::gridded(grid, values)
    }

    /// Closed-form value of `f_LR` at `p`; `None` for gridded data.
    pub fn evaluate(&self, p: &Vec3) -> Option<f64> {
        match *self {
            Self::SlabExample {
                c_left,
                c_right,
                r1,
                r2,
            } => {
                let transverse = (-(p[1] * p[1] + p[2] * p[2]) / 2.0).exp();
                let v = if p[0] >= r1 && p[0] <= r2 {
                    c_left * transverse
                } else if p[0] <= -r1 && p[0] >= -r2 {
                    c_right * transverse
                } else {
                    0.0
                };
                Some(v)
            }
            Self::Gridded { .. } => None,
        }
    }

    /// `f_LR` at every momentum node of `grid`.
    pub fn sample_on(&self, grid: &PhaseGrid) -> Result<Vec<f64>> {
        match self {
            Self::SlabExample { .. } => Ok(grid.sample(|p| self.evaluate(p).unwrap_or(0.0))),
            Self::Gridded { grid: own, values } => {
                if !own.same_as(grid) {
                    return Err(Error::GridMismatch(
                        "gridded boundary data belongs to a different grid".into(),
                    ));
                }
                Ok(values.clone())
            }
        }
    }

    /// Values of `|p₁|` where the data has a jump; quadrature panels should
    /// break there.
    pub fn p1_breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::SlabExample { r1, r2, .. } => vec![r1, r2],
            Self::Gridded { .. } => Vec::new(),
        }
    }

    /// Largest `|p₁|` carrying data, if known in closed form.
    pub fn p1_support_max(&self) -> Option<f64> {
        match *self {
            Self::SlabExample { r2, .. } => Some(r2),
            Self::Gridded { .. } => None,
        }
    }
}
