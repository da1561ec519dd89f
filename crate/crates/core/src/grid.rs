//! Slab × momentum tensor grids, gridded distributions, their moments and
//! the weighted `L¹₂` distance.
//!
//! The momentum grid is a tensor product of three composite Gauss–Legendre
//! rules. Panels are specified on the positive half-axis and mirrored, so the
//! rule is exactly symmetric under `p -> -p`. The `p₁` panels are refined
//! dyadically toward `p₁ = 0`; because Gauss–Legendre nodes are interior, no
//! node ever sits on `p₁ = 0`.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::boundary::BoundaryData;
#[cfg(test)]
use crate::equilibrium::dot;
use crate::equilibrium::{MomentTriple, Vec3};
use crate::error::{validation, Error, Result};
use crate::quadrature::{Panel, Rule};
use crate::stats::Statistics;

/// Discretisation parameters of the phase grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of uniform slab cells on `[0, 1]`; there are `nx + 1` nodes.
    pub nx: usize,
    /// Momentum cutoff.
    pub p_max: f64,
    /// Panels on `p₁ > 0`, mirrored to `p₁ < 0`.
    pub p1_panels: Vec<Panel>,
    /// Panels on `p₂, p₃ > 0`, mirrored; shared by both transverse axes.
    pub p23_panels: Vec<Panel>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::dyadic(64, 8.0, 6, 7, &[0.0625, 0.125, 0.25, 0.5, 1.0], 7)
    }
}

impl GridSpec {
    /// Dyadic `p₁` panels with breakpoints `p_max·2^{-k}`, `k = 0..=levels`,
    /// closed by a final panel `[0, p_max·2^{-levels}]`. Transverse panels
    /// end at `p_max·fractions[i]`.
    pub fn dyadic(
        nx: usize,
        p_max: f64,
        levels: usize,
        p1_order: usize,
        transverse_fractions: &[f64],
        transverse_order: usize,
    ) -> Self {
        let mut p1_panels = Vec::with_capacity(levels + 1);
        let mut lo = p_max * 0.5f64.powi(levels as i32);
        p1_panels.push(Panel::new(0.0, lo, p1_order));
        for _ in 0..levels {
            let hi = 2.0 * lo;
            p1_panels.push(Panel::new(lo, hi, p1_order));
            lo = hi;
        }
        let mut p23_panels = Vec::with_capacity(transverse_fractions.len());
        let mut prev = 0.0;
        for &frac in transverse_fractions {
            let hi = frac * p_max;
            p23_panels.push(Panel::new(prev, hi, transverse_order));
            prev = hi;
        }
        Self {
            nx,
            p_max,
            p1_panels,
            p23_panels,
        }
    }

    /// Splits any `p₁` panel containing one of `points` (given as `|p₁|`)
    /// so that the point becomes a panel boundary.
    pub fn with_p1_breakpoints(mut self, points: &[f64]) -> Self {
        for &b in points {
            let mut split = Vec::with_capacity(self.p1_panels.len() + 1);
            for panel in self.p1_panels {
                if b > panel.lo && b < panel.hi {
                    split.push(Panel::new(panel.lo, b, panel.order));
                    split.push(Panel::new(b, panel.hi, panel.order));
                } else {
                    split.push(panel);
                }
            }
            self.p1_panels = split;
        }
        self
    }

    /// Halves every panel (both directions) and the slab cell width.
    pub fn refined(&self) -> Self {
        let halve = |panels: &[Panel]| {
            panels
                .iter()
                .flat_map(|p| {
                    let mid = 0.5 * (p.lo + p.hi);
                    [Panel::new(p.lo, mid, p.order), Panel::new(mid, p.hi, p.order)]
                })
                .collect()
        };
        Self {
            nx: 2 * self.nx,
            p_max: self.p_max,
            p1_panels: halve(&self.p1_panels),
            p23_panels: halve(&self.p23_panels),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 {
            return Err(validation("grid.nx", "must be positive"));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return Err(validation("grid.p_max", "must be a positive finite number"));
        }
        for (name, panels) in [
            ("grid.p1_panels", &self.p1_panels),
            ("grid.p23_panels", &self.p23_panels),
        ] {
            if panels.is_empty() {
                return Err(validation(name, "at least one panel is required"));
            }
            for p in panels.iter() {
                if p.order == 0 {
                    return Err(validation(name, "panel order must be positive"));
                }
                if !(p.lo >= 0.0 && p.hi > p.lo && p.hi <= self.p_max * (1.0 + 1e-12)) {
                    return Err(validation(
                        name,
                        format!("panel [{}, {}] must satisfy 0 <= lo < hi <= p_max", p.lo, p.hi),
                    ));
                }
            }
            let mut sorted: Vec<&Panel> = panels.iter().collect();
            sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            if sorted.windows(2).any(|w| w[1].lo < w[0].hi - 1e-14 * self.p_max) {
                return Err(validation(name, "panels overlap"));
            }
        }
        Ok(())
    }
}

fn mirrored_rule(panels: &[Panel]) -> Rule {
    let mut sorted = panels.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let positive = Rule::composite(&sorted);
    let mut nodes: Vec<f64> = positive.nodes.iter().rev().map(|x| -x).collect();
    let mut weights: Vec<f64> = positive.weights.iter().rev().copied().collect();
    nodes.extend_from_slice(&positive.nodes);
    weights.extend_from_slice(&positive.weights);
    Rule { nodes, weights }
}

/// A built phase grid: slab nodes and the three momentum rules.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub spec: GridSpec,
    /// Slab nodes `x_i = i/nx`.
    pub x: Vec<f64>,
    pub p1: Rule,
    pub p2: Rule,
    pub p3: Rule,
}

impl PhaseGrid {
    pub fn build(spec: GridSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let x = (0..=spec.nx).map(|i| i as f64 / spec.nx as f64).collect();
        let p1 = mirrored_rule(&spec.p1_panels);
        let p2 = mirrored_rule(&spec.p23_panels);
        let p3 = p2.clone();
        if p1.nodes.iter().any(|&v| v == 0.0) {
            return Err(validation("grid.p1_panels", "a p1 node falls on zero"));
        }
        Ok(Arc::new(Self { spec, x, p1, p2, p3 }))
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    pub fn x_count(&self) -> usize {
        self.x.len()
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.spec.nx as f64
    }

    /// Number of momentum nodes.
    pub fn p_count(&self) -> usize {
        self.p1.len() * self.p2.len() * self.p3.len()
    }

    /// Number of `p₁` nodes with `p₁ < 0`; they come first in `p1.nodes`.
    pub fn p1_negative_count(&self) -> usize {
        self.p1.len() / 2
    }

    /// Size of one `p₁`-slab of the momentum index.
    pub fn transverse_count(&self) -> usize {
        self.p2.len() * self.p3.len()
    }

    #[inline]
    pub fn p_index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.p2.len() + i2) * self.p3.len() + i3
    }

    pub fn p_from_index(&self, ip: usize) -> Vec3 {
        let n23 = self.transverse_count();
        let i1 = ip / n23;
        let r = ip % n23;
        [
            self.p1.nodes[i1],
            self.p2.nodes[r / self.p3.len()],
            self.p3.nodes[r % self.p3.len()],
        ]
    }

    /// Momentum quadrature weights at every momentum node.
    pub fn p_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.p_count());
        for &w1 in &self.p1.weights {
            for &w2 in &self.p2.weights {
                for &w3 in &self.p3.weights {
                    w.push(w1 * w2 * w3);
                }
            }
        }
        w
    }

    /// `Σ_p w_p g(p)` over the momentum grid.
    pub fn integrate(&self, g: impl Fn(&Vec3) -> f64) -> f64 {
        let mut total = 0.0;
        for (&p1, &w1) in self.p1.nodes.iter().zip(&self.p1.weights) {
            for (&p2, &w2) in self.p2.nodes.iter().zip(&self.p2.weights) {
                for (&p3, &w3) in self.p3.nodes.iter().zip(&self.p3.weights) {
                    total += w1 * w2 * w3 * g(&[p1, p2, p3]);
                }
            }
        }
        total
    }

    /// Evaluates `g` at every momentum node, in index order.
    pub fn sample(&self, g: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.p_count());
        for &p1 in &self.p1.nodes {
            for &p2 in &self.p2.nodes {
                for &p3 in &self.p3.nodes {
                    out.push(g(&[p1, p2, p3]));
                }
            }
        }
        out
    }

    /// Raw `(N, P, E)` of one momentum slice, without validation.
    pub fn slice_moments(&self, values: &[f64]) -> MomentTriple {
        debug_assert_eq!(values.len(), self.p_count());
        let (mut n, mut px, mut py, mut pz, mut e) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let n23 = self.transverse_count();
        for (i1, (&p1, &w1)) in self.p1.nodes.iter().zip(&self.p1.weights).enumerate() {
            let row = &values[i1 * n23..(i1 + 1) * n23];
            let (mut rn, mut ry, mut rz, mut rt) = (0.0, 0.0, 0.0, 0.0);
            for (i2, (&p2, &w2)) in self.p2.nodes.iter().zip(&self.p2.weights).enumerate() {
                let col = &row[i2 * self.p3.len()..(i2 + 1) * self.p3.len()];
                let (mut cn, mut cz, mut ct) = (0.0, 0.0, 0.0);
                for ((&p3, &w3), &f) in self.p3.nodes.iter().zip(&self.p3.weights).zip(col) {
                    let wf = w3 * f;
                    cn += wf;
                    cz += wf * p3;
                    ct += wf * p3 * p3;
                }
                rn += w2 * cn;
                ry += w2 * p2 * cn;
                rz += w2 * cz;
                rt += w2 * (ct + p2 * p2 * cn);
            }
            n += w1 * rn;
            px += w1 * p1 * rn;
            py += w1 * ry;
            pz += w1 * rz;
            e += w1 * (rt + p1 * p1 * rn);
        }
        MomentTriple {
            mass: n,
            momentum: [px, py, pz],
            energy: e,
        }
    }

    /// `Σ_p w_p |g(p)| (1 + |p|²)` for one momentum slice.
    pub fn slice_weighted_norm(&self, values: &[f64]) -> f64 {
        self.slice_weighted_norm_by(values.len(), |i| values[i].abs())
    }

    fn slice_weighted_norm_by(&self, len: usize, abs_at: impl Fn(usize) -> f64) -> f64 {
        debug_assert_eq!(len, self.p_count());
        let n23 = self.transverse_count();
        let n3 = self.p3.len();
        let mut total = 0.0;
        for (i1, (&p1, &w1)) in self.p1.nodes.iter().zip(&self.p1.weights).enumerate() {
            let mut row = 0.0;
            for (i2, (&p2, &w2)) in self.p2.nodes.iter().zip(&self.p2.weights).enumerate() {
                let base = i1 * n23 + i2 * n3;
                let mut col = 0.0;
                for (i3, (&p3, &w3)) in self.p3.nodes.iter().zip(&self.p3.weights).enumerate() {
                    col += w3 * abs_at(base + i3) * (1.0 + p1 * p1 + p2 * p2 + p3 * p3);
                }
                row += w2 * col;
            }
            total += w1 * row;
        }
        total
    }

    /// `Σ_p w_p |f - g| (1 + |p|²)` for one momentum slice.
    pub fn slice_distance(&self, f: &[f64], g: &[f64]) -> f64 {
        self.slice_weighted_norm_by(f.len(), |i| (f[i] - g[i]).abs())
    }

    pub fn same_as(&self, other: &PhaseGrid) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }
}

/// Values of a distribution on every `(x, p)` node of a grid, together
/// with the inflow data it is transported with.
#[derive(Debug, Clone)]
pub struct DistributionField {
    pub grid: Arc<PhaseGrid>,
    /// Row-major `(x-index, p-index)`.
    pub values: Vec<f64>,
    pub boundary: Option<Arc<BoundaryData>>,
    /// Statistics of the equilibrium the field relaxes toward.
    pub statistics: Option<Statistics>,
}

impl DistributionField {
    pub fn zeros(grid: Arc<PhaseGrid>) -> Self {
        let len = grid.x_count() * grid.p_count();
        Self {
            grid,
            values: vec![0.0; len],
            boundary: None,
            statistics: None,
        }
    }

    /// The same momentum profile at every slab node.
    pub fn uniform_in_x(grid: Arc<PhaseGrid>, profile: &[f64]) -> Self {
        assert_eq!(profile.len(), grid.p_count());
        let mut values = Vec::with_capacity(grid.x_count() * grid.p_count());
        for _ in 0..grid.x_count() {
            values.extend_from_slice(profile);
        }
        Self {
            grid,
            values,
            boundary: None,
            statistics: None,
        }
    }

    /// `g(x, p)` at every node.
    pub fn from_fn(grid: Arc<PhaseGrid>, g: impl Fn(f64, &Vec3) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.x_count() * grid.p_count());
        for &x in &grid.x {
            values.extend(grid.sample(|p| g(x, p)));
        }
        Self {
            grid,
            values,
            boundary: None,
            statistics: None,
        }
    }

    /// Attaches the inflow data and statistics needed to transport the field.
    pub fn with_boundary(mut self, boundary: Arc<BoundaryData>, statistics: Statistics) -> Self {
        self.boundary = Some(boundary);
        self.statistics = Some(statistics);
        self
    }

    pub fn slice(&self, ix: usize) -> &[f64] {
        let np = self.grid.p_count();
        &self.values[ix * np..(ix + 1) * np]
    }

    pub fn slice_mut(&mut self, ix: usize) -> &mut [f64] {
        let np = self.grid.p_count();
        &mut self.values[ix * np..(ix + 1) * np]
    }

    /// Smallest value and its `(x-index, p-index)`.
    pub fn min_value(&self) -> (f64, usize, usize) {
        let np = self.grid.p_count();
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        (v, i / np, i % np)
    }

    /// Unvalidated moments at every slab node.
    pub fn raw_moments(&self) -> Vec<MomentTriple> {
        (0..self.grid.x_count())
            .map(|ix| self.grid.slice_moments(self.slice(ix)))
            .collect()
    }

    /// `(1 - θ)·self + θ·other`.
    pub fn convex_combination(&self, other: &Self, theta: f64) -> Result<Self> {
        ensure_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        Ok(Self {
            values,
            ..self.empty_like()
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.empty_like()
        }
    }

    /// Same grid, boundary and statistics with no values.
    fn empty_like(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: Vec::new(),
            boundary: self.boundary.clone(),
            statistics: self.statistics,
        }
    }

    /// `sup_x Σ_p w_p |f|(1 + |p|²)`.
    pub fn weighted_norm(&self) -> f64 {
        (0..self.grid.x_count())
            .map(|ix| self.grid.slice_weighted_norm(self.slice(ix)))
            .fold(0.0, f64::max)
    }
}

fn ensure_same_grid(f: &DistributionField, g: &DistributionField) -> Result<()> {
    if !f.grid.same_as(&g.grid) || f.values.len() != g.values.len() {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    Ok(())
}

/// Moments `(N, P, E)` at every slab node; errors if any triple is invalid.
pub fn compute_moments(f: &DistributionField) -> Result<Vec<MomentTriple>> {
    let moments = f.raw_moments();
    for (ix, m) in moments.iter().enumerate() {
        if !(m.mass > 0.0) {
            return Err(Error::Invariant(format!(
                "mass {} at x-index {ix} is not positive",
                m.mass
            )));
        }
        m.validate()
            .map_err(|e| Error::Invariant(format!("at x-index {ix}: {e}")))?;
    }
    Ok(moments)
}

/// `d(f, g) = sup_x Σ_p w_p |f - g| (1 + |p|²)`.
pub fn weighted_distance(f: &DistributionField, g: &DistributionField) -> Result<f64> {
    ensure_same_grid(f, g)?;
    Ok((0..f.grid.x_count())
        .map(|ix| f.grid.slice_distance(f.slice(ix), g.slice(ix)))
        .fold(0.0, f64::max))
}

/// Per-slab-node distances `Σ_p w_p |f - g|(1 + |p|²)`.
pub fn slice_distances(f: &DistributionField, g: &DistributionField) -> Result<Vec<f64>> {
    ensure_same_grid(f, g)?;
    Ok((0..f.grid.x_count())
        .map(|ix| f.grid.slice_distance(f.slice(ix), g.slice(ix)))
        .collect())
}

/// `sup_x (|P₂| + |P₃|)` of a field.
pub fn transverse_momentum(f: &DistributionField) -> f64 {
    f.raw_moments()
        .iter()
        .map(|m| m.momentum[1].abs() + m.momentum[2].abs())
        .fold(0.0, f64::max)
}
