//! Local quantum equilibria: regime classification, recovery of the
//! equilibrium parameters `(a, c)` from moments, pointwise evaluation and
//! closed-form moments.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::{self, QuadratureSpec, Statistics};

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Local mass, momentum and energy at one slab position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTriple {
    pub mass: f64,
    pub momentum: Vec3,
    pub energy: f64,
}

impl MomentTriple {
    /// Builds a triple, rejecting `N <= 0`, `E <= 0` or `EN - |P|² <= 0`.
    pub fn new(mass: f64, momentum: Vec3, energy: f64) -> Result<Self> {
        let m = Self { mass, momentum, energy };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::Invariant(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.energy > 0.0) || !self.energy.is_finite() {
            return Err(Error::Invariant(format!(
                "energy must be positive, got {}",
                self.energy
            )));
        }
        if !(self.gram() > 0.0) {
            return Err(Error::Invariant(format!(
                "E·N - |P|² must be positive, got {}",
                self.gram()
            )));
        }
        Ok(())
    }

    /// `E·N - |P|²`.
    pub fn gram(&self) -> f64 {
        self.energy * self.mass - dot(&self.momentum, &self.momentum)
    }

    /// `N^{8/5} / (E·N - |P|²)^{3/5}`, which equals `N / (E - |P|²/N)^{3/5}`.
    pub fn ratio(&self) -> f64 {
        self.mass.powf(1.6) / self.gram().powf(0.6)
    }

    /// Internal energy `E - |P|²/N`.
    pub fn internal_energy(&self) -> f64 {
        self.gram() / self.mass
    }

    pub fn drift(&self) -> Vec3 {
        self.momentum.map(|p| p / self.mass)
    }

    /// Componentwise linear interpolation `(1 - θ)·self + θ·other`.
    pub fn lerp(&self, other: &Self, theta: f64) -> Self {
        let mix = |a: f64, b: f64| (1.0 - theta) * a + theta * b;
        Self {
            mass: mix(self.mass, other.mass),
            momentum: [
                mix(self.momentum[0], other.momentum[0]),
                mix(self.momentum[1], other.momentum[1]),
                mix(self.momentum[2], other.momentum[2]),
            ],
            energy: mix(self.energy, other.energy),
        }
    }
}

/// Which branch of the quantum equilibrium the moments select.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum Regime {
    Regular,
    /// Bose–Einstein condensate carrying the given point mass.
    Condensed {
        weight: f64,
    },
    /// Saturated Fermi–Dirac ball of the given radius.
    Saturated {
        radius: f64,
    },
}

impl Regime {
    pub fn is_regular(&self) -> bool {
        matches!(self, Regime::Regular)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Regular => "regular",
            Regime::Condensed { .. } => "condensed",
            Regime::Saturated { .. } => "saturated",
        }
    }
}

/// Parameters of a regular local equilibrium `1 / (e^{a|p-u|²+c} ± 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumParams {
    pub stat: Statistics,
    pub a: f64,
    pub c: f64,
    pub drift: Vec3,
    pub regime: Regime,
}

impl EquilibriumParams {
    /// A regular equilibrium with explicit parameters.
    pub fn regular(stat: Statistics, a: f64, c: f64, drift: Vec3) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(crate::error::validation("a", "must be positive"));
        }
        if !c.is_finite() || (stat == Statistics::Boson && c < 0.0) {
            return Err(crate::error::validation("c", "outside the statistics domain"));
        }
        Ok(Self {
            stat,
            a,
            c,
            drift,
            regime: Regime::Regular,
        })
    }

    fn require_regular(&self) -> Result<()> {
        if self.regime.is_regular() {
            Ok(())
        } else {
            Err(Error::Regime(format!(
                "{} equilibrium has no pointwise regular form",
                self.regime.name()
            )))
        }
    }

    /// `e^{-a(t - u_axis)²}` at each node of one momentum axis; the
    /// equilibrium on a tensor grid is then `z/(1 ∓ z)` with
    /// `z = e^{-c}·g₁·g₂·g₃`.
    pub(crate) fn axis_factors(&self, axis: usize, nodes: &[f64]) -> Vec<f64> {
        let u = self.drift[axis];
        nodes.iter().map(|&t| (-self.a * (t - u) * (t - u)).exp()).collect()
    }

    /// Occupation from the product `z = e^{-(a|p-u|²+c)}`.
    #[inline]
    pub(crate) fn occupation_from_product(stat: Statistics, z: f64) -> f64 {
        match stat {
            Statistics::Boson => z / (1.0 - z),
            Statistics::Fermion => z / (1.0 + z),
        }
    }
}

/// Classifies the equilibrium branch selected by the moments.
///
/// Bosons are regular when `ρ <= beta_B(0)`, fermions when
/// `ρ < beta_F(-ln 3)`, with `ρ = N^{8/5}/(EN - |P|²)^{3/5}`.
pub fn classify(m: &MomentTriple, stat: Statistics, q: &QuadratureSpec) -> Result<Regime> {
    m.validate()?;
    let threshold = stats::threshold(stat, q)?;
    classify_with_threshold(m, stat, threshold)
}

pub(crate) fn classify_with_threshold(m: &MomentTriple, stat: Statistics, threshold: f64) -> Result<Regime> {
    m.validate()?;
    let rho = m.ratio();
    Ok(match stat {
        Statistics::Boson if rho <= threshold => Regime::Regular,
        Statistics::Boson => Regime::Condensed {
            weight: m.mass - threshold * m.internal_energy().powf(0.6),
        },
        Statistics::Fermion if rho < threshold => Regime::Regular,
        Statistics::Fermion => Regime::Saturated {
            radius: (3.0 * m.mass / (4.0 * PI)).cbrt(),
        },
    })
}

/// Recovers `(a, c, u)` from the moments of a regular state.
pub fn solve_parameters(m: &MomentTriple, stat: Statistics, q: &QuadratureSpec) -> Result<EquilibriumParams> {
    let threshold = stats::threshold(stat, q)?;
    solve_parameters_with_threshold(m, stat, q, threshold)
}

pub(crate) fn solve_parameters_with_threshold(
    m: &MomentTriple,
    stat: Statistics,
    q: &QuadratureSpec,
    threshold: f64,
) -> Result<EquilibriumParams> {
    let regime = classify_with_threshold(m, stat, threshold)?;
    if !regime.is_regular() {
        return Err(Error::Regime(format!(
            "moments with ratio {} classify as {} for {}",
            m.ratio(),
            regime.name(),
            stat
        )));
    }
    let c = stats::beta_inverse(m.ratio(), stat, q)?;
    let mass = stats::radial_moments_unchecked(c, stat, q).mass;
    let a = (mass / m.mass).powf(2.0 / 3.0);
    Ok(EquilibriumParams {
        stat,
        a,
        c,
        drift: m.drift(),
        regime: Regime::Regular,
    })
}

/// Pointwise value `1 / (e^{a|p-u|²+c} ± 1)` of a regular equilibrium.
pub fn evaluate(params: &EquilibriumParams, p: &Vec3) -> Result<f64> {
    params.require_regular()?;
    let d = [p[0] - params.drift[0], p[1] - params.drift[1], p[2] - params.drift[2]];
    Ok(params.stat.occupation(params.a * dot(&d, &d) + params.c))
}

/// Closed-form moments of a regular equilibrium, obtained by the change of
/// variables `p = u + q/√a`.
pub fn analytic_moments(params: &EquilibriumParams, q: &QuadratureSpec) -> Result<MomentTriple> {
    params.require_regular()?;
    let radial = stats::radial_moments(params.c, params.stat, q)?;
    let mass = radial.mass / params.a.powf(1.5);
    let u = params.drift;
    Ok(MomentTriple {
        mass,
        momentum: u.map(|ui| mass * ui),
        energy: mass * dot(&u, &u) + radial.energy / params.a.powf(2.5),
    })
}

/// The regular part and condensate weight of a condensed boson state.
///
/// The regular part has `c = 0` and carries all of the internal energy.
pub fn condensate_split(m: &MomentTriple, q: &QuadratureSpec) -> Result<(EquilibriumParams, f64)> {
    let regime = classify(m, Statistics::Boson, q)?;
    let Regime::Condensed { weight } = regime else {
        return Err(Error::Regime("moments are not in the condensed regime".into()));
    };
    let radial = stats::radial_moments(0.0, Statistics::Boson, q)?;
    let a = (radial.energy / m.internal_energy()).powf(0.4);
    let params = EquilibriumParams {
        stat: Statistics::Boson,
        a,
        c: 0.0,
        drift: m.drift(),
        regime: Regime::Regular,
    };
    Ok((params, weight))
}

/// Saturated Fermi–Dirac value: 1 inside the ball `|p - u| <= (3N/4π)^{1/3}`,
/// 0 outside.
pub fn saturated_indicator(m: &MomentTriple, p: &Vec3) -> f64 {
    let radius = (3.0 * m.mass / (4.0 * PI)).cbrt();
    let u = m.drift();
    let d = [p[0] - u[0], p[1] - u[1], p[2] - u[2]];
    if dot(&d, &d) <= radius * radius {
        1.0
    } else {
        0.0
    }
}

/// Ranges `[a_*, a^*]` and `[c_*, c^*]` that bound the equilibrium
/// parameters of every member of the solution set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub a_lower: f64,
    pub a_upper: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

impl ParameterBounds {
    /// From the mass bounds `a_l <= N <= a_u`, the energy bound `E <= c_u`
    /// and the lower bound `k` on `EN - |P|²`.
    pub fn from_moment_bounds(
        a_l: f64,
        a_u: f64,
        c_u: f64,
        k: f64,
        stat: Statistics,
        q: &QuadratureSpec,
    ) -> Result<Self> {
        let c_lower = stats::beta_inverse(a_u.powf(1.6) / k.powf(0.6), stat, q)?;
        let c_upper = stats::beta_inverse(a_l.powf(1.6) / (a_u * c_u).powf(0.6), stat, q)?;
        let a_lower = (stats::mass_integral(c_upper, stat, q)? / a_u).powf(2.0 / 3.0);
        let a_upper = (stats::mass_integral(c_lower, stat, q)? / a_l).powf(2.0 / 3.0);
        Ok(Self {
            a_lower,
            a_upper,
            c_lower,
            c_upper,
        })
    }

    pub fn contains(&self, params: &EquilibriumParams, rel: f64) -> bool {
        let within = |v: f64, lo: f64, hi: f64| v >= lo - rel * lo.abs().max(1.0) && v <= hi + rel * hi.abs().max(1.0);
        within(params.a, self.a_lower, self.a_upper) && within(params.c, self.c_lower, self.c_upper)
    }
}
