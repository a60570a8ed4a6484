//! Value types and single-state quantities: energies, moment of inertia,
//! angular momenta, the Sundman gap and collinearity measures.

mod diagnostics;
mod potential;

pub use diagnostics::{
    angular_momentum, collinearity_residual, kinetic_energy, moment_of_inertia,
    moment_of_inertia_pairwise, omega_estimate, principal_axis_angle, radial_product,
    sundman_gap, sundman_tolerance, torque_per_body, Diagnostics,
};
pub use potential::{accelerations, grad_potential, potential_energy, PairLaw};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub type Vec2 = Vector2<f64>;

/// Ordered positive masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassSystem {
    masses: Vec<f64>,
    total: f64,
}

impl MassSystem {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(CoreError::InvalidMasses(format!(
                "need at least two bodies, got {}",
                masses.len()
            )));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
            return Err(CoreError::InvalidMasses(format!("mass {i} = {m} is not strictly positive")));
        }
        let total = masses.iter().sum();
        Ok(Self { masses, total })
    }

    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Masses listed in the given body order.
    pub fn permuted(&self, ordering: &[usize]) -> Result<Self> {
        Self::new(ordering.iter().map(|&i| self.masses[i]).collect())
    }
}

impl std::ops::Index<usize> for MassSystem {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.masses[i]
    }
}

impl TryFrom<Vec<f64>> for MassSystem {
    type Error = CoreError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MassSystem> for Vec<f64> {
    fn from(m: MassSystem) -> Self {
        m.masses
    }
}

/// Planar positions and velocities in the barycentric, momentum-free frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    positions: Vec<Vec2>,
    velocities: Vec<Vec2>,
    time: f64,
}

impl PhaseState {
    /// Builds a state, shifting positions and velocities into the
    /// center-of-mass frame. Any offset of the input is discarded.
    pub fn new(masses: &MassSystem, positions: Vec<Vec2>, velocities: Vec<Vec2>, time: f64) -> Result<Self> {
        let n = masses.len();
        if positions.len() != n || velocities.len() != n {
            return Err(CoreError::InvalidState(format!(
                "{} positions and {} velocities for {n} bodies",
                positions.len(),
                velocities.len()
            )));
        }
        let finite = |v: &Vec2| v.x.is_finite() && v.y.is_finite();
        if !positions.iter().all(finite) || !velocities.iter().all(finite) || !time.is_finite() {
            return Err(CoreError::InvalidState("non-finite coordinate".into()));
        }
        let mut state = Self { positions, velocities, time };
        state.recenter(masses);
        Ok(state)
    }

    /// Bodies on the x-axis at rest.
    pub fn at_rest_on_line(masses: &MassSystem, xs: &[f64]) -> Result<Self> {
        let positions = xs.iter().map(|&x| Vec2::new(x, 0.0)).collect();
        Self::new(masses, positions, vec![Vec2::zeros(); xs.len()], 0.0)
    }

    fn recenter(&mut self, masses: &MassSystem) {
        let m = masses.masses();
        let total = masses.total();
        let weighted = |vs: &[Vec2]| -> Vec2 {
            vs.iter().zip(m).fold(Vec2::zeros(), |acc, (v, &mi)| acc + v * mi) / total
        };
        let center = weighted(&self.positions);
        let drift = weighted(&self.velocities);
        self.positions.iter_mut().for_each(|r| *r -= center);
        self.velocities.iter_mut().for_each(|v| *v -= drift);
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec2] {
        &self.velocities
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Largest distance of a body from the barycenter.
    pub fn scale(&self) -> f64 {
        self.positions.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Largest speed in the barycentric frame.
    pub fn speed_scale(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_separation(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = (self.positions[i] - self.positions[j]).norm();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        best
    }

    /// Same configuration with velocities negated (time reversal).
    pub fn reversed(&self) -> Self {
        Self {
            positions: self.positions.clone(),
            velocities: self.velocities.iter().map(|v| -v).collect(),
            time: self.time,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Positions followed by velocities as `[x0, y0, x1, y1, ..., vx0, vy0, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.len());
        out.extend(self.positions.iter().flat_map(|r| [r.x, r.y]));
        out.extend(self.velocities.iter().flat_map(|v| [v.x, v.y]));
        out
    }

    pub fn from_flat(masses: &MassSystem, flat: &[f64], time: f64) -> Result<Self> {
        let n = masses.len();
        if flat.len() != 4 * n {
            return Err(CoreError::InvalidState(format!("flat state of length {} for {n} bodies", flat.len())));
        }
        let pair = |k: usize| Vec2::new(flat[2 * k], flat[2 * k + 1]);
        let positions = (0..n).map(pair).collect();
        let velocities = (n..2 * n).map(pair).collect();
        Self::new(masses, positions, velocities, time)
    }

    /// Largest coordinate difference to another state, positions and
    /// velocities alike.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One `coefficient * beta * m_i m_j r^alpha` contribution to the Lagrangian,
/// with `beta = +1` for `alpha < 0` and `beta = -1` for `alpha > 0`.
///
/// A positive coefficient is attracting for either sign of `alpha`; a
/// negative coefficient is repulsive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub alpha: f64,
    pub coefficient: f64,
}

impl PotentialTerm {
    pub fn beta(&self) -> f64 {
        if self.alpha < 0.0 { 1.0 } else { -1.0 }
    }

    pub fn is_attracting(&self) -> bool {
        self.coefficient > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PotentialTerm>", into = "Vec<PotentialTerm>")]
pub struct PotentialSpec {
    terms: Vec<PotentialTerm>,
}

impl PotentialSpec {
    pub fn new(terms: Vec<PotentialTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(CoreError::InvalidPotential("no terms".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if !t.alpha.is_finite() || !t.coefficient.is_finite() {
                return Err(CoreError::InvalidPotential(format!("term {k} is not finite")));
            }
            if t.alpha == 0.0 {
                return Err(CoreError::InvalidPotential(format!("term {k} has alpha = 0")));
            }
        }
        if terms.iter().all(|t| t.coefficient == 0.0) {
            return Err(CoreError::InvalidPotential("all coefficients are zero".into()));
        }
        Ok(Self { terms })
    }

    /// `U = -G * sum m_i m_j / r_ij`.
    pub fn newtonian(g: f64) -> Self {
        Self::homogeneous(-1.0, g).expect("newtonian potential is valid")
    }

    pub fn homogeneous(alpha: f64, coefficient: f64) -> Result<Self> {
        Self::new(vec![PotentialTerm { alpha, coefficient }])
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    fn active(&self) -> impl Iterator<Item = &PotentialTerm> {
        self.terms.iter().filter(|t| t.coefficient != 0.0)
    }

    /// Degree of homogeneity, if every nonzero term shares one exponent.
    pub fn degree(&self) -> Option<f64> {
        let mut active = self.active();
        let first = active.next()?.alpha;
        active.all(|t| t.alpha == first).then_some(first)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.degree().is_some()
    }

    pub fn has_attracting_term(&self) -> bool {
        self.terms.iter().any(PotentialTerm::is_attracting)
    }

    pub fn law<R: crate::real::Real>(&self) -> PairLaw<R> {
        PairLaw::new(self)
    }
}

impl TryFrom<Vec<PotentialTerm>> for PotentialSpec {
    type Error = CoreError;
    fn try_from(v: Vec<PotentialTerm>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PotentialSpec> for Vec<PotentialTerm> {
    fn from(p: PotentialSpec) -> Self {
        p.terms
    }
}
