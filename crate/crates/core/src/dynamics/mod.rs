//! Equations of motion and time integration.
//!
//! The default scheme is Gragg-Bulirsch-Stoer extrapolation with error
//! control from the extrapolation tableau. It runs in either `f64` or the
//! 237-bit [`f256`](crate::real::f256) type; the latter is what makes the
//! collinear witness runs possible, since collinear relative equilibria are
//! linearly unstable and amplify double-precision roundoff by several orders
//! of magnitude per period.

mod extrapolation;
mod series;
mod symplectic;

pub use crate::model::accelerations;
pub use series::{diagnostics_series, finite_difference, DiagnosticSeries};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{Diagnostics, MassSystem, PhaseState, PotentialSpec, Vec2};
use crate::real::{f256, Real};

/// Arithmetic used for the integration itself. Samples are always rounded to
/// `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymplecticOrder {
    /// Kick-drift-kick leapfrog.
    #[default]
    Second,
    /// Yoshida's fourth-order composition of leapfrog steps.
    Fourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scheme {
    /// Adaptive extrapolation with embedded error estimate.
    #[default]
    Extrapolation,
    /// Fixed step; the step is shortened so that samples land on the grid.
    Symplectic { step: f64, order: SymplecticOrder },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Defaults to `1e-8` times the initial configuration scale.
    pub min_separation: Option<f64>,
    pub sample_interval: f64,
    pub precision: Precision,
    pub scheme: Scheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            min_separation: None,
            sample_interval: 0.01,
            precision: Precision::Double,
            scheme: Scheme::Extrapolation,
        }
    }
}

impl IntegratorConfig {
    /// Tolerances for extended-precision runs.
    pub fn extended() -> Self {
        Self { rel_tol: 1e-36, abs_tol: 1e-38, precision: Precision::Extended, ..Self::default() }
    }

    pub fn with_sample_interval(mut self, dt: f64) -> Self {
        self.sample_interval = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let floor = match self.precision {
            Precision::Double => 1e-14,
            Precision::Extended => 1e-60,
        };
        let bad = |what: &str| Err(CoreError::InvalidConfig(what.to_string()));
        if !(self.rel_tol >= floor) {
            return bad(&format!("rel_tol must be at least {floor:e}"));
        }
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol must be positive");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad("sample_interval must be positive");
        }
        if let Some(d) = self.min_separation {
            if !(d > 0.0) {
                return bad("min_separation must be positive");
            }
        }
        if let Scheme::Symplectic { step, .. } = self.scheme {
            if !(step > 0.0 && step.is_finite()) {
                return bad("symplectic step must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// `max |H(t) - H(0)| / |H(0)|` over samples (absolute if `H(0) = 0`).
    pub max_energy_drift: f64,
    /// `max |sum m_i r_i| / (M scale)` before samples are re-centered.
    pub max_barycenter_drift: f64,
}

/// Samples at a uniform interval from the initial time plus the end point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(PhaseState::time).collect()
    }

    pub fn first(&self) -> &PhaseState {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.samples.last().expect("trajectories are nonempty")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Phase-space point in an arbitrary [`Real`] representation, flat
/// `[x0, y0, x1, y1, ...]` positions and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct RawState<R> {
    pub positions: Vec<R>,
    pub velocities: Vec<R>,
    pub time: R,
}

pub type ExtendedState = RawState<f256>;

impl<R: Real> RawState<R> {
    pub fn from_phase(state: &PhaseState) -> Self {
        Self {
            positions: state.positions().iter().flat_map(|r| [R::from_f64(r.x), R::from_f64(r.y)]).collect(),
            velocities: state.velocities().iter().flat_map(|v| [R::from_f64(v.x), R::from_f64(v.y)]).collect(),
            time: R::from_f64(state.time()),
        }
    }

    /// Rounds to `f64` and re-centers.
    pub fn to_phase(&self, masses: &MassSystem) -> Result<PhaseState> {
        let pair = |v: &[R]| -> Vec<Vec2> { v.chunks_exact(2).map(|c| Vec2::new(c[0].to_f64(), c[1].to_f64())).collect() };
        PhaseState::new(masses, pair(&self.positions), pair(&self.velocities), self.time.to_f64())
    }

    pub fn len(&self) -> usize {
        self.positions.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Velocities negated.
    pub fn reversed(&self) -> Self {
        Self {
            positions: self.positions.clone(),
            velocities: self.velocities.iter().map(|&v| -v).collect(),
            time: self.time,
        }
    }

    /// Relative barycenter offset `|sum m_i r_i| / (M scale)`.
    pub fn barycenter_drift(&self, masses: &[R]) -> f64 {
        let (mut cx, mut cy, mut total, mut scale) = (R::zero(), R::zero(), R::zero(), R::zero());
        for (i, &m) in masses.iter().enumerate() {
            let (x, y) = (self.positions[2 * i], self.positions[2 * i + 1]);
            cx += m * x;
            cy += m * y;
            total += m;
            scale = scale.max((x * x + y * y).sqrt());
        }
        if scale == R::zero() {
            return 0.0;
        }
        ((cx * cx + cy * cy).sqrt() / (total * scale)).to_f64()
    }

    pub fn min_separation(&self) -> (R, usize, usize) {
        let n = self.len();
        let mut best = (None::<R>, 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                let dx = self.positions[2 * i] - self.positions[2 * j];
                let dy = self.positions[2 * i + 1] - self.positions[2 * j + 1];
                let d = (dx * dx + dy * dy).sqrt();
                if best.0.is_none_or(|b| d < b) {
                    best = (Some(d), i, j);
                }
            }
        }
        (best.0.unwrap_or_else(R::zero), best.1, best.2)
    }

    pub fn scale(&self) -> R {
        self.positions
            .chunks_exact(2)
            .map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt())
            .fold(R::zero(), R::max)
    }

    /// Largest coordinate difference, evaluated in `R`.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.positions
            .iter()
            .chain(&self.velocities)
            .zip(other.positions.iter().chain(&other.velocities))
            .map(|(&a, &b)| (a - b).abs())
            .fold(R::zero(), R::max)
            .to_f64()
    }
}

/// Integrates from `state.time()` to `t_end` in the precision named by the
/// configuration.
pub fn integrate(
    state: &PhaseState,
    masses: &MassSystem,
    pot: &PotentialSpec,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    match config.precision {
        Precision::Double => integrate_raw::<f64>(&RawState::from_phase(state), masses, pot, t_end, config).map(|r| r.0),
        Precision::Extended => integrate_raw::<f256>(&RawState::from_phase(state), masses, pot, t_end, config).map(|r| r.0),
    }
}

/// Integrates an exact state in `R`, returning the sampled trajectory and the
/// unrounded final state.
pub fn integrate_raw<R: Real>(
    state: &RawState<R>,
    masses: &MassSystem,
    pot: &PotentialSpec,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<(Trajectory, RawState<R>)> {
    config.validate()?;
    if state.len() != masses.len() {
        return Err(CoreError::InvalidState(format!("{} bodies in state, {} masses", state.len(), masses.len())));
    }
    let t0 = state.time.to_f64();
    if !(t_end > t0) {
        return Err(CoreError::InvalidConfig(format!("t_end = {t_end} must exceed the initial time {t0}")));
    }
    let (d, i, j) = state.min_separation();
    if d == R::zero() {
        return Err(CoreError::Singularity { i, j });
    }
    let min_sep = config.min_separation.unwrap_or(1e-8 * state.scale().to_f64());
    let mut recorder = Recorder::new(masses, pot, state)?;
    let mut driver = Driver {
        law: pot.law::<R>(),
        masses: masses.masses().iter().map(|&m| R::from_f64(m)).collect(),
        min_separation: R::from_f64(min_sep),
        evaluations: 0,
    };
    let schedule = SampleSchedule::new(state.time, R::from_f64(t_end), R::from_f64(config.sample_interval));
    let (final_state, steps, rejected) = match config.scheme {
        Scheme::Extrapolation => extrapolation::run(&mut driver, state, &schedule, config, &mut recorder)?,
        Scheme::Symplectic { step, order } => {
            symplectic::run(&mut driver, state, &schedule, R::from_f64(step), order, &mut recorder)?
        }
    };
    let mut traj = recorder.finish();
    traj.stats.steps = steps;
    traj.stats.rejected = rejected;
    traj.stats.rhs_evaluations = driver.evaluations;
    Ok((traj, final_state))
}

/// Shared pieces of the time steppers: right-hand side and collision guard.
struct Driver<R> {
    law: crate::model::PairLaw<R>,
    masses: Vec<R>,
    min_separation: R,
    evaluations: usize,
}

impl<R: Real> Driver<R> {
    /// `y = [positions, velocities]`, `dy = [velocities, accelerations]`.
    /// Returns `false` if two bodies coincide.
    fn rhs(&mut self, y: &[R], dy: &mut [R]) -> bool {
        self.evaluations += 1;
        let half = y.len() / 2;
        dy[..half].copy_from_slice(&y[half..]);
        let (pos, acc) = (&y[..half], &mut dy[half..]);
        self.law.accelerations_into(&self.masses, pos, acc).is_ok()
    }

    fn accelerations(&mut self, positions: &[R], out: &mut [R]) -> bool {
        self.evaluations += 1;
        self.law.accelerations_into(&self.masses, positions, out).is_ok()
    }

    fn guard(&self, positions: &[R], time: R) -> Result<()> {
        let n = self.masses.len();
        for i in 0..n {
            for j in i + 1..n {
                let dx = positions[2 * i] - positions[2 * j];
                let dy = positions[2 * i + 1] - positions[2 * j + 1];
                let d = (dx * dx + dy * dy).sqrt();
                if d < self.min_separation {
                    return Err(CoreError::CloseApproach { time: time.to_f64(), i, j, distance: d.to_f64() });
                }
            }
        }
        Ok(())
    }
}

/// Sample times `t0 + k dt` below `t_end`, then `t_end` itself.
struct SampleSchedule<R> {
    t0: R,
    t_end: R,
    dt: R,
    count: usize,
}

impl<R: Real> SampleSchedule<R> {
    fn new(t0: R, t_end: R, dt: R) -> Self {
        let span = ((t_end - t0) / dt).to_f64();
        // drop a grid point that would sit within 1e-9 dt of the end point
        let mut count = span.floor() as usize + 1;
        if R::from_usize(count - 1) * dt + t0 >= t_end - dt * R::from_f64(1e-9) {
            count -= 1;
        }
        Self { t0, t_end, dt, count: count.max(1) }
    }

    /// Times after the initial one, in order.
    fn targets(&self) -> impl Iterator<Item = R> + '_ {
        (1..self.count).map(|k| self.t0 + R::from_usize(k) * self.dt).chain(std::iter::once(self.t_end))
    }
}

struct Recorder<'a> {
    masses: &'a MassSystem,
    pot: &'a PotentialSpec,
    mass_r: Vec<f64>,
    energy0: f64,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new<R: Real>(masses: &'a MassSystem, pot: &'a PotentialSpec, state: &RawState<R>) -> Result<Self> {
        let mut rec = Self {
            masses,
            pot,
            mass_r: masses.masses().to_vec(),
            energy0: 0.0,
            traj: Trajectory { samples: Vec::new(), stats: IntegratorStats::default() },
        };
        let first = state.to_phase(masses)?;
        rec.energy0 = Diagnostics::evaluate(&first, masses, pot).map(|d| d.energy).unwrap_or(f64::NAN);
        rec.push(state)?;
        Ok(rec)
    }

    fn push<R: Real>(&mut self, state: &RawState<R>) -> Result<()> {
        let masses_r: Vec<R> = self.mass_r.iter().map(|&m| R::from_f64(m)).collect();
        let drift = state.barycenter_drift(&masses_r);
        let sample = state.to_phase(self.masses)?;
        let energy = crate::model::potential_energy(&sample, self.masses, self.pot)?
            + crate::model::kinetic_energy(&sample, self.masses);
        let denom = if self.energy0 != 0.0 { self.energy0.abs() } else { 1.0 };
        let stats = &mut self.traj.stats;
        stats.max_energy_drift = stats.max_energy_drift.max((energy - self.energy0).abs() / denom);
        stats.max_barycenter_drift = stats.max_barycenter_drift.max(drift);
        self.traj.samples.push(sample);
        Ok(())
    }

    fn finish(self) -> Trajectory {
        self.traj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_covers_the_span() {
        let s = SampleSchedule::new(0.0, 1.0, 0.3);
        let t: Vec<f64> = s.targets().collect();
        assert_eq!(t.len(), 4);
        assert!((t[0] - 0.3).abs() < 1e-15 && t[3] == 1.0);
        let exact = SampleSchedule::new(0.0, 1.0, 0.25);
        let t: Vec<f64> = exact.targets().collect();
        assert_eq!(t, vec![0.25, 0.5, 0.75, 1.0]);
        let coarse = SampleSchedule::new(0.0, 1.0, 5.0);
        assert_eq!(coarse.targets().collect::<Vec<f64>>(), vec![1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(IntegratorConfig::extended().validate().is_ok());
        let tight = IntegratorConfig { rel_tol: 1e-16, ..IntegratorConfig::default() };
        assert!(tight.validate().is_err());
        let no_samples = IntegratorConfig { sample_interval: 0.0, ..IntegratorConfig::default() };
        assert!(no_samples.validate().is_err());
    }

    #[test]
    fn raw_state_round_trip() {
        let m = MassSystem::new(vec![1.0, 2.0]).unwrap();
        let s = PhaseState::new(
            &m,
            vec![Vec2::new(-2.0, 0.5), Vec2::new(1.0, -0.25)],
            vec![Vec2::new(0.1, 0.2), Vec2::new(-0.05, -0.1)],
            3.0,
        )
        .unwrap();
        let raw = RawState::<f256>::from_phase(&s);
        assert_eq!(raw.to_phase(&m).unwrap(), s);
        assert!(raw.barycenter_drift(&[f256::from_f64(1.0), f256::from_f64(2.0)]) < 1e-16);
        assert_eq!(raw.reversed().velocities[0].to_f64(), -0.1);
    }
}
