//! Initial conditions for relative equilibria, homographic and homothetic
//! motions, non-central collinear controls and the figure-eight, plus the
//! homographic fit of a trajectory.

use serde::{Deserialize, Serialize};

use crate::central_config::{cc_residual, CollinearConfiguration, ExactCollinear, RESIDUAL_TOLERANCE};
use crate::dynamics::{RawState, Trajectory};
use crate::error::{CoreError, Result};
use crate::model::{moment_of_inertia, principal_axis_angle, MassSystem, PhaseState, PotentialSpec, Vec2};
use crate::real::Real;

/// Smallest best-fit residual accepted for a non-central control shape.
pub const CONTROL_THRESHOLD: f64 = 1e-3;

const FIGURE_EIGHT: &str = include_str!("../fixtures/figure_eight.txt");

fn check_solved(cc: &CollinearConfiguration, masses: &MassSystem) -> Result<()> {
    if cc.ordering.len() != masses.len() {
        return Err(CoreError::Precondition(format!(
            "configuration has {} bodies, mass system {}",
            cc.ordering.len(),
            masses.len()
        )));
    }
    if !(cc.residual_norm <= RESIDUAL_TOLERANCE) || !(cc.lambda > 0.0) {
        return Err(CoreError::Precondition("configuration is not a solved central configuration".into()));
    }
    Ok(())
}

/// Bodies on the x axis at `xs` with velocities `dilation * r + omega * z x r`.
fn line_state<R: Real>(xs: &[R], omega: R, dilation: R) -> RawState<R> {
    let mut positions = Vec::with_capacity(2 * xs.len());
    let mut velocities = Vec::with_capacity(2 * xs.len());
    for &x in xs {
        positions.extend([x, R::zero()]);
        velocities.extend([dilation * x, omega * x]);
    }
    RawState { positions, velocities, time: R::zero() }
}

fn to_phase(raw: &RawState<f64>, masses: &MassSystem) -> Result<PhaseState> {
    raw.to_phase(masses)
}

/// Rigid rotation of the configuration at `omega = sqrt(2 lambda)`.
pub fn relative_equilibrium_ics(cc: &CollinearConfiguration, masses: &MassSystem) -> Result<PhaseState> {
    homographic_ics(cc, masses, cc.omega(), 0.0)
}

/// `dr_i/dt = dilation_rate * r_i + omega0 * z x r_i` on the configuration.
pub fn homographic_ics(
    cc: &CollinearConfiguration,
    masses: &MassSystem,
    omega0: f64,
    dilation_rate: f64,
) -> Result<PhaseState> {
    check_solved(cc, masses)?;
    if !omega0.is_finite() || !dilation_rate.is_finite() {
        return Err(CoreError::Precondition("omega0 and dilation_rate must be finite".into()));
    }
    to_phase(&line_state(&cc.positions(masses), omega0, dilation_rate), masses)
}

pub fn relative_equilibrium_raw<R: Real>(cc: &ExactCollinear<R>) -> RawState<R> {
    line_state(&cc.positions, cc.omega(), R::zero())
}

/// [`homographic_ics`] carried in `R`; `omega_factor` multiplies the
/// relative-equilibrium rate.
pub fn homographic_raw<R: Real>(cc: &ExactCollinear<R>, omega_factor: f64, dilation_rate: f64) -> RawState<R> {
    line_state(&cc.positions, cc.omega() * R::from_f64(omega_factor), R::from_f64(dilation_rate))
}

/// Residual of the best-fit multiplier for an arbitrary collinear shape.
pub fn best_fit_residual(masses: &MassSystem, pot: &PotentialSpec, ordering: &[usize], gaps: &[f64]) -> Result<f64> {
    let probe = CollinearConfiguration { ordering: ordering.to_vec(), gaps: gaps.to_vec(), lambda: 0.0, residual_norm: f64::NAN };
    let at_zero = cc_residual(&probe, masses, pot)?;
    // e_k(lambda) = e_k(0) + 2 lambda g_k; least squares in lambda
    let num: f64 = at_zero.components.iter().zip(gaps).map(|(e, g)| e * g).sum();
    let den: f64 = gaps.iter().map(|g| 2.0 * g * g).sum();
    let lambda = -num / den;
    Ok(cc_residual(&CollinearConfiguration { lambda, ..probe }, masses, pot)?.norm)
}

/// Rigidly rotating data on a collinear shape that is not central. Bodies are
/// placed left to right in index order.
pub fn non_central_collinear_ics(masses: &MassSystem, pot: &PotentialSpec, gaps: &[f64], omega0: f64) -> Result<PhaseState> {
    let n = masses.len();
    if gaps.len() != n - 1 || !gaps.iter().all(|&g| g > 0.0 && g.is_finite()) {
        return Err(CoreError::Precondition("gaps must be n - 1 positive numbers".into()));
    }
    let ordering: Vec<usize> = (0..n).collect();
    let residual = best_fit_residual(masses, pot, &ordering, gaps)?;
    if residual < CONTROL_THRESHOLD {
        return Err(CoreError::Precondition(format!(
            "gaps {gaps:?} nearly solve the central-configuration equation (residual {residual:.3e})"
        )));
    }
    let mut xs = vec![0.0];
    for g in gaps {
        xs.push(xs.last().expect("nonempty") + g);
    }
    let center = xs.iter().zip(masses.masses()).map(|(x, m)| x * m).sum::<f64>() / masses.total();
    xs.iter_mut().for_each(|x| *x -= center);
    to_phase(&line_state(&xs, omega0, 0.0), masses)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub masses: MassSystem,
    pub state: PhaseState,
    pub period: Option<f64>,
}

/// Parses `mass x y vx vy` rows, an optional `period T` row and `#` comments.
pub fn parse_fixture(text: &str) -> Result<Fixture> {
    let mut masses = Vec::new();
    let mut positions = Vec::new();
    let mut velocities = Vec::new();
    let mut period = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CoreError::InvalidState(format!("fixture line {}: {line:?}", lineno + 1));
        if let Some(rest) = line.strip_prefix("period") {
            period = Some(rest.trim().parse::<f64>().map_err(|_| bad())?);
            continue;
        }
        let fields: Vec<f64> = line.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let [m, x, y, vx, vy] = fields[..] else { return Err(bad()) };
        masses.push(m);
        positions.push(Vec2::new(x, y));
        velocities.push(Vec2::new(vx, vy));
    }
    let masses = MassSystem::new(masses)?;
    let state = PhaseState::new(&masses, positions, velocities, 0.0)?;
    Ok(Fixture { masses, state, period })
}

/// Figure-eight choreography of three unit masses with `G = 1`.
pub fn figure_eight_ics() -> Fixture {
    parse_fixture(FIGURE_EIGHT).expect("bundled fixture is well formed")
}

/// Radial period of a Newtonian homographic orbit started at the
/// configuration with the given rotation rate and dilation rate. `None` if
/// the orbit is unbounded.
pub fn newtonian_radial_period(cc: &CollinearConfiguration, pot: &PotentialSpec, omega0: f64, dilation_rate: f64) -> Result<Option<f64>> {
    if pot.degree() != Some(-1.0) {
        return Err(CoreError::Precondition("radial period is only available for the Newtonian law".into()));
    }
    let mu = 2.0 * cc.lambda;
    let energy = 0.5 * (dilation_rate * dilation_rate + omega0 * omega0) - mu;
    if energy >= 0.0 {
        return Ok(None);
    }
    let a = -mu / (2.0 * energy);
    Ok(Some(2.0 * std::f64::consts::PI * a.powf(1.5) / mu.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomographicFit {
    pub times: Vec<f64>,
    /// `sqrt(I(t) / I(t0))`.
    pub scale_series: Vec<f64>,
    /// Principal-axis angle, lifted continuously.
    pub angle_series: Vec<f64>,
    pub max_shape_deviation: f64,
    pub worst_time: f64,
}

fn pair_distances(state: &PhaseState) -> Vec<f64> {
    let r = state.positions();
    let mut out = Vec::with_capacity(r.len() * (r.len() - 1) / 2);
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            out.push((r[i] - r[j]).norm());
        }
    }
    out
}

/// Lifts angles defined modulo `pi` to a continuous series.
pub fn unwrap_axis_angles(raw: &[f64]) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (k, &a) in raw.iter().enumerate() {
        if k > 0 {
            let prev = raw[k - 1];
            let mut step = a - prev;
            while step > pi / 2.0 {
                step -= pi;
                offset -= pi;
            }
            while step <= -pi / 2.0 {
                step += pi;
                offset += pi;
            }
        }
        out.push(a + offset);
    }
    out
}

/// Fits `r_i(t) = nu(t) Omega(t) r_i(0)` and measures how far the distance
/// ratios drift from their initial values.
pub fn fit_homographic(traj: &Trajectory, masses: &MassSystem) -> Result<HomographicFit> {
    if traj.is_empty() {
        return Err(CoreError::Precondition("empty trajectory".into()));
    }
    let first = traj.first();
    let i0 = moment_of_inertia(first, masses);
    if !(i0 > 0.0) {
        return Err(CoreError::DegenerateConfiguration("initial moment of inertia vanishes".into()));
    }
    let d0 = pair_distances(first);
    let cutoff = 1e-9 * first.scale();
    let references: Vec<usize> = (0..d0.len()).filter(|&k| d0[k] > cutoff).collect();
    let mut scale_series = Vec::with_capacity(traj.len());
    let mut raw_angles = Vec::with_capacity(traj.len());
    let (mut max_shape_deviation, mut worst_time) = (0.0f64, first.time());
    for state in &traj.samples {
        let inertia = moment_of_inertia(state, masses);
        if !(inertia > 0.0) {
            return Err(CoreError::DegenerateConfiguration(format!("moment of inertia vanishes at t = {}", state.time())));
        }
        scale_series.push((inertia / i0).sqrt());
        raw_angles.push(principal_axis_angle(state));
        let d = pair_distances(state);
        for &kl in &references {
            for ij in 0..d.len() {
                let dev = (d[ij] / d[kl] - d0[ij] / d0[kl]).abs();
                if dev > max_shape_deviation {
                    max_shape_deviation = dev;
                    worst_time = state.time();
                }
            }
        }
    }
    Ok(HomographicFit {
        times: traj.times(),
        scale_series,
        angle_series: unwrap_axis_angles(&raw_angles),
        max_shape_deviation,
        worst_time,
    })
}
