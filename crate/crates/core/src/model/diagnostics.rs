use serde::{Deserialize, Serialize};

use super::{potential_energy, grad_potential, MassSystem, PhaseState, PotentialSpec, Vec2};
use crate::error::{CoreError, Result};

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// `T = 1/2 sum m_i |v_i|^2`.
pub fn kinetic_energy(state: &PhaseState, masses: &MassSystem) -> f64 {
    0.5 * state
        .velocities()
        .iter()
        .zip(masses.masses())
        .map(|(v, &m)| m * v.norm_squared())
        .sum::<f64>()
}

/// `I = sum m_i |r_i|^2` about the barycenter.
pub fn moment_of_inertia(state: &PhaseState, masses: &MassSystem) -> f64 {
    state
        .positions()
        .iter()
        .zip(masses.masses())
        .map(|(r, &m)| m * r.norm_squared())
        .sum()
}

/// `I = (1/2M) sum_i sum_j m_i m_j r_ij^2`, from mutual distances only.
pub fn moment_of_inertia_pairwise(state: &PhaseState, masses: &MassSystem) -> f64 {
    let (p, m) = (state.positions(), masses.masses());
    let mut sum = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            sum += m[i] * m[j] * (p[i] - p[j]).norm_squared();
        }
    }
    sum / masses.total()
}

/// Total and per-body z-angular momentum `K_i = m_i (x_i vy_i - y_i vx_i)`.
pub fn angular_momentum(state: &PhaseState, masses: &MassSystem) -> (f64, Vec<f64>) {
    let per_body: Vec<f64> = state
        .positions()
        .iter()
        .zip(state.velocities())
        .zip(masses.masses())
        .map(|((r, v), &m)| m * cross(r, v))
        .collect();
    (per_body.iter().sum(), per_body)
}

/// `J = sum m_i r_i . v_i`, half the time derivative of `I`.
pub fn radial_product(state: &PhaseState, masses: &MassSystem) -> f64 {
    state
        .positions()
        .iter()
        .zip(state.velocities())
        .zip(masses.masses())
        .map(|((r, v), &m)| m * r.dot(v))
        .sum()
}

/// `2TI - J^2 - K^2`, nonnegative by Sundman's inequality.
pub fn sundman_gap(state: &PhaseState, masses: &MassSystem) -> f64 {
    let t = kinetic_energy(state, masses);
    let i = moment_of_inertia(state, masses);
    let j = radial_product(state, masses);
    let (k, _) = angular_momentum(state, masses);
    2.0 * t * i - j * j - k * k
}

/// Roundoff allowance for the Sundman gap: `1e-10 * max(1, K^2)`.
pub fn sundman_tolerance(k: f64) -> f64 {
    1e-10 * (k * k).max(1.0)
}

/// Direction angle in `(-pi/2, pi/2]` of the major principal axis of the
/// unweighted second-moment matrix of the positions.
pub fn principal_axis_angle(state: &PhaseState) -> f64 {
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for r in state.positions() {
        sxx += r.x * r.x;
        syy += r.y * r.y;
        sxy += r.x * r.y;
    }
    0.5 * (2.0 * sxy).atan2(sxx - syy)
}

/// `max_i |r_i x e| / max_j |r_j|` with `e` the principal axis: zero exactly
/// when all bodies lie on one line through the barycenter.
pub fn collinearity_residual(state: &PhaseState) -> f64 {
    let scale = state.scale();
    if scale == 0.0 {
        return 0.0;
    }
    let theta = principal_axis_angle(state);
    let e = Vec2::new(theta.cos(), theta.sin());
    state.positions().iter().map(|r| cross(r, &e).abs()).fold(0.0, f64::max) / scale
}

/// `K / I`: the common angular rate of a rigidly rotating or collinear state.
pub fn omega_estimate(state: &PhaseState, masses: &MassSystem) -> Result<f64> {
    let inertia = moment_of_inertia(state, masses);
    if inertia <= 0.0 {
        return Err(CoreError::DegenerateConfiguration("moment of inertia is zero".into()));
    }
    Ok(angular_momentum(state, masses).0 / inertia)
}

/// z-component of `r_i x F_i` with `F_i = -dU/dr_i`.
pub fn torque_per_body(state: &PhaseState, masses: &MassSystem, pot: &PotentialSpec) -> Result<Vec<f64>> {
    let grad = grad_potential(state, masses, pot)?;
    Ok(state.positions().iter().zip(&grad).map(|(r, g)| -cross(r, g)).collect())
}

/// Every single-state quantity at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub potential: f64,
    pub kinetic: f64,
    pub energy: f64,
    pub inertia: f64,
    pub angular_momentum: f64,
    pub body_angular_momenta: Vec<f64>,
    pub radial_product: f64,
    pub sundman_gap: f64,
    pub collinearity: f64,
    pub omega: f64,
}

impl Diagnostics {
    pub fn evaluate(state: &PhaseState, masses: &MassSystem, pot: &PotentialSpec) -> Result<Self> {
        let potential = potential_energy(state, masses, pot)?;
        let kinetic = kinetic_energy(state, masses);
        let inertia = moment_of_inertia(state, masses);
        let (k, per_body) = angular_momentum(state, masses);
        let j = radial_product(state, masses);
        Ok(Self {
            time: state.time(),
            potential,
            kinetic,
            energy: kinetic + potential,
            inertia,
            angular_momentum: k,
            body_angular_momenta: per_body,
            radial_product: j,
            sundman_gap: 2.0 * kinetic * inertia - j * j - k * k,
            collinearity: collinearity_residual(state),
            omega: omega_estimate(state, masses)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn two_body_circular() -> (MassSystem, PhaseState) {
        let m = MassSystem::equal(2).unwrap();
        let v = SQRT_2 / 2.0;
        let s = PhaseState::new(
            &m,
            vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)],
            vec![Vec2::new(0.0, -v), Vec2::new(0.0, v)],
            0.0,
        )
        .unwrap();
        (m, s)
    }

    fn rigid(masses: &MassSystem, positions: Vec<Vec2>, omega: f64) -> PhaseState {
        let v = positions.iter().map(|r| Vec2::new(-omega * r.y, omega * r.x)).collect();
        PhaseState::new(masses, positions, v, 0.0).unwrap()
    }

    #[test]
    fn kinetic_energy_cases() {
        let m = MassSystem::equal(2).unwrap();
        let rest = PhaseState::at_rest_on_line(&m, &[-1.0, 1.0]).unwrap();
        assert_eq!(kinetic_energy(&rest, &m), 0.0);
        let moving = PhaseState::new(
            &m,
            vec![Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)],
            vec![Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0)],
            0.0,
        )
        .unwrap();
        assert_eq!(kinetic_energy(&moving, &m), 1.0);
    }

    #[test]
    fn rigid_rotation_energy() {
        let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
        let s = rigid(&m, vec![Vec2::new(1.0, 0.3), Vec2::new(-0.4, 0.8), Vec2::new(0.1, -0.7)], 0.7);
        let t = kinetic_energy(&s, &m);
        let i = moment_of_inertia(&s, &m);
        assert!((t - 0.5 * i * 0.49).abs() < 1e-14 * t);
    }

    #[test]
    fn inertia_both_forms() {
        let m = MassSystem::equal(3).unwrap();
        let s = PhaseState::at_rest_on_line(&m, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(moment_of_inertia(&s, &m), 2.0);
        assert_eq!(moment_of_inertia_pairwise(&s, &m), 2.0);
        let m2 = MassSystem::equal(2).unwrap();
        let s2 = PhaseState::at_rest_on_line(&m2, &[-0.5, 0.5]).unwrap();
        assert_eq!(moment_of_inertia(&s2, &m2), 0.5);
    }

    #[test]
    fn two_body_circular_values() {
        let (m, s) = two_body_circular();
        let (k, per) = angular_momentum(&s, &m);
        assert!((per[0] - 0.25 * SQRT_2).abs() < 1e-15);
        assert!((per[1] - 0.25 * SQRT_2).abs() < 1e-15);
        assert!((k - 0.5 * SQRT_2).abs() < 1e-15);
        assert!((omega_estimate(&s, &m).unwrap() - SQRT_2).abs() < 1e-15);
        assert_eq!(radial_product(&s, &m), 0.0);
        assert!(sundman_gap(&s, &m).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_cases() {
        let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
        let s = PhaseState::new(
            &m,
            vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, -1.0)],
            vec![Vec2::zeros(); 3],
            0.0,
        )
        .unwrap();
        let (k, per) = angular_momentum(&s, &m);
        assert_eq!(k, 0.0);
        assert!(per.iter().all(|&c| c == 0.0));
        assert_eq!(sundman_gap(&s, &m), 0.0);
        assert_eq!(omega_estimate(&s, &m).unwrap(), 0.0);
    }

    #[test]
    fn homothetic_radial_product() {
        let m = MassSystem::new(vec![1.0, 2.0]).unwrap();
        let pos = vec![Vec2::new(-2.0, 0.5), Vec2::new(1.0, -0.25)];
        let vel = pos.iter().map(|r| r * 0.3).collect();
        let s = PhaseState::new(&m, pos, vel, 0.0).unwrap();
        let i = moment_of_inertia(&s, &m);
        assert!((radial_product(&s, &m) - 0.3 * i).abs() < 1e-14);
    }

    #[test]
    fn rigid_rotation_shares_rate() {
        let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
        let s = rigid(&m, vec![Vec2::new(-1.0, 0.0), Vec2::new(0.2, 0.0), Vec2::new(0.9, 0.0)], 1.3);
        let (_, per) = angular_momentum(&s, &m);
        for (i, r) in s.positions().iter().enumerate() {
            assert!((per[i] / (m[i] * r.norm_squared()) - 1.3).abs() < 1e-12);
        }
        assert!((omega_estimate(&s, &m).unwrap() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn collinearity_cases() {
        let m = MassSystem::equal(3).unwrap();
        let on_axis = PhaseState::at_rest_on_line(&m, &[-1.0, 0.3, 0.7]).unwrap();
        assert_eq!(collinearity_residual(&on_axis), 0.0);
        for &angle in &[0.1, 0.7, 1.5707963, 2.5, -1.0] {
            let (c, s) = (f64::cos(angle), f64::sin(angle));
            let pos = [-1.0, 0.3, 0.7].iter().map(|&x| Vec2::new(c * x, s * x)).collect();
            let st = PhaseState::new(&m, pos, vec![Vec2::zeros(); 3], 0.0).unwrap();
            assert!(collinearity_residual(&st) < 1e-15, "angle {angle}");
        }
        let h = 3f64.sqrt() / 2.0;
        let tri = PhaseState::new(
            &m,
            vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0), Vec2::new(0.0, h)],
            vec![Vec2::zeros(); 3],
            0.0,
        )
        .unwrap();
        assert!(collinearity_residual(&tri) >= 0.25);
    }

    #[test]
    fn degenerate_inertia() {
        let m = MassSystem::equal(2).unwrap();
        let s = PhaseState::at_rest_on_line(&m, &[0.0, 0.0]).unwrap();
        assert!(matches!(omega_estimate(&s, &m), Err(CoreError::DegenerateConfiguration(_))));
    }

    #[test]
    fn torques() {
        let pot = PotentialSpec::newtonian(1.0);
        let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
        let line = PhaseState::at_rest_on_line(&m, &[-1.0, 0.4, 1.7]).unwrap();
        let t = torque_per_body(&line, &m, &pot).unwrap();
        assert!(t.iter().all(|x| *x == 0.0));

        let eq = MassSystem::equal(3).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let tri = PhaseState::new(
            &eq,
            vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0), Vec2::new(0.0, h)],
            vec![Vec2::zeros(); 3],
            0.0,
        )
        .unwrap();
        let t = torque_per_body(&tri, &eq, &pot).unwrap();
        assert!(t.iter().all(|x| x.abs() < 1e-15), "{t:?}");

        let scalene = PhaseState::new(
            &m,
            vec![Vec2::new(-1.0, 0.0), Vec2::new(0.8, 0.1), Vec2::new(0.2, 1.3)],
            vec![Vec2::zeros(); 3],
            0.0,
        )
        .unwrap();
        let t = torque_per_body(&scalene, &m, &pot).unwrap();
        assert!(t.iter().any(|x| x.abs() > 1e-3));
        assert!(t.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn diagnostics_bundle_is_consistent() {
        let (m, s) = two_body_circular();
        let d = Diagnostics::evaluate(&s, &m, &PotentialSpec::newtonian(1.0)).unwrap();
        assert_eq!(d.energy, d.kinetic + d.potential);
        assert_eq!(d.angular_momentum, d.body_angular_momenta.iter().sum::<f64>());
        assert!(d.sundman_gap >= -sundman_tolerance(d.angular_momentum));
    }
}
