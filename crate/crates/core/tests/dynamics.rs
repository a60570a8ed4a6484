use collinear_core::dynamics::{diagnostics_series, integrate_raw, RawState, Scheme, SymplecticOrder};
use collinear_core::model::{moment_of_inertia, radial_product, Diagnostics};
use collinear_core::{integrate, CoreError, IntegratorConfig, MassSystem, PhaseState, PotentialSpec, Precision, Vec2};

fn tight() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-13, abs_tol: 1e-15, ..IntegratorConfig::default() }
}

/// Equal masses at distance 1 with speed `factor` times circular; returns the
/// state and the Kepler period of the relative orbit.
fn kepler_pair(factor: f64) -> (MassSystem, PhaseState, f64) {
    let m = MassSystem::equal(2).unwrap();
    let total: f64 = 2.0;
    let v_rel = factor * total.sqrt();
    let s = PhaseState::new(
        &m,
        vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)],
        vec![Vec2::new(0.0, -0.5 * v_rel), Vec2::new(0.0, 0.5 * v_rel)],
        0.0,
    )
    .unwrap();
    let energy = 0.5 * v_rel * v_rel - total;
    let a = -total / (2.0 * energy);
    (m, s, 2.0 * std::f64::consts::PI * (a.powi(3) / total).sqrt())
}

fn max_diff(a: &PhaseState, b: &PhaseState) -> f64 {
    a.positions()
        .iter()
        .zip(b.positions())
        .chain(a.velocities().iter().zip(b.velocities()))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn kepler_orbit_returns_after_one_period() {
    for factor in [1.0, 0.7, 1.2] {
        let (m, s, period) = kepler_pair(factor);
        let cfg = tight().with_sample_interval(period / 50.0);
        let traj = integrate(&s, &m, &PotentialSpec::newtonian(1.0), period, &cfg).unwrap();
        assert!((traj.last().time() - period).abs() < 1e-12);
        let err = max_diff(traj.first(), traj.last());
        assert!(err < 1e-8, "factor {factor}: {err:e}");
    }
}

#[test]
fn samples_land_on_the_grid() {
    let (m, s, _) = kepler_pair(1.0);
    let traj = integrate(&s, &m, &PotentialSpec::newtonian(1.0), 1.05, &tight().with_sample_interval(0.1)).unwrap();
    let t = traj.times();
    assert_eq!(t.len(), 12);
    for (k, tk) in t.iter().take(11).enumerate() {
        assert!((tk - 0.1 * k as f64).abs() < 1e-12);
    }
    assert_eq!(*t.last().unwrap(), 1.05);
}

#[test]
fn radial_collapse_stops_at_close_approach() {
    let m = MassSystem::equal(2).unwrap();
    let s = PhaseState::at_rest_on_line(&m, &[-0.5, 0.5]).unwrap();
    // free-fall time for unit separation and total mass 2 is pi / 4
    match integrate(&s, &m, &PotentialSpec::newtonian(1.0), 10.0, &tight()) {
        Err(CoreError::CloseApproach { time, distance, .. }) => {
            assert!(distance <= 1e-8);
            assert!((time - std::f64::consts::FRAC_PI_4).abs() < 1e-3, "{time}");
        }
        other => panic!("expected a close approach, got {other:?}"),
    }
}

fn scalene_state() -> (MassSystem, PhaseState) {
    let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
    let s = PhaseState::new(
        &m,
        vec![Vec2::new(1.2, 0.3), Vec2::new(-0.8, 0.9), Vec2::new(0.1, -1.1)],
        vec![Vec2::new(-0.2, 0.5), Vec2::new(-0.4, -0.3), Vec2::new(0.35, 0.1)],
        0.0,
    )
    .unwrap();
    (m, s)
}

#[test]
fn energy_and_momentum_are_conserved() {
    let (m, s) = scalene_state();
    let pot = PotentialSpec::newtonian(1.0);
    let d0 = Diagnostics::evaluate(&s, &m, &pot).unwrap();
    let dyn_time = (moment_of_inertia(&s, &m) / d0.potential.abs()).sqrt();
    let traj = integrate(&s, &m, &pot, 10.0 * dyn_time, &tight()).unwrap();
    assert!(traj.stats.max_energy_drift < 1e-9, "{:e}", traj.stats.max_energy_drift);
    assert!(traj.stats.max_barycenter_drift < 1e-10);
    for sample in &traj.samples {
        let d = Diagnostics::evaluate(sample, &m, &pot).unwrap();
        assert!((d.angular_momentum - d0.angular_momentum).abs() < 1e-10);
    }
}

#[test]
fn virial_rate_matches_inertia_derivative() {
    let (m, s) = scalene_state();
    let pot = PotentialSpec::newtonian(1.0);
    let traj = integrate(&s, &m, &pot, 1.2, &tight().with_sample_interval(0.005)).unwrap();
    let series = diagnostics_series(&traj, &m, &pot).unwrap();
    for (sample, rate) in traj.samples.iter().zip(&series.inertia_rate) {
        let err = (radial_product(sample, &m) - 0.5 * rate).abs();
        assert!(err < 1e-8, "t = {}: {err:e}", sample.time());
    }
}

#[test]
fn reversed_run_retraces_the_orbit() {
    let (m, s) = scalene_state();
    let pot = PotentialSpec::newtonian(1.0);
    let cfg = tight();
    let (_, end) = integrate_raw::<f64>(&RawState::from_phase(&s), &m, &pot, 3.0, &cfg).unwrap();
    let mut back = end.reversed();
    back.time = 0.0;
    let (_, home) = integrate_raw::<f64>(&back, &m, &pot, 3.0, &cfg).unwrap();
    let home = home.reversed();
    let start = RawState::<f64>::from_phase(&s);
    let err = start
        .positions
        .iter()
        .zip(&home.positions)
        .chain(start.velocities.iter().zip(&home.velocities))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn extended_precision_agrees_with_double() {
    let (m, s) = scalene_state();
    let pot = PotentialSpec::newtonian(1.0);
    let a = integrate(&s, &m, &pot, 1.0, &tight().with_sample_interval(0.5)).unwrap();
    let cfg = IntegratorConfig { rel_tol: 1e-24, abs_tol: 1e-26, ..IntegratorConfig::extended() }.with_sample_interval(0.5);
    let b = integrate(&s, &m, &pot, 1.0, &cfg).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(max_diff(a.last(), b.last()) < 1e-10);
}

#[test]
fn symplectic_schemes_bound_energy_error() {
    let (m, s, period) = kepler_pair(0.9);
    let pot = PotentialSpec::newtonian(1.0);
    let drift = |order| {
        let cfg = IntegratorConfig { scheme: Scheme::Symplectic { step: 1e-3, order }, ..IntegratorConfig::default() }
            .with_sample_interval(period / 20.0);
        integrate(&s, &m, &pot, 20.0 * period, &cfg).unwrap().stats.max_energy_drift
    };
    let second = drift(SymplecticOrder::Second);
    let fourth = drift(SymplecticOrder::Fourth);
    assert!(second < 1e-5, "{second:e}");
    assert!(fourth < 1e-2 * second, "{fourth:e} vs {second:e}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let (m, s, _) = kepler_pair(1.0);
    let pot = PotentialSpec::newtonian(1.0);
    let bad = [
        IntegratorConfig { rel_tol: 1e-20, ..IntegratorConfig::default() },
        IntegratorConfig { abs_tol: 0.0, ..IntegratorConfig::default() },
        IntegratorConfig { sample_interval: -1.0, ..IntegratorConfig::default() },
        IntegratorConfig { precision: Precision::Extended, rel_tol: 1e-80, ..IntegratorConfig::default() },
    ];
    for cfg in &bad {
        assert!(matches!(integrate(&s, &m, &pot, 1.0, cfg), Err(CoreError::InvalidConfig(_))), "{cfg:?}");
    }
    assert!(matches!(integrate(&s, &m, &pot, 0.0, &tight()), Err(CoreError::InvalidConfig(_))));
}
