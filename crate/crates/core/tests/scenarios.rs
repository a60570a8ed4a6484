use collinear_core::central_config::{solve_collinear, Normalization};
use collinear_core::model::{angular_momentum, collinearity_residual};
use collinear_core::scenarios::*;
use collinear_core::{integrate, CoreError, IntegratorConfig, MassSystem, PotentialSpec};

fn tight() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-13, abs_tol: 1e-15, ..IntegratorConfig::default() }
}

#[test]
fn figure_eight_returns_after_one_period() {
    let f = figure_eight_ics();
    let period = f.period.unwrap();
    assert_eq!(f.masses.masses(), &[1.0, 1.0, 1.0]);
    let traj = integrate(&f.state, &f.masses, &PotentialSpec::newtonian(1.0), period, &tight().with_sample_interval(period / 100.0)).unwrap();
    let err = traj.first().max_abs_difference(traj.last());
    assert!(err < 1e-5, "{err:e}");
    let fit = fit_homographic(&traj, &f.masses).unwrap();
    assert!(fit.max_shape_deviation > 0.1, "{}", fit.max_shape_deviation);
    let (k, _) = angular_momentum(&f.state, &f.masses);
    assert!(k.abs() < 1e-7);
}

#[test]
fn relative_equilibrium_keeps_its_shape() {
    let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
    let cc = solve_collinear(&m, &[0, 1, 2], &PotentialSpec::newtonian(1.0), Normalization::default()).unwrap();
    let s = relative_equilibrium_ics(&cc, &m).unwrap();
    let period = 2.0 * std::f64::consts::PI / cc.omega();
    let traj = integrate(&s, &m, &PotentialSpec::newtonian(1.0), 0.5 * period, &tight().with_sample_interval(period / 100.0)).unwrap();
    let fit = fit_homographic(&traj, &m).unwrap();
    assert!(fit.max_shape_deviation < 1e-8, "{:e}", fit.max_shape_deviation);
    assert!(fit.scale_series.iter().all(|s| (s - 1.0).abs() < 1e-8));
    let turned = fit.angle_series.last().unwrap() - fit.angle_series[0];
    assert!((turned - std::f64::consts::PI).abs() < 1e-6, "{turned}");
}

#[test]
fn homographic_data_rotate_at_the_requested_rate() {
    let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
    let pot = PotentialSpec::newtonian(1.0);
    let cc = solve_collinear(&m, &[1, 0, 2], &pot, Normalization::default()).unwrap();
    let s = homographic_ics(&cc, &m, 0.8 * cc.omega(), 0.1).unwrap();
    assert!(collinearity_residual(&s) < 1e-15);
    let (k, per_body) = angular_momentum(&s, &m);
    let inertia = cc.inertia(&m);
    assert!((k - 0.8 * cc.omega() * inertia).abs() < 1e-12 * k);
    assert!(per_body.iter().all(|&ki| ki > 0.0));
    assert!(newtonian_radial_period(&cc, &pot, 0.8 * cc.omega(), 0.1).unwrap().unwrap() > 0.0);
    assert!(newtonian_radial_period(&cc, &pot, 2.0 * cc.omega(), 0.0).unwrap().is_none());
}

#[test]
fn circular_orbit_has_the_rotation_period() {
    // Kepler: a circular orbit's radial period is the rotation period
    let m = MassSystem::new(vec![1.0, 3.0]).unwrap();
    let pot = PotentialSpec::newtonian(1.0);
    let cc = solve_collinear(&m, &[0, 1], &pot, Normalization::default()).unwrap();
    let t = newtonian_radial_period(&cc, &pot, cc.omega(), 0.0).unwrap().unwrap();
    assert!((t - 2.0 * std::f64::consts::PI / cc.omega()).abs() < 1e-12);
}

#[test]
fn unsolved_shapes_are_rejected_as_equilibria() {
    let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
    let pot = PotentialSpec::newtonian(1.0);
    let mut cc = solve_collinear(&m, &[0, 1, 2], &pot, Normalization::default()).unwrap();
    cc.residual_norm = 1e-3;
    assert!(matches!(relative_equilibrium_ics(&cc, &m), Err(CoreError::Precondition(_))));
}

#[test]
fn controls_must_be_off_the_central_shape() {
    let m = MassSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
    let pot = PotentialSpec::newtonian(1.0);
    let cc = solve_collinear(&m, &[0, 1, 2], &pot, Normalization::default()).unwrap();
    assert!(non_central_collinear_ics(&m, &pot, &cc.gaps, 1.0).is_err());
    let s = non_central_collinear_ics(&m, &pot, &[1.0, 2.0], 1.0).unwrap();
    assert!(collinearity_residual(&s) < 1e-15);
    assert!(best_fit_residual(&m, &pot, &[0, 1, 2], &[1.0, 2.0]).unwrap() > CONTROL_THRESHOLD);
    assert!(best_fit_residual(&m, &pot, &[0, 1, 2], &cc.gaps).unwrap() < 1e-10);
}

#[test]
fn fixture_parsing() {
    let f = parse_fixture("# two bodies\nperiod 3.5\n1 -0.5 0 0 -0.1\n1 0.5 0 0 0.1 # right\n").unwrap();
    assert_eq!(f.period, Some(3.5));
    assert_eq!(f.masses.len(), 2);
    assert!(parse_fixture("1 2 3\n").is_err());
    assert!(parse_fixture("1 0 0 0 x\n").is_err());
    assert!(parse_fixture("-1 0 0 0 0\n1 1 0 0 0\n").is_err());
}

#[test]
fn axis_angles_unwrap_continuously() {
    let pi = std::f64::consts::PI;
    let raw: Vec<f64> = (0..40).map(|k| (0.2 * k as f64).rem_euclid(pi)).collect();
    let lifted = unwrap_axis_angles(&raw);
    for (k, a) in lifted.iter().enumerate() {
        assert!((a - 0.2 * k as f64).abs() < 1e-12);
    }
}
