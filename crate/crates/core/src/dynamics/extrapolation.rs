//! Gragg-Bulirsch-Stoer stepping: modified-midpoint sweeps with
//! `2, 4, 6, ...` substeps, polynomial extrapolation in `h^2`, and the
//! difference of the last two tableau entries as the local error estimate.

use super::{Driver, IntegratorConfig, RawState, Recorder, SampleSchedule};
use crate::error::{CoreError, Result};
use crate::real::Real;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 4.0;
const MIN_SHRINK: f64 = 0.1;

/// Column at which steps are normally accepted; grows with the requested
/// accuracy so that the step stays a sizable fraction of a dynamical time.
fn target_column(rel_tol: f64) -> usize {
    let digits = -rel_tol.log10();
    ((0.35 * digits).ceil() as usize + 2).clamp(3, 16)
}

fn substeps(k: usize) -> usize {
    2 * k
}

struct Stepper<R> {
    target: usize,
    max_column: usize,
    rel_tol: R,
    abs_tol: R,
    // tableau[k] holds the diagonal-so-far for column k
    tableau: Vec<Vec<R>>,
    f0: Vec<R>,
    scratch: [Vec<R>; 4],
}

enum Attempt {
    Accepted { column: usize, error: f64 },
    Rejected { error: f64 },
}

impl<R: Real> Stepper<R> {
    fn new(dim: usize, config: &IntegratorConfig) -> Self {
        let target = target_column(config.rel_tol);
        Self {
            target,
            max_column: target + 2,
            rel_tol: R::from_f64(config.rel_tol),
            abs_tol: R::from_f64(config.abs_tol),
            tableau: vec![vec![R::zero(); dim]; target + 3],
            f0: vec![R::zero(); dim],
            scratch: std::array::from_fn(|_| vec![R::zero(); dim]),
        }
    }

    /// Modified midpoint over `h` with `m` substeps into `out`.
    fn midpoint(&mut self, driver: &mut Driver<R>, y: &[R], h: R, m: usize, out: &mut [R]) -> bool {
        let hs = h / R::from_usize(m);
        let two_hs = hs + hs;
        let [prev, cur, next, deriv] = &mut self.scratch;
        prev.copy_from_slice(y);
        for i in 0..y.len() {
            cur[i] = y[i] + hs * self.f0[i];
        }
        for _ in 1..m {
            if !driver.rhs(cur, deriv) {
                return false;
            }
            for i in 0..y.len() {
                next[i] = prev[i] + two_hs * deriv[i];
            }
            std::mem::swap(prev, cur);
            std::mem::swap(cur, next);
        }
        if !driver.rhs(cur, deriv) {
            return false;
        }
        let half = R::from_f64(0.5);
        for i in 0..y.len() {
            out[i] = half * (cur[i] + prev[i] + hs * deriv[i]);
        }
        out.iter().all(|v| v.is_finite())
    }

    fn error_norm(&self, y: &[R], column: usize) -> f64 {
        let (best, previous) = (&self.tableau[column], &self.scratch[3]);
        let mut worst = R::zero();
        for i in 0..y.len() {
            let scale = self.abs_tol + self.rel_tol * y[i].abs().max(best[i].abs());
            worst = worst.max((best[i] - previous[i]).abs() / scale);
        }
        let e = worst.to_f64();
        if e.is_finite() { e } else { f64::INFINITY }
    }

    /// One macro step of size `h` from `y`; on acceptance the new state is
    /// left in `tableau[column]`.
    fn attempt(&mut self, driver: &mut Driver<R>, y: &[R], h: R) -> Attempt {
        if !driver.rhs(y, &mut self.f0) {
            return Attempt::Rejected { error: f64::INFINITY };
        }
        let dim = y.len();
        let mut column_out = vec![R::zero(); dim];
        let mut target_error = f64::INFINITY;
        for k in 1..=self.max_column {
            if !self.midpoint(driver, y, h, substeps(k), &mut column_out) {
                return Attempt::Rejected { error: f64::INFINITY };
            }
            // Neville update along the new row; scratch[3] keeps the
            // second-to-last entry for the error estimate.
            let mut current = column_out.clone();
            for j in 1..k {
                // (n_k / n_{k-j})^2 - 1, formed exactly in R
                let (nk, nj) = (substeps(k), substeps(k - j));
                let denom = R::from_usize(nk * nk - nj * nj) / R::from_usize(nj * nj);
                let lower = &self.tableau[j];
                let mut refined = vec![R::zero(); dim];
                for i in 0..dim {
                    refined[i] = current[i] + (current[i] - lower[i]) / denom;
                }
                self.tableau[j] = std::mem::replace(&mut current, refined);
            }
            if k > 1 {
                self.scratch[3].copy_from_slice(&self.tableau[k - 1]);
            }
            self.tableau[k] = current;
            if k < 2 {
                continue;
            }
            let error = self.error_norm(y, k);
            if k == self.target {
                target_error = error;
            }
            if k >= self.target && error <= 1.0 {
                return Attempt::Accepted { column: k, error: if k == self.target { error } else { target_error } };
            }
        }
        Attempt::Rejected { error: target_error }
    }

    fn factor(&self, error: f64) -> f64 {
        if error == 0.0 {
            return MAX_GROWTH;
        }
        if !error.is_finite() {
            return 0.25;
        }
        (SAFETY * error.powf(-1.0 / (2 * self.target + 1) as f64)).clamp(MIN_SHRINK, MAX_GROWTH)
    }
}

fn initial_step<R: Real>(driver: &mut Driver<R>, y: &[R], span: R) -> R {
    let half = y.len() / 2;
    let mut acc = vec![R::zero(); half];
    if !driver.accelerations(&y[..half], &mut acc) {
        return span * R::from_f64(1e-6);
    }
    let norm = |v: &[R]| v.iter().fold(R::zero(), |m, x| m.max(x.abs()));
    let (r, v, a) = (norm(&y[..half]), norm(&y[half..]), norm(&acc));
    let mut h = span * R::from_f64(0.01);
    if a > R::zero() {
        h = h.min(R::from_f64(0.05) * (r / a).sqrt());
    }
    if v > R::zero() {
        h = h.min(R::from_f64(0.05) * r / v);
    }
    h
}

/// Integrates through every sample of the schedule. Returns the final state
/// and the accepted / rejected step counts.
pub(super) fn run<R: Real>(
    driver: &mut Driver<R>,
    start: &RawState<R>,
    schedule: &SampleSchedule<R>,
    config: &IntegratorConfig,
    recorder: &mut Recorder,
) -> Result<(RawState<R>, usize, usize)> {
    let n2 = start.positions.len();
    let mut y: Vec<R> = start.positions.iter().chain(&start.velocities).copied().collect();
    let mut stepper = Stepper::<R>::new(y.len(), config);
    let mut t = start.time;
    let mut h = initial_step(driver, &y, schedule.t_end - schedule.t0);
    let max_step = R::from_f64(config.max_step.min(f64::MAX));
    let (mut steps, mut rejected) = (0usize, 0usize);

    for target in schedule.targets() {
        while t < target {
            let remaining = target - t;
            let h_nominal = h.min(max_step);
            let clamped = remaining <= h_nominal;
            let h_try = if clamped { remaining } else { h_nominal };
            let floor = R::from_f64(64.0) * R::epsilon() * t.abs().max(R::one());
            if h_try < floor && !clamped {
                return Err(CoreError::StepUnderflow { time: t.to_f64(), step: h_try.to_f64() });
            }
            match stepper.attempt(driver, &y, h_try) {
                Attempt::Accepted { column, error } => {
                    y.copy_from_slice(&stepper.tableau[column]);
                    t = if clamped { target } else { t + h_try };
                    steps += 1;
                    driver.guard(&y[..n2], t)?;
                    let proposed = h_try * R::from_f64(stepper.factor(error));
                    h = if clamped { h.max(proposed) } else { proposed };
                }
                Attempt::Rejected { error } => {
                    rejected += 1;
                    let shrink = stepper.factor(error).min(0.7);
                    h = h_try * R::from_f64(shrink);
                    if h < floor {
                        return Err(CoreError::StepUnderflow { time: t.to_f64(), step: h.to_f64() });
                    }
                }
            }
        }
        let state = RawState { positions: y[..n2].to_vec(), velocities: y[n2..].to_vec(), time: t };
        recorder.push(&state)?;
    }
    let final_state = RawState { positions: y[..n2].to_vec(), velocities: y[n2..].to_vec(), time: t };
    Ok((final_state, steps, rejected))
}
