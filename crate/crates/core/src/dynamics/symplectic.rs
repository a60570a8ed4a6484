//! Fixed-step kick-drift-kick leapfrog and its fourth-order Yoshida
//! composition.

use super::{Driver, RawState, Recorder, SampleSchedule, SymplecticOrder};
use crate::error::{CoreError, Result};
use crate::real::Real;

fn weights<R: Real>(order: SymplecticOrder) -> Vec<R> {
    match order {
        SymplecticOrder::Second => vec![R::one()],
        SymplecticOrder::Fourth => {
            let cbrt2 = 2f64.powf(1.0 / 3.0);
            let w1 = 1.0 / (2.0 - cbrt2);
            let w0 = -cbrt2 / (2.0 - cbrt2);
            vec![R::from_f64(w1), R::from_f64(w0), R::from_f64(w1)]
        }
    }
}

pub(super) fn run<R: Real>(
    driver: &mut Driver<R>,
    start: &RawState<R>,
    schedule: &SampleSchedule<R>,
    step: R,
    order: SymplecticOrder,
    recorder: &mut Recorder,
) -> Result<(RawState<R>, usize, usize)> {
    let mut q = start.positions.clone();
    let mut v = start.velocities.clone();
    let mut acc = vec![R::zero(); q.len()];
    let mut t = start.time;
    let half = R::from_f64(0.5);
    let ws = weights::<R>(order);
    let mut steps = 0;
    let singular = |t: R| CoreError::StepUnderflow { time: t.to_f64(), step: 0.0 };
    if !driver.accelerations(&q, &mut acc) {
        return Err(singular(t));
    }
    for target in schedule.targets() {
        let span = target - t;
        let count = (span / step).to_f64().ceil().max(1.0) as usize;
        let dt = span / R::from_usize(count);
        for _ in 0..count {
            for &w in &ws {
                let h = dt * w;
                for i in 0..q.len() {
                    v[i] += half * h * acc[i];
                    q[i] += h * v[i];
                }
                if !driver.accelerations(&q, &mut acc) {
                    return Err(singular(t));
                }
                for i in 0..q.len() {
                    v[i] += half * h * acc[i];
                }
            }
            t += dt;
            steps += 1;
            driver.guard(&q, t)?;
        }
        t = target;
        recorder.push(&RawState { positions: q.clone(), velocities: v.clone(), time: t })?;
    }
    Ok((RawState { positions: q, velocities: v, time: t }, steps, 0))
}
