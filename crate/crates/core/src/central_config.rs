//! Collinear central configurations: `dU/dr_i = 2 lambda m_i r_i` on a line.
//!
//! Unknowns are the `n - 1` consecutive gaps for a fixed left-to-right
//! ordering, so positions can never swap during iteration. `lambda` is the
//! multiplier of the mass-weighted gradient form `grad U = lambda grad I`
//! (with `grad I = 2x`); the rigid rotation through the configuration has
//! angular rate `sqrt(2 lambda)`.
//!
//! Uniqueness per ordering is Moulton's theorem for the Newtonian case. For
//! other homogeneous exponents it is assumed only in the sense that the
//! enumeration reports one solution per ordering; the solver never relies on
//! it, and multi-start checks in the tests probe it numerically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{MassSystem, PairLaw, PotentialSpec};
use crate::real::Real;

/// Tolerance on [`CollinearConfiguration::residual_norm`] for a returned solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const SCAN_POINTS: usize = 64;
const SCAN_RANGE: (f64, f64) = (1e-3, 1e3);
const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Leftmost gap fixed.
    FirstGap(f64),
    /// Moment of inertia fixed.
    Inertia(f64),
}

impl Default for Normalization {
    fn default() -> Self {
        Self::FirstGap(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearConfiguration {
    /// Body indices from left to right.
    pub ordering: Vec<usize>,
    /// Consecutive distances along the ordering.
    pub gaps: Vec<f64>,
    pub lambda: f64,
    pub residual_norm: f64,
}

impl CollinearConfiguration {
    /// Barycentric coordinates along the line, indexed by body.
    pub fn positions(&self, masses: &MassSystem) -> Vec<f64> {
        let ordered_masses: Vec<f64> = self.ordering.iter().map(|&i| masses[i]).collect();
        let along = line_positions(&self.gaps, &ordered_masses);
        let mut by_body = vec![0.0; along.len()];
        for (k, &body) in self.ordering.iter().enumerate() {
            by_body[body] = along[k];
        }
        by_body
    }

    /// `g_k / g_0` for `k >= 1`.
    pub fn gap_ratios(&self) -> Vec<f64> {
        self.gaps[1..].iter().map(|g| g / self.gaps[0]).collect()
    }

    /// Angular rate of the induced relative equilibrium.
    pub fn omega(&self) -> f64 {
        (2.0 * self.lambda).sqrt()
    }

    pub fn inertia(&self, masses: &MassSystem) -> f64 {
        self.positions(masses).iter().zip(masses.masses()).map(|(x, m)| m * x * x).sum()
    }

    /// Same configuration read right to left.
    pub fn reversed(&self) -> Self {
        Self {
            ordering: self.ordering.iter().rev().copied().collect(),
            gaps: self.gaps.iter().rev().copied().collect(),
            ..self.clone()
        }
    }
}

/// Positions in order, shifted to the barycenter.
fn line_positions<R: Real>(gaps: &[R], ordered_masses: &[R]) -> Vec<R> {
    let mut xs = Vec::with_capacity(ordered_masses.len());
    let mut x = R::zero();
    xs.push(x);
    for &g in gaps {
        x += g;
        xs.push(x);
    }
    let total = ordered_masses.iter().fold(R::zero(), |a, &m| a + m);
    let center = xs.iter().zip(ordered_masses).fold(R::zero(), |a, (&x, &m)| a + m * x) / total;
    xs.iter_mut().for_each(|x| *x -= center);
    xs
}

struct GapEvaluation<R> {
    /// `(a_{k+1} - a_k) + 2 lambda g_k`.
    residual: Vec<R>,
    positions: Vec<R>,
    accelerations: Vec<R>,
}

fn evaluate_gaps<R: Real>(law: &PairLaw<R>, ordered_masses: &[R], gaps: &[R], lambda: R) -> Option<GapEvaluation<R>> {
    let positions = line_positions(gaps, ordered_masses);
    let mut accelerations = vec![R::zero(); positions.len()];
    law.line_accelerations_into(ordered_masses, &positions, &mut accelerations).ok()?;
    let two = R::from_f64(2.0);
    let residual = (0..gaps.len())
        .map(|k| accelerations[k + 1] - accelerations[k] + two * lambda * gaps[k])
        .collect();
    Some(GapEvaluation { residual, positions, accelerations })
}

/// Scale-free size of a gap residual: `max |e_k| / max |a_{k+1} - a_k|`.
fn relative_norm(eval: &GapEvaluation<f64>) -> f64 {
    let worst = eval.residual.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let scale = eval.accelerations.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
    if scale > 0.0 { worst / scale } else { worst }
}

/// Best-fit multiplier `-<x, a> / (2 I)` for a line configuration.
fn fitted_lambda<R: Real>(masses: &[R], xs: &[R], acc: &[R]) -> R {
    let mut num = R::zero();
    let mut inertia = R::zero();
    for i in 0..xs.len() {
        num += masses[i] * xs[i] * acc[i];
        inertia += masses[i] * xs[i] * xs[i];
    }
    -num / (R::from_f64(2.0) * inertia)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcResidual {
    pub components: Vec<f64>,
    pub barycentric_defect: f64,
    /// Relative size of `components`, see [`CollinearConfiguration::residual_norm`].
    pub norm: f64,
}

fn check_ordering(ordering: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if ordering.len() != n || !ordering.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true)) {
        return Err(CoreError::Precondition(format!("{ordering:?} is not a permutation of 0..{n}")));
    }
    Ok(())
}

/// Residual of the central-configuration equation in gap coordinates.
pub fn cc_residual(config: &CollinearConfiguration, masses: &MassSystem, pot: &PotentialSpec) -> Result<CcResidual> {
    let n = masses.len();
    check_ordering(&config.ordering, n)?;
    if config.gaps.len() != n - 1 || !config.gaps.iter().all(|&g| g > 0.0 && g.is_finite()) {
        return Err(CoreError::Precondition("gaps must be n - 1 positive numbers".into()));
    }
    let ordered: Vec<f64> = config.ordering.iter().map(|&i| masses[i]).collect();
    let eval = evaluate_gaps(&pot.law::<f64>(), &ordered, &config.gaps, config.lambda)
        .expect("positive gaps keep bodies apart");
    let scale = eval.positions.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let moment: f64 = eval.positions.iter().zip(&ordered).map(|(x, m)| m * x).sum();
    Ok(CcResidual {
        norm: relative_norm(&eval),
        barycentric_defect: moment.abs() / (masses.total() * scale),
        components: eval.residual,
    })
}

struct Problem {
    law: PairLaw<f64>,
    /// Degree of an attracting homogeneous law with `alpha < 0`, for which
    /// `log(-U) - (alpha/2) log I` has the configuration as its minimum.
    descent_degree: Option<f64>,
    masses: Vec<f64>,
    normalization: Normalization,
}

impl Problem {
    fn n(&self) -> usize {
        self.masses.len()
    }

    fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `dx_k / dg_l`.
    fn position_jacobian(&self) -> DMatrix<f64> {
        let n = self.n();
        let total = self.total();
        DMatrix::from_fn(n, n - 1, |k, l| {
            let tail: f64 = self.masses[l + 1..].iter().sum();
            (if l < k { 1.0 } else { 0.0 }) - tail / total
        })
    }

    fn normalization_error(&self, gaps: &[f64], xs: &[f64]) -> f64 {
        match self.normalization {
            Normalization::FirstGap(c) => (gaps[0] - c) / c,
            Normalization::Inertia(c) => {
                let inertia: f64 = xs.iter().zip(&self.masses).map(|(x, m)| m * x * x).sum();
                (inertia - c) / c
            }
        }
    }

    /// Residual vector scaled to be dimensionless, and its max norm.
    fn scaled_residual(&self, gaps: &[f64], lambda: f64) -> Option<(DVector<f64>, f64, GapEvaluation<f64>)> {
        let eval = evaluate_gaps(&self.law, &self.masses, gaps, lambda)?;
        let scale = eval.accelerations.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let n = self.n();
        let mut f = DVector::zeros(n);
        for k in 0..n - 1 {
            f[k] = eval.residual[k] / scale;
        }
        f[n - 1] = self.normalization_error(gaps, &eval.positions);
        if !f.iter().all(|v| v.is_finite()) {
            return None;
        }
        let merit = f.amax();
        Some((f, merit, eval))
    }

    /// Jacobian of the unscaled residual with respect to `(g, lambda)`.
    fn jacobian(&self, gaps: &[f64], lambda: f64, eval: &GapEvaluation<f64>) -> DMatrix<f64> {
        let n = self.n();
        let xs = &eval.positions;
        // da_k / dx_p
        let mut da_dx = DMatrix::zeros(n, n);
        for k in 0..n {
            for p in 0..n {
                if p == k {
                    continue;
                }
                let d = xs[k] - xs[p];
                let s = d * d;
                let dg = self.law.weight(s) + 2.0 * s * self.law.weight_derivative(s);
                da_dx[(k, p)] = self.masses[p] * dg;
                da_dx[(k, k)] -= self.masses[p] * dg;
            }
        }
        let da_dg = &da_dx * self.position_jacobian();
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n - 1 {
            for l in 0..n - 1 {
                jac[(k, l)] = da_dg[(k + 1, l)] - da_dg[(k, l)] + if k == l { 2.0 * lambda } else { 0.0 };
            }
            jac[(k, n - 1)] = 2.0 * gaps[k];
        }
        match self.normalization {
            Normalization::FirstGap(_) => jac[(n - 1, 0)] = 1.0,
            Normalization::Inertia(_) => {
                let dx_dg = self.position_jacobian();
                for l in 0..n - 1 {
                    jac[(n - 1, l)] = (0..n).map(|k| 2.0 * self.masses[k] * xs[k] * dx_dg[(k, l)]).sum();
                }
            }
        }
        jac
    }

    /// Normalization scale of a unit-first-gap shape.
    fn scale_shape(&self, shape: &[f64]) -> Vec<f64> {
        let factor = match self.normalization {
            Normalization::FirstGap(c) => c / shape[0],
            Normalization::Inertia(c) => {
                let xs = line_positions(shape, &self.masses);
                let inertia: f64 = xs.iter().zip(&self.masses).map(|(x, m)| m * x * x).sum();
                (c / inertia).sqrt()
            }
        };
        shape.iter().map(|g| g * factor).collect()
    }

    fn initial_lambda(&self, gaps: &[f64]) -> f64 {
        match evaluate_gaps(&self.law, &self.masses, gaps, 0.0) {
            Some(e) => fitted_lambda(&self.masses, &e.positions, &e.accelerations),
            None => 1.0,
        }
    }

    /// Damped Newton in `(log g, lambda)` with backtracking on the max-norm
    /// of the scaled residual.
    fn newton(&self, start: &[f64]) -> std::result::Result<(Vec<f64>, f64, f64), f64> {
        let n = self.n();
        let mut gaps = self.scale_shape(start);
        let mut lambda = self.initial_lambda(&gaps);
        let Some((mut f, mut merit, mut eval)) = self.scaled_residual(&gaps, lambda) else {
            return Err(f64::INFINITY);
        };
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let norm = relative_norm(&eval);
            if norm <= 1e-3 * RESIDUAL_TOLERANCE && f[n - 1].abs() <= 1e-14 {
                return Ok((gaps, lambda, norm));
            }
            let jac = self.jacobian(&gaps, lambda, &eval);
            let scale = f64::max(
                eval.accelerations.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs())),
                f64::MIN_POSITIVE,
            );
            // rescale rows to match the scaled residual, columns to log-gaps
            let mut scaled = jac.clone();
            for k in 0..n - 1 {
                scaled.row_mut(k).scale_mut(1.0 / scale);
            }
            let (Normalization::FirstGap(c) | Normalization::Inertia(c)) = self.normalization;
            scaled.row_mut(n - 1).scale_mut(1.0 / c);
            for l in 0..n - 1 {
                scaled.column_mut(l).scale_mut(gaps[l]);
            }
            let Some(step) = scaled.lu().solve(&(-&f)) else {
                return Err(norm);
            };
            let longest = step.rows(0, n - 1).amax();
            let mut t = if longest > 2.0 { 2.0 / longest } else { 1.0 };
            let mut improved = false;
            while t > 1e-8 {
                let trial_gaps: Vec<f64> = (0..n - 1).map(|l| gaps[l] * (t * step[l]).exp()).collect();
                let trial_lambda = lambda + t * step[n - 1];
                if let Some((tf, tm, te)) = self.scaled_residual(&trial_gaps, trial_lambda) {
                    if tm < merit || (tm <= merit && t == 1.0) {
                        gaps = trial_gaps;
                        lambda = trial_lambda;
                        f = tf;
                        merit = tm;
                        eval = te;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                let norm = relative_norm(&eval);
                return if norm <= RESIDUAL_TOLERANCE && f[n - 1].abs() <= 1e-12 {
                    Ok((gaps, lambda, norm))
                } else {
                    Err(norm)
                };
            }
        }
        let norm = relative_norm(&eval);
        if norm <= RESIDUAL_TOLERANCE { Ok((gaps, lambda, norm)) } else { Err(norm) }
    }

    /// `log(-U) - (alpha/2) log I` and its gradient in log-gaps relative to
    /// the first gap.
    fn scale_free_energy(&self, alpha: f64, logs: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = self.n();
        let gaps: Vec<f64> = std::iter::once(1.0).chain(logs.iter().map(|x| x.exp())).collect();
        let eval = evaluate_gaps(&self.law, &self.masses, &gaps, 0.0)?;
        let xs = &eval.positions;
        let mut u = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = xs[j] - xs[i];
                u += self.masses[i] * self.masses[j] * self.law.energy(d * d);
            }
        }
        let inertia: f64 = xs.iter().zip(&self.masses).map(|(x, m)| m * x * x).sum();
        if !(u < 0.0) || !(inertia > 0.0) {
            return None;
        }
        let dx = self.position_jacobian();
        let grad = (1..n - 1)
            .map(|l| {
                let du: f64 = (0..n).map(|k| -self.masses[k] * eval.accelerations[k] * dx[(k, l)]).sum();
                let di: f64 = (0..n).map(|k| 2.0 * self.masses[k] * xs[k] * dx[(k, l)]).sum();
                gaps[l] * (du / u - 0.5 * alpha * di / inertia)
            })
            .collect();
        Some(((-u).ln() - 0.5 * alpha * inertia.ln(), grad))
    }

    /// BFGS with backtracking on the scale-free energy; returns a shape with
    /// unit first gap near the minimum.
    fn descend(&self, start: &[f64]) -> Option<Vec<f64>> {
        let alpha = self.descent_degree?;
        let m = self.n() - 2;
        let mut x: Vec<f64> = start[1..].iter().map(|g| (g / start[0]).ln()).collect();
        let (mut f, mut grad) = self.scale_free_energy(alpha, &x)?;
        let mut h = DMatrix::<f64>::identity(m, m);
        for _ in 0..500 {
            if grad.iter().all(|g| g.abs() < 1e-9) {
                break;
            }
            let gv = DVector::from_vec(grad.clone());
            let mut p = -(&h * &gv);
            if p.dot(&gv) >= 0.0 {
                h = DMatrix::identity(m, m);
                p = -gv.clone();
            }
            let longest = p.amax();
            let mut t = if longest > 1.0 { 1.0 / longest } else { 1.0 };
            let slope = p.dot(&gv);
            let mut next = None;
            while t > 1e-12 {
                let trial: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
                if let Some((tf, tg)) = self.scale_free_energy(alpha, &trial) {
                    if tf <= f + 1e-4 * t * slope {
                        next = Some((trial, tf, tg));
                        break;
                    }
                }
                t *= 0.5;
            }
            let (trial, tf, tg) = next?;
            let s = DVector::from_iterator(m, trial.iter().zip(&x).map(|(a, b)| a - b));
            let y = DVector::from_iterator(m, tg.iter().zip(&grad).map(|(a, b)| a - b));
            let sy = s.dot(&y);
            if sy > 1e-300 {
                let rho = 1.0 / sy;
                let eye = DMatrix::<f64>::identity(m, m);
                let left = &eye - rho * &s * y.transpose();
                let right = &eye - rho * &y * s.transpose();
                h = left * h * right + rho * &s * s.transpose();
            }
            x = trial;
            f = tf;
            grad = tg;
        }
        Some(std::iter::once(1.0).chain(x.iter().map(|v| v.exp())).collect())
    }

    /// Newton from `start`; if it stalls, descent on the scale-free energy
    /// followed by Newton from the descent result.
    fn solve_from(&self, start: &[f64]) -> std::result::Result<(Vec<f64>, f64, f64), f64> {
        match self.newton(start) {
            Ok(sol) if sol.1 > 0.0 => Ok(sol),
            first => {
                let residual = match first {
                    Ok((_, _, r)) | Err(r) => r,
                };
                match self.descend(start) {
                    Some(shape) => self.newton(&shape),
                    None => Err(residual),
                }
            }
        }
    }

    /// Sign of the three-body shape residual at gap ratio `rho`, as a
    /// bounded function of `rho`.
    fn three_body_shape_residual(&self, rho: f64) -> Option<f64> {
        let gaps = self.scale_shape(&[1.0, rho]);
        let eval = evaluate_gaps(&self.law, &self.masses, &gaps, 0.0)?;
        let a = &eval.accelerations;
        let (left, right) = (a[1] - a[0], a[2] - a[1]);
        let num = right * gaps[0] - left * gaps[1];
        let den = right.abs() * gaps[0] + left.abs() * gaps[1];
        (den > 0.0).then(|| num / den)
    }

    /// All sign changes of the shape residual over log-spaced ratios, each
    /// refined by bisection.
    fn three_body_roots(&self) -> Vec<f64> {
        let (lo, hi) = (SCAN_RANGE.0.ln(), SCAN_RANGE.1.ln());
        let grid: Vec<f64> = (0..SCAN_POINTS).map(|k| lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64).collect();
        let values: Vec<Option<f64>> = grid.iter().map(|&u| self.three_body_shape_residual(u.exp())).collect();
        let mut roots = Vec::new();
        for k in 0..SCAN_POINTS - 1 {
            let (Some(fa), Some(fb)) = (values[k], values[k + 1]) else { continue };
            if fa == 0.0 {
                roots.push(grid[k].exp());
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let (mut a, mut b, mut fa) = (grid[k], grid[k + 1], fa);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                match self.three_body_shape_residual(m.exp()) {
                    Some(fm) if fm * fa > 0.0 => {
                        a = m;
                        fa = fm;
                    }
                    Some(_) => b = m,
                    None => break,
                }
            }
            roots.push((0.5 * (a + b)).exp());
        }
        if values.last().copied().flatten() == Some(0.0) {
            roots.push(SCAN_RANGE.1);
        }
        roots
    }
}

fn finish(ordering: &[usize], gaps: Vec<f64>, lambda: f64, residual_norm: f64) -> Result<CollinearConfiguration> {
    if !(lambda > 0.0) {
        return Err(CoreError::SolverFailure { ordering: ordering.to_vec(), residual: residual_norm });
    }
    Ok(CollinearConfiguration { ordering: ordering.to_vec(), gaps, lambda, residual_norm })
}

fn problem(
    masses: &MassSystem,
    ordering: &[usize],
    pot: &PotentialSpec,
    normalization: Normalization,
) -> Result<Problem> {
    check_ordering(ordering, masses.len())?;
    if !pot.has_attracting_term() {
        return Err(CoreError::Precondition("potential has no attracting term".into()));
    }
    match normalization {
        Normalization::FirstGap(c) | Normalization::Inertia(c) if !(c > 0.0 && c.is_finite()) => {
            return Err(CoreError::Precondition(format!("normalization value {c} must be positive")));
        }
        _ => {}
    }
    let attracting_negative = pot.terms().iter().all(|t| t.coefficient >= 0.0 && t.alpha < 0.0);
    Ok(Problem {
        law: pot.law::<f64>(),
        descent_degree: pot.degree().filter(|_| pot.is_homogeneous() && attracting_negative),
        masses: ordering.iter().map(|&i| masses[i]).collect(),
        normalization,
    })
}

/// Polishes each bracketed three-body root and drops duplicates.
fn distinct_three_body_solutions(p: &Problem) -> Vec<(Vec<f64>, f64, f64)> {
    let mut found: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for rho in p.three_body_roots() {
        let Ok(sol) = p.newton(&[1.0, rho]) else { continue };
        let duplicate = found.iter().any(|(g, _, _)| {
            g.iter().zip(&sol.0).all(|(a, b)| (a - b).abs() <= 1e-8 * a.abs().max(b.abs()))
        });
        if !duplicate {
            found.push(sol);
        }
    }
    found
}

/// Solves for the collinear central configuration with the given left-to-right
/// ordering.
///
/// Homogeneous potentials: damped Newton from equal gaps, with a bracketing
/// scan plus bisection on the gap ratio as the three-body fallback.
/// Quasi-homogeneous potentials: every root found by the scan (three bodies)
/// or by multi-start Newton (more bodies) is collected; more than one distinct
/// rotating solution is reported as [`CoreError::AmbiguousRoots`].
pub fn solve_collinear(
    masses: &MassSystem,
    ordering: &[usize],
    pot: &PotentialSpec,
    normalization: Normalization,
) -> Result<CollinearConfiguration> {
    let p = problem(masses, ordering, pot, normalization)?;
    let n = masses.len();
    let equal = vec![1.0; n - 1];
    if n == 2 || pot.is_homogeneous() {
        let direct = p.solve_from(&equal);
        let last_residual = match direct {
            Ok((g, l, r)) if l > 0.0 => return finish(ordering, g, l, r),
            Ok((_, _, r)) | Err(r) => r,
        };
        if n == 3 {
            if let Some((g, l, r)) = distinct_three_body_solutions(&p).into_iter().find(|s| s.1 > 0.0) {
                return finish(ordering, g, l, r);
            }
        }
        return Err(CoreError::SolverFailure { ordering: ordering.to_vec(), residual: last_residual });
    }

    let candidates: Vec<(Vec<f64>, f64, f64)> = if n == 3 {
        distinct_three_body_solutions(&p)
    } else {
        let mut found: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        for k in 0..SCAN_POINTS {
            let u = SCAN_RANGE.0.ln() / 3.0 + (SCAN_RANGE.1.ln() - SCAN_RANGE.0.ln()) / 3.0 * k as f64 / (SCAN_POINTS - 1) as f64;
            let growth = u.exp();
            let start: Vec<f64> = (0..n - 1).map(|l| growth.powi(l as i32)).collect();
            if let Ok(sol) = p.newton(&start) {
                if !found.iter().any(|(g, _, _)| g.iter().zip(&sol.0).all(|(a, b)| (a - b).abs() <= 1e-8 * a.max(*b))) {
                    found.push(sol);
                }
            }
        }
        found
    };
    let rotating: Vec<CollinearConfiguration> = candidates
        .into_iter()
        .filter(|s| s.1 > 0.0)
        .map(|(gaps, lambda, residual_norm)| CollinearConfiguration { ordering: ordering.to_vec(), gaps, lambda, residual_norm })
        .collect();
    match rotating.len() {
        0 => Err(CoreError::SolverFailure { ordering: ordering.to_vec(), residual: f64::INFINITY }),
        1 => Ok(rotating.into_iter().next().expect("one root")),
        _ => Err(CoreError::AmbiguousRoots { ordering: ordering.to_vec(), roots: rotating }),
    }
}

/// Damped Newton from the given gap shape. For attracting homogeneous laws
/// with `alpha < 0` a stalled run continues by descent on
/// `log(-U) - (alpha/2) log I`, whose minimum over an ordering is the
/// configuration, and then Newton again.
pub fn solve_collinear_from(
    masses: &MassSystem,
    ordering: &[usize],
    pot: &PotentialSpec,
    normalization: Normalization,
    initial_gaps: &[f64],
) -> Result<CollinearConfiguration> {
    let p = problem(masses, ordering, pot, normalization)?;
    if initial_gaps.len() != masses.len() - 1 || !initial_gaps.iter().all(|&g| g > 0.0) {
        return Err(CoreError::Precondition("initial gaps must be n - 1 positive numbers".into()));
    }
    match p.solve_from(initial_gaps) {
        Ok((g, l, r)) => finish(ordering, g, l, r),
        Err(r) => Err(CoreError::SolverFailure { ordering: ordering.to_vec(), residual: r }),
    }
}

/// Orderings modulo reversal: permutations whose first index is below the last.
pub fn canonical_orderings(n: usize) -> Vec<Vec<usize>> {
    fn permute(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if prefix.len() == n {
            if prefix[0] < prefix[n - 1] {
                out.push(prefix.clone());
            }
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                permute(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    permute(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// One configuration per ordering modulo reflection (`n!/2` of them), each
/// normalized to unit first gap.
pub fn enumerate_collinear(masses: &MassSystem, pot: &PotentialSpec) -> Result<Vec<CollinearConfiguration>> {
    enumerate_collinear_with(masses, pot, Normalization::default())
}

pub fn enumerate_collinear_with(
    masses: &MassSystem,
    pot: &PotentialSpec,
    normalization: Normalization,
) -> Result<Vec<CollinearConfiguration>> {
    if !pot.is_homogeneous() {
        return Err(CoreError::Precondition("enumeration requires a homogeneous potential".into()));
    }
    canonical_orderings(masses.len())
        .iter()
        .map(|ordering| solve_collinear(masses, ordering, pot, normalization))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleProbe {
    /// Gap ratios of the solution with `I = 1`.
    pub shape_small: Vec<f64>,
    /// Gap ratios of the solution with `I = 4`.
    pub shape_large: Vec<f64>,
    pub max_ratio_difference: f64,
}

/// Solves at two sizes and compares shapes; homogeneous potentials give the
/// same shape at every size.
pub fn scale_dependence_probe(masses: &MassSystem, ordering: &[usize], pot: &PotentialSpec) -> Result<ScaleProbe> {
    let small = solve_collinear(masses, ordering, pot, Normalization::Inertia(1.0))?;
    let large = solve_collinear(masses, ordering, pot, Normalization::Inertia(4.0))?;
    let (shape_small, shape_large) = (small.gap_ratios(), large.gap_ratios());
    let max_ratio_difference = shape_small.iter().zip(&shape_large).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ScaleProbe { shape_small, shape_large, max_ratio_difference })
}

/// A collinear central configuration carried in `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCollinear<R> {
    pub ordering: Vec<usize>,
    /// Barycentric line coordinates indexed by body.
    pub positions: Vec<R>,
    pub lambda: R,
    /// Scale-free residual evaluated in `R`.
    pub residual_norm: f64,
}

impl<R: Real> ExactCollinear<R> {
    pub fn omega(&self) -> R {
        (R::from_f64(2.0) * self.lambda).sqrt()
    }
}

/// Newton refinement of a double-precision solution in `R`, keeping the first
/// gap fixed. The Jacobian is evaluated in `f64`; the residual in `R`.
pub fn refine<R: Real>(config: &CollinearConfiguration, masses: &MassSystem, pot: &PotentialSpec) -> Result<ExactCollinear<R>> {
    let n = masses.len();
    let p = problem(masses, &config.ordering, pot, Normalization::FirstGap(config.gaps[0]))?;
    let law = pot.law::<R>();
    let ordered: Vec<R> = p.masses.iter().map(|&m| R::from_f64(m)).collect();
    let mut gaps: Vec<R> = config.gaps.iter().map(|&g| R::from_f64(g)).collect();
    let mut lambda = R::from_f64(config.lambda);
    let failure = |residual: f64| CoreError::SolverFailure { ordering: config.ordering.clone(), residual };
    let residual_of = |gaps: &[R], lambda: R| -> Result<(GapEvaluation<R>, R)> {
        let eval = evaluate_gaps(&law, &ordered, gaps, lambda).ok_or_else(|| failure(f64::INFINITY))?;
        let worst = eval.residual.iter().fold(R::zero(), |m, e| m.max(e.abs()));
        let scale = eval.accelerations.windows(2).fold(R::zero(), |m, w| m.max((w[1] - w[0]).abs()));
        Ok((eval, worst / scale))
    };
    let (mut eval, mut norm) = residual_of(&gaps, lambda)?;
    let floor = R::from_f64(1e3) * R::epsilon();
    for _ in 0..12 {
        if norm <= floor {
            break;
        }
        let g64: Vec<f64> = gaps.iter().map(|g| g.to_f64()).collect();
        let eval64 = evaluate_gaps(&p.law, &p.masses, &g64, lambda.to_f64()).ok_or_else(|| failure(norm.to_f64()))?;
        let jac = p.jacobian(&g64, lambda.to_f64(), &eval64);
        let mut rhs = DVector::zeros(n);
        for k in 0..n - 1 {
            rhs[k] = -eval.residual[k].to_f64();
        }
        let step = jac.lu().solve(&rhs).ok_or_else(|| failure(norm.to_f64()))?;
        let trial: Vec<R> = (0..n - 1).map(|l| gaps[l] + R::from_f64(step[l])).collect();
        let trial_lambda = lambda + R::from_f64(step[n - 1]);
        let (trial_eval, trial_norm) = residual_of(&trial, trial_lambda)?;
        if !(trial_norm < norm) {
            break;
        }
        gaps = trial;
        lambda = trial_lambda;
        eval = trial_eval;
        norm = trial_norm;
    }
    let mut positions = vec![R::zero(); n];
    for (k, &body) in config.ordering.iter().enumerate() {
        positions[body] = eval.positions[k];
    }
    Ok(ExactCollinear { ordering: config.ordering.clone(), positions, lambda, residual_norm: norm.to_f64() })
}
