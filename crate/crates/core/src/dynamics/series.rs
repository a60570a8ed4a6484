use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{CoreError, Result};
use crate::model::{Diagnostics, MassSystem, PotentialSpec};

const STENCIL: usize = 7;

/// Per-sample diagnostics of a trajectory plus finite-difference rates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub diagnostics: Vec<Diagnostics>,
    /// `d(K/I)/dt`.
    pub omega_dot: Vec<f64>,
    /// `|r_i|` per sample and body.
    pub distances: Vec<Vec<f64>>,
    /// `d|r_i|/dt` per sample and body.
    pub radial_rates: Vec<Vec<f64>>,
    /// `dI/dt`.
    pub inertia_rate: Vec<f64>,
}

impl DiagnosticSeries {
    pub fn times(&self) -> Vec<f64> {
        self.column(|d| d.time)
    }

    pub fn column(&self, f: impl Fn(&Diagnostics) -> f64) -> Vec<f64> {
        self.diagnostics.iter().map(f).collect()
    }

    pub fn len(&self) -> usize {
        self.diagnostics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub fn diagnostics_series(traj: &Trajectory, masses: &MassSystem, pot: &PotentialSpec) -> Result<DiagnosticSeries> {
    if traj.is_empty() {
        return Err(CoreError::Precondition("empty trajectory".into()));
    }
    let diagnostics = traj
        .samples
        .iter()
        .map(|s| Diagnostics::evaluate(s, masses, pot))
        .collect::<Result<Vec<_>>>()?;
    let times = traj.times();
    let omega: Vec<f64> = diagnostics.iter().map(|d| d.omega).collect();
    let inertia: Vec<f64> = diagnostics.iter().map(|d| d.inertia).collect();
    let distances: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|s| s.positions().iter().map(|r| r.norm()).collect())
        .collect();
    let n = masses.len();
    let per_body_rates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let column: Vec<f64> = distances.iter().map(|row| row[i]).collect();
            finite_difference(&times, &column)
        })
        .collect();
    let radial_rates = (0..times.len()).map(|k| per_body_rates.iter().map(|c| c[k]).collect()).collect();
    Ok(DiagnosticSeries {
        omega_dot: finite_difference(&times, &omega),
        inertia_rate: finite_difference(&times, &inertia),
        diagnostics,
        distances,
        radial_rates,
    })
}

/// First derivative of sampled data on an arbitrary increasing grid, from
/// seven-point Lagrange stencils (centered where the data allow).
pub fn finite_difference(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let width = STENCIL.min(n);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let nodes: Vec<f64> = times[start..start + width].iter().map(|t| t - times[i]).collect();
            let w = first_derivative_weights(&nodes);
            w.iter().zip(&values[start..start + width]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Fornberg's recursion for first-derivative weights at 0 on `nodes`.
fn first_derivative_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_weights() {
        let w = first_derivative_weights(&[-1.0, 0.0, 1.0]);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w5 = first_derivative_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w5.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_low_degree_polynomials_on_uneven_grids() {
        let times = [0.0, 0.1, 0.25, 0.3, 0.42, 0.5, 0.61, 0.7, 0.75];
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t.powi(4) - t.powi(6);
        let df = |t: f64| -2.0 + 12.0 * t.powi(3) - 6.0 * t.powi(5);
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        for (d, &t) in finite_difference(&times, &values).iter().zip(&times) {
            assert!((d - df(t)).abs() < 1e-11, "{t}: {d} vs {}", df(t));
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| (1.3 * t).sin()).collect();
        let d = finite_difference(&times, &values);
        let worst = d.iter().zip(&times).map(|(d, t)| (d - 1.3 * (1.3 * t).cos()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn short_series() {
        assert_eq!(finite_difference(&[0.0], &[1.0]), vec![0.0]);
        assert_eq!(finite_difference(&[0.0, 2.0], &[1.0, 5.0]), vec![2.0, 2.0]);
    }
}
