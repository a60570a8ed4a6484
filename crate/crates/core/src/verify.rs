//! Pass/fail theorem-witness reports over sampled trajectories.
//!
//! Deviations are floating-point estimates, not rigorous bounds. The Sundman
//! check tests the equality `2TI - J^2 = K^2` in the form obtained from
//! `J = -(omega'/(2 omega^2)) C`; squaring that expression (rather than
//! squaring `omega'^2` as one printed form of the identity does) is what makes
//! the equality hold on collinear motions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{diagnostics_series, DiagnosticSeries, Trajectory};
use crate::error::{CoreError, Result};
use crate::model::{collinearity_residual, MassSystem, PhaseState, PotentialSpec};
use crate::scenarios::fit_homographic;

/// Initial collinearity residual above which the collinear hypotheses fail.
pub const COLLINEAR_START: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Theorem-witness deviations.
    pub theorem: f64,
    /// Identities that hold by construction, and per-body angular momentum.
    pub construction: f64,
    /// Identities involving finite-difference rates.
    pub finite_difference: f64,
    /// Collinearity level a control run must exceed.
    pub control: f64,
    /// Energy and angular momentum drift.
    pub conservation: f64,
    pub barycenter: f64,
    /// Largest relative variation of `I` treated as constant. This gates a
    /// hypothesis rather than bounding a deviation.
    pub saari_hypothesis: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            theorem: 1e-6,
            construction: 1e-8,
            finite_difference: 1e-5,
            control: 1e-3,
            conservation: 1e-9,
            barycenter: 1e-10,
            saari_hypothesis: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Hypothesis not met; nothing asserted.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `deviation <= tolerance`.
    AtMost,
    /// Passes when `deviation > tolerance` (control runs).
    Exceeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub outcome: Outcome,
    pub worst_time: f64,
}

impl CheckEntry {
    fn new(name: &str, (deviation, worst_time): (f64, f64), tolerance: f64, comparison: Comparison) -> Self {
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation.abs() };
        let ok = match comparison {
            Comparison::AtMost => deviation <= tolerance,
            Comparison::Exceeds => deviation > tolerance,
        };
        Self {
            name: name.to_string(),
            deviation,
            tolerance,
            comparison,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            worst_time,
        }
    }

    fn skipped(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            deviation: 0.0,
            tolerance,
            comparison: Comparison::AtMost,
            outcome: Outcome::Skipped,
            worst_time: f64::NAN,
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub title: String,
    pub entries: Vec<CheckEntry>,
    /// `None` when the report has no hypothesis gate.
    pub hypothesis_met: Option<bool>,
    pub info: BTreeMap<String, f64>,
}

impl VerificationReport {
    fn new(title: &str) -> Self {
        Self { title: title.into(), entries: Vec::new(), hypothesis_met: None, info: BTreeMap::new() }
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for VerificationReport {
    /// One `name deviation tolerance PASS|FAIL|SKIP` line per check, then
    /// `# key value` lines for informational metrics.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.title)?;
        for e in &self.entries {
            let word = match e.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Skipped => "SKIP",
            };
            writeln!(f, "{} {:.6e} {:.6e} {word}", e.name, e.deviation, e.tolerance)?;
        }
        if let Some(met) = self.hypothesis_met {
            writeln!(f, "# hypothesis_met {met}")?;
        }
        for (k, v) in &self.info {
            writeln!(f, "# {k} {v:.17e}")?;
        }
        writeln!(f, "overall {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Running maximum that remembers where it happened.
#[derive(Clone, Copy)]
struct Worst(f64, f64);

impl Worst {
    fn new() -> Self {
        Self(0.0, f64::NAN)
    }

    fn push(&mut self, value: f64, time: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value.abs() };
        if value > self.0 || self.1.is_nan() {
            self.0 = value;
            self.1 = time;
        }
    }

    fn get(self) -> (f64, f64) {
        self
            .1
            .is_nan()
            .then_some((0.0, 0.0))
            .unwrap_or((self.0, self.1))
    }
}

fn require_collinear_rotation(traj: &Trajectory, masses: &MassSystem) -> Result<()> {
    if traj.is_empty() {
        return Err(CoreError::Precondition("empty trajectory".into()));
    }
    let first = traj.first();
    let residual = collinearity_residual(first);
    if residual > COLLINEAR_START {
        return Err(CoreError::Precondition(format!(
            "hypothesis not met: initial state is not collinear (residual {residual:.3e})"
        )));
    }
    let (k, _) = crate::model::angular_momentum(first, masses);
    if k.abs() <= 1e-12 * momentum_scale(first, masses) {
        return Err(CoreError::Precondition("hypothesis not met: non-zero angular momentum".into()));
    }
    Ok(())
}

/// `sum m_i |r_i| |v_i|`, the natural size of any angular momentum.
fn momentum_scale(state: &PhaseState, masses: &MassSystem) -> f64 {
    state
        .positions()
        .iter()
        .zip(state.velocities())
        .zip(masses.masses())
        .map(|((r, v), m)| m * r.norm() * v.norm())
        .sum()
}

fn relative_variation(values: &[f64], times: &[f64]) -> (f64, f64) {
    let reference = values[0];
    let scale = if reference != 0.0 { reference.abs() } else { 1.0 };
    let mut w = Worst::new();
    for (v, &t) in values.iter().zip(times) {
        w.push((v - reference) / scale, t);
    }
    w.get()
}

/// Collinear-implies-homographic witnesses on a collinear run with `K != 0`: the run
/// stays collinear, each `K_i` is constant, distance ratios follow
/// `r_i/r_j = sqrt(m_j c_i / (m_i c_j))`, Sundman's inequality is an
/// equality, and the radial identities for `r_i'`, `T` and `J` in terms of
/// `omega` hold.
pub fn verify_collinear_homographic(
    traj: &Trajectory,
    masses: &MassSystem,
    pot: &PotentialSpec,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    require_collinear_rotation(traj, masses)?;
    let series = diagnostics_series(traj, masses, pot)?;
    let times = series.times();
    let d0 = &series.diagnostics[0];
    let k0 = d0.angular_momentum;
    let n = masses.len();
    let mut report = VerificationReport::new("collinear homographic");

    let mut coll = Worst::new();
    for d in &series.diagnostics {
        coll.push(d.collinearity, d.time);
    }
    report.entries.push(CheckEntry::new("collinearity", coll.get(), tol.theorem, Comparison::AtMost));

    let mut body = Worst::new();
    for d in &series.diagnostics {
        for i in 0..n {
            body.push((d.body_angular_momenta[i] - d0.body_angular_momenta[i]) / k0, d.time);
        }
    }
    report.entries.push(CheckEntry::new("body_angular_momentum", body.get(), tol.construction, Comparison::AtMost));

    report.entries.push(CheckEntry::new("ratio_law", ratio_law(&series, masses, k0), tol.theorem, Comparison::AtMost));

    let mut sundman = Worst::new();
    for d in &series.diagnostics {
        sundman.push(d.sundman_gap / (k0 * k0), d.time);
    }
    report.entries.push(CheckEntry::new("sundman_equality", sundman.get(), tol.theorem, Comparison::AtMost));

    let (radial, kinetic, product) = rate_identities(&series, k0);
    report.entries.push(CheckEntry::new("radial_rate_identity", radial, tol.finite_difference, Comparison::AtMost));
    report.entries.push(CheckEntry::new("kinetic_energy_identity", kinetic, tol.finite_difference, Comparison::AtMost));
    report.entries.push(CheckEntry::new("radial_product_identity", product, tol.finite_difference, Comparison::AtMost));

    let fit = fit_homographic(traj, masses)?;
    report.entries.push(CheckEntry::new(
        "homographic_shape",
        (fit.max_shape_deviation, fit.worst_time),
        tol.theorem,
        Comparison::AtMost,
    ));

    let inertia = series.column(|d| d.inertia);
    report.info.insert("angular_momentum".into(), k0);
    report.info.insert("inertia_relative_variation".into(), relative_variation(&inertia, &times).0);
    report.info.insert("samples".into(), series.len() as f64);
    Ok(report)
}

/// `max |r_i/r_j - sqrt(m_j c_i / (m_i c_j))|` over pairs with `c_j != 0`,
/// using the initial `c_i`.
fn ratio_law(series: &DiagnosticSeries, masses: &MassSystem, k0: f64) -> (f64, f64) {
    let c = &series.diagnostics[0].body_angular_momenta;
    let m = masses.masses();
    let mut w = Worst::new();
    for (row, d) in series.distances.iter().zip(&series.diagnostics) {
        for i in 0..m.len() {
            for j in 0..m.len() {
                if i == j || c[j].abs() <= 1e-12 * k0.abs() {
                    continue;
                }
                let predicted = (m[j] * c[i] / (m[i] * c[j])).abs().sqrt();
                w.push(row[i] / row[j] - predicted, d.time);
            }
        }
    }
    w.get()
}

/// Residuals of `r_i' + (r_i/2)(omega'/omega) = 0`,
/// `T = (C/2)(omega'^2/(4 omega^3) + omega)` and `J = -(omega'/(2 omega^2)) C`,
/// each scaled to a dimensionless size.
fn rate_identities(series: &DiagnosticSeries, c: f64) -> ((f64, f64), (f64, f64), (f64, f64)) {
    let (mut radial, mut kinetic, mut product) = (Worst::new(), Worst::new(), Worst::new());
    let speed = series
        .distances
        .iter()
        .zip(&series.diagnostics)
        .flat_map(|(row, d)| row.iter().map(move |r| r * d.omega.abs()))
        .fold(0.0, f64::max);
    let energy = series.diagnostics.iter().map(|d| d.kinetic).fold(0.0, f64::max);
    let size = series.diagnostics.iter().map(|d| (2.0 * d.kinetic * d.inertia).sqrt()).fold(0.0, f64::max);
    for (k, d) in series.diagnostics.iter().enumerate() {
        let (w, wd) = (d.omega, series.omega_dot[k]);
        for i in 0..series.distances[k].len() {
            let r = series.distances[k][i];
            radial.push((series.radial_rates[k][i] + 0.5 * r * wd / w) / speed, d.time);
        }
        kinetic.push((d.kinetic - 0.5 * c * (wd * wd / (4.0 * w * w * w) + w)) / energy, d.time);
        product.push((d.radial_product + wd / (2.0 * w * w) * c) / size, d.time);
    }
    (radial.get(), kinetic.get(), product.get())
}

/// The collinear constant-inertia statement: if `I` is constant along the run
/// then `omega` and every mutual distance are constant. When `I` varies the
/// conclusion checks are skipped, not failed.
pub fn verify_saari(traj: &Trajectory, masses: &MassSystem, tol: &Tolerances) -> Result<VerificationReport> {
    require_collinear_rotation(traj, masses)?;
    let times = traj.times();
    let inertia: Vec<f64> = traj.samples.iter().map(|s| crate::model::moment_of_inertia(s, masses)).collect();
    let (variation, _) = relative_variation(&inertia, &times);
    let mut report = VerificationReport::new("constant inertia implies relative equilibrium");
    report.info.insert("inertia_relative_variation".into(), variation);
    let met = variation <= tol.saari_hypothesis;
    report.hypothesis_met = Some(met);
    if !met {
        report.entries.push(CheckEntry::skipped("omega_constant", tol.construction));
        report.entries.push(CheckEntry::skipped("distances_constant", tol.construction));
        return Ok(report);
    }
    let omega: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| crate::model::omega_estimate(s, masses))
        .collect::<Result<_>>()?;
    report.entries.push(CheckEntry::new("omega_constant", relative_variation(&omega, &times), tol.construction, Comparison::AtMost));
    let pairs = |s: &PhaseState| -> Vec<f64> {
        let r = s.positions();
        (0..r.len()).flat_map(|i| (i + 1..r.len()).map(move |j| (r[i] - r[j]).norm())).collect()
    };
    let d0 = pairs(traj.first());
    let mut w = Worst::new();
    for s in &traj.samples {
        for (d, r0) in pairs(s).iter().zip(&d0) {
            w.push((d - r0) / r0, s.time());
        }
    }
    report.entries.push(CheckEntry::new("distances_constant", w.get(), tol.construction, Comparison::AtMost));
    Ok(report)
}

/// Conservation of `H` and `K`, Sundman's inequality, barycenter drift.
pub fn verify_generic(traj: &Trajectory, masses: &MassSystem, pot: &PotentialSpec, tol: &Tolerances) -> Result<VerificationReport> {
    let series = diagnostics_series(traj, masses, pot)?;
    let times = series.times();
    let d0 = &series.diagnostics[0];
    let mut report = VerificationReport::new("conservation and Sundman inequality");

    let energy_scale = if d0.energy != 0.0 { d0.energy.abs() } else { d0.kinetic.abs() + d0.potential.abs() };
    let mut energy = Worst::new();
    for d in &series.diagnostics {
        energy.push((d.energy - d0.energy) / energy_scale, d.time);
    }
    report.entries.push(CheckEntry::new("energy_drift", energy.get(), tol.conservation, Comparison::AtMost));

    let k_scale = {
        let natural = momentum_scale(traj.first(), masses);
        if d0.angular_momentum.abs() > 1e-3 * natural { d0.angular_momentum.abs() } else { natural.max(f64::MIN_POSITIVE) }
    };
    let mut momentum = Worst::new();
    for d in &series.diagnostics {
        momentum.push((d.angular_momentum - d0.angular_momentum) / k_scale, d.time);
    }
    report.entries.push(CheckEntry::new("angular_momentum_drift", momentum.get(), tol.conservation, Comparison::AtMost));

    let mut violation = Worst::new();
    let mut min_gap = f64::INFINITY;
    for d in &series.diagnostics {
        min_gap = min_gap.min(d.sundman_gap);
        violation.push((-d.sundman_gap).max(0.0) / (d.angular_momentum * d.angular_momentum).max(1.0), d.time);
    }
    report.entries.push(CheckEntry::new("sundman_inequality", violation.get(), 1e-10, Comparison::AtMost));

    report.entries.push(CheckEntry::new(
        "barycenter_drift",
        (traj.stats.max_barycenter_drift, traj.last().time()),
        tol.barycenter,
        Comparison::AtMost,
    ));

    let inertia = series.column(|d| d.inertia);
    let (lo, hi) = inertia.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mean = inertia.iter().sum::<f64>() / inertia.len() as f64;
    report.info.insert("inertia_relative_variation".into(), (hi - lo) / mean);
    report.info.insert("energy_drift".into(), energy.get().0);
    report.info.insert("sundman_gap_min".into(), min_gap);
    report.info.insert("inertia_variation_from_start".into(), relative_variation(&inertia, &times).0);
    Ok(report)
}

/// A control run must leave the line: the collinearity residual has to exceed
/// the control tolerance somewhere.
pub fn verify_control(traj: &Trajectory, tol: &Tolerances) -> Result<VerificationReport> {
    if traj.is_empty() {
        return Err(CoreError::Precondition("empty trajectory".into()));
    }
    let mut w = Worst::new();
    let mut first_exceeded = f64::NAN;
    for s in &traj.samples {
        let c = collinearity_residual(s);
        w.push(c, s.time());
        if first_exceeded.is_nan() && c > tol.control {
            first_exceeded = s.time();
        }
    }
    let mut report = VerificationReport::new("non-central collinear control");
    report.entries.push(CheckEntry::new("collinearity_breakdown", w.get(), tol.control, Comparison::Exceeds));
    if !first_exceeded.is_nan() {
        report.info.insert("breakdown_time".into(), first_exceeded);
    }
    Ok(report)
}
