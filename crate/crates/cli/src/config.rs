//! Scenario configuration files and the initial data they describe.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use collinear_core::central_config::{refine, solve_collinear, Normalization};
use collinear_core::dynamics::{integrate_raw, RawState};
use collinear_core::real::f256;
use collinear_core::scenarios::{
    figure_eight_ics, homographic_ics, homographic_raw, newtonian_radial_period, non_central_collinear_ics,
    relative_equilibrium_ics, relative_equilibrium_raw,
};
use collinear_core::verify::Tolerances;
use collinear_core::{IntegratorConfig, MassSystem, PhaseState, PotentialSpec, PotentialTerm, Precision, Trajectory, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScenarioKind {
    RelativeEquilibrium,
    Homographic,
    NonCentralControl,
    FigureEight,
    Custom,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomState {
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub kind: ScenarioKind,
    /// Line ordering of the bodies; defaults to index order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Vec<usize>>,
    /// Absolute initial rotation rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    /// Initial rotation rate as a multiple of the relative-equilibrium rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_factor: Option<f64>,
    #[serde(default)]
    pub dilation_rate: f64,
    /// Consecutive distances for the non-central control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<CustomState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Run length in natural periods of the scenario; used when `t_end` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
}

impl ScenarioParams {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            ordering: None,
            omega0: None,
            omega_factor: None,
            dilation_rate: 0.0,
            gaps: None,
            state: None,
            t_end: None,
            periods: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Directory for files not named explicitly; defaults to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub masses: Vec<f64>,
    #[serde(default = "newtonian_terms")]
    pub potential: Vec<PotentialTerm>,
    pub scenario: ScenarioParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_name() -> String {
    "scenario".into()
}

fn newtonian_terms() -> Vec<PotentialTerm> {
    vec![PotentialTerm { alpha: -1.0, coefficient: 1.0 }]
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: default_name(),
            masses: Vec::new(),
            potential: newtonian_terms(),
            scenario: ScenarioParams::new(kind),
            integrator: IntegratorConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn trajectory_path(&self) -> PathBuf {
        self.output_path(&self.output.trajectory, "trajectory.csv")
    }

    pub fn diagnostics_path(&self) -> PathBuf {
        self.output_path(&self.output.diagnostics, "diagnostics.csv")
    }

    fn output_path(&self, explicit: &Option<PathBuf>, suffix: &str) -> PathBuf {
        match explicit {
            Some(p) => p.clone(),
            None => self.output.dir.clone().unwrap_or_default().join(format!("{}_{suffix}", self.name)),
        }
    }
}

/// Validated inputs, ready to integrate.
pub struct Prepared {
    pub masses: MassSystem,
    pub potential: PotentialSpec,
    pub kind: ScenarioKind,
    pub start: PhaseState,
    pub t_end: f64,
    pub integrator: IntegratorConfig,
    extended_start: Option<RawState<f256>>,
}

impl Prepared {
    pub fn integrate(&self) -> CliResult<Trajectory> {
        let result = match (&self.extended_start, self.integrator.precision) {
            (Some(raw), Precision::Extended) => {
                integrate_raw(raw, &self.masses, &self.potential, self.t_end, &self.integrator).map(|r| r.0)
            }
            _ => collinear_core::integrate(&self.start, &self.masses, &self.potential, self.t_end, &self.integrator),
        };
        result.map_err(|e| CliError::from_core(e, "integration"))
    }
}

fn kind_name(kind: ScenarioKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn field<T>(value: Option<T>, name: &str, kind: ScenarioKind) -> CliResult<T> {
    value.ok_or_else(|| CliError::invalid(format!("scenario.{name} is required for {} scenarios", kind_name(kind))))
}

fn positive(value: f64, name: &str) -> CliResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

pub fn prepare(config: &ScenarioConfig) -> CliResult<Prepared> {
    config.integrator.validate().map_err(|e| CliError::from_core(e, "integrator"))?;
    let potential = PotentialSpec::new(config.potential.clone()).map_err(|e| CliError::from_core(e, "potential"))?;
    let p = &config.scenario;
    if p.omega0.is_some() && p.omega_factor.is_some() {
        return Err(CliError::invalid("scenario.omega0 and scenario.omega_factor are mutually exclusive"));
    }
    if !p.dilation_rate.is_finite() {
        return Err(CliError::invalid("scenario.dilation_rate must be finite"));
    }
    let masses_for = |values: &[f64]| MassSystem::new(values.to_vec()).map_err(|e| CliError::from_core(e, "masses"));

    let mut extended_start = None;
    let (masses, start, natural_period) = match p.kind {
        ScenarioKind::RelativeEquilibrium | ScenarioKind::Homographic => {
            let masses = masses_for(&config.masses)?;
            let ordering = p.ordering.clone().unwrap_or_else(|| (0..masses.len()).collect());
            let solved = solve_collinear(&masses, &ordering, &potential, Normalization::default())
                .map_err(|e| CliError::from_core(e, "scenario.ordering"))?;
            let omega_re = solved.omega();
            let (omega0, dilation) = match p.kind {
                ScenarioKind::RelativeEquilibrium => {
                    if p.omega0.is_some() || p.omega_factor.is_some() || p.dilation_rate != 0.0 {
                        return Err(CliError::invalid(
                            "scenario: relative_equilibrium takes no omega0, omega_factor or dilation_rate",
                        ));
                    }
                    (omega_re, 0.0)
                }
                _ => (p.omega0.unwrap_or(omega_re * p.omega_factor.unwrap_or(1.0)), p.dilation_rate),
            };
            let start = if p.kind == ScenarioKind::RelativeEquilibrium {
                relative_equilibrium_ics(&solved, &masses)
            } else {
                homographic_ics(&solved, &masses, omega0, dilation)
            }
            .map_err(|e| CliError::from_core(e, "scenario"))?;
            if config.integrator.precision == Precision::Extended {
                let exact = refine::<f256>(&solved, &masses, &potential).map_err(|e| CliError::from_core(e, "scenario"))?;
                extended_start = Some(match (p.kind, p.omega0) {
                    (ScenarioKind::RelativeEquilibrium, _) => relative_equilibrium_raw(&exact),
                    (_, Some(w)) => homographic_raw(&exact, w / omega_re, dilation),
                    (_, None) => homographic_raw(&exact, p.omega_factor.unwrap_or(1.0), dilation),
                });
            }
            let period = if p.kind == ScenarioKind::RelativeEquilibrium || (dilation == 0.0 && omega0 == omega_re) {
                Some(2.0 * PI / omega_re)
            } else if potential.degree() == Some(-1.0) {
                newtonian_radial_period(&solved, &potential, omega0, dilation).map_err(|e| CliError::from_core(e, "scenario"))?
            } else {
                None
            };
            (masses, start, period)
        }
        ScenarioKind::NonCentralControl => {
            let masses = masses_for(&config.masses)?;
            if p.ordering.is_some() {
                return Err(CliError::invalid("scenario.ordering: the control places bodies in index order"));
            }
            let gaps = field(p.gaps.clone(), "gaps", p.kind)?;
            let omega0 = field(p.omega0, "omega0", p.kind)?;
            let start = non_central_collinear_ics(&masses, &potential, &gaps, omega0)
                .map_err(|e| CliError::from_core(e, "scenario.gaps"))?;
            (masses, start, (omega0 != 0.0).then(|| 2.0 * PI / omega0.abs()))
        }
        ScenarioKind::FigureEight => {
            let fixture = figure_eight_ics();
            if !config.masses.is_empty() && config.masses != fixture.masses.masses() {
                return Err(CliError::invalid("masses: the figure-eight fixture has three unit masses"));
            }
            if config.potential != newtonian_terms() {
                return Err(CliError::invalid("potential: the figure-eight fixture is Newtonian with G = 1"));
            }
            (fixture.masses, fixture.state, fixture.period)
        }
        ScenarioKind::Custom => {
            let masses = masses_for(&config.masses)?;
            let state = field(p.state.clone(), "state", p.kind)?;
            let pair = |v: &[[f64; 2]]| v.iter().map(|&[x, y]| Vec2::new(x, y)).collect::<Vec<_>>();
            let start = PhaseState::new(&masses, pair(&state.positions), pair(&state.velocities), 0.0)
                .map_err(|e| CliError::from_core(e, "scenario.state"))?;
            (masses, start, None)
        }
    };

    let t_end = match (p.t_end, p.periods) {
        (Some(t), None) => positive(t, "scenario.t_end")?,
        (None, Some(k)) => {
            let period = natural_period
                .ok_or_else(|| CliError::invalid("scenario.periods: this scenario has no natural period, give t_end"))?;
            positive(k, "scenario.periods")? * period
        }
        (Some(_), Some(_)) => return Err(CliError::invalid("scenario.t_end and scenario.periods are mutually exclusive")),
        (None, None) => return Err(CliError::invalid("scenario.t_end or scenario.periods is required")),
    };

    Ok(Prepared { masses, potential, kind: p.kind, start, t_end, integrator: config.integrator.clone(), extended_start })
}
