//! Collinear n-body laboratory: models, integration, collinear central
//! configurations, homographic scenarios, verification and level-set geometry.

pub mod central_config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod model;
pub mod real;
pub mod scenarios;
pub mod verify;

pub use central_config::{CollinearConfiguration, Normalization};
pub use dynamics::{integrate, IntegratorConfig, Precision, Trajectory};
pub use error::{CoreError, Result};
pub use model::{MassSystem, PhaseState, PotentialSpec, PotentialTerm, Vec2};
pub use real::Real;
