use std::fs::File;
use std::io::Write;
use std::path::Path;

use collinear_core::model::Diagnostics;
use collinear_core::{MassSystem, PotentialSpec, Trajectory};

use crate::error::{CliError, CliResult};

/// Seventeen significant digits: enough to round-trip every double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> CliResult<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    File::create(path).map_err(|e| CliError::invalid(format!("cannot create {}: {e}", path.display())))
}

pub fn trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> CliResult<()> {
    let n = traj.first().len();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        header.extend(["x", "y", "vx", "vy"].iter().map(|c| format!("{c}{i}")));
    }
    w.write_record(&header)?;
    for s in &traj.samples {
        let mut row = vec![num(s.time())];
        for (r, v) in s.positions().iter().zip(s.velocities()) {
            row.extend([r.x, r.y, v.x, v.y].map(num));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn diagnostics_csv<W: Write>(traj: &Trajectory, masses: &MassSystem, pot: &PotentialSpec, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["t", "U", "T", "H", "I", "K", "J", "sundman_gap", "collinearity", "omega"].iter().map(|s| s.to_string()).collect();
    header.extend((0..masses.len()).map(|i| format!("K{i}")));
    w.write_record(&header)?;
    for s in &traj.samples {
        let d = Diagnostics::evaluate(s, masses, pot).map_err(|e| CliError::from_core(e, "diagnostics"))?;
        let mut row: Vec<String> = [
            d.time,
            d.potential,
            d.kinetic,
            d.energy,
            d.inertia,
            d.angular_momentum,
            d.radial_product,
            d.sundman_gap,
            d.collinearity,
            d.omega,
        ]
        .map(num)
        .to_vec();
        row.extend(d.body_angular_momenta.iter().map(|&k| num(k)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> CliResult<()> {
    trajectory_csv(traj, create(path)?)
}

pub fn write_diagnostics(traj: &Trajectory, masses: &MassSystem, pot: &PotentialSpec, path: &Path) -> CliResult<()> {
    diagnostics_csv(traj, masses, pot, create(path)?)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::invalid(format!("json: {e}")))?;
    writeln!(f)?;
    Ok(())
}
