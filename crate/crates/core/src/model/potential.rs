use super::{MassSystem, PhaseState, PotentialSpec, Vec2};
use crate::error::{CoreError, Result};
use crate::real::Real;

#[derive(Debug, Clone)]
struct LawTerm<R> {
    alpha: R,
    // -coefficient * beta: multiplies r^alpha in the pair energy
    energy_coeff: R,
    // coefficient * |alpha|: multiplies r^(alpha - 2) in the pair weight
    weight_coeff: R,
    alpha_int: Option<i32>,
}

/// Pair interaction `phi(r) = sum_k -c_k beta_k r^alpha_k`, evaluated on
/// squared distances so the hot path needs at most one square root per term.
///
/// The pair energy of bodies `i, j` is `m_i m_j phi(r_ij)` and the force on
/// `i` is `-m_i m_j g(r_ij^2) (r_i - r_j)` with `g(s) = phi'(r) / r`.
#[derive(Debug, Clone)]
pub struct PairLaw<R> {
    terms: Vec<LawTerm<R>>,
}

impl<R: Real> PairLaw<R> {
    pub fn new(spec: &PotentialSpec) -> Self {
        let terms = spec
            .terms()
            .iter()
            .filter(|t| t.coefficient != 0.0)
            .map(|t| {
                let alpha_int = (t.alpha.fract() == 0.0 && t.alpha.abs() < 1e6).then_some(t.alpha as i32);
                LawTerm {
                    alpha: R::from_f64(t.alpha),
                    energy_coeff: R::from_f64(-t.coefficient * t.beta()),
                    weight_coeff: R::from_f64(t.coefficient * t.alpha.abs()),
                    alpha_int,
                }
            })
            .collect();
        Self { terms }
    }

    fn half_power(s: R, alpha: R, alpha_int: Option<i32>, shift: i32) -> R {
        match alpha_int {
            Some(k) => s.pow_half(k + shift),
            None => s.powf((alpha + R::from_f64(shift as f64)) / R::from_f64(2.0)),
        }
    }

    /// `phi` as a function of the squared distance.
    pub fn energy(&self, s: R) -> R {
        self.terms.iter().fold(R::zero(), |acc, t| {
            acc + t.energy_coeff * Self::half_power(s, t.alpha, t.alpha_int, 0)
        })
    }

    /// `g(s) = phi'(r) / r`; positive when the pair attracts.
    pub fn weight(&self, s: R) -> R {
        self.terms.iter().fold(R::zero(), |acc, t| {
            acc + t.weight_coeff * Self::half_power(s, t.alpha, t.alpha_int, -2)
        })
    }

    /// `dg/ds`.
    pub fn weight_derivative(&self, s: R) -> R {
        self.terms.iter().fold(R::zero(), |acc, t| {
            let factor = (t.alpha - R::from_f64(2.0)) / R::from_f64(2.0);
            acc + t.weight_coeff * factor * Self::half_power(s, t.alpha, t.alpha_int, -4)
        })
    }

    /// Accelerations of planar bodies from flat positions `[x0, y0, x1, ...]`.
    ///
    /// Returns the first coincident pair instead of dividing by zero.
    pub fn accelerations_into(&self, masses: &[R], positions: &[R], out: &mut [R]) -> std::result::Result<(), (usize, usize)> {
        let n = masses.len();
        out.iter_mut().for_each(|a| *a = R::zero());
        for i in 0..n {
            for j in i + 1..n {
                let dx = positions[2 * i] - positions[2 * j];
                let dy = positions[2 * i + 1] - positions[2 * j + 1];
                let s = dx * dx + dy * dy;
                if s == R::zero() {
                    return Err((i, j));
                }
                let g = self.weight(s);
                let (gx, gy) = (g * dx, g * dy);
                out[2 * i] -= masses[j] * gx;
                out[2 * i + 1] -= masses[j] * gy;
                out[2 * j] += masses[i] * gx;
                out[2 * j + 1] += masses[i] * gy;
            }
        }
        Ok(())
    }

    /// Accelerations of bodies on a line.
    pub fn line_accelerations_into(&self, masses: &[R], xs: &[R], out: &mut [R]) -> std::result::Result<(), (usize, usize)> {
        let n = masses.len();
        out.iter_mut().for_each(|a| *a = R::zero());
        for i in 0..n {
            for j in i + 1..n {
                let dx = xs[i] - xs[j];
                let s = dx * dx;
                if s == R::zero() {
                    return Err((i, j));
                }
                let gx = self.weight(s) * dx;
                out[i] -= masses[j] * gx;
                out[j] += masses[i] * gx;
            }
        }
        Ok(())
    }
}

fn check_distinct(state: &PhaseState) -> Result<()> {
    let p = state.positions();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return Err(CoreError::Singularity { i, j });
            }
        }
    }
    Ok(())
}

/// Potential energy `U`, signed so that the Lagrangian is `T - U`.
pub fn potential_energy(state: &PhaseState, masses: &MassSystem, pot: &PotentialSpec) -> Result<f64> {
    check_distinct(state)?;
    let law = pot.law::<f64>();
    let (p, m) = (state.positions(), masses.masses());
    let mut u = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            u += m[i] * m[j] * law.energy((p[i] - p[j]).norm_squared());
        }
    }
    Ok(u)
}

/// `dU/dr_i` for every body.
pub fn grad_potential(state: &PhaseState, masses: &MassSystem, pot: &PotentialSpec) -> Result<Vec<Vec2>> {
    let acc = accelerations(state, masses, pot)?;
    Ok(acc.iter().zip(masses.masses()).map(|(a, &m)| -a * m).collect())
}

/// `r_i'' = -(1/m_i) dU/dr_i`.
pub fn accelerations(state: &PhaseState, masses: &MassSystem, pot: &PotentialSpec) -> Result<Vec<Vec2>> {
    let law = pot.law::<f64>();
    let flat: Vec<f64> = state.positions().iter().flat_map(|r| [r.x, r.y]).collect();
    let mut out = vec![0.0; flat.len()];
    law.accelerations_into(masses.masses(), &flat, &mut out)
        .map_err(|(i, j)| CoreError::Singularity { i, j })?;
    Ok(out.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
}
