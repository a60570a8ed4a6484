//! Counting functions for mutual distances and collinearity relations, and
//! the intersection of the `U` and `I` level sets on the three-body ordering
//! planes.

use serde::{Deserialize, Serialize};

use crate::central_config::CollinearConfiguration;
use crate::error::{CoreError, Result};
use crate::model::{MassSystem, PairLaw, PotentialSpec};

/// Number of mutual distances, `n(n-1)/2`.
pub fn count_distances(n: usize) -> Result<u64> {
    if n < 2 {
        return Err(CoreError::Domain(format!("need at least two bodies, got {n}")));
    }
    let n = n as u64;
    Ok(n * (n - 1) / 2)
}

/// Number of independent linear relations among the distances of a
/// collinear configuration, `n(n-1)/2 - (n-1)`.
pub fn count_relations(n: usize) -> Result<u64> {
    Ok(count_distances(n)? - (n as u64 - 1))
}

/// `M(n+1) = M(n) + n` from `M(3) = 3`.
pub fn count_distances_recurrence(n: usize) -> Result<u64> {
    if n < 2 {
        return Err(CoreError::Domain(format!("need at least two bodies, got {n}")));
    }
    if n == 2 {
        return Ok(3 - 2);
    }
    Ok((3..n).fold(3u64, |m, k| m + k as u64))
}

/// `R(n+1) = 2R(n) - R(n-1) + 1` from `R(2) = 0`, `R(3) = 1`.
pub fn count_relations_recurrence(n: usize) -> Result<u64> {
    if n < 2 {
        return Err(CoreError::Domain(format!("need at least two bodies, got {n}")));
    }
    let (mut prev, mut cur) = (0u64, 1u64);
    if n == 2 {
        return Ok(prev);
    }
    for _ in 3..n {
        (prev, cur) = (cur, 2 * cur - prev + 1);
    }
    Ok(cur)
}

/// Three bodies on a line in a fixed order, with consecutive distances
/// `a` (first to second) and `b` (second to third).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingPlane {
    pub ordering: [usize; 3],
}

impl OrderingPlane {
    pub fn new(ordering: &[usize]) -> Result<Self> {
        let mut sorted = ordering.to_vec();
        sorted.sort_unstable();
        if sorted != [0, 1, 2] {
            return Err(CoreError::Domain(format!("{ordering:?} is not an ordering of three bodies")));
        }
        Ok(Self { ordering: [ordering[0], ordering[1], ordering[2]] })
    }

    pub fn reversed(&self) -> Self {
        let [i, j, k] = self.ordering;
        Self { ordering: [k, j, i] }
    }

    /// `(m_first m_second, m_second m_third, m_first m_third)`.
    fn pair_masses(&self, masses: &MassSystem) -> [f64; 3] {
        let [i, j, k] = self.ordering;
        [masses[i] * masses[j], masses[j] * masses[k], masses[i] * masses[k]]
    }
}

/// Evaluates `U` and `I` on an ordering plane.
pub struct LevelFunctions<'a> {
    plane: OrderingPlane,
    pair_masses: [f64; 3],
    total: f64,
    law: PairLaw<f64>,
    pot: &'a PotentialSpec,
}

impl<'a> LevelFunctions<'a> {
    pub fn new(plane: OrderingPlane, masses: &MassSystem, pot: &'a PotentialSpec) -> Result<Self> {
        if masses.len() != 3 {
            return Err(CoreError::Domain(format!("ordering planes need three bodies, got {}", masses.len())));
        }
        Ok(Self { pair_masses: plane.pair_masses(masses), total: masses.total(), law: pot.law(), plane, pot })
    }

    pub fn plane(&self) -> &OrderingPlane {
        &self.plane
    }

    pub fn potential(&self) -> &PotentialSpec {
        self.pot
    }

    /// `(U, I)` with `I = (1/M) sum_{i<j} m_i m_j r_ij^2`.
    pub fn values(&self, a: f64, b: f64) -> (f64, f64) {
        let r = [a, b, a + b];
        let mut u = 0.0;
        let mut i = 0.0;
        for k in 0..3 {
            u += self.pair_masses[k] * self.law.energy(r[k] * r[k]);
            i += self.pair_masses[k] * r[k] * r[k];
        }
        (u, i / self.total)
    }

    /// `(grad U, grad I)` with respect to `(a, b)`.
    pub fn gradients(&self, a: f64, b: f64) -> ([f64; 2], [f64; 2]) {
        let r = [a, b, a + b];
        let dr = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let (mut gu, mut gi) = ([0.0; 2], [0.0; 2]);
        for k in 0..3 {
            // dphi/dr = r g(r^2)
            let du = self.pair_masses[k] * r[k] * self.law.weight(r[k] * r[k]);
            let di = 2.0 * self.pair_masses[k] * r[k] / self.total;
            for c in 0..2 {
                gu[c] += du * dr[k][c];
                gi[c] += di * dr[k][c];
            }
        }
        (gu, gi)
    }

    /// `I` on the unit direction `(cos t, sin t)`; the level curve
    /// `I = c` is `rho(t) (cos t, sin t)` with `rho = sqrt(c / I(t))`.
    fn inertia_direction(&self, t: f64) -> f64 {
        self.values(t.cos(), t.sin()).1
    }

    fn curve_point(&self, c_i: f64, t: f64) -> (f64, f64) {
        let rho = (c_i / self.inertia_direction(t)).sqrt();
        (rho * t.cos(), rho * t.sin())
    }
}

/// `(U, I)` at consecutive distances `(a, b)` with bodies in index order.
pub fn level_values(a: f64, b: f64, masses: &MassSystem, pot: &PotentialSpec) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(CoreError::Domain(format!("distances must be positive, got ({a}, {b})")));
    }
    Ok(LevelFunctions::new(OrderingPlane::new(&[0, 1, 2])?, masses, pot)?.values(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl DomainBox {
    /// `[1e-3 s, 1e3 s]^2`.
    pub fn scaled(s: f64) -> Self {
        Self { a: (1e-3 * s, 1e3 * s), b: (1e-3 * s, 1e3 * s) }
    }

    fn contains(&self, a: f64, b: f64) -> bool {
        a >= self.a.0 && a <= self.a.1 && b >= self.b.0 && b <= self.b.1
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi > lo && hi.is_finite();
        if ok(self.a) && ok(self.b) { Ok(()) } else { Err(CoreError::Domain(format!("invalid domain box {self:?}"))) }
    }
}

impl Default for DomainBox {
    fn default() -> Self {
        Self::scaled(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionResult {
    pub points: Vec<(f64, f64)>,
    pub count: usize,
    pub tangency_flag: bool,
    /// Angle between `grad U` and `grad I` at each point, in `[0, pi/2]`.
    pub gradient_angle_at_points: Vec<f64>,
}

pub const MIN_RESOLUTION: usize = 64;
pub const TANGENCY_ANGLE: f64 = 1e-6;
/// `|U - c_U| <= TOUCH_TOLERANCE |c_U|` at a critical point counts as touching.
pub const TOUCH_TOLERANCE: f64 = 1e-9;

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gradient_angle(gu: [f64; 2], gi: [f64; 2]) -> f64 {
    let cross = gu[0] * gi[1] - gu[1] * gi[0];
    let dot = gu[0] * gi[0] + gu[1] * gi[1];
    cross.abs().atan2(dot.abs())
}

/// Curve parameters `t` at which `U = c_U` on `{I = c_I}` inside the box.
fn scan(f: &LevelFunctions, c_u: f64, c_i: f64, domain: &DomainBox, resolution: usize) -> Vec<f64> {
    let step = std::f64::consts::FRAC_PI_2 / resolution as f64;
    let grid: Vec<f64> = (0..resolution).map(|k| (k as f64 + 0.5) * step).collect();
    let inside = |t: f64| {
        let (a, b) = f.curve_point(c_i, t);
        domain.contains(a, b)
    };
    let level = |t: f64| {
        let (a, b) = f.curve_point(c_i, t);
        f.values(a, b).0 - c_u
    };
    let tangent_cross = |t: f64| {
        let (a, b) = f.curve_point(c_i, t);
        let (gu, gi) = f.gradients(a, b);
        gu[0] * gi[1] - gu[1] * gi[0]
    };
    let mut roots = Vec::new();
    let mut touches = Vec::new();
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if !inside(t0) || !inside(t1) {
            continue;
        }
        let (f0, f1) = (level(t0), level(t1));
        if f0 == 0.0 {
            roots.push(t0);
        } else if (f0 > 0.0) != (f1 > 0.0) && f1 != 0.0 {
            roots.push(bisect(t0, t1, level));
        }
        let (h0, h1) = (tangent_cross(t0), tangent_cross(t1));
        if (h0 > 0.0) != (h1 > 0.0) || h0 == 0.0 {
            let tc = if h0 == 0.0 { t0 } else { bisect(t0, t1, tangent_cross) };
            if level(tc).abs() <= TOUCH_TOLERANCE * c_u.abs().max(f64::MIN_POSITIVE) {
                touches.push(tc);
            }
        }
    }
    let touch_window = 1e-6;
    roots.retain(|r| touches.iter().all(|t| (r - t).abs() > touch_window));
    roots.extend(touches);
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-8);
    roots
}

/// Intersection of `{U = c_U}` and `{I = c_I}` on an ordering plane, by
/// scanning `U - c_U` along the angular parameterization of `{I = c_I}`,
/// with bisection for crossings and for critical points of `U` along the
/// curve (touching points). The scan is repeated at twice the resolution
/// and any disagreement in the count is an error.
pub fn intersect_levels(
    c_u: f64,
    c_i: f64,
    masses: &MassSystem,
    pot: &PotentialSpec,
    ordering: &[usize],
    domain: &DomainBox,
    resolution: usize,
) -> Result<IntersectionResult> {
    if resolution < MIN_RESOLUTION {
        return Err(CoreError::Domain(format!("resolution {resolution} is below {MIN_RESOLUTION}")));
    }
    if !c_u.is_finite() || !c_i.is_finite() {
        return Err(CoreError::Domain("level values must be finite".into()));
    }
    domain.validate()?;
    let f = LevelFunctions::new(OrderingPlane::new(ordering)?, masses, pot)?;
    if c_i <= 0.0 {
        return Ok(IntersectionResult { points: vec![], count: 0, tangency_flag: false, gradient_angle_at_points: vec![] });
    }
    let coarse = scan(&f, c_u, c_i, domain, resolution);
    let fine = scan(&f, c_u, c_i, domain, 2 * resolution);
    if coarse.len() != fine.len() {
        return Err(CoreError::Resolution { resolution, coarse: coarse.len(), fine: fine.len() });
    }
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(fine.len());
    for &t in &fine {
        let p = f.curve_point(c_i, t);
        let scale = p.0.abs().max(p.1.abs());
        if !points.iter().any(|q| (q.0 - p.0).abs().max((q.1 - p.1).abs()) <= 1e-8 * scale) {
            points.push(p);
        }
    }
    let gradient_angle_at_points: Vec<f64> = points
        .iter()
        .map(|&(a, b)| {
            let (gu, gi) = f.gradients(a, b);
            gradient_angle(gu, gi)
        })
        .collect();
    let tangency_flag = points.len() == 1 && gradient_angle_at_points[0] <= TANGENCY_ANGLE;
    Ok(IntersectionResult { count: points.len(), points, tangency_flag, gradient_angle_at_points })
}

/// Evaluates the level values at a three-body collinear central configuration
/// and intersects the level sets through that point.
pub fn tangency_at_cc(cc: &CollinearConfiguration, masses: &MassSystem, pot: &PotentialSpec) -> Result<IntersectionResult> {
    tangency_at_cc_with(cc, masses, pot, 256)
}

pub fn tangency_at_cc_with(
    cc: &CollinearConfiguration,
    masses: &MassSystem,
    pot: &PotentialSpec,
    resolution: usize,
) -> Result<IntersectionResult> {
    if masses.len() != 3 || cc.gaps.len() != 2 {
        return Err(CoreError::Domain("tangency analysis needs three bodies".into()));
    }
    let f = LevelFunctions::new(OrderingPlane::new(&cc.ordering)?, masses, pot)?;
    let (c_u, c_i) = f.values(cc.gaps[0], cc.gaps[1]);
    let size = 0.5 * (cc.gaps[0] + cc.gaps[1]);
    intersect_levels(c_u, c_i, masses, pot, &cc.ordering, &DomainBox::scaled(size), resolution)
}

/// `a b U I` rows along `{I = c_I}` at scan resolution.
pub fn curve_dump(
    c_i: f64,
    masses: &MassSystem,
    pot: &PotentialSpec,
    ordering: &[usize],
    resolution: usize,
) -> Result<Vec<[f64; 4]>> {
    if !(c_i > 0.0) {
        return Err(CoreError::Domain(format!("inertia level {c_i} must be positive")));
    }
    let f = LevelFunctions::new(OrderingPlane::new(ordering)?, masses, pot)?;
    let step = std::f64::consts::FRAC_PI_2 / resolution.max(1) as f64;
    Ok((0..resolution)
        .map(|k| {
            let (a, b) = f.curve_point(c_i, (k as f64 + 0.5) * step);
            let (u, i) = f.values(a, b);
            [a, b, u, i]
        })
        .collect())
}
