//! Loop summaries and deduplication of converged orbits.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{MagneticSystem, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::ChartPoint;

use super::shoot::PeriodicOrbit;

/// Momentum rotation count over one period, or the reason none was
/// assigned.  Orbits with an ambiguous count are kept and flagged, never
/// silently dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindingCall {
    Winds { turns: i64 },
    Unclassified { rotation: f64 },
}

impl WindingCall {
    pub fn turns(&self) -> Option<i64> {
        match self {
            WindingCall::Winds { turns } => Some(*turns),
            WindingCall::Unclassified { .. } => None,
        }
    }

    /// The simple-loop criterion used by census counts.
    pub fn winds_once(&self) -> bool {
        matches!(self, WindingCall::Winds { turns } if turns.abs() == 1)
    }
}

/// Unwrap the loop into the chart of its first sample, following nearest
/// periodic images so seam crossings do not tear it apart.
fn lift_loop(sys: &MagneticSystem, samples: &[PhasePoint]) -> Result<(usize, Vec<PhasePoint>)> {
    let chart = samples[0].base.chart;
    let manifold = sys.manifold();
    let mut lifted: Vec<PhasePoint> = Vec::with_capacity(samples.len());
    let mut prev = samples[0].base.coords.clone();
    for s in samples {
        let local = if s.base.chart == chart { s.clone() } else { sys.transition_phase(s, chart)? };
        let q = manifold.nearest_image(&prev, &local.base.coords);
        prev = q.clone();
        lifted.push(PhasePoint { base: ChartPoint { chart, coords: q }, momentum: local.momentum });
    }
    Ok((chart, lifted))
}

/// Center (wrapped back into the fundamental chart) and chart-coordinate
/// diameter of the projected loop.
pub fn loop_geometry(sys: &MagneticSystem, samples: &[PhasePoint]) -> Result<(ChartPoint, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("loop geometry needs at least one sample".into()));
    }
    let (chart, lifted) = lift_loop(sys, samples)?;
    let n = lifted[0].base.coords.len();
    let mut mean = DVector::zeros(n);
    for s in &lifted {
        mean += &s.base.coords;
    }
    mean /= lifted.len() as f64;
    let (center, _) = sys.manifold().normalize(&ChartPoint { chart, coords: mean })?;

    let stride = (lifted.len() / 256).max(1);
    let pts: Vec<&DVector<f64>> = lifted.iter().step_by(stride).map(|s| &s.base.coords).collect();
    let mut diameter = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            diameter = diameter.max((*a - *b).norm());
        }
    }
    Ok((center, diameter))
}

/// Net rotation of the momentum over the closed loop, per symplectic plane
/// of the chart fiber, rounded to an integer when every plane agrees to
/// within `tol` turns.
pub fn fiber_winding(
    sys: &MagneticSystem,
    samples: &[PhasePoint],
    tol: f64,
) -> Result<WindingCall> {
    if samples.len() < 8 {
        return Err(Error::InvalidInput("winding needs a resolved loop".into()));
    }
    let (_, lifted) = lift_loop(sys, samples)?;
    let planes: &[(usize, usize)] = match sys.dim() {
        2 => &[(0, 1)],
        4 => &[(0, 1), (2, 3)],
        _ => return Ok(WindingCall::Unclassified { rotation: f64::NAN }),
    };

    let mut calls: Vec<(i64, f64)> = Vec::with_capacity(planes.len());
    for &(a, b) in planes {
        let mut total = 0.0f64;
        let mut prev = f64::NAN;
        for k in 0..=lifted.len() {
            let p = &lifted[k % lifted.len()].momentum;
            if p[a].hypot(p[b]) < 1e-12 {
                return Ok(WindingCall::Unclassified { rotation: f64::NAN });
            }
            let theta = p[b].atan2(p[a]);
            if k > 0 {
                let mut d = theta - prev;
                if d > std::f64::consts::PI {
                    d -= std::f64::consts::TAU;
                } else if d < -std::f64::consts::PI {
                    d += std::f64::consts::TAU;
                }
                total += d;
            }
            prev = theta;
        }
        let rotation = total / std::f64::consts::TAU;
        let turns = rotation.round();
        if (rotation - turns).abs() > tol {
            return Ok(WindingCall::Unclassified { rotation });
        }
        calls.push((turns as i64, rotation));
    }
    let first = calls[0].0;
    if calls.iter().all(|&(t, _)| t == first) {
        Ok(WindingCall::Winds { turns: first })
    } else {
        Ok(WindingCall::Unclassified { rotation: calls[0].1 })
    }
}

/// Phase point interpolated a fractional index `t` along the loop, in the
/// chart of the floor sample.
fn sample_at(sys: &MagneticSystem, orbit: &PeriodicOrbit, t: f64) -> Result<PhasePoint> {
    let n = orbit.samples.len();
    let wrapped = t.rem_euclid(n as f64);
    let i0 = (wrapped.floor() as usize) % n;
    let frac = wrapped - wrapped.floor();
    let x0 = &orbit.samples[i0];
    let x1 = &orbit.samples[(i0 + 1) % n];
    let x1 = if x1.base.chart == x0.base.chart {
        x1.clone()
    } else {
        sys.transition_phase(x1, x0.base.chart)?
    };
    let q1 = sys.manifold().nearest_image(&x0.base.coords, &x1.base.coords);
    let q = &x0.base.coords + (&q1 - &x0.base.coords) * frac;
    let p = &x0.momentum + (&x1.momentum - &x0.momentum) * frac;
    Ok(PhasePoint { base: ChartPoint { chart: x0.base.chart, coords: q }, momentum: p })
}

/// Worst pointwise distance between orbit `a` and orbit `b` phase-shifted
/// by `shift` samples.
fn aligned_distance(
    sys: &MagneticSystem,
    a: &PeriodicOrbit,
    b: &PeriodicOrbit,
    shift: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, sa) in a.samples.iter().enumerate() {
        let sb = sample_at(sys, b, i as f64 + shift)?;
        worst = worst.max(sys.phase_distance(sa, &sb));
    }
    Ok(worst)
}

fn same_orbit(
    sys: &MagneticSystem,
    a: &PeriodicOrbit,
    b: &PeriodicOrbit,
    tol_space: f64,
) -> Result<bool> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::InvalidInput("orbits sampled at different resolutions".into()));
    }
    if (a.period - b.period).abs() > 0.05 * a.period.max(b.period) {
        return Ok(false);
    }
    let centers = sys.manifold().base_distance(&a.projection_center, &b.projection_center);
    if centers > 0.5 * (a.projection_diameter + b.projection_diameter) + 10.0 * tol_space {
        return Ok(false);
    }

    // Coarse alignment: nearest stored sample of b to a's start.
    let mut k0 = 0usize;
    let mut nearest = f64::INFINITY;
    for (k, sb) in b.samples.iter().enumerate() {
        let d = sys.phase_distance(&a.samples[0], sb);
        if d < nearest {
            nearest = d;
            k0 = k;
        }
    }
    if aligned_distance(sys, a, b, k0 as f64)? <= tol_space {
        return Ok(true);
    }

    // Continuous refinement of the fractional shift by golden-section.
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (k0 as f64 - 1.0, k0 as f64 + 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = aligned_distance(sys, a, b, x1)?;
    let mut f2 = aligned_distance(sys, a, b, x2)?;
    for _ in 0..40 {
        if f1.min(f2) <= tol_space {
            return Ok(true);
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = aligned_distance(sys, a, b, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = aligned_distance(sys, a, b, x2)?;
        }
    }
    Ok(f1.min(f2) <= tol_space)
}

/// Group orbits that trace the same closed curve (up to phase) and keep
/// one representative per class: the member with the smallest closure
/// residual, ties broken by seed order.  Classes are returned in order of
/// their earliest seed.
pub fn dedup(
    sys: &MagneticSystem,
    orbits: &[PeriodicOrbit],
    tol_space: f64,
) -> Result<Vec<PeriodicOrbit>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, orbit) in orbits.iter().enumerate() {
        let mut placed = false;
        for class in classes.iter_mut() {
            if same_orbit(sys, orbit, &orbits[class[0]], tol_space)? {
                class.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![i]);
        }
    }
    classes.sort_by_key(|class| class.iter().map(|&i| orbits[i].seed_index).min());
    let mut out = Vec::with_capacity(classes.len());
    for class in classes {
        let best = class
            .iter()
            .copied()
            .min_by(|&i, &j| {
                orbits[i]
                    .closure_residual
                    .total_cmp(&orbits[j].closure_residual)
                    .then(orbits[i].seed_index.cmp(&orbits[j].seed_index))
            })
            .expect("classes are nonempty");
        out.push(orbits[best].clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntegratorConfig;
    use crate::orbits::section::OrbitConfig;
    use crate::orbits::shoot::{newton_shoot, seed_orbits};
    use approx::assert_relative_eq;

    fn fast_cfg() -> OrbitConfig {
        OrbitConfig {
            integrator: IntegratorConfig { step: 5e-4, ..Default::default() },
            ..Default::default()
        }
    }

    fn circle_samples(center: [f64; 2], radius: f64, count: usize) -> Vec<PhasePoint> {
        // Clockwise traversal matching a positive constant field.
        (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                PhasePoint::new(
                    ChartPoint::new(0, vec![center[0] + radius * t.sin(), center[1] + radius * t.cos()]),
                    vec![radius * t.cos(), -radius * t.sin()],
                )
            })
            .collect()
    }

    #[test]
    fn clockwise_momentum_winds_minus_one() {
        let sys = MagneticSystem::t2_constant(1.0);
        let samples = circle_samples([0.5, 0.5], 0.2, 64);
        let call = fiber_winding(&sys, &samples, 0.1).unwrap();
        assert_eq!(call, WindingCall::Winds { turns: -1 });
        assert!(call.winds_once());
    }

    #[test]
    fn constant_momentum_does_not_wind() {
        let sys = MagneticSystem::t2_constant(1.0);
        let samples: Vec<PhasePoint> = (0..32)
            .map(|k| {
                PhasePoint::new(ChartPoint::new(0, vec![k as f64 / 32.0, 0.3]), vec![0.1, 0.0])
            })
            .collect();
        let call = fiber_winding(&sys, &samples, 0.1).unwrap();
        assert_eq!(call.turns(), Some(0));
        assert!(!call.winds_once());
    }

    #[test]
    fn geometry_survives_the_torus_seam() {
        let sys = MagneticSystem::t2_constant(1.0);
        let samples = circle_samples([0.0, 0.5], 0.05, 64);
        let (center, diameter) = loop_geometry(&sys, &samples).unwrap();
        let target = ChartPoint::new(0, vec![0.0, 0.5]);
        assert!(sys.manifold().base_distance(&center, &target) < 1e-9);
        assert_relative_eq!(diameter, 0.1, max_relative = 1e-2);
    }

    #[test]
    fn phase_shifted_duplicates_collapse_to_one_class() {
        let sys = MagneticSystem::t2_constant(1.0);
        let grid =
            vec![ChartPoint::new(0, vec![0.25, 0.25]), ChartPoint::new(0, vec![0.75, 0.75])];
        let seeds = seed_orbits(&sys, 0.02, &grid, 2).unwrap();
        let orbits: Vec<_> =
            seeds.iter().map(|s| newton_shoot(&sys, s, &fast_cfg()).unwrap()).collect();
        assert_eq!(orbits.len(), 4);
        let unique = dedup(&sys, &orbits, 1e-3).unwrap();
        assert_eq!(unique.len(), 2, "two gyrocenters, two classes");
        // Classes come back in seed order; the representative inside each
        // class is whichever duplicate closed most tightly.
        assert!(unique[0].seed_index < 2);
        assert!(unique[1].seed_index >= 2);
        for orbit in &unique {
            assert_eq!(orbit.winding, WindingCall::Winds { turns: -1 });
        }
    }

    #[test]
    fn distinct_radii_stay_separate() {
        let sys = MagneticSystem::t2_constant(1.0);
        let a = circle_samples([0.5, 0.5], 0.10, 512);
        let b = circle_samples([0.5, 0.5], 0.25, 512);
        let make = |samples: Vec<PhasePoint>, idx: usize| {
            let (projection_center, projection_diameter) = loop_geometry(&sys, &samples).unwrap();
            let winding = fiber_winding(&sys, &samples, 0.1).unwrap();
            PeriodicOrbit {
                start: samples[0].clone(),
                period: std::f64::consts::TAU,
                energy: 0.5 * samples[0].momentum.norm_squared(),
                samples,
                closure_residual: 1e-12,
                projection_center,
                projection_diameter,
                winding,
                seed_index: idx,
                newton_iterations: 0,
            }
        };
        let orbits = vec![make(a, 0), make(b, 1)];
        let unique = dedup(&sys, &orbits, 1e-3).unwrap();
        assert_eq!(unique.len(), 2);
    }
}
