//! Seeding and Newton shooting for closed trajectories on one energy level.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{MagneticSystem, PhasePoint, Stepper};
use crate::error::{Error, Result};
use crate::geometry::{skew_spectrum, ChartPoint};

use super::classify::{fiber_winding, loop_geometry, WindingCall};
use super::section::{crossing, return_coords, section_jacobian, OrbitConfig, SectionSpec};

/// Starting guess for the shooting stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seed {
    pub start: PhasePoint,
    pub period_guess: f64,
    /// The field/metric pair fails the pointwise compatibility test at the
    /// seed's base point, so the period guess is only indicative.
    pub incompatible: bool,
    pub index: usize,
}

/// A closed trajectory, stored as a fixed number of equispaced-in-time
/// samples together with summary data for deduplication and reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub start: PhasePoint,
    pub period: f64,
    pub energy: f64,
    pub samples: Vec<PhasePoint>,
    /// Distance between the start and the state after one period.
    pub closure_residual: f64,
    /// Representative base point of the projected loop.
    pub projection_center: ChartPoint,
    /// Extent of the projected loop, in chart coordinates.
    pub projection_diameter: f64,
    pub winding: WindingCall,
    pub seed_index: usize,
    pub newton_iterations: usize,
}

/// Uniform lattice of base points for seeding: `per_axis` points per
/// coordinate on tori; on the sphere, both chart centers followed by a
/// low-discrepancy spread of `per_axis`² points across the two charts.
/// The centers come first because rotationally symmetric fields pin their
/// orbit families over the poles, and a quasi-random sweep alone can miss
/// them at any practical resolution.
pub fn seed_grid(sys: &MagneticSystem, per_axis: usize) -> Vec<ChartPoint> {
    let manifold = sys.manifold();
    if manifold.is_torus() {
        let n = manifold.dim();
        let mut points = vec![vec![0.0; n]];
        for axis in 0..n {
            let mut next = Vec::with_capacity(points.len() * per_axis);
            for p in &points {
                for i in 0..per_axis {
                    let mut q = p.clone();
                    q[axis] = i as f64 / per_axis as f64;
                    next.push(q);
                }
            }
            points = next;
        }
        points.into_iter().map(|q| ChartPoint::new(0, q)).collect()
    } else {
        let mut points = vec![ChartPoint::new(0, vec![0.0, 0.0]), ChartPoint::new(1, vec![0.0, 0.0])];
        points.extend(manifold.sample(per_axis * per_axis));
        points
    }
}

fn seed_direction(n: usize, angle: f64) -> DVector<f64> {
    match n {
        2 => DVector::from_vec(vec![angle.cos(), angle.sin()]),
        4 => {
            let shifted = angle + 2.399_963;
            let inv = 0.5f64.sqrt();
            DVector::from_vec(vec![
                inv * angle.cos(),
                inv * angle.sin(),
                inv * shifted.cos(),
                inv * shifted.sin(),
            ])
        }
        _ => {
            let mut u = DVector::zeros(n);
            u[0] = angle.cos();
            u[1] = angle.sin();
            u
        }
    }
}

/// Shift a torus base point from the orbit's sampling point to its
/// approximate gyrocenter-offset start: for a small circle around center c
/// the trajectory passes through c + rot₊₉₀(p)/B, plane by plane.
fn gyro_offset(sys: &MagneticSystem, c: &ChartPoint, p: &DVector<f64>) -> ChartPoint {
    if !(sys.manifold().is_torus() && sys.metric().is_flat()) {
        return c.clone();
    }
    let s = sys.sigma().eval(sys.manifold(), c);
    let n = c.dim();
    let mut q = c.coords.clone();
    let apply_plane = |a: usize, b_val: f64, q: &mut DVector<f64>| {
        if b_val.abs() < 1e-8 {
            return;
        }
        let (pa, pb) = (p[a], p[a + 1]);
        let (da, db) = (-pb / b_val, pa / b_val);
        if da.hypot(db) < 0.45 {
            q[a] += da;
            q[a + 1] += db;
        }
    };
    match n {
        2 => apply_plane(0, s[(0, 1)], &mut q),
        4 => {
            let off_block = s[(0, 2)].abs().max(s[(0, 3)].abs()).max(s[(1, 2)].abs()).max(s[(1, 3)].abs());
            if off_block < 1e-12 {
                apply_plane(0, s[(0, 1)], &mut q);
                apply_plane(2, s[(2, 3)], &mut q);
            }
        }
        _ => {}
    }
    ChartPoint { chart: c.chart, coords: q }
}

/// Seeds on the level {H = energy} over the base grid, `phases` momentum
/// directions per point.  Period guesses come from the leading skew
/// eigenvalue of g⁻¹σ; where that spectrum is unavailable (e.g. σ ≡ 0) the
/// guess falls back to 2π and the seed is marked incompatible.
pub fn seed_orbits(
    sys: &MagneticSystem,
    energy: f64,
    grid: &[ChartPoint],
    phases: usize,
) -> Result<Vec<Seed>> {
    if energy <= 0.0 || phases == 0 {
        return Err(Error::InvalidInput(
            "seeding needs a positive energy and at least one phase".into(),
        ));
    }
    let n = sys.dim();
    let mut seeds = Vec::with_capacity(grid.len() * phases);
    for c in grid {
        let (period_guess, incompatible) =
            match skew_spectrum(sys.metric(), sys.sigma(), sys.manifold(), c, 1e-6) {
                Ok(sp) => (std::f64::consts::TAU / sp.values[0], !sp.compatible),
                Err(_) => (std::f64::consts::TAU, true),
            };
        for j in 0..phases {
            let angle = std::f64::consts::TAU * j as f64 / phases as f64 + 0.3;
            let direction = seed_direction(n, angle);
            let scaled = sys
                .project_to_level(&PhasePoint { base: c.clone(), momentum: direction }, energy)?;
            let base = gyro_offset(sys, c, &scaled.momentum);
            let shifted = PhasePoint { base, momentum: scaled.momentum.clone() };
            let leveled = sys.project_to_level(&shifted, energy)?;
            let (start, _) = sys.normalize_phase(&leveled)?;
            seeds.push(Seed { start, period_guess, incompatible, index: seeds.len() });
        }
    }
    Ok(seeds)
}

/// Newton iteration on the section fixed-point equation P(c) = c, starting
/// from the seed and its own-flow section.  The residual is checked before
/// any Jacobian is formed, so an already-closed seed succeeds even where
/// the linearized problem is singular.
pub fn newton_shoot(sys: &MagneticSystem, seed: &Seed, cfg: &OrbitConfig) -> Result<PeriodicOrbit> {
    let sec = SectionSpec::at_anchor(sys, seed.start.clone())?;
    let m = sec.coord_dim();
    let mut c = DVector::zeros(m);
    let mut best_residual = f64::INFINITY;
    let mut growth_streak = 0usize;

    for iter in 0..cfg.max_iter {
        let (pc, _) = return_coords(sys, &sec, &c, cfg)?;
        let residual = (&pc - &c).amax();
        if residual <= cfg.fixpoint_tol {
            return build_orbit(sys, &sec, &c, cfg, seed.index, iter);
        }
        // Demand real progress, not mere non-growth: a seed in a
        // drift-dominated region plateaus just above its best residual
        // and would otherwise burn the full iteration budget.
        if residual <= 0.9 * best_residual {
            growth_streak = 0;
        } else {
            growth_streak += 1;
            if growth_streak >= 3 {
                return Err(Error::ShootDiverged { iterations: iter, best_residual });
            }
        }
        best_residual = best_residual.min(residual);

        let jac = section_jacobian(sys, &sec, &c, cfg)?;
        let shifted = jac - nalgebra::DMatrix::identity(m, m);
        let svd = shifted.svd(true, true);
        let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        if smallest < cfg.singular_tol {
            return Err(Error::DegenerateDirection { smallest });
        }
        let rhs = &c - &pc;
        let mut delta = svd
            .solve(&rhs, 0.0)
            .map_err(|m| Error::InvalidInput(format!("linear solve failed: {m}")))?;
        // A drift-dominated map has J barely off the identity, which
        // launches the raw update off the chart; keep iterates physical.
        let cap = 0.5 * (1.0 + c.norm());
        if delta.norm() > cap {
            delta *= cap / delta.norm();
        }

        // Damp the update until the residual actually shrinks.
        let mut step = delta.clone();
        let mut accepted = false;
        for _ in 0..=4 {
            let cand = &c + &step;
            if let Ok((pcand, _)) = return_coords(sys, &sec, &cand, cfg) {
                if (&pcand - &cand).amax() < residual {
                    c = cand;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // Most-damped trial; the growth streak decides when to stop.
            c += &step;
        }
    }
    Err(Error::ShootDiverged { iterations: cfg.max_iter, best_residual })
}

/// Polish the converged fixed point into a sampled orbit: re-anchor the
/// section at the fixed point (eliminating sliding along the flow), measure
/// the period and closure there, then resample one period uniformly.
fn build_orbit(
    sys: &MagneticSystem,
    sec: &SectionSpec,
    c: &DVector<f64>,
    cfg: &OrbitConfig,
    seed_index: usize,
    newton_iterations: usize,
) -> Result<PeriodicOrbit> {
    let start = sec.embed(sys, c)?;
    let own = SectionSpec::at_anchor(sys, start.clone())?;
    let (ret, period) = crossing(sys, &own, &start, cfg)?;
    let closure_residual = sys.phase_distance(&start, &ret);
    if !(closure_residual <= 1e-8) {
        return Err(Error::ShootDiverged { iterations: newton_iterations, best_residual: closure_residual });
    }

    let count = cfg.loop_samples.max(2);
    let dt = period / count as f64;
    let mut stepper = Stepper::new(sys, cfg.integrator, &start)?;
    let mut samples = Vec::with_capacity(count);
    samples.push(start.clone());
    for _ in 1..count {
        stepper.advance(dt)?;
        samples.push(stepper.state());
    }

    let (projection_center, projection_diameter) = loop_geometry(sys, &samples)?;
    let winding = fiber_winding(sys, &samples, cfg.winding_tol)?;
    Ok(PeriodicOrbit {
        start,
        period,
        energy: sec.energy(),
        samples,
        closure_residual,
        projection_center,
        projection_diameter,
        winding,
        seed_index,
        newton_iterations,
    })
}
