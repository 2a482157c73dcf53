//! Closed-form facts about motion in a uniform field on the flat torus,
//! frozen here as literals and checked against the full numerical
//! pipeline.  A particle of momentum p in constant field B circles the
//! gyrocenter q + (p₂, −p₁)/B with radius |p|/B and period 2π/B, while the
//! momentum itself turns once clockwise.

use maglab_core::dynamics::{integrate, IntegratorConfig, MagneticSystem, PhasePoint};
use maglab_core::geometry::ChartPoint;
use maglab_core::orbits::{newton_shoot, seed_orbits, OrbitConfig, WindingCall};

const FIELD: f64 = 1.0;
const ENERGY: f64 = 0.02;
// Frozen oracle values for the start q = (0.5, 0.5), p = (0.2, 0).
const PERIOD: f64 = std::f64::consts::TAU;
const RADIUS: f64 = 0.2;
const CENTER: [f64; 2] = [0.5, 0.3];

fn start() -> PhasePoint {
    PhasePoint::new(ChartPoint::new(0, vec![0.5, 0.5]), vec![(2.0 * ENERGY).sqrt(), 0.0])
}

fn cfg() -> OrbitConfig {
    OrbitConfig {
        integrator: IntegratorConfig { step: 5e-4, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn trajectory_traces_the_predicted_circle() {
    let sys = MagneticSystem::t2_constant(FIELD);
    let cfg = IntegratorConfig { step: 5e-4, normalize_charts: false, ..Default::default() };
    let traj = integrate(&sys, &start(), PERIOD, cfg).unwrap();

    let center = nalgebra::DVector::from_vec(CENTER.to_vec());
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for s in &traj.states {
        let d = (&s.base.coords - &center).norm();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    let radius = 0.5 * (dmin + dmax);
    assert!(
        ((radius - RADIUS) / RADIUS).abs() < 1e-6,
        "measured radius {radius} vs {RADIUS}"
    );
    assert!((dmax - dmin) / RADIUS < 1e-6, "orbit is not round: spread {}", dmax - dmin);
    assert!(traj.max_rel_drift < 1e-12);

    // After exactly one period the state closes up.
    let last = traj.states.last().unwrap();
    assert!(sys.phase_distance(&start(), last) < 1e-6);
}

#[test]
fn shot_orbit_reproduces_period_radius_and_winding() {
    let sys = MagneticSystem::t2_constant(FIELD);
    let grid = vec![ChartPoint::new(0, vec![CENTER[0], CENTER[1]])];
    let seeds = seed_orbits(&sys, ENERGY, &grid, 1).unwrap();
    let orbit = newton_shoot(&sys, &seeds[0], &cfg()).unwrap();

    assert!(((orbit.period - PERIOD) / PERIOD).abs() < 1e-6, "period {}", orbit.period);
    assert!(
        ((orbit.projection_diameter - 2.0 * RADIUS) / (2.0 * RADIUS)).abs() < 1e-4,
        "diameter {}",
        orbit.projection_diameter
    );
    let d = sys.manifold().base_distance(&orbit.projection_center, &grid[0]);
    assert!(d < 1e-6, "gyrocenter off by {d}");
    assert_eq!(orbit.winding, WindingCall::Winds { turns: -1 });
    assert!(orbit.closure_residual < 1e-9);

    for s in &orbit.samples {
        let h = sys.hamiltonian(s).unwrap();
        assert!(((h - ENERGY) / ENERGY).abs() < 1e-10);
    }
}

#[test]
fn faster_field_scales_the_circle_down() {
    // Same momentum, B = 2.5: radius and period shrink by the same factor.
    let sys = MagneticSystem::t2_constant(2.5);
    let grid = vec![ChartPoint::new(0, vec![0.5, 0.5])];
    let seeds = seed_orbits(&sys, ENERGY, &grid, 1).unwrap();
    let orbit = newton_shoot(&sys, &seeds[0], &cfg()).unwrap();
    assert!(((orbit.period - PERIOD / 2.5) * 2.5 / PERIOD).abs() < 1e-6);
    assert!(((orbit.projection_diameter - 2.0 * RADIUS / 2.5) * 2.5 / (2.0 * RADIUS)).abs() < 1e-4);
}
