//! Long-run conservation and symmetry checks for the implicit-midpoint
//! flow across the whole system catalog.

use maglab_core::dynamics::{integrate, IntegratorConfig, MagneticSystem, PhasePoint, Stepper};
use maglab_core::geometry::{ChartPoint, TrigPoly};

fn catalog() -> Vec<(&'static str, MagneticSystem, PhasePoint)> {
    let bumps = TrigPoly::cos(0.3, vec![1, 0]).with_constant(1.0);
    vec![
        (
            "t2-constant",
            MagneticSystem::t2_constant(1.0),
            PhasePoint::new(ChartPoint::new(0, vec![0.4, 0.6]), vec![0.3, 0.1]),
        ),
        (
            "t2-variable",
            MagneticSystem::t2_variable(bumps),
            PhasePoint::new(ChartPoint::new(0, vec![0.1, 0.9]), vec![-0.2, 0.25]),
        ),
        (
            "t4-blocks",
            MagneticSystem::t4_blocks(1.0, 2.0),
            PhasePoint::new(
                ChartPoint::new(0, vec![0.2, 0.3, 0.7, 0.8]),
                vec![0.2, -0.1, 0.15, 0.05],
            ),
        ),
        (
            "s2-round",
            MagneticSystem::s2_round(1.0, 0.3),
            PhasePoint::new(ChartPoint::new(0, vec![0.4, -0.2]), vec![0.25, 0.2]),
        ),
    ]
}

#[test]
fn energy_drift_stays_inside_the_budget_for_a_thousand_steps() {
    for (name, sys, x0) in catalog() {
        let cfg = IntegratorConfig { step: 1e-3, ..Default::default() };
        let traj = integrate(&sys, &x0, 1.0, cfg).unwrap();
        assert_eq!(traj.states.len(), 1001);
        assert!(
            traj.max_rel_drift <= cfg.drift_budget,
            "{name}: drift {:.3e}",
            traj.max_rel_drift
        );
    }
}

#[test]
fn reversing_the_step_retraces_the_trajectory() {
    for (name, sys, x0) in catalog() {
        let cfg = IntegratorConfig { step: 1e-3, ..Default::default() };
        let mut stepper = Stepper::new(&sys, cfg, &x0).unwrap();
        for _ in 0..700 {
            stepper.step().unwrap();
        }
        for _ in 0..700 {
            stepper.step_by(-cfg.step).unwrap();
        }
        let back = stepper.state();
        let dist = sys.phase_distance(&x0, &back);
        assert!(dist <= 10.0 * cfg.drift_budget, "{name}: returned {dist:.3e} away");
    }
}

#[test]
fn torus_wrapping_does_not_disturb_the_dynamics() {
    // The same trajectory computed with chart normalization on and off
    // agrees after reduction; the field only sees coordinates mod 1.
    let sys = MagneticSystem::t2_variable(TrigPoly::cos(0.3, vec![1, 0]).with_constant(1.0));
    let x0 = PhasePoint::new(ChartPoint::new(0, vec![0.93, 0.15]), vec![0.31, 0.17]);
    let wrapped = IntegratorConfig { step: 1e-3, ..Default::default() };
    let unwrapped = IntegratorConfig { normalize_charts: false, ..wrapped };
    let a = integrate(&sys, &x0, 3.0, wrapped).unwrap();
    let b = integrate(&sys, &x0, 3.0, unwrapped).unwrap();
    assert!(!a.chart_switches.is_empty(), "trajectory never left the cell");
    let fa = a.states.last().unwrap();
    let fb = b.states.last().unwrap();
    assert!(sys.phase_distance(fa, fb) < 1e-8);
    let (norm_b, _) = sys.normalize_phase(fb).unwrap();
    for k in 0..2 {
        let d = (fa.base.coords[k] - norm_b.base.coords[k]).abs();
        assert!(d.min((d - 1.0).abs()) < 1e-8);
    }
}

#[test]
fn sphere_chart_switches_preserve_energy_and_determinism() {
    // A weak field gives a wide gyration that carries the trajectory
    // across the equator and into the other hemisphere chart.
    let sys = MagneticSystem::s2_round(0.5, 0.2);
    let x0 = PhasePoint::new(ChartPoint::new(0, vec![1.8, 0.0]), vec![0.25, 0.05]);
    let cfg = IntegratorConfig { step: 5e-4, ..Default::default() };
    let a = integrate(&sys, &x0, 6.0, cfg).unwrap();
    assert!(
        a.chart_switches.iter().any(|(_, m)| m.from != m.to),
        "trajectory stayed in one chart"
    );
    assert!(a.max_rel_drift <= cfg.drift_budget);
    let b = integrate(&sys, &x0, 6.0, cfg).unwrap();
    let fa = a.states.last().unwrap();
    let fb = b.states.last().unwrap();
    assert_eq!(fa.base.chart, fb.base.chart);
    assert_eq!(fa.base.coords, fb.base.coords);
    assert_eq!(fa.momentum, fb.momentum);
}
