//! Fixed-step implicit-midpoint integration of the twisted Hamiltonian
//! flow, with energy-drift accounting and transparent chart handling.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::system::{MagneticSystem, PhasePoint, Workspace};
use crate::error::{Error, Result};
use crate::geometry::ChartMove;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub step: f64,
    /// Bound on max |H(t) − H(0)| / H(0) before the run is rejected.
    pub drift_budget: f64,
    pub max_newton_iter: usize,
    pub newton_tol: f64,
    /// Wrap torus coordinates / switch sphere charts after every step.
    /// When disabled, trajectories run in the universal cover of the chart.
    pub normalize_charts: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: 1e-3,
            drift_budget: 1e-6,
            max_newton_iter: 20,
            newton_tol: 1e-12,
            normalize_charts: true,
        }
    }
}

/// Recorded integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub energies: Vec<f64>,
    pub chart_switches: Vec<(f64, ChartMove)>,
    pub max_rel_drift: f64,
}

/// Saved stepper position, for backtracking around section crossings.
#[derive(Debug, Clone)]
pub struct StepperState {
    chart: usize,
    z: DVector<f64>,
    t: f64,
    max_drift: f64,
}

/// Streaming integrator: one implicit-midpoint step at a time.
pub struct Stepper<'a> {
    sys: &'a MagneticSystem,
    cfg: IntegratorConfig,
    chart: usize,
    z: DVector<f64>,
    t: f64,
    energy0: f64,
    max_drift: f64,
    ws: Workspace,
    jac: DMatrix<f64>,
    zmid: DVector<f64>,
    fmid: DVector<f64>,
    resid: DVector<f64>,
    probe: DVector<f64>,
    fplus: DVector<f64>,
    fminus: DVector<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a MagneticSystem, cfg: IntegratorConfig, x0: &PhasePoint) -> Result<Self> {
        if !(cfg.step > 0.0) || !cfg.step.is_finite() {
            return Err(Error::InvalidInput(format!("step size {} is not positive", cfg.step)));
        }
        let (chart, z) = x0.pack();
        let energy0 = sys.hamiltonian(x0)?;
        let m = z.len();
        Ok(Stepper {
            sys,
            cfg,
            chart,
            z,
            t: 0.0,
            energy0,
            max_drift: 0.0,
            ws: Workspace::new(sys.dim()),
            jac: DMatrix::zeros(m, m),
            zmid: DVector::zeros(m),
            fmid: DVector::zeros(m),
            resid: DVector::zeros(m),
            probe: DVector::zeros(m),
            fplus: DVector::zeros(m),
            fminus: DVector::zeros(m),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> PhasePoint {
        PhasePoint::unpack(self.chart, &self.z)
    }

    pub fn max_rel_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn save(&self) -> StepperState {
        StepperState { chart: self.chart, z: self.z.clone(), t: self.t, max_drift: self.max_drift }
    }

    pub fn restore(&mut self, s: &StepperState) {
        self.chart = s.chart;
        self.z.copy_from(&s.z);
        self.t = s.t;
        self.max_drift = s.max_drift;
    }

    pub fn step(&mut self) -> Result<Option<ChartMove>> {
        self.step_by(self.cfg.step)
    }

    /// One step of size `h` (either sign), then normalization, domain and
    /// drift checks.  A step whose Newton solve stalls is retried once as
    /// two half steps before erroring.
    pub fn step_by(&mut self, h: f64) -> Result<Option<ChartMove>> {
        if h == 0.0 || !h.is_finite() {
            return Err(Error::InvalidInput(format!("step size {h} is not usable")));
        }
        let z1 = match self.solve_from(self.z.clone(), h) {
            Ok(z1) => z1,
            Err(_) => {
                let za = self.solve_from(self.z.clone(), 0.5 * h)?;
                self.solve_from(za, 0.5 * h)?
            }
        };
        self.z = z1;
        self.t += h;

        let mut chart_move = None;
        if self.cfg.normalize_charts && self.sys.manifold().needs_normalization(&self.base_point())
        {
            let x = self.state();
            let (nx, mv) = self.sys.normalize_phase(&x)?;
            let (chart, z) = nx.pack();
            self.chart = chart;
            self.z = z;
            chart_move = mv;
        }
        let base = self.base_point();
        if !self.sys.manifold().in_domain(&base) {
            return Err(Error::ChartEscape { chart: base.chart, radius: base.coords.norm() });
        }

        let energy = self.sys.hamiltonian(&self.state())?;
        let rel = (energy - self.energy0).abs() / self.energy0.abs().max(1e-300);
        if rel > self.max_drift {
            self.max_drift = rel;
        }
        if rel > self.cfg.drift_budget {
            return Err(Error::DriftExceeded {
                drift: rel,
                budget: self.cfg.drift_budget,
                time: self.t,
            });
        }
        Ok(chart_move)
    }

    /// Integrate for a signed duration in steps of the configured size.
    pub fn advance(&mut self, duration: f64) -> Result<()> {
        let h = if duration >= 0.0 { self.cfg.step } else { -self.cfg.step };
        let n = (duration / h).floor().max(0.0) as u64;
        for _ in 0..n {
            self.step_by(h)?;
        }
        let rem = duration - n as f64 * h;
        if rem.abs() > 1e-12 * self.cfg.step {
            self.step_by(rem)?;
        }
        Ok(())
    }

    fn base_point(&self) -> crate::geometry::ChartPoint {
        let n = self.sys.dim();
        crate::geometry::ChartPoint { chart: self.chart, coords: self.z.rows(0, n).into_owned() }
    }

    /// Newton solve of z₁ − z₀ − h·f((z₀+z₁)/2) = 0 with finite-difference
    /// Jacobians, starting from the explicit Euler predictor.
    fn solve_from(&mut self, z0: DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let m = z0.len();
        let tol = self.cfg.newton_tol * (1.0 + z0.amax());

        self.sys.vector_field_into(self.chart, &z0, &mut self.fmid, &mut self.ws)?;
        let mut z1 = &z0 + &self.fmid * h;

        let mut residual = f64::INFINITY;
        for iteration in 0..self.cfg.max_newton_iter {
            self.zmid.copy_from(&z0);
            self.zmid += &z1;
            self.zmid *= 0.5;
            self.sys.vector_field_into(self.chart, &self.zmid, &mut self.fmid, &mut self.ws)?;
            self.resid.copy_from(&z1);
            self.resid -= &z0;
            self.resid.axpy(-h, &self.fmid, 1.0);
            residual = self.resid.amax();
            if residual <= tol {
                return Ok(z1);
            }

            // J = I − (h/2) ∂f/∂z at the midpoint, ∂f by central differences.
            let fd = 1e-6 * (1.0 + self.zmid.amax());
            for j in 0..m {
                self.probe.copy_from(&self.zmid);
                self.probe[j] += fd;
                self.sys.vector_field_into(self.chart, &self.probe, &mut self.fplus, &mut self.ws)?;
                self.probe[j] -= 2.0 * fd;
                self.sys.vector_field_into(
                    self.chart,
                    &self.probe,
                    &mut self.fminus,
                    &mut self.ws,
                )?;
                for i in 0..m {
                    let df = (self.fplus[i] - self.fminus[i]) / (2.0 * fd);
                    self.jac[(i, j)] = if i == j { 1.0 } else { 0.0 } - 0.5 * h * df;
                }
            }
            let delta = self.jac.clone().lu().solve(&self.resid).ok_or(Error::StepDiverged {
                residual,
                iterations: iteration,
                time: self.t,
            })?;
            z1 -= delta;
        }
        Err(Error::StepDiverged {
            residual,
            iterations: self.cfg.max_newton_iter,
            time: self.t,
        })
    }
}

/// Integrate for a duration, recording every accepted step.
pub fn integrate(
    sys: &MagneticSystem,
    x0: &PhasePoint,
    duration: f64,
    cfg: IntegratorConfig,
) -> Result<Trajectory> {
    if !(duration > 0.0) {
        return Err(Error::InvalidInput(format!("duration {duration} is not positive")));
    }
    let mut stepper = Stepper::new(sys, cfg, x0)?;
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut energies = vec![sys.hamiltonian(x0)?];
    let mut chart_switches = Vec::new();

    let n = (duration / cfg.step).floor().max(0.0) as u64;
    let rem = duration - n as f64 * cfg.step;
    let total = n + if rem > 1e-12 * cfg.step { 1 } else { 0 };
    for k in 0..total {
        let h = if k < n { cfg.step } else { rem };
        let mv = stepper.step_by(h)?;
        times.push(stepper.time());
        states.push(stepper.state());
        energies.push(sys.hamiltonian(&stepper.state())?);
        if let Some(mv) = mv {
            chart_switches.push((stepper.time(), mv));
        }
    }
    Ok(Trajectory { times, states, energies, chart_switches, max_rel_drift: stepper.max_rel_drift() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartPoint;
    use approx::assert_relative_eq;

    fn start(q: [f64; 2], p: [f64; 2]) -> PhasePoint {
        PhasePoint::new(ChartPoint::new(0, q.to_vec()), p.to_vec())
    }

    #[test]
    fn free_motion_is_a_straight_line_with_exact_energy() {
        let sys = MagneticSystem::t2_constant(0.0);
        let x0 = start([0.0, 0.0], [1.0, 0.0]);
        let cfg = IntegratorConfig { normalize_charts: false, ..Default::default() };
        let traj = integrate(&sys, &x0, 0.5, cfg).unwrap();
        let last = traj.states.last().unwrap();
        assert_relative_eq!(last.base.coords[0], 0.5, max_relative = 1e-12);
        assert_eq!(last.base.coords[1], 0.0);
        assert!(traj.max_rel_drift < 1e-14, "drift {}", traj.max_rel_drift);
    }

    #[test]
    fn cyclotron_loop_returns_after_one_period() {
        let sys = MagneticSystem::t2_constant(1.0);
        let eps = 0.02f64;
        let x0 = start([0.0, 0.0], [(2.0 * eps).sqrt(), 0.0]);
        let cfg = IntegratorConfig { normalize_charts: false, ..Default::default() };
        let traj = integrate(&sys, &x0, std::f64::consts::TAU, cfg).unwrap();
        let last = traj.states.last().unwrap();
        // Phase lag of the midpoint rule is (hB)²/12 per unit time.
        assert!(sys.phase_distance(&x0, last) < 1e-5);
        assert!(traj.max_rel_drift < 1e-12, "drift {}", traj.max_rel_drift);
    }

    #[test]
    fn torus_wrap_is_recorded_and_transparent() {
        let sys = MagneticSystem::t2_constant(0.0);
        let x0 = start([0.9, 0.5], [1.0, 0.0]);
        let traj = integrate(&sys, &x0, 0.3, IntegratorConfig::default()).unwrap();
        assert_eq!(traj.chart_switches.len(), 1);
        let (_, mv) = &traj.chart_switches[0];
        assert_eq!(mv.lattice.as_deref(), Some(&[-1, 0][..]));
        let last = traj.states.last().unwrap();
        assert_relative_eq!(last.base.coords[0], 0.2, epsilon = 1e-10);
    }

    #[test]
    fn forward_then_backward_recovers_the_start() {
        let b = crate::geometry::TrigPoly::cos(0.3, vec![1, 0]).with_constant(1.0);
        let sys = MagneticSystem::t2_variable(b);
        let x0 = start([0.1, 0.3], [0.1, 0.05]);
        let cfg = IntegratorConfig { normalize_charts: false, ..Default::default() };
        let mut stepper = Stepper::new(&sys, cfg, &x0).unwrap();
        stepper.advance(1.0).unwrap();
        stepper.advance(-1.0).unwrap();
        assert!(sys.phase_distance(&x0, &stepper.state()) < 1e-8);
    }

    #[test]
    fn identical_configs_produce_identical_trajectories() {
        let sys = MagneticSystem::s2_round(1.0, 0.3);
        let x0 = PhasePoint::new(ChartPoint::new(0, vec![0.2, 0.1]), vec![0.05, -0.1]);
        let cfg = IntegratorConfig::default();
        let a = integrate(&sys, &x0, 0.8, cfg).unwrap();
        let b = integrate(&sys, &x0, 0.8, cfg).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.energies, b.energies);
    }

    #[test]
    fn tight_budget_rejects_sphere_drift() {
        let sys = MagneticSystem::s2_round(1.0, 0.3);
        let x0 = PhasePoint::new(ChartPoint::new(0, vec![0.4, 0.0]), vec![0.3, 0.2]);
        let cfg = IntegratorConfig { drift_budget: 1e-18, ..Default::default() };
        let out = integrate(&sys, &x0, 1.0, cfg);
        assert!(matches!(out, Err(Error::DriftExceeded { .. })));
    }

    #[test]
    fn save_restore_round_trips() {
        let sys = MagneticSystem::t2_constant(1.0);
        let x0 = start([0.0, 0.0], [0.2, 0.0]);
        let mut stepper = Stepper::new(&sys, IntegratorConfig::default(), &x0).unwrap();
        stepper.advance(0.5).unwrap();
        let snap = stepper.save();
        let mid = stepper.state();
        stepper.advance(0.25).unwrap();
        stepper.restore(&snap);
        assert_eq!(stepper.state(), mid);
        assert_eq!(stepper.time(), snap.t);
    }
}
