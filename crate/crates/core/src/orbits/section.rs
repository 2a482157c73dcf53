//! Poincaré sections inside an energy level and the first-return map.
//!
//! A section is the affine hyperplane through an anchor point whose normal
//! is the flow direction there, intersected with the level {H = e}.  Points
//! of the section carry coordinates in an orthonormal frame spanning the
//! complement of the flow and energy-gradient directions, so the return map
//! acts on 2n−2 unknowns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, MagneticSystem, PhasePoint, Stepper};
use crate::error::{Error, Result};

/// Knobs for crossing detection, shooting, and loop sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub integrator: IntegratorConfig,
    /// Give up on a return after this much flow time.
    pub max_time: f64,
    /// Ignore crossings earlier than this (suppresses the start itself
    /// re-registering when a trajectory begins on the section).
    pub min_transit: f64,
    /// Phase-space ball around the anchor the search is confined to:
    /// starts outside it are rejected, and a trajectory that leaves it
    /// aborts early instead of integrating out the whole time budget.
    pub capture_radius: Option<f64>,
    /// Finite-difference step factor for section-coordinate Jacobians.
    pub fd_step: f64,
    /// Residual target for the fixed-point iteration.
    pub fixpoint_tol: f64,
    /// Newton iteration cap for shooting.
    pub max_iter: usize,
    /// A return-map Jacobian whose shift by −1 has a singular value below
    /// this is treated as a degenerate direction.
    pub singular_tol: f64,
    /// Maximum distance of the momentum rotation number from an integer.
    pub winding_tol: f64,
    /// Samples stored per closed loop.
    pub loop_samples: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            integrator: IntegratorConfig::default(),
            max_time: 200.0,
            min_transit: 1e-2,
            capture_radius: None,
            fd_step: 1e-6,
            fixpoint_tol: 1e-10,
            max_iter: 30,
            singular_tol: 1e-6,
            winding_tol: 0.1,
            loop_samples: 512,
        }
    }
}

/// Hyperplane section through an anchor, normal to the flow there.
#[derive(Debug, Clone)]
pub struct SectionSpec {
    anchor: PhasePoint,
    anchor_packed: DVector<f64>,
    /// Unit normal in packed (δq, δp) coordinates of the anchor chart.
    normal: DVector<f64>,
    energy: f64,
    /// In-plane unit vector along which H varies to first order; energy
    /// corrections move along it so they never leave the section plane.
    energy_dir: DVector<f64>,
    /// Orthonormal basis of the complement of {flow, energy gradient}.
    frame: Vec<DVector<f64>>,
}

impl SectionSpec {
    /// Build the maximal-transversality section at `anchor`.
    pub fn at_anchor(sys: &MagneticSystem, anchor: PhasePoint) -> Result<Self> {
        let energy = sys.hamiltonian(&anchor)?;
        let flow = sys.vector_field(&anchor)?;
        let speed = flow.norm();
        if speed < 1e-12 {
            return Err(Error::BadSectionNormal);
        }
        let normal = &flow / speed;

        let (dq, dp) = sys.differential(&anchor)?;
        let n = sys.dim();
        let mut grad = DVector::zeros(2 * n);
        grad.rows_mut(0, n).copy_from(&dq);
        grad.rows_mut(n, n).copy_from(&dp);
        let mut g_perp = &grad - &normal * normal.dot(&grad);
        let g_norm = g_perp.norm();
        if g_norm < 1e-10 * grad.norm().max(1e-300) {
            return Err(Error::BadSectionNormal);
        }
        g_perp /= g_norm;

        let frame = orthonormal_complement(&[normal.clone(), g_perp.clone()], 2 * n);
        debug_assert_eq!(frame.len(), 2 * n - 2);
        let (_, anchor_packed) = anchor.pack();
        Ok(SectionSpec { anchor, anchor_packed, normal, energy, energy_dir: g_perp, frame })
    }

    pub fn anchor(&self) -> &PhasePoint {
        &self.anchor
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Dimension of the section coordinate space, 2n − 2.
    pub fn coord_dim(&self) -> usize {
        self.frame.len()
    }

    /// Signed distance of `x` from the section hyperplane, measured after
    /// lifting `x` into the anchor's chart and nearest periodic image.
    pub fn offset(&self, sys: &MagneticSystem, x: &PhasePoint) -> Result<f64> {
        let z = self.lift(sys, x)?;
        Ok(self.normal.dot(&(&z - &self.anchor_packed)))
    }

    /// Frame coordinates of `x` relative to the anchor.
    pub fn coords(&self, sys: &MagneticSystem, x: &PhasePoint) -> Result<DVector<f64>> {
        let z = self.lift(sys, x)?;
        let d = &z - &self.anchor_packed;
        Ok(DVector::from_fn(self.frame.len(), |i, _| self.frame[i].dot(&d)))
    }

    /// Realize frame coordinates as a phase point on the section plane and
    /// on {H = e} simultaneously.  A plain momentum rescale would restore
    /// the energy but drift off the plane once the momentum has rotated
    /// away from the anchor's, so the correction moves along the in-plane
    /// energy direction instead.
    pub fn embed(&self, sys: &MagneticSystem, c: &DVector<f64>) -> Result<PhasePoint> {
        let mut z = self.anchor_packed.clone();
        for (i, b) in self.frame.iter().enumerate() {
            z.axpy(c[i], b, 1.0);
        }
        let scale = self.energy.max(1e-300);
        let n = self.anchor.base.coords.len();
        for _ in 0..12 {
            let x = PhasePoint::unpack(self.anchor.base.chart, &z);
            let defect = self.energy - sys.hamiltonian(&x)?;
            if defect.abs() <= 1e-14 * scale {
                return Ok(x);
            }
            let (dq, dp) = sys.differential(&x)?;
            let mut slope = 0.0;
            for i in 0..n {
                slope += dq[i] * self.energy_dir[i] + dp[i] * self.energy_dir[n + i];
            }
            if slope.abs() < 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "energy is stationary along the section's energy direction (slope {slope:.3e})"
                )));
            }
            z.axpy(defect / slope, &self.energy_dir, 1.0);
        }
        let x = PhasePoint::unpack(self.anchor.base.chart, &z);
        let defect = self.energy - sys.hamiltonian(&x)?;
        if defect.abs() <= 1e-10 * scale {
            Ok(x)
        } else {
            Err(Error::InvalidInput(format!(
                "energy correction stalled {defect:.3e} away from the level {:.3e}",
                self.energy
            )))
        }
    }

    fn lift(&self, sys: &MagneticSystem, x: &PhasePoint) -> Result<DVector<f64>> {
        self.lift_near(sys, x, &self.anchor.base.coords)
    }

    /// Packed coordinates of `x` in the anchor's chart, choosing the
    /// periodic image nearest `reference` — the covering-space lift when
    /// `reference` tracks the previous point of a trajectory.
    fn lift_near(
        &self,
        sys: &MagneticSystem,
        x: &PhasePoint,
        reference: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let local = if x.base.chart == self.anchor.base.chart {
            x.clone()
        } else {
            sys.transition_phase(x, self.anchor.base.chart)?
        };
        let q = sys.manifold().nearest_image(reference, &local.base.coords);
        let n = q.len();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&q);
        z.rows_mut(n, n).copy_from(&local.momentum);
        Ok(z)
    }

    fn offset_packed(&self, z: &DVector<f64>) -> f64 {
        self.normal.dot(&(z - &self.anchor_packed))
    }

    /// `lift_near`, restricted to the patch of the anchor chart where the
    /// section plane is geometrically meaningful.  `None` marks a state
    /// too far out to track: past the patch radius a sphere chart squeezes
    /// the whole opposite cap into enormous coordinates, and an affine
    /// plane there separates nothing.  Torus lifts always exist.
    fn patch_lift(
        &self,
        sys: &MagneticSystem,
        x: &PhasePoint,
        reference: &DVector<f64>,
    ) -> Result<Option<DVector<f64>>> {
        if sys.manifold().is_torus() {
            return self.lift_near(sys, x, reference).map(Some);
        }
        // The image of a point at own-chart radius r sits at 1/r; skip the
        // transition entirely when it cannot land inside the patch.
        if x.base.chart != self.anchor.base.chart
            && x.base.coords.norm() * SPHERE_PATCH_RADIUS < 1.0
        {
            return Ok(None);
        }
        let z = self.lift_near(sys, x, reference)?;
        let n = x.base.coords.len();
        if z.rows(0, n).norm() > SPHERE_PATCH_RADIUS {
            return Ok(None);
        }
        Ok(Some(z))
    }
}

/// Extent of a sphere section's patch in anchor-chart coordinates — past
/// the chart-switch radius with room for the orbit's own excursions.
const SPHERE_PATCH_RADIUS: f64 = 3.0;

/// Orthonormal vectors spanning the complement of `fixed` (assumed
/// orthonormal) in R^dim, built deterministically from the standard basis.
fn orthonormal_complement(fixed: &[DVector<f64>], dim: usize) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = fixed.to_vec();
    let mut out = Vec::with_capacity(dim - fixed.len());
    for k in 0..dim {
        if out.len() + fixed.len() == dim {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[k] = 1.0;
        for b in &basis {
            let c = b.dot(&v);
            v.axpy(-c, b, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// Flow from `start` to the next armed upward crossing of the section.
/// Returns the refined crossing point and its flow time.
///
/// The signed offset is tracked along the covering-space lift of the
/// trajectory (each state unwrapped next to its predecessor), so on tori
/// the section means the single plane through the anchor, not the union of
/// its periodic translates: drifting trajectories run off to infinity in
/// the cover and report no return instead of clipping a far image.  On
/// the sphere, tracking is suspended while the trajectory is outside the
/// anchor chart's patch and resumes — with fresh arming — when it comes
/// back, so the section is the disk near the anchor rather than the
/// plane's meaningless continuation around the antipode.
pub(crate) fn crossing(
    sys: &MagneticSystem,
    sec: &SectionSpec,
    start: &PhasePoint,
    cfg: &OrbitConfig,
) -> Result<(PhasePoint, f64)> {
    let n = sys.dim();
    let mut stepper = Stepper::new(sys, cfg.integrator, start)?;
    let mut ref_q = sec.anchor.base.coords.clone();
    let mut tracked: Option<f64> = None;
    let mut armed = false;
    if let Some(z0) = sec.patch_lift(sys, &stepper.state(), &ref_q)? {
        ref_q.copy_from(&z0.rows(0, n));
        let s = sec.offset_packed(&z0);
        armed = s < -1e-12;
        tracked = Some(s);
    }
    loop {
        let pre = stepper.save();
        let pre_ref = ref_q.clone();
        let t_pre = stepper.time();
        stepper.step()?;
        let t = stepper.time();
        if t > cfg.max_time {
            return Err(Error::NoReturn { max_time: cfg.max_time });
        }
        if let Some(radius) = cfg.capture_radius {
            let distance = sys.phase_distance(&stepper.state(), sec.anchor());
            if distance > radius {
                return Err(Error::CaptureEscape { distance, radius });
            }
        }
        match sec.patch_lift(sys, &stepper.state(), &ref_q)? {
            Some(z) => {
                ref_q.copy_from(&z.rows(0, n));
                let s_now = sec.offset_packed(&z);
                match tracked {
                    Some(s_prev) => {
                        if armed && t_pre >= cfg.min_transit && s_prev < 0.0 && s_now >= 0.0 {
                            return refine_crossing(
                                sys,
                                sec,
                                &mut stepper,
                                &pre,
                                &pre_ref,
                                (s_prev, s_now),
                                cfg,
                            );
                        }
                    }
                    // Fresh entry into the patch: whatever armed the
                    // detector before the excursion no longer applies.
                    None => armed = false,
                }
                if s_now < -1e-12 {
                    armed = true;
                }
                tracked = Some(s_now);
            }
            None => {
                tracked = None;
                armed = false;
            }
        }
    }
}

/// Shrink the bracketing step [0, h] around the sign change with a
/// secant/bisection hybrid, re-solving a partial implicit-midpoint step
/// from the saved pre-crossing state each trial.
fn refine_crossing(
    sys: &MagneticSystem,
    sec: &SectionSpec,
    stepper: &mut Stepper,
    pre: &crate::dynamics::StepperState,
    pre_ref: &DVector<f64>,
    bracket: (f64, f64),
    cfg: &OrbitConfig,
) -> Result<(PhasePoint, f64)> {
    let h = cfg.integrator.step;
    let (mut s_lo, mut s_hi) = bracket;
    let (mut lo, mut hi) = (0.0f64, h);
    let scale = 1.0 + sec.anchor_packed.amax();
    let s_tol = 1e-13 * scale;

    let mut best: Option<(PhasePoint, f64, f64)> = None;
    for _ in 0..80 {
        let mut tau = (lo * s_hi - hi * s_lo) / (s_hi - s_lo);
        let margin = 1e-3 * (hi - lo);
        if !(tau > lo + margin && tau < hi - margin) {
            tau = 0.5 * (lo + hi);
        }
        stepper.restore(pre);
        stepper.step_by(tau)?;
        let point = stepper.state();
        let s = sec.offset_packed(&sec.lift_near(sys, &point, pre_ref)?);
        let t_abs = stepper.time();
        if best.as_ref().map_or(true, |(_, _, sb)| s.abs() < *sb) {
            best = Some((point, t_abs, s.abs()));
        }
        if s.abs() <= s_tol || hi - lo <= 4.0 * f64::EPSILON * h {
            break;
        }
        if s < 0.0 {
            lo = tau;
            s_lo = s;
        } else {
            hi = tau;
            s_hi = s;
        }
    }
    let (point, t_abs, _) = best.expect("refinement evaluated at least once");

    // The crossing must be transversal: ds/dt is the normal paired with
    // the flow, evaluated in the anchor's chart.
    let local = if point.base.chart == sec.anchor.base.chart {
        point.clone()
    } else {
        sys.transition_phase(&point, sec.anchor.base.chart)?
    };
    let f = sys.vector_field(&local)?;
    let speed = sec.normal.dot(&f);
    let flow_scale = f.norm();
    if speed.abs() < 1e-6 * flow_scale {
        return Err(Error::TangentialCrossing { speed: speed.abs(), scale: flow_scale });
    }
    Ok((point, t_abs))
}

/// One application of the return map in section coordinates: embed, flow
/// to the next crossing, read off coordinates.
pub(crate) fn return_coords(
    sys: &MagneticSystem,
    sec: &SectionSpec,
    c: &DVector<f64>,
    cfg: &OrbitConfig,
) -> Result<(DVector<f64>, f64)> {
    let x = sec.embed(sys, c)?;
    let (ret, t) = crossing(sys, sec, &x, cfg)?;
    Ok((sec.coords(sys, &ret)?, t))
}

/// Centered finite-difference Jacobian of the return map at `c`.
pub(crate) fn section_jacobian(
    sys: &MagneticSystem,
    sec: &SectionSpec,
    c: &DVector<f64>,
    cfg: &OrbitConfig,
) -> Result<DMatrix<f64>> {
    let m = sec.coord_dim();
    let fd = cfg.fd_step * (1.0 + (2.0 * sec.energy()).sqrt()).max(1.0);
    let mut jac = DMatrix::zeros(m, m);
    let mut probe = c.clone();
    for j in 0..m {
        probe[j] = c[j] + fd;
        let (fp, _) = return_coords(sys, sec, &probe, cfg)?;
        probe[j] = c[j] - fd;
        let (fm, _) = return_coords(sys, sec, &probe, cfg)?;
        probe[j] = c[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * fd);
        }
    }
    Ok(jac)
}

/// Next transversal intersection with the section in the crossing
/// direction of the flow, with transit time and the finite-difference
/// Jacobian of the constrained return map around `x`.
pub fn return_map(
    sys: &MagneticSystem,
    sec: &SectionSpec,
    x: &PhasePoint,
    cfg: &OrbitConfig,
) -> Result<(PhasePoint, f64, DMatrix<f64>)> {
    let h = sys.hamiltonian(x)?;
    if (h - sec.energy()).abs() > 1e-8 * sec.energy().max(1e-12) {
        return Err(Error::InvalidInput(format!(
            "start energy {h:.6e} is off the section level {:.6e}",
            sec.energy()
        )));
    }
    if let Some(r) = cfg.capture_radius {
        let d = sys.phase_distance(x, sec.anchor());
        if d > r {
            return Err(Error::InvalidInput(format!(
                "start is {d:.3e} from the anchor, beyond the capture radius {r:.3e}"
            )));
        }
    }
    let (point, time) = crossing(sys, sec, x, cfg)?;
    let jac = section_jacobian(sys, sec, &sec.coords(sys, x)?, cfg)?;
    Ok((point, time, jac))
}
