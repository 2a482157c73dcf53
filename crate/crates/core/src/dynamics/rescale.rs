//! Blown-up dynamics on the unit cotangent sphere bundle: the rescaled
//! family X_ε, its fiberwise rotation limit X₀, and convergence probes.
//!
//! Momenta are dilated by ε and time is normalized so that the fiber
//! rotation survives as ε → 0 while the base drift shrinks at rate ε.
//! Every field evaluation is composed with the derivative of the central
//! projection onto the unit level, so results are tangent to the level
//! even for fiber Hamiltonians that are not exactly quadratic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::system::MagneticSystem;
use crate::error::{Error, Result};
use crate::geometry::ChartPoint;
use crate::numerics::{expm, log_log_slope};

/// A point of the unit cotangent sphere bundle: base point plus a unit
/// covector direction, g^{ij} u_i u_j = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereBundlePoint {
    pub base: ChartPoint,
    pub direction: DVector<f64>,
}

impl SphereBundlePoint {
    /// Build a bundle point by normalizing `direction` to the unit level
    /// of the system's metric.
    pub fn unit(sys: &MagneticSystem, base: ChartPoint, direction: Vec<f64>) -> Result<Self> {
        let u = DVector::from_vec(direction);
        let ginv = sys.metric().inverse(&base)?;
        let norm = u.dot(&(&ginv * &u)).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidInput("direction must be nonzero".into()));
        }
        Ok(SphereBundlePoint { base, direction: u / norm })
    }

    /// |g^{ij} u_i u_j − 1|.
    pub fn unit_defect(&self, sys: &MagneticSystem) -> Result<f64> {
        let ginv = sys.metric().inverse(&self.base)?;
        Ok((self.direction.dot(&(&ginv * &self.direction)) - 1.0).abs())
    }
}

/// Tangent vector to the bundle, split into base and fiber components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleVector {
    pub base: DVector<f64>,
    pub fiber: DVector<f64>,
}

impl BundleVector {
    pub fn amax(&self) -> f64 {
        self.base.amax().max(self.fiber.amax())
    }
}

/// Fiberwise energy profile of the Hamiltonian being blown up.  The
/// magnetic case is exactly quadratic; the quartic variant is a synthetic
/// perturbation H = ½|p|²_g + κ·¼Σp_i⁴ that exercises the nontrivial
/// projection path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FiberHamiltonian {
    Quadratic,
    Quartic { kappa: f64 },
}

/// X_ε for the magnetic (quadratic) Hamiltonian.
pub fn rescaled_field(
    sys: &MagneticSystem,
    eps: f64,
    y: &SphereBundlePoint,
) -> Result<BundleVector> {
    rescaled_field_general(sys, FiberHamiltonian::Quadratic, eps, y)
}

/// X_ε for a general fiber Hamiltonian: pull the flow back through the
/// fiber dilation, absorb the ε² time factor, and project onto the unit
/// level through the derivative of the central projection.
pub fn rescaled_field_general(
    sys: &MagneticSystem,
    fiber: FiberHamiltonian,
    eps: f64,
    y: &SphereBundlePoint,
) -> Result<BundleVector> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("dilation scale {eps} must be positive")));
    }
    let raw = raw_pullback(sys, fiber, eps, y)?;
    project_central(sys, y, raw)
}

/// The limit field X₀: no base motion, fiber rotation u̇ = σ g⁻¹ u.
/// Raising the index turns the generator into g⁻¹σ acting on vectors.
pub fn limit_field(sys: &MagneticSystem, y: &SphereBundlePoint) -> Result<BundleVector> {
    let n = sys.dim();
    let ginv = sys.metric().inverse(&y.base)?;
    let sig = sys.sigma().eval(sys.manifold(), &y.base);
    let raised = &ginv * &y.direction;
    Ok(BundleVector { base: DVector::zeros(n), fiber: &sig * raised })
}

/// Flow of X₀ for time `t`: a matrix exponential in the fiber over a
/// frozen base point.  The unit level is preserved up to roundoff; the
/// result is re-normalized onto it.
pub fn limit_flow(sys: &MagneticSystem, y: &SphereBundlePoint, t: f64) -> Result<SphereBundlePoint> {
    let ginv = sys.metric().inverse(&y.base)?;
    let sig = sys.sigma().eval(sys.manifold(), &y.base);
    let generator = &sig * &ginv;
    let u = expm(&(generator * t)) * &y.direction;
    SphereBundlePoint::unit(sys, y.base.clone(), u.as_slice().to_vec())
}

/// How a probe's norm sequence scaled with ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitResult {
    Slope(f64),
    /// Every difference norm vanished; the family agrees with its limit.
    ExactAgreement,
}

/// Sup norms of X_ε − X₀ and of their finite-difference Jacobians over a
/// sample, per ε, with log–log slope fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub eps: Vec<f64>,
    pub c0_norms: Vec<f64>,
    pub c1_norms: Vec<f64>,
    pub c0_fit: FitResult,
    pub c1_fit: FitResult,
}

/// Measure C⁰ and C¹ distances between X_ε and X₀ over a sample and fit
/// their decay rates.
pub fn convergence_probe(
    sys: &MagneticSystem,
    eps_list: &[f64],
    samples: &[SphereBundlePoint],
) -> Result<ProbeReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidInput("need at least three dilation scales".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidInput("dilation scales must be positive and decreasing".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("need at least one sample point".into()));
    }

    let mut c0_norms = Vec::with_capacity(eps_list.len());
    let mut c1_norms = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut c0 = 0.0f64;
        let mut c1 = 0.0f64;
        for y in samples {
            let fe = packed_field(sys, Some(eps), y.base.chart, &pack_bundle(y))?;
            let f0 = packed_field(sys, None, y.base.chart, &pack_bundle(y))?;
            c0 = c0.max((&fe - &f0).amax());

            let je = packed_jacobian(sys, Some(eps), y)?;
            let j0 = packed_jacobian(sys, None, y)?;
            c1 = c1.max((&je - &j0).amax());
        }
        c0_norms.push(c0);
        c1_norms.push(c1);
    }
    let c0_fit = match log_log_slope(eps_list, &c0_norms) {
        Some(s) => FitResult::Slope(s),
        None => FitResult::ExactAgreement,
    };
    let c1_fit = match log_log_slope(eps_list, &c1_norms) {
        Some(s) => FitResult::Slope(s),
        None => FitResult::ExactAgreement,
    };
    Ok(ProbeReport { eps: eps_list.to_vec(), c0_norms, c1_norms, c0_fit, c1_fit })
}

/// Derivative of the unit-level constraint g⁻¹(u, u) along a candidate
/// tangent vector; zero for vectors tangent to the bundle.
pub fn tangency_defect(sys: &MagneticSystem, y: &SphereBundlePoint, v: &BundleVector) -> Result<f64> {
    let n = sys.dim();
    let ginv = sys.metric().inverse(&y.base)?;
    let raised = &ginv * &y.direction;
    let mut grads: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    sys.metric().grad_into(&y.base, &mut grads);
    // ∂_k g⁻¹(u,u) = −(g⁻¹u)ᵀ (∂_k g) (g⁻¹u)
    let mut acc = 2.0 * raised.dot(&v.fiber);
    for k in 0..n {
        acc -= v.base[k] * raised.dot(&(&grads[k] * &raised));
    }
    Ok(acc.abs())
}

fn raw_pullback(
    sys: &MagneticSystem,
    fiber: FiberHamiltonian,
    eps: f64,
    y: &SphereBundlePoint,
) -> Result<BundleVector> {
    let n = sys.dim();
    let u = &y.direction;
    let ginv = sys.metric().inverse(&y.base)?;
    let sig = sys.sigma().eval(sys.manifold(), &y.base);
    let mut grads: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    sys.metric().grad_into(&y.base, &mut grads);
    let raised = &ginv * u;

    // Base: q̇ at p = εu.  Fiber: ṗ/ε at p = εu.
    let mut qdot = raised.clone() * eps;
    let mut sig_arg = raised.clone();
    if let FiberHamiltonian::Quartic { kappa } = fiber {
        for i in 0..n {
            let cube = u[i] * u[i] * u[i];
            qdot[i] += kappa * eps.powi(3) * cube;
            sig_arg[i] += kappa * eps * eps * cube;
        }
    }
    let mut fib = &sig * sig_arg;
    for i in 0..n {
        fib[i] += 0.5 * eps * raised.dot(&(&grads[i] * &raised));
    }
    Ok(BundleVector { base: qdot, fiber: fib })
}

/// Apply the derivative of the central projection (q, u) ↦ (q, u/|u|_g)
/// at y to a candidate vector, yielding a vector tangent to the level.
fn project_central(
    sys: &MagneticSystem,
    y: &SphereBundlePoint,
    v: BundleVector,
) -> Result<BundleVector> {
    let n = sys.dim();
    let u = &y.direction;
    let ginv = sys.metric().inverse(&y.base)?;
    let raised = &ginv * u;
    let s = u.dot(&raised);
    let c = s.sqrt();
    let mut grads: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    sys.metric().grad_into(&y.base, &mut grads);

    let mut radial = raised.dot(&v.fiber);
    for k in 0..n {
        radial -= 0.5 * v.base[k] * raised.dot(&(&grads[k] * &raised));
    }
    let fiber = &v.fiber / c - u * (radial / (c * c * c));
    Ok(BundleVector { base: v.base, fiber })
}

fn pack_bundle(y: &SphereBundlePoint) -> DVector<f64> {
    let n = y.base.dim();
    let mut z = DVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(&y.base.coords);
    z.rows_mut(n, n).copy_from(&y.direction);
    z
}

/// Field evaluation on packed (q, u) coordinates; `eps = None` selects the
/// limit field.  Both branches are composed with the central projection so
/// their finite-difference Jacobians are comparable.
fn packed_field(
    sys: &MagneticSystem,
    eps: Option<f64>,
    chart: usize,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = z.len() / 2;
    let y = SphereBundlePoint {
        base: ChartPoint { chart, coords: z.rows(0, n).into_owned() },
        direction: z.rows(n, n).into_owned(),
    };
    let v = match eps {
        Some(e) => {
            let raw = raw_pullback(sys, FiberHamiltonian::Quadratic, e, &y)?;
            project_central(sys, &y, raw)?
        }
        None => {
            let raw = limit_field(sys, &y)?;
            project_central(sys, &y, raw)?
        }
    };
    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&v.base);
    out.rows_mut(n, n).copy_from(&v.fiber);
    Ok(out)
}

fn packed_jacobian(
    sys: &MagneticSystem,
    eps: Option<f64>,
    y: &SphereBundlePoint,
) -> Result<DMatrix<f64>> {
    let z0 = pack_bundle(y);
    let m = z0.len();
    let h = 1e-5;
    let mut jac = DMatrix::zeros(m, m);
    let mut z = z0.clone();
    for j in 0..m {
        z[j] = z0[j] + h;
        let fp = packed_field(sys, eps, y.base.chart, &z)?;
        z[j] = z0[j] - h;
        let fm = packed_field(sys, eps, y.base.chart, &z)?;
        z[j] = z0[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}
