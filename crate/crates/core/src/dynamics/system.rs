//! Phase-space points, the twisted symplectic form, the kinetic
//! Hamiltonian, and its vector field in chart coordinates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ChartMove, ChartPoint, MagneticTwoForm, ManifoldModel, MetricField, TrigPoly,
};

/// Cotangent point: a chart base point plus momentum components in that
/// chart's coframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub base: ChartPoint,
    #[serde(with = "crate::numerics::vec_serde")]
    pub momentum: DVector<f64>,
}

impl PhasePoint {
    pub fn new(base: ChartPoint, momentum: Vec<f64>) -> Self {
        assert_eq!(base.dim(), momentum.len(), "base and momentum dimensions differ");
        PhasePoint { base, momentum: DVector::from_vec(momentum) }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Chart index plus the packed coordinate vector [q; p].
    pub fn pack(&self) -> (usize, DVector<f64>) {
        let n = self.dim();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.base.coords);
        z.rows_mut(n, n).copy_from(&self.momentum);
        (self.base.chart, z)
    }

    pub fn unpack(chart: usize, z: &DVector<f64>) -> Self {
        let n = z.len() / 2;
        PhasePoint {
            base: ChartPoint { chart, coords: z.rows(0, n).into_owned() },
            momentum: z.rows(n, n).into_owned(),
        }
    }
}

/// Preallocated buffers for repeated vector-field evaluations.
pub struct Workspace {
    x: ChartPoint,
    grads: Vec<DMatrix<f64>>,
    sig: DMatrix<f64>,
    qdot: DVector<f64>,
    scratch: DVector<f64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Workspace {
            x: ChartPoint { chart: 0, coords: DVector::zeros(dim) },
            grads: (0..dim).map(|_| DMatrix::zeros(dim, dim)).collect(),
            sig: DMatrix::zeros(dim, dim),
            qdot: DVector::zeros(dim),
            scratch: DVector::zeros(dim),
        }
    }
}

/// A model manifold with a metric and a magnetic 2-form: everything needed
/// to evaluate ω = Σdp_i∧dq_i + π*σ and H = ½|p|²_g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticSystem {
    manifold: ManifoldModel,
    metric: MetricField,
    sigma: MagneticTwoForm,
}

impl MagneticSystem {
    pub fn new(
        manifold: ManifoldModel,
        metric: MetricField,
        sigma: MagneticTwoForm,
    ) -> Result<Self> {
        let n = manifold.dim();
        match &metric {
            MetricField::RoundSphere if manifold.is_torus() => {
                return Err(Error::InvalidInput("round metric requires the sphere".into()));
            }
            MetricField::Flat | MetricField::DiagTrig(_) if !manifold.is_torus() => {
                return Err(Error::InvalidInput("torus metrics require a torus".into()));
            }
            MetricField::DiagTrig(diag) if diag.len() != n => {
                return Err(Error::DimensionMismatch { expected: n, got: diag.len() });
            }
            _ => {}
        }
        fn check_sigma(sigma: &MagneticTwoForm, manifold: &ManifoldModel, n: usize) -> Result<()> {
            match sigma {
                MagneticTwoForm::ConstantMatrix { entries } => {
                    if !manifold.is_torus() {
                        return Err(Error::InvalidInput(
                            "constant-coefficient forms live on tori".into(),
                        ));
                    }
                    if entries.len() != n || entries.iter().any(|r| r.len() != n) {
                        return Err(Error::DimensionMismatch { expected: n, got: entries.len() });
                    }
                    let mut worst = 0.0f64;
                    for i in 0..n {
                        for j in 0..n {
                            worst = worst.max((entries[i][j] + entries[j][i]).abs());
                        }
                    }
                    if worst > 1e-12 {
                        return Err(Error::NotAntisymmetric(worst));
                    }
                }
                MagneticTwoForm::TrigTable { dim, .. } => {
                    if !manifold.is_torus() {
                        return Err(Error::InvalidInput("coefficient tables live on tori".into()));
                    }
                    if *dim != n {
                        return Err(Error::DimensionMismatch { expected: n, got: *dim });
                    }
                }
                MagneticTwoForm::AreaScaled { .. } => {
                    if manifold.is_torus() {
                        return Err(Error::InvalidInput(
                            "area-scaled forms live on the sphere".into(),
                        ));
                    }
                }
                MagneticTwoForm::Shifted { base, .. } => check_sigma(base, manifold, n)?,
            }
            Ok(())
        }
        check_sigma(&sigma, &manifold, n)?;
        Ok(MagneticSystem { manifold, metric, sigma })
    }

    /// Flat T² with the constant field B dx∧dy.
    pub fn t2_constant(b: f64) -> Self {
        MagneticSystem::new(
            ManifoldModel::torus(2).unwrap(),
            MetricField::Flat,
            MagneticTwoForm::constant_surface(b),
        )
        .unwrap()
    }

    /// Flat T² with the variable field B(x, y) dx∧dy.
    pub fn t2_variable(b: TrigPoly) -> Self {
        MagneticSystem::new(
            ManifoldModel::torus(2).unwrap(),
            MetricField::Flat,
            MagneticTwoForm::surface_trig(b),
        )
        .unwrap()
    }

    /// Flat T⁴ with b₁ dx₁∧dx₂ + b₂ dx₃∧dx₄.
    pub fn t4_blocks(b1: f64, b2: f64) -> Self {
        MagneticSystem::new(
            ManifoldModel::torus(4).unwrap(),
            MetricField::Flat,
            MagneticTwoForm::torus4_blocks(b1, b2),
        )
        .unwrap()
    }

    /// Round S² with σ = (c₀ + c₁ cos θ) · area form.
    pub fn s2_round(c0: f64, c1: f64) -> Self {
        MagneticSystem::new(
            ManifoldModel::sphere2(),
            MetricField::RoundSphere,
            MagneticTwoForm::AreaScaled { constant: c0, cos_theta: c1 },
        )
        .unwrap()
    }

    pub fn manifold(&self) -> &ManifoldModel {
        &self.manifold
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn sigma(&self) -> &MagneticTwoForm {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    /// H = ½ g^{ij} p_i p_j ≥ 0.
    pub fn hamiltonian(&self, x: &PhasePoint) -> Result<f64> {
        if self.metric.is_flat() {
            return Ok(0.5 * x.momentum.norm_squared());
        }
        let ginv = self.metric.inverse(&x.base)?;
        Ok(0.5 * x.momentum.dot(&(&ginv * &x.momentum)))
    }

    /// Analytic differential of H, split into base and fiber parts:
    /// ∂H/∂q_k = −½ q̇ᵀ (∂_k g) q̇ and ∂H/∂p = g⁻¹p.
    pub fn differential(&self, x: &PhasePoint) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let ginv = self.metric.inverse(&x.base)?;
        let qdot = &ginv * &x.momentum;
        let mut grads: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
        self.metric.grad_into(&x.base, &mut grads);
        let dq = DVector::from_fn(n, |k, _| -0.5 * qdot.dot(&(&grads[k] * &qdot)));
        Ok((dq, qdot))
    }

    /// ω(u, v) at x for packed tangent vectors u, v = [δq; δp].
    pub fn twisted_form_eval(&self, x: &PhasePoint, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let n = self.dim();
        let sig = self.sigma.eval(&self.manifold, &x.base);
        let mut acc = 0.0;
        for i in 0..n {
            acc += u[n + i] * v[i] - u[i] * v[n + i];
            for j in 0..n {
                acc += sig[(i, j)] * u[i] * v[j];
            }
        }
        acc
    }

    /// X_H packed as [q̇; ṗ], the unique field with ω(X_H, ·) = −dH.
    pub fn vector_field(&self, x: &PhasePoint) -> Result<DVector<f64>> {
        let (chart, z) = x.pack();
        let mut out = DVector::zeros(z.len());
        let mut ws = Workspace::new(self.dim());
        self.vector_field_into(chart, &z, &mut out, &mut ws)?;
        Ok(out)
    }

    /// Allocation-light evaluation of X_H on packed coordinates.
    pub fn vector_field_into(
        &self,
        chart: usize,
        z: &DVector<f64>,
        out: &mut DVector<f64>,
        ws: &mut Workspace,
    ) -> Result<()> {
        let n = self.dim();
        ws.x.chart = chart;
        ws.x.coords.copy_from(&z.rows(0, n));
        let p = z.rows(n, n);

        if self.metric.is_flat() {
            ws.qdot.copy_from(&p);
        } else {
            let ginv = self.metric.inverse(&ws.x)?;
            ginv.mul_to(&p, &mut ws.qdot);
        }
        self.metric.grad_into(&ws.x, &mut ws.grads);
        self.sigma.eval_into(&self.manifold, &ws.x, &mut ws.sig);

        out.rows_mut(0, n).copy_from(&ws.qdot);
        ws.sig.mul_to(&ws.qdot, &mut ws.scratch);
        for i in 0..n {
            out[n + i] = ws.scratch[i];
        }
        if !self.metric.is_flat() {
            for i in 0..n {
                // ṗ_i picks up −∂H/∂q_i = +½ q̇ᵀ (∂_i g) q̇.
                ws.grads[i].mul_to(&ws.qdot, &mut ws.scratch);
                out[n + i] += 0.5 * ws.qdot.dot(&ws.scratch);
            }
        }
        Ok(())
    }

    /// Move a phase point to another chart; momentum transforms by the
    /// inverse-transpose Jacobian of the base transition.
    pub fn transition_phase(&self, x: &PhasePoint, target: usize) -> Result<PhasePoint> {
        if x.base.chart == target {
            return Ok(x.clone());
        }
        let base = self.manifold.transition(&x.base, target)?;
        let j = self.manifold.transition_jacobian(&x.base, target)?;
        let jt_inv = j
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::ChartEscape { chart: target, radius: x.base.coords.norm() })?;
        Ok(PhasePoint { base, momentum: jt_inv * &x.momentum })
    }

    /// Wrap torus coordinates / switch sphere charts, transforming the
    /// momentum when the chart changes.
    pub fn normalize_phase(&self, x: &PhasePoint) -> Result<(PhasePoint, Option<ChartMove>)> {
        if !self.manifold.needs_normalization(&x.base) {
            return Ok((x.clone(), None));
        }
        let (base, mv) = self.manifold.normalize(&x.base)?;
        let momentum = match &mv {
            Some(m) if m.from != m.to => {
                let j = self.manifold.transition_jacobian(&x.base, m.to)?;
                let jt_inv = j.transpose().try_inverse().ok_or_else(|| Error::ChartEscape {
                    chart: m.to,
                    radius: x.base.coords.norm(),
                })?;
                jt_inv * &x.momentum
            }
            _ => x.momentum.clone(),
        };
        Ok((PhasePoint { base, momentum }, mv))
    }

    /// Rescale the momentum so that H = energy exactly (fiber direction).
    pub fn project_to_level(&self, x: &PhasePoint, energy: f64) -> Result<PhasePoint> {
        let h = self.hamiltonian(x)?;
        if h <= 0.0 || energy <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "cannot rescale momentum from H = {h:.3e} to H = {energy:.3e}"
            )));
        }
        let mut out = x.clone();
        out.momentum *= (energy / h).sqrt();
        Ok(out)
    }

    /// Distance combining min-image base distance and momentum mismatch,
    /// reconciling charts first when necessary.
    pub fn phase_distance(&self, a: &PhasePoint, b: &PhasePoint) -> f64 {
        if a.base.chart == b.base.chart {
            let db = self.manifold.base_distance(&a.base, &b.base);
            let dp = (&a.momentum - &b.momentum).norm();
            return db.hypot(dp);
        }
        if let Ok(b2) = self.transition_phase(b, a.base.chart) {
            return self.phase_distance(a, &b2);
        }
        if let Ok(a2) = self.transition_phase(a, b.base.chart) {
            return self.phase_distance(&a2, b);
        }
        f64::INFINITY
    }
}
