//! Metric tensors, magnetic 2-forms, and gauge potentials on the catalog
//! manifolds.
//!
//! A magnetic form is stored by its chart-coefficient matrix σ_ij (so the
//! 2-form is Σ_{i<j} σ_ij dx_i ∧ dx_j), and a metric by g_ij.  Both expose
//! analytic gradients; a finite-difference route exists for gauge shifts whose
//! potential does not want to declare one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::manifold::{ChartPoint, ManifoldModel};
use crate::geometry::trig::TrigPoly;
use crate::numerics::{central_diff_4, FD_STEP};

/// Riemannian metric g_ij in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricField {
    /// Identity metric on a flat torus chart.
    Flat,
    /// Round metric on S²: g = 4/(1+|x|²)² · δ in both stereographic charts.
    RoundSphere,
    /// Diagonal metric with trigonometric coefficients (tori only).
    DiagTrig(Vec<TrigPoly>),
}

impl MetricField {
    pub fn eval_into(&self, x: &ChartPoint, out: &mut DMatrix<f64>) {
        let n = x.dim();
        out.fill(0.0);
        match self {
            MetricField::Flat => {
                for i in 0..n {
                    out[(i, i)] = 1.0;
                }
            }
            MetricField::RoundSphere => {
                let c = round_conformal(x.coords.norm_squared());
                for i in 0..n {
                    out[(i, i)] = c;
                }
            }
            MetricField::DiagTrig(diag) => {
                for i in 0..n {
                    out[(i, i)] = diag[i].eval(x.coords.as_slice());
                }
            }
        }
    }

    pub fn eval(&self, x: &ChartPoint) -> DMatrix<f64> {
        let n = x.dim();
        let mut out = DMatrix::zeros(n, n);
        self.eval_into(x, &mut out);
        out
    }

    /// grads[k] = ∂g/∂x_k, analytic for every catalog variant.
    pub fn grad_into(&self, x: &ChartPoint, grads: &mut [DMatrix<f64>]) {
        let n = x.dim();
        for g in grads.iter_mut() {
            g.fill(0.0);
        }
        match self {
            MetricField::Flat => {}
            MetricField::RoundSphere => {
                let rho = x.coords.norm_squared();
                // ∂_k c = −16 x_k / (1+ρ)³
                let dc = -16.0 / (1.0 + rho).powi(3);
                for k in 0..n {
                    let v = dc * x.coords[k];
                    for i in 0..n {
                        grads[k][(i, i)] = v;
                    }
                }
            }
            MetricField::DiagTrig(diag) => {
                for k in 0..n {
                    for i in 0..n {
                        grads[k][(i, i)] = diag[i].partial(k, x.coords.as_slice());
                    }
                }
            }
        }
    }

    /// Inverse metric, failing loudly when g is not positive definite.
    pub fn inverse(&self, x: &ChartPoint) -> Result<DMatrix<f64>> {
        let g = self.eval(x);
        invert_spd(&g, || format!("chart {} at {:?}", x.chart, x.coords.as_slice()))
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, MetricField::Flat)
    }
}

pub(crate) fn round_conformal(rho: f64) -> f64 {
    4.0 / (1.0 + rho).powi(2)
}

pub(crate) fn invert_spd<F: Fn() -> String>(g: &DMatrix<f64>, where_: F) -> Result<DMatrix<f64>> {
    let chol = g.clone().cholesky().ok_or_else(|| Error::DegenerateMetric {
        where_: where_(),
        detail: "Cholesky factorization failed (matrix not positive definite)".into(),
    })?;
    Ok(chol.inverse())
}

/// Magnetic 2-form, stored by chart coefficients σ_ij.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MagneticTwoForm {
    /// Constant antisymmetric coefficient matrix on a torus.
    ConstantMatrix { entries: Vec<Vec<f64>> },
    /// Upper-triangular table of trigonometric coefficients (tori).
    TrigTable { dim: usize, entries: Vec<(usize, usize, TrigPoly)> },
    /// (c₀ + c₁ cos θ) · dA on the round sphere.
    AreaScaled { constant: f64, cos_theta: f64 },
    /// A gauge-shifted form σ − dα.
    Shifted { base: Box<MagneticTwoForm>, alpha: OneForm, mode: DerivativeMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

impl MagneticTwoForm {
    /// Constant field B dx∧dy on T².
    pub fn constant_surface(b: f64) -> Self {
        MagneticTwoForm::ConstantMatrix { entries: vec![vec![0.0, b], vec![-b, 0.0]] }
    }

    /// B(x) dx∧dy on T² with a trigonometric strength.
    pub fn surface_trig(b: TrigPoly) -> Self {
        MagneticTwoForm::TrigTable { dim: 2, entries: vec![(0, 1, b)] }
    }

    /// Block form b₁ dx₁∧dx₂ + b₂ dx₃∧dx₄ on T⁴.
    pub fn torus4_blocks(b1: f64, b2: f64) -> Self {
        MagneticTwoForm::TrigTable {
            dim: 4,
            entries: vec![(0, 1, TrigPoly::constant(b1)), (2, 3, TrigPoly::constant(b2))],
        }
    }

    pub fn eval_into(&self, manifold: &ManifoldModel, x: &ChartPoint, out: &mut DMatrix<f64>) {
        let n = x.dim();
        out.fill(0.0);
        match self {
            MagneticTwoForm::ConstantMatrix { entries } => {
                for i in 0..n {
                    for j in 0..n {
                        out[(i, j)] = entries[i][j];
                    }
                }
            }
            MagneticTwoForm::TrigTable { entries, .. } => {
                for (i, j, poly) in entries {
                    let v = poly.eval(x.coords.as_slice());
                    out[(*i, *j)] += v;
                    out[(*j, *i)] -= v;
                }
            }
            MagneticTwoForm::AreaScaled { constant, cos_theta } => {
                let ct = manifold.sphere_cos_theta(x).expect("area-scaled forms live on the sphere");
                let s = constant + cos_theta * ct;
                let area = round_conformal(x.coords.norm_squared());
                out[(0, 1)] = s * area;
                out[(1, 0)] = -s * area;
            }
            MagneticTwoForm::Shifted { base, alpha, mode } => {
                base.eval_into(manifold, x, out);
                let n = x.dim();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let d = alpha.curl_entry(i, j, x, *mode);
                        out[(i, j)] -= d;
                        out[(j, i)] += d;
                    }
                }
            }
        }
    }

    pub fn eval(&self, manifold: &ManifoldModel, x: &ChartPoint) -> DMatrix<f64> {
        let n = x.dim();
        let mut out = DMatrix::zeros(n, n);
        self.eval_into(manifold, x, &mut out);
        out
    }

    /// grads[k] = ∂σ/∂x_k.
    pub fn grad_into(&self, manifold: &ManifoldModel, x: &ChartPoint, grads: &mut [DMatrix<f64>]) {
        let n = x.dim();
        for g in grads.iter_mut() {
            g.fill(0.0);
        }
        match self {
            MagneticTwoForm::ConstantMatrix { .. } => {}
            MagneticTwoForm::TrigTable { entries, .. } => {
                for (i, j, poly) in entries {
                    for k in 0..n {
                        let v = poly.partial(k, x.coords.as_slice());
                        grads[k][(*i, *j)] += v;
                        grads[k][(*j, *i)] -= v;
                    }
                }
            }
            MagneticTwoForm::AreaScaled { constant, cos_theta } => {
                let rho = x.coords.norm_squared();
                let sign = if x.chart == 0 { 1.0 } else { -1.0 };
                let ct = sign * (rho - 1.0) / (rho + 1.0);
                let s = constant + cos_theta * ct;
                let area = round_conformal(rho);
                let darea = -16.0 / (1.0 + rho).powi(3);
                let dct = sign * 4.0 / (1.0 + rho).powi(2);
                for k in 0..n {
                    let xk = x.coords[k];
                    let v = cos_theta * dct * xk * area + s * darea * xk;
                    grads[k][(0, 1)] = v;
                    grads[k][(1, 0)] = -v;
                }
            }
            MagneticTwoForm::Shifted { base, alpha, mode } => {
                base.grad_into(manifold, x, grads);
                for k in 0..n {
                    for i in 0..n {
                        for j in (i + 1)..n {
                            let d = alpha.curl_entry_partial(i, j, k, x, *mode);
                            grads[k][(i, j)] -= d;
                            grads[k][(j, i)] += d;
                        }
                    }
                }
            }
        }
    }

    /// Largest |∂_k σ_ij + ∂_i σ_jk + ∂_j σ_ki| over distinct index triples.
    /// Identically zero for n < 3, where every 2-form is closed.
    pub fn closedness_residual(&self, manifold: &ManifoldModel, x: &ChartPoint) -> f64 {
        let n = x.dim();
        if n < 3 {
            return 0.0;
        }
        let mut grads: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
        self.grad_into(manifold, x, &mut grads);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let cyc = grads[k][(i, j)] + grads[i][(j, k)] + grads[j][(k, i)];
                    worst = worst.max(cyc.abs());
                }
            }
        }
        worst
    }
}

/// A 1-form α = Σ α_i dx_i with trigonometric components (tori).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    pub comps: Vec<TrigPoly>,
}

impl OneForm {
    /// (dα)_ij = ∂_i α_j − ∂_j α_i.
    fn curl_entry(&self, i: usize, j: usize, x: &ChartPoint, mode: DerivativeMode) -> f64 {
        match mode {
            DerivativeMode::Analytic => {
                self.comps[j].partial(i, x.coords.as_slice()) - self.comps[i].partial(j, x.coords.as_slice())
            }
            DerivativeMode::FiniteDifference => {
                let di = central_diff_4(|v: &DVector<f64>| self.comps[j].eval(v.as_slice()), &x.coords, i, FD_STEP);
                let dj = central_diff_4(|v: &DVector<f64>| self.comps[i].eval(v.as_slice()), &x.coords, j, FD_STEP);
                di - dj
            }
        }
    }

    /// ∂_k (dα)_ij.
    fn curl_entry_partial(&self, i: usize, j: usize, k: usize, x: &ChartPoint, mode: DerivativeMode) -> f64 {
        match mode {
            DerivativeMode::Analytic => {
                self.comps[j].second_partial(k, i, x.coords.as_slice())
                    - self.comps[i].second_partial(k, j, x.coords.as_slice())
            }
            DerivativeMode::FiniteDifference => central_diff_4(
                |v: &DVector<f64>| {
                    let q = ChartPoint { chart: x.chart, coords: v.clone() };
                    self.curl_entry(i, j, &q, DerivativeMode::FiniteDifference)
                },
                &x.coords,
                k,
                FD_STEP,
            ),
        }
    }
}

/// σ ↦ σ − dα.  The shifted form stays closed and keeps all period integrals,
/// since dα is exact.
pub fn gauge_shift(sigma: &MagneticTwoForm, alpha: OneForm, mode: DerivativeMode) -> MagneticTwoForm {
    MagneticTwoForm::Shifted { base: Box::new(sigma.clone()), alpha, mode }
}

/// Integral of σ over one 2-cycle, labeled for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleIntegral {
    pub label: String,
    pub value: f64,
}

/// Integrals of σ over a generating set of 2-cycles: the coordinate subtori
/// on Tⁿ and the fundamental class on S².
pub fn two_cycle_integrals(manifold: &ManifoldModel, sigma: &MagneticTwoForm) -> Result<Vec<CycleIntegral>> {
    let n = manifold.dim();
    let mut out = Vec::new();
    if manifold.is_torus() {
        // Midpoint rule is spectrally accurate for periodic integrands.
        const GRID: usize = 128;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut acc = 0.0;
                let mut sig = DMatrix::zeros(n, n);
                for a in 0..GRID {
                    for b in 0..GRID {
                        let mut coords = vec![0.0; n];
                        coords[i] = (a as f64 + 0.5) / GRID as f64;
                        coords[j] = (b as f64 + 0.5) / GRID as f64;
                        let x = ChartPoint::new(0, coords);
                        sigma.eval_into(manifold, &x, &mut sig);
                        acc += sig[(i, j)];
                    }
                }
                out.push(CycleIntegral {
                    label: format!("torus[{i}{j}]"),
                    value: acc / (GRID * GRID) as f64,
                });
            }
        }
    } else {
        // Each chart disk of radius 1 is a hemisphere; together they tile S².
        let mut acc = 0.0;
        for chart in 0..2 {
            acc += integrate_disk(|x| {
                let p = ChartPoint::new(chart, vec![x[0], x[1]]);
                sigma.eval(manifold, &p)[(0, 1)]
            });
        }
        out.push(CycleIntegral { label: "sphere".into(), value: acc });
    }
    Ok(out)
}

/// ∫_{|x|≤1} f dx dy by composite Simpson in r and trapezoid in angle.
fn integrate_disk<F: Fn(&[f64; 2]) -> f64>(f: F) -> f64 {
    const NR: usize = 192; // even
    const NTH: usize = 256;
    let dr = 1.0 / NR as f64;
    let dth = std::f64::consts::TAU / NTH as f64;
    let mut total = 0.0;
    for ir in 0..=NR {
        let r = ir as f64 * dr;
        let wr = if ir == 0 || ir == NR {
            1.0
        } else if ir % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let mut ring = 0.0;
        for ith in 0..NTH {
            let th = ith as f64 * dth;
            ring += f(&[r * th.cos(), r * th.sin()]);
        }
        total += wr * r * ring;
    }
    total * dr / 3.0 * dth
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn t2() -> ManifoldModel {
        ManifoldModel::torus(2).unwrap()
    }

    #[test]
    fn constant_form_evaluates_like_the_wedge() {
        // σ = B dx∧dy applied to (e₁, e₂) gives B.
        let sigma = MagneticTwoForm::constant_surface(2.5);
        let x = ChartPoint::new(0, vec![0.3, 0.4]);
        let s = sigma.eval(&t2(), &x);
        assert_relative_eq!(s[(0, 1)], 2.5);
        assert_relative_eq!(s[(1, 0)], -2.5);
    }

    #[test]
    fn round_metric_agrees_across_charts() {
        let m = ManifoldModel::sphere2();
        let metric = MetricField::RoundSphere;
        let p = ChartPoint::new(0, vec![1.2, 0.5]);
        let q = m.transition(&p, 1).unwrap();
        let jac = m.transition_jacobian(&p, 1).unwrap();
        // Covariant transformation: g(p) = Jᵀ g(q) J.
        let pulled = jac.transpose() * metric.eval(&q) * &jac;
        let g = metric.eval(&p);
        assert!((&pulled - &g).amax() < 1e-10, "metric pullback mismatch {:.3e}", (&pulled - &g).amax());
    }

    #[test]
    fn area_form_transforms_as_a_two_form_across_charts() {
        let m = ManifoldModel::sphere2();
        let sigma = MagneticTwoForm::AreaScaled { constant: 1.0, cos_theta: 0.3 };
        let p = ChartPoint::new(0, vec![0.9, -0.6]);
        let q = m.transition(&p, 1).unwrap();
        let jac = m.transition_jacobian(&p, 1).unwrap();
        let pulled = jac.transpose() * sigma.eval(&m, &q) * &jac;
        let s = sigma.eval(&m, &p);
        assert!((&pulled - &s).amax() < 1e-10);
    }

    #[test]
    fn metric_gradients_match_stencils() {
        let m = MetricField::RoundSphere;
        let x = ChartPoint::new(0, vec![0.7, -0.3]);
        let mut grads = vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)];
        m.grad_into(&x, &mut grads);
        for k in 0..2 {
            let fd = central_diff_4(
                |v: &DVector<f64>| m.eval(&ChartPoint { chart: 0, coords: v.clone() })[(0, 0)],
                &x.coords,
                k,
                FD_STEP,
            );
            assert_relative_eq!(grads[k][(0, 0)], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn area_scaled_gradient_matches_stencils_in_both_charts() {
        let m = ManifoldModel::sphere2();
        let sigma = MagneticTwoForm::AreaScaled { constant: 1.0, cos_theta: 0.3 };
        for chart in 0..2 {
            let x = ChartPoint::new(chart, vec![0.45, 0.8]);
            let mut grads = vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)];
            sigma.grad_into(&m, &x, &mut grads);
            for k in 0..2 {
                let fd = central_diff_4(
                    |v: &DVector<f64>| {
                        sigma.eval(&m, &ChartPoint { chart, coords: v.clone() })[(0, 1)]
                    },
                    &x.coords,
                    k,
                    FD_STEP,
                );
                assert_relative_eq!(grads[k][(0, 1)], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn closedness_holds_for_block_forms_and_fails_for_a_broken_table() {
        let m4 = ManifoldModel::torus(4).unwrap();
        let good = MagneticTwoForm::torus4_blocks(1.0, 2.0);
        let x = ChartPoint::new(0, vec![0.1, 0.2, 0.3, 0.4]);
        assert!(good.closedness_residual(&m4, &x) < 1e-12);

        // σ₁₂ depending on x₃ violates dσ = 0.
        let bad = MagneticTwoForm::TrigTable {
            dim: 3,
            entries: vec![(0, 1, TrigPoly::cos(1.0, vec![0, 0, 1]))],
        };
        let m3 = ManifoldModel::torus(3).unwrap();
        let y = ChartPoint::new(0, vec![0.1, 0.2, 0.37]);
        assert!(bad.closedness_residual(&m3, &y) > 1.0);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let g = MetricField::DiagTrig(vec![TrigPoly::constant(0.0), TrigPoly::constant(1.0)]);
        let x = ChartPoint::new(0, vec![0.5, 0.5]);
        assert!(matches!(g.inverse(&x), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn gauge_shift_flattens_the_oscillating_field() {
        // σ = (1 + 0.3 sin 2πx) dx∧dy and α = −(0.3/2π) cos(2πx) dy give
        // dα = 0.3 sin(2πx) dx∧dy, so σ − dα is the constant form.
        let sigma = MagneticTwoForm::surface_trig(
            TrigPoly::sin(0.3, vec![1, 0]).with_constant(1.0),
        );
        let alpha = OneForm {
            comps: vec![
                TrigPoly::constant(0.0),
                TrigPoly::cos(-0.3 / crate::geometry::trig::TAU, vec![1, 0]),
            ],
        };
        let m = t2();
        for mode in [DerivativeMode::Analytic, DerivativeMode::FiniteDifference] {
            let shifted = gauge_shift(&sigma, alpha.clone(), mode);
            for p in m.sample(40) {
                let v = shifted.eval(&m, &p)[(0, 1)];
                assert!((v - 1.0).abs() < 1e-9, "shifted strength {v} at {:?}", p.coords.as_slice());
            }
        }
    }

    #[test]
    fn gauge_shift_preserves_periods() {
        let m = t2();
        let sigma = MagneticTwoForm::surface_trig(
            TrigPoly::sin(0.3, vec![1, 0]).with_constant(1.0),
        );
        let alpha = OneForm {
            comps: vec![
                TrigPoly::constant(0.0),
                TrigPoly::cos(-0.3 / crate::geometry::trig::TAU, vec![1, 0]),
            ],
        };
        let shifted = gauge_shift(&sigma, alpha, DerivativeMode::Analytic);
        let before = two_cycle_integrals(&m, &sigma).unwrap();
        let after = two_cycle_integrals(&m, &shifted).unwrap();
        assert_eq!(before.len(), after.len());
        for (b, a) in before.iter().zip(after.iter()) {
            assert_relative_eq!(b.value, a.value, epsilon = 1e-8);
        }
        assert_relative_eq!(before[0].value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sphere_area_integral_matches_gauss_bonnet_scale() {
        // ∫ (1 + 0.3 cos θ) dA over the unit sphere: the odd part integrates
        // to zero, leaving the total area 4π.
        let m = ManifoldModel::sphere2();
        let sigma = MagneticTwoForm::AreaScaled { constant: 1.0, cos_theta: 0.3 };
        let ints = two_cycle_integrals(&m, &sigma).unwrap();
        assert_eq!(ints.len(), 1);
        assert_relative_eq!(ints[0].value, 4.0 * std::f64::consts::PI, epsilon = 1e-8);
    }
}
