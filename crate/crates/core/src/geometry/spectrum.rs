//! Pointwise compatibility analysis of a magnetic form against the metric.
//!
//! The object of interest is Y = g⁻¹σ ("the Lorentz tensor"): it generates
//! the fiberwise momentum rotation of the low-energy limit.  Its eigenvalues
//! come in purely imaginary pairs ±iλ, and σ is compatible with g at a point
//! exactly when all the λ agree — on surfaces this is automatic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fields::{MagneticTwoForm, MetricField};
use crate::geometry::manifold::{ChartPoint, ManifoldModel};

/// Relative threshold below which the smallest skew eigenvalue marks σ as
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Moduli of the skew eigenvalue pairs of Y = g⁻¹σ at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewSpectrum {
    /// λ₁ ≥ λ₂ ≥ … ≥ λ_m > 0, one entry per eigenvalue pair ±iλ.
    pub values: Vec<f64>,
    /// (λ₁ − λ_m)/λ₁ — zero exactly on compatible points.
    pub spread: f64,
    pub compatible: bool,
}

/// Y = g⁻¹σ at x.  Traceless by construction; similar to an antisymmetric
/// matrix, so its spectrum is purely imaginary.
pub fn lorentz_tensor(
    metric: &MetricField,
    sigma: &MagneticTwoForm,
    manifold: &ManifoldModel,
    x: &ChartPoint,
) -> Result<DMatrix<f64>> {
    let g_inv = metric.inverse(x)?;
    Ok(g_inv * sigma.eval(manifold, x))
}

/// Skew eigenvalue moduli of Y = g⁻¹σ, with the compatibility verdict at
/// relative tolerance `tol`.
///
/// Errors on odd-dimensional bases and on rank-deficient σ; both leave no
/// meaningful full set of eigenvalue pairs.
pub fn skew_spectrum(
    metric: &MetricField,
    sigma: &MagneticTwoForm,
    manifold: &ManifoldModel,
    x: &ChartPoint,
    tol: f64,
) -> Result<SkewSpectrum> {
    let n = x.dim();
    if n % 2 != 0 {
        return Err(Error::OddDimension { dim: n });
    }
    let g = metric.eval(x);
    let chol = g.cholesky().ok_or_else(|| Error::DegenerateMetric {
        where_: point_label(x),
        detail: "metric not positive definite".into(),
    })?;
    let l = chol.l();
    let s = sigma.eval(manifold, x);
    // A = L⁻¹ σ L⁻ᵀ is antisymmetric and similar to Y = g⁻¹σ.
    let c = l.solve_lower_triangular(&s).ok_or_else(|| Error::DegenerateMetric {
        where_: point_label(x),
        detail: "singular Cholesky factor".into(),
    })?;
    let d = l.solve_lower_triangular(&c.transpose()).ok_or_else(|| Error::DegenerateMetric {
        where_: point_label(x),
        detail: "singular Cholesky factor".into(),
    })?;
    let mut a = d.transpose();
    // Scrub the symmetric part roundoff left behind.
    let at = a.transpose();
    a = (&a - &at) * 0.5;

    // Singular values of an antisymmetric matrix are the |λ| with doubled
    // multiplicity, which is better conditioned than a complex eigensolve.
    let svals = a.svd(false, false).singular_values;
    let mut sorted: Vec<f64> = svals.iter().copied().collect();
    sorted.sort_by(|p, q| q.partial_cmp(p).unwrap());
    let top = sorted[0];
    if sorted[n - 1] <= RANK_TOL * top.max(1e-300) || top == 0.0 {
        return Err(Error::RankDeficientForm { where_: point_label(x), smallest: sorted[n - 1] });
    }
    let values: Vec<f64> = (0..n / 2).map(|j| 0.5 * (sorted[2 * j] + sorted[2 * j + 1])).collect();
    let spread = (values[0] - values[n / 2 - 1]) / values[0];
    Ok(SkewSpectrum { spread, compatible: spread <= tol, values })
}

fn point_label(x: &ChartPoint) -> String {
    format!("chart {} {:?}", x.chart, x.coords.as_slice())
}

/// Result of sweeping [`skew_spectrum`] over a deterministic sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    pub worst_spread: f64,
    pub witness: ChartPoint,
    pub samples: usize,
    pub tol: f64,
}

/// Sweep the manifold with a low-discrepancy sample and report the worst
/// compatibility spread together with its witness point.
pub fn compatibility_check(
    metric: &MetricField,
    sigma: &MagneticTwoForm,
    manifold: &ManifoldModel,
    samples: usize,
    tol: f64,
) -> Result<CompatibilityReport> {
    assert!(samples > 0, "compatibility sweep needs at least one sample");
    let mut worst = -1.0;
    let mut witness = None;
    for x in manifold.sample(samples) {
        let spec = skew_spectrum(metric, sigma, manifold, &x, tol)?;
        if spec.spread > worst {
            worst = spec.spread;
            witness = Some(x);
        }
    }
    Ok(CompatibilityReport {
        compatible: worst <= tol,
        worst_spread: worst,
        witness: witness.expect("nonempty sample"),
        samples,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::trig::TrigPoly;
    use approx::assert_relative_eq;

    fn t2() -> ManifoldModel {
        ManifoldModel::torus(2).unwrap()
    }

    #[test]
    fn lorentz_tensor_flat_unit_field() {
        // g = I, σ = dx∧dy: Y is the standard rotation generator.
        let m = t2();
        let x = ChartPoint::new(0, vec![0.2, 0.9]);
        let y = lorentz_tensor(&MetricField::Flat, &MagneticTwoForm::constant_surface(1.0), &m, &x).unwrap();
        assert_relative_eq!(y[(0, 1)], 1.0);
        assert_relative_eq!(y[(1, 0)], -1.0);
        assert_relative_eq!(y[(0, 0)], 0.0);
        assert!(y.trace().abs() < 1e-12);
    }

    #[test]
    fn lorentz_tensor_anisotropic_metric_by_hand() {
        // g = diag(4, 1) against the standard form: g⁻¹σ = [[0, 1/4], [−1, 0]].
        let m = t2();
        let g = MetricField::DiagTrig(vec![TrigPoly::constant(4.0), TrigPoly::constant(1.0)]);
        let x = ChartPoint::new(0, vec![0.5, 0.5]);
        let y = lorentz_tensor(&g, &MagneticTwoForm::constant_surface(1.0), &m, &x).unwrap();
        assert_relative_eq!(y[(0, 1)], 0.25, epsilon = 1e-14);
        assert_relative_eq!(y[(1, 0)], -1.0, epsilon = 1e-14);
        assert!(y.trace().abs() < 1e-12);
    }

    #[test]
    fn surface_spectrum_is_single_valued_and_compatible() {
        let m = t2();
        let x = ChartPoint::new(0, vec![0.1, 0.8]);
        let spec = skew_spectrum(
            &MetricField::Flat,
            &MagneticTwoForm::constant_surface(0.7),
            &m,
            &x,
            0.01,
        )
        .unwrap();
        assert_eq!(spec.values.len(), 1);
        assert_relative_eq!(spec.values[0], 0.7, epsilon = 1e-12);
        assert!(spec.compatible);
        assert_relative_eq!(spec.spread, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn block_spectrum_on_t4_orders_values_and_measures_spread() {
        // Strengths (1, 2): eigenvalues ±i and ±2i, spread (2−1)/2.
        let m = ManifoldModel::torus(4).unwrap();
        let x = ChartPoint::new(0, vec![0.3, 0.1, 0.6, 0.9]);
        let spec = skew_spectrum(
            &MetricField::Flat,
            &MagneticTwoForm::torus4_blocks(1.0, 2.0),
            &m,
            &x,
            0.01,
        )
        .unwrap();
        assert_eq!(spec.values.len(), 2);
        assert_relative_eq!(spec.values[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(spec.values[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(spec.spread, 0.5, epsilon = 1e-12);
        assert!(!spec.compatible);
    }

    #[test]
    fn odd_dimension_and_rank_deficiency_are_errors() {
        let m3 = ManifoldModel::torus(3).unwrap();
        let x3 = ChartPoint::new(0, vec![0.1, 0.2, 0.3]);
        let sigma3 = MagneticTwoForm::TrigTable { dim: 3, entries: vec![(0, 1, TrigPoly::constant(1.0))] };
        assert!(matches!(
            skew_spectrum(&MetricField::Flat, &sigma3, &m3, &x3, 0.01),
            Err(Error::OddDimension { dim: 3 })
        ));

        let m4 = ManifoldModel::torus(4).unwrap();
        let x4 = ChartPoint::new(0, vec![0.1, 0.2, 0.3, 0.4]);
        let degenerate = MagneticTwoForm::torus4_blocks(1.0, 0.0);
        assert!(matches!(
            skew_spectrum(&MetricField::Flat, &degenerate, &m4, &x4, 0.01),
            Err(Error::RankDeficientForm { .. })
        ));
    }

    #[test]
    fn spectrum_is_chart_invariant_on_the_sphere() {
        let m = ManifoldModel::sphere2();
        let sigma = MagneticTwoForm::AreaScaled { constant: 1.0, cos_theta: 0.3 };
        let p = ChartPoint::new(0, vec![1.1, -0.4]);
        let q = m.transition(&p, 1).unwrap();
        let a = skew_spectrum(&MetricField::RoundSphere, &sigma, &m, &p, 0.01).unwrap();
        let b = skew_spectrum(&MetricField::RoundSphere, &sigma, &m, &q, 0.01).unwrap();
        assert_relative_eq!(a.values[0], b.values[0], epsilon = 1e-8);
    }

    #[test]
    fn compatibility_sweep_flags_the_t4_mismatch_with_witness() {
        let m = ManifoldModel::torus(4).unwrap();
        let report = compatibility_check(
            &MetricField::Flat,
            &MagneticTwoForm::torus4_blocks(1.0, 2.0),
            &m,
            64,
            0.01,
        )
        .unwrap();
        assert!(!report.compatible);
        assert_relative_eq!(report.worst_spread, 0.5, epsilon = 1e-12);
        assert_eq!(report.witness.dim(), 4);

        let ok = compatibility_check(
            &MetricField::Flat,
            &MagneticTwoForm::torus4_blocks(1.5, 1.5),
            &m,
            64,
            0.01,
        )
        .unwrap();
        assert!(ok.compatible);
    }
}
