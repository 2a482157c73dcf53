//! Linearized return-map data along a converged orbit.

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::MagneticSystem;
use crate::error::Result;

use super::section::{section_jacobian, OrbitConfig, SectionSpec};
use super::shoot::PeriodicOrbit;

/// Spectrum of the monodromy restricted to the section: 2n − 2 Floquet
/// multipliers and the derived degeneracy verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetData {
    /// Multipliers as (re, im), ordered by descending modulus.
    pub multipliers: Vec<(f64, f64)>,
    pub min_distance_to_one: f64,
    /// Worst |λμ − 1| over the greedy reciprocal pairing — a symplectic
    /// return map keeps this at the noise floor.
    pub reciprocal_defect: f64,
    /// |Πλ − 1|, another determinant-one consistency measure.
    pub product_defect: f64,
    pub nondegenerate: bool,
    pub tol: f64,
}

/// Multipliers of the return map linearized at the orbit's own start,
/// nondegenerate when every multiplier stays at least `tol` away from 1.
pub fn floquet(
    sys: &MagneticSystem,
    orbit: &PeriodicOrbit,
    cfg: &OrbitConfig,
    tol: f64,
) -> Result<FloquetData> {
    let sec = SectionSpec::at_anchor(sys, orbit.start.clone())?;
    let jac = section_jacobian(sys, &sec, &DVector::zeros(sec.coord_dim()), cfg)?;
    let mut eig: Vec<Complex<f64>> = jac.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| {
        b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im))
    });

    let one = Complex::new(1.0, 0.0);
    let min_distance_to_one =
        eig.iter().map(|l| (l - one).norm()).fold(f64::INFINITY, f64::min);

    let mut remaining = eig.clone();
    let mut reciprocal_defect = 0.0f64;
    while let Some(lambda) = remaining.pop() {
        if remaining.is_empty() {
            reciprocal_defect = reciprocal_defect.max((lambda * lambda - one).norm());
            break;
        }
        let (j, defect) = remaining
            .iter()
            .map(|mu| (lambda * mu - one).norm())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty remainder");
        reciprocal_defect = reciprocal_defect.max(defect);
        remaining.swap_remove(j);
    }
    let product: Complex<f64> = eig.iter().product();
    let product_defect = (product - one).norm();

    Ok(FloquetData {
        multipliers: eig.iter().map(|l| (l.re, l.im)).collect(),
        min_distance_to_one,
        reciprocal_defect,
        product_defect,
        nondegenerate: min_distance_to_one > tol,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntegratorConfig;
    use crate::geometry::{ChartPoint, Phase, TrigPoly, TrigTerm};
    use crate::orbits::shoot::{newton_shoot, seed_orbits};

    fn fast_cfg() -> OrbitConfig {
        OrbitConfig {
            integrator: IntegratorConfig { step: 5e-4, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn constant_field_loops_are_degenerate() {
        let sys = MagneticSystem::t2_constant(1.0);
        let grid = vec![ChartPoint::new(0, vec![0.5, 0.5])];
        let seeds = seed_orbits(&sys, 0.02, &grid, 1).unwrap();
        let orbit = newton_shoot(&sys, &seeds[0], &fast_cfg()).unwrap();
        let data = floquet(&sys, &orbit, &fast_cfg(), 1e-4).unwrap();
        assert_eq!(data.multipliers.len(), 2);
        assert!(data.min_distance_to_one < 1e-6);
        assert!(!data.nondegenerate);
    }

    #[test]
    fn field_extremum_orbit_is_nondegenerate_and_symplectic() {
        let b = TrigPoly::cos(0.3, vec![1, 0]).with_constant(1.0).push(TrigTerm {
            amplitude: 0.3,
            harmonics: vec![0, 1],
            phase: Phase::Cos,
        });
        let sys = MagneticSystem::t2_variable(b);
        let grid = vec![ChartPoint::new(0, vec![0.0, 0.0])];
        let seeds = seed_orbits(&sys, 1e-3, &grid, 1).unwrap();
        let orbit = newton_shoot(&sys, &seeds[0], &fast_cfg()).unwrap();
        let data = floquet(&sys, &orbit, &fast_cfg(), 1e-4).unwrap();
        assert!(data.nondegenerate, "min distance {}", data.min_distance_to_one);
        assert!(data.min_distance_to_one > 1e-3);
        assert!(data.reciprocal_defect < 1e-4, "defect {}", data.reciprocal_defect);
        assert!(data.product_defect < 1e-4);
    }
}
