//! Trigonometric polynomials in chart coordinates.
//!
//! Metric and field coefficients on the flat tori are specified as finite
//! sums  c₀ + Σ aₖ · cos/sin(2π k·x)  with integer harmonic vectors k.  All
//! derivatives are analytic, so closedness and gauge computations do not have
//! to fall back to stencils unless explicitly requested.

use serde::{Deserialize, Serialize};

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    /// Integer harmonics, one per chart coordinate.
    pub harmonics: Vec<i32>,
    pub phase: Phase,
}

/// c₀ + Σ terms, evaluated on chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigPoly {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        TrigPoly { constant: c, terms: Vec::new() }
    }

    pub fn cos(amplitude: f64, harmonics: Vec<i32>) -> Self {
        TrigPoly {
            constant: 0.0,
            terms: vec![TrigTerm { amplitude, harmonics, phase: Phase::Cos }],
        }
    }

    pub fn sin(amplitude: f64, harmonics: Vec<i32>) -> Self {
        TrigPoly {
            constant: 0.0,
            terms: vec![TrigTerm { amplitude, harmonics, phase: Phase::Sin }],
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn push(mut self, term: TrigTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    fn angle(term: &TrigTerm, x: &[f64]) -> f64 {
        TAU * term
            .harmonics
            .iter()
            .zip(x.iter())
            .map(|(&k, &xi)| k as f64 * xi)
            .sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let a = Self::angle(t, x);
            v += t.amplitude * match t.phase {
                Phase::Cos => a.cos(),
                Phase::Sin => a.sin(),
            };
        }
        v
    }

    /// ∂/∂x_axis, analytic.
    pub fn partial(&self, axis: usize, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for t in &self.terms {
            let k = *t.harmonics.get(axis).unwrap_or(&0) as f64;
            if k == 0.0 {
                continue;
            }
            let a = Self::angle(t, x);
            v += t.amplitude * TAU * k * match t.phase {
                Phase::Cos => -a.sin(),
                Phase::Sin => a.cos(),
            };
        }
        v
    }

    /// ∂²/∂x_axis1 ∂x_axis2, analytic.
    pub fn second_partial(&self, axis1: usize, axis2: usize, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for t in &self.terms {
            let k1 = *t.harmonics.get(axis1).unwrap_or(&0) as f64;
            let k2 = *t.harmonics.get(axis2).unwrap_or(&0) as f64;
            if k1 == 0.0 || k2 == 0.0 {
                continue;
            }
            let a = Self::angle(t, x);
            v -= t.amplitude * TAU * TAU * k1 * k2 * match t.phase {
                Phase::Cos => a.cos(),
                Phase::Sin => a.sin(),
            };
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{central_diff_4, FD_STEP};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn eval_matches_hand_values() {
        // 1 + 0.3 cos 2πx + 0.3 cos 2πy at (0, 0) and (1/2, 1/2).
        let b = TrigPoly::constant(1.0)
            .push(TrigTerm { amplitude: 0.3, harmonics: vec![1, 0], phase: Phase::Cos })
            .push(TrigTerm { amplitude: 0.3, harmonics: vec![0, 1], phase: Phase::Cos });
        assert_relative_eq!(b.eval(&[0.0, 0.0]), 1.6);
        assert_relative_eq!(b.eval(&[0.5, 0.5]), 0.4, epsilon = 1e-15);
        assert_relative_eq!(b.eval(&[0.5, 0.0]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn analytic_partials_match_stencil() {
        let p = TrigPoly::sin(0.7, vec![2, -1]).with_constant(0.2).push(TrigTerm {
            amplitude: -0.25,
            harmonics: vec![1, 3],
            phase: Phase::Cos,
        });
        let x = [0.21, 0.64];
        for axis in 0..2 {
            let fd = central_diff_4(
                |v: &DVector<f64>| p.eval(v.as_slice()),
                &DVector::from_row_slice(&x),
                axis,
                FD_STEP,
            );
            assert_relative_eq!(p.partial(axis, &x), fd, epsilon = 1e-9);
        }
        // Mixed second partial against nested stencil of the analytic first.
        let fd2 = central_diff_4(
            |v: &DVector<f64>| p.partial(1, v.as_slice()),
            &DVector::from_row_slice(&x),
            0,
            FD_STEP,
        );
        assert_relative_eq!(p.second_partial(0, 1, &x), fd2, epsilon = 1e-8);
    }

    #[test]
    fn periodicity_in_every_harmonic() {
        let p = TrigPoly::cos(1.1, vec![3, 2]);
        assert_relative_eq!(p.eval(&[0.13, 0.87]), p.eval(&[1.13, -0.13]), epsilon = 1e-12);
    }
}
