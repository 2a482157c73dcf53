//! Chart atlases for the model manifolds.
//!
//! * Flat tori Tⁿ, n ∈ {2, 3, 4}: a single chart with every axis periodic and
//!   fundamental domain [0, 1)ⁿ.  Leaving the domain wraps coordinates back
//!   and records the lattice offset, which doubles as the universal-cover
//!   bookkeeping for trajectory unwinding.
//! * The round sphere S²: two stereographic charts (chart 0 centered on the
//!   south pole, chart 1 on the north pole), glued by the inversion
//!   (x₁, x₂) ↦ (x₁, −x₂)/|x|², which is orientation preserving.  A point is
//!   re-charted once its coordinate radius exceeds [`SPHERE_SWITCH_RADIUS`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::halton;
use crate::topology::{catalog_topology, TopologyInfo};

/// Coordinate radius beyond which a sphere chart hands over to its partner.
pub const SPHERE_SWITCH_RADIUS: f64 = 2.0;
/// Hard validity radius of a sphere chart; beyond this the point is lost.
pub const SPHERE_HARD_RADIUS: f64 = 4.0;

/// A point expressed in one chart of the atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: usize,
    #[serde(with = "crate::numerics::vec_serde")]
    pub coords: DVector<f64>,
}

impl ChartPoint {
    pub fn new(chart: usize, coords: Vec<f64>) -> Self {
        ChartPoint { chart, coords: DVector::from_vec(coords) }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Record of a chart change produced by [`ManifoldModel::normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartMove {
    pub from: usize,
    pub to: usize,
    /// Lattice translation applied on a torus (`None` for sphere handovers).
    pub lattice: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Torus { dim: usize },
    Sphere2,
}

/// One of the catalog manifolds, exposing charts, transitions, and topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    kind: Kind,
}

impl ManifoldModel {
    pub fn torus(dim: usize) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(Error::UnsupportedManifold(format!("torus of dimension {dim}")));
        }
        Ok(ManifoldModel { kind: Kind::Torus { dim } })
    }

    pub fn sphere2() -> Self {
        ManifoldModel { kind: Kind::Sphere2 }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "t2" => Self::torus(2),
            "t3" => Self::torus(3),
            "t4" => Self::torus(4),
            "s2" => Ok(Self::sphere2()),
            other => Err(Error::UnsupportedManifold(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Torus { dim: 2 } => "t2",
            Kind::Torus { dim: 3 } => "t3",
            Kind::Torus { dim: 4 } => "t4",
            Kind::Torus { .. } => unreachable!("torus dimension is validated on construction"),
            Kind::Sphere2 => "s2",
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            Kind::Torus { dim } => dim,
            Kind::Sphere2 => 2,
        }
    }

    pub fn chart_count(&self) -> usize {
        match self.kind {
            Kind::Torus { .. } => 1,
            Kind::Sphere2 => 2,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, Kind::Torus { .. })
    }

    pub fn topology(&self) -> TopologyInfo {
        catalog_topology(self.name()).expect("catalog manifolds always have topology data")
    }

    /// Whether the chart still covers the point at all.
    pub fn in_domain(&self, p: &ChartPoint) -> bool {
        match self.kind {
            Kind::Torus { dim } => p.chart == 0 && p.dim() == dim,
            Kind::Sphere2 => p.chart < 2 && p.dim() == 2 && p.coords.norm() <= SPHERE_HARD_RADIUS,
        }
    }

    /// Whether [`normalize`](Self::normalize) would move the point.
    pub fn needs_normalization(&self, p: &ChartPoint) -> bool {
        match self.kind {
            Kind::Torus { .. } => p.coords.iter().any(|&c| !(0.0..1.0).contains(&c)),
            Kind::Sphere2 => p.coords.norm() > SPHERE_SWITCH_RADIUS,
        }
    }

    /// Canonical representative: torus coordinates wrapped into [0, 1)ⁿ,
    /// sphere points handed to the partner chart when too far out.
    pub fn normalize(&self, p: &ChartPoint) -> Result<(ChartPoint, Option<ChartMove>)> {
        if !self.in_domain(p) {
            return Err(Error::ChartEscape { chart: p.chart, radius: p.coords.norm() });
        }
        if !self.needs_normalization(p) {
            return Ok((p.clone(), None));
        }
        match self.kind {
            Kind::Torus { .. } => {
                let mut coords = p.coords.clone();
                let mut lattice = vec![0i32; coords.len()];
                for i in 0..coords.len() {
                    let shift = coords[i].floor();
                    coords[i] -= shift;
                    // floor can leave exactly 1.0 behind for tiny negatives
                    if coords[i] >= 1.0 {
                        coords[i] -= 1.0;
                        lattice[i] -= 1;
                    }
                    lattice[i] -= shift as i32;
                }
                let mv = ChartMove { from: 0, to: 0, lattice: Some(lattice) };
                Ok((ChartPoint { chart: 0, coords }, Some(mv)))
            }
            Kind::Sphere2 => {
                let target = 1 - p.chart;
                let q = self.transition(p, target)?;
                Ok((q, Some(ChartMove { from: p.chart, to: target, lattice: None })))
            }
        }
    }

    /// Express a point in another chart of the atlas.
    pub fn transition(&self, p: &ChartPoint, target: usize) -> Result<ChartPoint> {
        match self.kind {
            Kind::Torus { .. } => {
                if target != 0 || p.chart != 0 {
                    return Err(Error::UnsupportedManifold(format!("torus chart {target}")));
                }
                Ok(p.clone())
            }
            Kind::Sphere2 => {
                if target >= 2 || p.chart >= 2 {
                    return Err(Error::UnsupportedManifold(format!("sphere chart {target}")));
                }
                if target == p.chart {
                    return Ok(p.clone());
                }
                let r2 = p.coords.norm_squared();
                if r2 < 1e-24 {
                    return Err(Error::ChartEscape { chart: target, radius: f64::INFINITY });
                }
                let coords = DVector::from_vec(vec![p.coords[0] / r2, -p.coords[1] / r2]);
                Ok(ChartPoint { chart: target, coords })
            }
        }
    }

    /// Jacobian ∂x'/∂x of [`transition`](Self::transition).
    pub fn transition_jacobian(&self, p: &ChartPoint, target: usize) -> Result<DMatrix<f64>> {
        match self.kind {
            Kind::Torus { dim } => {
                if target != 0 {
                    return Err(Error::UnsupportedManifold(format!("torus chart {target}")));
                }
                Ok(DMatrix::identity(dim, dim))
            }
            Kind::Sphere2 => {
                if target == p.chart {
                    return Ok(DMatrix::identity(2, 2));
                }
                let (x, y) = (p.coords[0], p.coords[1]);
                let r2 = x * x + y * y;
                if r2 < 1e-24 {
                    return Err(Error::ChartEscape { chart: target, radius: f64::INFINITY });
                }
                let r4 = r2 * r2;
                Ok(DMatrix::from_row_slice(2, 2, &[
                    (r2 - 2.0 * x * x) / r4,
                    -2.0 * x * y / r4,
                    2.0 * x * y / r4,
                    (2.0 * y * y - r2) / r4,
                ]))
            }
        }
    }

    /// Distance in chart coordinates; minimal-image on tori, and the second
    /// point is re-charted first when the two disagree on the sphere.
    pub fn base_distance(&self, a: &ChartPoint, b: &ChartPoint) -> f64 {
        match self.kind {
            Kind::Torus { .. } => {
                let mut acc = 0.0;
                for i in 0..a.dim() {
                    let mut d = (a.coords[i] - b.coords[i]).rem_euclid(1.0);
                    if d > 0.5 {
                        d = 1.0 - d;
                    }
                    acc += d * d;
                }
                acc.sqrt()
            }
            Kind::Sphere2 => {
                if a.chart == b.chart {
                    (&a.coords - &b.coords).norm()
                } else {
                    match self.transition(b, a.chart) {
                        Ok(b_in_a) => (&a.coords - &b_in_a.coords).norm(),
                        // b sits at the far pole of a's chart
                        Err(_) => f64::INFINITY,
                    }
                }
            }
        }
    }

    /// Shift `coords` by whole lattice vectors to the representative nearest
    /// `reference` (torus only; identity elsewhere).  Used for unwinding
    /// trajectories into the universal cover.
    pub fn nearest_image(&self, reference: &DVector<f64>, coords: &DVector<f64>) -> DVector<f64> {
        match self.kind {
            Kind::Torus { .. } => {
                let mut out = coords.clone();
                for i in 0..out.len() {
                    out[i] -= (out[i] - reference[i]).round();
                }
                out
            }
            Kind::Sphere2 => coords.clone(),
        }
    }

    /// Deterministic low-discrepancy sample of chart points covering the
    /// manifold.  Sphere samples alternate charts, filling each chart disk up
    /// to past the equator so the two together cover everything.
    pub fn sample(&self, count: usize) -> Vec<ChartPoint> {
        match self.kind {
            Kind::Torus { dim } => (0..count)
                .map(|i| ChartPoint { chart: 0, coords: DVector::from_vec(halton(i, dim)) })
                .collect(),
            Kind::Sphere2 => (0..count)
                .map(|i| {
                    let h = halton(i / 2, 2);
                    let r = 1.4 * h[0].sqrt();
                    let th = std::f64::consts::TAU * h[1];
                    ChartPoint {
                        chart: i % 2,
                        coords: DVector::from_vec(vec![r * th.cos(), r * th.sin()]),
                    }
                })
                .collect(),
        }
    }

    /// cos of the polar angle at a sphere point (chart 0 is centered on the
    /// south pole θ = π).  Errors on tori.
    pub fn sphere_cos_theta(&self, p: &ChartPoint) -> Result<f64> {
        match self.kind {
            Kind::Sphere2 => {
                let rho = p.coords.norm_squared();
                let c = (rho - 1.0) / (rho + 1.0);
                Ok(if p.chart == 0 { c } else { -c })
            }
            _ => Err(Error::UnsupportedManifold("cos θ is sphere-only".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::central_diff_4;
    use approx::assert_relative_eq;

    #[test]
    fn torus_wrap_records_lattice_offsets() {
        let m = ManifoldModel::torus(2).unwrap();
        let p = ChartPoint::new(0, vec![1.25, -0.125]);
        let (q, mv) = m.normalize(&p).unwrap();
        assert_relative_eq!(q.coords[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(q.coords[1], 0.875, epsilon = 1e-15);
        assert_eq!(mv.unwrap().lattice, Some(vec![-1, 1]));
        let inside = ChartPoint::new(0, vec![0.5, 0.5]);
        assert!(m.normalize(&inside).unwrap().1.is_none());
    }

    #[test]
    fn torus_distance_is_minimal_image() {
        let m = ManifoldModel::torus(2).unwrap();
        let a = ChartPoint::new(0, vec![0.95, 0.5]);
        let b = ChartPoint::new(0, vec![0.05, 0.5]);
        assert_relative_eq!(m.base_distance(&a, &b), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn sphere_transitions_are_mutually_inverse_on_the_overlap() {
        let m = ManifoldModel::sphere2();
        for p in m.sample(60) {
            let r = p.coords.norm();
            if !(0.5..=2.0).contains(&r) {
                continue;
            }
            let q = m.transition(&p, 1 - p.chart).unwrap();
            let back = m.transition(&q, p.chart).unwrap();
            assert!(
                (&back.coords - &p.coords).norm() < 1e-12,
                "round trip moved the point by {}",
                (&back.coords - &p.coords).norm()
            );
        }
    }

    #[test]
    fn sphere_transition_jacobian_matches_finite_differences() {
        let m = ManifoldModel::sphere2();
        let p = ChartPoint::new(0, vec![1.3, -0.7]);
        let jac = m.transition_jacobian(&p, 1).unwrap();
        for row in 0..2 {
            for col in 0..2 {
                let fd = central_diff_4(
                    |x: &DVector<f64>| {
                        let q = ChartPoint { chart: 0, coords: x.clone() };
                        m.transition(&q, 1).unwrap().coords[row]
                    },
                    &p.coords,
                    col,
                    1e-5,
                );
                assert_relative_eq!(jac[(row, col)], fd, epsilon = 1e-6);
            }
        }
        // Orientation is preserved across the handover.
        assert!(jac.determinant() > 0.0);
    }

    #[test]
    fn sphere_normalize_switches_far_points() {
        let m = ManifoldModel::sphere2();
        let p = ChartPoint::new(0, vec![2.5, 0.0]);
        let (q, mv) = m.normalize(&p).unwrap();
        assert_eq!(q.chart, 1);
        assert_relative_eq!(q.coords[0], 0.4, epsilon = 1e-15);
        assert_eq!(mv.unwrap().to, 1);
        // The switch lands well inside the partner chart, so no flapping.
        assert!(!m.needs_normalization(&q));
    }

    #[test]
    fn sphere_cos_theta_hits_poles_and_equator() {
        let m = ManifoldModel::sphere2();
        let south = ChartPoint::new(0, vec![0.0, 0.0]);
        let north = ChartPoint::new(1, vec![0.0, 0.0]);
        let equator = ChartPoint::new(0, vec![1.0, 0.0]);
        assert_relative_eq!(m.sphere_cos_theta(&south).unwrap(), -1.0);
        assert_relative_eq!(m.sphere_cos_theta(&north).unwrap(), 1.0);
        assert_relative_eq!(m.sphere_cos_theta(&equator).unwrap(), 0.0);
    }

    #[test]
    fn chart_escape_is_reported() {
        let m = ManifoldModel::sphere2();
        let p = ChartPoint::new(0, vec![5.0, 0.0]);
        assert!(matches!(m.normalize(&p), Err(Error::ChartEscape { .. })));
    }
}
