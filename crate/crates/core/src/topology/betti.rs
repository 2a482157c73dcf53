//! Betti numbers of the catalog manifolds and of their unit sphere bundles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Betti numbers b_0 … b_dim of a closed manifold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector(pub Vec<u64>);

impl BettiVector {
    pub fn new(betti: Vec<u64>) -> Self {
        BettiVector(betti)
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// SB = Σ b_i.
    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn euler(&self) -> i64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }

    /// b_i = b_{dim−i}, which every closed orientable manifold satisfies.
    pub fn is_poincare_symmetric(&self) -> bool {
        let n = self.0.len();
        (0..n).all(|i| self.0[i] == self.0[n - 1 - i])
    }
}

/// Topological data carried by a catalog manifold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyInfo {
    pub betti: BettiVector,
    pub euler: i64,
    /// Cup-length of the base (longest nontrivial product in positive-degree
    /// cohomology).
    pub cup_length: u32,
}

/// Betti numbers, Euler characteristic, and cup-length by manifold name.
pub fn catalog_topology(name: &str) -> Result<TopologyInfo> {
    let (betti, cup_length) = match name {
        "t2" => (vec![1, 2, 1], 2),
        "t3" => (vec![1, 3, 3, 1], 3),
        "t4" => (vec![1, 4, 6, 4, 1], 4),
        "s2" => (vec![1, 0, 1], 1),
        other => return Err(Error::UnsupportedManifold(other.to_string())),
    };
    let betti = BettiVector::new(betti);
    let euler = betti.euler();
    Ok(TopologyInfo { betti, euler, cup_length })
}

/// Betti numbers of the unit cotangent bundle E over a base with χ ≠ 0,
/// where the Euler class kills the fiber contribution in the Gysin sequence:
///
/// ```text
///     b_i(E) = β_i        for 0 ≤ i ≤ n−1,
///     b_i(E) = β_{i−n+1}  for n ≤ i ≤ 2n−1.
/// ```
pub fn sphere_bundle_betti(base: &BettiVector) -> Result<BettiVector> {
    let n = base.dim();
    if base.euler() == 0 {
        return Err(Error::HypothesisViolated(format!(
            "sphere-bundle Betti formula needs χ ≠ 0, got χ = 0 for base of dimension {n}"
        )));
    }
    let mut b = vec![0u64; 2 * n];
    for (i, slot) in b.iter_mut().enumerate() {
        *slot = if i <= n - 1 { base.0[i] } else { base.0[i - n + 1] };
    }
    Ok(BettiVector::new(b))
}
