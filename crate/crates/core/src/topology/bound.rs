//! Predicted lower bounds on the number of periodic orbits at a fixed low
//! energy level, from the topology of the base alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::betti::{sphere_bundle_betti, BettiVector};

/// Which case of the counting theorem applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundBranch {
    /// Unit bundle is a product (among the catalog bases: exactly T²).
    TrivialBundle,
    /// χ(M) = 0 but the bundle is not trivial; the count improves by one.
    EulerZeroNontrivial,
    /// χ(M) ≠ 0; the bundle Betti numbers come from the Gysin formula.
    EulerNonzero,
}

/// Orbit-count prediction for one base manifold.
///
/// `predicted_min_orbits` is the proven bound.  `conjectured_min_orbits`
/// restates the stronger conjectural count m·SB(M); it is reported for
/// comparison only and is never asserted anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub branch: BoundBranch,
    pub sb_base: u64,
    pub sb_total_space: u64,
    pub predicted_min_orbits: u64,
    /// CL(M) + m when the cup-length of the base is known.
    pub cup_length_bound: Option<u64>,
    pub conjectured_min_orbits: u64,
}

/// Compute the predicted orbit count for a base with Betti numbers `base`
/// of even dimension n = 2m.  `bundle_trivial` must be supplied by the
/// caller (for the catalog it holds exactly on T²), and `cup_length` when
/// known.
pub fn predict_bound(
    base: &BettiVector,
    bundle_trivial: bool,
    cup_length: Option<u32>,
) -> Result<BoundReport> {
    let n = base.dim();
    if n % 2 != 0 || n == 0 {
        return Err(Error::OddDimension { dim: n });
    }
    let m = (n / 2) as u64;
    let sb_base = base.sum();
    let chi = base.euler();

    let (branch, sb_total_space, predicted) = if bundle_trivial {
        (BoundBranch::TrivialBundle, 2 * sb_base, sb_base)
    } else if chi == 0 {
        (BoundBranch::EulerZeroNontrivial, 2 * sb_base, sb_base + 1)
    } else {
        let sb_e = sphere_bundle_betti(base)?.sum();
        (BoundBranch::EulerNonzero, sb_e, sb_e / 2 + 1)
    };

    Ok(BoundReport {
        branch,
        sb_base,
        sb_total_space,
        predicted_min_orbits: predicted,
        cup_length_bound: cup_length.map(|cl| cl as u64 + m),
        conjectured_min_orbits: m * sb_base,
    })
}
