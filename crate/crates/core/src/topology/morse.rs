//! Morse–Bott inequalities for circle-valued censuses on the unit bundle.
//!
//! The census lists μ_i = number of critical circles of index i of an
//! auxiliary Morse–Bott function on the (2k+1)-dimensional total space E.
//! All checks run in exact integer arithmetic; the summed conclusion is
//! stated with halves, so it is compared after clearing denominators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::betti::BettiVector;

/// μ_0 … μ_{2k+1}: counts of critical circles by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseBottCensus(pub Vec<u64>);

impl MorseBottCensus {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// One checked inequality with its slack (negative slack = violation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub label: String,
    pub lhs: i64,
    pub rhs: i64,
    pub satisfied: bool,
}

impl InequalityCheck {
    fn geq(label: String, lhs: i64, rhs: i64) -> Self {
        InequalityCheck { label, lhs, rhs, satisfied: lhs >= rhs }
    }

    pub fn slack(&self) -> i64 {
        self.lhs - self.rhs
    }
}

/// All per-index inequalities, the two refinements, and the summed
/// conclusion for one census against the Betti numbers of E.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseBottReport {
    pub stepwise: Vec<InequalityCheck>,
    pub refinements: Vec<InequalityCheck>,
    /// 2·Σμ_i ≥ SB(E) + μ_0 + μ_{2k}, cleared of halves.
    pub summed: InequalityCheck,
    pub all_satisfied: bool,
}

/// Check μ_i + μ_{i−1} ≥ b_i for all i, the refinements μ_1 ≥ b_1 and
/// μ_{2k−1} ≥ b_{2k}, and the summed conclusion
/// Σμ_i ≥ SB(E)/2 + (μ_0 + μ_{2k})/2.
pub fn check_morse_bott(census: &MorseBottCensus, bundle_betti: &BettiVector) -> Result<MorseBottReport> {
    let dim_e = bundle_betti.dim();
    if dim_e % 2 == 0 || dim_e < 3 {
        return Err(Error::HypothesisViolated(format!(
            "unit bundle must have odd dimension ≥ 3, got {dim_e}"
        )));
    }
    if census.0.len() != dim_e + 1 {
        return Err(Error::DimensionMismatch { expected: dim_e + 1, got: census.0.len() });
    }
    let two_k = dim_e - 1;
    let mu = |i: usize| census.0[i] as i64;
    let b = |i: usize| bundle_betti.0[i] as i64;

    let mut stepwise = Vec::new();
    for i in 0..=dim_e {
        let lhs = mu(i) + if i > 0 { mu(i - 1) } else { 0 };
        stepwise.push(InequalityCheck::geq(format!("mu[{i}]+mu[{}] >= b[{i}]", i.wrapping_sub(1)), lhs, b(i)));
    }
    let refinements = vec![
        InequalityCheck::geq("mu[1] >= b[1]".into(), mu(1), b(1)),
        InequalityCheck::geq(
            format!("mu[{}] >= b[{}]", two_k - 1, two_k),
            mu(two_k - 1),
            b(two_k),
        ),
    ];
    let summed = InequalityCheck::geq(
        "2*total >= SB(E) + mu[0] + mu[2k]".into(),
        2 * census.total() as i64,
        bundle_betti.sum() as i64 + mu(0) + mu(two_k),
    );
    let all_satisfied = stepwise.iter().chain(refinements.iter()).all(|c| c.satisfied) && summed.satisfied;
    Ok(MorseBottReport { stepwise, refinements, summed, all_satisfied })
}

/// The summed conclusion alone, for a census known only by total count.
///
/// Any Morse–Bott function attains a minimum and a maximum, so μ_0 ≥ 1 and
/// μ_{2k} ≥ 1 may be assumed; the check is then
/// `total ≥ SB(E)/2 + 1` in cleared form.
pub fn summed_conclusion_from_total(total: u64, bundle_betti: &BettiVector) -> InequalityCheck {
    InequalityCheck::geq(
        "2*total >= SB(E) + 2".into(),
        2 * total as i64,
        bundle_betti.sum() as i64 + 2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::betti::{catalog_topology, sphere_bundle_betti};

    #[test]
    fn sphere_census_attains_the_bound_exactly() {
        // Height-like function on the unit bundle of S²: μ = (1, 0, 1, 0)
        // against b(E) = (1, 0, 0, 1).  The summed conclusion
        // Σμ = 2 ≥ SB(E)/2 + (μ_0 + μ_2)/2 = 1 + 1 holds with zero slack.
        let b_e = sphere_bundle_betti(&catalog_topology("s2").unwrap().betti).unwrap();
        let census = MorseBottCensus(vec![1, 0, 1, 0]);
        let report = check_morse_bott(&census, &b_e).unwrap();
        assert!(report.all_satisfied);
        assert_eq!(report.summed.slack(), 0, "bound should be exactly attained");
    }

    #[test]
    fn a_missing_circle_is_caught() {
        let b_e = sphere_bundle_betti(&catalog_topology("s2").unwrap().betti).unwrap();
        let census = MorseBottCensus(vec![1, 0, 0, 0]);
        let report = check_morse_bott(&census, &b_e).unwrap();
        assert!(!report.all_satisfied);
        assert!(!report.summed.satisfied);
        // The top inequality μ_3 + μ_2 ≥ b_3 = 1 also fails.
        assert!(!report.stepwise[3].satisfied);
    }

    #[test]
    fn census_length_is_validated() {
        let b_e = sphere_bundle_betti(&catalog_topology("s2").unwrap().betti).unwrap();
        let census = MorseBottCensus(vec![1, 0, 1]);
        assert!(matches!(
            check_morse_bott(&census, &b_e),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn total_only_conclusion_matches_the_full_check() {
        let b_e = sphere_bundle_betti(&catalog_topology("s2").unwrap().betti).unwrap();
        assert!(summed_conclusion_from_total(2, &b_e).satisfied);
        assert!(!summed_conclusion_from_total(1, &b_e).satisfied);
    }
}
