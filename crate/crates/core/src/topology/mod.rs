//! Betti data for the model manifolds, sphere-bundle cohomology, critical
//! point inequalities, and the exact symplectic splitting of twisted covers.

mod betti;
mod bound;
mod morse;
mod split;

pub use betti::{catalog_topology, sphere_bundle_betti, BettiVector, TopologyInfo};
pub use bound::{predict_bound, BoundBranch, BoundReport};
pub use morse::{
    check_morse_bott, summed_conclusion_from_total, InequalityCheck, MorseBottCensus,
    MorseBottReport,
};
pub use split::{torus_split, twisted_form_matrix, SymplecticSplit};
