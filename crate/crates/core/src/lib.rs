//! Magnetic (twisted) cotangent dynamics on a small catalog of model manifolds.
//!
//! The phase space is T*M with the twisted symplectic form
//!
//! ```text
//!     ω = Σ dp_i ∧ dq_i + π*σ
//! ```
//!
//! where σ is a closed 2-form on the base ("the magnetic field") and the
//! Hamiltonian is kinetic, H(q, p) = ½ g^{ij} p_i p_j.  The crate provides
//!
//! * chart-based geometry for flat tori and the round 2-sphere, with metric
//!   and field evaluation, compatibility analysis of σ against g, and gauge
//!   shifts σ ↦ σ − dα ([`geometry`]);
//! * the Hamiltonian vector field of the twisted structure, a symplectic
//!   integrator, and the low-energy rescaling X_ε → X₀ onto the unit
//!   cotangent bundle ([`dynamics`]);
//! * Poincaré sections, Newton shooting for periodic orbits, Floquet
//!   multipliers, and orbit classification ([`orbits`]);
//! * Betti-number bookkeeping, Morse–Bott inequality checks, orbit-count
//!   bounds, and the symplectic splitting of twisted tori ([`topology`]).
//!
//! Sign convention, used consistently everywhere: the Hamiltonian vector
//! field is defined by ω(X_H, ·) = −dH, which in chart coordinates reads
//! q̇^i = g^{ij} p_j and ṗ_i = −∂H/∂q_i + σ_ij q̇^j.  With this choice a
//! positive field strength on a surface rotates the momentum clockwise and
//! the fiber winding of a simple cyclotron loop is −1.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod orbits;
pub mod topology;

pub use error::{Error, Result};
