//! Twisted Hamiltonian dynamics: the form, the kinetic Hamiltonian and its
//! field, an energy-tracking implicit-midpoint integrator, and the blown-up
//! field family on the unit sphere bundle.

mod integrate;
mod rescale;
mod system;

pub use integrate::{integrate, IntegratorConfig, Stepper, StepperState, Trajectory};
pub use rescale::{
    convergence_probe, limit_field, limit_flow, rescaled_field, rescaled_field_general,
    tangency_defect, BundleVector, FiberHamiltonian, FitResult, ProbeReport, SphereBundlePoint,
};
pub use system::{MagneticSystem, PhasePoint, Workspace};
