//! Periodic-orbit search on a fixed energy level: Poincaré sections,
//! Newton shooting from limit-dynamics seeds, Floquet data, and
//! deduplication.

mod classify;
mod floquet;
mod section;
mod shoot;

pub use classify::{dedup, fiber_winding, loop_geometry, WindingCall};
pub use floquet::{floquet, FloquetData};
pub use section::{return_map, OrbitConfig, SectionSpec};
pub use shoot::{newton_shoot, seed_grid, seed_orbits, PeriodicOrbit, Seed};
