//! Base-manifold geometry: charts, metrics, magnetic 2-forms, compatibility.

pub mod fields;
pub mod manifold;
pub mod spectrum;
pub mod trig;

pub use fields::{
    gauge_shift, two_cycle_integrals, CycleIntegral, DerivativeMode, MagneticTwoForm, MetricField,
    OneForm,
};
pub use manifold::{ChartMove, ChartPoint, ManifoldModel};
pub use spectrum::{compatibility_check, lorentz_tensor, skew_spectrum, CompatibilityReport, SkewSpectrum};
pub use trig::{Phase, TrigPoly, TrigTerm};
