//! Versioned experiment configuration.
//!
//! One TOML file describes a run end to end: the system, the energy sweep,
//! integrator and shooting knobs, tolerances, and an optional rescaling
//! probe.  Unknown keys are rejected so a misspelled tolerance cannot
//! silently fall back to a default.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use maglab_core::dynamics::{IntegratorConfig, MagneticSystem};
use maglab_core::geometry::{ManifoldModel, MagneticTwoForm, MetricField, TrigPoly};
use maglab_core::orbits::OrbitConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub system: SystemConfig,
    pub census: CensusConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub shooting: ShootingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Catalog manifold name: "t2", "t3", "t4", or "s2".
    pub manifold: String,
    /// Defaults to the natural metric of the manifold: flat on tori,
    /// round on the sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    pub sigma: SigmaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    Flat,
    RoundSphere,
    DiagTrig { coefficients: Vec<TrigPoly> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaConfig {
    /// b · dx∧dy on T².
    ConstantSurface { b: f64 },
    /// b(x, y) · dx∧dy on T² with a trigonometric coefficient.
    SurfaceTrig { b: TrigPoly },
    /// b₁ dx₁∧dx₂ + b₂ dx₃∧dx₄ on T⁴.
    Torus4Blocks { b1: f64, b2: f64 },
    /// (c₀ + c₁ cos θ) · dA on S².
    AreaScaled { constant: f64, cos_theta: f64 },
    /// Arbitrary constant antisymmetric coefficient matrix on a torus.
    ConstantMatrix { entries: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusConfig {
    /// Energy levels, swept in the order given.
    pub energies: Vec<f64>,
    /// Seed-grid resolution per base axis.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Momentum phases per grid point.
    #[serde(default = "default_phases")]
    pub phases: usize,
}

fn default_grid() -> usize {
    4
}

fn default_phases() -> usize {
    2
}

/// Shooting stage knobs; every field mirrors its orbit-search default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    pub max_time: f64,
    pub min_transit: f64,
    pub capture_radius: Option<f64>,
    pub fd_step: f64,
    pub fixpoint_tol: f64,
    pub max_iter: usize,
    pub singular_tol: f64,
    pub winding_tol: f64,
    pub loop_samples: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        let base = OrbitConfig::default();
        ShootingConfig {
            max_time: base.max_time,
            min_transit: base.min_transit,
            capture_radius: base.capture_radius,
            fd_step: base.fd_step,
            fixpoint_tol: base.fixpoint_tol,
            max_iter: base.max_iter,
            singular_tol: base.singular_tol,
            winding_tol: base.winding_tol,
            loop_samples: base.loop_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Floquet multipliers closer to 1 than this mark the orbit degenerate.
    pub floquet: f64,
    /// Pointwise phase distance under which two loops are the same orbit.
    pub dedup_space: f64,
    /// Relative eigenvalue spread accepted by the compatibility check.
    pub compatibility: f64,
    /// Base points sampled by the compatibility check.
    pub compatibility_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            floquet: 1e-4,
            dedup_space: 1e-3,
            compatibility: 1e-6,
            compatibility_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Strictly decreasing positive rescaling parameters, at least three.
    pub eps: Vec<f64>,
    #[serde(default = "default_probe_samples")]
    pub samples: usize,
}

fn default_probe_samples() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads for the shooting stage; 0 keeps the library default.
    pub threads: usize,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { threads: 0, out_dir: "out".into() }
    }
}

impl ExperimentConfig {
    /// Parse and validate; parse failures keep the position information
    /// the TOML reader reports.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).context("configuration does not parse")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("config version {} unsupported (expected {CONFIG_VERSION})", self.version);
        }
        if self.census.energies.iter().any(|&e| !(e > 0.0)) {
            bail!("census energies must all be positive");
        }
        if self.census.grid == 0 || self.census.phases == 0 {
            bail!("census grid and phases must be at least 1");
        }
        let t = &self.tolerances;
        if !(t.floquet > 0.0 && t.dedup_space > 0.0 && t.compatibility > 0.0) {
            bail!("tolerances must all be positive");
        }
        let s = &self.shooting;
        if !(s.fixpoint_tol > 0.0 && s.fd_step > 0.0 && s.max_time > 0.0 && s.winding_tol > 0.0) {
            bail!("shooting parameters must be positive");
        }
        if s.loop_samples < 64 {
            bail!("loop_samples must be at least 64");
        }
        if let Some(p) = &self.probe {
            if p.eps.len() < 3 {
                bail!("probe needs at least three eps values");
            }
        }
        self.build_system().map(|_| ())
    }

    /// Instantiate the configured system, re-running the geometric
    /// pairing checks of the core constructor.
    pub fn build_system(&self) -> anyhow::Result<MagneticSystem> {
        let manifold = ManifoldModel::from_name(&self.system.manifold)
            .with_context(|| format!("unknown manifold {:?}", self.system.manifold))?;
        let metric = match &self.system.metric {
            None if manifold.is_torus() => MetricField::Flat,
            None => MetricField::RoundSphere,
            Some(MetricConfig::Flat) => MetricField::Flat,
            Some(MetricConfig::RoundSphere) => MetricField::RoundSphere,
            Some(MetricConfig::DiagTrig { coefficients }) => {
                MetricField::DiagTrig(coefficients.clone())
            }
        };
        let sigma = match &self.system.sigma {
            SigmaConfig::ConstantSurface { b } => MagneticTwoForm::constant_surface(*b),
            SigmaConfig::SurfaceTrig { b } => MagneticTwoForm::surface_trig(b.clone()),
            SigmaConfig::Torus4Blocks { b1, b2 } => MagneticTwoForm::torus4_blocks(*b1, *b2),
            SigmaConfig::AreaScaled { constant, cos_theta } => {
                MagneticTwoForm::AreaScaled { constant: *constant, cos_theta: *cos_theta }
            }
            SigmaConfig::ConstantMatrix { entries } => {
                MagneticTwoForm::ConstantMatrix { entries: entries.clone() }
            }
        };
        MagneticSystem::new(manifold, metric, sigma)
            .map_err(|e| anyhow::anyhow!("invalid system: {e}"))
    }

    /// The orbit-search configuration assembled from the integrator,
    /// shooting, and tolerance sections.
    pub fn orbit_config(&self) -> OrbitConfig {
        let s = &self.shooting;
        OrbitConfig {
            integrator: self.integrator,
            max_time: s.max_time,
            min_transit: s.min_transit,
            capture_radius: s.capture_radius,
            fd_step: s.fd_step,
            fixpoint_tol: s.fixpoint_tol,
            max_iter: s.max_iter,
            singular_tol: s.singular_tol,
            winding_tol: s.winding_tol,
            loop_samples: s.loop_samples,
        }
    }

    /// Short human-readable tag for reports: manifold plus field kind.
    pub fn system_label(&self) -> String {
        let sigma = match &self.system.sigma {
            SigmaConfig::ConstantSurface { .. } => "constant-surface",
            SigmaConfig::SurfaceTrig { .. } => "surface-trig",
            SigmaConfig::Torus4Blocks { .. } => "torus4-blocks",
            SigmaConfig::AreaScaled { .. } => "area-scaled",
            SigmaConfig::ConstantMatrix { .. } => "constant-matrix",
        };
        format!("{}/{sigma}", self.system.manifold)
    }
}
