//! The energy sweep: seed, shoot, classify, and compare against the
//! topological orbit-count prediction, one level at a time.
//!
//! Per-seed failures are data, not errors — a seed that drifts off, never
//! returns to its section, or lands on a degenerate direction is recorded
//! with its diagnostic and the sweep continues.  Only configuration
//! problems abort a run.

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use maglab_core::dynamics::{convergence_probe, PhasePoint, ProbeReport, SphereBundlePoint};
use maglab_core::geometry::{compatibility_check, ChartPoint, CompatibilityReport};
use maglab_core::orbits::{
    dedup, floquet, newton_shoot, seed_grid, seed_orbits, FloquetData, PeriodicOrbit, WindingCall,
};
use maglab_core::topology::{catalog_topology, predict_bound, BoundReport};

use crate::config::ExperimentConfig;

pub const REPORT_VERSION: u32 = 1;

/// One orbit class surviving deduplication, with its stability data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub seed_index: usize,
    pub period: f64,
    pub winding: WindingCall,
    pub closure_residual: f64,
    pub projection_center: ChartPoint,
    pub projection_diameter: f64,
    pub newton_iterations: usize,
    pub start: PhasePoint,
    /// Absent when the multiplier computation itself failed; the orbit
    /// then counts as degenerate.
    pub floquet: Option<FloquetData>,
}

/// A seed that produced no orbit, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub error: String,
}

/// Counts and orbit data for a single energy level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCensus {
    pub energy: f64,
    pub seeds_tried: usize,
    pub converged: usize,
    pub deduplicated: usize,
    /// Classes whose projected loop winds the fiber exactly once.
    pub winding_once: usize,
    pub nondegenerate: usize,
    pub nondegenerate_winding_once: usize,
    /// Several distinct classes, none of them nondegenerate: the level
    /// carries a continuous family and individual counts are meaningless.
    pub degenerate_family: bool,
    pub predicted_min_orbits: u64,
    /// Comparison on the nondegenerate winding-once count; absent when a
    /// degenerate family makes the comparison inapplicable.
    pub bound_satisfied: Option<bool>,
    /// Same comparison on the raw winding-once class count.
    pub total_count_satisfies_bound: Option<bool>,
    /// Some deduplicated class did not wind once — the seed sweep caught
    /// orbits outside the regime the prediction talks about.
    pub count_discrepancy: bool,
    pub orbits: Vec<OrbitRecord>,
    pub failures: Vec<SeedFailure>,
}

/// Everything a run produces, in deterministic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub version: u32,
    pub system: String,
    pub manifold: String,
    pub bundle_trivial: bool,
    pub compatibility: CompatibilityReport,
    pub bound: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeReport>,
    pub levels: Vec<EnergyCensus>,
    /// Largest swept energy at which the bound comparison held — an
    /// empirical stand-in for the unquantified smallness threshold.
    pub largest_energy_bound_held: Option<f64>,
}

pub fn run_census(cfg: &ExperimentConfig) -> anyhow::Result<CensusReport> {
    if cfg.run.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build()
            .context("cannot build worker pool")?;
        pool.install(|| census_inner(cfg))
    } else {
        census_inner(cfg)
    }
}

fn census_inner(cfg: &ExperimentConfig) -> anyhow::Result<CensusReport> {
    let sys = cfg.build_system()?;
    let manifold_name = cfg.system.manifold.clone();

    let compatibility = compatibility_check(
        sys.metric(),
        sys.sigma(),
        sys.manifold(),
        cfg.tolerances.compatibility_samples,
        cfg.tolerances.compatibility,
    )
    .map_err(|e| anyhow::anyhow!("compatibility sweep failed: {e}"))?;

    let topo = catalog_topology(&manifold_name)
        .map_err(|e| anyhow::anyhow!("no topology data: {e}"))?;
    // Catalog rule: the unit bundle is a product exactly over T².
    let bundle_trivial = manifold_name == "t2";
    let bound = predict_bound(&topo.betti, bundle_trivial, Some(topo.cup_length))
        .map_err(|e| anyhow::anyhow!("orbit-count prediction failed: {e}"))?;

    let probe = match &cfg.probe {
        Some(p) => Some(run_probe(cfg, &sys, &p.eps, p.samples)?),
        None => None,
    };

    let orbit_cfg = cfg.orbit_config();
    let grid = seed_grid(&sys, cfg.census.grid);
    let mut levels = Vec::with_capacity(cfg.census.energies.len());
    for &energy in &cfg.census.energies {
        levels.push(census_level(
            &sys,
            energy,
            &grid,
            cfg,
            &orbit_cfg,
            bound.predicted_min_orbits,
        )?);
    }

    let largest_energy_bound_held = levels
        .iter()
        .filter(|l| l.bound_satisfied == Some(true))
        .map(|l| l.energy)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));

    Ok(CensusReport {
        version: REPORT_VERSION,
        system: cfg.system_label(),
        manifold: manifold_name,
        bundle_trivial,
        compatibility,
        bound,
        probe,
        levels,
        largest_energy_bound_held,
    })
}

fn census_level(
    sys: &maglab_core::dynamics::MagneticSystem,
    energy: f64,
    grid: &[ChartPoint],
    cfg: &ExperimentConfig,
    orbit_cfg: &maglab_core::orbits::OrbitConfig,
    predicted: u64,
) -> anyhow::Result<EnergyCensus> {
    let seeds = seed_orbits(sys, energy, grid, cfg.census.phases)
        .map_err(|e| anyhow::anyhow!("seeding energy {energy} failed: {e}"))?;
    let seeds_tried = seeds.len();

    // Shots run in parallel; the indexed collect keeps seed order, so the
    // reduction below is identical at any thread count.
    let shots: Vec<(usize, Result<PeriodicOrbit, String>)> = seeds
        .par_iter()
        .map(|seed| (seed.index, newton_shoot(sys, seed, orbit_cfg).map_err(|e| e.to_string())))
        .collect();

    let mut converged_orbits = Vec::new();
    let mut failures = Vec::new();
    for (seed_index, shot) in shots {
        match shot {
            Ok(orbit) => converged_orbits.push(orbit),
            Err(error) => failures.push(SeedFailure { seed_index, error }),
        }
    }
    let converged = converged_orbits.len();

    let unique = dedup(sys, &converged_orbits, cfg.tolerances.dedup_space)
        .map_err(|e| anyhow::anyhow!("deduplication at energy {energy} failed: {e}"))?;

    let mut orbits = Vec::with_capacity(unique.len());
    for orbit in &unique {
        let fl = match floquet(sys, orbit, orbit_cfg, cfg.tolerances.floquet) {
            Ok(f) => Some(f),
            Err(e) => {
                failures.push(SeedFailure {
                    seed_index: orbit.seed_index,
                    error: format!("multipliers: {e}"),
                });
                None
            }
        };
        orbits.push(OrbitRecord {
            seed_index: orbit.seed_index,
            period: orbit.period,
            winding: orbit.winding.clone(),
            closure_residual: orbit.closure_residual,
            projection_center: orbit.projection_center.clone(),
            projection_diameter: orbit.projection_diameter,
            newton_iterations: orbit.newton_iterations,
            start: orbit.start.clone(),
            floquet: fl,
        });
    }

    let deduplicated = orbits.len();
    let winding_once = orbits.iter().filter(|o| o.winding.winds_once()).count();
    let is_nondeg =
        |o: &&OrbitRecord| o.floquet.as_ref().map_or(false, |f| f.nondegenerate);
    let nondegenerate = orbits.iter().filter(is_nondeg).count();
    let nondegenerate_winding_once =
        orbits.iter().filter(is_nondeg).filter(|o| o.winding.winds_once()).count();
    let degenerate_family = deduplicated >= 2 && nondegenerate == 0;
    let (bound_satisfied, total_count_satisfies_bound) = if degenerate_family {
        (None, None)
    } else {
        (
            Some(nondegenerate_winding_once as u64 >= predicted),
            Some(winding_once as u64 >= predicted),
        )
    };

    Ok(EnergyCensus {
        energy,
        seeds_tried,
        converged,
        deduplicated,
        winding_once,
        nondegenerate,
        nondegenerate_winding_once,
        degenerate_family,
        predicted_min_orbits: predicted,
        bound_satisfied,
        total_count_satisfies_bound,
        count_discrepancy: winding_once != deduplicated,
        orbits,
        failures,
    })
}

/// Verify the rescaled family against its fiber-rotation limit over a
/// fixed low-discrepancy sample of unit covectors.
pub fn run_probe(
    cfg: &ExperimentConfig,
    sys: &maglab_core::dynamics::MagneticSystem,
    eps: &[f64],
    samples: usize,
) -> anyhow::Result<ProbeReport> {
    let _ = cfg;
    let bases = sys.manifold().sample(samples.max(1));
    let n = sys.dim();
    let mut points = Vec::with_capacity(bases.len());
    for (i, base) in bases.into_iter().enumerate() {
        // Spread directions deterministically: rotate through coordinate
        // planes as the sample index advances.
        let mut dir = vec![0.0; n];
        dir[i % n] = 1.0;
        dir[(i + 1) % n] = 0.7;
        let y = SphereBundlePoint::unit(sys, base, dir)
            .map_err(|e| anyhow::anyhow!("probe sample {i}: {e}"))?;
        points.push(y);
    }
    convergence_probe(sys, eps, &points)
        .map_err(|e| anyhow::anyhow!("convergence probe failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
version = 1

[system]
manifold = "t2"

[system.sigma]
kind = "constant_surface"
b = 1.0

[census]
energies = [0.02]
grid = 1
phases = 1

[integrator]
step = 1e-3
{extra}
"#
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn uniform_field_level_reports_a_degenerate_family_when_two_classes_survive() {
        // One seed gives one class; bump phases to get two distinct starts.
        let mut cfg = tiny_config("");
        cfg.census.phases = 2;
        cfg.census.grid = 2;
        let report = run_census(&cfg).unwrap();
        assert_eq!(report.version, REPORT_VERSION);
        assert!(report.compatibility.compatible);
        assert_eq!(report.bound.predicted_min_orbits, 4);
        let level = &report.levels[0];
        assert!(level.converged > 0, "failures: {:?}", level.failures);
        assert!(level.nondegenerate <= level.deduplicated);
        if level.deduplicated >= 2 {
            assert!(level.degenerate_family);
            assert_eq!(level.bound_satisfied, None);
            assert_eq!(report.largest_energy_bound_held, None);
        }
        for orbit in &level.orbits {
            assert!(orbit.winding.winds_once());
            assert!(orbit.closure_residual <= 1e-8);
        }
    }

    #[test]
    fn empty_energy_list_yields_a_valid_report_with_no_levels() {
        let mut cfg = tiny_config("");
        cfg.census.energies.clear();
        let report = run_census(&cfg).unwrap();
        assert!(report.levels.is_empty());
        assert_eq!(report.largest_energy_bound_held, None);
    }

    #[test]
    fn seeds_that_cannot_return_are_recorded_not_fatal() {
        // One gyration takes 2π; a 5-second budget cuts every shot off.
        let text = r#"
version = 1

[system]
manifold = "t2"

[system.sigma]
kind = "constant_surface"
b = 1.0

[census]
energies = [0.02]
grid = 1
phases = 1

[shooting]
max_time = 5.0
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let report = run_census(&cfg).unwrap();
        let level = &report.levels[0];
        assert_eq!(level.converged, 0);
        assert_eq!(level.failures.len(), level.seeds_tried);
        assert!(level.failures[0].error.to_lowercase().contains("return"));
        assert_eq!(level.bound_satisfied, Some(false));
    }
}
