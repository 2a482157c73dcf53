//! `maglab` — run orbit censuses, convergence probes, symplectic splits,
//! and topology checks from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use maglab_core::topology::{
    catalog_topology, predict_bound, sphere_bundle_betti, torus_split, BettiVector, BoundReport,
    SymplecticSplit, TopologyInfo,
};
use maglab_harness::census::run_census;
use maglab_harness::config::ExperimentConfig;
use maglab_harness::report::{all_bounds_hold, emit_report, OutputFormat};

#[derive(Parser)]
#[command(name = "maglab", version, about = "Magnetic-flow orbit census toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured energy sweep and write report files.
    ///
    /// Exits 0 when every bound comparison is satisfied or inapplicable,
    /// 2 when some level fails its comparison, 1 on execution errors.
    Census {
        config: PathBuf,
        /// Worker threads for the shooting stage (overrides the config).
        #[arg(long)]
        threads: Option<usize>,
        /// Report directory (overrides the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::All)]
        format: Format,
    },
    /// Split a twisted symplectic form given by its integer coefficient
    /// matrix (whitespace-separated rows, # comments allowed).
    Split { matrix_file: PathBuf },
    /// Compare the rescaled family against its fiber-rotation limit.
    Probe {
        config: PathBuf,
        /// Where to write probe.json; omit to print to stdout only.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print Betti data, the unit-bundle answer where it applies, and the
    /// orbit-count prediction for a catalog manifold.
    CheckTopology { manifold: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    All,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Table => OutputFormat::Table,
            Format::All => OutputFormat::All,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Census { config, threads, out_dir, format } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = threads {
                cfg.run.threads = n;
            }
            if let Some(dir) = out_dir {
                cfg.run.out_dir = dir.display().to_string();
            }
            let report = run_census(&cfg)?;

            println!("system {} on {}", report.system, report.manifold);
            println!(
                "compatibility: {} (worst spread {:.3e})",
                if report.compatibility.compatible { "ok" } else { "VIOLATED" },
                report.compatibility.worst_spread,
            );
            println!("predicted minimum orbits: {}", report.bound.predicted_min_orbits);
            for level in &report.levels {
                let verdict = match level.bound_satisfied {
                    Some(true) => "bound satisfied",
                    Some(false) => "BOUND NOT MET",
                    None => "bound not applicable (degenerate family)",
                };
                println!(
                    "energy {:>12}: {} classes ({} nondegenerate winding-once) — {}",
                    level.energy, level.deduplicated, level.nondegenerate_winding_once, verdict,
                );
            }
            if let Some(e) = report.largest_energy_bound_held {
                println!("largest energy with the bound held: {e}");
            }

            let written = emit_report(&report, Path::new(&cfg.run.out_dir), format.into())?;
            for path in &written {
                println!("wrote {}", path.display());
            }
            Ok(if all_bounds_hold(&report) { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Split { matrix_file } => {
            let text = std::fs::read_to_string(&matrix_file)
                .with_context(|| format!("cannot read {}", matrix_file.display()))?;
            let rows = parse_matrix(&text)?;
            let n = rows.len();
            let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            let split =
                torus_split(&a).map_err(|e| anyhow::anyhow!("split failed: {e}"))?;
            let summary = SplitSummary {
                input: rows,
                half_rank: split.half_rank,
                dim_w1: split.dim_w1(),
                congruence_residual: split.congruence_residual(&a),
                split,
            };
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Probe { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let probe_cfg = cfg
                .probe
                .as_ref()
                .context("config has no [probe] section")?;
            let sys = cfg.build_system()?;
            let report =
                maglab_harness::census::run_probe(&cfg, &sys, &probe_cfg.eps, probe_cfg.samples)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
                let path = dir.join("probe.json");
                let mut text = serde_json::to_string_pretty(&report)?;
                text.push('\n');
                std::fs::write(&path, text)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckTopology { manifold } => {
            let topology = catalog_topology(&manifold)
                .map_err(|e| anyhow::anyhow!("unknown manifold: {e}"))?;
            let sphere_bundle = if topology.euler != 0 {
                Some(sphere_bundle_betti(&topology.betti).map_err(|e| anyhow::anyhow!("{e}"))?)
            } else {
                None
            };
            let bundle_trivial = manifold == "t2";
            // Odd-dimensional bases carry no orbit-count prediction.
            let bound =
                predict_bound(&topology.betti, bundle_trivial, Some(topology.cup_length)).ok();
            let summary =
                TopologySummary { manifold, topology, sphere_bundle, bundle_trivial, bound };
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct SplitSummary {
    input: Vec<Vec<f64>>,
    half_rank: usize,
    dim_w1: usize,
    congruence_residual: f64,
    split: SymplecticSplit,
}

#[derive(Serialize)]
struct TopologySummary {
    manifold: String,
    topology: TopologyInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    sphere_bundle: Option<BettiVector>,
    bundle_trivial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<BoundReport>,
}

/// Square matrix from whitespace-separated rows; blank lines and lines
/// starting with '#' are skipped.
fn parse_matrix(text: &str) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .with_context(|| format!("line {}: bad entry {tok:?}", lineno + 1))
            })
            .collect::<anyhow::Result<_>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        anyhow::bail!("matrix file is empty");
    }
    if rows.iter().any(|r| r.len() != n) {
        anyhow::bail!("matrix must be square ({n} rows, so {n} entries per row)");
    }
    Ok(rows)
}
