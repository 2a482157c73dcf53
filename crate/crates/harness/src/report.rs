//! Report emission: a structured JSON document plus flat tables for
//! external plotting.
//!
//! Everything is rendered through deterministic formatting — shortest
//! round-trip float representations, fixed field order, no timestamps —
//! so the same report always produces the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::census::{CensusReport, EnergyCensus, OrbitRecord};
use maglab_core::geometry::ChartPoint;
use maglab_core::orbits::WindingCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Table,
    All,
}

/// Write the selected renditions into `out_dir`, creating it if needed.
/// Returns the paths written, in a fixed order.
pub fn emit_report(
    report: &CensusReport,
    out_dir: &Path,
    format: OutputFormat,
) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Json | OutputFormat::All) {
        let path = out_dir.join("report.json");
        std::fs::write(&path, render_json(report)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Table | OutputFormat::All) {
        let path = out_dir.join("census.tsv");
        std::fs::write(&path, render_table(report))
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
        let path = out_dir.join("orbits.txt");
        std::fs::write(&path, render_orbits(report))
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

pub fn render_json(report: &CensusReport) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(report).context("report does not serialize")?;
    text.push('\n');
    Ok(text)
}

/// One row per energy level; booleans as yes/no, inapplicable comparisons
/// as "n/a".
pub fn render_table(report: &CensusReport) -> String {
    let mut out = String::new();
    out.push_str(
        "energy\tseeds\tconverged\tdeduplicated\twinding_once\tnondegenerate\t\
         nondeg_winding_once\tdegenerate_family\tpredicted\tbound_satisfied\t\
         total_satisfies\tdiscrepancy\tfailures\n",
    );
    for level in &report.levels {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            level.energy,
            level.seeds_tried,
            level.converged,
            level.deduplicated,
            level.winding_once,
            level.nondegenerate,
            level.nondegenerate_winding_once,
            yes_no(level.degenerate_family),
            level.predicted_min_orbits,
            opt_yes_no(level.bound_satisfied),
            opt_yes_no(level.total_count_satisfies_bound),
            yes_no(level.count_discrepancy),
            level.failures.len(),
        );
    }
    out
}

/// One line per orbit class, commented header describing the columns.
pub fn render_orbits(report: &CensusReport) -> String {
    let mut out = String::new();
    out.push_str("# orbit classes per energy level, one per line\n");
    out.push_str(
        "# columns: energy, period, winding, seed, newton_iters, closure_residual, \
         center, diameter, start, multipliers\n",
    );
    out.push_str("# winding: signed fiber turn count, or ?(rotation) when unclassified\n");
    out.push_str("# center/start points: chart index, then coordinates, comma-separated\n");
    out.push_str("# multipliers: re+im i pairs sorted by modulus, or - when unavailable\n");
    for level in &report.levels {
        for orbit in &level.orbits {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                level.energy,
                orbit.period,
                winding_text(&orbit.winding),
                orbit.seed_index,
                orbit.newton_iterations,
                orbit.closure_residual,
                point_text(&orbit.projection_center),
                orbit.projection_diameter,
                phase_text(orbit),
                multiplier_text(orbit),
            );
        }
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn opt_yes_no(b: Option<bool>) -> &'static str {
    match b {
        Some(v) => yes_no(v),
        None => "n/a",
    }
}

fn winding_text(w: &WindingCall) -> String {
    match w {
        WindingCall::Winds { turns } => format!("{turns}"),
        WindingCall::Unclassified { rotation } => format!("?({rotation})"),
    }
}

fn point_text(p: &ChartPoint) -> String {
    let mut s = format!("{}", p.chart);
    for c in p.coords.iter() {
        let _ = write!(s, ",{c}");
    }
    s
}

fn phase_text(orbit: &OrbitRecord) -> String {
    let mut s = point_text(&orbit.start.base);
    for m in orbit.start.momentum.iter() {
        let _ = write!(s, ",{m}");
    }
    s
}

fn multiplier_text(orbit: &OrbitRecord) -> String {
    match &orbit.floquet {
        None => "-".into(),
        Some(f) => {
            let mut s = String::new();
            for (i, (re, im)) in f.multipliers.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{re}{im:+}i");
            }
            s
        }
    }
}

/// True when every bound comparison in the report is satisfied or marked
/// inapplicable — the census subcommand's success condition.
pub fn all_bounds_hold(report: &CensusReport) -> bool {
    report.levels.iter().all(|l: &EnergyCensus| l.bound_satisfied != Some(false))
}
