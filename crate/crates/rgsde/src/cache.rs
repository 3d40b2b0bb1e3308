//! Scenario cache: per-scenario CSV files plus a manifest keyed by a hash
//! of everything that determines the scenarios. A stale manifest forces
//! regeneration rather than silent reuse.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scenario::{ScenarioPath, VolatilityControl, VolatilitySpec};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

/// 17-significant-digit rendering: round-trips every finite f64 exactly.
pub fn render_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub format_version: u32,
    pub sigma_lo_sq: f64,
    pub sigma_hi_sq: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub control_labels: Vec<String>,
    pub master_seed: u64,
    pub n_paths: usize,
    /// hash over all fields above plus every control's theta path
    pub hash: String,
}

pub fn cache_key_hash(
    spec: &VolatilitySpec,
    grid: &TimeGrid,
    controls: &[VolatilityControl],
    master_seed: u64,
    n_paths: usize,
) -> String {
    let mut hasher = Sha256::new();
    let mut text = String::new();
    let _ = write!(
        text,
        "v{FORMAT_VERSION};{};{};{};{};seed={master_seed};paths={n_paths}",
        render_f64(spec.sigma_lo_sq),
        render_f64(spec.sigma_hi_sq),
        render_f64(grid.horizon),
        grid.n_steps,
    );
    for c in controls {
        let _ = write!(text, ";{}:", c.label);
        for v in &c.theta_sq {
            let _ = write!(text, "{},", render_f64(*v));
        }
    }
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

pub fn build_manifest(
    spec: &VolatilitySpec,
    grid: &TimeGrid,
    controls: &[VolatilityControl],
    master_seed: u64,
    n_paths: usize,
) -> CacheManifest {
    CacheManifest {
        format_version: FORMAT_VERSION,
        sigma_lo_sq: spec.sigma_lo_sq,
        sigma_hi_sq: spec.sigma_hi_sq,
        horizon: grid.horizon,
        n_steps: grid.n_steps,
        control_labels: controls.iter().map(|c| c.label.clone()).collect(),
        master_seed,
        n_paths,
        hash: cache_key_hash(spec, grid, controls, master_seed, n_paths),
    }
}

/// Scenario cache root: RGSDE_CACHE_DIR when set, otherwise
/// `<out_dir>/scenarios`.
pub fn cache_root(out_dir: &Path) -> PathBuf {
    match std::env::var_os("RGSDE_CACHE_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => out_dir.join("scenarios"),
    }
}

pub fn scenario_file_name(control_label: &str, scenario_index: u64) -> String {
    format!("scenario_{control_label}_{scenario_index:05}.csv")
}

/// Writes one scenario as `t,B,QV,theta_sq` rows; theta_sq is left blank
/// on the final node, which carries no further step.
pub fn write_scenario_csv(path: &Path, scenario: &ScenarioPath, grid: &TimeGrid) -> Result<()> {
    let n = grid.n_steps;
    let mut out = String::from("t,B,QV,theta_sq\n");
    for i in 0..=n {
        let theta = if i < n {
            render_f64(scenario.d_qv[i] / grid.dt)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{theta}",
            render_f64(grid.nodes[i]),
            render_f64(scenario.b[i]),
            render_f64(scenario.qv[i]),
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a scenario back; increments are recovered by differencing the
/// exactly-rendered node values.
pub fn read_scenario_csv(
    path: &Path,
    grid: &TimeGrid,
    control_label: &str,
    seed: u64,
) -> Result<ScenarioPath> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("t,B,QV,theta_sq") => {}
        other => {
            return Err(Error::Config(format!(
                "{}: unexpected scenario header {other:?}",
                path.display()
            )));
        }
    }
    let mut b = Vec::with_capacity(grid.n_steps + 1);
    let mut qv = Vec::with_capacity(grid.n_steps + 1);
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!(
                "{}: row {row} has {} fields, expected 4",
                path.display(),
                fields.len()
            )));
        }
        let parse = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "{}: row {row}: cannot parse {name} value '{s}'",
                    path.display()
                ))
            })
        };
        b.push(parse(fields[1], "B")?);
        qv.push(parse(fields[2], "QV")?);
    }
    if b.len() != grid.n_steps + 1 {
        return Err(Error::Config(format!(
            "{}: {} rows for a grid with {} nodes",
            path.display(),
            b.len(),
            grid.n_steps + 1
        )));
    }
    let d_b = b.windows(2).map(|w| w[1] - w[0]).collect();
    let d_qv = qv.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ScenarioPath {
        d_b,
        d_qv,
        b,
        qv,
        control_label: control_label.to_string(),
        seed,
    })
}

pub fn write_manifest(dir: &Path, manifest: &CacheManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Option<CacheManifest>> {
    let path = dir.join(MANIFEST_NAME);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let manifest: CacheManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(Some(manifest))
}

/// True when the directory's manifest matches the wanted key exactly.
pub fn cache_is_valid(dir: &Path, wanted: &CacheManifest) -> Result<bool> {
    match read_manifest(dir)? {
        Some(found) => Ok(found == *wanted),
        None => Ok(false),
    }
}
