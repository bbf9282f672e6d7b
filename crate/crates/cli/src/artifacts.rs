//! On-disk formats. Every file is written once, through a temporary file in
//! the same directory followed by a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cryamabe_core::ode::{build_grid, MassTerm, SolutionProfile};
use cryamabe_core::singular::Calibration;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("artifact");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| CliError::io(&tmp, e))?;
    file.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: corrupt artifact: {e}", path.display())))
}

/// A CSV with one header row; empty cells are written for `None`.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<Option<String>>]) -> Result<(), CliError> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<&str> = row.iter().map(|c| c.as_deref().unwrap_or("")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Contents of `solution.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionArtifact {
    pub n: usize,
    pub grid_size: usize,
    pub mass: MassTerm,
    pub seed: u64,
    pub quotient: f64,
    pub el_residual: f64,
    pub symmetry_defect: f64,
    pub kappa: f64,
    pub calibration: Calibration,
    /// Normalised quotient per minimisation iteration.
    pub history: Vec<f64>,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl SolutionArtifact {
    pub fn new(profile: &SolutionProfile, calibration: Calibration, seed: u64) -> Self {
        Self {
            n: profile.n,
            grid_size: profile.size(),
            mass: profile.mass,
            seed,
            quotient: profile.quotient,
            el_residual: profile.el_residual,
            symmetry_defect: profile.symmetry_defect,
            kappa: calibration.kappa,
            calibration,
            history: profile.history.clone(),
            nodes: profile.grid.nodes().to_vec(),
            values: profile.values.clone(),
        }
    }

    /// Rebuilds the profile on a fresh grid, checking that the stored nodes
    /// belong to it.
    pub fn profile(&self, path: &Path) -> Result<SolutionProfile, CliError> {
        let corrupt = |why: &str| CliError::Usage(format!("{}: corrupt artifact: {why}", path.display()));
        if self.values.len() != self.grid_size || self.nodes.len() != self.grid_size {
            return Err(corrupt("node count does not match grid_size"));
        }
        let grid = build_grid(self.n, self.grid_size).map_err(|e| corrupt(&e.to_string()))?;
        let mismatch = grid
            .nodes()
            .iter()
            .zip(&self.nodes)
            .any(|(a, b)| (a - b).abs() > 1e-12);
        if mismatch {
            return Err(corrupt("nodes do not match the grid"));
        }
        if self.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(corrupt("profile values must be positive"));
        }
        Ok(SolutionProfile {
            n: self.n,
            mass: self.mass,
            grid: Arc::new(grid),
            values: self.values.clone(),
            quotient: self.quotient,
            el_residual: self.el_residual,
            symmetry_defect: self.symmetry_defect,
            history: self.history.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&path, "x,y", &[vec![Some("1".into()), None]]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x,y\n1,\n");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }
}
