use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run depends on. Loaded from a single JSON document; missing
/// fields take their defaults and command-line flags override both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub grid_size: usize,
    pub fd_step: f64,
    pub richardson: bool,
    pub quotient_tol: f64,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub restarts: usize,
    /// Threshold on the strong-form EL residual of the profile.
    pub residual_tol: f64,
    /// Threshold on the max relative PDE residual of `Ψ`.
    pub pde_tol: f64,
    pub homogeneity_tol: f64,
    pub symmetry_tol: f64,
    pub pde_samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub m_max: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit: EmitGrid,
}

/// `(ρ, s)` grid for `psi.csv`: `ρ` log-spaced, `s` uniform in `[-s_max, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_count: usize,
    pub s_max: f64,
    pub s_count: usize,
}

impl Default for EmitGrid {
    fn default() -> Self {
        Self {
            rho_min: 0.25,
            rho_max: 4.0,
            rho_count: 41,
            s_max: 1.5,
            s_count: 61,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1,
            grid_size: 200,
            fd_step: 1e-4,
            richardson: true,
            quotient_tol: 1e-10,
            max_iter: 500,
            newton_tol: 1e-12,
            restarts: 2,
            residual_tol: 1e-8,
            pde_tol: 1e-4,
            homogeneity_tol: 1e-10,
            symmetry_tol: 1e-12,
            pde_samples: 50,
            t_min: 2.0,
            t_max: 1e30,
            samples: 200,
            m_max: 5,
            seed: 0,
            output_dir: PathBuf::from("out"),
            emit: EmitGrid::default(),
        }
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub grid_size: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub m_max: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.grid_size {
            self.grid_size = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.t_min {
            self.t_min = v;
        }
        if let Some(v) = o.t_max {
            self.t_max = v;
        }
        if let Some(v) = o.m_max {
            self.m_max = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.grid_size < 8 {
            return bad(format!("grid size must be at least 8, got {}", self.grid_size));
        }
        let tolerances = [
            ("fd_step", self.fd_step),
            ("quotient_tol", self.quotient_tol),
            ("newton_tol", self.newton_tol),
            ("residual_tol", self.residual_tol),
            ("pde_tol", self.pde_tol),
            ("homogeneity_tol", self.homogeneity_tol),
            ("symmetry_tol", self.symmetry_tol),
        ];
        for (name, value) in tolerances {
            if !(value > 0.0 && value.is_finite()) {
                return bad(format!("{name} must be positive, got {value}"));
            }
        }
        if !(1.0 < self.t_min && self.t_min < self.t_max && self.t_max.is_finite()) {
            return bad(format!("need 1 < t_min < t_max, got {} and {}", self.t_min, self.t_max));
        }
        if self.pde_samples == 0 || self.samples == 0 {
            return bad("sample counts must be positive".into());
        }
        let e = &self.emit;
        if !(0.0 < e.rho_min && e.rho_min <= e.rho_max) || e.rho_count == 0 || e.s_count == 0 {
            return bad("invalid emit grid".into());
        }
        if !(0.0 <= e.s_max && e.s_max < std::f64::consts::FRAC_PI_2) {
            return bad(format!("emit s_max must lie in [0, π/2), got {}", e.s_max));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn flags_override_file_values() {
        let mut c: RunConfig = serde_json::from_str(r#"{"n": 2, "grid_size": 64, "seed": 9}"#).unwrap();
        assert_eq!((c.n, c.grid_size, c.seed, c.m_max), (2, 64, 9, 5));
        c.apply(&Overrides {
            grid_size: Some(100),
            m_max: Some(3),
            ..Overrides::default()
        });
        assert_eq!((c.n, c.grid_size, c.seed, c.m_max), (2, 100, 9, 3));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cases = [
            r#"{"grid_size": 4}"#,
            r#"{"n": 0}"#,
            r#"{"t_min": 1.0}"#,
            r#"{"t_min": 10.0, "t_max": 5.0}"#,
            r#"{"pde_tol": -1.0}"#,
        ];
        for case in cases {
            let c: RunConfig = serde_json::from_str(case).unwrap();
            assert!(c.validate().is_err(), "{case}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"unknown": 1}"#).is_err());
    }
}
