use std::path::{Path, PathBuf};

use cryamabe_core::heisenberg::FdOptions;
use cryamabe_core::ode::{MassTerm, ReducedOde, SolveOptions, INTERIOR_S_MAX};
use cryamabe_core::rng::SeedStream;
use cryamabe_core::singular::{
    calibrate_kappa, export_grid, symmetry_defect, verify_homogeneity, verify_pde, HomogeneityReport,
    ResidualStats, SampleOptions, SingularSolution,
};
use cryamabe_core::spectrum::{
    assemble_second_variation, bifurcation_values, mode_eigenvalues, morse_threshold, CrossingEntry, ScanOptions,
    REFINED_EIGENVALUES,
};
use cryamabe_core::{Error, Execution};
use serde::Serialize;

use crate::artifacts::{fmt_float, read_json, write_csv, write_json, SolutionArtifact};
use crate::{CliError, RunConfig};

const HOMOGENEITY_TRIALS: usize = 100;
const SYMMETRY_TRIALS: usize = 100;

fn sample_options(config: &RunConfig) -> SampleOptions {
    SampleOptions {
        samples: config.pde_samples,
        fd: FdOptions::new(config.fd_step, config.richardson),
        ..SampleOptions::default()
    }
}

pub fn solution_path(config: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.join("solution.json"))
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    stage: &'a str,
    error: String,
    iterations: Option<usize>,
    history: Vec<f64>,
}

fn fail(config: &RunConfig, stage: &str, e: Error) -> CliError {
    let (iterations, history) = match &e {
        Error::NonConvergence { iterations, history, .. } => (Some(*iterations), history.clone()),
        _ => (None, Vec::new()),
    };
    let diag = Diagnostic {
        stage,
        error: e.to_string(),
        iterations,
        history,
    };
    if let Err(io) = write_json(&config.output_dir.join("diagnostic.json"), &diag) {
        return io;
    }
    CliError::Numerical(format!("{stage}: {e}"))
}

/// Solves the profile, calibrates `κ`, writes `profile.csv` and `solution.json`.
pub fn solve(config: &RunConfig) -> Result<SolutionArtifact, CliError> {
    let ode = ReducedOde::build(config.n, config.grid_size, MassTerm::QuarterNSquared)?;
    let opts = SolveOptions {
        quotient_tol: config.quotient_tol,
        max_iter: config.max_iter,
        newton_tol: config.newton_tol,
        restarts: config.restarts,
        seed: config.seed,
        ..SolveOptions::default()
    };
    let profile = ode.solve(&opts).map_err(|e| fail(config, "solve", e))?;
    let seeds = SeedStream::new(config.seed);
    let calibration = calibrate_kappa(&profile, &sample_options(config), &seeds, Execution::Parallel)
        .map_err(|e| fail(config, "calibrate", e))?;

    let dv = profile.derivative();
    let rows: Vec<Vec<Option<String>>> = (0..profile.size())
        .map(|i| {
            vec![
                Some(fmt_float(profile.grid.nodes()[i])),
                Some(fmt_float(profile.values[i])),
                Some(fmt_float(dv[i])),
            ]
        })
        .collect();
    write_csv(&config.output_dir.join("profile.csv"), "s,v,dv", &rows)?;
    let artifact = SolutionArtifact::new(&profile, calibration, config.seed);
    write_json(&config.output_dir.join("solution.json"), &artifact)?;
    Ok(artifact)
}

fn load_solution(path: &Path) -> Result<SingularSolution, CliError> {
    let artifact: SolutionArtifact = read_json(path)?;
    let profile = artifact.profile(path)?;
    SingularSolution::new(profile, artifact.kappa)
        .map_err(|e| CliError::Usage(format!("{}: corrupt artifact: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub kappa: f64,
    pub el_residual: f64,
    /// Over `|s| ≤ 1.5`; this is what `el_pass` tests.
    pub el_residual_interior: f64,
    pub el_pass: bool,
    pub pde: ResidualStats,
    pub pde_pass: bool,
    /// Both exponent signs; the pass flag tests `Ψ ∘ δ_λ = λ^{-n} Ψ`.
    pub homogeneity: HomogeneityReport,
    pub homogeneity_pass: bool,
    pub symmetry_defect: f64,
    pub symmetry_pass: bool,
    pub passed: bool,
}

/// Checks a stored solution and writes `verify.json`; fails with exit 1 if
/// any threshold of the config is missed.
pub fn verify(config: &RunConfig, solution: &Path) -> Result<VerifyReport, CliError> {
    let sol = load_solution(solution)?;
    let seeds = SeedStream::new(config.seed);
    let ode = ReducedOde::for_profile(sol.profile());
    let el_residual = ode.el_residual(&sol.profile().values);
    let el_residual_interior = ode.interior_el_residual(&sol.profile().values, INTERIOR_S_MAX);
    let pde = verify_pde(&sol, &sample_options(config), &seeds, Execution::Parallel)?;
    let homogeneity = verify_homogeneity(&sol, HOMOGENEITY_TRIALS, &seeds)?;
    let symmetry = symmetry_defect(&sol, SYMMETRY_TRIALS, &seeds)?;
    let mut report = VerifyReport {
        kappa: sol.kappa(),
        el_residual,
        el_residual_interior,
        el_pass: el_residual_interior < config.residual_tol,
        pde,
        pde_pass: pde.max < config.pde_tol,
        homogeneity,
        homogeneity_pass: homogeneity.negative_exponent < config.homogeneity_tol,
        symmetry_defect: symmetry,
        symmetry_pass: symmetry < config.symmetry_tol,
        passed: false,
    };
    report.passed = report.el_pass && report.pde_pass && report.homogeneity_pass && report.symmetry_pass;
    write_json(&config.output_dir.join("verify.json"), &report)?;
    if !report.passed {
        let mut failed = Vec::new();
        for (flag, name) in [
            (report.el_pass, "el_residual"),
            (report.pde_pass, "pde"),
            (report.homogeneity_pass, "homogeneity"),
            (report.symmetry_pass, "symmetry"),
        ] {
            if !flag {
                failed.push(name);
            }
        }
        return Err(CliError::Numerical(format!("verification failed: {}", failed.join(", "))));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub n: usize,
    pub grid_size: usize,
    pub fd_mismatch: f64,
    pub lowest_betas: Vec<f64>,
    pub negative_betas: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Every candidate passed the sign-change and bisection checks.
    pub crossings: Vec<CrossingEntry>,
    pub crossings_in_range: usize,
    /// Smallest `T` with index at least `k`, for `k = 1..=10`.
    pub morse_thresholds: Vec<Option<f64>>,
    pub morse_nondecreasing: bool,
}

#[derive(Serialize)]
struct ScanFailure {
    error: String,
    fd_mismatch: Option<f64>,
}

/// Second variation, mode spectrum and singular periods of a stored solution.
pub fn scan(config: &RunConfig, solution: &Path) -> Result<ScanReport, CliError> {
    let sol = load_solution(solution)?;
    let seeds = SeedStream::new(config.seed);
    let scan_json = config.output_dir.join("scan.json");
    let form = match assemble_second_variation(sol.profile(), &seeds) {
        Ok(f) => f,
        Err(e) => {
            let fd_mismatch = match e {
                Error::FdMismatch { mismatch } => Some(mismatch),
                _ => None,
            };
            write_json(
                &scan_json,
                &ScanFailure {
                    error: e.to_string(),
                    fd_mismatch,
                },
            )?;
            return Err(e.into());
        }
    };
    let spec = mode_eigenvalues(&form)?;
    let opts = ScanOptions {
        m_max: config.m_max,
        t_min: config.t_min,
        t_max: config.t_max,
        samples: config.samples,
        ..ScanOptions::default()
    };
    let report = match bifurcation_values(&form, &spec, &opts, Execution::Parallel) {
        Ok(r) => r,
        Err(e) => {
            write_json(
                &scan_json,
                &ScanFailure {
                    error: e.to_string(),
                    fd_mismatch: None,
                },
            )?;
            return Err(e.into());
        }
    };

    let lowest: Vec<f64> = spec.betas.iter().take(REFINED_EIGENVALUES).copied().collect();
    let mut rows: Vec<Vec<Option<String>>> = lowest
        .iter()
        .enumerate()
        .map(|(j, b)| vec![Some("0".into()), Some(j.to_string()), Some(fmt_float(*b)), None])
        .collect();
    rows.extend(report.entries.iter().map(|e| {
        vec![
            Some(e.m.to_string()),
            Some(e.j.to_string()),
            Some(fmt_float(e.beta)),
            Some(fmt_float(e.t_star)),
        ]
    }));
    write_csv(&config.output_dir.join("spectrum.csv"), "m,j,beta,Tstar", &rows)?;
    let morse_rows: Vec<Vec<Option<String>>> = report
        .morse_curve
        .iter()
        .map(|(t, k)| vec![Some(fmt_float(*t)), Some(k.to_string())])
        .collect();
    write_csv(&config.output_dir.join("morse.csv"), "T,morse_index", &morse_rows)?;

    let out = ScanReport {
        n: form.n(),
        grid_size: form.size(),
        fd_mismatch: form.fd_mismatch(),
        negative_betas: spec.negative().map(|(_, b)| b).collect(),
        lowest_betas: lowest,
        t_min: config.t_min,
        t_max: config.t_max,
        crossings_in_range: report
            .entries
            .iter()
            .filter(|e| config.t_min < e.t_star && e.t_star < config.t_max)
            .count(),
        crossings: report.entries,
        morse_thresholds: (1..=10).map(|k| morse_threshold(&spec, k)).collect(),
        morse_nondecreasing: report.morse_curve.windows(2).all(|w| w[0].1 <= w[1].1),
    };
    write_json(&scan_json, &out)?;
    Ok(out)
}

/// Samples `Ψ` on the configured `(ρ, s)` grid into `psi.csv`.
pub fn emit(config: &RunConfig, solution: &Path) -> Result<usize, CliError> {
    let sol = load_solution(solution)?;
    let e = &config.emit;
    let spaced = |count: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..count)
            .map(|k| f(if count > 1 { k as f64 / (count - 1) as f64 } else { 0.5 }))
            .collect()
    };
    let (la, lb) = (e.rho_min.ln(), e.rho_max.ln());
    let rhos = spaced(e.rho_count, &|x| (la + x * (lb - la)).exp());
    let ss = spaced(e.s_count, &|x| -e.s_max + 2.0 * e.s_max * x);
    let rows: Vec<Vec<Option<String>>> = export_grid(&sol, &rhos, &ss)?
        .iter()
        .map(|r| r.iter().map(|v| Some(fmt_float(*v))).collect())
        .collect();
    write_csv(&config.output_dir.join("psi.csv"), "rho,s,psi", &rows)?;
    Ok(rows.len())
}
