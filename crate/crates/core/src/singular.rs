//! The homogeneous singular solution `Ψ = κ ρ^{-n} v̄(s)` on `H^n \ {0}` and
//! its numerical verification.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cylinder::{angular_coordinate, sample_annulus, AXIS_EXCLUSION};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::heisenberg::{dilate, koranyi_norm, sublaplacian_fd, FdOptions, HeisenbergPoint};
use crate::ode::SolutionProfile;
use crate::rng::{Purpose, SeedStream};

/// Where the PDE is sampled and how it is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub samples: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Bound on `|s|`, keeping the stencils away from the `t`-axis.
    pub s_max: f64,
    pub fd: FdOptions,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            samples: 50,
            rho_min: 0.5,
            rho_max: 2.0,
            s_max: 1.2,
            fd: FdOptions::new(1e-4, true),
        }
    }
}

/// Largest relative spread of `-Δu/u^{1+2/n}` accepted by [`calibrate_kappa`].
pub const RATIO_SPREAD_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SingularSolution {
    profile: SolutionProfile,
    kappa: f64,
}

impl SingularSolution {
    pub fn new(profile: SolutionProfile, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { profile, kappa })
    }

    pub fn n(&self) -> usize {
        self.profile.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn profile(&self) -> &SolutionProfile {
        &self.profile
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.profile.clone(), kappa)
    }

    /// `v̄(s)` by barycentric interpolation of the node values.
    pub fn profile_value(&self, s: f64) -> f64 {
        self.profile.grid.evaluate(&self.profile.values, s)
    }

    /// `Ψ(p) = κ ρ(p)^{-n} v̄(s(p))`.
    pub fn evaluate(&self, p: &HeisenbergPoint) -> Result<f64> {
        evaluate_field(&self.profile, self.kappa, p)
    }

    /// `-ΔΨ = Ψ^{1+2/n}` pointwise residual `|ΔΨ + Ψ^q| / Ψ^q`.
    pub fn relative_residual(&self, p: &HeisenbergPoint, fd: FdOptions) -> Result<f64> {
        let ratio = pde_ratio(&self.profile, self.kappa, p, fd)?;
        Ok((ratio - 1.0).abs())
    }
}

fn evaluate_field(profile: &SolutionProfile, kappa: f64, p: &HeisenbergPoint) -> Result<f64> {
    let rho = koranyi_norm(p);
    if rho == 0.0 {
        return Err(Error::Domain("Ψ is singular at the origin"));
    }
    if p.z_norm_sq() == 0.0 {
        return Err(Error::DegenerateAxis);
    }
    let s = angular_coordinate(p);
    if s.abs() > AXIS_EXCLUSION {
        return Err(Error::DegenerateAxis);
    }
    let v = profile.grid.evaluate(&profile.values, s);
    Ok(kappa * rho.powi(-(profile.n as i32)) * v)
}

/// `-Δu / u^{1+2/n}` at `p` for `u = κ ρ^{-n} v̄`.
fn pde_ratio(profile: &SolutionProfile, kappa: f64, p: &HeisenbergPoint, fd: FdOptions) -> Result<f64> {
    let u0 = evaluate_field(profile, kappa, p)?;
    let f = |q: &HeisenbergPoint| evaluate_field(profile, kappa, q).unwrap_or(f64::NAN);
    let lap = sublaplacian_fd(&f, p, fd);
    if !lap.is_finite() {
        return Err(Error::DegenerateAxis);
    }
    let q = 1.0 + 2.0 / profile.n as f64;
    Ok(-lap / u0.powf(q))
}

fn sample_points(seeds: &SeedStream, purpose: Purpose, n: usize, opts: &SampleOptions) -> Vec<HeisenbergPoint> {
    (0..opts.samples)
        .map(|i| {
            let mut rng = seeds.rng(purpose, i as u64);
            sample_annulus(&mut rng, n, opts.rho_min, opts.rho_max, opts.s_max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kappa: f64,
    /// Least-squares constant `c` in `-Δu = c u^{1+2/n}` for `u = ρ^{-n} v̄`.
    pub ratio_mean: f64,
    /// `(max - min) / mean` of the pointwise ratios.
    pub ratio_spread: f64,
    /// Mean of `-ΔΨ/Ψ^{1+2/n}` after calibration, recomputed from scratch.
    pub calibrated_mean: f64,
}

/// Finds `κ` with `-Δ(κ u) = (κ u)^{1+2/n}` for `u = ρ^{-n} v̄` from the
/// measured constant `c` in `-Δu = c u^{1+2/n}`: `κ = c^{n/2}`.
///
/// For an EL-normalised profile the constant is `4 · n/(2(n+1))`, the factor
/// 4 coming from `Σ(X² + Y²)` acting on `ρ^{-n} v(s)`, so
/// `κ = (2n/(n+1))^{n/2}`; this value is not used, only measured.
pub fn calibrate_kappa(
    profile: &SolutionProfile,
    opts: &SampleOptions,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<Calibration> {
    if opts.samples == 0 {
        return Err(Error::InvalidParameter("calibration needs at least one sample".into()));
    }
    let points = sample_points(seeds, Purpose::Calibration, profile.n, opts);
    let ratios = exec
        .map(points.len(), |i| pde_ratio(profile, 1.0, &points[i], opts.fd))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    let spread = (hi - lo) / mean.abs();
    if !(mean > 0.0) || !(spread <= RATIO_SPREAD_LIMIT) {
        return Err(Error::RatioSpread {
            spread,
            limit: RATIO_SPREAD_LIMIT,
        });
    }
    let kappa = mean.powf(0.5 * profile.n as f64);
    let calibrated = exec
        .map(points.len(), |i| pde_ratio(profile, kappa, &points[i], opts.fd))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Calibration {
        kappa,
        ratio_mean: mean,
        ratio_spread: spread,
        calibrated_mean: calibrated.iter().sum::<f64>() / calibrated.len() as f64,
    })
}

/// The constant `(2n/(n+1))^{n/2}` that [`calibrate_kappa`] should reproduce.
pub fn predicted_kappa(n: usize) -> f64 {
    let nf = n as f64;
    (2.0 * nf / (nf + 1.0)).powf(0.5 * nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub samples: usize,
}

fn stats(values: &[f64]) -> ResidualStats {
    ResidualStats {
        max: values.iter().fold(0.0, |m, v| m.max(*v)),
        mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
        samples: values.len(),
    }
}

/// Relative residual of `-ΔΨ = Ψ^{(Q+2)/(Q-2)}` at random annulus points.
pub fn verify_pde(
    sol: &SingularSolution,
    opts: &SampleOptions,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<ResidualStats> {
    let points = sample_points(seeds, Purpose::PdeSamples, sol.n(), opts);
    let res = exec
        .map(points.len(), |i| sol.relative_residual(&points[i], opts.fd))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(stats(&res))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    /// Max relative defect of `Ψ(δ_λ p) = λ^{-n} Ψ(p)`; the law `Ψ` satisfies.
    pub negative_exponent: f64,
    /// Max relative defect of `Ψ(δ_λ p) = λ^{n} Ψ(p)`.
    pub positive_exponent: f64,
    pub trials: usize,
}

/// Compares `Ψ ∘ δ_λ` against `λ^{∓n} Ψ` for random `λ ∈ [0.1, 10]`.
pub fn verify_homogeneity(sol: &SingularSolution, trials: usize, seeds: &SeedStream) -> Result<HomogeneityReport> {
    let n = sol.n();
    let opts = SampleOptions::default();
    let mut neg: f64 = 0.0;
    let mut pos: f64 = 0.0;
    for i in 0..trials {
        let mut rng = seeds.rng(Purpose::Homogeneity, i as u64);
        let p = sample_annulus(&mut rng, n, opts.rho_min, opts.rho_max, opts.s_max);
        let lambda = 10f64.powf(rng.random_range(-1.0..=1.0));
        let base = sol.evaluate(&p)?;
        let scaled = sol.evaluate(&dilate(lambda, &p)?)?;
        let ln = lambda.powi(n as i32);
        neg = neg.max((scaled - base / ln).abs() / (base / ln));
        pos = pos.max((scaled - base * ln).abs() / (base * ln));
    }
    Ok(HomogeneityReport {
        negative_exponent: neg,
        positive_exponent: pos,
        trials,
    })
}

/// Haar-distributed unitary matrix, from the QR factorisation of a complex
/// Gaussian matrix with the phases of `diag(R)` divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<Complex<f64>> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `(Uz, t)` with `z = x + iy`.
pub fn apply_unitary(u: &DMatrix<Complex<f64>>, p: &HeisenbergPoint) -> HeisenbergPoint {
    let n = p.dim();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = Complex::new(0.0, 0.0);
        for j in 0..n {
            acc += u[(i, j)] * Complex::new(p.x[j], p.y[j]);
        }
        x[i] = acc.re;
        y[i] = acc.im;
    }
    HeisenbergPoint { x, y, t: p.t }
}

/// Max relative change of `Ψ` under `z ↦ Uz` for random unitary `U`.
pub fn symmetry_defect(sol: &SingularSolution, trials: usize, seeds: &SeedStream) -> Result<f64> {
    let n = sol.n();
    let opts = SampleOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..trials {
        let mut rng = seeds.rng(Purpose::Symmetry, i as u64);
        let p = sample_annulus(&mut rng, n, opts.rho_min, opts.rho_max, opts.s_max);
        let u = random_unitary(&mut rng, n);
        let a = sol.evaluate(&p)?;
        let b = sol.evaluate(&apply_unitary(&u, &p))?;
        worst = worst.max((a - b).abs() / a);
    }
    Ok(worst)
}

/// `(ρ, s, Ψ)` on the tensor grid, along the direction `z ∥ e₁`.
pub fn export_grid(sol: &SingularSolution, rhos: &[f64], ss: &[f64]) -> Result<Vec<[f64; 3]>> {
    let n = sol.n();
    let mut rows = Vec::with_capacity(rhos.len() * ss.len());
    for &rho in rhos {
        if !(rho > 0.0) {
            return Err(Error::Domain("ρ must be positive"));
        }
        for &s in ss {
            if s.abs() > AXIS_EXCLUSION {
                return Err(Error::DegenerateAxis);
            }
            let mut x = vec![0.0; n];
            x[0] = rho * s.cos().sqrt();
            let p = HeisenbergPoint {
                x,
                y: vec![0.0; n],
                t: rho * rho * s.sin(),
            };
            rows.push([rho, s, sol.evaluate(&p)?]);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{MassTerm, ReducedOde, SolveOptions};

    fn solution(n: usize) -> SingularSolution {
        let ode = ReducedOde::build(n, 64, MassTerm::QuarterNSquared).unwrap();
        let profile = ode.solve(&SolveOptions::default()).unwrap();
        SingularSolution::new(profile, predicted_kappa(n)).unwrap()
    }

    #[test]
    fn value_at_unit_point() {
        let sol = solution(1);
        let p = HeisenbergPoint::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let want = sol.kappa() * sol.profile_value(0.0);
        assert!((sol.evaluate(&p).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let sol = solution(1);
        assert!(matches!(sol.evaluate(&HeisenbergPoint::origin(1)), Err(Error::Domain(_))));
        let axis = HeisenbergPoint::new(vec![0.0], vec![0.0], 1.0).unwrap();
        assert!(matches!(sol.evaluate(&axis), Err(Error::DegenerateAxis)));
        let near = HeisenbergPoint::new(vec![1e-6], vec![0.0], 1.0).unwrap();
        assert!(matches!(sol.evaluate(&near), Err(Error::DegenerateAxis)));
        assert!(SingularSolution::new(sol.profile().clone(), 0.0).is_err());
    }

    #[test]
    fn halving_law_for_n1() {
        let sol = solution(1);
        let p = HeisenbergPoint::new(vec![0.3], vec![-0.4], 0.2).unwrap();
        let r = sol.evaluate(&dilate(2.0, &p).unwrap()).unwrap() / sol.evaluate(&p).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unit_dilation_has_no_defect() {
        let sol = solution(2);
        let p = HeisenbergPoint::new(vec![0.3, 0.1], vec![-0.4, 0.5], 0.2).unwrap();
        assert_eq!(sol.evaluate(&dilate(1.0, &p).unwrap()).unwrap(), sol.evaluate(&p).unwrap());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = SeedStream::new(3).rng(Purpose::Symmetry, 0);
        let u = random_unitary(&mut rng, 3);
        let id = u.adjoint() * &u;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_profile_along_rays() {
        let sol = solution(2);
        let p = HeisenbergPoint::new(vec![0.3, 0.1], vec![-0.4, 0.5], 0.2).unwrap();
        let base = koranyi_norm(&p).powi(2) * sol.evaluate(&p).unwrap();
        for lambda in [1e-3, 1e-2, 0.1, 0.5] {
            let q = dilate(lambda, &p).unwrap();
            let v = koranyi_norm(&q).powi(2) * sol.evaluate(&q).unwrap();
            assert!(((v - base) / base).abs() < 1e-12);
        }
    }

    #[test]
    fn export_rows() {
        let sol = solution(1);
        let rows = export_grid(&sol, &[0.5, 1.0], &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(rows.len(), 6);
        assert!((rows[4][2] - sol.kappa() * sol.profile_value(0.0)).abs() < 1e-14);
        assert!(export_grid(&sol, &[1.0], &[2.0]).is_err());
    }
}
