//! Second variation at `Ψ` on the period cell `{1 ≤ ρ < T}`, its Fourier
//! reduction in the axial variable, Morse indices and singular periods.
//!
//! For `u = ρ^{-n} w(l, s)` the quadratic form of `-Δ - (2*-1)Ψ^{2*-2}` over
//! one period equals `4n|S^{2n-1}|` times
//!
//! ```text
//! ∫_0^L ∫ (cos s)^n (w_s² + w_l²/(4n²) + a w²) - μ_n (cos s)^{n-1} v̄^{2/n} w²  ds dl,
//! ```
//!
//! with `L = log T / n`. A mode `w = e^{iωl} φ(s)`, `ω = 2πm/L`, gives
//! `L (B + ω² C)` with `B` the `l`-independent part and `C = (cos s)^n / (4n²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cylinder::sphere_area;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::heisenberg::{apply_x, apply_y, koranyi_norm, FdOptions, HeisenbergPoint};
use crate::ode::{ReducedOde, SolutionProfile};
use crate::rng::{Purpose, SeedStream};
use crate::singular::SingularSolution;

/// Relative mismatch tolerated between the assembled form and second
/// differences of the reduced energy.
pub const FD_MISMATCH_LIMIT: f64 = 1e-6;
/// Number of lowest eigenvalues polished by inverse iteration.
pub const REFINED_EIGENVALUES: usize = 12;

/// `μ_n = (n+2)/(2(n+1))`.
///
/// `Ĩ(v) = b_n N(v) - n/(n+1) D(v)` with `D(v) = ∫ (cos s)^{n-1} v^{p}`,
/// `p = 2 + 2/n`, has second variation
/// `2 b_n N(w) - n/(n+1) p (p-1) ∫ (cos s)^{n-1} v^{p-2} w²`. Dividing by
/// `2 b_n = 4(n+1)/n` leaves the potential coefficient
/// `p (p-1) n²/(4(n+1)²) = (n+2)/(2(n+1))`, which is also `c · q`, the
/// derivative of the EL nonlinearity `c v^q`.
pub fn potential_coefficient(n: usize) -> f64 {
    let nf = n as f64;
    (nf + 2.0) / (2.0 * (nf + 1.0))
}

#[derive(Debug, Clone)]
pub struct SecondVariationForm {
    n: usize,
    profile: SolutionProfile,
    mass: f64,
    mu: f64,
    /// `μ_n w_d,i v̄_i^{2/n}`.
    potential: Vec<f64>,
    mat_b: DMatrix<f64>,
    /// Diagonal of `C`, `w_n,i / (4n²)`.
    c_diag: Vec<f64>,
    fd_mismatch: f64,
}

/// Builds `B` and `C` and checks `B` against second differences of `Ĩ` with
/// step `ε = 1e-4` along 10 random smooth directions.
pub fn assemble_second_variation(profile: &SolutionProfile, seeds: &SeedStream) -> Result<SecondVariationForm> {
    let ode = ReducedOde::for_profile(profile);
    let n = profile.n;
    let nf = n as f64;
    let grid = &profile.grid;
    let mu = potential_coefficient(n);
    let potential: Vec<f64> = grid
        .weights_d()
        .iter()
        .zip(&profile.values)
        .map(|(w, v)| mu * w * v.powf(2.0 / nf))
        .collect();
    let mut mat_b = ode.stiffness().clone();
    for (i, p) in potential.iter().enumerate() {
        mat_b[(i, i)] -= p;
    }
    let c_diag = grid.weights_n().iter().map(|w| w / (4.0 * nf * nf)).collect();
    let mut form = SecondVariationForm {
        n,
        profile: profile.clone(),
        mass: ode.mass_coefficient(),
        mu,
        potential,
        mat_b,
        c_diag,
        fd_mismatch: 0.0,
    };

    let eps = 1e-4;
    let b_n = ode.exponents().b_n;
    let v = &profile.values;
    // directions on the scale of v̄, so that ε is a relative perturbation size
    let scale = crate::ode::sup_norm(v);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let mut rng = seeds.rng(Purpose::FdDirections, k);
        let w: Vec<f64> = smooth_direction(&mut rng, grid.nodes()).iter().map(|w| scale * w).collect();
        let fd = ode.energy_second_difference(v, &w, eps);
        let assembled = 2.0 * b_n * form.b_quadratic(&w);
        worst = worst.max((fd - assembled).abs() / assembled.abs());
    }
    form.fd_mismatch = worst;
    if !(worst < FD_MISMATCH_LIMIT) {
        return Err(Error::FdMismatch { mismatch: worst });
    }
    Ok(form)
}

/// A random polynomial of degree ≤ 6 in `x = 2s/π` with unit-scale values.
fn smooth_direction<R: Rng + ?Sized>(rng: &mut R, nodes: &[f64]) -> Vec<f64> {
    let coef: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
    nodes
        .iter()
        .map(|s| {
            let x = 2.0 * s / PI;
            coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
        })
        .collect()
}

impl SecondVariationForm {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.c_diag.len()
    }

    pub fn profile(&self) -> &SolutionProfile {
        &self.profile
    }

    pub fn potential_coefficient(&self) -> f64 {
        self.mu
    }

    pub fn mat_b(&self) -> &DMatrix<f64> {
        &self.mat_b
    }

    pub fn mat_c(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.c_diag))
    }

    pub fn c_diagonal(&self) -> &[f64] {
        &self.c_diag
    }

    /// Largest relative mismatch seen by the finite-difference check.
    pub fn fd_mismatch(&self) -> f64 {
        self.fd_mismatch
    }

    /// `φᵀ B ψ`, evaluated from the factors (`∫ (cos)^n φ'ψ'` through the
    /// differentiation matrix) rather than from the assembled matrix, whose
    /// entries grow like `N⁴`.
    pub fn b_bilinear(&self, phi: &[f64], psi: &[f64]) -> f64 {
        let g = &self.profile.grid;
        let dphi = g.derivative(phi);
        let dpsi = g.derivative(psi);
        (0..phi.len())
            .map(|i| {
                let wn = g.weights_n()[i];
                wn * (dphi[i] * dpsi[i] + self.mass * phi[i] * psi[i]) - self.potential[i] * phi[i] * psi[i]
            })
            .sum()
    }

    pub fn b_quadratic(&self, phi: &[f64]) -> f64 {
        self.b_bilinear(phi, phi)
    }

    pub fn c_quadratic(&self, phi: &[f64]) -> f64 {
        self.c_diag.iter().zip(phi).map(|(c, p)| c * p * p).sum()
    }

    /// `B + ω² C`.
    pub fn mode_matrix(&self, omega_sq: f64) -> DMatrix<f64> {
        let mut m = self.mat_b.clone();
        for (i, c) in self.c_diag.iter().enumerate() {
            m[(i, i)] += omega_sq * c;
        }
        m
    }

    /// A copy with `B` replaced by `B + shift · C`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.mat_b = self.mode_matrix(shift);
        for (p, c) in out.potential.iter_mut().zip(&self.c_diag) {
            *p -= shift * c;
        }
        out
    }

    /// The form over one axial period `[0, length)` for a perturbation given
    /// by `w(l, s) -> (w, ∂_l w)`, with `slices` trapezoid points in `l` and the
    /// `s`-derivative taken spectrally on each slice.
    pub fn axial_form<F>(&self, length: f64, slices: usize, w: F) -> f64
    where
        F: Fn(f64, f64) -> (f64, f64),
    {
        let g = &self.profile.grid;
        let nf = self.n as f64;
        let dl = length / slices as f64;
        let mut total = 0.0;
        for k in 0..slices {
            let l = k as f64 * dl;
            let (vals, dls): (Vec<f64>, Vec<f64>) = g.nodes().iter().map(|&s| w(l, s)).unzip();
            let ds = g.derivative(&vals);
            let slice: f64 = (0..vals.len())
                .map(|i| {
                    let wn = g.weights_n()[i];
                    wn * (ds[i] * ds[i] + dls[i] * dls[i] / (4.0 * nf * nf) + self.mass * vals[i] * vals[i])
                        - self.potential[i] * vals[i] * vals[i]
                })
                .sum();
            total += dl * slice;
        }
        total
    }

    fn rayleigh(&self, phi: &[f64]) -> f64 {
        self.b_quadratic(phi) / self.c_quadratic(phi)
    }

    /// Generalised eigenpairs of `(B + ω²C, C)`, ascending, from the dense
    /// symmetric problem `C^{-1/2}(B + ω²C)C^{-1/2}`.
    fn dense_pairs(&self, omega_sq: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if self.c_diag.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        let scale: Vec<f64> = self.c_diag.iter().map(|c| 1.0 / c.sqrt()).collect();
        let m = self.mode_matrix(omega_sq);
        let size = self.size();
        let mut sym = DMatrix::from_fn(size, size, |i, j| scale[i] * m[(i, j)] * scale[j]);
        sym = 0.5 * (&sym + sym.transpose());
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| (0..size).map(|i| scale[i] * eig.eigenvectors[(i, k)]).collect())
            .collect();
        Ok((values, vectors))
    }

    /// Inverse iteration for `(B + ω²C - σC) x = C φ` followed by the
    /// Rayleigh quotient; returns the eigenvalue of `(B + ω²C, C)` and vector.
    fn inverse_iteration(&self, omega_sq: f64, shift: f64, start: &[f64], steps: usize) -> Result<(f64, Vec<f64>)> {
        let lu = self.mode_matrix(omega_sq - shift).lu();
        let mut phi = start.to_vec();
        for _ in 0..steps {
            let rhs = DVector::from_iterator(phi.len(), phi.iter().zip(&self.c_diag).map(|(p, c)| p * c));
            let Some(x) = lu.solve(&rhs) else { break };
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
            let norm = x.norm();
            if norm == 0.0 {
                break;
            }
            phi = x.iter().map(|v| v / norm).collect();
        }
        Ok((self.rayleigh(&phi) + omega_sq, phi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub n: usize,
    pub size: usize,
    /// Generalised eigenvalues of `(B, C)`, ascending.
    pub betas: Vec<f64>,
    /// Eigenvectors of the lowest refined eigenvalues.
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
}

impl ModeSpectrum {
    pub fn negative(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.betas.iter().copied().enumerate().take_while(|(_, b)| *b < 0.0)
    }

    pub fn negative_count(&self) -> usize {
        self.negative().count()
    }
}

/// All generalised eigenvalues `B φ = β C φ`; the lowest
/// [`REFINED_EIGENVALUES`] are polished by inverse iteration with Rayleigh
/// quotients evaluated from the factored form.
pub fn mode_eigenvalues(form: &SecondVariationForm) -> Result<ModeSpectrum> {
    let (mut betas, vectors) = form.dense_pairs(0.0)?;
    let k = REFINED_EIGENVALUES.min(betas.len());
    let mut refined = Vec::with_capacity(k);
    for j in 0..k {
        let guess = form.rayleigh(&vectors[j]);
        let (beta, phi) = form.inverse_iteration(0.0, guess, &vectors[j], 3)?;
        betas[j] = beta;
        refined.push(phi);
    }
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| betas[a].total_cmp(&betas[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| betas[i]).collect();
    let vecs = order.iter().filter(|&&i| i < k).map(|&i| refined[i].clone()).collect();
    Ok(ModeSpectrum {
        n: form.n(),
        size: form.size(),
        betas: sorted,
        vectors: vecs,
    })
}

/// Axial frequency `ω = 2πmn / log T` of mode `m` on the period `T`.
pub fn axial_frequency(n: usize, m: usize, t: f64) -> f64 {
    2.0 * PI * (m * n) as f64 / t.ln()
}

/// `log T*` solving `ω(m, T*)² = -β`.
pub fn log_crossing(n: usize, m: usize, beta: f64) -> f64 {
    2.0 * PI * (m * n) as f64 / (-beta).sqrt()
}

/// Index of the second variation on `T`-periodic, cylindrically symmetric
/// perturbations: mode `m = 0` counts once per negative `β`, every `m ≥ 1`
/// with `ω_m² < -β` twice (cosine and sine).
pub fn morse_index(spec: &ModeSpectrum, t: f64) -> usize {
    let log_t = t.ln().max(0.0);
    spec.negative()
        .map(|(_, beta)| {
            let x = log_t * (-beta).sqrt() / (2.0 * PI * spec.n as f64);
            let modes = if x > 0.0 { x.ceil() as usize - 1 } else { 0 };
            1 + 2 * modes
        })
        .sum()
}

/// Smallest `T` beyond which the index is at least `k` (`None` without
/// negative eigenvalues).
pub fn morse_threshold(spec: &ModeSpectrum, k: usize) -> Option<f64> {
    let base = spec.negative_count();
    if base == 0 {
        return if k == 0 { Some(1.0) } else { None };
    }
    if k <= base {
        return Some(1.0);
    }
    let needed = (k - base).div_ceil(2);
    let mut logs: Vec<f64> = spec
        .negative()
        .flat_map(|(_, beta)| (1..=needed).map(move |m| log_crossing(spec.n, m, beta)))
        .collect();
    logs.sort_by(f64::total_cmp);
    Some(logs[needed - 1].exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEntry {
    pub m: usize,
    pub j: usize,
    pub beta: f64,
    pub log_t_star: f64,
    pub t_star: f64,
    /// Negative eigenvalue counts of `B + ω²C` at `T*(1 ∓ δ)`.
    pub inertia: (usize, usize),
    /// `log T` where bisection stopped and the eigenvalue there.
    pub log_t_bisected: f64,
    pub lambda_bisected: f64,
    pub bisection_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub entries: Vec<CrossingEntry>,
    pub morse_curve: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub m_max: usize,
    /// Relative offset of the bracketing periods `T*(1 ∓ δ)`.
    pub delta: f64,
    pub lambda_tol: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            m_max: 5,
            delta: 1e-3,
            lambda_tol: 1e-8,
            t_min: 2.0,
            t_max: 1e30,
            samples: 200,
        }
    }
}

/// Log-uniform samples of the index on `[t_min, t_max]`.
pub fn morse_curve(spec: &ModeSpectrum, t_min: f64, t_max: f64, samples: usize) -> Vec<(f64, usize)> {
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..samples)
        .map(|k| {
            let frac = if samples > 1 { k as f64 / (samples - 1) as f64 } else { 0.0 };
            let t = if k + 1 == samples { t_max } else { (a + frac * (b - a)).exp() };
            (t, morse_index(spec, t))
        })
        .collect()
}

/// Singular periods `T*(m, j)` for every negative `β_j` and `m = 1..=m_max`,
/// each confirmed on fresh matrices: the `j`-th eigenvalue of `B + ω(T)²C`
/// must change sign across `T*(1 ∓ δ)` and bisection in `log T` (shift-zero
/// inverse iteration) must reach `|λ| < lambda_tol`.
pub fn bifurcation_values(
    form: &SecondVariationForm,
    spec: &ModeSpectrum,
    opts: &ScanOptions,
    exec: Execution,
) -> Result<BifurcationReport> {
    let pairs: Vec<(usize, usize, f64)> = spec
        .negative()
        .flat_map(|(j, beta)| (1..=opts.m_max).map(move |m| (m, j, beta)))
        .collect();
    let mut entries = exec
        .map(pairs.len(), |k| {
            let (m, j, beta) = pairs[k];
            verify_crossing(form, spec, m, j, beta, opts)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.log_t_star.total_cmp(&b.log_t_star));
    Ok(BifurcationReport {
        entries,
        morse_curve: morse_curve(spec, opts.t_min, opts.t_max, opts.samples),
    })
}

fn verify_crossing(
    form: &SecondVariationForm,
    spec: &ModeSpectrum,
    m: usize,
    j: usize,
    beta: f64,
    opts: &ScanOptions,
) -> Result<CrossingEntry> {
    let n = form.n();
    let fail = |reason: String| Error::CrossingVerification { m, j, reason };
    let log_star = log_crossing(n, m, beta);
    let t_star = log_star.exp();
    // T*(1 ∓ δ)
    let log_lo = log_star + (1.0 - opts.delta).ln();
    let log_hi = log_star + (1.0 + opts.delta).ln();
    let omega_sq = |log_t: f64| (2.0 * PI * (m * n) as f64 / log_t).powi(2);

    let (lo_vals, lo_vecs) = form.dense_pairs(omega_sq(log_lo))?;
    let (hi_vals, _) = form.dense_pairs(omega_sq(log_hi))?;
    let neg = |v: &[f64]| v.iter().take_while(|x| **x < 0.0).count();
    let inertia = (neg(&lo_vals), neg(&hi_vals));
    if !(lo_vals[j] > 0.0 && hi_vals[j] < 0.0) {
        return Err(fail(format!(
            "eigenvalue {j} does not change sign: {:e} at T*(1-δ), {:e} at T*(1+δ)",
            lo_vals[j], hi_vals[j]
        )));
    }
    if inertia.1 != inertia.0 + 1 {
        return Err(fail(format!("inertia jumps from {} to {}", inertia.0, inertia.1)));
    }

    let start = spec.vectors.get(j).cloned().unwrap_or_else(|| lo_vecs[j].clone());
    let (mut a, mut b) = (log_lo, log_hi);
    let mut phi = start;
    let mut mid = 0.5 * (a + b);
    let mut lambda = f64::INFINITY;
    let mut steps = 0;
    for step in 0..80 {
        steps = step + 1;
        let w2 = omega_sq(mid);
        let (l, p) = form.inverse_iteration(w2, 0.0, &phi, 2)?;
        lambda = l;
        phi = p;
        if lambda.abs() < opts.lambda_tol {
            break;
        }
        if lambda > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        mid = 0.5 * (a + b);
    }
    if !(lambda.abs() < opts.lambda_tol) {
        return Err(fail(format!("bisection stalled at |λ| = {:e}", lambda.abs())));
    }
    Ok(CrossingEntry {
        m,
        j,
        beta,
        log_t_star: log_star,
        t_star,
        inertia,
        log_t_bisected: mid,
        lambda_bisected: lambda,
        bisection_steps: steps,
    })
}

/// Hermitian matrix of `d²J_T(Ψ)[u_m, u_j]` for
/// `u_m = exp(i 2πm log ρ / log T) Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionMatrix {
    pub log_t: f64,
    pub modes: Vec<usize>,
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl TestFunctionMatrix {
    /// Largest `|entry|` off the diagonal relative to the largest diagonal.
    pub fn off_diagonal_ratio(&self) -> f64 {
        let k = self.modes.len();
        let diag = (0..k).map(|i| self.re[(i, i)].abs()).fold(0.0, f64::max);
        let mut off: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    off = off.max(self.re[(i, j)].hypot(self.im[(i, j)]));
                }
            }
        }
        off / diag
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.modes.len()).map(|i| self.re[(i, i)]).collect()
    }
}

/// Frequency bound below which `u_m` has negative energy:
/// `ω² < -B(v̄)/C(v̄)`, returned as the bound on `2πmn/log T`.
pub fn test_function_threshold(form: &SecondVariationForm) -> f64 {
    let v = &form.profile().values;
    (-form.b_quadratic(v) / form.c_quadratic(v)).max(0.0).sqrt()
}

/// The matrix by tensor quadrature in cylinder coordinates over one period:
/// trapezoid in `l` (exact for the trigonometric factors), the Jacobi rule
/// in `s`, the sphere factor `|S^{2n-1}|` and the Lebesgue density
/// `n ρ^Q (cos s)^{n-1}`.
///
/// With `w = κ e^{iω l} v̄`, `ρ^{n+1} ∇_H u · ∇_H ū'` is
/// `(cos s)[(iω/n - n)(-iω'/n - n) w w̄' + 4 w_s w̄'_s]` and the potential is
/// `(2*-1) κ^{2*} ρ^{-Q} v̄^{2*}`.
pub fn test_function_matrix(sol: &SingularSolution, t: f64, modes: &[usize]) -> Result<TestFunctionMatrix> {
    if !(t > 1.0) {
        return Err(Error::InvalidParameter(format!("period must exceed 1, got {t}")));
    }
    let profile = sol.profile();
    let n = profile.n;
    let nf = n as f64;
    let grid = &profile.grid;
    let log_t = t.ln();
    let length = log_t / nf;
    let kappa = sol.kappa();
    let p_star = 2.0 + 2.0 / nf;
    let v = &profile.values;
    let dv = profile.derivative();
    let sigma = sphere_area(n);
    let max_m = modes.iter().copied().max().unwrap_or(0);
    let slices = 4 * max_m + 16;
    let dl = length / slices as f64;
    let omegas: Vec<f64> = modes.iter().map(|&m| 2.0 * PI * (m * n) as f64 / log_t).collect();

    // s-integrals: the density n ρ^Q (cos s)^{n-1} against dl ds dσ cancels
    // ρ^{-Q} in the integrand, and its (cos s)^{n-1} is carried by the weights
    let mut grad_v2 = 0.0;
    let mut grad_dv2 = 0.0;
    let mut pot = 0.0;
    for i in 0..grid.size() {
        let wn = grid.weights_n()[i] * nf;
        let wd = grid.weights_d()[i] * nf;
        grad_v2 += wn * kappa * kappa * v[i] * v[i];
        grad_dv2 += wn * 4.0 * kappa * kappa * dv[i] * dv[i];
        pot += wd * (p_star - 1.0) * kappa.powf(p_star) * v[i].powf(p_star);
    }

    let k = modes.len();
    let mut re = DMatrix::zeros(k, k);
    let mut im = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let (wa, wb) = (omegas[a], omegas[b]);
            // (iωa/n - n)(-iωb/n - n)
            let coef_re = wa * wb / (nf * nf) + nf * nf;
            let coef_im = wb - wa;
            let (mut pr, mut pi) = (0.0, 0.0);
            for q in 0..slices {
                let phase = (wa - wb) * q as f64 * dl;
                pr += dl * phase.cos();
                pi += dl * phase.sin();
            }
            // integrand (g_re + i g_im) times the l-integral of e^{i(ωa-ωb)l}
            let g_re = coef_re * grad_v2 + grad_dv2 - pot;
            let g_im = coef_im * grad_v2;
            re[(a, b)] = sigma * (g_re * pr - g_im * pi);
            im[(a, b)] = sigma * (g_re * pi + g_im * pr);
        }
    }
    Ok(TestFunctionMatrix {
        log_t,
        modes: modes.to_vec(),
        re,
        im,
    })
}

/// `-(2*-2) ∫_{1 ≤ ρ < T} Ψ^{2*}`, the `m = 0` diagonal entry.
pub fn zero_mode_energy(sol: &SingularSolution, t: f64) -> f64 {
    let profile = sol.profile();
    let n = profile.n;
    let nf = n as f64;
    let p_star = 2.0 + 2.0 / nf;
    let denom: f64 = profile
        .grid
        .weights_d()
        .iter()
        .zip(&profile.values)
        .map(|(w, v)| w * v.powf(p_star))
        .sum();
    let volume = nf * sphere_area(n) * t.ln() / nf;
    -(p_star - 2.0) * sol.kappa().powf(p_star) * denom * volume
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Independent estimate of the diagonal entry `d²J_T(Ψ)[u_m, u_m]`: uniform
/// points in the box `|x_k|, |y_k| ≤ T`, `|t| ≤ T²` restricted to
/// `1 ≤ ρ < T`, with `|∇_H u|²` from finite differences of the real and
/// imaginary parts of `u_m` in ambient coordinates.
pub fn monte_carlo_diagonal(
    sol: &SingularSolution,
    t: f64,
    m: usize,
    samples: usize,
    seeds: &SeedStream,
    exec: Execution,
) -> MonteCarloEstimate {
    let n = sol.n();
    let nf = n as f64;
    let omega = 2.0 * PI * (m * n) as f64 / t.ln();
    let p_star = 2.0 + 2.0 / nf;
    let box_volume = (2.0 * t).powi(2 * n as i32) * 2.0 * t * t;
    let fd = FdOptions::new(1e-5, false);
    let part = |p: &HeisenbergPoint, imag: bool| {
        let psi = sol.evaluate(p).unwrap_or(0.0);
        let phase = omega * koranyi_norm(p).ln() / nf;
        psi * if imag { phase.sin() } else { phase.cos() }
    };
    const CHUNK: usize = 1000;
    let chunks = samples.div_ceil(CHUNK);
    let sums = exec.map(chunks, |c| {
        let mut rng = seeds.rng(Purpose::MonteCarlo, c as u64);
        let count = CHUNK.min(samples - c * CHUNK);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-t..t)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-t..t)).collect();
            let tt = rng.random_range(-t * t..t * t);
            let p = HeisenbergPoint { x, y, t: tt };
            let rho = koranyi_norm(&p);
            let mut value = 0.0;
            if (1.0..t).contains(&rho) {
                if let Ok(psi) = sol.evaluate(&p) {
                    let mut grad = 0.0;
                    for imag in [false, true] {
                        let f = |q: &HeisenbergPoint| part(q, imag);
                        for a in 0..n {
                            let xa = apply_x(a, &f, &p, fd).unwrap_or(0.0);
                            let ya = apply_y(a, &f, &p, fd).unwrap_or(0.0);
                            grad += xa * xa + ya * ya;
                        }
                    }
                    value = grad - (p_star - 1.0) * psi.powf(p_star);
                }
            }
            let scaled = value * box_volume;
            s1 += scaled;
            s2 += scaled * scaled;
        }
        (s1, s2)
    });
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let count = samples as f64;
    let mean = s1 / count;
    let var = (s2 / count - mean * mean).max(0.0);
    MonteCarloEstimate {
        mean,
        std_error: (var / count).sqrt(),
        samples,
    }
}
