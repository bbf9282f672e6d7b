//! The reduced degenerate ODE on `(-π/2, π/2)`:
//!
//! ```text
//! -((cos s)^n v')' + a (cos s)^n v = c (cos s)^{n-1} v^{1+2/n},   c = n/(2(n+1)),
//! ```
//!
//! with the natural condition `(cos s)^n v' → 0` at `±π/2`, obtained as the
//! Euler–Lagrange equation of
//!
//! ```text
//! Ĩ(v) = b_n ∫ (cos s)^n (v'² + a v²) ds - n/(n+1) ∫ (cos s)^{n-1} v^{2+2/n} ds,   b_n = 2 + 2/n,
//! ```
//!
//! and, up to the scale of `v`, of the quotient
//! `J(v) = ∫ (cos s)^n (v'² + a v²) / ∫ (cos s)^{n-1} v^{2+2/n}`.
//!
//! The mass coefficient `a` is selectable, see [`MassTerm`].
//!
//! Discretisation: `v` is a polynomial in `s`, represented by its values at
//! Gauss–Jacobi nodes `s_i = (π/2) x_i` with Jacobi weight `(1-x²)^{n-1}`.
//! The solution is analytic in `s` on the closed interval (both endpoints are
//! regular singular points with an analytic branch), while as a function of
//! `τ = sin s` it carries `sqrt(1 ∓ τ)` terms, so the collocation variable is
//! `s`. Both weights `(cos s)^{n-1}` and `(cos s)^n` are a Jacobi weight in `x`
//! times an entire function, which is folded into the quadrature weights.
//! No nodes sit at `±π/2`; the weak form carries the natural boundary
//! condition.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, Barycentric};
use crate::rng::{Purpose, SeedStream};

/// Coefficient `a` of the zeroth-order term of the reduced operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MassTerm {
    /// `a = n²`, the quotient `J` with the coefficient `n²` in its numerator.
    NSquared,
    /// `a = n²/4`, the coefficient for which `ρ^{-n} v(s)` solves the
    /// equation for the sublaplacian `Σ_α (X_α² + Y_α²)`.
    ///
    /// Writing `f = ρ^{-n} w(l, s)` one finds
    /// `∫ Σ(X f)²+(Y f)² = 4n ∫∫ (cos s)^n (w_s² + w_l²/(4n²) + (n²/4) w²) dl ds dσ`,
    /// so the ratio of the mass term to the `s`-gradient term is `n²/4`.
    #[default]
    QuarterNSquared,
}

impl MassTerm {
    pub fn coefficient(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            MassTerm::NSquared => nf * nf,
            MassTerm::QuarterNSquared => 0.25 * nf * nf,
        }
    }
}

/// Exponents and constants of the reduced problem for a given `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    /// `p = 2 + 2/n = 2*`.
    pub p: f64,
    /// `q = p - 1 = 1 + 2/n`.
    pub q: f64,
    /// Right-hand-side constant of the EL equation, `n/(2(n+1)) = 1/b_n`.
    pub el_constant: f64,
    /// `b_n = 2 + 2/n`.
    pub b_n: f64,
}

impl Exponents {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        Self {
            p: 2.0 + 2.0 / nf,
            q: 1.0 + 2.0 / nf,
            el_constant: nf / (2.0 * (nf + 1.0)),
            b_n: 2.0 + 2.0 / nf,
        }
    }
}

/// Nodes, weights and spectral differentiation for the weighted spaces.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    n: usize,
    nodes: Vec<f64>,
    weights_n: Vec<f64>,
    weights_d: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    diff: DMatrix<f64>,
    gram: DMatrix<f64>,
    interp: Barycentric,
}

/// Builds the `size`-point grid for complex dimension `n`.
pub fn build_grid(n: usize, size: usize) -> Result<QuadratureGrid> {
    if n == 0 || size < 8 {
        return Err(Error::InvalidGrid { n, size });
    }
    let (x, w) = gauss_jacobi(size, (n - 1) as u32)?;
    let nodes: Vec<f64> = x.iter().map(|x| FRAC_PI_2 * x).collect();
    let cos: Vec<f64> = nodes.iter().map(|s| s.cos()).collect();
    let sin: Vec<f64> = nodes.iter().map(|s| s.sin()).collect();
    // (cos s)^{n-1} ds = (π/2) (1-x²)^{n-1} g(x)^{n-1} dx,  g = cos(πx/2)/(1-x²)
    let weights_d: Vec<f64> = x
        .iter()
        .zip(&w)
        .zip(&cos)
        .map(|((x, w), c)| {
            let g = c / ((1.0 - x) * (1.0 + x));
            FRAC_PI_2 * w * g.powi(n as i32 - 1)
        })
        .collect();
    let weights_n: Vec<f64> = weights_d.iter().zip(&cos).map(|(w, c)| w * c).collect();
    let interp = Barycentric::new(nodes.clone());
    let diff = interp.differentiation_matrix();
    let wd = DMatrix::from_diagonal(&DVector::from_column_slice(&weights_n));
    let gram = diff.transpose() * wd * &diff;
    let gram = 0.5 * (&gram + gram.transpose());
    Ok(QuadratureGrid {
        n,
        nodes,
        weights_n,
        weights_d,
        cos,
        sin,
        diff,
        gram,
        interp,
    })
}

impl QuadratureGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for `(cos s)^n ds`.
    pub fn weights_n(&self) -> &[f64] {
        &self.weights_n
    }

    /// Weights for `(cos s)^{n-1} ds`.
    pub fn weights_d(&self) -> &[f64] {
        &self.weights_d
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// `Dᵀ W_n D`, the Gram matrix of `∫ (cos s)^n φ' ψ'`.
    pub fn gradient_gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn interpolant(&self) -> &Barycentric {
        &self.interp
    }

    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        (&self.diff * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// Interpolated value of the node function `v` at `s`.
    pub fn evaluate(&self, v: &[f64], s: f64) -> f64 {
        self.interp.evaluate(v, s)
    }

    /// `sup_i |v(s_i) - v(-s_i)|`, using the symmetry of the node set.
    pub fn symmetry_defect(&self, v: &[f64]) -> f64 {
        let m = v.len();
        (0..m / 2)
            .map(|i| (v[i] - v[m - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

/// The discretised solution of the reduced ODE.
#[derive(Debug, Clone)]
pub struct SolutionProfile {
    pub n: usize,
    pub mass: MassTerm,
    pub grid: Arc<QuadratureGrid>,
    /// Node values `v_i > 0`.
    pub values: Vec<f64>,
    /// `J` of the profile normalised to unit denominator.
    pub quotient: f64,
    /// Sup norm over the nodes of `-cos v'' + n sin v' + a cos v - c v^{1+2/n}`.
    pub el_residual: f64,
    pub symmetry_defect: f64,
    /// Normalised quotient per minimisation iteration.
    pub history: Vec<f64>,
}

impl SolutionProfile {
    pub fn size(&self) -> usize {
        self.grid.size()
    }

    pub fn derivative(&self) -> Vec<f64> {
        self.grid.derivative(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub quotient_tol: f64,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Additional minimisations from random positive initial data.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            quotient_tol: 1e-10,
            max_iter: 500,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            restarts: 2,
            seed: 0,
        }
    }
}

/// The reduced problem on a fixed grid with a fixed mass coefficient.
#[derive(Debug, Clone)]
pub struct ReducedOde {
    grid: Arc<QuadratureGrid>,
    mass: MassTerm,
    a: f64,
    exps: Exponents,
    stiffness: DMatrix<f64>,
}

impl ReducedOde {
    pub fn new(grid: Arc<QuadratureGrid>, mass: MassTerm) -> Self {
        let n = grid.n();
        let a = mass.coefficient(n);
        let mut stiffness = grid.gradient_gram().clone();
        for (i, w) in grid.weights_n().iter().enumerate() {
            stiffness[(i, i)] += a * w;
        }
        Self {
            grid,
            mass,
            a,
            exps: Exponents::new(n),
            stiffness,
        }
    }

    pub fn build(n: usize, size: usize, mass: MassTerm) -> Result<Self> {
        Ok(Self::new(Arc::new(build_grid(n, size)?), mass))
    }

    pub fn for_profile(profile: &SolutionProfile) -> Self {
        Self::new(profile.grid.clone(), profile.mass)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn mass(&self) -> MassTerm {
        self.mass
    }

    pub fn mass_coefficient(&self) -> f64 {
        self.a
    }

    pub fn exponents(&self) -> Exponents {
        self.exps
    }

    /// `A = Dᵀ W_n D + a W_n`, the matrix of the numerator of `J`.
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// `∫ (cos s)^n (v'² + a v²)`, summed term by term.
    pub fn numerator(&self, v: &[f64]) -> f64 {
        let dv = self.grid.derivative(v);
        self.grid
            .weights_n()
            .iter()
            .zip(&dv)
            .zip(v)
            .map(|((w, d), v)| w * (d * d + self.a * v * v))
            .sum()
    }

    /// `∫ (cos s)^{n-1} |v|^{2+2/n}`.
    pub fn denominator(&self, v: &[f64]) -> f64 {
        let p = self.exps.p;
        self.grid
            .weights_d()
            .iter()
            .zip(v)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum()
    }

    /// `J(v)`; satisfies `J(cv) = c^{-2/n} J(v)`.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> Result<f64> {
        let den = self.denominator(v);
        if !(den > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.numerator(v) / den)
    }

    /// `J(v / ‖v‖)` with the denominator normalised to one; invariant under
    /// scaling and stationary exactly at the critical points of `J` on the
    /// constraint set.
    pub fn normalized_quotient(&self, v: &[f64]) -> Result<f64> {
        let den = self.denominator(v);
        if !(den > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.numerator(v) / den.powf(2.0 / self.exps.p))
    }

    /// `Ĩ(v)` per unit axial length (the common factor `2^n n!` dropped).
    pub fn reduced_energy(&self, v: &[f64]) -> f64 {
        let nf = self.n() as f64;
        self.exps.b_n * self.numerator(v) - nf / (nf + 1.0) * self.denominator(v)
    }

    /// Quadrature-node contributions to `Ĩ(v)`; they sum to [`Self::reduced_energy`].
    pub fn reduced_energy_density(&self, v: &[f64]) -> Vec<f64> {
        let nf = self.n() as f64;
        let dv = self.grid.derivative(v);
        let g = &self.grid;
        (0..v.len())
            .map(|i| {
                self.exps.b_n * g.weights_n[i] * (dv[i] * dv[i] + self.a * v[i] * v[i])
                    - nf / (nf + 1.0) * g.weights_d[i] * v[i].abs().powf(self.exps.p)
            })
            .collect()
    }

    /// `[Ĩ(v+εw) - 2Ĩ(v) + Ĩ(v-εw)]/ε²`, differenced node by node before
    /// summing so that the large totals of `Ĩ` do not cancel.
    pub fn energy_second_difference(&self, v: &[f64], w: &[f64], eps: f64) -> f64 {
        let plus: Vec<f64> = v.iter().zip(w).map(|(v, w)| v + eps * w).collect();
        let minus: Vec<f64> = v.iter().zip(w).map(|(v, w)| v - eps * w).collect();
        let (ep, e0, em) = (
            self.reduced_energy_density(&plus),
            self.reduced_energy_density(v),
            self.reduced_energy_density(&minus),
        );
        (0..v.len()).map(|i| (ep[i] - 2.0 * e0[i] + em[i]) / (eps * eps)).sum()
    }

    /// Central difference of the normalised quotient along `w`.
    pub fn quotient_directional_derivative(&self, v: &[f64], w: &[f64], eps: f64) -> Result<f64> {
        let plus: Vec<f64> = v.iter().zip(w).map(|(v, w)| v + eps * w).collect();
        let minus: Vec<f64> = v.iter().zip(w).map(|(v, w)| v - eps * w).collect();
        Ok((self.normalized_quotient(&plus)? - self.normalized_quotient(&minus)?) / (2.0 * eps))
    }

    /// `A v - c W_d v^{q}`, the weak Euler–Lagrange residual.
    pub fn weak_residual(&self, v: &[f64]) -> Vec<f64> {
        let av = &self.stiffness * DVector::from_column_slice(v);
        let (c, q) = (self.exps.el_constant, self.exps.q);
        av.iter()
            .zip(self.grid.weights_d())
            .zip(v)
            .map(|((av, w), v)| av - c * w * v.abs().powf(q) * v.signum())
            .collect()
    }

    /// Divergence-form residual `[-((cos)^n v')' + a (cos)^n v]/(cos)^{n-1} - c v^q`
    /// at the nodes, through the weak form divided by the nodal weights.
    pub fn divergence_residual(&self, v: &[f64]) -> Vec<f64> {
        self.weak_residual(v)
            .iter()
            .zip(self.grid.weights_d())
            .map(|(r, w)| r / w)
            .collect()
    }

    /// Expanded-form residual `-cos v'' + n sin v' + a cos v - c v^q` at the nodes.
    pub fn expanded_residual(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let nf = self.n() as f64;
        let dv = g.diff_matrix() * DVector::from_column_slice(v);
        let d2v = g.diff_matrix() * &dv;
        let (c, q) = (self.exps.el_constant, self.exps.q);
        (0..g.size())
            .map(|i| {
                -g.cos[i] * d2v[i] + nf * g.sin[i] * dv[i] + self.a * g.cos[i] * v[i]
                    - c * v[i].abs().powf(q) * v[i].signum()
            })
            .collect()
    }

    /// Sup-norm of [`Self::expanded_residual`] over all nodes.
    pub fn el_residual(&self, v: &[f64]) -> f64 {
        sup_norm(&self.expanded_residual(v))
    }

    /// Sup-norm of the expanded residual over the nodes with `|s| ≤ s_max`.
    ///
    /// Near `±π/2` the equation degenerates and the strong form multiplies
    /// rounding noise in `v` by roughly `N⁴`; for `n = 3, N = 200` the outermost
    /// node carries about `1e-8` with alternating sign while the weak residual
    /// stays near `1e-10`.
    pub fn interior_el_residual(&self, v: &[f64], s_max: f64) -> f64 {
        self.expanded_residual(v)
            .iter()
            .zip(self.grid.nodes())
            .filter(|(_, s)| s.abs() <= s_max)
            .fold(0.0, |m, (r, _)| m.max(r.abs()))
    }

    fn normalize(&self, v: &mut [f64]) -> Result<()> {
        let den = self.denominator(v);
        if !(den > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        let scale = den.powf(-1.0 / self.exps.p);
        v.iter_mut().for_each(|x| *x = x.abs() * scale);
        Ok(())
    }

    fn profile(&self, values: Vec<f64>, history: Vec<f64>) -> Result<SolutionProfile> {
        Ok(SolutionProfile {
            n: self.n(),
            mass: self.mass,
            grid: self.grid.clone(),
            quotient: self.normalized_quotient(&values)?,
            el_residual: self.el_residual(&values),
            symmetry_defect: self.grid.symmetry_defect(&values),
            values,
            history,
        })
    }

    /// Minimises `J` over `{denominator = 1}`.
    ///
    /// Each step is a gradient step in the inner product of the numerator
    /// (`A`-preconditioned), followed by the projection `v ↦ |v| / ‖v‖`, which
    /// is exact because `J(|v|) = J(v)`. The unit step of the preconditioned
    /// gradient is `v ↦ J(v) A⁻¹ W_d v^{q}`; it is halved until `J` decreases.
    /// Stops when the relative decrease of `J` drops below `tol`.
    pub fn minimize_quotient(
        &self,
        init: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<SolutionProfile> {
        if init.len() != self.grid.size() {
            return Err(Error::DimensionMismatch {
                left: init.len(),
                right: self.grid.size(),
            });
        }
        let chol = self
            .stiffness
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let mut v = init.to_vec();
        self.normalize(&mut v)?;
        let mut j = self.numerator(&v);
        let mut history = vec![j];
        let q = self.exps.q;
        for _ in 0..max_iter {
            let rhs = DVector::from_iterator(
                v.len(),
                self.grid
                    .weights_d()
                    .iter()
                    .zip(&v)
                    .map(|(w, v)| w * v.powf(q)),
            );
            let target = chol.solve(&rhs) * j;
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let mut cand: Vec<f64> = v
                    .iter()
                    .zip(target.iter())
                    .map(|(v, t)| v + step * (t - v))
                    .collect();
                self.normalize(&mut cand)?;
                let jc = self.numerator(&cand);
                if jc < j {
                    accepted = Some((cand, jc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, jc)) = accepted else {
                // no descent at any step length: stationary to rounding
                return self.profile(v, history);
            };
            let decrease = (j - jc) / j;
            v = cand;
            j = jc;
            history.push(j);
            if decrease < tol {
                return self.profile(v, history);
            }
        }
        Err(Error::NonConvergence {
            iterations: max_iter,
            history,
            last_iterate: v,
        })
    }

    /// Rescales a critical point `w` of `J` so that the EL equation holds with
    /// constant exactly `c = n/(2(n+1))`.
    ///
    /// At a critical point `A w = (N(w)/D(w)) W_d w^{q}`; with the denominator
    /// normalised to one the Lagrange multiplier of `∇N = Λ ∇D` is
    /// `Λ = (2/p) J = n/(n+1) J`. The functional `Ĩ` has EL equation
    /// `2 b_n A v = n/(n+1) p W_d v^q = 2 W_d v^q`, so its constant `1/b_n`
    /// equals `c`: the prefactor `b_n` is absorbed there. For `v = λ w`,
    /// `A v = λ^{1-q} (N/D) W_d v^q`, hence `λ = ((N/D)/c)^{n/2}`.
    pub fn rescale_to_el(&self, w: &SolutionProfile) -> Result<SolutionProfile> {
        let multiplier = self.numerator(&w.values) / self.denominator(&w.values);
        if !(multiplier > 0.0) {
            return Err(Error::NonpositiveMultiplier(multiplier));
        }
        let nf = self.n() as f64;
        let lambda = (multiplier / self.exps.el_constant).powf(0.5 * nf);
        let values = w.values.iter().map(|v| lambda * v).collect();
        self.profile(values, w.history.clone())
    }

    /// Newton iteration on `A v - c W_d v^q = 0`.
    pub fn newton_refine(
        &self,
        profile: &SolutionProfile,
        tol: f64,
        max_iter: usize,
    ) -> Result<SolutionProfile> {
        let (c, q) = (self.exps.el_constant, self.exps.q);
        let mut v = profile.values.clone();
        let mut res = sup_norm(&self.divergence_residual(&v));
        for iteration in 0..max_iter {
            if res <= tol {
                break;
            }
            let mut jac = self.stiffness.clone();
            for (i, (w, v)) in self.grid.weights_d().iter().zip(&v).enumerate() {
                jac[(i, i)] -= c * q * w * v.abs().powf(q - 1.0);
            }
            let g = DVector::from_vec(self.weak_residual(&v));
            let delta = jac
                .lu()
                .solve(&(-g))
                .filter(|d| d.iter().all(|x| x.is_finite()))
                .ok_or(Error::SingularJacobian { iteration })?;
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let dmax = delta.amax();
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand: Vec<f64> = v.iter().zip(delta.iter()).map(|(v, d)| v + step * d).collect();
                let rc = sup_norm(&self.divergence_residual(&cand));
                if rc < res || dmax <= 1e-13 * vmax {
                    v = cand;
                    res = rc;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // residual evaluation is at its rounding floor if the step is tiny
                if dmax <= 1e-10 * vmax {
                    break;
                }
                return Err(Error::ResidualStagnation {
                    iteration,
                    residual: res,
                });
            }
            if dmax <= 1e-13 * vmax {
                break;
            }
        }
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::ResidualStagnation {
                iteration: max_iter,
                residual: res,
            });
        }
        self.profile(v, profile.history.clone())
    }

    /// Minimisation from `v ≡ 1` and from `restarts` random positive initial
    /// data (the lowest normalised quotient wins), then rescaling and Newton.
    pub fn solve(&self, opts: &SolveOptions) -> Result<SolutionProfile> {
        let m = self.grid.size();
        let mut best = self.minimize_quotient(&vec![1.0; m], opts.quotient_tol, opts.max_iter)?;
        let seeds = SeedStream::new(opts.seed);
        for r in 0..opts.restarts {
            let mut rng = seeds.rng(Purpose::Restart, r as u64);
            let init: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
            let cand = self.minimize_quotient(&init, opts.quotient_tol, opts.max_iter)?;
            if cand.quotient < best.quotient {
                best = cand;
            }
        }
        let scaled = self.rescale_to_el(&best)?;
        self.newton_refine(&scaled, opts.newton_tol, opts.newton_max_iter)
    }
}

/// Half-width of the node range used by [`ReducedOde::interior_el_residual`].
pub const INTERIOR_S_MAX: f64 = 1.5;

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wallis(k: usize) -> f64 {
        // ∫_{-π/2}^{π/2} cos^k = π for k = 0, 2 for k = 1, (k-1)/k · I_{k-2}
        match k {
            0 => PI,
            1 => 2.0,
            _ => (k as f64 - 1.0) / k as f64 * wallis(k - 2),
        }
    }

    #[test]
    fn grid_integrates_weights() {
        for n in 1..5 {
            for size in [32, 200] {
                let g = build_grid(n, size).unwrap();
                let wn: f64 = g.weights_n().iter().sum();
                let wd: f64 = g.weights_d().iter().sum();
                assert!((wn - wallis(n)).abs() < 1e-12, "n={n} N={size}: {wn}");
                assert!((wd - wallis(n - 1)).abs() < 1e-12, "n={n} N={size}: {wd}");
                assert!(g.weights_n().iter().all(|w| *w > 0.0));
                assert!(g.nodes().iter().all(|s| s.abs() < FRAC_PI_2));
            }
        }
    }

    #[test]
    fn grid_differentiates_sin() {
        let g = build_grid(2, 32).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|s| s.sin()).collect();
        let dv = g.derivative(&v);
        for (d, s) in dv.iter().zip(g.nodes()) {
            assert!((d - s.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(matches!(build_grid(1, 4), Err(Error::InvalidGrid { .. })));
        assert!(matches!(build_grid(0, 50), Err(Error::InvalidGrid { .. })));
    }

    #[test]
    fn quotient_of_constant() {
        let ode = ReducedOde::build(1, 64, MassTerm::NSquared).unwrap();
        let j = ode.rayleigh_quotient(&vec![1.0; 64]).unwrap();
        assert!((j - 2.0 / PI).abs() < 1e-13);
        assert!(matches!(
            ode.rayleigh_quotient(&vec![0.0; 64]),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn quotient_scale_covariance() {
        for n in 1..4 {
            let ode = ReducedOde::build(n, 48, MassTerm::QuarterNSquared).unwrap();
            let v: Vec<f64> = ode.grid().nodes().iter().map(|s| 1.0 + 0.3 * s.sin() + s * s).collect();
            let j = ode.rayleigh_quotient(&v).unwrap();
            for c in [0.1, 0.7, 2.0, 10.0] {
                let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
                let jc = ode.rayleigh_quotient(&cv).unwrap();
                let want = c.powf(-2.0 / n as f64) * j;
                assert!(((jc - want) / want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_is_not_a_solution() {
        for mass in [MassTerm::NSquared, MassTerm::QuarterNSquared] {
            let ode = ReducedOde::build(1, 64, mass).unwrap();
            for level in [0.5, 1.0, 2.0] {
                assert!(ode.el_residual(&vec![level; 64]) > 0.01);
            }
        }
    }

    #[test]
    fn residual_forms_agree_on_smooth_data() {
        let ode = ReducedOde::build(2, 80, MassTerm::QuarterNSquared).unwrap();
        let v: Vec<f64> = ode.grid().nodes().iter().map(|s| 1.0 + 0.2 * s.cos() + 0.1 * s).collect();
        let a = ode.divergence_residual(&v);
        let b = ode.expanded_residual(&v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }
}
