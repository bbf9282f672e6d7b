//! The chart `(l, s, γ)` on `H^n \ {t-axis}`: `l = (1/n) log ρ`,
//! `sin s = τ = t/ρ²`, `γ = x/|x|` where `x ∈ R^{2n}` is `z` in real form.
//! Dilations act as translations in `l`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{koranyi_norm, HeisenbergPoint};

/// Transforms reject `|s|` beyond this bound.
pub const AXIS_EXCLUSION: f64 = std::f64::consts::FRAC_PI_2 - 1e-8;

/// `c₀` in `ρ² c₀ Σ_α [(X_α v)² + (Y_α v)²] = |∇̃v|²`, the relation between the
/// group frame and the gradient norm of the dilation-invariant contact form.
/// Pinned by `levi_constant_is_a_quarter` below.
pub const LEVI_GRADIENT_CONSTANT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    pub l: f64,
    pub s: f64,
    /// Unit vector in `R^{2n}`, ordered `(x₁…xₙ, y₁…yₙ)`.
    pub gamma: Vec<f64>,
}

impl CylinderPoint {
    pub fn new(l: f64, s: f64, gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() || !gamma.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter("γ must have even length 2n".into()));
        }
        let norm = gamma.iter().map(|g| g * g).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("|γ| = {norm} is not 1")));
        }
        if !(s.abs() < std::f64::consts::FRAC_PI_2) || !l.is_finite() {
            return Err(Error::Domain("s must lie in (-π/2, π/2) and l must be finite"));
        }
        Ok(Self { l, s, gamma })
    }

    pub fn n(&self) -> usize {
        self.gamma.len() / 2
    }
}

/// Angular coordinate `s = arcsin(t/ρ²)`, computed as `atan2(t, |z|²)` which
/// stays well conditioned close to the axis.
pub fn angular_coordinate(p: &HeisenbergPoint) -> f64 {
    p.t.atan2(p.z_norm_sq())
}

pub fn to_cylinder(p: &HeisenbergPoint) -> Result<CylinderPoint> {
    let n = p.dim();
    let rho = koranyi_norm(p);
    if rho == 0.0 {
        return Err(Error::Domain("the origin has no cylinder coordinates"));
    }
    let r2 = p.z_norm_sq();
    if r2 == 0.0 {
        return Err(Error::DegenerateAxis);
    }
    let s = angular_coordinate(p);
    if s.abs() > AXIS_EXCLUSION {
        return Err(Error::DegenerateAxis);
    }
    let r = r2.sqrt();
    let gamma = p.x.iter().chain(&p.y).map(|c| c / r).collect();
    Ok(CylinderPoint {
        l: rho.ln() / n as f64,
        s,
        gamma,
    })
}

pub fn from_cylinder(c: &CylinderPoint) -> HeisenbergPoint {
    let n = c.n();
    let rho = (n as f64 * c.l).exp();
    let rho2 = rho * rho;
    // |z|² = ρ² (1 - τ²)^{1/2} = ρ² cos s
    let r = (rho2 * c.s.cos()).sqrt();
    HeisenbergPoint {
        x: c.gamma[..n].iter().map(|g| r * g).collect(),
        y: c.gamma[n..].iter().map(|g| r * g).collect(),
        t: rho2 * c.s.sin(),
    }
}

/// `|∇̃v|² = cos s (v_s² + v_l²/(4n²))`.
pub fn horizontal_energy(v_s: f64, v_l: f64, s: f64, n: usize) -> f64 {
    let nf = n as f64;
    s.cos() * (v_s * v_s + v_l * v_l / (4.0 * nf * nf))
}

/// The same energy written with `τ = sin s`:
/// `(1-τ²)^{3/2} v_τ² + (1-τ²)^{1/2} v_l² / (4n²)`.
pub fn horizontal_energy_tau(v_tau: f64, v_l: f64, tau: f64, n: usize) -> f64 {
    let nf = n as f64;
    let w = (1.0 - tau * tau).sqrt();
    w * w * w * v_tau * v_tau + w * v_l * v_l / (4.0 * nf * nf)
}

/// Density `2^n n! (cos s)^{n-1}` of `θ̃ ∧ (dθ̃)^n` against `dl dγ ds`.
pub fn volume_density(s: f64, n: usize) -> f64 {
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    2f64.powi(n as i32) * factorial * s.cos().powi(n as i32 - 1)
}

/// Density of Lebesgue (Haar) measure `dx dy dt` against `dl ds dσ(γ)`,
/// `n ρ^Q (cos s)^{n-1}` with `ρ = e^{nl}` and `dσ` the surface measure of
/// `S^{2n-1}`.
pub fn haar_density(l: f64, s: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf * l * (2.0 * nf + 2.0)).exp() * s.cos().powi(n as i32 - 1)
}

/// Surface area of the unit sphere `S^{2n-1} ⊂ R^{2n}`, `2π^n/(n-1)!`.
pub fn sphere_area(n: usize) -> f64 {
    let factorial: f64 = (1..n).map(|k| k as f64).product();
    2.0 * std::f64::consts::PI.powi(n as i32) / factorial
}

/// Uniform random direction on `S^{2n-1}`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Random point with `ρ ∈ [rho_min, rho_max]` (log-uniform), `|s| ≤ s_max`
/// (uniform) and uniform direction.
pub fn sample_annulus<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    rho_min: f64,
    rho_max: f64,
    s_max: f64,
) -> HeisenbergPoint {
    let log_rho = rng.random_range(rho_min.ln()..=rho_max.ln());
    let s = rng.random_range(-s_max..=s_max);
    let gamma = random_direction(rng, n);
    from_cylinder(&CylinderPoint {
        l: log_rho / n as f64,
        s,
        gamma,
    })
}
