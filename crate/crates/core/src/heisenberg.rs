//! The Heisenberg group `H^n = C^n × R` with product
//! `(z₁,t₁)·(z₂,t₂) = (z₁+z₂, t₁+t₂+2 Im(z₁·z̄₂))`, its dilations, the Koranyi
//! norm, the Kelvin inversion and finite-difference left-invariant calculus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational number with positive denominator, in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn sub_int(self, k: i64) -> Self {
        Self::new(self.num - k * self.den, self.den)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Dimension data of `H^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("complex dimension n must be ≥ 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn homogeneous_dimension(&self) -> usize {
        2 * self.n + 2
    }

    /// `2* = 2Q/(Q-2)`.
    pub fn critical_exponent(&self) -> Ratio {
        let q = self.homogeneous_dimension() as i64;
        Ratio::new(2 * q, q - 2)
    }

    /// Exponent of the nonlinearity, `2* - 1 = (Q+2)/(Q-2) = 1 + 2/n`.
    pub fn nonlinearity_exponent(&self) -> Ratio {
        self.critical_exponent().sub_int(1)
    }
}

/// A point `(z, t)` with `z = x + i y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter("empty point".into()));
        }
        if !(x.iter().chain(&y).all(|c| c.is_finite()) && t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Self { x, y, t })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `|z|²`.
    pub fn z_norm_sq(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|c| c * c).sum()
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.iter().map(|c| -c).collect(),
            y: self.y.iter().map(|c| -c).collect(),
            t: -self.t,
        }
    }

    /// Coordinates as `(x₁…xₙ, y₁…yₙ, t)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 * self.dim() + 1);
        c.extend_from_slice(&self.x);
        c.extend_from_slice(&self.y);
        c.push(self.t);
        c
    }

    pub fn from_coords(c: &[f64]) -> Self {
        let n = (c.len() - 1) / 2;
        Self {
            x: c[..n].to_vec(),
            y: c[n..2 * n].to_vec(),
            t: c[2 * n],
        }
    }
}

pub fn group_product(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    // Im(z_p · conj(z_q)) = Σ (y_p x_q - x_p y_q)
    let im: f64 = (0..p.dim())
        .map(|a| p.y[a] * q.x[a] - p.x[a] * q.y[a])
        .sum();
    Ok(HeisenbergPoint {
        x: p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(),
        y: p.y.iter().zip(&q.y).map(|(a, b)| a + b).collect(),
        t: p.t + q.t + 2.0 * im,
    })
}

/// `δ_λ(z, t) = (λz, λ²t)`.
pub fn dilate(lambda: f64, p: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dilation factor must be positive, got {lambda}"
        )));
    }
    Ok(HeisenbergPoint {
        x: p.x.iter().map(|c| lambda * c).collect(),
        y: p.y.iter().map(|c| lambda * c).collect(),
        t: lambda * lambda * p.t,
    })
}

/// `(|z|⁴ + t²)^{1/4}`.
pub fn koranyi_norm(p: &HeisenbergPoint) -> f64 {
    let r2 = p.z_norm_sq();
    // hypot avoids overflow of |z|⁴ for large points
    r2.hypot(p.t).sqrt()
}

/// `K(z, t) = (-iz / (t + i|z|²), -t/ρ⁴)`.
pub fn kelvin(p: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    let r2 = p.z_norm_sq();
    let rho4 = r2 * r2 + p.t * p.t;
    if rho4 == 0.0 {
        return Err(Error::Domain("Kelvin inversion is undefined at the origin"));
    }
    // -i z / (t + i r²) = -i z (t - i r²) / ρ⁴ = z (-r² - i t) / ρ⁴
    let (a, b) = (-r2 / rho4, -p.t / rho4);
    let x = p.x.iter().zip(&p.y).map(|(x, y)| a * x - b * y).collect();
    let y = p.x.iter().zip(&p.y).map(|(x, y)| a * y + b * x).collect();
    Ok(HeisenbergPoint {
        x,
        y,
        t: -p.t / rho4,
    })
}

/// Step control for the finite-difference operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub step: f64,
    /// One level of Richardson extrapolation (`h` and `h/2`).
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson: false,
        }
    }
}

impl FdOptions {
    pub fn new(step: f64, richardson: bool) -> Self {
        Self { step, richardson }
    }

    fn extrapolate(&self, rule: impl Fn(f64) -> f64) -> f64 {
        let coarse = rule(self.step);
        if self.richardson {
            let fine = rule(0.5 * self.step);
            (4.0 * fine - coarse) / 3.0
        } else {
            coarse
        }
    }
}

/// Evaluates a scalar field after shifting coordinate indices by the given
/// offsets (coordinates ordered as in [`HeisenbergPoint::coords`]).
struct Stencil<'a, F> {
    f: &'a F,
    base: Vec<f64>,
}

impl<F: Fn(&HeisenbergPoint) -> f64> Stencil<'_, F> {
    fn at(&self, shifts: &[(usize, f64)]) -> f64 {
        let mut c = self.base.clone();
        for &(k, d) in shifts {
            c[k] += d;
        }
        (self.f)(&HeisenbergPoint::from_coords(&c))
    }

    fn d1(&self, k: usize, h: f64) -> f64 {
        (self.at(&[(k, h)]) - self.at(&[(k, -h)])) / (2.0 * h)
    }

    #[cfg(test)]
    fn d2(&self, k: usize, h: f64, center: f64) -> f64 {
        (self.at(&[(k, h)]) - 2.0 * center + self.at(&[(k, -h)])) / (h * h)
    }

    /// Second difference along the direction `Σ c_k e_k`.
    fn line2(&self, dir: &[(usize, f64)], h: f64, center: f64) -> f64 {
        let fwd: Vec<(usize, f64)> = dir.iter().map(|&(k, c)| (k, c * h)).collect();
        let bwd: Vec<(usize, f64)> = dir.iter().map(|&(k, c)| (k, -c * h)).collect();
        (self.at(&fwd) - 2.0 * center + self.at(&bwd)) / (h * h)
    }

    #[cfg(test)]
    fn d11(&self, j: usize, k: usize, h: f64) -> f64 {
        (self.at(&[(j, h), (k, h)]) - self.at(&[(j, h), (k, -h)]) - self.at(&[(j, -h), (k, h)])
            + self.at(&[(j, -h), (k, -h)]))
            / (4.0 * h * h)
    }
}

fn check_index(alpha: usize, p: &HeisenbergPoint) -> Result<()> {
    if alpha >= p.dim() {
        return Err(Error::InvalidParameter(format!(
            "vector field index {alpha} out of range for n = {}",
            p.dim()
        )));
    }
    Ok(())
}

/// `X_α f(p) = ∂_{x_α} f + 2 y_α ∂_t f`.
pub fn apply_x<F>(alpha: usize, f: &F, p: &HeisenbergPoint, fd: FdOptions) -> Result<f64>
where
    F: Fn(&HeisenbergPoint) -> f64,
{
    check_index(alpha, p)?;
    let n = p.dim();
    let st = Stencil { f, base: p.coords() };
    Ok(fd.extrapolate(|h| st.d1(alpha, h) + 2.0 * p.y[alpha] * st.d1(2 * n, h)))
}

/// `Y_α f(p) = ∂_{y_α} f - 2 x_α ∂_t f`.
pub fn apply_y<F>(alpha: usize, f: &F, p: &HeisenbergPoint, fd: FdOptions) -> Result<f64>
where
    F: Fn(&HeisenbergPoint) -> f64,
{
    check_index(alpha, p)?;
    let n = p.dim();
    let st = Stencil { f, base: p.coords() };
    Ok(fd.extrapolate(|h| st.d1(n + alpha, h) - 2.0 * p.x[alpha] * st.d1(2 * n, h)))
}

/// `Σ_α [(X_α f)² + (Y_α f)²]`.
pub fn horizontal_gradient_sq<F>(f: &F, p: &HeisenbergPoint, fd: FdOptions) -> f64
where
    F: Fn(&HeisenbergPoint) -> f64,
{
    (0..p.dim())
        .map(|a| {
            let xa = apply_x(a, f, p, fd).expect("index in range");
            let ya = apply_y(a, f, p, fd).expect("index in range");
            xa * xa + ya * ya
        })
        .sum()
}

/// Sublaplacian `Σ_α (X_α² + Y_α²) f(p)`.
///
/// The integral curves of `X_α` and `Y_α` are straight lines,
/// `ε ↦ p + ε (e_{x_α} + 2y_α e_t)` and `ε ↦ p + ε (e_{y_α} - 2x_α e_t)`
/// (right translation by `exp(εX_α)`), so each square is a single central
/// second difference along its line. This avoids the mixed partials of the
/// expanded form `∂²_x + 4y ∂_x∂_t + 4y² ∂²_t`, whose rounding error grows
/// with `|z|²`.
pub fn sublaplacian_fd<F>(f: &F, p: &HeisenbergPoint, fd: FdOptions) -> f64
where
    F: Fn(&HeisenbergPoint) -> f64,
{
    let n = p.dim();
    let st = Stencil { f, base: p.coords() };
    let center = f(p);
    fd.extrapolate(|h| {
        let mut acc = 0.0;
        for a in 0..n {
            acc += st.line2(&[(a, 1.0), (2 * n, 2.0 * p.y[a])], h, center);
            acc += st.line2(&[(n + a, 1.0), (2 * n, -2.0 * p.x[a])], h, center);
        }
        acc
    })
}
