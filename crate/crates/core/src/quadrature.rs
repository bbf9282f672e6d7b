//! Gauss–Jacobi rules and barycentric interpolation.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights of the `size`-point Gauss–Jacobi rule for the symmetric
/// weight `(1 - x²)^alpha` on `(-1, 1)`, nodes ascending.
///
/// Nodes start from the Golub–Welsch eigenvalues and are polished by Newton
/// on `P_N^{(α,α)}`; weights come from `1/((1-x²) P_N'(x)²)` normalised to the
/// exact moment, which keeps the tiny endpoint weights relatively accurate.
pub fn gauss_jacobi(size: usize, alpha: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if size < 2 {
        return Err(Error::InvalidParameter("quadrature needs at least 2 nodes".into()));
    }
    let a = alpha as f64;
    let mut jacobi = DMatrix::<f64>::zeros(size, size);
    for k in 1..size {
        let kf = k as f64;
        let s = 2.0 * kf + 2.0 * a;
        let b = 4.0 * kf * (kf + a) * (kf + a) * (kf + 2.0 * a) / (s * s * (s + 1.0) * (s - 1.0));
        jacobi[(k, k - 1)] = b.sqrt();
        jacobi[(k - 1, k)] = b.sqrt();
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.total_cmp(y));

    let mut derivs = vec![0.0; size];
    for (x, d) in nodes.iter_mut().zip(derivs.iter_mut()) {
        for _ in 0..3 {
            let (p, dp) = jacobi_with_derivative(size, a, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        *d = jacobi_with_derivative(size, a, *x).1;
    }
    // enforce exact symmetry
    for i in 0..size / 2 {
        let j = size - 1 - i;
        let m = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -m;
        nodes[j] = m;
        let d = 0.5 * (derivs[i].abs() + derivs[j].abs());
        derivs[i] = d;
        derivs[j] = d;
    }
    if size % 2 == 1 {
        nodes[size / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .zip(&derivs)
        .map(|(x, d)| 1.0 / ((1.0 - x) * (1.0 + x) * d * d))
        .collect();
    let total: f64 = weights.iter().sum();
    let moment = jacobi_moment(alpha);
    for w in &mut weights {
        *w *= moment / total;
    }
    Ok((nodes, weights))
}

/// `∫_{-1}^{1} (1-x²)^α dx = 2^{2α+1} (α!)² / (2α+1)!`.
pub fn jacobi_moment(alpha: u32) -> f64 {
    let mut m = 2.0;
    for k in 1..=alpha {
        let kf = k as f64;
        // ratio of consecutive moments: 2k / (2k+1)
        m *= 2.0 * kf / (2.0 * kf + 1.0);
    }
    m
}

/// `P_N^{(α,α)}(x)` and its derivative via the three-term recurrence.
fn jacobi_with_derivative(size: usize, a: f64, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = (a + 1.0) * x;
    for k in 2..=size {
        let kf = k as f64;
        let c = 2.0 * kf + 2.0 * a;
        let a1 = 2.0 * kf * (kf + 2.0 * a) * (c - 2.0);
        let a2 = (c - 1.0) * c * (c - 2.0);
        let a3 = 2.0 * (kf + a - 1.0) * (kf + a - 1.0) * c;
        let next = (a2 * x * p - a3 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    let nf = size as f64;
    let c = 2.0 * nf + 2.0 * a;
    // (2N+2α)(1-x²) P_N' = -N(2N+2α) x P_N + 2(N+α)² P_{N-1}
    let dp = (-nf * c * x * p + 2.0 * (nf + a) * (nf + a) * p_prev) / (c * (1.0 - x) * (1.0 + x));
    (p, dp)
}

/// Barycentric Lagrange interpolation on a fixed node set.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    /// Weights `1/Π_{j≠i}(x_i - x_j)` accumulated in log form and rescaled.
    pub fn new(nodes: Vec<f64>) -> Self {
        let m = nodes.len();
        let mut logs = vec![0.0; m];
        let mut signs = vec![1.0; m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let d = nodes[i] - nodes[j];
                    logs[i] -= d.abs().ln();
                    if d < 0.0 {
                        signs[i] = -signs[i];
                    }
                }
            }
        }
        let top = logs.iter().cloned().fold(f64::MIN, f64::max);
        let weights = logs
            .iter()
            .zip(&signs)
            .map(|(l, s)| s * (l - top).exp())
            .collect();
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn evaluate(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((xi, wi), vi) in self.nodes.iter().zip(&self.weights).zip(values) {
            let d = x - xi;
            if d == 0.0 {
                return *vi;
            }
            let c = wi / d;
            num += c * vi;
            den += c;
        }
        num / den
    }

    /// First-derivative matrix `D` with `(D v)_i = p'(x_i)`.
    pub fn differentiation_matrix(&self) -> DMatrix<f64> {
        let m = self.nodes.len();
        let mut d = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = (self.weights[j] / self.weights[i]) / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_jacobi(10, 0).unwrap();
        for k in 0..20 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn jacobi_rule_is_exact_for_weighted_polynomials() {
        for alpha in 1..4u32 {
            let (x, w) = gauss_jacobi(12, alpha).unwrap();
            // ∫ (1-x²)^α x^{2k} dx = B(k+1/2, α+1) computed from the moment recursion
            for k in 0..12 {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k)).sum();
                // brute-force midpoint reference
                let m = 200_000;
                let h = 2.0 / m as f64;
                let want: f64 = (0..m)
                    .map(|i| {
                        let t = -1.0 + (i as f64 + 0.5) * h;
                        (1.0 - t * t).powi(alpha as i32) * t.powi(2 * k) * h
                    })
                    .sum();
                assert!((got - want).abs() < 1e-9, "α={alpha} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn large_rules_stay_accurate() {
        for alpha in 0..3u32 {
            let (x, w) = gauss_jacobi(400, alpha).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(w.iter().all(|w| *w > 0.0));
            assert!(x[0] > -1.0 && x[399] < 1.0);
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            let want = jacobi_moment(alpha) / (2.0 * alpha as f64 + 3.0);
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let (x, _) = gauss_jacobi(16, 1).unwrap();
        let b = Barycentric::new(x.clone());
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(7) + t.powi(15);
        let dp = |t: f64| -2.0 + 3.5 * t.powi(6) + 15.0 * t.powi(14);
        let v: Vec<f64> = x.iter().map(|t| p(*t)).collect();
        for t in [-0.99, -0.3, 0.0, 0.41, 0.77] {
            assert!((b.evaluate(&v, t) - p(t)).abs() < 1e-13);
        }
        assert_eq!(b.evaluate(&v, x[3]), v[3]);
        let d = b.differentiation_matrix();
        let dv = &d * nalgebra::DVector::from_vec(v);
        for (i, t) in x.iter().enumerate() {
            assert!((dv[i] - dp(*t)).abs() < 1e-11, "{} vs {}", dv[i], dp(*t));
        }
    }
}
