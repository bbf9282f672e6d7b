//! Homogeneous singular solution of the critical CR Yamabe equation
//! `-Δu = u^{(Q+2)/(Q-2)}` on the Heisenberg group `H^n`, and detection of
//! the periods `T` at which the second variation of the periodic functional
//! at that solution becomes singular.
//!
//! The pipeline is:
//!
//! 1. [`heisenberg`]: group law, dilations, Koranyi norm, Kelvin inversion and
//!    a finite-difference sublaplacian `Σ_α (X_α² + Y_α²)`.
//! 2. [`cylinder`]: the `(l, s, γ)` chart in which dilations are translations.
//! 3. [`ode`]: the reduced degenerate ODE on `(-π/2, π/2)`, discretised by
//!    spectral collocation on Gauss–Jacobi nodes and solved by quotient
//!    minimisation followed by Newton refinement.
//! 4. [`singular`]: the extension `Ψ = κ ρ^{-n} v̄(s)` with κ calibrated
//!    against the finite-difference sublaplacian.
//! 5. [`spectrum`]: second variation at `Ψ`, axial Fourier reduction,
//!    Morse indices and verified crossing periods `T*`.

pub mod cylinder;
pub mod error;
pub mod exec;
pub mod heisenberg;
pub mod ode;
pub mod quadrature;
pub mod rng;
pub mod singular;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::Execution;
