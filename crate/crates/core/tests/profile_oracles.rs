mod common;

use common::{profile, rel};
use cryamabe_core::ode::{sup_norm, MassTerm, ReducedOde, SolveOptions, INTERIOR_S_MAX};
use cryamabe_core::rng::{Purpose, SeedStream};
use rand::Rng;

// Normalised quotients N/D^{2/p} of the minimiser, N = 200.
const QUOTIENT: [f64; 3] = [0.276385693134328, 0.966937555200850, 2.092570185025511];

#[test]
fn frozen_quotients() {
    for n in 1..=3 {
        let p = profile(n, 200);
        assert!(rel(p.quotient, QUOTIENT[n - 1]) < 1e-12, "n={n}: {}", p.quotient);
    }
}

#[test]
fn frozen_profile_centre() {
    let p = profile(1, 200);
    assert!((p.grid.evaluate(&p.values, 0.0) - 0.751646147452).abs() < 1e-11);
}

#[test]
fn quotient_is_grid_converged() {
    for n in 1..=3 {
        let (a, b) = (profile(n, 200), profile(n, 400));
        assert!((a.quotient - b.quotient).abs() < 1e-8, "n={n}");
    }
}

#[test]
fn quotient_plateaus_under_refinement() {
    let qs: Vec<f64> = [50, 100, 200, 400].iter().map(|&m| profile(2, m).quotient).collect();
    let diffs: Vec<f64> = qs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs.iter().all(|d| *d < 1e-9), "{qs:?}");
}

#[test]
fn euler_lagrange_residual() {
    for n in 1..=3 {
        let p = profile(n, 200);
        let ode = ReducedOde::for_profile(&p);
        let interior = ode.interior_el_residual(&p.values, INTERIOR_S_MAX);
        assert!(interior < 1e-8, "n={n}: {interior:e}");
        assert!(sup_norm(&ode.divergence_residual(&p.values)) < 1e-9);
    }
    let p = profile(1, 200);
    assert!(p.el_residual < 1e-8);
}

#[test]
fn residual_forms_agree_at_solution() {
    for n in 1..=2 {
        let p = profile(n, 200);
        let ode = ReducedOde::for_profile(&p);
        let a = ode.divergence_residual(&p.values);
        let b = ode.expanded_residual(&p.values);
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-9, "n={n}: {gap:e}");
    }
}

#[test]
fn restarts_agree() {
    for n in 1..=2 {
        let ode = ReducedOde::build(n, 100, MassTerm::QuarterNSquared).unwrap();
        let quotients: Vec<f64> = (0..4)
            .map(|seed| {
                ode.solve(&SolveOptions {
                    seed,
                    restarts: 3,
                    ..SolveOptions::default()
                })
                .unwrap()
                .quotient
            })
            .collect();
        let spread = quotients.iter().fold(0.0f64, |m, q| m.max((q - quotients[0]).abs()));
        assert!(spread < 1e-10, "n={n}: {quotients:?}");
    }
}

#[test]
fn minimiser_is_positive_and_even() {
    for n in 1..=3 {
        let p = profile(n, 200);
        assert!(p.values.iter().all(|v| *v > 0.0));
        assert!(p.symmetry_defect < 1e-9 * sup_norm(&p.values), "n={n}: {}", p.symmetry_defect);
    }
}

#[test]
fn history_is_nonincreasing() {
    let p = profile(2, 200);
    assert!(p.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
}

#[test]
fn newton_leaves_a_solution_fixed() {
    let p = profile(2, 200);
    let ode = ReducedOde::for_profile(&p);
    let again = ode.newton_refine(&p, 1e-12, 50).unwrap();
    let shift = p.values.iter().zip(&again.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(shift < 1e-12 * sup_norm(&p.values));
}

#[test]
fn rescaling_is_idempotent() {
    let p = profile(1, 200);
    let ode = ReducedOde::for_profile(&p);
    let again = ode.rescale_to_el(&p).unwrap();
    let ratio = again.values[0] / p.values[0];
    assert!((ratio - 1.0).abs() < 1e-12);
}

#[test]
fn rescaling_undoes_any_scale() {
    let p = profile(2, 200);
    let ode = ReducedOde::for_profile(&p);
    for factor in [0.1, 3.0, 40.0] {
        let mut scaled = p.clone();
        scaled.values.iter_mut().for_each(|v| *v *= factor);
        let back = ode.rescale_to_el(&scaled).unwrap();
        assert!(rel(back.values[7], p.values[7]) < 1e-11, "factor {factor}");
    }
}

#[test]
fn quotient_is_stationary() {
    for n in 1..=3 {
        let p = profile(n, 200);
        let ode = ReducedOde::for_profile(&p);
        let seeds = SeedStream::new(11);
        let vmax = sup_norm(&p.values);
        for k in 0..20 {
            let mut rng = seeds.rng(Purpose::Stationarity, k);
            let coeffs: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = p
                .grid
                .nodes()
                .iter()
                .map(|s| vmax * coeffs.iter().enumerate().map(|(j, c)| c * (s / 1.6).powi(j as i32)).sum::<f64>())
                .collect();
            let d = ode.quotient_directional_derivative(&p.values, &w, 1e-5).unwrap();
            assert!(d.abs() < 1e-6, "n={n} direction {k}: {d:e}");
        }
    }
}
