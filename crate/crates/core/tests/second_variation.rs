mod common;

use common::{profile, rel, solution};
use cryamabe_core::rng::SeedStream;
use cryamabe_core::spectrum::{
    assemble_second_variation, bifurcation_values, log_crossing, mode_eigenvalues, monte_carlo_diagonal,
    morse_curve, morse_index, morse_threshold, test_function_matrix, test_function_threshold, zero_mode_energy,
    ScanOptions,
};
use cryamabe_core::Execution;

// Lowest mode eigenvalue β₀ per n, N = 200.
const BETA0: [f64; 3] = [-2.175548440339, -17.29986232115, -57.85557221341];
const LOG_T_STAR: [f64; 3] = [4.259862, 3.021263, 2.478155];

fn spectrum(n: usize, size: usize) -> cryamabe_core::spectrum::ModeSpectrum {
    let form = assemble_second_variation(&profile(n, size), &SeedStream::new(0)).unwrap();
    mode_eigenvalues(&form).unwrap()
}

#[test]
fn assembly_matches_finite_differences() {
    for n in 1..=3 {
        let form = assemble_second_variation(&profile(n, 200), &SeedStream::new(0)).unwrap();
        assert!(form.fd_mismatch() < 1e-6, "n={n}: {:e}", form.fd_mismatch());
    }
}

#[test]
fn frozen_spectrum() {
    for n in 1..=3 {
        let spec = spectrum(n, 200);
        assert_eq!(spec.negative_count(), 1, "n={n}");
        assert!(rel(spec.betas[0], BETA0[n - 1]) < 1e-10, "n={n}: {}", spec.betas[0]);
        // the dilation mode: β₁ = 4n² exactly
        let nf = n as f64;
        assert!(rel(spec.betas[1], 4.0 * nf * nf) < 1e-8, "n={n}: {}", spec.betas[1]);
        let log_t = log_crossing(n, 1, spec.betas[0]);
        assert!((log_t - LOG_T_STAR[n - 1]).abs() < 1e-6, "n={n}: {log_t}");
    }
}

#[test]
fn lowest_eigenvalues_are_grid_converged() {
    let (a, b) = (spectrum(1, 200), spectrum(1, 400));
    for j in 0..10 {
        assert!(rel(a.betas[j], b.betas[j]) < 1e-8, "j={j}: {} vs {}", a.betas[j], b.betas[j]);
    }
}

#[test]
fn crossings_are_confirmed() {
    for n in 1..=2 {
        let form = assemble_second_variation(&profile(n, 200), &SeedStream::new(0)).unwrap();
        let spec = mode_eigenvalues(&form).unwrap();
        let report = bifurcation_values(&form, &spec, &ScanOptions::default(), Execution::Parallel).unwrap();
        assert_eq!(report.entries.len(), 5);
        for e in &report.entries {
            assert!(e.lambda_bisected.abs() < 1e-8);
            assert_eq!(e.inertia.1, e.inertia.0 + 1);
            assert!((e.log_t_bisected - e.log_t_star).abs() < 1e-3 * e.log_t_star);
        }
        // log T* is linear in m
        let first = report.entries[0].log_t_star;
        for (k, e) in report.entries.iter().enumerate() {
            assert_eq!(e.m, k + 1);
            assert!(rel(e.log_t_star, (k + 1) as f64 * first) < 1e-12);
        }
    }
}

#[test]
fn morse_index_jumps_by_two_at_a_crossing() {
    let spec = spectrum(1, 200);
    let log_t = log_crossing(1, 1, spec.betas[0]);
    assert_eq!(morse_index(&spec, (log_t - 1e-6).exp()), 1);
    assert_eq!(morse_index(&spec, (log_t + 1e-6).exp()), 3);
}

#[test]
fn morse_index_grows_without_bound() {
    let spec = spectrum(2, 200);
    let curve = morse_curve(&spec, 2.0, 1e30, 400);
    assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
    for k in 1..=10 {
        let t = morse_threshold(&spec, k).unwrap();
        assert!(morse_index(&spec, t * 1.0001) >= k);
    }
    let at: Vec<usize> = [10.0, 1e2, 1e3, 1e4].iter().map(|t| morse_index(&spec, *t)).collect();
    assert!(at.windows(2).all(|w| w[0] <= w[1]) && at[3] > at[0], "{at:?}");
}

#[test]
fn test_functions_are_orthogonal() {
    for n in 1..=2 {
        let sol = solution(n, 200);
        let m = test_function_matrix(&sol, 1e4, &[1, 2, 3, 4]).unwrap();
        assert!(m.off_diagonal_ratio() < 1e-10, "n={n}: {:e}", m.off_diagonal_ratio());
    }
}

#[test]
fn low_frequency_test_functions_have_negative_energy() {
    let sol = solution(1, 200);
    let form = assemble_second_variation(sol.profile(), &SeedStream::new(0)).unwrap();
    let bound = test_function_threshold(&form);
    assert!(bound > 0.0);
    // ω = 2πm/log T just below and above the bound
    let m = 1;
    let below = (2.0 * std::f64::consts::PI * m as f64 / (0.9 * bound)).exp();
    let above = (2.0 * std::f64::consts::PI * m as f64 / (1.1 * bound)).exp();
    assert!(test_function_matrix(&sol, below, &[m]).unwrap().diagonal()[0] < 0.0);
    assert!(test_function_matrix(&sol, above, &[m]).unwrap().diagonal()[0] > 0.0);
}

#[test]
fn energy_is_proportional_to_log_period() {
    let sol = solution(2, 200);
    let (t1, t2): (f64, f64) = (50.0, 2500.0);
    let a = test_function_matrix(&sol, t1, &[1]).unwrap().diagonal()[0];
    let b = test_function_matrix(&sol, t2, &[2]).unwrap().diagonal()[0];
    assert!(rel(b / a, t2.ln() / t1.ln()) < 1e-3);
    let z1 = zero_mode_energy(&sol, t1);
    let z2 = zero_mode_energy(&sol, t2);
    assert!(z1 < 0.0 && rel(z2 / z1, 2.0) < 1e-12);
}

#[test]
fn monte_carlo_confirms_diagonal() {
    let sol = solution(1, 200);
    let t = 4.0;
    let exact = test_function_matrix(&sol, t, &[1]).unwrap().diagonal()[0];
    let est = monte_carlo_diagonal(&sol, t, 1, 200_000, &SeedStream::new(1), Execution::Parallel);
    assert!((est.mean - exact).abs() < 5.0 * est.std_error, "{} ± {} vs {exact}", est.mean, est.std_error);
}
