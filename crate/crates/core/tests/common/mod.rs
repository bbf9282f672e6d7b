#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use cryamabe_core::ode::{MassTerm, ReducedOde, SolutionProfile, SolveOptions};
use cryamabe_core::rng::SeedStream;
use cryamabe_core::singular::{calibrate_kappa, SampleOptions, SingularSolution};
use cryamabe_core::Execution;

/// Solved profiles keyed by `(n, N)`, shared by the tests of one binary.
pub fn profile(n: usize, size: usize) -> SolutionProfile {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), SolutionProfile>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&(n, size)) {
        return p.clone();
    }
    let ode = ReducedOde::build(n, size, MassTerm::QuarterNSquared).unwrap();
    let p = ode.solve(&SolveOptions::default()).unwrap();
    cache.lock().unwrap().insert((n, size), p.clone());
    p
}

pub fn solution(n: usize, size: usize) -> SingularSolution {
    let p = profile(n, size);
    let cal = calibrate_kappa(&p, &SampleOptions::default(), &SeedStream::new(0), Execution::Parallel).unwrap();
    SingularSolution::new(p, cal.kappa).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
