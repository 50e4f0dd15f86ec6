#![allow(dead_code)]

use globcert::linalg::{self, C64, ComplexMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, complex: bool) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
        C64::new(re, im)
    })
}

/// Random nonnormal matrix shifted so its spectral abscissa is `alpha`.
pub fn with_abscissa(rng: &mut ChaCha8Rng, n: usize, complex: bool, alpha: f64) -> ComplexMatrix {
    let m = gaussian(rng, n, n, complex);
    let a0 = linalg::eigenvalues(&m).unwrap().abscissa();
    m.shift(C64::new(alpha - a0, 0.0))
}

/// Random nonnormal matrix scaled so its spectral radius is `rho`.
pub fn with_radius(rng: &mut ChaCha8Rng, n: usize, complex: bool, rho: f64) -> ComplexMatrix {
    let m = gaussian(rng, n, n, complex);
    let r0 = linalg::eigenvalues(&m).unwrap().radius();
    m.scale(C64::new(rho / r0, 0.0))
}

/// Random unitary matrix via the Cayley transform of a skew-Hermitian one.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let g = gaussian(rng, n, n, true);
    let s = (&g - &g.adjoint()).scale(C64::new(0.5, 0.0));
    let id = ComplexMatrix::identity(n);
    // (I + S)⁻¹ (I − S); both factors commute.
    linalg::solve(&(&id + &s), &(&id - &s)).unwrap()
}

/// `Q diag(d) Q*` with a random unitary `Q`.
pub fn normal_with(rng: &mut ChaCha8Rng, d: &[C64]) -> ComplexMatrix {
    let q = unitary(rng, d.len());
    &(&q * &ComplexMatrix::from_diag(d)) * &q.adjoint()
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Random objectives in the ranges the solver is validated on.
///
/// * continuous: spectral abscissa in [−0.5, −0.01]
/// * discrete: spectral radius in [0.8, 0.999]
/// * distance: Gaussian `A` (n×n) and `B` (n×m), `m` in 1..=3
pub fn validation_objective(seed: u64, kind: usize) -> globcert::objective::Objective {
    use globcert::objective::Objective;
    let mut r = rng(seed);
    let n = r.random_range(3..=6);
    let complex = r.random_bool(0.5);
    match kind {
        0 => {
            let alpha = uniform(&mut r, -0.5, -0.01);
            Objective::kreiss_continuous(with_abscissa(&mut r, n, complex, alpha)).unwrap()
        }
        1 => {
            let rho = uniform(&mut r, 0.8, 0.999);
            Objective::kreiss_discrete(with_radius(&mut r, n, complex, rho)).unwrap()
        }
        _ => {
            let m = r.random_range(1..=3);
            let a = gaussian(&mut r, n, n, complex);
            let b = gaussian(&mut r, n, m, complex);
            Objective::dist_uncontrollability(a, b).unwrap()
        }
    }
}
